//! Holds the workspace acceptance suite in `tests/acceptance.rs`. It runs
//! after the per-crate tests so their results are reported first.
