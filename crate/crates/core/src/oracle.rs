//! Stateless, path-keyed source of uniforms and Gaussians.
//!
//! Every draw is a pure function of `(seed, kind, theta, lane)`: SHA-256 of
//! the seed, kind tag and length-prefixed path yields a 128-bit key, and each
//! lane is a SplitMix64-style finalization of the key and the lane counter.
//! Gaussians use the Box–Muller transform on consecutive lane pairs.

use std::fmt;

use sha2::{Digest, Sha256};

/// Index `θ ∈ ⋃ ℤⁿ` of an independent random source.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ThetaPath(Vec<i64>);

impl ThetaPath {
    /// The distinguished root path `(0)`.
    pub fn root() -> Self {
        ThetaPath(vec![0])
    }

    pub fn new(entries: Vec<i64>) -> Self {
        ThetaPath(entries)
    }

    pub fn entries(&self) -> &[i64] {
        &self.0
    }

    /// `(θ, a, b)`.
    pub fn child(&self, a: i64, b: i64) -> Self {
        let mut v = Vec::with_capacity(self.0.len() + 2);
        v.extend_from_slice(&self.0);
        v.push(a);
        v.push(b);
        ThetaPath(v)
    }

    /// Length prefix followed by little-endian two's-complement entries.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 * (self.0.len() + 1));
        out.extend_from_slice(&(self.0.len() as u64).to_le_bytes());
        for e in &self.0 {
            out.extend_from_slice(&e.to_le_bytes());
        }
        out
    }
}

impl fmt::Display for ThetaPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(i64::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Separates the independent streams attached to one path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum SampleKind {
    Time = 1,
    Brownian = 2,
    BoxPoint = 3,
    Probe = 4,
}

const DOMAIN: &[u8] = b"picardnets/oracle/v1";
const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Keyed counter stream for one `(seed, kind, theta)`.
#[derive(Debug, Clone, Copy)]
pub struct Stream {
    k0: u64,
    k1: u64,
}

impl Stream {
    #[inline]
    pub fn bits(&self, lane: u64) -> u64 {
        mix64(mix64(self.k0.wrapping_add(lane.wrapping_mul(GOLDEN))) ^ self.k1)
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&self, lane: u64) -> f64 {
        (self.bits(lane) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// `d` standard normals via Box–Muller on lanes `(2j, 2j+1)`.
    pub fn normals(&self, d: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(d + 1);
        for j in 0..d.div_ceil(2) as u64 {
            let u1 = 1.0 - self.uniform(2 * j);
            let u2 = self.uniform(2 * j + 1);
            let r = (-2.0 * u1.ln()).sqrt();
            let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
            out.push(r * c);
            out.push(r * s);
        }
        out.truncate(d);
        out
    }
}

/// Seeded oracle shared by the estimator, the compiler and the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomOracle {
    seed: u64,
}

impl RandomOracle {
    pub fn new(seed: u64) -> Self {
        RandomOracle { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, kind: SampleKind, theta: &ThetaPath) -> Stream {
        let mut h = Sha256::new();
        h.update(DOMAIN);
        h.update(self.seed.to_le_bytes());
        h.update([kind as u8]);
        h.update(theta.encode());
        let digest = h.finalize();
        let k0 = u64::from_le_bytes(digest[0..8].try_into().expect("8 bytes"));
        let k1 = u64::from_le_bytes(digest[8..16].try_into().expect("8 bytes"));
        Stream { k0, k1 }
    }

    pub fn uniform(&self, kind: SampleKind, theta: &ThetaPath, lane: u64) -> f64 {
        self.stream(kind, theta).uniform(lane)
    }

    pub fn normals(&self, kind: SampleKind, theta: &ThetaPath, d: usize) -> Vec<f64> {
        self.stream(kind, theta).normals(d)
    }

    /// A point uniform on `[a, b]^d`, indexed by `i`.
    pub fn box_point(&self, i: u64, a: f64, b: f64, d: usize) -> Vec<f64> {
        let s = self.stream(SampleKind::BoxPoint, &ThetaPath::new(vec![i as i64]));
        (0..d as u64).map(|j| a + (b - a) * s.uniform(j)).collect()
    }
}

/// The two primitive draws of the Picard recursion.
pub trait Sampler: Sync {
    /// `𝔲^θ`, uniform on `[0, 1)`.
    fn time_uniform(&self, theta: &ThetaPath) -> f64;
    /// `Z(θ)`, standard normal in `R^d`.
    fn gaussian(&self, theta: &ThetaPath, d: usize) -> Vec<f64>;
}

impl Sampler for RandomOracle {
    fn time_uniform(&self, theta: &ThetaPath) -> f64 {
        self.uniform(SampleKind::Time, theta, 0)
    }

    fn gaussian(&self, theta: &ThetaPath, d: usize) -> Vec<f64> {
        self.normals(SampleKind::Brownian, theta, d)
    }
}

/// `𝒰_t^θ = t + (T - t) 𝔲^θ`.
pub fn uniform_time<S: Sampler + ?Sized>(sampler: &S, theta: &ThetaPath, t: f64, horizon: f64) -> f64 {
    t + (horizon - t) * sampler.time_uniform(theta)
}

/// `W^θ_s = √s Z(θ)`.
pub fn brownian_increment<S: Sampler + ?Sized>(sampler: &S, theta: &ThetaPath, s: f64, d: usize) -> Vec<f64> {
    let scale = s.max(0.0).sqrt();
    sampler.gaussian(theta, d).into_iter().map(|z| scale * z).collect()
}
