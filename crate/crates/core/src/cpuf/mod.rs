//! Classical PUF emulators.
//!
//! Arbiter chains follow the additive delay model: the response is the sign
//! of `⟨w, Φ(c)⟩` with parity features `Φ`. Bit 1 means the delay
//! difference is negative. A k-XOR PUF XORs k independent chains. The ideal
//! biased PUF thresholds a keyed hash so each bit is 0 with probability `p`.
//!
//! A [`CpufModel`] with `out_bits` outputs is `out_bits` independent
//! single-bit instances with distinct sub-seeds.

mod format;

pub use format::{from_text, to_text, FORMAT_HEADER};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::{random_bits, SimRng};

/// Parity features of an arbiter chain: `Φ_i = Π_{j≥i} (1 − 2c_j)` for
/// `i < n` and a trailing constant 1.
pub fn feature_transform(challenge: &[u8]) -> Vec<f64> {
    let n = challenge.len();
    let mut phi = vec![1.0; n + 1];
    let mut acc = 1.0;
    for i in (0..n).rev() {
        if challenge[i] == 1 {
            acc = -acc;
        }
        phi[i] = acc;
    }
    phi
}

fn check_challenge(n: usize, challenge: &[u8]) -> Result<()> {
    if challenge.len() != n {
        return Err(Error::ChallengeLength {
            expected: n,
            got: challenge.len(),
        });
    }
    if challenge.iter().any(|&b| b > 1) {
        return Err(Error::NotABit);
    }
    Ok(())
}

/// Additive delay model with `n + 1` weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArbiterChain {
    weights: Vec<f64>,
}

impl ArbiterChain {
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        Self {
            weights: (0..=n).map(|_| rng.sample(StandardNormal)).collect(),
        }
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::OutOfRange("arbiter weights must be finite, len ≥ 2".into()));
        }
        Ok(Self { weights })
    }

    pub fn n(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Delay difference `⟨w, Φ⟩` for precomputed features.
    pub fn delay(&self, features: &[f64]) -> f64 {
        self.weights.iter().zip(features).map(|(w, f)| w * f).sum()
    }

    pub fn bit(&self, features: &[f64]) -> u8 {
        (self.delay(features) < 0.0) as u8
    }

    pub fn negated(&self) -> Self {
        Self {
            weights: self.weights.iter().map(|w| -w).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XorArbiterPuf {
    chains: Vec<ArbiterChain>,
}

impl XorArbiterPuf {
    pub fn new(chains: Vec<ArbiterChain>) -> Result<Self> {
        let Some(first) = chains.first() else {
            return Err(Error::OutOfRange("k must be at least 1".into()));
        };
        let n = first.n();
        if chains.iter().any(|c| c.n() != n) {
            return Err(Error::OutOfRange("all chains must share n".into()));
        }
        Ok(Self { chains })
    }

    pub fn random(n: usize, k: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::new((0..k).map(|_| ArbiterChain::random(n, &mut rng)).collect())
    }

    pub fn n(&self) -> usize {
        self.chains[0].n()
    }

    pub fn k(&self) -> usize {
        self.chains.len()
    }

    pub fn chains(&self) -> &[ArbiterChain] {
        &self.chains
    }

    pub fn bit(&self, features: &[f64]) -> u8 {
        self.chains.iter().fold(0, |acc, c| acc ^ c.bit(features))
    }

    /// Copy with chain `index` negated (a sign-symmetric twin).
    pub fn with_negated_chain(&self, index: usize) -> Self {
        let mut chains = self.chains.clone();
        chains[index] = chains[index].negated();
        Self { chains }
    }
}

/// Ideal random function whose bits are 0 with probability `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealBiasedPuf {
    n: usize,
    p: f64,
    seed: u64,
}

impl IdealBiasedPuf {
    pub fn new(n: usize, p: f64, seed: u64) -> Result<Self> {
        if !(0.5..=1.0).contains(&p) {
            return Err(Error::OutOfRange(format!("bias p = {p} not in [0.5, 1]")));
        }
        Ok(Self { n, p, seed })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn uniform(&self, challenge: &[u8]) -> f64 {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(challenge);
        let d = h.finalize();
        let mut word = [0u8; 8];
        word.copy_from_slice(&d[..8]);
        (u64::from_le_bytes(word) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bit(&self, challenge: &[u8]) -> u8 {
        (self.uniform(challenge) >= self.p) as u8
    }
}

/// Single-output PUF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BitPuf {
    Xor(XorArbiterPuf),
    Ideal(IdealBiasedPuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CpufKind {
    /// k-XOR arbiter PUF (`k = 1` is a plain arbiter chain).
    XorArbiter { k: usize },
    /// Ideal biased random function.
    Ideal { p: f64 },
}

/// `f: {0,1}ⁿ → {0,1}^out_bits`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpufModel {
    kind: CpufKind,
    n: usize,
    seed: u64,
    bits: Vec<BitPuf>,
    flip_noise: f64,
}

impl CpufModel {
    fn sub_seeds(seed: u64, count: usize) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| rng.random()).collect()
    }

    pub fn xor_arbiter(n: usize, k: usize, out_bits: usize, seed: u64) -> Result<Self> {
        if n == 0 || out_bits == 0 {
            return Err(Error::OutOfRange("n and out_bits must be positive".into()));
        }
        let bits = Self::sub_seeds(seed, out_bits)
            .into_iter()
            .map(|s| XorArbiterPuf::random(n, k, s).map(BitPuf::Xor))
            .collect::<Result<_>>()?;
        Ok(Self {
            kind: CpufKind::XorArbiter { k },
            n,
            seed,
            bits,
            flip_noise: 0.0,
        })
    }

    pub fn ideal(n: usize, out_bits: usize, p: f64, seed: u64) -> Result<Self> {
        if n == 0 || out_bits == 0 {
            return Err(Error::OutOfRange("n and out_bits must be positive".into()));
        }
        let bits = Self::sub_seeds(seed, out_bits)
            .into_iter()
            .map(|s| IdealBiasedPuf::new(n, p, s).map(BitPuf::Ideal))
            .collect::<Result<_>>()?;
        Ok(Self {
            kind: CpufKind::Ideal { p },
            n,
            seed,
            bits,
            flip_noise: 0.0,
        })
    }

    /// Assembles a model from explicit single-bit instances.
    pub fn from_parts(kind: CpufKind, n: usize, seed: u64, bits: Vec<BitPuf>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::OutOfRange("out_bits must be positive".into()));
        }
        for b in &bits {
            let (bn, ok) = match (b, kind) {
                (BitPuf::Xor(x), CpufKind::XorArbiter { k }) => (x.n(), x.k() == k),
                (BitPuf::Ideal(i), CpufKind::Ideal { p }) => (i.n(), i.p() == p),
                _ => (n, false),
            };
            if bn != n || !ok {
                return Err(Error::ModelFormat("bit instance does not match model header".into()));
            }
        }
        Ok(Self {
            kind,
            n,
            seed,
            bits,
            flip_noise: 0.0,
        })
    }

    /// Same construction, different manufacturing seed.
    pub fn reseeded(&self, seed: u64) -> Result<Self> {
        let m = match self.kind {
            CpufKind::XorArbiter { k } => Self::xor_arbiter(self.n, k, self.out_bits(), seed),
            CpufKind::Ideal { p } => Self::ideal(self.n, self.out_bits(), p, seed),
        }?;
        Ok(m.with_flip_noise(self.flip_noise))
    }

    /// Response-flip probability applied by [`CpufModel::eval_noisy`].
    pub fn with_flip_noise(mut self, rate: f64) -> Self {
        self.flip_noise = rate.clamp(0.0, 1.0);
        self
    }

    pub fn kind(&self) -> CpufKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        match self.kind {
            CpufKind::XorArbiter { k } => k,
            CpufKind::Ideal { .. } => 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn out_bits(&self) -> usize {
        self.bits.len()
    }

    pub fn flip_noise(&self) -> f64 {
        self.flip_noise
    }

    pub fn bit_pufs(&self) -> &[BitPuf] {
        &self.bits
    }

    /// Noiseless response.
    pub fn eval(&self, challenge: &[u8]) -> Result<Vec<u8>> {
        check_challenge(self.n, challenge)?;
        let features = match self.kind {
            CpufKind::XorArbiter { .. } => feature_transform(challenge),
            CpufKind::Ideal { .. } => Vec::new(),
        };
        Ok(self
            .bits
            .iter()
            .map(|b| match b {
                BitPuf::Xor(x) => x.bit(&features),
                BitPuf::Ideal(i) => i.bit(challenge),
            })
            .collect())
    }

    /// Single output bit from precomputed features (arbiter models only).
    pub fn eval_bit_features(&self, bit: usize, features: &[f64], challenge: &[u8]) -> u8 {
        match &self.bits[bit] {
            BitPuf::Xor(x) => x.bit(features),
            BitPuf::Ideal(i) => i.bit(challenge),
        }
    }

    /// Response with each bit flipped independently at the configured rate.
    pub fn eval_noisy(&self, challenge: &[u8], rng: &mut SimRng) -> Result<Vec<u8>> {
        let mut y = self.eval(challenge)?;
        if self.flip_noise > 0.0 {
            for b in &mut y {
                if rng.random::<f64>() < self.flip_noise {
                    *b ^= 1;
                }
            }
        }
        Ok(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityMetrics {
    /// Largest empirical frequency of any single value of any output bit.
    pub bias_estimate: f64,
    /// Mean fractional Hamming distance to an independently seeded twin.
    pub inter_distance: f64,
    /// Mean fractional Hamming distance between repeated noisy evaluations.
    pub intra_distance: f64,
}

/// Estimates bias, uniqueness and robustness on uniformly random challenges.
pub fn quality_metrics(model: &CpufModel, sample_count: usize, rng: &mut SimRng) -> Result<QualityMetrics> {
    if sample_count < 100 {
        return Err(Error::OutOfRange(format!("sample_count {sample_count} < 100")));
    }
    let twin = model.reseeded(rng.random())?;
    let width = model.out_bits();
    let mut zeros = vec![0usize; width];
    let mut inter = 0usize;
    let mut intra = 0usize;
    for _ in 0..sample_count {
        let c = random_bits(rng, model.n());
        let y = model.eval(&c)?;
        let z = twin.eval(&c)?;
        for (i, (a, b)) in y.iter().zip(&z).enumerate() {
            zeros[i] += (*a == 0) as usize;
            inter += (a != b) as usize;
        }
        if model.flip_noise() > 0.0 {
            let r1 = model.eval_noisy(&c, rng)?;
            let r2 = model.eval_noisy(&c, rng)?;
            intra += r1.iter().zip(&r2).filter(|(a, b)| a != b).count();
        }
    }
    let total = (sample_count * width) as f64;
    let bias_estimate = zeros
        .iter()
        .map(|&z| {
            let f = z as f64 / sample_count as f64;
            f.max(1.0 - f)
        })
        .fold(0.0, f64::max);
    Ok(QualityMetrics {
        bias_estimate,
        inter_distance: inter as f64 / total,
        intra_distance: intra as f64 / total,
    })
}
