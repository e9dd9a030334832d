//! Split attack: recover a block bit by bit, value bits first, then basis
//! bits. Stage `s` is the Helstrom measurement between the two mixtures of
//! codewords that agree with the prefix and have bit `s` equal to 0 or 1.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hybrid::{from_index, EncodingScheme};
use crate::qstate::{Hypothesis, HelstromMeasurement, PureState, DensityMatrix, C64};
use crate::rng::SimRng;

use super::{CrpDatabase, DbSource, QuantumCrpDatabase};

/// The adversary's prior over codewords.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BitPrior {
    /// Every block bit is 0 with probability `p`, independently.
    DeviceBits { p: f64 },
    /// Uniform over every basis of the family (including any basis the bit
    /// layout cannot address) and every value.
    UniformFamily,
}

/// How stages after the first see the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageModel {
    /// Each stage measures a fresh copy and conditions on the true prefix.
    /// This is the per-bit accounting behind the guessing bound: every bit
    /// is recovered independently at its stage's Helstrom rate.
    Genie,
    /// One copy: later stages measure the post-measurement state and
    /// condition on the guessed prefix.
    SingleCopy,
}

#[derive(Debug, Clone)]
enum Stage {
    Fixed(u8),
    Measure(HelstromMeasurement),
}

#[derive(Debug, Clone, Copy)]
struct Codeword {
    x: usize,
    theta: usize,
    weight: f64,
}

#[derive(Debug, Clone)]
pub struct SplitAttack {
    scheme: EncodingScheme,
    prior: BitPrior,
    model: StageModel,
    /// Keyed by `(stage, prefix)` with the prefix read MSB first.
    stages: HashMap<(usize, usize), Stage>,
    /// Analytic accuracy per bit position under the prior.
    expected: Vec<f64>,
}

impl SplitAttack {
    pub fn new(scheme: &EncodingScheme, prior: BitPrior, model: StageModel) -> Result<Self> {
        let words = codewords(scheme, prior)?;
        let width = scheme.bits_per_block();
        let mut stages = HashMap::new();
        let mut expected = vec![0.0; width];
        for s in 0..width {
            let mut mass = 0.0;
            for prefix in 0..(1usize << s) {
                let (a, b): (Vec<Codeword>, Vec<Codeword>) = words
                    .iter()
                    .filter(|w| matches_prefix(scheme, w, s, prefix) && bit_of(scheme, w, s).is_some())
                    .partition(|w| bit_of(scheme, w, s) == Some(0));
                let (wa, wb) = (total(&a), total(&b));
                let stage = if wb <= 0.0 {
                    Stage::Fixed(0)
                } else if wa <= 0.0 {
                    Stage::Fixed(1)
                } else {
                    let ra = weighted_mixture(scheme, &a, wa)?;
                    let rb = weighted_mixture(scheme, &b, wb)?;
                    Stage::Measure(HelstromMeasurement::weighted(&ra, &rb, wa / (wa + wb))?)
                };
                let success = match &stage {
                    Stage::Fixed(_) => 1.0,
                    Stage::Measure(h) => h.success(),
                };
                expected[s] += (wa + wb) * success;
                mass += wa + wb;
                stages.insert((s, prefix), stage);
            }
            if mass > 0.0 {
                expected[s] /= mass;
            }
        }
        Ok(Self {
            scheme: scheme.clone(),
            prior,
            model,
            stages,
            expected,
        })
    }

    pub fn scheme(&self) -> &EncodingScheme {
        &self.scheme
    }

    pub fn prior(&self) -> BitPrior {
        self.prior
    }

    pub fn model(&self) -> StageModel {
        self.model
    }

    /// Helstrom optimum of each bit position, averaged over the prior with
    /// true-prefix conditioning.
    pub fn expected_bit_accuracy(&self) -> &[f64] {
        &self.expected
    }

    /// Recovers one block. `truth` is consulted only by [`StageModel::Genie`]
    /// to pick the conditioning prefix.
    pub fn extract_block(&self, state: &PureState, truth: &[u8], rng: &mut SimRng) -> Result<Vec<u8>> {
        let width = self.scheme.bits_per_block();
        if state.dim() != self.scheme.dim() {
            return Err(Error::SchemeMismatch(format!(
                "state of dimension {} for {}",
                state.dim(),
                self.scheme.kind()
            )));
        }
        if truth.len() != width {
            return Err(Error::BitWidth {
                expected: width,
                got: truth.len(),
            });
        }
        let mut guess = Vec::with_capacity(width);
        let mut current = state.clone();
        for s in 0..width {
            let prefix_bits = match self.model {
                StageModel::Genie => &truth[..s],
                StageModel::SingleCopy => &guess[..s],
            };
            let prefix = crate::hybrid::to_index(prefix_bits);
            let bit = match &self.stages[&(s, prefix)] {
                Stage::Fixed(b) => *b,
                Stage::Measure(h) => {
                    let input = match self.model {
                        StageModel::Genie => state,
                        StageModel::SingleCopy => &current,
                    };
                    let (vote, post) = h.measure(input, rng)?;
                    current = post;
                    match vote {
                        Hypothesis::A => 0,
                        Hypothesis::B => 1,
                    }
                }
            };
            guess.push(bit);
        }
        Ok(guess)
    }
}

fn codewords(scheme: &EncodingScheme, prior: BitPrior) -> Result<Vec<Codeword>> {
    let d = scheme.dim();
    let mut out = Vec::new();
    match prior {
        BitPrior::DeviceBits { p } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::OutOfRange(format!("p = {p}")));
            }
            let vb = scheme.value_bits();
            for theta in 0..scheme.device_bases() {
                for x in 0..d {
                    let bits = [from_index(x, vb), from_index(theta, scheme.basis_bits())].concat();
                    let weight = bits.iter().map(|&b| if b == 0 { p } else { 1.0 - p }).product();
                    out.push(Codeword { x, theta, weight });
                }
            }
        }
        BitPrior::UniformFamily => {
            let n = scheme.family().len();
            for theta in 0..n {
                for x in 0..d {
                    out.push(Codeword {
                        x,
                        theta,
                        weight: 1.0 / (n * d) as f64,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Bit `s` of a codeword; `None` for basis bits of an unaddressable basis.
fn bit_of(scheme: &EncodingScheme, w: &Codeword, s: usize) -> Option<u8> {
    let vb = scheme.value_bits();
    if s < vb {
        Some(((w.x >> (vb - 1 - s)) & 1) as u8)
    } else if w.theta < scheme.device_bases() {
        let bb = scheme.basis_bits();
        Some(((w.theta >> (bb - 1 - (s - vb))) & 1) as u8)
    } else {
        None
    }
}

fn matches_prefix(scheme: &EncodingScheme, w: &Codeword, s: usize, prefix: usize) -> bool {
    (0..s).all(|i| bit_of(scheme, w, i) == Some(((prefix >> (s - 1 - i)) & 1) as u8))
}

fn total(words: &[Codeword]) -> f64 {
    words.iter().map(|w| w.weight).sum()
}

fn weighted_mixture(scheme: &EncodingScheme, words: &[Codeword], mass: f64) -> Result<DensityMatrix> {
    let d = scheme.dim();
    let mut m = nalgebra::DMatrix::<C64>::zeros(d, d);
    for w in words {
        let psi = scheme.family().state(w.theta, w.x);
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        m += &v * v.adjoint() * C64::new(w.weight / mass, 0.0);
    }
    DensityMatrix::new(m)
}

/// Measures every block of every entry into a noisy classical database.
pub fn split_attack_extract(qdb: &QuantumCrpDatabase, attack: &SplitAttack, rng: &mut SimRng) -> Result<CrpDatabase> {
    let bpb = attack.scheme().bits_per_block();
    let entries = qdb
        .entries()
        .iter()
        .map(|e| {
            if e.states.len() * bpb != e.truth().len() {
                return Err(Error::SchemeMismatch(format!(
                    "{} states for {} bits under {}",
                    e.states.len(),
                    e.truth().len(),
                    attack.scheme().kind()
                )));
            }
            let mut bits = Vec::with_capacity(e.truth().len());
            for (state, truth) in e.states.iter().zip(e.truth().chunks(bpb)) {
                bits.extend(attack.extract_block(state, truth, rng)?);
            }
            Ok((e.challenge.clone(), bits))
        })
        .collect::<Result<Vec<_>>>()?;
    CrpDatabase::new(entries, DbSource::Extracted)
}
