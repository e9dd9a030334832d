//! Universal-unforgeability game.
//!
//! Each trial builds a fresh device, lets the adversary learn with a budget
//! of `q` challenges, draws a uniformly random target challenge and scores
//! the adversary's forgery of the second response half: bit equality for a
//! CPUF, server-side verification of the forged states otherwise.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cpuf::CpufModel;
use crate::error::{Error, Result};
use crate::hybrid::{
    server_encode, server_verify, EncodingScheme, HalfResponse, HlpufDevice, HpufDevice, LockOutput, Role, SchemeKind,
    Verdict, VerifyPolicy,
};
use crate::rng::{random_bits, stream, SimRng};

use super::lr::{lr_train, LrConfig};
use super::multicopy::{multi_copy_extract, MultiCopyVariant};
use super::split::{BitPrior, SplitAttack, StageModel};
use super::{CrpDatabase, DbSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviceKind {
    Cpuf,
    Hpuf,
    Hlpuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Holds the device's exact model.
    ExactCopy,
    /// Forges uniformly random bits.
    UniformGuess,
    /// Weak: single copies of `q` random CRPs, split-attack extraction, LR.
    MeasureThenForge,
    /// Adaptive: re-queries the challenges the server uses in honest rounds.
    /// Against the lock this means feeding the server's first half in.
    ReplayServerChallenges,
    /// Adaptive: queries the device directly with no first half. Against the
    /// lock every query is ⊥.
    DirectProbe,
    /// Adaptive: `copies` fresh copies per queried challenge, extracted with
    /// the multi-copy procedure (BB84 only). The lock refuses direct
    /// queries, so against it this falls back to replaying server challenges.
    MultiCopy { copies: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameConfig {
    pub n: usize,
    /// XOR chains per output bit.
    pub chains: usize,
    pub scheme: SchemeKind,
    /// Encoded blocks per response half.
    pub blocks_per_half: usize,
    /// Distinct challenges the adversary learns from.
    pub q: usize,
    pub trials: usize,
    pub seed: u64,
    pub stage_model: StageModel,
    pub lr: LrConfig,
    pub policy: VerifyPolicy,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            n: 16,
            chains: 1,
            scheme: SchemeKind::Bb84,
            blocks_per_half: 1,
            q: 200,
            trials: 200,
            seed: 0,
            stage_model: StageModel::Genie,
            lr: LrConfig {
                epochs: 60,
                restarts: 2,
                ..LrConfig::default()
            },
            policy: VerifyPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameOutcome {
    pub wins: usize,
    pub trials: usize,
    /// Lock queries answered with ⊥ over all trials.
    pub lock_aborts: u64,
    /// Lock queries that released a second half.
    pub lock_releases: u64,
}

impl GameOutcome {
    pub fn win_rate(&self) -> f64 {
        self.wins as f64 / self.trials as f64
    }

    /// Binomial standard error of the win rate.
    pub fn sigma(&self) -> f64 {
        let p = self.win_rate();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

struct TrialResult {
    win: bool,
    aborts: u64,
    releases: u64,
}

pub fn run_unforgeability_game(target: DeviceKind, strategy: Strategy, cfg: &GameConfig) -> Result<GameOutcome> {
    if cfg.q == 0 || cfg.trials == 0 {
        return Err(Error::Config("q and trials must be positive".into()));
    }
    let scheme = EncodingScheme::new(cfg.scheme);
    if let Strategy::MultiCopy { copies } = strategy {
        if copies < 2 {
            return Err(Error::Config("multi-copy needs at least 2 copies".into()));
        }
        if target == DeviceKind::Hpuf && cfg.scheme != SchemeKind::Bb84 {
            return Err(Error::SchemeMismatch("multi-copy extraction is defined for BB84".into()));
        }
    }
    let attack = SplitAttack::new(&scheme, BitPrior::DeviceBits { p: 0.5 }, cfg.stage_model)?;
    let results = (0..cfg.trials)
        .into_par_iter()
        .map(|t| play(target, strategy, cfg, &scheme, &attack, t as u64))
        .collect::<Result<Vec<_>>>()?;
    Ok(GameOutcome {
        wins: results.iter().filter(|r| r.win).count(),
        trials: cfg.trials,
        lock_aborts: results.iter().map(|r| r.aborts).sum(),
        lock_releases: results.iter().map(|r| r.releases).sum(),
    })
}

fn play(
    target: DeviceKind,
    strategy: Strategy,
    cfg: &GameConfig,
    scheme: &EncodingScheme,
    attack: &SplitAttack,
    trial: u64,
) -> Result<TrialResult> {
    let mut rng = stream(cfg.seed, trial);
    let out_bits = 2 * cfg.blocks_per_half * scheme.bits_per_block();
    let cpuf = CpufModel::xor_arbiter(cfg.n, cfg.chains, out_bits, rng.random())?;
    let hpuf = HpufDevice::new(cpuf.clone(), scheme.clone())?;
    let mut lock = HlpufDevice::new(hpuf.clone()).with_policy(cfg.policy);
    let half = hpuf.half_bits();
    let mut aborts = 0;

    // Learning phase: a database of (challenge, second-half guess).
    let learned: Option<Vec<(Vec<u8>, Vec<u8>)>> = match (strategy, target) {
        (Strategy::ExactCopy | Strategy::UniformGuess, _) => None,
        (_, DeviceKind::Cpuf) => Some(
            (0..cfg.q)
                .map(|_| {
                    let c = random_bits(&mut rng, cfg.n);
                    let y = hpuf.half_bits_of(&c, Role::Second)?;
                    Ok((c, y))
                })
                .collect::<Result<_>>()?,
        ),
        (Strategy::MultiCopy { copies }, DeviceKind::Hpuf) => {
            let mut rows = Vec::with_capacity(cfg.q);
            for _ in 0..cfg.q {
                let c = random_bits(&mut rng, cfg.n);
                let fresh: Vec<Vec<_>> = (0..copies)
                    .map(|_| hpuf.eval_half(&c, Role::Second).map(HalfResponse::into_states))
                    .collect::<Result<_>>()?;
                let mut bits = Vec::with_capacity(half);
                for j in 0..cfg.blocks_per_half {
                    let group = fresh.iter().map(|s| s[j].clone()).collect();
                    let (v, b) = multi_copy_extract(group, MultiCopyVariant::Full, &mut rng)?;
                    bits.extend([v, b]);
                }
                rows.push((c, bits));
            }
            Some(rows)
        }
        (Strategy::DirectProbe, DeviceKind::Hlpuf) => {
            for _ in 0..cfg.q {
                let c = random_bits(&mut rng, cfg.n);
                match lock.lock_query(&c, &[], &mut rng)? {
                    LockOutput::Abort => aborts += 1,
                    LockOutput::Released(_) => unreachable!("empty first half cannot pass"),
                }
            }
            None
        }
        (Strategy::ReplayServerChallenges | Strategy::MultiCopy { .. }, DeviceKind::Hlpuf) => {
            let mut rows = Vec::with_capacity(cfg.q);
            for _ in 0..cfg.q {
                let c = random_bits(&mut rng, cfg.n);
                let y = cpuf.eval(&c)?;
                let (_, first) = server_encode(scheme, (&c, &y), Role::First)?;
                match lock.lock_query(&c, first.states(), &mut rng)? {
                    LockOutput::Released(second) => {
                        let truth = second.classical_bits().to_vec();
                        rows.push((c, extract(attack, second.states(), &truth, &mut rng)?));
                    }
                    LockOutput::Abort => aborts += 1,
                }
            }
            Some(rows)
        }
        // Weak learning, and adaptive single-copy queries on an unlocked
        // device: one fresh copy of each random challenge's second half.
        _ => {
            let mut rows = Vec::with_capacity(cfg.q);
            for _ in 0..cfg.q {
                let c = random_bits(&mut rng, cfg.n);
                let second = hpuf.eval_half(&c, Role::Second)?;
                let truth = second.classical_bits().to_vec();
                rows.push((c, extract(attack, second.states(), &truth, &mut rng)?));
            }
            Some(rows)
        }
    };

    // Challenge and forgery.
    let x = random_bits(&mut rng, cfg.n);
    let forged = match strategy {
        Strategy::ExactCopy => hpuf.half_bits_of(&x, Role::Second)?,
        _ => match learned {
            Some(rows) if !rows.is_empty() => forge_from(&rows, &x, cfg)?,
            _ => random_bits(&mut rng, half),
        },
    };
    let truth = hpuf.half_bits_of(&x, Role::Second)?;
    let win = match target {
        DeviceKind::Cpuf => forged == truth,
        DeviceKind::Hpuf | DeviceKind::Hlpuf => {
            let y = cpuf.eval(&x)?;
            let (_, expected) = server_encode(scheme, (&x, &y), Role::Second)?;
            let states = scheme.encode_bits(&forged)?;
            server_verify(scheme, &expected, &states, cfg.policy, &mut rng)? == Verdict::Accept
        }
    };
    Ok(TrialResult {
        win,
        aborts,
        releases: lock.query_log(),
    })
}

fn extract(attack: &SplitAttack, states: &[crate::qstate::PureState], truth: &[u8], rng: &mut SimRng) -> Result<Vec<u8>> {
    let bpb = attack.scheme().bits_per_block();
    let mut bits = Vec::with_capacity(truth.len());
    for (s, t) in states.iter().zip(truth.chunks(bpb)) {
        bits.extend(attack.extract_block(s, t, rng)?);
    }
    Ok(bits)
}

/// Looks the target up, else predicts each bit with its own LR model.
fn forge_from(rows: &[(Vec<u8>, Vec<u8>)], x: &[u8], cfg: &GameConfig) -> Result<Vec<u8>> {
    if let Some((_, y)) = rows.iter().find(|(c, _)| c == x) {
        return Ok(y.clone());
    }
    let db = CrpDatabase::new(rows.to_vec(), DbSource::Extracted)?;
    let width = db.response_width().unwrap_or(0);
    (0..width)
        .map(|bit| Ok(lr_train(&db, bit, cfg.chains, &cfg.lr)?.predict(x)))
        .collect()
}
