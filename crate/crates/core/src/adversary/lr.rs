//! Logistic-regression modelling of k-XOR arbiter responses.
//!
//! `P(bit = 0 | c) = σ(Π_l ⟨w_l, Φ(c)⟩)`; a product below zero predicts 1,
//! matching the device convention that an odd number of negative chain
//! delays yields 1. Training minimises cross-entropy with per-weight
//! sign-adaptive steps (iRprop−) on mini-batches.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cpuf::feature_transform;
use crate::error::{Error, Result};
use crate::rng::stream;

use super::CrpDatabase;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub restarts: usize,
    pub validation_fraction: f64,
    pub seed: u64,
    /// Epochs without validation improvement before a restart stops early.
    pub patience: usize,
    /// Stop all restarts once validation accuracy reaches this value.
    pub target_accuracy: Option<f64>,
    pub step_init: f64,
    pub step_min: f64,
    pub step_max: f64,
}

impl Default for LrConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 256,
            restarts: 5,
            validation_fraction: 0.1,
            seed: 0,
            patience: 30,
            target_accuracy: None,
            step_init: 0.05,
            step_min: 1e-6,
            step_max: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LrModel {
    weights: Vec<Vec<f64>>,
    config: LrConfig,
    validation_accuracy: f64,
    diverged: bool,
}

impl LrModel {
    pub fn from_weights(weights: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = weights.first() else {
            return Err(Error::OutOfRange("no weight vectors".into()));
        };
        if weights.iter().any(|w| w.len() != first.len()) {
            return Err(Error::OutOfRange("weight vectors differ in length".into()));
        }
        Ok(Self {
            weights,
            config: LrConfig::default(),
            validation_accuracy: f64::NAN,
            diverged: false,
        })
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn config(&self) -> &LrConfig {
        &self.config
    }

    pub fn validation_accuracy(&self) -> f64 {
        self.validation_accuracy
    }

    /// True when some restart produced a non-finite loss; the returned
    /// weights are then the best finite ones seen.
    pub fn diverged(&self) -> bool {
        self.diverged
    }

    pub fn product(&self, features: &[f64]) -> f64 {
        self.weights.iter().map(|w| dot(w, features)).product()
    }

    pub fn predict_features(&self, features: &[f64]) -> u8 {
        (self.product(features) < 0.0) as u8
    }

    pub fn predict(&self, challenge: &[u8]) -> u8 {
        self.predict_features(&feature_transform(challenge))
    }

    /// Accuracy on `bit` of every entry of `db`.
    pub fn accuracy(&self, db: &CrpDatabase, bit: usize) -> f64 {
        if db.is_empty() {
            return f64::NAN;
        }
        let hits = db
            .entries()
            .iter()
            .filter(|(c, r)| self.predict(c) == r[bit])
            .count();
        hits as f64 / db.len() as f64
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Sample {
    phi: Vec<f64>,
    /// +1 for bit 0, −1 for bit 1.
    z: f64,
}

fn accuracy_on(weights: &[Vec<f64>], data: &[Sample]) -> f64 {
    if data.is_empty() {
        return f64::NAN;
    }
    let hits = data
        .iter()
        .filter(|s| weights.iter().map(|w| dot(w, &s.phi)).product::<f64>() * s.z > 0.0)
        .count();
    hits as f64 / data.len() as f64
}

/// Fits a `k`-chain model to output bit `target` of `db`. Deterministic for a
/// given database and `config.seed`.
pub fn lr_train(db: &CrpDatabase, target: usize, k: usize, config: &LrConfig) -> Result<LrModel> {
    if db.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    let width = db.response_width().unwrap_or(0);
    if target >= width {
        return Err(Error::OutOfRange(format!("target bit {target} of {width}")));
    }
    if k == 0 || config.batch_size == 0 || config.restarts == 0 {
        return Err(Error::Config("k, batch_size and restarts must be positive".into()));
    }
    let samples: Vec<Sample> = db
        .entries()
        .iter()
        .map(|(c, r)| Sample {
            phi: feature_transform(c),
            z: if r[target] == 0 { 1.0 } else { -1.0 },
        })
        .collect();
    let dim = samples[0].phi.len();
    let n_val = if samples.len() >= 10 {
        ((samples.len() as f64 * config.validation_fraction).round() as usize).min(samples.len() - 1)
    } else {
        0
    };
    let (val, train) = samples.split_at(n_val);
    // Tiny databases validate on the training set.
    let val = if val.is_empty() { train } else { val };

    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    let mut diverged = false;
    for restart in 0..config.restarts {
        let mut rng = stream(config.seed, restart as u64);
        let mut w: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let mut step = vec![vec![config.step_init; dim]; k];
        let mut prev = vec![vec![0.0; dim]; k];
        let mut grad = vec![vec![0.0; dim]; k];
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut run_best = (accuracy_on(&w, val), w.clone());
        let mut stale = 0;
        let mut s_buf = vec![0.0; k];
        'epochs: for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(config.batch_size) {
                for g in grad.iter_mut() {
                    g.iter_mut().for_each(|v| *v = 0.0);
                }
                for &i in batch {
                    let smp = &train[i];
                    for (l, wl) in w.iter().enumerate() {
                        s_buf[l] = dot(wl, &smp.phi);
                    }
                    let prod: f64 = s_buf.iter().product();
                    let t = -smp.z * prod;
                    // dL/dprod = −z·σ(−z·prod)
                    let sig = if t >= 0.0 { 1.0 / (1.0 + (-t).exp()) } else { t.exp() / (1.0 + t.exp()) };
                    let dl = -smp.z * sig;
                    for l in 0..k {
                        let others: f64 = s_buf.iter().enumerate().filter(|(j, _)| *j != l).map(|(_, v)| v).product();
                        let coef = dl * others;
                        for (g, x) in grad[l].iter_mut().zip(&smp.phi) {
                            *g += coef * x;
                        }
                    }
                }
                if grad.iter().flatten().any(|g| !g.is_finite()) {
                    diverged = true;
                    break 'epochs;
                }
                for l in 0..k {
                    for j in 0..dim {
                        let g = grad[l][j];
                        let sign = g * prev[l][j];
                        if sign > 0.0 {
                            step[l][j] = (step[l][j] * 1.2).min(config.step_max);
                        } else if sign < 0.0 {
                            step[l][j] = (step[l][j] * 0.5).max(config.step_min);
                            prev[l][j] = 0.0;
                            continue;
                        }
                        w[l][j] -= g.signum() * step[l][j] * (g != 0.0) as u8 as f64;
                        prev[l][j] = g;
                    }
                }
            }
            let acc = accuracy_on(&w, val);
            if acc > run_best.0 {
                run_best = (acc, w.clone());
                stale = 0;
            } else {
                stale += 1;
                if stale >= config.patience {
                    break;
                }
            }
            if config.target_accuracy.is_some_and(|t| acc >= t) {
                break;
            }
        }
        if best.as_ref().is_none_or(|(a, _)| run_best.0 > *a) {
            best = Some(run_best);
        }
        if let (Some(t), Some((a, _))) = (config.target_accuracy, &best) {
            if *a >= t {
                break;
            }
        }
    }
    let (validation_accuracy, weights) = best.expect("at least one restart");
    Ok(LrModel {
        weights,
        config: config.clone(),
        validation_accuracy,
        diverged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::DbSource;
    use crate::cpuf::CpufModel;
    use crate::rng::{random_bits, seeded};

    fn noisy_copy(db: &CrpDatabase, rate: f64, seed: u64) -> CrpDatabase {
        let mut rng = seeded(seed);
        let entries = db
            .entries()
            .iter()
            .map(|(c, r)| {
                let r = r.iter().map(|&b| b ^ (rng.random::<f64>() < rate) as u8).collect();
                (c.clone(), r)
            })
            .collect();
        CrpDatabase::new(entries, DbSource::Extracted).unwrap()
    }

    fn quick() -> LrConfig {
        LrConfig {
            epochs: 60,
            restarts: 2,
            ..LrConfig::default()
        }
    }

    #[test]
    fn single_chain_is_learnable() {
        let mut rng = seeded(1);
        let cpuf = CpufModel::xor_arbiter(16, 1, 1, 7).unwrap();
        let train = CrpDatabase::sample_clean(&cpuf, 5000, &mut rng).unwrap();
        let test = CrpDatabase::sample_clean(&cpuf, 5000, &mut rng).unwrap();
        let model = lr_train(&train, 0, 1, &quick()).unwrap();
        assert!(model.accuracy(&test, 0) >= 0.98, "{}", model.accuracy(&test, 0));
    }

    #[test]
    fn pure_noise_labels_give_chance() {
        // A model fitted to coin-flip labels is independent of the device, so
        // its accuracy averages to ½ over instances.
        let mut rng = seeded(2);
        let cfg = LrConfig {
            epochs: 20,
            restarts: 1,
            ..LrConfig::default()
        };
        let runs = 40;
        let mean = (0..runs)
            .map(|i| {
                let cpuf = CpufModel::xor_arbiter(16, 1, 1, 100 + i).unwrap();
                let train = noisy_copy(&CrpDatabase::sample_clean(&cpuf, 500, &mut rng).unwrap(), 0.5, i);
                let test = CrpDatabase::sample_clean(&cpuf, 2000, &mut rng).unwrap();
                lr_train(&train, 0, 1, &cfg).unwrap().accuracy(&test, 0)
            })
            .sum::<f64>()
            / runs as f64;
        assert!((mean - 0.5).abs() < 0.02, "{mean}");
    }

    #[test]
    fn label_noise_does_not_help() {
        let mut rng = seeded(3);
        let cpuf = CpufModel::xor_arbiter(16, 1, 1, 11).unwrap();
        let clean = CrpDatabase::sample_clean(&cpuf, 300, &mut rng).unwrap();
        let noisy = noisy_copy(&clean, 0.15, 4);
        let test = CrpDatabase::sample_clean(&cpuf, 5000, &mut rng).unwrap();
        let cfg = quick();
        let a = lr_train(&clean, 0, 1, &cfg).unwrap().accuracy(&test, 0);
        let b = lr_train(&noisy, 0, 1, &cfg).unwrap().accuracy(&test, 0);
        assert!(a >= b, "clean {a} noisy {b}");
    }

    #[test]
    fn training_is_deterministic() {
        let mut rng = seeded(4);
        let cpuf = CpufModel::xor_arbiter(12, 2, 1, 5).unwrap();
        let db = CrpDatabase::sample_clean(&cpuf, 500, &mut rng).unwrap();
        let a = lr_train(&db, 0, 2, &quick()).unwrap();
        let b = lr_train(&db, 0, 2, &quick()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn true_weights_predict_exactly() {
        let cpuf = CpufModel::xor_arbiter(16, 3, 1, 21).unwrap();
        let crate::cpuf::BitPuf::Xor(p) = &cpuf.bit_pufs()[0] else { unreachable!() };
        let model = LrModel::from_weights(p.chains().iter().map(|c| c.weights().to_vec()).collect()).unwrap();
        let mut rng = seeded(5);
        for _ in 0..1000 {
            let c = random_bits(&mut rng, 16);
            assert_eq!(model.predict(&c), cpuf.eval(&c).unwrap()[0]);
        }
    }

    #[test]
    fn empty_database_is_an_error() {
        let db = CrpDatabase::new(vec![], DbSource::Clean).unwrap();
        assert!(matches!(lr_train(&db, 0, 1, &LrConfig::default()), Err(Error::EmptyDatabase)));
    }
}
