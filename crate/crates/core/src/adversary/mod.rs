//! Attacks on CPUF, HPUF and HLPUF devices.
//!
//! * [`split`]: single-copy optimal per-bit extraction (value bits first,
//!   then basis bits, each a binary Helstrom discrimination).
//! * [`multicopy`]: extraction from K copies of one BB84 state.
//! * [`lr`]: logistic-regression modelling of XOR-arbiter CPUFs.
//! * [`intercept_resend`]: the canonical channel eavesdropper.
//! * [`game`]: the universal-unforgeability game harness.

pub mod game;
pub mod lr;
pub mod multicopy;
pub mod split;

use serde::Serialize;

use crate::cpuf::CpufModel;
use crate::error::{Error, Result};
use crate::hybrid::HpufDevice;
use crate::qstate::{measure, Basis, PureState};
use crate::rng::{random_bits, SimRng};

pub use game::{run_unforgeability_game, DeviceKind, GameConfig, GameOutcome, Strategy};
pub use lr::{lr_train, LrConfig, LrModel};
pub use multicopy::{multi_copy_database, multi_copy_extract, MultiCopyVariant};
pub use split::{split_attack_extract, BitPrior, SplitAttack, StageModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DbSource {
    Clean,
    Extracted,
}

/// Classical challenge-response table.
#[derive(Debug, Clone, PartialEq)]
pub struct CrpDatabase {
    entries: Vec<(Vec<u8>, Vec<u8>)>,
    noisy: bool,
    source: DbSource,
}

impl CrpDatabase {
    pub fn new(entries: Vec<(Vec<u8>, Vec<u8>)>, source: DbSource) -> Result<Self> {
        if let Some((c0, r0)) = entries.first() {
            for (c, r) in &entries {
                if c.len() != c0.len() {
                    return Err(Error::ChallengeLength {
                        expected: c0.len(),
                        got: c.len(),
                    });
                }
                if r.len() != r0.len() {
                    return Err(Error::BitWidth {
                        expected: r0.len(),
                        got: r.len(),
                    });
                }
            }
        }
        Ok(Self {
            entries,
            noisy: source == DbSource::Extracted,
            source,
        })
    }

    /// `q` uniformly random challenges with exact responses.
    pub fn sample_clean(cpuf: &CpufModel, q: usize, rng: &mut SimRng) -> Result<Self> {
        let entries = (0..q)
            .map(|_| {
                let c = random_bits(rng, cpuf.n());
                let r = cpuf.eval(&c)?;
                Ok((c, r))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries, DbSource::Clean)
    }

    pub fn entries(&self) -> &[(Vec<u8>, Vec<u8>)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn noisy(&self) -> bool {
        self.noisy
    }

    pub fn source(&self) -> DbSource {
        self.source
    }

    pub fn challenge_len(&self) -> Option<usize> {
        self.entries.first().map(|(c, _)| c.len())
    }

    pub fn response_width(&self) -> Option<usize> {
        self.entries.first().map(|(_, r)| r.len())
    }

    /// Keeps only the first `q` entries.
    pub fn truncated(&self, q: usize) -> Self {
        Self {
            entries: self.entries[..q.min(self.entries.len())].to_vec(),
            ..self.clone()
        }
    }

    /// Fraction of response bits that differ from `reference` (same challenges).
    pub fn bit_error_rate(&self, reference: &CrpDatabase) -> Result<f64> {
        if self.len() != reference.len() {
            return Err(Error::OutOfRange("databases differ in size".into()));
        }
        let (mut wrong, mut total) = (0usize, 0usize);
        for ((c, r), (c2, r2)) in self.entries.iter().zip(&reference.entries) {
            if c != c2 {
                return Err(Error::OutOfRange("databases hold different challenges".into()));
            }
            wrong += r.iter().zip(r2).filter(|(a, b)| a != b).count();
            total += r.len();
        }
        Ok(if total == 0 { 0.0 } else { wrong as f64 / total as f64 })
    }

    /// Fraction of entries whose whole response matches `reference`.
    pub fn full_match_rate(&self, reference: &CrpDatabase) -> Result<f64> {
        if self.len() != reference.len() || self.is_empty() {
            return Err(Error::EmptyDatabase);
        }
        let hits = self
            .entries
            .iter()
            .zip(&reference.entries)
            .filter(|((_, a), (_, b))| a == b)
            .count();
        Ok(hits as f64 / self.len() as f64)
    }
}

/// One single-copy quantum CRP. The classical bits ride along for the
/// upper-bound stage model of the split attack and for scoring; strategies
/// never forge from them.
#[derive(Debug, Clone)]
pub struct QuantumCrp {
    pub challenge: Vec<u8>,
    pub states: Vec<PureState>,
    truth: Vec<u8>,
}

impl QuantumCrp {
    pub(crate) fn truth(&self) -> &[u8] {
        &self.truth
    }
}

#[derive(Debug, Clone, Default)]
pub struct QuantumCrpDatabase {
    entries: Vec<QuantumCrp>,
}

impl QuantumCrpDatabase {
    /// `q` uniformly random challenges, one fresh copy of the full encoded
    /// response each.
    pub fn sample(device: &HpufDevice, q: usize, rng: &mut SimRng) -> Result<Self> {
        let mut entries = Vec::with_capacity(q);
        for _ in 0..q {
            let challenge = random_bits(rng, device.cpuf().n());
            entries.push(Self::entry(device, challenge)?);
        }
        Ok(Self { entries })
    }

    fn entry(device: &HpufDevice, challenge: Vec<u8>) -> Result<QuantumCrp> {
        let (a, b) = device.hpuf_eval(&challenge)?;
        let truth = [a.classical_bits(), b.classical_bits()].concat();
        let mut states = a.into_states();
        states.extend(b.into_states());
        Ok(QuantumCrp {
            challenge,
            states,
            truth,
        })
    }

    pub fn push(&mut self, entry: QuantumCrp) {
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[QuantumCrp] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The exact classical database for the same challenges.
    pub fn clean_reference(&self) -> Result<CrpDatabase> {
        CrpDatabase::new(
            self.entries
                .iter()
                .map(|e| (e.challenge.clone(), e.truth.clone()))
                .collect(),
            DbSource::Clean,
        )
    }
}

/// Measures in a uniformly random BB84 basis and resends the post-state.
/// Returns `(resent, recorded value bit, basis guess)`.
pub fn intercept_resend(state: &PureState, rng: &mut SimRng) -> Result<(PureState, u8, u8)> {
    if state.dim() != 2 {
        return Err(Error::UnsupportedDimension(state.dim()));
    }
    let basis: u8 = rand::Rng::random_range(rng, 0..2);
    let (outcome, post) = measure(state, &Basis::bb84(basis)?, rng)?;
    Ok((post, outcome as u8, basis))
}

/// One row of the attack CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackResult {
    pub seed: u64,
    pub q: usize,
    pub scheme: String,
    pub k: usize,
    pub n: usize,
    pub m: usize,
    pub mode: String,
    pub accuracy: f64,
    /// Per-bit agreement of the training database with the truth; blank
    /// when the database is empty.
    pub bit_rate: Option<f64>,
    /// `1 −` the fraction of responses recovered in full.
    pub epsilon_measured: Option<f64>,
    pub runtime_ms: Option<u64>,
}

pub const ATTACK_CSV_COLUMNS: [&str; 11] = [
    "seed",
    "q",
    "scheme",
    "k",
    "n",
    "m",
    "mode",
    "accuracy",
    "bit_rate",
    "epsilon_measured",
    "runtime_ms",
];

/// Writes rows (header included) with the csv crate.
pub fn write_attack_csv<W: std::io::Write>(out: W, rows: &[AttackResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    if rows.is_empty() {
        w.write_record(ATTACK_CSV_COLUMNS).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid::EncodingScheme;
    use crate::qstate::bb84_state;
    use crate::rng::seeded;

    #[test]
    fn database_widths_are_checked() {
        let ok = CrpDatabase::new(vec![(vec![0, 1], vec![1]), (vec![1, 1], vec![0])], DbSource::Clean);
        assert!(ok.is_ok());
        let bad = CrpDatabase::new(vec![(vec![0, 1], vec![1]), (vec![1], vec![0])], DbSource::Clean);
        assert!(bad.is_err());
        let bad = CrpDatabase::new(vec![(vec![0], vec![1]), (vec![1], vec![0, 0])], DbSource::Clean);
        assert!(bad.is_err());
    }

    /// Enumeration over (state, Eve basis, Eve outcome): the probability that
    /// the resent state fails verification in the true basis.
    fn ir_flip_oracle() -> (f64, f64) {
        let (mut flip, mut correct) = (0.0, 0.0);
        for v in 0..2u8 {
            for b in 0..2u8 {
                let psi = bb84_state(v, b).unwrap();
                for e in 0..2u8 {
                    let eb = Basis::bb84(e).unwrap();
                    for (o, p) in eb.probabilities(&psi).unwrap().into_iter().enumerate() {
                        let w = 0.25 * 0.5 * p;
                        let resent = bb84_state(o as u8, e).unwrap();
                        let pass = Basis::bb84(b).unwrap().probabilities(&resent).unwrap()[v as usize];
                        flip += w * (1.0 - pass);
                        if o as u8 == v {
                            correct += w;
                        }
                    }
                }
            }
        }
        (flip, correct)
    }

    #[test]
    fn intercept_resend_statistics() {
        let (flip, correct) = ir_flip_oracle();
        assert!((flip - 0.25).abs() < 1e-12);
        assert!((correct - 0.75).abs() < 1e-12);
        let mut rng = seeded(31);
        let n = 100_000;
        let (mut flips, mut hits) = (0usize, 0usize);
        for _ in 0..n {
            let bits = random_bits(&mut rng, 2);
            let psi = bb84_state(bits[0], bits[1]).unwrap();
            let (resent, rec, eb) = intercept_resend(&psi, &mut rng).unwrap();
            if eb == bits[1] {
                assert!(resent.same_ray(&psi));
            }
            hits += (rec == bits[0]) as usize;
            let (o, _) = measure(&resent, &Basis::bb84(bits[1]).unwrap(), &mut rng).unwrap();
            flips += (o as u8 != bits[0]) as usize;
        }
        assert!((hits as f64 / n as f64 - correct).abs() < 0.005);
        let sigma = (flip * (1.0 - flip) / n as f64).sqrt();
        assert!((flips as f64 / n as f64 - flip).abs() < 3.0 * sigma);
        assert!(intercept_resend(&PureState::basis_vector(4, 0).unwrap(), &mut rng).is_err());
    }

    #[test]
    fn quantum_database_matches_device() {
        let mut rng = seeded(2);
        let cpuf = CpufModel::xor_arbiter(8, 1, 4, 3).unwrap();
        let dev = HpufDevice::new(cpuf.clone(), EncodingScheme::bb84()).unwrap();
        let qdb = QuantumCrpDatabase::sample(&dev, 10, &mut rng).unwrap();
        let clean = qdb.clean_reference().unwrap();
        for ((c, r), e) in clean.entries().iter().zip(qdb.entries()) {
            assert_eq!(&cpuf.eval(c).unwrap(), r);
            assert_eq!(e.states.len(), 2);
        }
    }

    #[test]
    fn csv_has_schema_columns() {
        let row = AttackResult {
            seed: 1,
            q: 100,
            scheme: "bb84".into(),
            k: 2,
            n: 32,
            m: 1,
            mode: "cpuf".into(),
            accuracy: 0.75,
            bit_rate: Some(1.0),
            epsilon_measured: Some(0.0),
            runtime_ms: None,
        };
        let mut buf = Vec::new();
        write_attack_csv(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), ATTACK_CSV_COLUMNS.join(","));
        assert_eq!(lines.next().unwrap(), "1,100,bb84,2,32,1,cpuf,0.75,1.0,0.0,");
    }
}
