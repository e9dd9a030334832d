//! Experiment runner behind the `hlpuf` binary: configuration, the
//! subcommands and their CSV / JSON outputs, and exit codes.
//!
//! Every command is a pure function of its [`ExperimentConfig`]; outputs
//! carry a header with the tool version and a hash of the config so two
//! files can be matched to the run that made them.

pub mod cli;
mod selfcheck;

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use selfcheck::{cmd_selfcheck, Check, SelfcheckOptions, SelfcheckReport};

use crate::adversary::{
    lr_train, multi_copy_database, run_unforgeability_game, split_attack_extract, write_attack_csv, AttackResult,
    BitPrior, CrpDatabase, DeviceKind, GameConfig, LrConfig, LrModel, MultiCopyVariant, QuantumCrpDatabase,
    SplitAttack, StageModel, Strategy,
};
use crate::analytics::{forge_bound, mc_extract_rate, minentropy_bound, p_extract_bound, p_guess_bound, reuse_bound};
use crate::cpuf::{feature_transform, CpufModel};
use crate::error::Error;
use crate::hybrid::{EncodingScheme, HlpufDevice, HpufDevice, SchemeKind, VerifyPolicy};
use crate::protocol::{
    run_session, ChannelAdversary, ClientState, ForceFail, Honest, InterceptResend, Observer, Replay, ServerState,
    Session, SessionReport, Tap,
};
use crate::rng::stream;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config: {0}")]
    Config(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Sim(#[from] Error),
}

impl RunError {
    /// 2 for anything the user can fix in the config or on the command
    /// line, 1 for a failed invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Invariant(_) => EXIT_INVARIANT,
            RunError::Sim(e) => match e {
                Error::Config(_)
                | Error::OutOfRange(_)
                | Error::SchemeMismatch(_)
                | Error::BitWidth { .. }
                | Error::ChallengeLength { .. }
                | Error::ModelFormat(_)
                | Error::Io(_) => EXIT_CONFIG,
                _ => EXIT_INVARIANT,
            },
        }
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;

fn config_err(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    AttackCurve,
    Bounds,
    Protocol,
    Game,
    Selfcheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PufKind {
    XorArbiter,
    Ideal,
}

/// The three curves of an attack-curve run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackMode {
    /// LR on exact CRPs.
    Cpuf,
    /// LR on CRPs recovered from several copies per challenge of an unlocked
    /// HPUF.
    HpufAdaptive,
    /// LR on CRPs recovered by the split attack from single copies of
    /// random challenges, all a weak adversary sees of an HLPUF.
    HlpufWeak,
}

impl AttackMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttackMode::Cpuf => "cpuf",
            AttackMode::HpufAdaptive => "hpuf-adaptive",
            AttackMode::HlpufWeak => "hlpuf-weak",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryKind {
    Honest,
    Observer,
    /// Intercept-resend on both halves.
    InterceptResend,
    /// Intercept-resend on the first half only.
    InterceptForward,
    Tap,
    Replay,
    ForceFail,
}

impl AdversaryKind {
    pub fn build(&self, tap_rate: f64) -> Box<dyn ChannelAdversary> {
        match self {
            AdversaryKind::Honest => Box::new(Honest),
            AdversaryKind::Observer => Box::new(Observer),
            AdversaryKind::InterceptResend => Box::new(InterceptResend::both()),
            AdversaryKind::InterceptForward => Box::new(InterceptResend::forward_only()),
            AdversaryKind::Tap => Box::new(Tap::new(tap_rate)),
            AdversaryKind::Replay => Box::new(Replay::default()),
            AdversaryKind::ForceFail => Box::new(ForceFail),
        }
    }
}

/// Everything a run depends on. Loads from TOML; command-line flags
/// override file values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Required by every experiment command.
    pub seed: Option<u64>,
    /// Challenge length.
    pub n: usize,
    /// XOR chains per output bit.
    pub k: usize,
    /// Qubits per response half; the CPUF has `4m` output bits.
    pub m: usize,
    pub scheme: SchemeKind,
    /// CPUF randomness, used by ideal PUFs and the bounds.
    pub p: f64,
    pub puf: PufKind,
    /// Query budgets; each command has its own default.
    pub q_grid: Option<Vec<usize>>,
    pub eps_grid: Vec<f64>,
    /// Monte Carlo trials for bounds and game rows.
    pub trials: usize,
    /// Attack-curve runs at seeds `seed, seed+1, ...`.
    pub repeats: usize,
    /// Held-out clean CRPs for scoring attack models.
    pub test_size: usize,
    /// Response bit the attack models target.
    pub target_bit: usize,
    pub modes: Vec<AttackMode>,
    /// Copies per challenge for multi-copy extraction.
    pub copies: usize,
    pub stage_model: StageModel,
    /// `lr.seed` is replaced by the run seed.
    pub lr: LrConfig,
    pub rounds: usize,
    pub db_size: usize,
    /// Accepted uses before a challenge is retired; absent means unlimited.
    pub reuse_cap: Option<u32>,
    pub adversary: AdversaryKind,
    pub tap_rate: f64,
    /// Score the adversary's second-half guesses before every round.
    pub audit: bool,
    /// Fraction of blocks verification may get wrong.
    pub mismatch_tolerance: f64,
    /// Per-bit flip rate of the client's CPUF on each query; sensitivity runs only.
    pub flip_noise: f64,
    /// Largest reuse count in the bounds table.
    pub k_max: usize,
    /// Fresh-challenge guessing probability for the reuse rows.
    pub eps1: f64,
    pub zeta_grid: Vec<f64>,
    /// Classical forging probability for the forge rows.
    pub p_classical: f64,
    /// Fill `runtime_ms`; makes outputs run-dependent.
    pub record_runtime: bool,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub transcript: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: None,
            n: 32,
            k: 2,
            m: 1,
            scheme: SchemeKind::Bb84,
            p: 0.5,
            puf: PufKind::XorArbiter,
            q_grid: None,
            eps_grid: vec![0.0, 0.1, 0.2],
            trials: 200,
            repeats: 1,
            test_size: 10_000,
            target_bit: 0,
            modes: vec![AttackMode::Cpuf, AttackMode::HpufAdaptive, AttackMode::HlpufWeak],
            copies: 4,
            stage_model: StageModel::Genie,
            lr: LrConfig::default(),
            rounds: 100,
            db_size: 1000,
            reuse_cap: None,
            adversary: AdversaryKind::Honest,
            tap_rate: 0.1,
            audit: false,
            mismatch_tolerance: 0.0,
            flip_noise: 0.0,
            k_max: 16,
            eps1: 0.0,
            zeta_grid: vec![0.0, 0.01, 0.05, 0.1],
            p_classical: 1.0,
            record_runtime: false,
            threads: None,
            out: None,
            transcript: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> RunResult<Self> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn to_toml(&self) -> RunResult<String> {
        toml::to_string(self).map_err(|e| config_err(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> RunResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn q_grid_for(&self, cmd: Command) -> Vec<usize> {
        self.q_grid.clone().unwrap_or_else(|| match cmd {
            Command::AttackCurve => vec![0, 1000, 2000, 5000, 10_000, 20_000, 50_000],
            Command::Game => vec![50, 200],
            _ => vec![1, 10, 100],
        })
    }

    pub fn out_bits(&self) -> usize {
        4 * self.m
    }

    pub fn blocks_per_half(&self) -> usize {
        self.m / EncodingScheme::new(self.scheme).qubits_per_block()
    }

    pub fn require_seed(&self) -> RunResult<u64> {
        self.seed.ok_or_else(|| config_err("--seed is required"))
    }

    /// Hash of every field that affects output bytes.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.threads = None;
        c.out = None;
        c.transcript = None;
        let bytes = serde_json::to_vec(&c).expect("config serialises");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self, cmd: Command) -> RunResult<()> {
        if cmd != Command::Selfcheck {
            self.require_seed()?;
        }
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(config_err(format!("{name} = {v} outside [0, 1]")))
            }
        };
        if self.n == 0 || self.n > 256 {
            return Err(config_err(format!("n = {} outside 1..=256", self.n)));
        }
        if self.k == 0 {
            return Err(config_err("k must be positive"));
        }
        let qpb = EncodingScheme::new(self.scheme).qubits_per_block();
        if self.m == 0 || self.m % qpb != 0 {
            return Err(config_err(format!("{} needs m a positive multiple of {qpb}, got {}", self.scheme, self.m)));
        }
        if !(0.5..=1.0).contains(&self.p) {
            return Err(config_err(format!("p = {} outside [0.5, 1]", self.p)));
        }
        for &e in &self.eps_grid {
            unit("eps", e)?;
        }
        for &z in &self.zeta_grid {
            if !(0.0..=0.5).contains(&z) {
                return Err(config_err(format!("zeta = {z} outside [0, 0.5]")));
            }
        }
        unit("tap_rate", self.tap_rate)?;
        unit("mismatch_tolerance", self.mismatch_tolerance)?;
        unit("flip_noise", self.flip_noise)?;
        unit("eps1", self.eps1)?;
        unit("p_classical", self.p_classical)?;
        if self.q_grid_for(cmd).is_empty() {
            return Err(config_err("q_grid is empty"));
        }
        match cmd {
            Command::AttackCurve => {
                if self.repeats == 0 || self.test_size == 0 || self.modes.is_empty() {
                    return Err(config_err("repeats, test_size and modes must be non-empty"));
                }
                if self.target_bit >= self.out_bits() {
                    return Err(config_err(format!("target_bit {} of {} bits", self.target_bit, self.out_bits())));
                }
                if self.modes.contains(&AttackMode::HpufAdaptive) {
                    if self.scheme != SchemeKind::Bb84 {
                        return Err(config_err("hpuf-adaptive mode needs the bb84 scheme"));
                    }
                    if self.copies < 2 {
                        return Err(config_err("copies must be at least 2"));
                    }
                }
            }
            Command::Protocol => {
                if self.rounds == 0 || self.db_size == 0 {
                    return Err(config_err("rounds and db_size must be positive"));
                }
            }
            Command::Game => {
                if self.trials == 0 || self.q_grid_for(cmd).contains(&0) {
                    return Err(config_err("game needs trials > 0 and q > 0"));
                }
            }
            Command::Bounds => {
                if self.q_grid_for(cmd).contains(&0) {
                    return Err(config_err("bounds need q > 0"));
                }
            }
            Command::Selfcheck => {}
        }
        Ok(())
    }

    pub fn policy(&self) -> VerifyPolicy {
        VerifyPolicy {
            mismatch_tolerance: self.mismatch_tolerance,
        }
    }

    pub fn cpuf(&self, seed: u64) -> RunResult<CpufModel> {
        let model = match self.puf {
            PufKind::XorArbiter => CpufModel::xor_arbiter(self.n, self.k, self.out_bits(), seed)?,
            PufKind::Ideal => CpufModel::ideal(self.n, self.out_bits(), self.p, seed)?,
        };
        Ok(model.with_flip_noise(self.flip_noise))
    }

    fn header(&self, schema: &str) -> String {
        format!(
            "# hlpuf {TOOL_VERSION} schema={schema}/v{SCHEMA_VERSION} config-sha256={} seed={}\n",
            self.hash(),
            self.seed.map(|s| s.to_string()).unwrap_or_default()
        )
    }
}

fn csv_err(e: csv::Error) -> RunError {
    RunError::Sim(Error::Io(e.to_string()))
}

fn rows_to_csv<T: Serialize>(header: String, rows: &[T]) -> RunResult<String> {
    let mut w = csv::Writer::from_writer(header.into_bytes());
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| RunError::Sim(Error::Io(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

struct CurveData {
    seed: u64,
    mode: AttackMode,
    train: CrpDatabase,
    reference: CrpDatabase,
    test: CrpDatabase,
}

fn curve_data(cfg: &ExperimentConfig, seed: u64, max_q: usize) -> RunResult<Vec<CurveData>> {
    let cpuf = cfg.cpuf(seed)?;
    let scheme = EncodingScheme::new(cfg.scheme);
    let device = HpufDevice::new(cpuf.clone(), scheme.clone())?;
    let test = CrpDatabase::sample_clean(&cpuf, cfg.test_size, &mut stream(seed, 1))?;
    cfg.modes
        .iter()
        .map(|&mode| {
            let (train, reference) = match mode {
                AttackMode::Cpuf => {
                    let db = CrpDatabase::sample_clean(&cpuf, max_q, &mut stream(seed, 2))?;
                    (db.clone(), db)
                }
                AttackMode::HlpufWeak => {
                    let qdb = QuantumCrpDatabase::sample(&device, max_q, &mut stream(seed, 3))?;
                    let attack = SplitAttack::new(&scheme, BitPrior::DeviceBits { p: cfg.p }, cfg.stage_model)?;
                    let extracted = split_attack_extract(&qdb, &attack, &mut stream(seed, 4))?;
                    (extracted, qdb.clean_reference()?)
                }
                AttackMode::HpufAdaptive => {
                    multi_copy_database(&device, max_q, cfg.copies, MultiCopyVariant::Full, &mut stream(seed, 5))?
                }
            };
            Ok(CurveData {
                seed,
                mode,
                train,
                reference,
                test: test.clone(),
            })
        })
        .collect()
}

/// Model with untrained weights, the `q = 0` baseline.
fn untrained(cfg: &ExperimentConfig, seed: u64) -> RunResult<LrModel> {
    use rand::Rng;
    let mut rng = stream(seed, 6);
    let dim = feature_transform(&vec![0; cfg.n]).len();
    let w = (0..cfg.k)
        .map(|_| (0..dim).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect())
        .collect();
    Ok(LrModel::from_weights(w)?)
}

/// Accuracy of LR models against `q` for each attack mode. Rows are ordered
/// by seed, mode and q regardless of scheduling.
pub fn attack_curve(cfg: &ExperimentConfig) -> RunResult<Vec<AttackResult>> {
    cfg.validate(Command::AttackCurve)?;
    let seed0 = cfg.require_seed()?;
    let grid = cfg.q_grid_for(Command::AttackCurve);
    let max_q = grid.iter().copied().max().unwrap_or(0);
    let mut data = Vec::new();
    for r in 0..cfg.repeats as u64 {
        data.extend(curve_data(cfg, seed0 + r, max_q)?);
    }
    let jobs: Vec<(&CurveData, usize)> = data.iter().flat_map(|d| grid.iter().map(move |&q| (d, q))).collect();
    jobs.par_iter()
        .map(|&(d, q)| {
            let start = Instant::now();
            let (accuracy, bit_rate, epsilon) = if q == 0 {
                (untrained(cfg, d.seed)?.accuracy(&d.test, cfg.target_bit), None, None)
            } else {
                let train = d.train.truncated(q);
                let reference = d.reference.truncated(q);
                let lr = LrConfig {
                    seed: d.seed,
                    ..cfg.lr.clone()
                };
                let model = lr_train(&train, cfg.target_bit, cfg.k, &lr)?;
                (
                    model.accuracy(&d.test, cfg.target_bit),
                    Some(1.0 - train.bit_error_rate(&reference)?),
                    Some(1.0 - train.full_match_rate(&reference)?),
                )
            };
            Ok(AttackResult {
                seed: d.seed,
                q,
                scheme: cfg.scheme.to_string(),
                k: cfg.k,
                n: cfg.n,
                m: cfg.m,
                mode: d.mode.as_str().to_string(),
                accuracy,
                bit_rate,
                epsilon_measured: epsilon,
                runtime_ms: cfg.record_runtime.then(|| start.elapsed().as_millis() as u64),
            })
        })
        .collect()
}

pub fn cmd_attack_curve(cfg: &ExperimentConfig) -> RunResult<String> {
    let rows = attack_curve(cfg)?;
    let mut buf = cfg.header("attack-curve").into_bytes();
    write_attack_csv(&mut buf, &rows)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// One row of the bounds CSV; blank cells are parameters a curve does not
/// use.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub curve: &'static str,
    pub p: Option<f64>,
    pub m: Option<usize>,
    pub q: Option<usize>,
    pub eps: Option<f64>,
    pub k: Option<usize>,
    pub zeta: Option<f64>,
    pub value: f64,
    pub raw: Option<f64>,
}

impl BoundRow {
    fn new(curve: &'static str, value: f64) -> Self {
        Self {
            curve,
            p: None,
            m: None,
            q: None,
            eps: None,
            k: None,
            zeta: None,
            value,
            raw: None,
        }
    }
}

/// Curves: `p_guess` over p; `p_extract` and `forge` over (eps, q);
/// `p_extract_mc` (split-attack Monte Carlo) with `p_extract_measured` (the
/// bound at the measured per-bit rate) when `trials > 0`; `reuse` over k;
/// `minentropy` over zeta.
pub fn bounds(cfg: &ExperimentConfig) -> RunResult<Vec<BoundRow>> {
    cfg.validate(Command::Bounds)?;
    let seed = cfg.require_seed()?;
    let m = cfg.m;
    let mut rows = Vec::new();
    for i in 0..=10 {
        let p = (50 + 5 * i) as f64 / 100.0;
        let b = p_guess_bound(p)?;
        rows.push(BoundRow {
            p: Some(p),
            raw: Some(b.raw),
            ..BoundRow::new("p_guess", b.value)
        });
    }
    let pg = p_guess_bound(cfg.p)?.value;
    let grid = cfg.q_grid_for(Command::Bounds);
    let scheme = EncodingScheme::new(cfg.scheme);
    for &eps in &cfg.eps_grid {
        for &q in &grid {
            let pe = p_extract_bound(q, eps, m, pg)?;
            let at = |curve| BoundRow {
                p: Some(cfg.p),
                m: Some(m),
                q: Some(q),
                eps: Some(eps),
                ..BoundRow::new(curve, 0.0)
            };
            rows.push(BoundRow { value: pe, ..at("p_extract") });
            rows.push(BoundRow {
                value: forge_bound(pe, cfg.p_classical)?,
                ..at("forge")
            });
            if cfg.trials > 0 && q > 0 {
                let mc = mc_extract_rate(&scheme, cfg.blocks_per_half(), cfg.p, q, eps, cfg.trials, seed)?;
                rows.push(BoundRow {
                    value: mc.tail_rate,
                    raw: Some(mc.per_bit_rate),
                    ..at("p_extract_mc")
                });
                rows.push(BoundRow {
                    value: p_extract_bound(q, eps, m, mc.per_bit_rate)?,
                    ..at("p_extract_measured")
                });
            }
        }
    }
    for k in 0..=cfg.k_max {
        let b = reuse_bound(k, m, cfg.eps1)?;
        rows.push(BoundRow {
            m: Some(m),
            k: Some(k),
            raw: Some(b.raw),
            ..BoundRow::new("reuse", b.value)
        });
    }
    for &zeta in &cfg.zeta_grid {
        rows.push(BoundRow {
            p: Some(cfg.p),
            m: Some(m),
            zeta: Some(zeta),
            ..BoundRow::new("minentropy", minentropy_bound(m, zeta, cfg.p - 0.5)?)
        });
    }
    Ok(rows)
}

pub fn cmd_bounds(cfg: &ExperimentConfig) -> RunResult<String> {
    rows_to_csv(cfg.header("bounds"), &bounds(cfg)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolReport {
    pub tool_version: &'static str,
    pub schema: String,
    pub config_sha256: String,
    pub seed: u64,
    pub scheme: String,
    pub m: usize,
    pub db_size: usize,
    pub reuse_cap: Option<u32>,
    pub session: SessionReport,
}

pub struct ProtocolOutput {
    pub report: ProtocolReport,
    /// Pretty JSON of the report, newline-terminated.
    pub report_json: String,
    /// JSON lines.
    pub transcript: String,
}

pub fn cmd_protocol(cfg: &ExperimentConfig) -> RunResult<ProtocolOutput> {
    cfg.validate(Command::Protocol)?;
    let seed = cfg.require_seed()?;
    let cpuf = cfg.cpuf(seed)?;
    let scheme = EncodingScheme::new(cfg.scheme);
    let mut server = ServerState::enroll(&cpuf, cfg.db_size, scheme.clone(), &mut stream(seed, 1))?
        .with_reuse_cap(cfg.reuse_cap)
        .with_policy(cfg.policy());
    let mut client = ClientState::new(HlpufDevice::new(HpufDevice::new(cpuf, scheme)?).with_policy(cfg.policy()));
    let mut adversary = cfg.adversary.build(cfg.tap_rate);
    let mut session = Session::new(true);
    let report = run_session(
        &mut server,
        &mut client,
        adversary.as_mut(),
        cfg.rounds,
        cfg.audit,
        &mut session,
        &mut stream(seed, 2),
    )?;
    let mut transcript = Vec::new();
    session.write_transcript(&mut transcript)?;
    let report = ProtocolReport {
        tool_version: TOOL_VERSION,
        schema: format!("protocol/v{SCHEMA_VERSION}"),
        config_sha256: cfg.hash(),
        seed,
        scheme: cfg.scheme.to_string(),
        m: cfg.m,
        db_size: cfg.db_size,
        reuse_cap: cfg.reuse_cap,
        session: report,
    };
    let mut report_json = serde_json::to_string_pretty(&report).map_err(|e| RunError::Sim(Error::Io(e.to_string())))?;
    report_json.push('\n');
    Ok(ProtocolOutput {
        report,
        report_json,
        transcript: String::from_utf8(transcript).expect("json is utf-8"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameRow {
    pub target: DeviceKind,
    pub strategy: String,
    pub q: usize,
    pub trials: usize,
    pub wins: usize,
    pub win_rate: f64,
    pub sigma: f64,
    pub lock_aborts: u64,
    pub lock_releases: u64,
}

/// Every applicable (target, strategy) pair at each q.
pub fn game(cfg: &ExperimentConfig) -> RunResult<Vec<GameRow>> {
    cfg.validate(Command::Game)?;
    let seed = cfg.require_seed()?;
    let mut pairs = vec![
        (DeviceKind::Cpuf, Strategy::MeasureThenForge),
        (DeviceKind::Hpuf, Strategy::UniformGuess),
        (DeviceKind::Hpuf, Strategy::MeasureThenForge),
    ];
    if cfg.scheme == SchemeKind::Bb84 && cfg.copies >= 2 {
        pairs.push((DeviceKind::Hpuf, Strategy::MultiCopy { copies: cfg.copies }));
    }
    pairs.extend([
        (DeviceKind::Hlpuf, Strategy::MeasureThenForge),
        (DeviceKind::Hlpuf, Strategy::ReplayServerChallenges),
        (DeviceKind::Hlpuf, Strategy::DirectProbe),
    ]);
    let mut rows = Vec::new();
    for q in cfg.q_grid_for(Command::Game) {
        for &(target, strategy) in &pairs {
            let gc = GameConfig {
                n: cfg.n,
                chains: cfg.k,
                scheme: cfg.scheme,
                blocks_per_half: cfg.blocks_per_half(),
                q,
                trials: cfg.trials,
                seed,
                stage_model: cfg.stage_model,
                lr: cfg.lr.clone(),
                policy: cfg.policy(),
            };
            let out = run_unforgeability_game(target, strategy, &gc)?;
            let name = match strategy {
                Strategy::MultiCopy { copies } => format!("multi-copy-{copies}"),
                s => serde_json::to_value(s)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default(),
            };
            rows.push(GameRow {
                target,
                strategy: name,
                q,
                trials: out.trials,
                wins: out.wins,
                win_rate: out.win_rate(),
                sigma: out.sigma(),
                lock_aborts: out.lock_aborts,
                lock_releases: out.lock_releases,
            });
        }
    }
    Ok(rows)
}

pub fn cmd_game(cfg: &ExperimentConfig) -> RunResult<String> {
    rows_to_csv(cfg.header("game"), &game(cfg)?)
}
