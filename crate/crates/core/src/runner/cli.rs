//! Command-line surface of the `hlpuf` binary.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use super::{
    cmd_attack_curve, cmd_bounds, cmd_game, cmd_protocol, cmd_selfcheck, config_err, AdversaryKind, AttackMode,
    Command, ExperimentConfig, PufKind, RunError, RunResult, SelfcheckOptions, EXIT_CONFIG, EXIT_INVARIANT, EXIT_OK,
};
use crate::adversary::StageModel;
use crate::cpuf::{from_text, to_text, CpufModel};
use crate::hybrid::SchemeKind;

/// Parses a kebab-case enum name through its serde representation.
fn parse_name<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase())).map_err(|e| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "hlpuf", version, about = "Hybrid locked PUF simulation lab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// LR accuracy against query budget for the cpuf, hpuf-adaptive and
    /// hlpuf-weak databases (CSV).
    AttackCurve(ExpArgs),
    /// Guessing, extraction, forging, reuse and min-entropy bounds (CSV).
    Bounds(ExpArgs),
    /// One authentication session: report JSON plus a JSON-lines transcript.
    Protocol(ExpArgs),
    /// Unforgeability game win rates per target and strategy (CSV).
    Game(ExpArgs),
    /// Invariant checks over every module.
    Selfcheck(SelfcheckArgs),
    /// CPUF model files.
    #[command(subcommand)]
    Model(ModelCmd),
}

#[derive(Debug, Args, Default)]
pub struct ExpArgs {
    /// TOML config; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Qubits per response half.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, value_parser = parse_name::<SchemeKind>)]
    pub scheme: Option<SchemeKind>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, value_parser = parse_name::<PufKind>)]
    pub puf: Option<PufKind>,
    #[arg(long, value_delimiter = ',')]
    pub q_grid: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub eps_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub test_size: Option<usize>,
    #[arg(long)]
    pub target_bit: Option<usize>,
    #[arg(long, value_delimiter = ',', value_parser = parse_name::<AttackMode>)]
    pub modes: Option<Vec<AttackMode>>,
    #[arg(long)]
    pub copies: Option<usize>,
    #[arg(long, value_parser = parse_name::<StageModel>)]
    pub stage_model: Option<StageModel>,
    #[arg(long)]
    pub lr_epochs: Option<usize>,
    #[arg(long)]
    pub lr_restarts: Option<usize>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub db_size: Option<usize>,
    /// Accepted uses before retirement; 0 means unlimited.
    #[arg(long)]
    pub reuse_cap: Option<u32>,
    #[arg(long, value_parser = parse_name::<AdversaryKind>)]
    pub adversary: Option<AdversaryKind>,
    #[arg(long)]
    pub tap_rate: Option<f64>,
    #[arg(long)]
    pub audit: bool,
    #[arg(long)]
    pub mismatch_tolerance: Option<f64>,
    /// Per-bit flip rate of the client's CPUF on each lock query
    #[arg(long)]
    pub flip_noise: Option<f64>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub eps1: Option<f64>,
    #[arg(long)]
    pub p_classical: Option<f64>,
    /// Fill the runtime_ms column (outputs then differ between runs).
    #[arg(long)]
    pub record_runtime: bool,
    /// Transcript path for `protocol`; defaults to `<out>.jsonl`.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
}

macro_rules! set {
    ($cfg:ident, $args:ident, $($field:ident),*) => {
        $(if let Some(v) = $args.$field.clone() { $cfg.$field = v; })*
    };
}

impl ExpArgs {
    pub fn resolve(&self) -> RunResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        set!(cfg, self, n, k, m, scheme, p, puf, trials, repeats, test_size, target_bit, copies, stage_model);
        set!(cfg, self, rounds, db_size, adversary, tap_rate, mismatch_tolerance, flip_noise, k_max, eps1, p_classical, eps_grid);
        set!(cfg, self, modes);
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        if self.q_grid.is_some() {
            cfg.q_grid = self.q_grid.clone();
        }
        if let Some(e) = self.lr_epochs {
            cfg.lr.epochs = e;
        }
        if let Some(r) = self.lr_restarts {
            cfg.lr.restarts = r;
        }
        if let Some(c) = self.reuse_cap {
            cfg.reuse_cap = (c > 0).then_some(c);
        }
        cfg.audit |= self.audit;
        cfg.record_runtime |= self.record_runtime;
        for (slot, v) in [(&mut cfg.out, &self.out), (&mut cfg.transcript, &self.transcript)] {
            if v.is_some() {
                *slot = v.clone();
            }
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args, Default)]
pub struct SelfcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Negative control: damage the MUB-8 family so its check fails.
    #[arg(long)]
    pub corrupt_mub: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ModelCmd {
    /// Writes a fresh random CPUF model file.
    Export {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 4)]
        out_bits: usize,
        /// Ideal biased PUF with this p instead of an XOR arbiter.
        #[arg(long)]
        ideal_p: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Loads a model file and evaluates challenges given as bit strings.
    Eval {
        file: PathBuf,
        challenges: Vec<String>,
    },
}

fn write_output(path: Option<&Path>, text: &str) -> RunResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| config_err(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn bits(s: &str) -> RunResult<Vec<u8>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(config_err(format!("challenge `{s}` is not a bit string"))),
        })
        .collect()
}

fn run_experiment(cmd: Command, args: &ExpArgs) -> RunResult<()> {
    let cfg = args.resolve()?;
    cfg.validate(cmd)?;
    if let Some(t) = cfg.threads {
        // Already initialised is fine: results never depend on thread count.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match cmd {
        Command::AttackCurve => write_output(cfg.out.as_deref(), &cmd_attack_curve(&cfg)?),
        Command::Bounds => write_output(cfg.out.as_deref(), &cmd_bounds(&cfg)?),
        Command::Game => write_output(cfg.out.as_deref(), &cmd_game(&cfg)?),
        Command::Protocol => {
            let out = cmd_protocol(&cfg)?;
            write_output(cfg.out.as_deref(), &out.report_json)?;
            let transcript = cfg.transcript.clone().or_else(|| {
                cfg.out.as_ref().map(|p| {
                    let mut s = p.clone().into_os_string();
                    s.push(".jsonl");
                    PathBuf::from(s)
                })
            });
            if let Some(t) = transcript {
                write_output(Some(&t), &out.transcript)?;
            }
            Ok(())
        }
        Command::Selfcheck => unreachable!("selfcheck has its own arguments"),
    }
}

fn run_model(cmd: &ModelCmd) -> RunResult<()> {
    match cmd {
        ModelCmd::Export {
            seed,
            n,
            k,
            out_bits,
            ideal_p,
            out,
        } => {
            let model = match ideal_p {
                Some(p) => CpufModel::ideal(*n, *out_bits, *p, *seed)?,
                None => CpufModel::xor_arbiter(*n, *k, *out_bits, *seed)?,
            };
            write_output(out.as_deref(), &to_text(&model))
        }
        ModelCmd::Eval { file, challenges } => {
            let text = std::fs::read_to_string(file).map_err(|e| config_err(format!("{}: {e}", file.display())))?;
            let model = from_text(&text)?;
            let mut out = String::new();
            for c in challenges {
                let y = model.eval(&bits(c)?)?;
                out.push_str(&format!("{c} {}\n", y.iter().map(|b| char::from(b'0' + b)).collect::<String>()));
            }
            write_output(None, &out)
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result: RunResult<i32> = match &cli.command {
        Cmd::AttackCurve(a) => run_experiment(Command::AttackCurve, a).map(|_| EXIT_OK),
        Cmd::Bounds(a) => run_experiment(Command::Bounds, a).map(|_| EXIT_OK),
        Cmd::Protocol(a) => run_experiment(Command::Protocol, a).map(|_| EXIT_OK),
        Cmd::Game(a) => run_experiment(Command::Game, a).map(|_| EXIT_OK),
        Cmd::Selfcheck(a) => {
            let report = cmd_selfcheck(&SelfcheckOptions {
                seed: a.seed,
                corrupt_mub: a.corrupt_mub,
            });
            write_output(a.out.as_deref(), &report.summary())
                .map(|_| if report.all_passed() { EXIT_OK } else { EXIT_INVARIANT })
        }
        Cmd::Model(m) => run_model(m).map(|_| EXIT_OK),
    };
    result.unwrap_or_else(|e: RunError| {
        eprintln!("hlpuf: {e}");
        e.exit_code()
    })
}

/// Parses `args` (program name first) and runs. Usage errors exit with 2.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "seed = 1\nn = 20\nm = 2\n").unwrap();
        let args = ExpArgs {
            config: Some(path),
            n: Some(24),
            reuse_cap: Some(0),
            q_grid: Some(vec![5, 6]),
            ..Default::default()
        };
        let cfg = args.resolve().unwrap();
        assert_eq!((cfg.seed, cfg.n, cfg.m, cfg.reuse_cap), (Some(1), 24, 2, None));
        assert_eq!(cfg.q_grid, Some(vec![5, 6]));
    }

    #[test]
    fn enum_names_parse() {
        assert_eq!(parse_name::<AttackMode>("hlpuf-weak"), Ok(AttackMode::HlpufWeak));
        assert_eq!(parse_name::<SchemeKind>("MUB8"), Ok(SchemeKind::Mub8));
        assert!(parse_name::<AdversaryKind>("nobody").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(main_from(["hlpuf", "bounds"]), EXIT_CONFIG);
        assert_eq!(main_from(["hlpuf", "bounds", "--seed", "1", "--p", "2"]), EXIT_CONFIG);
        assert_eq!(main_from(["hlpuf", "no-such-command"]), EXIT_CONFIG);
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("b.csv");
        let out = out.to_str().unwrap();
        assert_eq!(main_from(["hlpuf", "bounds", "--seed", "1", "--trials", "0", "--out", out]), EXIT_OK);
        let sc = dir.path().join("sc.txt");
        let sc = sc.to_str().unwrap();
        assert_eq!(main_from(["hlpuf", "selfcheck", "--corrupt-mub", "--out", sc]), EXIT_INVARIANT);
    }
}
