//! Logistic-regression modelling of an XOR arbiter PUF from clean,
//! multi-copy and split-extracted databases: a small attack curve as CSV.
//!
//! cargo run --release --example lr_attack_curve

use hlpuf::adversary::LrConfig;
use hlpuf::runner::{cmd_attack_curve, ExperimentConfig};

fn main() {
    let cfg = ExperimentConfig {
        seed: Some(1),
        n: 24,
        k: 2,
        q_grid: Some(vec![0, 500, 2000, 8000]),
        test_size: 4000,
        lr: LrConfig {
            epochs: 100,
            restarts: 3,
            ..LrConfig::default()
        },
        ..ExperimentConfig::default()
    };
    match cmd_attack_curve(&cfg) {
        Ok(csv) => print!("{csv}"),
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}
