//! Configs as TOML: defaults, hashing, and byte-identical reruns.
//!
//! cargo run --example experiment_config

use hlpuf::runner::{cmd_bounds, ExperimentConfig};

fn main() {
    let text = "seed = 42\nm = 2\nq_grid = [1, 10, 100]\ntrials = 50\n";
    let cfg = ExperimentConfig::from_toml(text).expect("valid config");
    println!("config hash {}", cfg.hash());
    let a = cmd_bounds(&cfg).expect("bounds run");
    let b = cmd_bounds(&cfg).expect("bounds run");
    println!("identical reruns: {}", a == b);
    for line in a.lines().take(4) {
        println!("{line}");
    }
    println!("\nfull config:\n{}", cfg.to_toml().expect("serialises"));
}
