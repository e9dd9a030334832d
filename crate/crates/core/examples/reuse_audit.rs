//! Challenge reuse: how often a passive observer guesses the second half
//! of a challenge that was already accepted k times.
//!
//! cargo run --release --example reuse_audit

use hlpuf::runner::{cmd_protocol, AdversaryKind, ExperimentConfig};

fn main() {
    let cfg = ExperimentConfig {
        seed: Some(12),
        m: 4,
        db_size: 16,
        rounds: 16 * 12,
        adversary: AdversaryKind::Observer,
        audit: true,
        ..ExperimentConfig::default()
    };
    let out = cmd_protocol(&cfg).unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(e.exit_code())
    });
    let audit = out.report.session.audit.expect("audit requested");
    println!("fresh guesses {} (hits {}), ε₁ = {:.4}", audit.fresh_trials, audit.fresh_hits, audit.eps1);
    println!("k  guesses  rate    bound");
    for b in audit.bins {
        println!("{:<2} {:<8} {:.4}  {:.4}", b.k, b.trials, b.rate, b.bound);
    }
}
