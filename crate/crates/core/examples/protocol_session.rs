//! Authentication sessions over a channel held by different adversaries,
//! with a few lines of the JSON-lines transcript.
//!
//! cargo run --release --example protocol_session

use hlpuf::runner::{cmd_protocol, AdversaryKind, ExperimentConfig};

fn main() {
    for adversary in [
        AdversaryKind::Honest,
        AdversaryKind::InterceptForward,
        AdversaryKind::InterceptResend,
        AdversaryKind::Replay,
        AdversaryKind::ForceFail,
    ] {
        let cfg = ExperimentConfig {
            seed: Some(4),
            m: 4,
            rounds: 400,
            db_size: 200,
            adversary,
            ..ExperimentConfig::default()
        };
        let out = match cmd_protocol(&cfg) {
            Ok(o) => o,
            Err(e) => {
                eprintln!("{e}");
                std::process::exit(e.exit_code());
            }
        };
        let s = &out.report.session;
        println!(
            "{:<17} ran {:>3}: accepted {:>3}, client aborts {:>3}, server rejects {:>3}, retired {:>3}, exhausted {}",
            s.adversary, s.rounds_run, s.accepted, s.client_aborts, s.server_rejects, s.retired, s.exhausted
        );
        if adversary == AdversaryKind::InterceptResend {
            for line in out.transcript.lines().take(6) {
                println!("    {line}");
            }
        }
    }
}
