//! Universal unforgeability game: win rates of weak and adaptive
//! strategies against CPUF, HPUF and HLPUF targets.
//!
//! cargo run --release --example unforgeability_game

use hlpuf::adversary::{run_unforgeability_game, DeviceKind, GameConfig, Strategy};

fn main() -> hlpuf::Result<()> {
    let cfg = GameConfig {
        q: 150,
        trials: 300,
        seed: 2,
        ..GameConfig::default()
    };
    let cases = [
        (DeviceKind::Cpuf, Strategy::MeasureThenForge),
        (DeviceKind::Hpuf, Strategy::UniformGuess),
        (DeviceKind::Hpuf, Strategy::MeasureThenForge),
        (DeviceKind::Hpuf, Strategy::MultiCopy { copies: 8 }),
        (DeviceKind::Hlpuf, Strategy::MeasureThenForge),
        (DeviceKind::Hlpuf, Strategy::ReplayServerChallenges),
        (DeviceKind::Hlpuf, Strategy::MultiCopy { copies: 8 }),
        (DeviceKind::Hlpuf, Strategy::DirectProbe),
    ];
    for (target, strategy) in cases {
        let out = run_unforgeability_game(target, strategy, &cfg)?;
        println!(
            "{target:?} / {strategy:?}: win rate {:.3} ± {:.3}, lock aborts {}",
            out.win_rate(),
            out.sigma(),
            out.lock_aborts
        );
    }
    Ok(())
}
