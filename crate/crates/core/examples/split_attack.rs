//! Helstrom-optimal split attack: per-stage optima and empirical rates for
//! BB84 and MUB-8 blocks.
//!
//! cargo run --release --example split_attack

use rand::Rng;

use hlpuf::adversary::{BitPrior, SplitAttack, StageModel};
use hlpuf::hybrid::{EncodingScheme, SchemeKind};
use hlpuf::rng::seeded;

fn main() -> hlpuf::Result<()> {
    let mut rng = seeded(5);
    for (kind, prior) in [
        (SchemeKind::Bb84, BitPrior::DeviceBits { p: 0.5 }),
        (SchemeKind::Bb84, BitPrior::DeviceBits { p: 0.75 }),
        (SchemeKind::Mub8, BitPrior::DeviceBits { p: 0.5 }),
    ] {
        let scheme = EncodingScheme::new(kind);
        let attack = SplitAttack::new(&scheme, prior, StageModel::Genie)?;
        let width = scheme.bits_per_block();
        let p0 = match prior {
            BitPrior::DeviceBits { p } => p,
            BitPrior::UniformFamily => 0.5,
        };
        let n = 20_000;
        let mut hits = vec![0usize; width];
        for _ in 0..n {
            let truth: Vec<u8> = (0..width).map(|_| (rng.random::<f64>() >= p0) as u8).collect();
            let guess = attack.extract_block(&scheme.encode_block(&truth)?, &truth, &mut rng)?;
            for (h, (g, t)) in hits.iter_mut().zip(guess.iter().zip(&truth)) {
                *h += (g == t) as usize;
            }
        }
        println!("{kind} with P(0) = {p0}:");
        for (s, (opt, h)) in attack.expected_bit_accuracy().iter().zip(&hits).enumerate() {
            println!("  stage {s}: optimum {opt:.4}, measured {:.4}", *h as f64 / n as f64);
        }
    }
    Ok(())
}
