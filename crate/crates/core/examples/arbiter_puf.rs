//! XOR arbiter PUFs under the additive delay model: response quality and
//! the model file format.
//!
//! cargo run --example arbiter_puf

use hlpuf::cpuf::{quality_metrics, to_text, CpufModel};
use hlpuf::rng::seeded;

fn main() -> hlpuf::Result<()> {
    for k in [1, 2, 4] {
        let puf = CpufModel::xor_arbiter(64, k, 8, 7)?.with_flip_noise(0.02);
        let q = quality_metrics(&puf, 20_000, &mut seeded(k as u64))?;
        println!(
            "k={k}: worst bit bias {:.3}, inter-device distance {:.3}, intra-device distance {:.3}",
            q.bias_estimate, q.inter_distance, q.intra_distance
        );
    }
    let small = CpufModel::xor_arbiter(4, 1, 2, 1)?;
    println!("\nmodel file for a 4-stage arbiter with 2 outputs:\n{}", to_text(&small));
    println!("response to 0110: {:?}", small.eval(&[0, 1, 1, 0])?);
    Ok(())
}
