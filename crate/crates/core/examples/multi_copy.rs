//! Recovering BB84 blocks from K copies: basis error against 2^(1−K).
//!
//! cargo run --release --example multi_copy

use rand::Rng;

use hlpuf::adversary::{multi_copy_extract, MultiCopyVariant};
use hlpuf::qstate::bb84_state;
use hlpuf::rng::seeded;

fn main() -> hlpuf::Result<()> {
    let mut rng = seeded(9);
    let trials = 20_000;
    println!("K  hadamard-basis error  2^(1-K)  block error (uniform inputs)");
    for k in 2..=8 {
        let (mut h_err, mut h_n, mut block_err) = (0, 0, 0);
        for _ in 0..trials {
            let (v, b) = (rng.random_range(0..2u8), rng.random_range(0..2u8));
            let copies = (0..k).map(|_| bb84_state(v, b)).collect::<hlpuf::Result<Vec<_>>>()?;
            let (gv, gb) = multi_copy_extract(copies, MultiCopyVariant::Full, &mut rng)?;
            if b == 1 {
                h_n += 1;
                h_err += (gb != b) as usize;
            }
            block_err += ((gv, gb) != (v, b)) as usize;
        }
        println!(
            "{k}  {:.4}                {:.4}   {:.4}",
            h_err as f64 / h_n as f64,
            2f64.powi(1 - k),
            block_err as f64 / trials as f64
        );
    }
    Ok(())
}
