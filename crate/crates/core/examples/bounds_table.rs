//! Closed-form bounds next to Monte Carlo extraction rates.
//!
//! cargo run --release --example bounds_table

use hlpuf::analytics::{mc_extract_rate, minentropy_bound, p_extract_bound, p_guess_bound, reuse_bound};
use hlpuf::hybrid::EncodingScheme;

fn main() -> hlpuf::Result<()> {
    for p in [0.5, 0.55, 0.6] {
        let b = p_guess_bound(p)?;
        println!("p_guess({p}) = {:.6} (raw {:.6})", b.value, b.raw);
    }
    let scheme = EncodingScheme::bb84();
    println!("\nm  q   eps  bound@0.8536  monte-carlo  bound@measured");
    for (m, q, eps) in [(1, 10, 0.0), (1, 10, 0.2), (2, 10, 0.1), (1, 100, 0.2)] {
        let at = p_extract_bound(q, eps, m, p_guess_bound(0.5)?.value)?;
        let mc = mc_extract_rate(&scheme, m, 0.5, q, eps, 2000, 17)?;
        let measured = p_extract_bound(q, eps, m, mc.per_bit_rate)?;
        println!("{m}  {q:<3} {eps:.1}  {at:.6}      {:.6}     {measured:.6}", mc.tail_rate);
    }
    println!("\nreuse bound, m = 8, ε₁ = 0: k=1 {:.6}, k=16 {:.6}", reuse_bound(1, 8, 0.0)?.value, reuse_bound(16, 8, 0.0)?.value);
    println!("min-entropy bound, m = 10: ζ=0.01 {:.4}, δ=0.1 {:.4}", minentropy_bound(10, 0.01, 0.0)?, minentropy_bound(10, 0.0, 0.1)?);
    Ok(())
}
