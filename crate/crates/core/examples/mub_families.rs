//! Mutually unbiased bases in dimensions 2, 4 and 8, with their unitarity
//! and unbiasedness deviations.
//!
//! cargo run --example mub_families

use hlpuf::qstate::{bb84_family, mub4_family, mub8_family};

fn main() {
    for (name, family) in [("bb84", bb84_family()), ("mub4", mub4_family()), ("mub8", mub8_family())] {
        let (unitary, unbiased) = family.deviations();
        println!(
            "{name}: dimension {}, {} bases, max |U†U − I| {unitary:.1e}, max ||⟨a|b⟩|² − 1/d| {unbiased:.1e}",
            family.dim(),
            family.len()
        );
    }
    let f = mub8_family();
    let overlap = f.state(1, 0).overlap_sq(&f.state(5, 3));
    println!("\n|⟨b(1,0)|b(5,3)⟩|² = {overlap:.6} (1/8 = 0.125)");
}
