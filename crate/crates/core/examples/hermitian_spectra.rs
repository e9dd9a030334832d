//! Small dense Hermitian matrices: spectra, trace distance and the
//! Helstrom bound for pairs of mixed states.
//!
//! cargo run --example hermitian_spectra

use hlpuf::qstate::{bb84_state, hermitian_eigenvalues, helstrom_success, mixture, trace_distance};

fn main() -> hlpuf::Result<()> {
    let half = |a, b| mixture(&[(bb84_state(a, 0).unwrap(), 0.5), (bb84_state(b, 1).unwrap(), 0.5)]);
    // Value bit 0 versus value bit 1, basis unknown.
    let rho0 = half(0, 0)?;
    let rho1 = half(1, 1)?;
    let diff = rho0.matrix() - rho1.matrix();
    println!("spectrum of ρ0 − ρ1: {:?}", hermitian_eigenvalues(&diff));
    println!("trace distance {:.6}", trace_distance(&rho0, &rho1)?);
    println!("Helstrom success {:.6} (½ + √2/4 = 0.853553)", helstrom_success(&rho0, &rho1, 0.5)?);
    Ok(())
}
