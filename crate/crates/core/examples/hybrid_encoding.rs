//! Hybrid PUF responses: classical bits encoded into BB84 or MUB blocks,
//! the lock that checks the first half, and server-side verification.
//!
//! cargo run --example hybrid_encoding

use hlpuf::cpuf::CpufModel;
use hlpuf::hybrid::{server_encode, server_verify, EncodingScheme, HlpufDevice, HpufDevice, Role, SchemeKind, VerifyPolicy};
use hlpuf::rng::{random_bits, seeded};

fn main() -> hlpuf::Result<()> {
    let mut rng = seeded(3);
    for kind in [SchemeKind::Bb84, SchemeKind::Mub4, SchemeKind::Mub8] {
        let scheme = EncodingScheme::new(kind);
        let out_bits = 2 * 2 * scheme.bits_per_block();
        let cpuf = CpufModel::xor_arbiter(32, 2, out_bits, 11)?;
        let mut lock = HlpufDevice::new(HpufDevice::new(cpuf.clone(), scheme.clone())?);
        let x = random_bits(&mut rng, 32);
        let y = cpuf.eval(&x)?;
        let (_, first) = server_encode(&scheme, (&x, &y), Role::First)?;
        let (_, expected) = server_encode(&scheme, (&x, &y), Role::Second)?;

        let released = lock.lock_query(&x, first.states(), &mut rng)?;
        let refused = lock.lock_query(&x, &[], &mut rng)?;
        let verdict = match released {
            hlpuf::hybrid::LockOutput::Released(second) => {
                format!("{:?}", server_verify(&scheme, &expected, second.states(), VerifyPolicy::default(), &mut rng)?)
            }
            hlpuf::hybrid::LockOutput::Abort => "lock aborted".into(),
        };
        println!(
            "{kind}: {} bits per block on {} qubit(s), response {y:?}; honest query {verdict}, empty first half aborts: {}",
            scheme.bits_per_block(),
            scheme.qubits_per_block(),
            refused.is_abort()
        );
    }
    Ok(())
}
