//! Recovering a BB84 block from K copies of the same state.
//!
//! Z-measure copies until two outcomes disagree. Agreement all the way means
//! a computational-basis state; a disagreement means the Hadamard basis,
//! and the next unused copy is measured in X for the value.

use rand::Rng;

use crate::error::{Error, Result};
use crate::hybrid::{HpufDevice, SchemeKind};
use crate::qstate::{measure, Basis, PureState};
use crate::rng::{random_bits, SimRng};

use super::{CrpDatabase, DbSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MultiCopyVariant {
    /// Up to K Z-measurements. Basis error 2^{1−K} on Hadamard inputs; a
    /// disagreement on the last copy leaves no copy for the value, which is
    /// then a coin flip.
    #[default]
    Full,
    /// K−1 Z-measurements, always keeping one copy for the X step. Basis
    /// error 2^{2−K} on Hadamard inputs.
    ReserveOne,
}

/// Returns `(value bit, basis bit)`. Consumes the copies.
pub fn multi_copy_extract(copies: Vec<PureState>, variant: MultiCopyVariant, rng: &mut SimRng) -> Result<(u8, u8)> {
    let k = copies.len();
    if k < 2 {
        return Err(Error::OutOfRange(format!("need at least 2 copies, got {k}")));
    }
    if let Some(bad) = copies.iter().find(|c| c.dim() != 2) {
        return Err(Error::UnsupportedDimension(bad.dim()));
    }
    let z = Basis::bb84(0)?;
    let x = Basis::bb84(1)?;
    let z_rounds = match variant {
        MultiCopyVariant::Full => k,
        MultiCopyVariant::ReserveOne => k - 1,
    };
    let mut first = None;
    for i in 0..z_rounds {
        let (o, _) = measure(&copies[i], &z, rng)?;
        match first {
            None => first = Some(o as u8),
            Some(f) if f == o as u8 => {}
            Some(_) => {
                let value = if i + 1 < k {
                    measure(&copies[i + 1], &x, rng)?.0 as u8
                } else {
                    rng.random_range(0..2)
                };
                return Ok((value, 1));
            }
        }
    }
    Ok((first.unwrap_or(0), 0))
}

/// Adaptive extraction from an unlocked BB84 device: `q` random
/// challenges, `copies` fresh evaluations each, every block recovered with
/// [`multi_copy_extract`]. Returns `(extracted, clean)` over the same
/// challenges.
pub fn multi_copy_database(
    device: &HpufDevice,
    q: usize,
    copies: usize,
    variant: MultiCopyVariant,
    rng: &mut SimRng,
) -> Result<(CrpDatabase, CrpDatabase)> {
    if device.scheme().kind() != SchemeKind::Bb84 {
        return Err(Error::SchemeMismatch("multi-copy extraction is defined for BB84".into()));
    }
    if copies < 2 {
        return Err(Error::OutOfRange(format!("need at least 2 copies, got {copies}")));
    }
    let mut extracted = Vec::with_capacity(q);
    let mut clean = Vec::with_capacity(q);
    for _ in 0..q {
        let c = random_bits(rng, device.cpuf().n());
        let evals = (0..copies)
            .map(|_| {
                let (a, b) = device.hpuf_eval(&c)?;
                let mut states = a.into_states();
                states.extend(b.into_states());
                Ok(states)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut bits = Vec::with_capacity(2 * evals[0].len());
        for j in 0..evals[0].len() {
            let group = evals.iter().map(|s| s[j].clone()).collect();
            let (v, b) = multi_copy_extract(group, variant, rng)?;
            bits.extend([v, b]);
        }
        clean.push((c.clone(), device.cpuf().eval(&c)?));
        extracted.push((c, bits));
    }
    Ok((
        CrpDatabase::new(extracted, DbSource::Extracted)?,
        CrpDatabase::new(clean, DbSource::Clean)?,
    ))
}
