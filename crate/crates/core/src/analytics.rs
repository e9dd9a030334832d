//! Closed-form security bounds and the Monte Carlo estimators checked
//! against them.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::adversary::split::{BitPrior, SplitAttack, StageModel};
use crate::error::{Error, Result};
use crate::hybrid::EncodingScheme;
use crate::rng::stream;

/// A bound value clamped into `[0, 1]` plus the raw expression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bound {
    pub value: f64,
    pub raw: f64,
}

impl Bound {
    fn clamped(raw: f64) -> Self {
        Self {
            value: raw.clamp(0.0, 1.0),
            raw,
        }
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) || v.is_nan() {
        return Err(Error::OutOfRange(format!("{name} = {v} outside [0, 1]")));
    }
    Ok(())
}

/// Single-bit guessing bound `p·(1 + √(p² + (1−p)²))` for CPUF randomness
/// `p ∈ [½, 1]`.
pub fn p_guess_bound(p: f64) -> Result<Bound> {
    if !(0.5..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("p = {p} outside [0.5, 1]")));
    }
    Ok(Bound::clamped(p * (1.0 + (p * p + (1.0 - p) * (1.0 - p)).sqrt())))
}

/// `ln C(n, k)` by summing logs; exact enough for `n` up to 10⁶.
fn ln_choose(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// Probability that at least `⌈(1−ε)q⌉` of `q` responses are extracted in
/// full, each with probability `p_guess^{2m}`.
pub fn p_extract_bound(q: usize, eps: f64, m: usize, p_guess: f64) -> Result<f64> {
    check_unit("eps", eps)?;
    check_unit("p_guess", p_guess)?;
    if q == 0 {
        return Err(Error::OutOfRange("q must be positive".into()));
    }
    let s = p_guess.powi((2 * m) as i32);
    Ok(binomial_upper_tail(q, threshold(q, eps), s))
}

/// `⌈(1−ε)q⌉`, guarding against float noise just above an integer.
pub fn threshold(q: usize, eps: f64) -> usize {
    let t = (1.0 - eps) * q as f64;
    let r = t.round();
    if (t - r).abs() < 1e-9 {
        r as usize
    } else {
        t.ceil() as usize
    }
}

/// `P(X ≥ k0)` for `X ~ Bin(q, s)`, accumulated in log space.
pub fn binomial_upper_tail(q: usize, k0: usize, s: f64) -> f64 {
    if k0 == 0 {
        return 1.0;
    }
    if k0 > q {
        return 0.0;
    }
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let (ls, lf) = (s.ln(), (1.0 - s).ln());
    let terms: Vec<f64> = (k0..=q)
        .map(|k| ln_choose(q, k) + k as f64 * ls + (q - k) as f64 * lf)
        .collect();
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - top).exp()).sum();
    (top + sum.ln()).exp().clamp(0.0, 1.0)
}

/// `p_extract · p_forge^classical`.
pub fn forge_bound(p_extract: f64, p_classical: f64) -> Result<f64> {
    check_unit("p_extract", p_extract)?;
    check_unit("p_classical", p_classical)?;
    Ok(p_extract * p_classical)
}

/// `ε₁ + k·2^{−m}` for a challenge reused `k` times.
pub fn reuse_bound(k: usize, m: usize, eps1: f64) -> Result<Bound> {
    check_unit("eps1", eps1)?;
    Ok(Bound::clamped(eps1 + k as f64 * 2f64.powi(-(m as i32))))
}

/// Binary entropy in bits.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// `m·(1 − h(ζ) − log₂(1 + 2δ_r))`.
pub fn minentropy_bound(m: usize, zeta: f64, delta_r: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&zeta) {
        return Err(Error::OutOfRange(format!("zeta = {zeta} outside [0, 0.5]")));
    }
    if !(0.0..=0.5).contains(&delta_r) {
        return Err(Error::OutOfRange(format!("delta_r = {delta_r} outside [0, 0.5]")));
    }
    Ok(m as f64 * (1.0 - binary_entropy(zeta) - (1.0 + 2.0 * delta_r).log2()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub eps: f64,
    pub q: usize,
    pub m: usize,
    pub p: f64,
    pub p_guess: f64,
    pub p_extract: f64,
}

/// `p_extract` over an ε × q grid with `p_guess` from [`p_guess_bound`].
pub fn pextract_curve(eps: &[f64], qs: &[usize], m: usize, p: f64) -> Result<Vec<CurvePoint>> {
    let pg = p_guess_bound(p)?.value;
    let mut out = Vec::with_capacity(eps.len() * qs.len());
    for &e in eps {
        for &q in qs {
            out.push(CurvePoint {
                eps: e,
                q,
                m,
                p,
                p_guess: pg,
                p_extract: p_extract_bound(q, e, m, pg)?,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McExtract {
    pub trials: usize,
    /// Fraction of single bits recovered correctly.
    pub per_bit_rate: f64,
    /// Fraction of halves recovered without any bit error.
    pub full_half_rate: f64,
    /// Fraction of trials in which at least `⌈(1−ε)q⌉` of `q` halves were
    /// recovered in full.
    pub tail_rate: f64,
    /// Total bits scored for `per_bit_rate`.
    pub bits_scored: usize,
}

/// Simulates split-attack extraction of `q` encoded halves of `m` blocks
/// each, with response bits drawn i.i.d. with `P(0) = p`. Trials run in
/// parallel on per-trial streams of `seed`.
pub fn mc_extract_rate(
    scheme: &EncodingScheme,
    m: usize,
    p: f64,
    q: usize,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<McExtract> {
    check_unit("eps", eps)?;
    if !(0.5..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("p = {p} outside [0.5, 1]")));
    }
    if q == 0 || trials == 0 || m == 0 {
        return Err(Error::OutOfRange("m, q and trials must be positive".into()));
    }
    let attack = SplitAttack::new(scheme, BitPrior::DeviceBits { p }, StageModel::Genie)?;
    let bpb = scheme.bits_per_block();
    let need = threshold(q, eps);
    let per_trial = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, t as u64);
            let (mut bits_ok, mut full) = (0usize, 0usize);
            for _ in 0..q {
                let mut all = true;
                for _ in 0..m {
                    let truth: Vec<u8> = (0..bpb).map(|_| (rng.random::<f64>() >= p) as u8).collect();
                    let state = scheme.encode_block(&truth)?;
                    let guess = attack.extract_block(&state, &truth, &mut rng)?;
                    let ok = guess.iter().zip(&truth).filter(|(a, b)| a == b).count();
                    bits_ok += ok;
                    all &= ok == bpb;
                }
                full += all as usize;
            }
            Ok((bits_ok, full))
        })
        .collect::<Result<Vec<_>>>()?;
    let bits_scored = trials * q * m * bpb;
    let bits_ok: usize = per_trial.iter().map(|r| r.0).sum();
    let full: usize = per_trial.iter().map(|r| r.1).sum();
    let hits = per_trial.iter().filter(|r| r.1 >= need).count();
    Ok(McExtract {
        trials,
        per_bit_rate: bits_ok as f64 / bits_scored as f64,
        full_half_rate: full as f64 / (trials * q) as f64,
        tail_rate: hits as f64 / trials as f64,
        bits_scored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn p_guess_examples() {
        assert!((p_guess_bound(0.5).unwrap().value - 0.853_553_390_593_273_7).abs() < 1e-12);
        let one = p_guess_bound(1.0).unwrap();
        assert_eq!((one.value, one.raw), (1.0, 2.0));
        let b = p_guess_bound(0.6).unwrap();
        assert!((b.raw - 0.6 * (1.0 + 0.52f64.sqrt())).abs() < 1e-12);
        assert!(b.raw > 1.03 && b.value == 1.0);
        assert!(p_guess_bound(0.4).is_err());
    }

    /// Direct oracle: the binomial sum in linear space with exact integer
    /// binomial coefficients.
    fn naive_tail(q: u64, k0: u64, s: f64) -> f64 {
        let choose = |n: u64, k: u64| -> f64 { (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64) };
        (k0..=q).map(|k| choose(q, k) * s.powi(k as i32) * (1.0 - s).powi((q - k) as i32)).sum()
    }

    #[test]
    fn p_extract_examples() {
        assert_eq!(p_extract_bound(50, 1.0, 4, 0.7).unwrap(), 1.0);
        let pg: f64 = 0.8;
        assert!((p_extract_bound(1, 0.0, 3, pg).unwrap() - pg.powi(6)).abs() < 1e-12);
        // p_guess^{2m} = ½ with m = 1.
        let v = p_extract_bound(10, 0.2, 1, 0.5f64.sqrt()).unwrap();
        assert!((v - 56.0 / 1024.0).abs() < 1e-12, "{v}");
        assert_eq!(threshold(10, 0.2), 8);
        assert_eq!(threshold(10, 0.15), 9);
    }

    #[test]
    fn tail_survives_large_inputs() {
        let v = p_extract_bound(1_000_000, 0.1, 128, 0.99).unwrap();
        assert!(v.is_finite() && (0.0..=1.0).contains(&v));
        let small = p_extract_bound(1000, 0.0, 128, 0.85).unwrap();
        assert_eq!(small, 0.0);
    }

    #[test]
    fn forge_and_reuse_examples() {
        assert_eq!(forge_bound(1.0, 0.3).unwrap(), 0.3);
        assert_eq!(forge_bound(0.0, 0.3).unwrap(), 0.0);
        assert!((forge_bound(0.0546875, 0.9).unwrap() - 0.04921875).abs() < 1e-15);
        assert_eq!(reuse_bound(0, 7, 0.0).unwrap().value, 0.0);
        assert!((reuse_bound(1, 10, 0.0).unwrap().value - 1.0 / 1024.0).abs() < 1e-15);
        assert!((reuse_bound(3, 4, 0.01).unwrap().value - 0.1975).abs() < 1e-15);
        let big = reuse_bound(40, 2, 0.0).unwrap();
        assert_eq!((big.value, big.raw), (1.0, 10.0));
    }

    #[test]
    fn minentropy_examples() {
        assert_eq!(minentropy_bound(12, 0.0, 0.0).unwrap(), 12.0);
        assert!(minentropy_bound(12, 0.0, 0.5).unwrap().abs() < 1e-12);
        // h(0.01) = 0.0807931 by direct evaluation.
        assert!((binary_entropy(0.01) - 0.080_793_1).abs() < 1e-7);
        assert!((minentropy_bound(10, 0.01, 0.0).unwrap() - 9.192_07).abs() < 1e-5);
        assert!(minentropy_bound(4, 0.6, 0.0).is_err());
    }

    #[test]
    fn curve_endpoints_and_interior() {
        let pts = pextract_curve(&[0.0, 0.1, 0.3], &[10, 40], 1, 0.5).unwrap();
        assert_eq!(pts.len(), 6);
        for p in &pts {
            assert_eq!(p.p_extract, p_extract_bound(p.q, p.eps, 1, p.p_guess).unwrap());
        }
        // Interior point against the linear-space oracle.
        let s = 0.853_553_390_593_273_7f64.powi(2);
        assert!((pts[2].p_extract - naive_tail(10, 9, s)).abs() < 1e-12);
        assert!(pts[0].p_extract <= pts[2].p_extract && pts[2].p_extract <= pts[4].p_extract);
    }

    proptest! {
        #[test]
        fn tail_matches_naive_sum(q in 1u64..60, k0 in 0u64..60, s in 0.0f64..1.0) {
            let k0 = k0.min(q);
            let a = binomial_upper_tail(q as usize, k0 as usize, s);
            prop_assert!((a - naive_tail(q, k0, s)).abs() < 1e-9);
        }

        #[test]
        fn p_extract_monotone(q in 1usize..200, e1 in 0.0f64..1.0, e2 in 0.0f64..1.0, g1 in 0.5f64..1.0, g2 in 0.5f64..1.0, m in 1usize..8) {
            let (elo, ehi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            let (glo, ghi) = if g1 < g2 { (g1, g2) } else { (g2, g1) };
            let a = p_extract_bound(q, elo, m, glo).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(a <= p_extract_bound(q, ehi, m, glo).unwrap() + 1e-12);
            prop_assert!(a <= p_extract_bound(q, elo, m, ghi).unwrap() + 1e-12);
        }

        #[test]
        fn minentropy_decreasing(m in 1usize..64, z1 in 0.0f64..0.5, z2 in 0.0f64..0.5, d1 in 0.0f64..0.5, d2 in 0.0f64..0.5) {
            let (zlo, zhi) = if z1 < z2 { (z1, z2) } else { (z2, z1) };
            let (dlo, dhi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            let base = minentropy_bound(m, zlo, dlo).unwrap();
            prop_assert!(base >= minentropy_bound(m, zhi, dlo).unwrap() - 1e-12);
            prop_assert!(base >= minentropy_bound(m, zlo, dhi).unwrap() - 1e-12);
        }
    }

    #[test]
    fn mc_single_half_is_squared_bit_rate() {
        let s = EncodingScheme::bb84();
        let mc = mc_extract_rate(&s, 1, 0.5, 1, 0.0, 40_000, 3).unwrap();
        let pb = mc.per_bit_rate;
        let expected = pb * pb;
        // Both the tail rate and the plugged-in per-bit rate are estimates.
        let var_pb = pb * (1.0 - pb) / mc.bits_scored as f64;
        let sigma = (expected * (1.0 - expected) / mc.trials as f64 + 4.0 * pb * pb * var_pb).sqrt();
        assert!((mc.tail_rate - expected).abs() < 3.0 * sigma, "{mc:?}");
    }

    #[test]
    fn mc_degenerate_prior_is_certain() {
        let mc = mc_extract_rate(&EncodingScheme::bb84(), 4, 1.0, 5, 0.0, 50, 1).unwrap();
        assert_eq!((mc.per_bit_rate, mc.tail_rate), (1.0, 1.0));
    }

    #[test]
    fn mc_decays_geometrically_in_m() {
        // Regress ln(full-half rate) on m; the slope should be 2·ln(per-bit).
        let s = EncodingScheme::bb84();
        let ms = [1usize, 2, 3, 4, 5, 6];
        let runs: Vec<McExtract> = ms.iter().map(|&m| mc_extract_rate(&s, m, 0.5, 200, 1.0, 100, 10 + m as u64).unwrap()).collect();
        let xs: Vec<f64> = ms.iter().map(|&m| m as f64).collect();
        let ys: Vec<f64> = runs.iter().map(|r| r.full_half_rate.ln()).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let slope: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx;
        let pb = runs.iter().map(|r| r.per_bit_rate).sum::<f64>() / n;
        let target = 2.0 * pb.ln();
        // Delta-method standard error of each ln-rate, propagated to the slope.
        let var_y: Vec<f64> = runs
            .iter()
            .map(|r| (1.0 - r.full_half_rate) / (r.full_half_rate * (r.trials * 200) as f64))
            .collect();
        let se = (xs.iter().zip(&var_y).map(|(x, v)| (x - mx).powi(2) * v).sum::<f64>()).sqrt() / sxx;
        assert!((slope - target).abs() < 3.0 * se, "slope {slope} target {target} se {se}");
    }
}
