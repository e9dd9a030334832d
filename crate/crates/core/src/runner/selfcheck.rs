//! Fast invariant checks over every module, run by `hlpuf selfcheck`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::adversary::{lr_train, BitPrior, CrpDatabase, LrConfig, SplitAttack, StageModel};
use crate::analytics::{forge_bound, minentropy_bound, p_extract_bound, p_guess_bound, reuse_bound};
use crate::cpuf::{from_text, to_text, CpufModel};
use crate::error::Result;
use crate::hybrid::{EncodingScheme, HlpufDevice, HpufDevice, SchemeKind};
use crate::protocol::{run_session, ClientState, ForceFail, Honest, ServerState, Session};
use crate::qstate::{bb84_family, mub4_family, mub8_family, MubFamily, C64};
use crate::rng::stream;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SelfcheckOptions {
    pub seed: u64,
    /// Swap in a damaged MUB-8 family; the unbiasedness check must fail.
    pub corrupt_mub: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfcheckReport {
    pub checks: Vec<Check>,
}

impl SelfcheckReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// One line per check plus a tally; identical across runs.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        out.push_str(&format!("{passed}/{} checks passed\n", self.checks.len()));
        out
    }
}

/// MUB-8 with basis 4 rotated by 0.1 rad in its first two columns: still
/// unitary, no longer unbiased.
pub(crate) fn corrupted_mub8() -> MubFamily {
    let good = mub8_family();
    let bases = (0..good.len())
        .map(|t| {
            let mut m = good.matrix(t).clone();
            if t == 4 {
                let mut r = DMatrix::<C64>::identity(8, 8);
                let (c, s) = (0.1f64.cos(), 0.1f64.sin());
                r[(0, 0)] = C64::new(c, 0.0);
                r[(0, 1)] = C64::new(-s, 0.0);
                r[(1, 0)] = C64::new(s, 0.0);
                r[(1, 1)] = C64::new(c, 0.0);
                m = &m * r;
            }
            m
        })
        .collect();
    MubFamily::new_unchecked(8, bases)
}

fn family_check(name: &str, f: &MubFamily) -> (bool, String) {
    let (u, b) = f.deviations();
    (f.is_valid(), format!("{name}: {} bases, unitary dev {u:.1e}, unbiased dev {b:.1e}", f.len()))
}

fn helstrom_bb84() -> Result<(bool, String)> {
    let a = SplitAttack::new(&EncodingScheme::bb84(), BitPrior::DeviceBits { p: 0.5 }, StageModel::Genie)?;
    let v = a.expected_bit_accuracy()[0];
    let want = 0.5 + 0.5 * std::f64::consts::FRAC_1_SQRT_2;
    Ok(((v - want).abs() < 1e-9, format!("value-bit optimum {v:.6}")))
}

fn mub8_optima() -> Result<(bool, String)> {
    let a = SplitAttack::new(&EncodingScheme::new(SchemeKind::Mub8), BitPrior::UniformFamily, StageModel::Genie)?;
    let e = &a.expected_bit_accuracy()[..3];
    let ok = e.iter().zip([0.62, 0.69, 0.77]).all(|(v, cap)| *v <= cap + 0.01);
    Ok((ok, format!("value stages {:.5} {:.5} {:.5}", e[0], e[1], e[2])))
}

fn analytic_pins() -> Result<(bool, String)> {
    let pe = p_extract_bound(10, 0.2, 1, 0.5f64.sqrt())?;
    let forge = forge_bound(0.0546875, 0.9)?;
    let reuse = reuse_bound(3, 4, 0.01)?.value;
    let me = minentropy_bound(10, 0.01, 0.0)?;
    let pg = p_guess_bound(0.5)?.value;
    let ok = (pe - 56.0 / 1024.0).abs() < 1e-12
        && (forge - 0.04921875).abs() < 1e-15
        && (reuse - 0.1975).abs() < 1e-12
        && (me - 9.19207).abs() < 1e-4
        && (pg - 0.853553).abs() < 1e-6;
    Ok((ok, format!("p_extract {pe:.7} forge {forge:.8} reuse {reuse:.4} minentropy {me:.5} p_guess {pg:.6}")))
}

fn model_round_trip(seed: u64) -> Result<(bool, String)> {
    let m = CpufModel::xor_arbiter(32, 2, 4, seed)?;
    let back = from_text(&to_text(&m))?;
    Ok((back == m, "xor-arbiter n=32 k=2 reloads identically".into()))
}

fn lr_smoke(seed: u64) -> Result<(bool, String)> {
    let cpuf = CpufModel::xor_arbiter(16, 1, 1, seed)?;
    let train = CrpDatabase::sample_clean(&cpuf, 2000, &mut stream(seed, 10))?;
    let test = CrpDatabase::sample_clean(&cpuf, 2000, &mut stream(seed, 11))?;
    let cfg = LrConfig {
        epochs: 50,
        restarts: 2,
        seed,
        ..LrConfig::default()
    };
    let acc = lr_train(&train, 0, 1, &cfg)?.accuracy(&test, 0);
    Ok((acc >= 0.95, format!("arbiter n=16, 2000 CRPs: accuracy {acc:.4}")))
}

fn parties(seed: u64, db: usize) -> Result<(ServerState, ClientState)> {
    let cpuf = CpufModel::xor_arbiter(16, 1, 8, seed)?;
    let scheme = EncodingScheme::bb84();
    let server = ServerState::enroll(&cpuf, db, scheme.clone(), &mut stream(seed, 12))?;
    Ok((server, ClientState::new(HlpufDevice::new(HpufDevice::new(cpuf, scheme)?))))
}

fn honest_session(seed: u64) -> Result<(bool, String, String)> {
    let (mut server, mut client) = parties(seed, 50)?;
    let mut session = Session::new(true);
    let r = run_session(&mut server, &mut client, &mut Honest, 100, false, &mut session, &mut stream(seed, 13))?;
    let mut t = Vec::new();
    session.write_transcript(&mut t)?;
    Ok((
        r.accepted == 100,
        format!("{}/100 rounds accepted", r.accepted),
        String::from_utf8_lossy(&t).into_owned(),
    ))
}

fn force_fail(seed: u64) -> Result<(bool, String)> {
    let (mut server, mut client) = parties(seed, 25)?;
    let mut session = Session::new(false);
    let r = run_session(&mut server, &mut client, &mut ForceFail, 100, false, &mut session, &mut stream(seed, 14))?;
    Ok((
        r.exhausted && r.rounds_run == 25 && r.retired == 25,
        format!("{} rounds before exhaustion, {} retired", r.rounds_run, r.retired),
    ))
}

pub fn cmd_selfcheck(opts: &SelfcheckOptions) -> SelfcheckReport {
    let mut checks = Vec::new();
    let mut push = |name: &'static str, r: Result<(bool, String)>| {
        let (passed, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
        checks.push(Check { name, passed, detail });
    };
    push("mub-bb84", Ok(family_check("bb84", &bb84_family())));
    push("mub-4", Ok(family_check("mub4", &mub4_family())));
    let mub8 = if opts.corrupt_mub { corrupted_mub8() } else { mub8_family() };
    push("mub-8", Ok(family_check("mub8", &mub8)));
    let (bad, detail) = family_check("corrupted mub8", &corrupted_mub8());
    push("mub-negative-control", Ok((!bad, format!("rejected {detail}"))));
    push("helstrom-bb84", helstrom_bb84());
    push("mub8-split-optima", mub8_optima());
    push("analytic-pins", analytic_pins());
    push("model-file-round-trip", model_round_trip(opts.seed));
    push("lr-arbiter", lr_smoke(opts.seed));
    let honest = honest_session(opts.seed);
    let again = honest_session(opts.seed);
    let deterministic = match (&honest, &again) {
        (Ok(a), Ok(b)) => Ok((a.2 == b.2, format!("{} transcript lines, identical on rerun", a.2.lines().count()))),
        (Err(e), _) | (_, Err(e)) => Err(e.clone()),
    };
    push("protocol-honest", honest.map(|(ok, d, _)| (ok, d)));
    push("protocol-exhaustion", force_fail(opts.seed));
    push("determinism", deterministic);
    SelfcheckReport { checks }
}
