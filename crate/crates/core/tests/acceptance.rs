//! Acceptance suite: one PASS/FAIL line per criterion, written straight to
//! stdout so it shows without `--nocapture`.

use std::io::Write;
use std::time::Instant;

use rand::Rng;

use hlpuf::adversary::{
    multi_copy_extract, run_unforgeability_game, AttackResult, BitPrior, DeviceKind, GameConfig, LrConfig,
    MultiCopyVariant, SplitAttack, StageModel, Strategy,
};
use hlpuf::analytics::{mc_extract_rate, p_extract_bound, reuse_bound};
use hlpuf::cpuf::CpufModel;
use hlpuf::hybrid::{from_index, EncodingScheme, HlpufDevice, HpufDevice, SchemeKind};
use hlpuf::protocol::{
    run_round, run_session, ClientState, Honest, InterceptResend, Observer, RoundStatus, ServerState, Session,
};
use hlpuf::qstate::{bb84_family, bb84_state, mub4_family, mub8_family, Basis};
use hlpuf::rng::{seeded, stream};
use hlpuf::runner::{attack_curve, cmd_attack_curve, cmd_bounds, cmd_game, cmd_protocol, AdversaryKind, AttackMode, ExperimentConfig};

type Verdict = (bool, String);

fn report(id: usize, title: &str, v: &Verdict, secs: f64) {
    let line = format!(
        "{} criterion {id} ({title}): {} [{secs:.1}s]\n",
        if v.0 { "PASS" } else { "FAIL" },
        v.1
    );
    let mut out = std::io::stdout();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

fn sigma(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Value-bit accuracy of the split attack on random BB84 qubits.
fn helstrom_bb84() -> Verdict {
    let start = Instant::now();
    let scheme = EncodingScheme::bb84();
    let attack = SplitAttack::new(&scheme, BitPrior::DeviceBits { p: 0.5 }, StageModel::Genie).unwrap();
    let mut rng = seeded(101);
    let n = 100_000;
    let mut hits = 0;
    for _ in 0..n {
        let truth = [rng.random_range(0..2u8), rng.random_range(0..2u8)];
        let state = scheme.encode_block(&truth).unwrap();
        hits += (attack.extract_block(&state, &truth, &mut rng).unwrap()[0] == truth[0]) as usize;
    }
    let acc = hits as f64 / n as f64;
    let secs = start.elapsed().as_secs_f64();
    ((acc - 0.8536).abs() <= 0.005 && secs < 10.0, format!("accuracy {acc:.4} over {n} qubits in {secs:.2}s"))
}

/// Empirical value-stage accuracies under a uniform prior over all nine
/// MUB-8 bases, against the caps and the computed optima.
fn mub8_bounds() -> Verdict {
    let scheme = EncodingScheme::new(SchemeKind::Mub8);
    let attack = SplitAttack::new(&scheme, BitPrior::UniformFamily, StageModel::Genie).unwrap();
    let optima = attack.expected_bit_accuracy()[..3].to_vec();
    let family = mub8_family();
    let mut rng = seeded(202);
    let n = 45_000;
    let mut hits = [0usize; 3];
    for _ in 0..n {
        let theta = rng.random_range(0..9);
        let x = rng.random_range(0..8);
        let mut truth = from_index(x, 3);
        truth.extend(from_index(theta.min(7), 3));
        let guess = attack.extract_block(&family.state(theta, x), &truth, &mut rng).unwrap();
        for s in 0..3 {
            hits[s] += (guess[s] == truth[s]) as usize;
        }
    }
    let caps = [0.62, 0.69, 0.77];
    let mut ok = true;
    let mut parts = Vec::new();
    for s in 0..3 {
        let acc = hits[s] as f64 / n as f64;
        ok &= acc <= caps[s] + 0.01 && (acc - optima[s]).abs() <= 0.02;
        parts.push(format!("x{s} {acc:.4} (optimum {:.4})", optima[s]));
    }
    let worst = [bb84_family(), mub4_family(), mub8_family()]
        .iter()
        .map(|f| {
            let (u, b) = f.deviations();
            u.max(b)
        })
        .fold(0.0, f64::max);
    ok &= worst <= 1e-9;
    (ok, format!("{}; family deviation {worst:.1e}", parts.join(", ")))
}

/// Monte Carlo full-extraction tail against the closed form evaluated at
/// the measured per-bit rate.
fn p_extract_agreement() -> Verdict {
    let scheme = EncodingScheme::bb84();
    let trials = 1500;
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let mut cases = 0;
    for (i, m) in [1usize, 2, 4, 8].into_iter().enumerate() {
        for (j, q) in [10usize, 100].into_iter().enumerate() {
            for (l, eps) in [0.0, 0.1, 0.2].into_iter().enumerate() {
                let seed = 300 + (i * 6 + j * 3 + l) as u64;
                let mc = mc_extract_rate(&scheme, m, 0.5, q, eps, trials, seed).unwrap();
                let pb = mc.per_bit_rate;
                let bound = p_extract_bound(q, eps, m, pb).unwrap();
                // Propagate the per-bit estimate's error through the bound.
                let h = 1e-4;
                let slope = (p_extract_bound(q, eps, m, (pb + h).min(1.0)).unwrap()
                    - p_extract_bound(q, eps, m, pb - h).unwrap())
                    / (2.0 * h);
                let var_pb = pb * (1.0 - pb) / mc.bits_scored as f64;
                let s = (bound * (1.0 - bound) / trials as f64 + slope * slope * var_pb).sqrt();
                let dev = (mc.tail_rate - bound).abs();
                let pass = dev <= 3.0 * s || dev < 1e-12;
                ok &= pass;
                worst = worst.max(if s > 0.0 { dev / s } else { 0.0 });
                cases += 1;
            }
        }
    }
    let pinned = p_extract_bound(10, 0.2, 1, 0.5f64.sqrt()).unwrap();
    let exact = (pinned - 56.0 / 1024.0).abs() < 1e-12;
    (ok && exact, format!("{cases} cases, worst deviation {worst:.2}σ; q=10 ε=0.2 pin {pinned:.10} (56/1024)"))
}

/// Basis-bit error of the multi-copy procedure on uniformly random BB84
/// inputs, and on Hadamard-basis inputs alone.
fn multi_copy() -> Verdict {
    let mut rng = seeded(404);
    let trials = 10_000;
    let mut ok = true;
    let mut parts = Vec::new();
    for k in 2..=10 {
        let (mut wrong, mut h_wrong, mut h_total) = (0usize, 0usize, 0usize);
        for _ in 0..trials {
            let (v, b) = (rng.random_range(0..2u8), rng.random_range(0..2u8));
            let copies = (0..k).map(|_| bb84_state(v, b).unwrap()).collect();
            let (_, guess) = multi_copy_extract(copies, MultiCopyVariant::Full, &mut rng).unwrap();
            wrong += (guess != b) as usize;
            if b == 1 {
                h_total += 1;
                h_wrong += (guess != b) as usize;
            }
        }
        let cap = 2f64.powi(1 - k as i32);
        let rate = wrong as f64 / trials as f64;
        let h_rate = h_wrong as f64 / h_total as f64;
        ok &= rate <= cap && h_rate <= cap + 3.0 * sigma(cap, h_total);
        parts.push(format!("K={k} {rate:.4}"));
    }
    (ok, format!("basis error vs 2^(1-K): {}", parts.join(" ")))
}

/// Scaled attack curves: clean versus split-extracted databases.
fn attack_gap() -> Verdict {
    let start = Instant::now();
    let grid = vec![1000, 2000, 5000, 10_000, 20_000, 50_000];
    let cfg = ExperimentConfig {
        seed: Some(500),
        n: 32,
        k: 2,
        m: 1,
        repeats: 5,
        q_grid: Some(grid.clone()),
        modes: vec![AttackMode::Cpuf, AttackMode::HlpufWeak],
        ..ExperimentConfig::default()
    };
    let rows = attack_curve(&cfg).unwrap();
    let acc = |seed: u64, mode: &str, q: usize| -> f64 {
        rows.iter()
            .find(|r: &&AttackResult| r.seed == seed && r.mode == mode && r.q == q)
            .map(|r| r.accuracy)
            .unwrap()
    };
    let first_at = |seed: u64, mode: &str| grid.iter().copied().find(|&q| acc(seed, mode, q) >= 0.90);
    let (mut a, mut b, mut c) = (true, true, true);
    let mut notes = Vec::new();
    for seed in 500..505 {
        a &= grid.iter().any(|&q| acc(seed, "cpuf", q) >= 0.95);
        b &= grid.iter().all(|&q| acc(seed, "hlpuf-weak", q) <= acc(seed, "cpuf", q));
        let (clean, noisy) = (first_at(seed, "cpuf"), first_at(seed, "hlpuf-weak"));
        c &= match (clean, noisy) {
            (Some(x), Some(y)) => y > x,
            (Some(_), None) => true,
            _ => false,
        };
        let show = |v: Option<usize>| v.map_or("never".to_string(), |q| q.to_string());
        notes.push(format!("seed {seed}: q90 {} vs {}", show(clean), show(noisy)));
    }
    let secs = start.elapsed().as_secs_f64();
    let best = rows.iter().filter(|r| r.mode == "cpuf").map(|r| r.accuracy).fold(0.0, f64::max);
    (
        a && b && c && secs < 900.0,
        format!("(a) {a} best clean {best:.4}; (b) {b}; (c) {c} [{}]; {secs:.0}s", notes.join(", ")),
    )
}

fn parties(m: usize, db: usize, seed: u64) -> (ServerState, ClientState) {
    let cpuf = CpufModel::xor_arbiter(32, 2, 4 * m, seed).unwrap();
    let scheme = EncodingScheme::bb84();
    let server = ServerState::enroll(&cpuf, db, scheme.clone(), &mut stream(seed, 1)).unwrap();
    let client = ClientState::new(HlpufDevice::new(HpufDevice::new(cpuf, scheme).unwrap()));
    (server, client)
}

/// Per-qubit survival of intercept-resend by enumeration over state, Eve's
/// basis and Eve's outcome.
fn ir_survival() -> f64 {
    let mut pass = 0.0;
    for v in 0..2u8 {
        for b in 0..2u8 {
            let psi = bb84_state(v, b).unwrap();
            for e in 0..2u8 {
                for (o, p) in Basis::bb84(e).unwrap().probabilities(&psi).unwrap().into_iter().enumerate() {
                    let resent = bb84_state(o as u8, e).unwrap();
                    let ok = Basis::bb84(b).unwrap().probabilities(&resent).unwrap()[v as usize];
                    pass += 0.25 * 0.5 * p * ok;
                }
            }
        }
    }
    pass
}

fn protocol_sensitivity() -> Verdict {
    let (mut server, mut client) = parties(8, 100, 600);
    let mut s = Session::new(false);
    let honest = run_session(&mut server, &mut client, &mut Honest, 100, false, &mut s, &mut seeded(600)).unwrap();

    let per_qubit = ir_survival();
    let expect = per_qubit.powi(16);
    let n = 20_000;
    let (mut server, mut client) = parties(8, n, 601);
    let mut adv = InterceptResend::both();
    let mut rng = seeded(601);
    let mut accepted = 0;
    let mut retire_ok = true;
    for _ in 0..n {
        let out = run_round(&mut server, &mut client, &mut adv, &mut s, &mut rng).unwrap();
        if out.status == RoundStatus::Accepted {
            accepted += 1;
        } else {
            retire_ok &= server.status()[out.challenge_index] == hlpuf::protocol::ReuseStatus::Retired;
        }
    }
    let rate = accepted as f64 / n as f64;
    let ok = honest.accepted == 100 && (rate - expect).abs() <= 3.0 * sigma(expect, n) && retire_ok;
    (
        ok,
        format!(
            "honest {}/100; intercept-resend m=8 accepts {rate:.5} vs oracle {expect:.5} ({per_qubit}^16); failed rounds retired: {retire_ok}",
            honest.accepted
        ),
    )
}

/// Full-half guessing by a passive adversary on reused challenges.
fn reuse_audit() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for m in [4usize, 8] {
        let (mut fresh, mut fresh_hits) = (0usize, 0usize);
        let mut bins = vec![(0usize, 0usize); 17];
        for rep in 0..20u64 {
            let (mut server, mut client) = parties(m, 32, 700 + rep);
            let mut s = Session::new(false);
            let r = run_session(&mut server, &mut client, &mut Observer, 32 * 17, true, &mut s, &mut seeded(700 + rep))
                .unwrap();
            let audit = r.audit.unwrap();
            fresh += audit.fresh_trials;
            fresh_hits += audit.fresh_hits;
            for b in audit.bins.iter().filter(|b| b.k <= 16) {
                bins[b.k as usize].0 += b.trials;
                bins[b.k as usize].1 += b.hits;
            }
        }
        let eps1 = fresh_hits as f64 / fresh as f64;
        let mut worst_margin = f64::INFINITY;
        for (k, &(trials, hits)) in bins.iter().enumerate().skip(1) {
            if trials == 0 {
                continue;
            }
            let bound = reuse_bound(k, m, eps1).unwrap().value;
            let rate = hits as f64 / trials as f64;
            let limit = bound + 3.0 * sigma(bound, trials);
            ok &= rate <= limit;
            worst_margin = worst_margin.min(limit - rate);
        }
        let reused: usize = bins.iter().skip(1).map(|b| b.0).sum();
        parts.push(format!("m={m}: eps1 {eps1:.4} from {fresh}, {reused} reused guesses, min slack {worst_margin:.4}"));
    }
    (ok, parts.join("; "))
}

fn lock_reduction() -> Verdict {
    let cfg = GameConfig {
        n: 16,
        chains: 1,
        q: 150,
        trials: 600,
        seed: 800,
        ..GameConfig::default()
    };
    let adaptive = Strategy::MultiCopy { copies: 8 };
    let locked = run_unforgeability_game(DeviceKind::Hlpuf, adaptive, &cfg).unwrap();
    let open = run_unforgeability_game(DeviceKind::Hpuf, adaptive, &cfg).unwrap();
    let weak = run_unforgeability_game(DeviceKind::Hlpuf, Strategy::MeasureThenForge, &cfg).unwrap();
    let probe = run_unforgeability_game(DeviceKind::Hlpuf, Strategy::DirectProbe, &cfg).unwrap();
    let s = (locked.sigma().powi(2) + weak.sigma().powi(2)).sqrt();
    let ok = locked.win_rate() <= open.win_rate() && locked.win_rate() <= weak.win_rate() + 3.0 * s;
    (
        ok,
        format!(
            "q={} adaptive vs HLPUF {:.4}, vs open HPUF {:.4}, weak vs HLPUF {:.4}, direct probe {:.4} ({} ⊥)",
            cfg.q,
            locked.win_rate(),
            open.win_rate(),
            weak.win_rate(),
            probe.win_rate(),
            probe.lock_aborts
        ),
    )
}

fn determinism() -> Verdict {
    let base = ExperimentConfig {
        seed: Some(900),
        n: 16,
        k: 1,
        test_size: 500,
        trials: 30,
        lr: LrConfig {
            epochs: 20,
            restarts: 1,
            ..LrConfig::default()
        },
        ..ExperimentConfig::default()
    };
    let curve = ExperimentConfig {
        q_grid: Some(vec![0, 200, 400]),
        ..base.clone()
    };
    let bounds = ExperimentConfig {
        q_grid: Some(vec![1, 10]),
        ..base.clone()
    };
    let proto = ExperimentConfig {
        adversary: AdversaryKind::InterceptResend,
        rounds: 50,
        audit: true,
        m: 4,
        ..base.clone()
    };
    let game = ExperimentConfig {
        q_grid: Some(vec![40]),
        trials: 20,
        ..base.clone()
    };
    let run_all = || {
        let p = cmd_protocol(&proto).unwrap();
        vec![
            cmd_attack_curve(&curve).unwrap(),
            cmd_bounds(&bounds).unwrap(),
            p.report_json,
            p.transcript,
            cmd_game(&game).unwrap(),
        ]
    };
    let pool = |t| rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
    let a = pool(1).install(run_all);
    let b = pool(3).install(run_all);
    let c = run_all();
    let bytes: usize = a.iter().map(String::len).sum();
    (a == b && b == c, format!("5 outputs, {bytes} bytes, identical across 3 runs and 1 vs 3 threads"))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("split attack on BB84", helstrom_bb84),
        ("MUB-8 stage accuracies", mub8_bounds),
        ("extraction tail vs closed form", p_extract_agreement),
        ("multi-copy basis error", multi_copy),
        ("attack-curve gap", attack_gap),
        ("protocol completeness and cheat sensitivity", protocol_sensitivity),
        ("reuse audit", reuse_audit),
        ("lock reduction", lock_reduction),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (title, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = std::panic::catch_unwind(f).unwrap_or_else(|_| (false, "panicked".to_string()));
        report(i + 1, title, &v, start.elapsed().as_secs_f64());
        if !v.0 {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
