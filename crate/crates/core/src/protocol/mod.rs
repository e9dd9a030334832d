//! Challenge-response authentication of an HLPUF client over an
//! adversary-controlled channel.
//!
//! A round: the server picks a stored CRP, sends the challenge and the
//! encoded first half; the client's lock checks it and, if satisfied,
//! returns the encoded second half; the server verifies that. Accepted
//! challenges may be reused, failed ones are retired.

mod channel;

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use serde::Serialize;

pub use channel::{
    ChannelAdversary, Direction, ForceFail, HookCtx, Honest, InterceptResend, Observer, Parcel, ParcelMint, Replay,
    RoundStatus, Tap, TranscriptEvent,
};

use crate::analytics::reuse_bound;
use crate::cpuf::CpufModel;
use crate::error::{Error, Result};
use crate::hybrid::{server_encode, server_verify, EncodingScheme, HlpufDevice, LockOutput, Role, Verdict, VerifyPolicy};
use crate::qstate::PureState;
use crate::rng::{random_bits, stream, sub_seed, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReuseStatus {
    Fresh,
    /// Accepted this many times so far.
    Reusable(u32),
    Retired,
}

#[derive(Debug, Clone)]
pub struct ServerState {
    db: Vec<(Vec<u8>, Vec<u8>)>,
    status: Vec<ReuseStatus>,
    scheme: EncodingScheme,
    /// Accepted uses after which a challenge is retired; `None` = unlimited.
    reuse_cap: Option<u32>,
    policy: VerifyPolicy,
}

impl ServerState {
    pub fn new(db: Vec<(Vec<u8>, Vec<u8>)>, scheme: EncodingScheme) -> Self {
        let status = vec![ReuseStatus::Fresh; db.len()];
        Self {
            db,
            status,
            scheme,
            reuse_cap: None,
            policy: VerifyPolicy::default(),
        }
    }

    /// Records `size` random CRPs of `cpuf` during setup.
    pub fn enroll(cpuf: &CpufModel, size: usize, scheme: EncodingScheme, rng: &mut SimRng) -> Result<Self> {
        scheme.blocks_per_half(cpuf.out_bits())?;
        let db = (0..size)
            .map(|_| {
                let c = random_bits(rng, cpuf.n());
                let y = cpuf.eval(&c)?;
                Ok((c, y))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(db, scheme))
    }

    pub fn with_reuse_cap(mut self, cap: Option<u32>) -> Self {
        self.reuse_cap = cap;
        self
    }

    pub fn with_policy(mut self, policy: VerifyPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn status(&self) -> &[ReuseStatus] {
        &self.status
    }

    pub fn db_len(&self) -> usize {
        self.db.len()
    }

    pub fn retired(&self) -> usize {
        self.status.iter().filter(|s| **s == ReuseStatus::Retired).count()
    }

    /// Uniform over non-retired entries, fresh and reusable alike.
    fn select(&self, rng: &mut SimRng) -> Result<usize> {
        let open: Vec<usize> = (0..self.db.len())
            .filter(|&i| self.status[i] != ReuseStatus::Retired)
            .collect();
        if open.is_empty() {
            return Err(Error::DatabaseExhausted);
        }
        Ok(open[rng.random_range(0..open.len())])
    }

    fn record(&mut self, index: usize, accepted: bool) {
        self.status[index] = match (accepted, self.status[index]) {
            (false, _) | (_, ReuseStatus::Retired) => ReuseStatus::Retired,
            (true, ReuseStatus::Fresh) => ReuseStatus::Reusable(1),
            (true, ReuseStatus::Reusable(k)) => ReuseStatus::Reusable(k + 1),
        };
        if let (ReuseStatus::Reusable(k), Some(cap)) = (self.status[index], self.reuse_cap) {
            if k >= cap {
                self.status[index] = ReuseStatus::Retired;
            }
        }
    }

    fn prior_uses(&self, index: usize) -> u32 {
        match self.status[index] {
            ReuseStatus::Reusable(k) => k,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClientState {
    device: HlpufDevice,
}

impl ClientState {
    pub fn new(device: HlpufDevice) -> Self {
        Self { device }
    }

    pub fn device(&self) -> &HlpufDevice {
        &self.device
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundOutcome {
    pub round: u64,
    pub status: RoundStatus,
    pub challenge_index: usize,
    pub challenge: Vec<u8>,
    /// Accepted uses of this challenge before the round.
    pub prior_uses: u32,
}

/// Everything a session needs besides the parties.
pub struct Session {
    mint: ParcelMint,
    next_round: u64,
    events: Vec<TranscriptEvent>,
    record: bool,
}

impl Default for Session {
    fn default() -> Self {
        Self::new(true)
    }
}

impl Session {
    pub fn new(record_transcript: bool) -> Self {
        Self {
            mint: ParcelMint::default(),
            next_round: 0,
            events: Vec::new(),
            record: record_transcript,
        }
    }

    pub fn transcript(&self) -> &[TranscriptEvent] {
        &self.events
    }

    /// One JSON object per line.
    pub fn write_transcript<W: Write>(&self, mut out: W) -> Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut out, e).map_err(|e| Error::Io(e.to_string()))?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    fn push(&mut self, round: u64, step: &'static str, action: impl Into<String>, ids: Vec<u64>, outcome: Option<String>) {
        self.events.push(TranscriptEvent {
            round,
            step,
            direction: None,
            action: action.into(),
            ids,
            outcome,
        });
    }
}

fn bits_str(bits: &[u8]) -> String {
    bits.iter().map(|b| char::from(b'0' + b)).collect()
}

fn hook(
    session: &mut Session,
    round: u64,
    direction: Direction,
    challenge: &[u8],
    scheme: &EncodingScheme,
    adversary: &mut dyn ChannelAdversary,
    parcels: Vec<Parcel>,
    rng: &mut SimRng,
) -> Result<Vec<Parcel>> {
    let ids_in: Vec<u64> = parcels.iter().map(Parcel::id).collect();
    session.events.push(TranscriptEvent {
        round,
        step: "hook",
        direction: Some(direction),
        action: "enter".into(),
        ids: ids_in,
        outcome: None,
    });
    let mut ctx = HookCtx {
        round,
        direction,
        challenge,
        scheme,
        rng,
        mint: &mut session.mint,
        events: &mut session.events,
    };
    let out = match direction {
        Direction::ServerToClient => adversary.forward(&mut ctx, parcels)?,
        Direction::ClientToServer => adversary.backward(&mut ctx, parcels)?,
    };
    session.events.push(TranscriptEvent {
        round,
        step: "hook",
        direction: Some(direction),
        action: "exit".into(),
        ids: out.iter().map(Parcel::id).collect(),
        outcome: None,
    });
    Ok(out)
}

/// Select → encode first half → forward hook → lock → backward hook →
/// verify → update reuse status.
pub fn run_round(
    server: &mut ServerState,
    client: &mut ClientState,
    adversary: &mut dyn ChannelAdversary,
    session: &mut Session,
    rng: &mut SimRng,
) -> Result<RoundOutcome> {
    let round = session.next_round;
    let index = server.select(rng)?;
    session.next_round += 1;
    let prior_uses = server.prior_uses(index);
    let (x, y) = server.db[index].clone();
    let scheme = server.scheme.clone();
    let status = match server.status[index] {
        ReuseStatus::Fresh => "fresh".to_string(),
        ReuseStatus::Reusable(k) => format!("reusable:{k}"),
        ReuseStatus::Retired => "retired".to_string(),
    };
    session.push(round, "select", bits_str(&x), vec![], Some(status));

    let (_, first) = server_encode(&scheme, (&x, &y), Role::First)?;
    let parcels: Vec<Parcel> = first.into_states().into_iter().map(|s| session.mint.mint(s)).collect();
    session.push(round, "encode", "first-half", parcels.iter().map(Parcel::id).collect(), None);

    let arriving = hook(session, round, Direction::ServerToClient, &x, &scheme, adversary, parcels, rng)?;
    let states: Vec<PureState> = arriving.into_iter().map(Parcel::into_state).collect();
    let status = match client.device.lock_query(&x, &states, rng)? {
        LockOutput::Abort => {
            session.push(round, "lock", "verify-first-half", vec![], Some("abort".into()));
            RoundStatus::ClientAbort
        }
        LockOutput::Released(second) => {
            let parcels: Vec<Parcel> = second.into_states().into_iter().map(|s| session.mint.mint(s)).collect();
            session.push(round, "lock", "release-second-half", parcels.iter().map(Parcel::id).collect(), Some("pass".into()));
            let back = hook(session, round, Direction::ClientToServer, &x, &scheme, adversary, parcels, rng)?;
            let states: Vec<PureState> = back.into_iter().map(Parcel::into_state).collect();
            let (_, expected) = server_encode(&scheme, (&x, &y), Role::Second)?;
            match server_verify(&scheme, &expected, &states, server.policy, rng)? {
                Verdict::Accept => RoundStatus::Accepted,
                Verdict::Reject => RoundStatus::ServerReject,
            }
        }
    };
    server.record(index, status == RoundStatus::Accepted);
    session.push(
        round,
        "verify",
        "outcome",
        vec![],
        Some(
            match status {
                RoundStatus::Accepted => "accepted",
                RoundStatus::ClientAbort => "client-abort",
                RoundStatus::ServerReject => "server-reject",
            }
            .into(),
        ),
    );
    adversary.observe(&x, status);
    if !session.record {
        session.events.clear();
    }
    Ok(RoundOutcome {
        round,
        status,
        challenge_index: index,
        challenge: x,
        prior_uses,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditBin {
    /// Accepted uses of the challenge before the guess.
    pub k: u32,
    pub trials: usize,
    pub hits: usize,
    pub rate: f64,
    /// `ε₁ + k·2^{−m}`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub fresh_trials: usize,
    pub fresh_hits: usize,
    /// Guess rate on never-used challenges.
    pub eps1: f64,
    pub bins: Vec<AuditBin>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionReport {
    pub adversary: String,
    pub rounds_requested: usize,
    pub rounds_run: usize,
    pub accepted: usize,
    pub client_aborts: usize,
    pub server_rejects: usize,
    pub acceptance_rate: f64,
    pub retired: usize,
    pub exhausted: bool,
    /// Accepted-use count → number of challenges at that count at the end.
    pub reuse_histogram: BTreeMap<u32, usize>,
    pub audit: Option<AuditReport>,
}

/// Runs `rounds` rounds. With `audit`, the adversary guesses the second
/// half of each selected challenge before the round starts, and hits are
/// binned by how often the challenge was accepted before.
pub fn run_session(
    server: &mut ServerState,
    client: &mut ClientState,
    adversary: &mut dyn ChannelAdversary,
    rounds: usize,
    audit: bool,
    session: &mut Session,
    rng: &mut SimRng,
) -> Result<SessionReport> {
    if rounds == 0 {
        return Err(Error::Config("rounds must be at least 1".into()));
    }
    let half_bits = client.device.hpuf().half_bits();
    let m = client.device.hpuf().blocks_per_half() * server.scheme.qubits_per_block();
    let mut counts = [0usize; 3];
    let mut fresh = (0usize, 0usize);
    let mut bins: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    let mut exhausted = false;
    let mut run = 0;
    // Guesses draw from their own stream so auditing leaves the protocol's
    // randomness untouched.
    let mut guess_rng = stream(sub_seed(&mut rng.clone()), 1);
    for _ in 0..rounds {
        // Peek at the challenge the round will select.
        let peek = {
            let mut probe = rng.clone();
            match server.select(&mut probe) {
                Ok(i) => Some(i),
                Err(Error::DatabaseExhausted) => None,
                Err(e) => return Err(e),
            }
        };
        let Some(next) = peek else {
            exhausted = true;
            break;
        };
        if audit {
            let (x, y) = &server.db[next];
            let guess = adversary.guess_second_half(x, half_bits, &mut guess_rng);
            let hit = guess.as_slice() == &y[y.len() - half_bits..];
            let k = server.prior_uses(next);
            if server.status[next] == ReuseStatus::Fresh {
                fresh.0 += 1;
                fresh.1 += hit as usize;
            } else {
                let b = bins.entry(k).or_default();
                b.0 += 1;
                b.1 += hit as usize;
            }
        }
        let out = run_round(server, client, adversary, session, rng)?;
        debug_assert_eq!(out.challenge_index, next);
        run += 1;
        counts[match out.status {
            RoundStatus::Accepted => 0,
            RoundStatus::ClientAbort => 1,
            RoundStatus::ServerReject => 2,
        }] += 1;
    }
    if !exhausted && server.select(&mut rng.clone()).is_err() {
        exhausted = true;
    }
    let mut reuse_histogram = BTreeMap::new();
    for s in &server.status {
        if let ReuseStatus::Reusable(k) = s {
            *reuse_histogram.entry(*k).or_insert(0) += 1;
        }
    }
    let audit = if audit {
        let eps1 = if fresh.0 == 0 { 0.0 } else { fresh.1 as f64 / fresh.0 as f64 };
        let bins = bins
            .into_iter()
            .map(|(k, (trials, hits))| {
                Ok(AuditBin {
                    k,
                    trials,
                    hits,
                    rate: hits as f64 / trials as f64,
                    bound: reuse_bound(k as usize, m, eps1)?.value,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Some(AuditReport {
            fresh_trials: fresh.0,
            fresh_hits: fresh.1,
            eps1,
            bins,
        })
    } else {
        None
    };
    Ok(SessionReport {
        adversary: adversary.name().to_string(),
        rounds_requested: rounds,
        rounds_run: run,
        accepted: counts[0],
        client_aborts: counts[1],
        server_rejects: counts[2],
        acceptance_rate: if run == 0 { 0.0 } else { counts[0] as f64 / run as f64 },
        retired: server.retired(),
        exhausted,
        reuse_histogram,
        audit,
    })
}
