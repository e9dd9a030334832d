//! The adversary-controlled channel.
//!
//! States travel as [`Parcel`]s: move-only handles that an adversary can
//! measure, hold, drop or replace, but never copy or read. Every action goes
//! through a [`HookCtx`] so it lands in the transcript.

use std::collections::HashMap;

use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::hybrid::EncodingScheme;
use crate::qstate::{measure, Basis, PureState};
use crate::rng::{random_bits, SimRng};

/// A state in flight. Deliberately not `Clone`.
#[derive(Debug)]
pub struct Parcel {
    id: u64,
    state: PureState,
}

impl Parcel {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn dim(&self) -> usize {
        self.state.dim()
    }

    pub(crate) fn into_state(self) -> PureState {
        self.state
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    ServerToClient,
    ClientToServer,
}

/// One transcript line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranscriptEvent {
    pub round: u64,
    pub step: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    pub action: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub ids: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<String>,
}

/// Shared id counter so every parcel in a session has a unique id.
#[derive(Debug, Default)]
pub struct ParcelMint {
    next: u64,
}

impl ParcelMint {
    pub(crate) fn mint(&mut self, state: PureState) -> Parcel {
        let id = self.next;
        self.next += 1;
        Parcel { id, state }
    }
}

/// What a hook may do, and its window onto the round.
pub struct HookCtx<'a> {
    pub(crate) round: u64,
    pub(crate) direction: Direction,
    pub(crate) challenge: &'a [u8],
    pub(crate) scheme: &'a EncodingScheme,
    pub(crate) rng: &'a mut SimRng,
    pub(crate) mint: &'a mut ParcelMint,
    pub(crate) events: &'a mut Vec<TranscriptEvent>,
}

impl HookCtx<'_> {
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// The challenge travels in the clear.
    pub fn challenge(&self) -> &[u8] {
        self.challenge
    }

    pub fn scheme(&self) -> &EncodingScheme {
        self.scheme
    }

    pub fn rng(&mut self) -> &mut SimRng {
        self.rng
    }

    fn log(&mut self, action: String, ids: Vec<u64>, outcome: Option<String>) {
        self.events.push(TranscriptEvent {
            round: self.round,
            step: "hook",
            direction: Some(self.direction),
            action,
            ids,
            outcome,
        });
    }

    /// Projective measurement in place; returns the outcome index.
    pub fn measure(&mut self, parcel: &mut Parcel, basis: &Basis) -> Result<usize> {
        let (o, post) = measure(&parcel.state, basis, self.rng)?;
        parcel.state = post;
        self.log("measure".into(), vec![parcel.id], Some(o.to_string()));
        Ok(o)
    }

    /// Prepares a new state and puts it on the wire under a fresh id.
    pub fn prepare(&mut self, state: PureState) -> Parcel {
        let p = self.mint.mint(state);
        self.log("prepare".into(), vec![p.id], None);
        p
    }

    pub fn discard(&mut self, parcel: Parcel) {
        self.log("discard".into(), vec![parcel.id], None);
    }

    /// Keeps a parcel off the wire for later use.
    pub fn note_stored(&mut self, parcel: &Parcel) {
        self.log("store".into(), vec![parcel.id], None);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundStatus {
    Accepted,
    ClientAbort,
    ServerReject,
}

/// A man in the middle of the public channel.
pub trait ChannelAdversary {
    fn name(&self) -> &'static str;

    /// Server → client first half.
    fn forward(&mut self, ctx: &mut HookCtx<'_>, parcels: Vec<Parcel>) -> Result<Vec<Parcel>> {
        let _ = ctx;
        Ok(parcels)
    }

    /// Client → server second half.
    fn backward(&mut self, ctx: &mut HookCtx<'_>, parcels: Vec<Parcel>) -> Result<Vec<Parcel>> {
        let _ = ctx;
        Ok(parcels)
    }

    /// Round result, as publicly visible.
    fn observe(&mut self, challenge: &[u8], status: RoundStatus) {
        let _ = (challenge, status);
    }

    /// Best guess of the second-half bits of `challenge`.
    fn guess_second_half(&mut self, challenge: &[u8], bits: usize, rng: &mut SimRng) -> Vec<u8> {
        let _ = challenge;
        random_bits(rng, bits)
    }
}

/// Passes everything through untouched.
#[derive(Debug, Default)]
pub struct Honest;

impl ChannelAdversary for Honest {
    fn name(&self) -> &'static str {
        "honest"
    }
}

/// Watches round outcomes but never touches a state.
#[derive(Debug, Default)]
pub struct Observer;

impl ChannelAdversary for Observer {
    fn name(&self) -> &'static str {
        "observer"
    }
}

/// Per-challenge notes from BB84 intercept-resend: `(outcome, basis)` per qubit.
#[derive(Debug, Default, Clone)]
struct Notes {
    second_half: HashMap<Vec<u8>, Vec<(u8, u8)>>,
}

impl Notes {
    fn guess(&self, challenge: &[u8], bits: usize, rng: &mut SimRng) -> Vec<u8> {
        match self.second_half.get(challenge) {
            Some(obs) if obs.len() * 2 == bits => obs.iter().flat_map(|&(v, b)| [v, b]).collect(),
            _ => random_bits(rng, bits),
        }
    }
}

fn intercept_all(ctx: &mut HookCtx<'_>, parcels: Vec<Parcel>) -> Result<(Vec<Parcel>, Vec<(u8, u8)>)> {
    let mut out = Vec::with_capacity(parcels.len());
    let mut obs = Vec::with_capacity(parcels.len());
    for mut p in parcels {
        if p.dim() != 2 {
            out.push(p);
            continue;
        }
        let basis: u8 = ctx.rng().random_range(0..2);
        let o = ctx.measure(&mut p, &Basis::bb84(basis)?)?;
        obs.push((o as u8, basis));
        out.push(p);
    }
    Ok((out, obs))
}

/// Measures every BB84 qubit in a random basis and lets the post-measurement
/// state continue.
#[derive(Debug, Default)]
pub struct InterceptResend {
    pub forward: bool,
    pub backward: bool,
    notes: Notes,
}

impl InterceptResend {
    pub fn both() -> Self {
        Self {
            forward: true,
            backward: true,
            notes: Notes::default(),
        }
    }

    pub fn forward_only() -> Self {
        Self {
            forward: true,
            ..Default::default()
        }
    }
}

impl ChannelAdversary for InterceptResend {
    fn name(&self) -> &'static str {
        match (self.forward, self.backward) {
            (true, false) => "intercept-forward",
            (false, true) => "intercept-backward",
            _ => "intercept-resend",
        }
    }

    fn forward(&mut self, ctx: &mut HookCtx<'_>, parcels: Vec<Parcel>) -> Result<Vec<Parcel>> {
        if !self.forward {
            return Ok(parcels);
        }
        Ok(intercept_all(ctx, parcels)?.0)
    }

    fn backward(&mut self, ctx: &mut HookCtx<'_>, parcels: Vec<Parcel>) -> Result<Vec<Parcel>> {
        if !self.backward {
            return Ok(parcels);
        }
        let (out, obs) = intercept_all(ctx, parcels)?;
        self.notes.second_half.insert(ctx.challenge().to_vec(), obs);
        Ok(out)
    }

    fn guess_second_half(&mut self, challenge: &[u8], bits: usize, rng: &mut SimRng) -> Vec<u8> {
        self.notes.guess(challenge, bits, rng)
    }
}

/// Intercept-resend on the second half of a random fraction of rounds,
/// otherwise silent.
#[derive(Debug)]
pub struct Tap {
    pub rate: f64,
    notes: Notes,
}

impl Tap {
    pub fn new(rate: f64) -> Self {
        Self {
            rate: rate.clamp(0.0, 1.0),
            notes: Notes::default(),
        }
    }
}

impl ChannelAdversary for Tap {
    fn name(&self) -> &'static str {
        "tap"
    }

    fn backward(&mut self, ctx: &mut HookCtx<'_>, parcels: Vec<Parcel>) -> Result<Vec<Parcel>> {
        if ctx.rng().random::<f64>() >= self.rate {
            return Ok(parcels);
        }
        let (out, obs) = intercept_all(ctx, parcels)?;
        self.notes.second_half.insert(ctx.challenge().to_vec(), obs);
        Ok(out)
    }

    fn guess_second_half(&mut self, challenge: &[u8], bits: usize, rng: &mut SimRng) -> Vec<u8> {
        self.notes.guess(challenge, bits, rng)
    }
}

/// Swaps the client's second half for one captured under a different
/// challenge, when it has one.
#[derive(Debug, Default)]
pub struct Replay {
    stash: Vec<(Vec<u8>, Vec<Parcel>)>,
}

impl ChannelAdversary for Replay {
    fn name(&self) -> &'static str {
        "replay"
    }

    fn backward(&mut self, ctx: &mut HookCtx<'_>, parcels: Vec<Parcel>) -> Result<Vec<Parcel>> {
        let pos = self.stash.iter().position(|(c, _)| c.as_slice() != ctx.challenge());
        let challenge = ctx.challenge().to_vec();
        for p in &parcels {
            ctx.note_stored(p);
        }
        match pos {
            Some(i) => {
                let (_, old) = self.stash.remove(i);
                self.stash.push((challenge, parcels));
                Ok(old)
            }
            None => {
                // Nothing to replay yet: keep these and send nothing.
                self.stash.push((challenge, parcels));
                Ok(Vec::new())
            }
        }
    }
}

/// Drops every second half, so every round fails.
#[derive(Debug, Default)]
pub struct ForceFail;

impl ChannelAdversary for ForceFail {
    fn name(&self) -> &'static str {
        "force-fail"
    }

    fn backward(&mut self, ctx: &mut HookCtx<'_>, parcels: Vec<Parcel>) -> Result<Vec<Parcel>> {
        for p in parcels {
            ctx.discard(p);
        }
        Ok(Vec::new())
    }
}
