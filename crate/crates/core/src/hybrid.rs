//! Hybrid PUF encodings and the quantum lock.
//!
//! A response block of `bits_per_block` classical bits becomes one state:
//! the leading half of the block is the value `x` and the trailing half picks
//! the basis `θ`, both read most-significant bit first. For BB84 this is the
//! pair `(value, basis)`: `(0,0)→|0⟩, (1,0)→|1⟩, (0,1)→|+⟩, (1,1)→|−⟩`.
//!
//! Responses split into a first and a second half. The lock
//! ([`HlpufDevice::lock_query`]) releases the second half only when the
//! caller's first-half states measure to the device's own value bits in the
//! device's own bases.

use serde::{Deserialize, Serialize};

use crate::cpuf::CpufModel;
use crate::error::{Error, Result};
use crate::qstate::{bb84_family, measure, mub4_family, mub8_family, MubFamily, PureState};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Bb84,
    Mub4,
    Mub8,
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SchemeKind::Bb84 => "bb84",
            SchemeKind::Mub4 => "mub4",
            SchemeKind::Mub8 => "mub8",
        })
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bb84" => Ok(SchemeKind::Bb84),
            "mub4" => Ok(SchemeKind::Mub4),
            "mub8" => Ok(SchemeKind::Mub8),
            other => Err(Error::Config(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Block layout plus the basis family it draws from.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingScheme {
    kind: SchemeKind,
    family: MubFamily,
}

impl EncodingScheme {
    pub fn new(kind: SchemeKind) -> Self {
        let family = match kind {
            SchemeKind::Bb84 => bb84_family(),
            SchemeKind::Mub4 => mub4_family(),
            SchemeKind::Mub8 => mub8_family(),
        };
        Self { kind, family }
    }

    pub fn bb84() -> Self {
        Self::new(SchemeKind::Bb84)
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn family(&self) -> &MubFamily {
        &self.family
    }

    pub fn qubits_per_block(&self) -> usize {
        match self.kind {
            SchemeKind::Bb84 => 1,
            SchemeKind::Mub4 => 2,
            SchemeKind::Mub8 => 3,
        }
    }

    pub fn value_bits(&self) -> usize {
        self.qubits_per_block()
    }

    pub fn basis_bits(&self) -> usize {
        self.qubits_per_block()
    }

    pub fn bits_per_block(&self) -> usize {
        self.value_bits() + self.basis_bits()
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits_per_block()
    }

    /// Bases reachable from block bits; MUB-8 has a ninth basis that
    /// encoded traffic never uses.
    pub fn device_bases(&self) -> usize {
        1 << self.basis_bits()
    }

    /// Blocks per half for a CPUF with `out_bits` outputs.
    pub fn blocks_per_half(&self, out_bits: usize) -> Result<usize> {
        let unit = 2 * self.bits_per_block();
        if out_bits == 0 || out_bits % unit != 0 {
            return Err(Error::OutOfRange(format!(
                "{} needs out_bits divisible by {unit}, got {out_bits}",
                self.kind
            )));
        }
        Ok(out_bits / unit)
    }

    /// Splits a block into `(value index, basis index)`.
    pub fn split_block(&self, bits: &[u8]) -> Result<(usize, usize)> {
        if bits.len() != self.bits_per_block() {
            return Err(Error::BitWidth {
                expected: self.bits_per_block(),
                got: bits.len(),
            });
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::NotABit);
        }
        let (value, basis) = bits.split_at(self.value_bits());
        Ok((to_index(value), to_index(basis)))
    }

    pub fn encode_block(&self, bits: &[u8]) -> Result<PureState> {
        let (x, theta) = self.split_block(bits)?;
        Ok(self.family.state(theta, x))
    }

    /// Measures `state` in basis `theta` and returns the value index.
    pub fn measure_value(&self, state: &PureState, theta: usize, rng: &mut SimRng) -> Result<usize> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: state.dim(),
            });
        }
        Ok(measure(state, &self.family.basis(theta), rng)?.0)
    }

    /// Recovers the block bits of `state` given its basis bits.
    pub fn decode_block(&self, state: &PureState, basis_bits: &[u8], rng: &mut SimRng) -> Result<Vec<u8>> {
        if basis_bits.len() != self.basis_bits() {
            return Err(Error::BitWidth {
                expected: self.basis_bits(),
                got: basis_bits.len(),
            });
        }
        let x = self.measure_value(state, to_index(basis_bits), rng)?;
        let mut out = from_index(x, self.value_bits());
        out.extend_from_slice(basis_bits);
        Ok(out)
    }

    pub fn encode_bits(&self, bits: &[u8]) -> Result<Vec<PureState>> {
        if bits.len() % self.bits_per_block() != 0 {
            return Err(Error::BitWidth {
                expected: bits.len().next_multiple_of(self.bits_per_block()),
                got: bits.len(),
            });
        }
        bits.chunks(self.bits_per_block())
            .map(|b| self.encode_block(b))
            .collect()
    }
}

/// MSB-first bit slice to integer.
pub fn to_index(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

/// Integer to MSB-first bits of width `width`.
pub fn from_index(index: usize, width: usize) -> Vec<u8> {
    (0..width).rev().map(|i| ((index >> i) & 1) as u8).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    First,
    Second,
}

/// One half of an encoded response.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfResponse {
    role: Role,
    states: Vec<PureState>,
    classical_bits: Vec<u8>,
}

impl HalfResponse {
    pub fn encode(scheme: &EncodingScheme, role: Role, bits: Vec<u8>) -> Result<Self> {
        let states = scheme.encode_bits(&bits)?;
        Ok(Self {
            role,
            states,
            classical_bits: bits,
        })
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn states(&self) -> &[PureState] {
        &self.states
    }

    pub fn into_states(self) -> Vec<PureState> {
        self.states
    }

    pub fn classical_bits(&self) -> &[u8] {
        &self.classical_bits
    }
}

/// How many block mismatches a verifier tolerates, as a fraction of blocks.
/// Zero means exact equality of every measured value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VerifyPolicy {
    pub mismatch_tolerance: f64,
}

impl VerifyPolicy {
    fn allowed(&self, blocks: usize) -> usize {
        (self.mismatch_tolerance.clamp(0.0, 1.0) * blocks as f64).floor() as usize
    }
}

/// Measures every received state in the basis the expected bits dictate and
/// compares value indices. Wrong arity or dimension fails.
pub fn verify_states(
    scheme: &EncodingScheme,
    expected_bits: &[u8],
    received: &[PureState],
    policy: VerifyPolicy,
    rng: &mut SimRng,
) -> Result<bool> {
    let bpb = scheme.bits_per_block();
    if expected_bits.len() % bpb != 0 {
        return Err(Error::BitWidth {
            expected: expected_bits.len().next_multiple_of(bpb),
            got: expected_bits.len(),
        });
    }
    let blocks = expected_bits.len() / bpb;
    if received.len() != blocks || received.iter().any(|s| s.dim() != scheme.dim()) {
        return Ok(false);
    }
    let mut mismatches = 0;
    for (block, state) in expected_bits.chunks(bpb).zip(received) {
        let (x, theta) = scheme.split_block(block)?;
        if scheme.measure_value(state, theta, rng)? != x {
            mismatches += 1;
        }
    }
    Ok(mismatches <= policy.allowed(blocks))
}

/// CPUF plus encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct HpufDevice {
    cpuf: CpufModel,
    scheme: EncodingScheme,
    blocks_per_half: usize,
}

impl HpufDevice {
    pub fn new(cpuf: CpufModel, scheme: EncodingScheme) -> Result<Self> {
        let blocks_per_half = scheme.blocks_per_half(cpuf.out_bits())?;
        Ok(Self {
            cpuf,
            scheme,
            blocks_per_half,
        })
    }

    pub fn cpuf(&self) -> &CpufModel {
        &self.cpuf
    }

    pub fn scheme(&self) -> &EncodingScheme {
        &self.scheme
    }

    pub fn blocks_per_half(&self) -> usize {
        self.blocks_per_half
    }

    pub fn half_bits(&self) -> usize {
        self.cpuf.out_bits() / 2
    }

    /// `f₁(x)` or `f₂(x)`.
    pub fn half_bits_of(&self, x: &[u8], role: Role) -> Result<Vec<u8>> {
        let y = self.cpuf.eval(x)?;
        let h = self.half_bits();
        Ok(match role {
            Role::First => y[..h].to_vec(),
            Role::Second => y[h..].to_vec(),
        })
    }

    pub fn eval_half(&self, x: &[u8], role: Role) -> Result<HalfResponse> {
        HalfResponse::encode(&self.scheme, role, self.half_bits_of(x, role)?)
    }

    /// Both halves, freshly prepared from the classical response.
    pub fn hpuf_eval(&self, x: &[u8]) -> Result<(HalfResponse, HalfResponse)> {
        let y = self.cpuf.eval(x)?;
        let h = self.half_bits();
        Ok((
            HalfResponse::encode(&self.scheme, Role::First, y[..h].to_vec())?,
            HalfResponse::encode(&self.scheme, Role::Second, y[h..].to_vec())?,
        ))
    }
}

/// Result of a lock query: the second half, or the abort symbol ⊥.
#[derive(Debug, Clone, PartialEq)]
pub enum LockOutput {
    Released(HalfResponse),
    Abort,
}

impl LockOutput {
    pub fn is_abort(&self) -> bool {
        matches!(self, LockOutput::Abort)
    }
}

/// HPUF gated by first-half verification.
#[derive(Debug, Clone, PartialEq)]
pub struct HlpufDevice {
    hpuf: HpufDevice,
    policy: VerifyPolicy,
    query_log: u64,
}

impl HlpufDevice {
    pub fn new(hpuf: HpufDevice) -> Self {
        Self {
            hpuf,
            policy: VerifyPolicy::default(),
            query_log: 0,
        }
    }

    pub fn with_policy(mut self, policy: VerifyPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn hpuf(&self) -> &HpufDevice {
        &self.hpuf
    }

    /// Number of queries that passed the lock.
    pub fn query_log(&self) -> u64 {
        self.query_log
    }

    /// A CPUF with flip noise re-reads its response on every query; a
    /// noiseless one draws nothing from `rng` for it.
    pub fn lock_query(&mut self, x: &[u8], incoming: &[PureState], rng: &mut SimRng) -> Result<LockOutput> {
        let y = self.hpuf.cpuf.eval_noisy(x, rng)?;
        let (first, second) = y.split_at(self.hpuf.half_bits());
        if !verify_states(self.hpuf.scheme(), first, incoming, self.policy, rng)? {
            return Ok(LockOutput::Abort);
        }
        self.query_log += 1;
        Ok(LockOutput::Released(HalfResponse::encode(&self.hpuf.scheme, Role::Second, second.to_vec())?))
    }
}

/// Server-side encoding of one half of a stored CRP.
pub fn server_encode(
    scheme: &EncodingScheme,
    entry: (&[u8], &[u8]),
    role: Role,
) -> Result<(Vec<u8>, HalfResponse)> {
    let (x, y) = entry;
    let unit = 2 * scheme.bits_per_block();
    if y.is_empty() || y.len() % unit != 0 {
        return Err(Error::BitWidth {
            expected: y.len().next_multiple_of(unit).max(unit),
            got: y.len(),
        });
    }
    let h = y.len() / 2;
    let bits = match role {
        Role::First => y[..h].to_vec(),
        Role::Second => y[h..].to_vec(),
    };
    Ok((x.to_vec(), HalfResponse::encode(scheme, role, bits)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
}

pub fn server_verify(
    scheme: &EncodingScheme,
    expected: &HalfResponse,
    received: &[PureState],
    policy: VerifyPolicy,
    rng: &mut SimRng,
) -> Result<Verdict> {
    Ok(
        if verify_states(scheme, expected.classical_bits(), received, policy, rng)? {
            Verdict::Accept
        } else {
            Verdict::Reject
        },
    )
}
