//! Line-oriented model files.
//!
//! ```text
//! hlpuf-cpuf v1
//! kind xor-arbiter
//! n 32
//! k 2
//! out_bits 4
//! seed 12345
//! flip_noise 0
//! chain 0 0 <n+1 weights>
//! chain 0 1 <n+1 weights>
//! ...
//! ```
//!
//! Ideal models carry `kind ideal`, a `p` line and one `bit <i> <sub-seed>`
//! line per output bit instead of chains. Floats are written in shortest
//! round-trip form so a reloaded model is bit-identical.

use std::fmt::Write as _;

use super::{ArbiterChain, BitPuf, CpufKind, CpufModel, IdealBiasedPuf, XorArbiterPuf};
use crate::error::{Error, Result};

pub const FORMAT_HEADER: &str = "hlpuf-cpuf v1";

pub fn to_text(model: &CpufModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{FORMAT_HEADER}");
    match model.kind() {
        CpufKind::XorArbiter { k } => {
            let _ = writeln!(out, "kind xor-arbiter");
            let _ = writeln!(out, "n {}", model.n());
            let _ = writeln!(out, "k {k}");
        }
        CpufKind::Ideal { p } => {
            let _ = writeln!(out, "kind ideal");
            let _ = writeln!(out, "n {}", model.n());
            let _ = writeln!(out, "p {p}");
        }
    }
    let _ = writeln!(out, "out_bits {}", model.out_bits());
    let _ = writeln!(out, "seed {}", model.seed());
    let _ = writeln!(out, "flip_noise {}", model.flip_noise());
    for (i, b) in model.bit_pufs().iter().enumerate() {
        match b {
            BitPuf::Xor(x) => {
                for (j, chain) in x.chains().iter().enumerate() {
                    let w: Vec<String> = chain.weights().iter().map(|w| w.to_string()).collect();
                    let _ = writeln!(out, "chain {i} {j} {}", w.join(" "));
                }
            }
            BitPuf::Ideal(p) => {
                let _ = writeln!(out, "bit {i} {}", p.seed());
            }
        }
    }
    out
}

fn bad(msg: impl Into<String>) -> Error {
    Error::ModelFormat(msg.into())
}

fn field<'a>(lines: &mut impl Iterator<Item = &'a str>, key: &str) -> Result<&'a str> {
    let line = lines.next().ok_or_else(|| bad(format!("missing `{key}` line")))?;
    let (k, v) = line
        .split_once(' ')
        .ok_or_else(|| bad(format!("malformed line `{line}`")))?;
    if k != key {
        return Err(bad(format!("expected `{key}`, found `{k}`")));
    }
    Ok(v.trim())
}

fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| bad(format!("bad {what}: `{s}`")))
}

pub fn from_text(text: &str) -> Result<CpufModel> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some(FORMAT_HEADER) => {}
        Some(other) => return Err(bad(format!("unsupported header `{other}`"))),
        None => return Err(bad("empty file")),
    }
    let kind = field(&mut lines, "kind")?.to_string();
    let n: usize = num(field(&mut lines, "n")?, "n")?;
    let model_kind = match kind.as_str() {
        "xor-arbiter" => CpufKind::XorArbiter {
            k: num(field(&mut lines, "k")?, "k")?,
        },
        "ideal" => CpufKind::Ideal {
            p: num(field(&mut lines, "p")?, "p")?,
        },
        other => return Err(bad(format!("unknown kind `{other}`"))),
    };
    let out_bits: usize = num(field(&mut lines, "out_bits")?, "out_bits")?;
    let seed: u64 = num(field(&mut lines, "seed")?, "seed")?;
    let flip_noise: f64 = num(field(&mut lines, "flip_noise")?, "flip_noise")?;

    let mut bits = Vec::with_capacity(out_bits);
    match model_kind {
        CpufKind::XorArbiter { k } => {
            for i in 0..out_bits {
                let mut chains = Vec::with_capacity(k);
                for j in 0..k {
                    let rest = field(&mut lines, "chain")?;
                    let mut parts = rest.split_whitespace();
                    let bi: usize = num(parts.next().unwrap_or(""), "bit index")?;
                    let cj: usize = num(parts.next().unwrap_or(""), "chain index")?;
                    if bi != i || cj != j {
                        return Err(bad(format!("expected chain {i} {j}, found {bi} {cj}")));
                    }
                    let w = parts.map(|s| num::<f64>(s, "weight")).collect::<Result<Vec<_>>>()?;
                    if w.len() != n + 1 {
                        return Err(bad(format!("chain {i} {j} has {} weights, expected {}", w.len(), n + 1)));
                    }
                    chains.push(ArbiterChain::from_weights(w)?);
                }
                bits.push(BitPuf::Xor(XorArbiterPuf::new(chains)?));
            }
        }
        CpufKind::Ideal { p } => {
            for i in 0..out_bits {
                let rest = field(&mut lines, "bit")?;
                let (bi, s) = rest.split_once(' ').ok_or_else(|| bad("malformed bit line"))?;
                if num::<usize>(bi, "bit index")? != i {
                    return Err(bad(format!("expected bit {i}")));
                }
                bits.push(BitPuf::Ideal(IdealBiasedPuf::new(n, p, num(s.trim(), "sub-seed")?)?));
            }
        }
    }
    if lines.next().is_some() {
        return Err(bad("trailing content"));
    }
    Ok(CpufModel::from_parts(model_kind, n, seed, bits)?.with_flip_noise(flip_noise))
}
