//! Root disambiguation tags.
//!
//! A cipher names a whole root class; the integer tag `t = (m - (c mod p)) / p`
//! pins down which root `m` is meant. Encoding divides by the private factor
//! `p`, and decoding is the exact inverse `m = t*p + (c mod p)` — so anyone
//! can be handed `(c, t)`, but only a holder of `p` can mint or interpret it.
//!
//! The quotient is an exact integer only when `m ≡ c (mod p)`, which holds for
//! every root of every cipher exactly when `x ≡ 1 (mod p-1)` — the
//! `tag_compatible` flag on [`ParamSet`].

use crate::modmath::Residue;
use crate::transform::{encrypt, ParamSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TagError {
    #[error(
        "tag incompatible: m = {m} has residue {m_mod_p} mod {p} but cipher {c} has residue {c_mod_p}"
    )]
    TagIncompatible {
        m: u64,
        c: u64,
        p: u64,
        m_mod_p: u64,
        c_mod_p: u64,
    },
    #[error("malformed tag: decodes to {decoded}, outside modulus {n}")]
    MalformedTag { decoded: u64, n: u64 },
}

/// The wire pair `(c, t)` a user transmits; serializes as `{"c": .., "t": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedCipher {
    pub c: u64,
    pub t: u64,
}

/// Encodes root `m` of cipher `c` as a tag: `t = (m - (c mod p)) / p`.
///
/// `c mod p` binds first; under that reading the division is exact whenever
/// `m ≡ c (mod p)`, and decoding inverts it bit-for-bit.
pub fn tag_encode(m: u64, c: u64, p: u64) -> Result<TaggedCipher, TagError> {
    let m_mod_p = m % p;
    let c_mod_p = c % p;
    if m_mod_p != c_mod_p {
        return Err(TagError::TagIncompatible {
            m,
            c,
            p,
            m_mod_p,
            c_mod_p,
        });
    }
    Ok(TaggedCipher {
        c,
        t: (m - c_mod_p) / p,
    })
}

/// Decodes a tag back to its root: `m = t*p + (c mod p)`. The modulus bounds
/// the result; anything at or above `n` is a malformed tag.
pub fn tag_decode(t: u64, c: u64, p: u64, n: u64) -> Result<u64, TagError> {
    let decoded = t
        .checked_mul(p)
        .and_then(|tp| tp.checked_add(c % p))
        .ok_or(TagError::MalformedTag {
            decoded: u64::MAX,
            n,
        })?;
    if decoded >= n {
        return Err(TagError::MalformedTag { decoded, n });
    }
    Ok(decoded)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum TagVerdict {
    Accepted { root: u64 },
    Rejected { reason: String },
}

impl TagVerdict {
    pub fn accepted_root(&self) -> Option<u64> {
        match self {
            TagVerdict::Accepted { root } => Some(*root),
            TagVerdict::Rejected { .. } => None,
        }
    }
}

/// Checks a received `(c, t)` pair: decode it and accept iff the recovered
/// value really is a root of `c` under `params`.
pub fn verify_tagged(tc: &TaggedCipher, params: &ParamSet) -> TagVerdict {
    if Residue::new(tc.c, params.n()).is_err() {
        return TagVerdict::Rejected {
            reason: format!("cipher {} out of range", tc.c),
        };
    }
    let decoded = match tag_decode(tc.t, tc.c, params.p(), params.n()) {
        Ok(decoded) => decoded,
        Err(err) => {
            return TagVerdict::Rejected {
                reason: err.to_string(),
            }
        }
    };
    if encrypt(decoded, params).expect("decoded value is below n") != tc.c {
        return TagVerdict::Rejected {
            reason: format!("decoded value {decoded} is not a root of {}", tc.c),
        };
    }
    TagVerdict::Accepted { root: decoded }
}
