//! What an eavesdropper can and cannot do with the public values.
//!
//! [`adversary_candidates`] shows the deliberate ambiguity: knowing only
//! `(n, x)` and an observed cipher, the intruder faces the whole root class.
//! [`adversary_factor_leak`] shows the flip side: a single observed
//! `(root, cipher, tag)` triple betrays the private factor `p`, because the
//! tag relation `root = t*p + (c mod p)` holds for essentially no divisor of
//! `n` other than `p` itself.

use crate::modmath;
use crate::transform::{TransformError, ORACLE_GUARD};

/// Everything an observer of cipher `c` must consider possible: the full
/// preimage set under `(n, x)`, found by brute force. Desk scale only.
pub fn adversary_candidates(
    observed_cipher: u64,
    n: u64,
    x: u64,
) -> Result<Vec<u64>, TransformError> {
    adversary_candidates_with_guard(observed_cipher, n, x, ORACLE_GUARD)
}

pub fn adversary_candidates_with_guard(
    observed_cipher: u64,
    n: u64,
    x: u64,
    guard: u64,
) -> Result<Vec<u64>, TransformError> {
    if n < 2 {
        return Err(modmath::ModMathError::InvalidModulus(n).into());
    }
    if n > guard {
        return Err(TransformError::OracleScale { n, guard });
    }
    let candidates = (0..n)
        .filter(|&m| modmath::pow_mod(m, x, n) == Ok(observed_cipher))
        .collect();
    Ok(candidates)
}

/// Tries to recover the private factor from observed `(root, cipher, tag)`
/// triples: a divisor `d` of `n` is a candidate when `tag * d + (cipher mod d)`
/// reproduces the root for every usable observation. Zero tags give no
/// quotient relation and are skipped. Returns the smallest consistent proper
/// divisor, or `None` when the observations pin nothing down.
pub fn adversary_factor_leak(observations: &[(u64, u64, u64)], n: u64) -> Option<u64> {
    let usable: Vec<&(u64, u64, u64)> = observations.iter().filter(|(_, _, t)| *t > 0).collect();
    if usable.is_empty() {
        return None;
    }
    proper_divisors(n).into_iter().find(|&d| {
        usable
            .iter()
            .all(|&&(m, c, t)| t.checked_mul(d).and_then(|td| td.checked_add(c % d)) == Some(m))
    })
}

/// Divisors of `n` strictly between 1 and `n`, ascending.
fn proper_divisors(n: u64) -> Vec<u64> {
    let mut low = Vec::new();
    let mut high = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            low.push(d);
            if d != n / d {
                high.push(n / d);
            }
        }
        d += 1;
    }
    high.reverse();
    low.extend(high);
    low
}
