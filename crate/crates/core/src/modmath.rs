//! Exact modular arithmetic on `u64` values with `u128` intermediates.
//!
//! Moduli used by the rest of the crate are capped at `2^32`, but every
//! function here is overflow-safe for any `u64` modulus since products are
//! carried in 128 bits.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModMathError {
    #[error("modulus must be at least 2, got {0}")]
    InvalidModulus(u64),
    #[error("value {value} is out of range for modulus {modulus}")]
    ValueOutOfRange { value: u64, modulus: u64 },
    #[error("gcd(0, 0) is undefined")]
    UndefinedGcd,
    #[error("{value} is not invertible modulo {modulus} (gcd = {gcd})")]
    NotInvertible { value: u64, modulus: u64, gcd: u64 },
    #[error("moduli {m1} and {m2} are not coprime")]
    NonCoprimeModuli { m1: u64, m2: u64 },
    #[error("combined modulus {m1} * {m2} overflows 64 bits")]
    ModulusOverflow { m1: u64, m2: u64 },
    #[error("p and q must be distinct primes, got p = {p}, q = {q}")]
    BadSemiprime { p: u64, q: u64 },
}

/// A canonical residue: a value in `[0, modulus)` that remembers its modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Residue {
    value: u64,
    modulus: u64,
}

impl Residue {
    /// Wraps an already-reduced value; rejects `value >= modulus`.
    pub fn new(value: u64, modulus: u64) -> Result<Self, ModMathError> {
        if modulus < 2 {
            return Err(ModMathError::InvalidModulus(modulus));
        }
        if value >= modulus {
            return Err(ModMathError::ValueOutOfRange { value, modulus });
        }
        Ok(Residue { value, modulus })
    }

    /// Reduces an arbitrary value into `[0, modulus)`.
    pub fn reduce(value: u64, modulus: u64) -> Result<Self, ModMathError> {
        if modulus < 2 {
            return Err(ModMathError::InvalidModulus(modulus));
        }
        Ok(Residue {
            value: value % modulus,
            modulus,
        })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn pow(&self, exponent: u64) -> Residue {
        // Modulus was validated at construction, so pow_mod cannot fail.
        let value = pow_mod(self.value, exponent, self.modulus).expect("valid modulus");
        Residue {
            value,
            modulus: self.modulus,
        }
    }

    pub fn mul(&self, other: u64) -> Residue {
        let value = mul_mod(self.value, other % self.modulus, self.modulus);
        Residue {
            value,
            modulus: self.modulus,
        }
    }

    pub fn inv(&self) -> Result<Residue, ModMathError> {
        let value = inv_mod(self.value, self.modulus)?;
        Ok(Residue {
            value,
            modulus: self.modulus,
        })
    }
}

impl std::fmt::Display for Residue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (mod {})", self.value, self.modulus)
    }
}

fn mul_mod(a: u64, b: u64, modulus: u64) -> u64 {
    ((a as u128 * b as u128) % modulus as u128) as u64
}

/// Computes `base^exponent mod modulus` by square-and-multiply.
pub fn pow_mod(base: u64, exponent: u64, modulus: u64) -> Result<u64, ModMathError> {
    if modulus < 2 {
        return Err(ModMathError::InvalidModulus(modulus));
    }
    let mut result: u64 = 1;
    let mut base = base % modulus;
    let mut exp = exponent;
    while exp > 0 {
        if exp & 1 == 1 {
            result = mul_mod(result, base, modulus);
        }
        base = mul_mod(base, base, modulus);
        exp >>= 1;
    }
    Ok(result)
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Extended Euclid: returns `(g, s, t)` with `s*a + t*b = g = gcd(a, b) > 0`.
pub fn egcd(a: i128, b: i128) -> Result<(i128, i128, i128), ModMathError> {
    if a == 0 && b == 0 {
        return Err(ModMathError::UndefinedGcd);
    }
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i128, 0i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let quot = r0 / r1;
        (r0, r1) = (r1, r0 - quot * r1);
        (s0, s1) = (s1, s0 - quot * s1);
        (t0, t1) = (t1, t0 - quot * t1);
    }
    if r0 < 0 {
        (r0, s0, t0) = (-r0, -s0, -t0);
    }
    Ok((r0, s0, t0))
}

/// Modular inverse; on failure the error carries `gcd(a, modulus)`, which is a
/// nontrivial factor of the modulus whenever `a` is a non-unit.
pub fn inv_mod(a: u64, modulus: u64) -> Result<u64, ModMathError> {
    if modulus < 2 {
        return Err(ModMathError::InvalidModulus(modulus));
    }
    let a = a % modulus;
    let (g, s, _) = egcd(a as i128, modulus as i128)?;
    if g != 1 {
        return Err(ModMathError::NotInvertible {
            value: a,
            modulus,
            gcd: g as u64,
        });
    }
    Ok(s.rem_euclid(modulus as i128) as u64)
}

/// Combines `x ≡ r1 (mod m1)` and `x ≡ r2 (mod m2)` into the unique solution
/// in `[0, m1*m2)` for coprime moduli.
pub fn crt_combine(r1: u64, m1: u64, r2: u64, m2: u64) -> Result<u64, ModMathError> {
    if m1 < 2 || m2 < 2 {
        return Err(ModMathError::InvalidModulus(m1.min(m2)));
    }
    if gcd(m1, m2) != 1 {
        return Err(ModMathError::NonCoprimeModuli { m1, m2 });
    }
    let m = m1 as u128 * m2 as u128;
    if m > u64::MAX as u128 {
        return Err(ModMathError::ModulusOverflow { m1, m2 });
    }
    // x = a + m1 * ((b - a) * m1^-1 mod m2), with both residues reduced first
    let a = r1 % m1;
    let b = r2 % m2;
    let inv_m1 = inv_mod(m1 % m2, m2)? as u128;
    let diff = (b as u128 + m2 as u128 - (a % m2) as u128) % m2 as u128;
    let k = diff * inv_m1 % m2 as u128;
    Ok((a as u128 + m1 as u128 * k) as u64)
}

/// Deterministic trial division; adequate below the `2^32` modulus cap.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Euler's totient of `p*q` for distinct primes: `(p-1)*(q-1)`.
pub fn totient_semiprime(p: u64, q: u64) -> Result<u64, ModMathError> {
    if p == q || !is_prime(p) || !is_prime(q) {
        return Err(ModMathError::BadSemiprime { p, q });
    }
    Ok((p - 1) * (q - 1))
}
