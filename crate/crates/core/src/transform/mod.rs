//! The many-to-one power map `m -> m^x mod n` and its root classes.
//!
//! A valid parameter set is a semiprime modulus `n = p*q` with an exponent `x`
//! dividing `phi(n)`. Under that constraint the map is many-to-one and the
//! preimage set of a cipher — its root class — carries the structure the rest
//! of the crate relies on:
//!
//! 1. the difference of any two roots shares a factor with `n` (holds when at
//!    least one of `gcd(x, p-1)`, `gcd(x, q-1)` is 1, see [`check_property1`]);
//! 2. roots are related multiplicatively by x-th roots of unity
//!    ([`find_factor`] / [`derive_root`]);
//! 3. the product of a full class of `x` unit roots reproduces the cipher when
//!    `x` is odd ([`product_of_roots`]).

mod tables;

pub use tables::{
    cipher_map_csv, root_classes_csv, table_cipher_map, table_root_classes, CipherRow, ClassRow,
};

use crate::modmath::{self, ModMathError, Residue};
use serde::Serialize;
use thiserror::Error;

/// Largest modulus accepted by [`make_params`]; keeps all arithmetic and the
/// per-prime scans comfortably in `u64`.
pub const MODULUS_CAP: u64 = 1 << 32;

/// Default ceiling for full-modulus brute-force scans.
pub const ORACLE_GUARD: u64 = 1 << 24;

/// Ceiling for whole-table emission (every `m` gets a row).
pub const TABLE_GUARD: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("factors must be distinct, got {0} twice")]
    EqualFactors(u64),
    #[error("exponent must be at least 2, got {x}")]
    ExponentTooSmall { x: u64 },
    #[error("x does not divide phi ({x} does not divide {phi})")]
    ExponentNotDividingPhi { x: u64, phi: u64 },
    #[error("modulus {n} exceeds the parameter cap {cap}")]
    ModulusTooLarge { n: u64, cap: u64 },
    #[error("modulus {n} exceeds the brute-force scan guard {guard}")]
    OracleScale { n: u64, guard: u64 },
    #[error("modulus {n} exceeds the table emission guard {guard}")]
    TableScale { n: u64, guard: u64 },
    #[error(transparent)]
    Mod(#[from] ModMathError),
}

/// Validated public/private parameters of the power map.
///
/// `p < q` always holds; the smaller factor `p` is the one the tag codec
/// divides by. The flags record which structural guarantees the set enjoys:
/// `tag_compatible` (every root of every cipher has an integral tag, i.e.
/// `x ≡ 1 mod p-1`) and `x_to_one` (`x` prime, `x | q-1`, tag-compatible —
/// the regime in which the map is exactly x-to-one on unit ciphers: every
/// nonempty unit class has exactly `x` roots).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ParamSet {
    p: u64,
    q: u64,
    n: u64,
    x: u64,
    phi: u64,
    divisibility_ok: bool,
    tag_compatible: bool,
    x_to_one: bool,
}

impl ParamSet {
    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn x(&self) -> u64 {
        self.x
    }

    pub fn phi(&self) -> u64 {
        self.phi
    }

    pub fn divisibility_ok(&self) -> bool {
        self.divisibility_ok
    }

    pub fn tag_compatible(&self) -> bool {
        self.tag_compatible
    }

    pub fn x_to_one(&self) -> bool {
        self.x_to_one
    }
}

/// Validates `(p, q, x)` into a [`ParamSet`], swapping the factors if needed
/// so that `p < q`.
pub fn make_params(p: u64, q: u64, x: u64) -> Result<ParamSet, TransformError> {
    if x < 2 {
        return Err(TransformError::ExponentTooSmall { x });
    }
    if !modmath::is_prime(p) {
        return Err(TransformError::NotPrime(p));
    }
    if !modmath::is_prime(q) {
        return Err(TransformError::NotPrime(q));
    }
    if p == q {
        return Err(TransformError::EqualFactors(p));
    }
    let (p, q) = if p < q { (p, q) } else { (q, p) };
    let n = p * q;
    if n > MODULUS_CAP {
        return Err(TransformError::ModulusTooLarge {
            n,
            cap: MODULUS_CAP,
        });
    }
    let phi = (p - 1) * (q - 1);
    if phi % x != 0 {
        return Err(TransformError::ExponentNotDividingPhi { x, phi });
    }
    // (x-1) % (p-1) rather than x % (p-1) == 1: the two agree except at p = 2,
    // where p-1 = 1 makes every exponent compatible.
    let tag_compatible = (x - 1) % (p - 1) == 0;
    let x_to_one = modmath::is_prime(x) && (q - 1) % x == 0 && tag_compatible;
    Ok(ParamSet {
        p,
        q,
        n,
        x,
        phi,
        divisibility_ok: true,
        tag_compatible,
        x_to_one,
    })
}

/// A cipher together with its complete, strictly ascending preimage set.
///
/// `unity_factors` is populated only when every root is a unit: it is then the
/// full set of x-th roots of unity, each of which maps any root to another
/// root of the same cipher by multiplication.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RootClass {
    pub cipher: u64,
    pub roots: Vec<u64>,
    pub unity_factors: Vec<u64>,
}

impl RootClass {
    /// Builds a class from an unordered root list, sorting and deriving the
    /// unity factors `r * roots[0]^-1` when the class consists of units.
    pub fn from_roots(cipher: u64, mut roots: Vec<u64>, params: &ParamSet) -> Self {
        roots.sort_unstable();
        roots.dedup();
        let unity_factors = match roots.first() {
            Some(&first) if roots.iter().all(|&r| modmath::gcd(r, params.n) == 1) => {
                let inv = modmath::inv_mod(first, params.n).expect("all roots are units");
                let mut factors: Vec<u64> = roots
                    .iter()
                    .map(|&r| (r as u128 * inv as u128 % params.n as u128) as u64)
                    .collect();
                factors.sort_unstable();
                factors
            }
            _ => Vec::new(),
        };
        RootClass {
            cipher,
            roots,
            unity_factors,
        }
    }
}

/// Applies the power map: `m^x mod n`.
pub fn encrypt(m: u64, params: &ParamSet) -> Result<u64, TransformError> {
    let m = Residue::new(m, params.n)?;
    Ok(m.pow(params.x).value())
}

/// Ground-truth root enumeration: scans every residue of the full modulus.
/// Refuses above [`ORACLE_GUARD`]; see [`roots_bruteforce_with_guard`] to
/// override the ceiling.
pub fn roots_bruteforce(c: u64, params: &ParamSet) -> Result<RootClass, TransformError> {
    roots_bruteforce_with_guard(c, params, ORACLE_GUARD)
}

pub fn roots_bruteforce_with_guard(
    c: u64,
    params: &ParamSet,
    guard: u64,
) -> Result<RootClass, TransformError> {
    if params.n > guard {
        return Err(TransformError::OracleScale { n: params.n, guard });
    }
    Residue::new(c, params.n)?;
    let roots: Vec<u64> = (0..params.n)
        .filter(|&m| modmath::pow_mod(m, params.x, params.n).expect("valid modulus") == c)
        .collect();
    Ok(RootClass::from_roots(c, roots, params))
}

/// Fast root enumeration: finds the roots modulo each prime factor separately
/// (a scan of `p + q` residues instead of `n`) and recombines every pair.
/// Agrees with [`roots_bruteforce`] on all inputs.
pub fn roots_crt(c: u64, params: &ParamSet) -> Result<RootClass, TransformError> {
    Residue::new(c, params.n)?;
    let prime_roots = |modulus: u64| -> Vec<u64> {
        (0..modulus)
            .filter(|&a| {
                modmath::pow_mod(a, params.x, modulus).expect("valid modulus") == c % modulus
            })
            .collect()
    };
    let p_roots = prime_roots(params.p);
    let q_roots = prime_roots(params.q);
    let mut roots = Vec::with_capacity(p_roots.len() * q_roots.len());
    for &rp in &p_roots {
        for &rq in &q_roots {
            roots.push(
                modmath::crt_combine(rp, params.p, rq, params.q).expect("coprime prime factors"),
            );
        }
    }
    Ok(RootClass::from_roots(c, roots, params))
}

/// All `f` in `[1, n)` with `f^x ≡ 1 (mod n)`.
pub fn roots_of_unity(params: &ParamSet) -> Vec<u64> {
    roots_crt(1, params).expect("1 is in range").roots
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCheck {
    pub a: u64,
    pub b: u64,
    pub by_p: bool,
    pub by_q: bool,
}

/// Pairwise-difference report for a root class: which factor of `n` divides
/// each difference. `holds` is true iff no pair is divisible by neither.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Property1Report {
    pub cipher: u64,
    pub holds: bool,
    pub pairs: Vec<PairCheck>,
}

impl Property1Report {
    pub fn violations(&self) -> impl Iterator<Item = &PairCheck> {
        self.pairs.iter().filter(|pair| !pair.by_p && !pair.by_q)
    }
}

pub fn check_property1(rc: &RootClass, params: &ParamSet) -> Property1Report {
    let mut pairs = Vec::new();
    let mut holds = true;
    for (i, &a) in rc.roots.iter().enumerate() {
        for &b in &rc.roots[i + 1..] {
            let diff = b - a;
            let by_p = diff % params.p == 0;
            let by_q = diff % params.q == 0;
            holds &= by_p || by_q;
            pairs.push(PairCheck { a, b, by_p, by_q });
        }
    }
    Property1Report {
        cipher: rc.cipher,
        holds,
        pairs,
    }
}

/// The factor `F = m_b * m_a^-1 mod n` relating two roots: `F * m_a ≡ m_b`.
/// When both arguments are roots of the same cipher, `F` is an x-th root of
/// unity. Fails with the shared factor if `m_a` is not a unit.
pub fn find_factor(m_a: u64, m_b: u64, params: &ParamSet) -> Result<u64, TransformError> {
    let inv = modmath::inv_mod(m_a, params.n)?;
    Ok(((m_b % params.n) as u128 * inv as u128 % params.n as u128) as u64)
}

/// Multiplies a root by a factor: `f * m_a mod n`. With `f` an x-th root of
/// unity this maps a root of a cipher to another root of the same cipher.
pub fn derive_root(m_a: u64, f: u64, params: &ParamSet) -> u64 {
    (m_a as u128 * f as u128 % params.n as u128) as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RootProduct {
    pub product: u64,
    pub equals_cipher: bool,
}

/// Product of all roots of a class mod `n`, reported together with whether it
/// reproduces the cipher. Equality is a fact about the class, not a promise:
/// it provably holds for a class of exactly `x` unit roots with `x` odd, and
/// is simply reported otherwise.
pub fn product_of_roots(rc: &RootClass, params: &ParamSet) -> RootProduct {
    let product = rc.roots.iter().fold(1u64, |acc, &r| {
        (acc as u128 * r as u128 % params.n as u128) as u64
    });
    RootProduct {
        product,
        equals_cipher: product == rc.cipher,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params55() -> ParamSet {
        make_params(5, 11, 5).unwrap()
    }

    fn params155() -> ParamSet {
        make_params(5, 31, 5).unwrap()
    }

    #[test]
    fn make_params_accepts_the_worked_example() {
        let params = params55();
        assert_eq!(params.n(), 55);
        assert_eq!(params.phi(), 40);
        assert!(params.divisibility_ok());
        assert!(params.tag_compatible());
        assert!(params.x_to_one());
    }

    #[test]
    fn make_params_swaps_factors_into_order() {
        let params = make_params(11, 5, 5).unwrap();
        assert_eq!((params.p(), params.q()), (5, 11));
    }

    #[test]
    fn make_params_rejections() {
        let err = make_params(5, 11, 3).unwrap_err();
        assert_eq!(
            err,
            TransformError::ExponentNotDividingPhi { x: 3, phi: 40 }
        );
        assert!(err.to_string().contains("x does not divide phi"));
        assert_eq!(
            make_params(4, 11, 5).unwrap_err(),
            TransformError::NotPrime(4)
        );
        assert_eq!(
            make_params(5, 5, 2).unwrap_err(),
            TransformError::EqualFactors(5)
        );
        assert_eq!(
            make_params(5, 11, 1).unwrap_err(),
            TransformError::ExponentTooSmall { x: 1 }
        );
        assert_eq!(
            make_params(5, 11, 0).unwrap_err(),
            TransformError::ExponentTooSmall { x: 0 }
        );
    }

    #[test]
    fn make_params_flag_combinations() {
        // 5 does not divide 10, and 5 mod 6 != 1: valid but outside both flags.
        let params = make_params(7, 11, 5).unwrap();
        assert!(params.divisibility_ok());
        assert!(!params.tag_compatible());
        assert!(!params.x_to_one());
        // p = 2 makes every exponent tag-compatible.
        let tiny = make_params(2, 3, 2).unwrap();
        assert!(tiny.tag_compatible());
        assert!(tiny.x_to_one());
        // x = 3 divides q-1 = 12 but 3 mod 6 != 1: not tag-compatible.
        let n91 = make_params(7, 13, 3).unwrap();
        assert!(!n91.tag_compatible());
        assert!(!n91.x_to_one());
    }

    #[test]
    fn make_params_modulus_cap() {
        // 65537 * 65539 is just above 2^32.
        assert!(matches!(
            make_params(65537, 65539, 2),
            Err(TransformError::ModulusTooLarge { .. })
        ));
    }

    #[test]
    fn encrypt_table_anchors() {
        let params = params55();
        assert_eq!(encrypt(3, &params).unwrap(), 23);
        assert_eq!(encrypt(9, &params).unwrap(), 34);
        assert_eq!(encrypt(0, &params).unwrap(), 0);
        assert!(encrypt(55, &params).is_err());
    }

    #[test]
    fn bruteforce_finds_the_example_class() {
        let params = params55();
        let rc = roots_bruteforce(23, &params).unwrap();
        assert_eq!(rc.roots, vec![3, 23, 38, 48, 53]);
        assert_eq!(rc.unity_factors, vec![1, 16, 26, 31, 36]);
        let rc = roots_bruteforce(1, &params).unwrap();
        assert_eq!(rc.roots, vec![1, 16, 26, 31, 36]);
        let rc = roots_bruteforce(32, &params155()).unwrap();
        assert_eq!(rc.roots, vec![2, 32, 47, 97, 132]);
    }

    #[test]
    fn bruteforce_guard_refuses_large_moduli() {
        let params = params55();
        assert_eq!(
            roots_bruteforce_with_guard(23, &params, 32).unwrap_err(),
            TransformError::OracleScale { n: 55, guard: 32 }
        );
    }

    #[test]
    fn crt_agrees_with_bruteforce_everywhere_small() {
        for params in [params55(), params155(), make_params(7, 13, 3).unwrap()] {
            for c in 0..params.n() {
                assert_eq!(
                    roots_crt(c, &params).unwrap(),
                    roots_bruteforce(c, &params).unwrap(),
                    "cipher {c} mod {}",
                    params.n()
                );
            }
        }
    }

    #[test]
    fn crt_handles_degenerate_classes() {
        let params = params55();
        assert_eq!(roots_crt(11, &params).unwrap().roots, vec![11]);
        assert_eq!(roots_crt(0, &params).unwrap().roots, vec![0]);
        // Non-unit classes carry no unity factors.
        assert!(roots_crt(11, &params).unwrap().unity_factors.is_empty());
        assert!(roots_crt(45, &params).unwrap().unity_factors.is_empty());
    }

    #[test]
    fn unity_sets() {
        assert_eq!(roots_of_unity(&params55()), vec![1, 16, 26, 31, 36]);
        assert_eq!(roots_of_unity(&params155()), vec![1, 16, 66, 101, 126]);
        assert!(roots_of_unity(&make_params(7, 13, 3).unwrap()).contains(&1));
    }

    #[test]
    fn property1_holds_on_the_example_class() {
        let params = params55();
        let report = check_property1(&roots_bruteforce(23, &params).unwrap(), &params);
        assert!(report.holds);
        assert_eq!(report.pairs.len(), 10);
        let pair = report
            .pairs
            .iter()
            .find(|pc| (pc.a, pc.b) == (23, 48))
            .unwrap();
        assert!(pair.by_p && !pair.by_q); // 48 - 23 = 25 = 5 * 5

        let report = check_property1(&roots_bruteforce(1, &params).unwrap(), &params);
        assert!(report.holds);
    }

    #[test]
    fn property1_fails_when_both_gcds_exceed_one() {
        // gcd(3, 6) = gcd(3, 12) = 3: nine roots per unit cipher, with cross
        // pairs divisible by neither factor.
        let params = make_params(7, 13, 3).unwrap();
        let rc = roots_bruteforce(1, &params).unwrap();
        assert_eq!(rc.roots.len(), 9);
        let report = check_property1(&rc, &params);
        assert!(!report.holds);
        assert!(report.violations().any(|pc| (pc.a, pc.b) == (1, 9)));
    }

    #[test]
    fn property1_vacuous_below_two_roots() {
        let params = params55();
        let report = check_property1(&roots_bruteforce(11, &params).unwrap(), &params);
        assert!(report.holds);
        assert!(report.pairs.is_empty());
    }

    #[test]
    fn factor_between_roots() {
        let params = params55();
        assert_eq!(find_factor(3, 48, &params).unwrap(), 16);
        assert_eq!(find_factor(23, 38, &params).unwrap(), 16);
        assert_eq!(find_factor(38, 38, &params).unwrap(), 1);
        match find_factor(5, 45, &params).unwrap_err() {
            TransformError::Mod(ModMathError::NotInvertible { gcd, .. }) => assert_eq!(gcd, 5),
            other => panic!("expected NotInvertible, got {other:?}"),
        }
    }

    #[test]
    fn derive_root_examples() {
        let params = params55();
        assert_eq!(derive_root(3, 16, &params), 48);
        assert_eq!(derive_root(23, 16, &params), 38);
        assert_eq!(derive_root(38, 1, &params), 38);
    }

    #[test]
    fn product_reproduces_the_cipher() {
        let params = params55();
        let product = product_of_roots(&roots_bruteforce(23, &params).unwrap(), &params);
        assert_eq!(
            product,
            RootProduct {
                product: 23,
                equals_cipher: true
            }
        );
        let product = product_of_roots(&roots_bruteforce(1, &params).unwrap(), &params);
        assert_eq!(product.product, 1);
        let product = product_of_roots(&roots_bruteforce(32, &params155()).unwrap(), &params155());
        assert_eq!(
            product,
            RootProduct {
                product: 32,
                equals_cipher: true
            }
        );
    }

    #[test]
    fn product_boundary_case_with_too_many_roots() {
        // x = 3 is odd, but the unit classes here have 9 roots, not 3, and the
        // product does not return the cipher: equality needs a class of
        // exactly x roots.
        let params = make_params(7, 13, 3).unwrap();
        let rc = roots_bruteforce(8, &params).unwrap();
        assert_eq!(rc.roots.len(), 9);
        let product = product_of_roots(&rc, &params);
        assert_eq!(product.product, 57);
        assert!(!product.equals_cipher);
    }

    fn sample_params() -> impl Strategy<Value = ParamSet> {
        prop::sample::select(vec![
            make_params(5, 11, 5).unwrap(),
            make_params(5, 31, 5).unwrap(),
            make_params(7, 13, 3).unwrap(),
            make_params(3, 5, 4).unwrap(),
            make_params(2, 3, 2).unwrap(),
            make_params(7, 11, 5).unwrap(),
            make_params(13, 17, 8).unwrap(),
        ])
    }

    proptest! {
        #[test]
        fn unity_factors_permute_each_class(params in sample_params(), m in 0u64..1000) {
            let m = m % params.n();
            if modmath::gcd(m, params.n()) != 1 {
                return Ok(());
            }
            let c = encrypt(m, &params).unwrap();
            let rc = roots_bruteforce(c, &params).unwrap();
            let unity = roots_of_unity(&params);
            prop_assert_eq!(unity.len(), rc.roots.len());
            let mut derived: Vec<u64> = unity.iter().map(|&f| derive_root(m, f, &params)).collect();
            derived.sort_unstable();
            prop_assert_eq!(derived, rc.roots.clone());
        }

        #[test]
        fn cipher_is_invariant_under_unity_factors(params in sample_params(), m in 0u64..1000) {
            let m = m % params.n();
            let c = encrypt(m, &params).unwrap();
            for f in roots_of_unity(&params) {
                prop_assert_eq!(encrypt(derive_root(m, f, &params), &params).unwrap(), c);
            }
        }

        #[test]
        fn unit_class_sizes_follow_the_gcd_law(params in sample_params(), c in 0u64..1000) {
            let c = c % params.n();
            if modmath::gcd(c, params.n()) != 1 {
                return Ok(());
            }
            let rc = roots_crt(c, &params).unwrap();
            if !rc.roots.is_empty() {
                let expected = modmath::gcd(params.x(), params.p() - 1)
                    * modmath::gcd(params.x(), params.q() - 1);
                prop_assert_eq!(rc.roots.len() as u64, expected);
            }
        }
    }
}
