//! Many-to-one modular power maps over a semiprime modulus.
//!
//! The map `m -> m^x mod n` with `n = p*q` and `x` dividing `phi(n)` sends
//! several residues to the same cipher value. This crate enumerates those
//! preimage sets ("root classes"), exposes the structural facts that make them
//! usable — pairwise differences share a factor with `n`, roots are related by
//! x-th roots of unity, the product of a full class reproduces the cipher —
//! and builds a small deterministic authentication protocol on top: each user
//! of a group holds one root of a shared cipher and proves it with an integer
//! tag that only the holder of the private factor `p` can mint or check.
//!
//! Everything is exact integer arithmetic at desk scale (`n <= 2^32`), with
//! brute-force oracles alongside the fast paths so every claim is checkable.

pub mod modmath;
pub mod protocol;
pub mod sweep;
pub mod tagcodec;
pub mod transform;

pub use modmath::{ModMathError, Residue};
pub use protocol::{
    adversary_candidates, adversary_factor_leak, authenticate, db_access, inter_user_send,
    reconstruct_cipher, refresh_params, run_scenario, setup_group, verify_transcript_safety,
    ProtocolError, ProtocolEvent, Scenario, UserAgent, VaultEntry, VerifierState,
};
pub use tagcodec::{TagError, TagVerdict, TaggedCipher};
pub use transform::{ParamSet, RootClass, TransformError};
