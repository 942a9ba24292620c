//! Post-hoc safety audit of a transcript.
//!
//! The scanner re-derives, from the public event stream alone, whether every
//! grant was justified: both named users must have authenticated since the
//! last parameter refresh, and both granted roots must be distinct members of
//! the entry's key class under the parameters in force at that moment. It
//! needs only the public `(n, x)` — membership is `root^x mod n == key_cipher`.

use super::{EventKind, ProtocolEvent};
use crate::modmath;
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafetyViolation {
    pub step: u64,
    pub detail: String,
}

/// Scans a transcript for unjustified grants under the safety rule above.
/// Returns one violation per offending grant; an empty list means the
/// transcript is clean.
pub fn verify_transcript_safety(
    events: &[ProtocolEvent],
    initial_n: u64,
    initial_x: u64,
) -> Vec<SafetyViolation> {
    let mut violations = Vec::new();
    let mut n = initial_n;
    let mut x = initial_x;
    let mut authed: BTreeSet<String> = BTreeSet::new();
    for event in events {
        match event.kind {
            EventKind::AuthOk => {
                authed.insert(event.actor.clone());
            }
            EventKind::Refresh => {
                // New epoch: parameters change and every session is void.
                if let (Some(new_n), Some(new_x)) =
                    (event.payload["n"].as_u64(), event.payload["x"].as_u64())
                {
                    n = new_n;
                    x = new_x;
                }
                authed.clear();
            }
            EventKind::DbGrant => {
                let mut complain = |detail: String| {
                    violations.push(SafetyViolation {
                        step: event.step,
                        detail,
                    });
                };
                let field = |name: &str| event.payload[name].as_u64();
                let user = |name: &str| event.payload[name].as_str();
                let (Some(user1), Some(user2)) = (user("user1"), user("user2")) else {
                    complain("grant without user fields".to_string());
                    continue;
                };
                let (Some(root1), Some(root2), Some(key)) =
                    (field("root1"), field("root2"), field("key_cipher"))
                else {
                    complain("grant without root fields".to_string());
                    continue;
                };
                if user1 == user2 {
                    complain(format!("grant to a single user {user1:?}"));
                }
                for user in [user1, user2] {
                    if !authed.contains(user) {
                        complain(format!("grant to {user:?} without prior auth_ok"));
                    }
                }
                if root1 == root2 {
                    complain(format!("grant with duplicate root {root1}"));
                }
                for root in [root1, root2] {
                    if modmath::pow_mod(root, x, n) != Ok(key) {
                        complain(format!("granted root {root} is not in the class of {key}"));
                    }
                }
            }
            _ => {}
        }
    }
    violations
}
