//! Deterministic simulation of the multi-user group protocol.
//!
//! A trusted verifier — the stand-in for the users' secret hardware — holds
//! the private factors and a registry mapping each user id to one root of the
//! shared group cipher. Users authenticate by presenting `(cipher, tag)`
//! pairs, exchange messages through the verifier, and unlock database entries
//! only in pairs: both must be authenticated *and* present fresh tags whose
//! decoded roots are distinct registered members of the entry's key class.
//! Every operation appends to an ordered audit log, and identical inputs
//! produce byte-identical logs.

mod adversary;
mod scenario;
mod transcript;
mod vault;

pub use adversary::{adversary_candidates, adversary_candidates_with_guard, adversary_factor_leak};
pub use scenario::{
    render_transcript, run_scenario, OmitTag, RunOutcome, Scenario, ScenarioError, ScenarioParams,
    Step, StepReport, VaultSpec,
};
pub use transcript::{verify_transcript_safety, SafetyViolation};
pub use vault::{keystream_xor, VaultEntry};

use crate::modmath::{self, Residue};
use crate::tagcodec::{self, TagVerdict, TaggedCipher};
use crate::transform::{self, ParamSet, TransformError};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::BTreeMap;
use thiserror::Error;

/// Actor name the verifier signs its own events with.
pub const VERIFIER_ACTOR: &str = "verifier";

/// Actor name for eavesdropper events injected into a transcript.
pub const ADVERSARY_ACTOR: &str = "adversary";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("parameters are not tag-compatible (x = {x}, p = {p}): the tag scheme needs x ≡ 1 (mod p-1)")]
    NotTagCompatible { x: u64, p: u64 },
    #[error("seed message {seed} shares factor {factor} with modulus {n}")]
    NonUnitSeed { seed: u64, factor: u64, n: u64 },
    #[error(
        "root class of cipher {cipher} has {available} roots but {needed} users need one each"
    )]
    ClassTooSmall {
        cipher: u64,
        available: usize,
        needed: usize,
    },
    #[error("duplicate user id {0:?}")]
    DuplicateUser(String),
    #[error("no roots given")]
    EmptyRootSet,
    #[error("incomplete class for cipher {cipher}: {missing} missing, {extra} foreign")]
    IncompleteClass {
        cipher: u64,
        missing: usize,
        extra: usize,
    },
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// One participant: an id, the root it holds, and its session state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UserAgent {
    pub id: String,
    pub root: u64,
    pub authenticated: bool,
    pub session_nonce: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Register,
    AuthRequest,
    AuthOk,
    AuthFail,
    MsgSend,
    MsgDeliver,
    DbRequest,
    DbGrant,
    DbDeny,
    Reconstruct,
    Refresh,
    Observe,
}

/// One audit-log line. Serializes with fields in declaration order, which is
/// what makes transcripts byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolEvent {
    pub step: u64,
    pub actor: String,
    pub kind: EventKind,
    pub payload: serde_json::Value,
}

/// The trusted in-process verifier: private parameters, the group cipher, the
/// id-to-root registry, and the growing audit log.
#[derive(Debug, Clone)]
pub struct VerifierState {
    params: ParamSet,
    group_cipher: u64,
    registry: BTreeMap<String, u64>,
    audit_log: Vec<ProtocolEvent>,
}

impl VerifierState {
    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn group_cipher(&self) -> u64 {
        self.group_cipher
    }

    pub fn registry(&self) -> &BTreeMap<String, u64> {
        &self.registry
    }

    pub fn audit_log(&self) -> &[ProtocolEvent] {
        &self.audit_log
    }

    pub fn into_audit_log(self) -> Vec<ProtocolEvent> {
        self.audit_log
    }

    fn emit(&mut self, actor: &str, kind: EventKind, payload: serde_json::Value) {
        let step = self.audit_log.len() as u64;
        self.audit_log.push(ProtocolEvent {
            step,
            actor: actor.to_string(),
            kind,
            payload,
        });
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuthOutcome {
    Authenticated { root: u64 },
    Refused { reason: String },
}

impl AuthOutcome {
    pub fn is_ok(&self) -> bool {
        matches!(self, AuthOutcome::Authenticated { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SendOutcome {
    Delivered { cipher: u64, tag: u64 },
    Refused { reason: String },
}

impl SendOutcome {
    pub fn is_ok(&self) -> bool {
        matches!(self, SendOutcome::Delivered { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DbOutcome {
    Granted { plaintext: Vec<u8> },
    Denied { reason: String },
}

impl DbOutcome {
    pub fn is_ok(&self) -> bool {
        matches!(self, DbOutcome::Granted { .. })
    }
}

/// Creates a group: encrypts the seed into the group cipher and hands each
/// user one root of its class, ascending roots in ascending id order. Requires
/// tag-compatible parameters (authentication runs on tags) and a unit seed
/// (unit classes are full-sized and invertible).
pub fn setup_group(
    params: &ParamSet,
    seed_message: u64,
    user_ids: &[String],
) -> Result<(VerifierState, Vec<UserAgent>), ProtocolError> {
    if !params.tag_compatible() {
        return Err(ProtocolError::NotTagCompatible {
            x: params.x(),
            p: params.p(),
        });
    }
    Residue::new(seed_message, params.n()).map_err(TransformError::from)?;
    let shared = modmath::gcd(seed_message, params.n());
    if shared != 1 {
        return Err(ProtocolError::NonUnitSeed {
            seed: seed_message,
            factor: shared,
            n: params.n(),
        });
    }
    let group_cipher = transform::encrypt(seed_message, params)?;
    let class = transform::roots_crt(group_cipher, params)?;
    let mut ids: Vec<String> = user_ids.to_vec();
    ids.sort();
    if let Some(dup) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(ProtocolError::DuplicateUser(dup[0].clone()));
    }
    if ids.len() > class.roots.len() {
        return Err(ProtocolError::ClassTooSmall {
            cipher: group_cipher,
            available: class.roots.len(),
            needed: ids.len(),
        });
    }
    let registry: BTreeMap<String, u64> = ids
        .iter()
        .cloned()
        .zip(class.roots.iter().copied())
        .collect();
    let mut verifier = VerifierState {
        params: *params,
        group_cipher,
        registry,
        audit_log: Vec::new(),
    };
    let mut agents = Vec::with_capacity(ids.len());
    for id in &ids {
        let root = verifier.registry[id];
        verifier.emit(
            id,
            EventKind::Register,
            json!({ "root": root, "cipher": group_cipher }),
        );
        agents.push(UserAgent {
            id: id.clone(),
            root,
            authenticated: false,
            session_nonce: 0,
        });
    }
    Ok((verifier, agents))
}

/// First-stage authentication: the agent tags its own root against the group
/// cipher and the verifier checks both the tag and the registry binding.
pub fn authenticate(agent: &mut UserAgent, verifier: &mut VerifierState) -> AuthOutcome {
    match tagcodec::tag_encode(agent.root, verifier.group_cipher, verifier.params.p()) {
        Ok(tc) => authenticate_with_tag(agent, verifier, tc),
        Err(err) => {
            verifier.emit(
                &agent.id,
                EventKind::AuthRequest,
                json!({ "cipher": verifier.group_cipher, "tag": null, "nonce": agent.session_nonce }),
            );
            let reason = "tag-invalid";
            verifier.emit(
                &agent.id,
                EventKind::AuthFail,
                json!({ "reason": reason, "detail": err.to_string() }),
            );
            AuthOutcome::Refused {
                reason: reason.to_string(),
            }
        }
    }
}

/// Authentication with a caller-supplied (possibly forged) tag pair.
pub fn authenticate_with_tag(
    agent: &mut UserAgent,
    verifier: &mut VerifierState,
    tc: TaggedCipher,
) -> AuthOutcome {
    verifier.emit(
        &agent.id,
        EventKind::AuthRequest,
        json!({ "cipher": tc.c, "tag": tc.t, "nonce": agent.session_nonce }),
    );
    let refuse = |verifier: &mut VerifierState, reason: &str, detail: serde_json::Value| {
        verifier.emit(&agent.id, EventKind::AuthFail, detail);
        AuthOutcome::Refused {
            reason: reason.to_string(),
        }
    };
    let Some(&registered) = verifier.registry.get(&agent.id) else {
        return refuse(
            verifier,
            "unknown-user",
            json!({ "reason": "unknown-user" }),
        );
    };
    let root = match tagcodec::verify_tagged(&tc, &verifier.params) {
        TagVerdict::Accepted { root } => root,
        TagVerdict::Rejected { reason } => {
            return refuse(
                verifier,
                "tag-invalid",
                json!({ "reason": "tag-invalid", "detail": reason }),
            );
        }
    };
    if root != registered {
        return refuse(
            verifier,
            "root-mismatch",
            json!({ "reason": "root-mismatch", "decoded": root }),
        );
    }
    agent.authenticated = true;
    verifier.emit(
        &agent.id,
        EventKind::AuthOk,
        json!({ "root": root, "nonce": agent.session_nonce }),
    );
    AuthOutcome::Authenticated { root }
}

/// Authenticated broadcast: the sender wires `(encrypt(m), tag)` once and the
/// verifier decodes it for each recipient. Everyone involved must hold a live
/// session.
pub fn inter_user_send(
    sender: &UserAgent,
    recipients: &[&UserAgent],
    message: u64,
    verifier: &mut VerifierState,
) -> SendOutcome {
    let unauthenticated = std::iter::once(sender)
        .chain(recipients.iter().copied())
        .find(|agent| !agent.authenticated);
    if let Some(agent) = unauthenticated {
        verifier.emit(
            &agent.id,
            EventKind::AuthFail,
            json!({ "reason": "auth-required", "op": "send" }),
        );
        return SendOutcome::Refused {
            reason: "auth-required".to_string(),
        };
    }
    let cipher = match transform::encrypt(message, &verifier.params) {
        Ok(cipher) => cipher,
        Err(err) => {
            return SendOutcome::Refused {
                reason: err.to_string(),
            }
        }
    };
    // Group parameters are tag-compatible, so every message has an exact tag.
    let tc = tagcodec::tag_encode(message, cipher, verifier.params.p())
        .expect("tag-compatible parameters");
    let to: Vec<&str> = recipients.iter().map(|agent| agent.id.as_str()).collect();
    verifier.emit(
        &sender.id,
        EventKind::MsgSend,
        json!({ "cipher": tc.c, "tag": tc.t, "to": to }),
    );
    for recipient in recipients {
        let decoded = tagcodec::tag_decode(tc.t, tc.c, verifier.params.p(), verifier.params.n())
            .expect("round trip of a tag we just encoded");
        verifier.emit(
            &recipient.id,
            EventKind::MsgDeliver,
            json!({ "from": sender.id, "message": decoded }),
        );
    }
    SendOutcome::Delivered {
        cipher: tc.c,
        tag: tc.t,
    }
}

/// Dual-key database access with both second-stage presentations supplied.
pub fn db_access(
    u1: &UserAgent,
    u2: &UserAgent,
    entry_name: &str,
    verifier: &mut VerifierState,
    vault: &[VaultEntry],
) -> DbOutcome {
    db_access_with_presentations(u1, u2, entry_name, verifier, vault, true, true)
}

/// Dual-key database access, with control over whether each user actually
/// presents its second-stage tag (dropping one is the "authenticated once
/// only" failure case).
///
/// The grant path checks, in order: two distinct registered users, both with
/// live sessions; two well-formed presentations whose tags verify; decoded
/// roots equal to the registered ones and distinct; both presentation ciphers
/// equal to the entry's key cipher; and the factor between the two roots being
/// an x-th root of unity.
pub fn db_access_with_presentations(
    u1: &UserAgent,
    u2: &UserAgent,
    entry_name: &str,
    verifier: &mut VerifierState,
    vault: &[VaultEntry],
    present1: bool,
    present2: bool,
) -> DbOutcome {
    let presentation = |agent: &UserAgent, present: bool| -> Result<Option<TaggedCipher>, String> {
        if !present {
            return Ok(None);
        }
        let cipher = transform::encrypt(agent.root, &verifier.params).map_err(|e| e.to_string())?;
        tagcodec::tag_encode(agent.root, cipher, verifier.params.p())
            .map(Some)
            .map_err(|e| e.to_string())
    };
    let pres1 = presentation(u1, present1);
    let pres2 = presentation(u2, present2);
    verifier.emit(
        &u1.id,
        EventKind::DbRequest,
        json!({
            "entry": entry_name,
            "user1": u1.id,
            "user2": u2.id,
            "tag1": pres1.as_ref().ok().and_then(|p| *p),
            "tag2": pres2.as_ref().ok().and_then(|p| *p),
        }),
    );
    let deny = |verifier: &mut VerifierState, reason: &str| {
        verifier.emit(
            VERIFIER_ACTOR,
            EventKind::DbDeny,
            json!({ "entry": entry_name, "user1": u1.id, "user2": u2.id, "reason": reason }),
        );
        DbOutcome::Denied {
            reason: reason.to_string(),
        }
    };
    if u1.id == u2.id {
        return deny(verifier, "need-two-users");
    }
    let Some(entry) = vault.iter().find(|entry| entry.name == entry_name) else {
        return deny(verifier, "no-such-entry");
    };
    if !verifier.registry.contains_key(&u1.id) || !verifier.registry.contains_key(&u2.id) {
        return deny(verifier, "unknown-user");
    }
    if !u1.authenticated || !u2.authenticated {
        return deny(verifier, "auth-required");
    }
    let (tc1, tc2) = match (pres1, pres2) {
        (Err(_), _) | (_, Err(_)) => return deny(verifier, "tag-invalid"),
        (Ok(None), _) | (_, Ok(None)) => return deny(verifier, "second-auth-missing"),
        (Ok(Some(tc1)), Ok(Some(tc2))) => (tc1, tc2),
    };
    let verify = |tc: &TaggedCipher| tagcodec::verify_tagged(tc, &verifier.params);
    let (root1, root2) = match (verify(&tc1), verify(&tc2)) {
        (TagVerdict::Accepted { root: r1 }, TagVerdict::Accepted { root: r2 }) => (r1, r2),
        _ => return deny(verifier, "tag-invalid"),
    };
    if root1 != verifier.registry[&u1.id] || root2 != verifier.registry[&u2.id] || root1 == root2 {
        return deny(verifier, "root-mismatch");
    }
    if tc1.c != entry.key_cipher || tc2.c != entry.key_cipher {
        return deny(verifier, "class-mismatch");
    }
    let Ok(factor) = transform::find_factor(root1, root2, &verifier.params) else {
        return deny(verifier, "class-mismatch");
    };
    if !transform::roots_of_unity(&verifier.params).contains(&factor) {
        return deny(verifier, "class-mismatch");
    }
    let plaintext = entry.open();
    verifier.emit(
        VERIFIER_ACTOR,
        EventKind::DbGrant,
        json!({
            "entry": entry_name,
            "user1": u1.id,
            "user2": u2.id,
            "root1": root1,
            "root2": root2,
            "key_cipher": entry.key_cipher,
            "factor": factor,
            "plaintext_hex": hex::encode(&plaintext),
        }),
    );
    DbOutcome::Granted { plaintext }
}

/// Recovers a cipher from its complete root class by multiplying the roots.
/// The class is checked for completeness against the brute-force oracle; a
/// partial or polluted set is refused with the exact shortfall.
pub fn reconstruct_cipher(roots: &[u64], params: &ParamSet) -> Result<u64, ProtocolError> {
    let mut given = roots.to_vec();
    given.sort_unstable();
    given.dedup();
    let Some(&first) = given.first() else {
        return Err(ProtocolError::EmptyRootSet);
    };
    let cipher = transform::encrypt(first, params)?;
    let class = transform::roots_bruteforce(cipher, params)?;
    let missing = class
        .roots
        .iter()
        .filter(|root| !given.contains(root))
        .count();
    let extra = given
        .iter()
        .filter(|root| !class.roots.contains(root))
        .count();
    if missing > 0 || extra > 0 {
        return Err(ProtocolError::IncompleteClass {
            cipher,
            missing,
            extra,
        });
    }
    Ok(transform::product_of_roots(&class, params).product)
}

/// Rotates the group to fresh parameters: every session is invalidated and
/// every registered id is mapped, in the same ascending order, onto a root of
/// the new group cipher. Refuses — leaving all state untouched — if the new
/// class cannot seat the current registry.
pub fn refresh_params(
    verifier: &mut VerifierState,
    agents: &mut [UserAgent],
    new_params: &ParamSet,
    new_seed: u64,
) -> Result<BTreeMap<String, u64>, ProtocolError> {
    if !new_params.tag_compatible() {
        return Err(ProtocolError::NotTagCompatible {
            x: new_params.x(),
            p: new_params.p(),
        });
    }
    Residue::new(new_seed, new_params.n()).map_err(TransformError::from)?;
    let shared = modmath::gcd(new_seed, new_params.n());
    if shared != 1 {
        return Err(ProtocolError::NonUnitSeed {
            seed: new_seed,
            factor: shared,
            n: new_params.n(),
        });
    }
    let group_cipher = transform::encrypt(new_seed, new_params)?;
    let class = transform::roots_crt(group_cipher, new_params)?;
    if verifier.registry.len() > class.roots.len() {
        return Err(ProtocolError::ClassTooSmall {
            cipher: group_cipher,
            available: class.roots.len(),
            needed: verifier.registry.len(),
        });
    }
    let reassignment: BTreeMap<String, u64> = verifier
        .registry
        .keys()
        .cloned()
        .zip(class.roots.iter().copied())
        .collect();
    verifier.params = *new_params;
    verifier.group_cipher = group_cipher;
    verifier.registry = reassignment.clone();
    for agent in agents.iter_mut() {
        agent.authenticated = false;
        if let Some(&root) = verifier.registry.get(&agent.id) {
            agent.root = root;
        }
    }
    verifier.emit(
        VERIFIER_ACTOR,
        EventKind::Refresh,
        json!({
            "n": new_params.n(),
            "x": new_params.x(),
            "group_cipher": group_cipher,
            "reassigned": reassignment,
        }),
    );
    Ok(reassignment)
}
