//! Scripted, replayable protocol runs.
//!
//! A [`Scenario`] is a JSON file: parameters, a seed message, user ids, vault
//! entries, and a step list. [`run_scenario`] executes it and returns the full
//! event transcript plus a per-step success report. The run is a pure function
//! of the file — the only randomness is a seeded stream used for session
//! nonces — so identical scenarios produce byte-identical transcripts.

use super::adversary::adversary_candidates;
use super::vault::VaultEntry;
use super::{
    authenticate_with_tag, db_access_with_presentations, inter_user_send, reconstruct_cipher,
    refresh_params, setup_group, EventKind, ProtocolEvent, UserAgent, ADVERSARY_ACTOR,
    VERIFIER_ACTOR,
};
use crate::tagcodec::{tag_encode, TaggedCipher};
use crate::transform::{make_params, ParamSet};
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub p: u64,
    pub q: u64,
    pub x: u64,
}

impl ScenarioParams {
    fn build(&self) -> Result<ParamSet, ScenarioError> {
        make_params(self.p, self.q, self.x).map_err(|err| ScenarioError::Setup(err.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VaultSpec {
    pub name: String,
    pub plaintext_hex: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmitTag {
    User1,
    User2,
}

/// One scripted operation. `expect_fail` marks steps whose failure is part of
/// the script (a forged tag, a send before login) so the run as a whole still
/// counts as successful.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Step {
    Auth {
        user: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        forge_tag: Option<u64>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        expect_fail: bool,
    },
    Send {
        from: String,
        to: Vec<String>,
        message: u64,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        expect_fail: bool,
    },
    DbAccess {
        user1: String,
        user2: String,
        entry: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omit_tag: Option<OmitTag>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        expect_fail: bool,
    },
    Reconstruct {
        roots: Vec<u64>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        expect_fail: bool,
    },
    Refresh {
        params: ScenarioParams,
        seed_message: u64,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        expect_fail: bool,
    },
    Observe {
        cipher: u64,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        expect_fail: bool,
    },
}

impl Step {
    pub fn op_name(&self) -> &'static str {
        match self {
            Step::Auth { .. } => "auth",
            Step::Send { .. } => "send",
            Step::DbAccess { .. } => "db_access",
            Step::Reconstruct { .. } => "reconstruct",
            Step::Refresh { .. } => "refresh",
            Step::Observe { .. } => "observe",
        }
    }

    pub fn expect_fail(&self) -> bool {
        match self {
            Step::Auth { expect_fail, .. }
            | Step::Send { expect_fail, .. }
            | Step::DbAccess { expect_fail, .. }
            | Step::Reconstruct { expect_fail, .. }
            | Step::Refresh { expect_fail, .. }
            | Step::Observe { expect_fail, .. } => *expect_fail,
        }
    }
}

/// A complete scripted run: group setup inputs plus the step list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub params: ScenarioParams,
    pub seed_message: u64,
    pub users: Vec<String>,
    #[serde(default)]
    pub vault: Vec<VaultSpec>,
    #[serde(default)]
    pub steps: Vec<Step>,
    #[serde(default)]
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("scenario setup failed: {0}")]
    Setup(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepReport {
    pub index: usize,
    pub op: &'static str,
    pub failed: bool,
    pub expect_fail: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub events: Vec<ProtocolEvent>,
    pub steps: Vec<StepReport>,
}

impl RunOutcome {
    /// True when every step either succeeded or was scripted to fail.
    pub fn success(&self) -> bool {
        self.steps
            .iter()
            .all(|step| !step.failed || step.expect_fail)
    }
}

/// Renders events as JSON lines, one event per line, every line terminated.
pub fn render_transcript(events: &[ProtocolEvent]) -> String {
    let mut out = String::new();
    for event in events {
        out.push_str(&serde_json::to_string(event).expect("events serialize"));
        out.push('\n');
    }
    out
}

fn find_agent(agents: &[UserAgent], id: &str) -> Option<usize> {
    agents.iter().position(|agent| agent.id == id)
}

/// An agent for an id the verifier never registered; runs through the same
/// ops and collects the natural denials.
fn ephemeral_agent(id: &str) -> UserAgent {
    UserAgent {
        id: id.to_string(),
        root: 0,
        authenticated: false,
        session_nonce: 0,
    }
}

/// Executes a scenario start to finish. Setup problems (invalid parameters,
/// bad hex, too many users) are reported as [`ScenarioError::Setup`]; step
/// failures are recorded per step in the outcome instead.
pub fn run_scenario(scenario: &Scenario) -> Result<RunOutcome, ScenarioError> {
    let params = scenario.params.build()?;
    let (mut verifier, mut agents) = setup_group(&params, scenario.seed_message, &scenario.users)
        .map_err(|err| ScenarioError::Setup(err.to_string()))?;
    let vault: Vec<VaultEntry> = scenario
        .vault
        .iter()
        .map(|spec| {
            let plaintext = hex::decode(&spec.plaintext_hex).map_err(|err| {
                ScenarioError::Setup(format!("vault entry {:?}: {err}", spec.name))
            })?;
            Ok(VaultEntry::seal(
                spec.name.clone(),
                &plaintext,
                verifier.group_cipher(),
            ))
        })
        .collect::<Result<_, ScenarioError>>()?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(scenario.rng_seed);

    let mut reports = Vec::with_capacity(scenario.steps.len());
    for (index, step) in scenario.steps.iter().enumerate() {
        let failed = match step {
            Step::Auth {
                user, forge_tag, ..
            } => {
                let nonce = rng.next_u64();
                let mut agent = match find_agent(&agents, user) {
                    Some(i) => agents[i].clone(),
                    None => ephemeral_agent(user),
                };
                agent.session_nonce = nonce;
                let tc = match forge_tag {
                    Some(t) => TaggedCipher {
                        c: verifier.group_cipher(),
                        t: *t,
                    },
                    None => tag_encode(agent.root, verifier.group_cipher(), verifier.params().p())
                        .unwrap_or(TaggedCipher {
                            c: verifier.group_cipher(),
                            t: 0,
                        }),
                };
                let outcome = authenticate_with_tag(&mut agent, &mut verifier, tc);
                if let Some(i) = find_agent(&agents, user) {
                    agents[i] = agent;
                }
                !outcome.is_ok()
            }
            Step::Send {
                from, to, message, ..
            } => {
                let sender = match find_agent(&agents, from) {
                    Some(i) => agents[i].clone(),
                    None => ephemeral_agent(from),
                };
                let recipients: Vec<UserAgent> = to
                    .iter()
                    .map(|id| match find_agent(&agents, id) {
                        Some(i) => agents[i].clone(),
                        None => ephemeral_agent(id),
                    })
                    .collect();
                let refs: Vec<&UserAgent> = recipients.iter().collect();
                !inter_user_send(&sender, &refs, *message, &mut verifier).is_ok()
            }
            Step::DbAccess {
                user1,
                user2,
                entry,
                omit_tag,
                ..
            } => {
                let a1 = match find_agent(&agents, user1) {
                    Some(i) => agents[i].clone(),
                    None => ephemeral_agent(user1),
                };
                let a2 = match find_agent(&agents, user2) {
                    Some(i) => agents[i].clone(),
                    None => ephemeral_agent(user2),
                };
                let outcome = db_access_with_presentations(
                    &a1,
                    &a2,
                    entry,
                    &mut verifier,
                    &vault,
                    *omit_tag != Some(OmitTag::User1),
                    *omit_tag != Some(OmitTag::User2),
                );
                !outcome.is_ok()
            }
            Step::Reconstruct { roots, .. } => match reconstruct_cipher(roots, verifier.params()) {
                Ok(cipher) => {
                    verifier.emit(
                        VERIFIER_ACTOR,
                        EventKind::Reconstruct,
                        json!({ "roots": roots, "cipher": cipher }),
                    );
                    false
                }
                Err(err) => {
                    verifier.emit(
                        VERIFIER_ACTOR,
                        EventKind::Reconstruct,
                        json!({ "roots": roots, "error": err.to_string() }),
                    );
                    true
                }
            },
            Step::Refresh {
                params: new_params,
                seed_message,
                ..
            } => match new_params.build() {
                Ok(built) => {
                    refresh_params(&mut verifier, &mut agents, &built, *seed_message).is_err()
                }
                Err(_) => true,
            },
            Step::Observe { cipher, .. } => {
                match adversary_candidates(*cipher, verifier.params().n(), verifier.params().x()) {
                    Ok(candidates) => {
                        let truncated = candidates.len() > 64;
                        let listed: Vec<u64> = candidates.iter().take(64).copied().collect();
                        verifier.emit(
                            ADVERSARY_ACTOR,
                            EventKind::Observe,
                            json!({
                                "cipher": cipher,
                                "count": candidates.len(),
                                "candidates": listed,
                                "truncated": truncated,
                            }),
                        );
                        false
                    }
                    Err(_) => true,
                }
            }
        };
        reports.push(StepReport {
            index,
            op: step.op_name(),
            failed,
            expect_fail: step.expect_fail(),
        });
    }
    Ok(RunOutcome {
        events: verifier.into_audit_log(),
        steps: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::super::verify_transcript_safety;
    use super::*;

    fn base_scenario() -> Scenario {
        Scenario {
            params: ScenarioParams { p: 5, q: 11, x: 5 },
            seed_message: 3,
            users: ["alice", "bob", "carol", "dave", "erin"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            vault: vec![VaultSpec {
                name: "ledger".to_string(),
                plaintext_hex: hex::encode(b"meet at dawn"),
            }],
            steps: vec![
                Step::Auth {
                    user: "alice".into(),
                    forge_tag: None,
                    expect_fail: false,
                },
                Step::Auth {
                    user: "bob".into(),
                    forge_tag: None,
                    expect_fail: false,
                },
                Step::Auth {
                    user: "carol".into(),
                    forge_tag: None,
                    expect_fail: false,
                },
                Step::Auth {
                    user: "dave".into(),
                    forge_tag: None,
                    expect_fail: false,
                },
                Step::Auth {
                    user: "erin".into(),
                    forge_tag: None,
                    expect_fail: false,
                },
                Step::Send {
                    from: "alice".into(),
                    to: vec!["bob".into(), "carol".into(), "dave".into(), "erin".into()],
                    message: 9,
                    expect_fail: false,
                },
                Step::DbAccess {
                    user1: "alice".into(),
                    user2: "bob".into(),
                    entry: "ledger".into(),
                    omit_tag: None,
                    expect_fail: false,
                },
            ],
            rng_seed: 7,
        }
    }

    #[test]
    fn base_scenario_reaches_a_grant() {
        let outcome = run_scenario(&base_scenario()).unwrap();
        assert!(outcome.success());
        assert_eq!(outcome.steps.len(), 7);
        let last = outcome.events.last().unwrap();
        assert_eq!(last.kind, EventKind::DbGrant);
        assert_eq!(last.payload["plaintext_hex"], hex::encode(b"meet at dawn"));
        assert!(verify_transcript_safety(&outcome.events, 55, 5).is_empty());
    }

    #[test]
    fn transcripts_are_byte_identical_across_runs() {
        let scenario = base_scenario();
        let first = render_transcript(&run_scenario(&scenario).unwrap().events);
        let second = render_transcript(&run_scenario(&scenario).unwrap().events);
        assert_eq!(first, second);
        assert!(first.lines().count() > 0);
    }

    #[test]
    fn forged_tag_fails_and_blocks_later_sends() {
        let mut scenario = base_scenario();
        scenario.users.truncate(2);
        scenario.steps = vec![
            Step::Auth {
                user: "alice".into(),
                forge_tag: Some(8),
                expect_fail: true,
            },
            Step::Send {
                from: "alice".into(),
                to: vec!["bob".into()],
                message: 9,
                expect_fail: true,
            },
            Step::Auth {
                user: "alice".into(),
                forge_tag: None,
                expect_fail: false,
            },
        ];
        let outcome = run_scenario(&scenario).unwrap();
        assert!(outcome.success());
        assert!(outcome.steps[0].failed && outcome.steps[1].failed && !outcome.steps[2].failed);
        assert!(outcome.events.iter().any(|e| e.kind == EventKind::AuthFail));
    }

    #[test]
    fn expectation_marks_gate_the_overall_verdict() {
        let mut scenario = base_scenario();
        scenario.steps = vec![Step::Auth {
            user: "alice".into(),
            forge_tag: Some(8),
            expect_fail: false,
        }];
        let outcome = run_scenario(&scenario).unwrap();
        assert!(!outcome.success());
    }

    #[test]
    fn empty_step_list_is_a_successful_run() {
        let mut scenario = base_scenario();
        scenario.steps.clear();
        let outcome = run_scenario(&scenario).unwrap();
        assert!(outcome.success());
        // setup still registers the group
        assert_eq!(outcome.events.len(), 5);
    }

    #[test]
    fn setup_problems_are_rejected_with_a_reason() {
        let mut scenario = base_scenario();
        scenario.params = ScenarioParams { p: 5, q: 11, x: 3 };
        let err = run_scenario(&scenario).unwrap_err();
        assert!(err.to_string().contains("x does not divide phi"));

        let mut scenario = base_scenario();
        scenario.vault[0].plaintext_hex = "zz".to_string();
        assert!(run_scenario(&scenario).is_err());

        let mut scenario = base_scenario();
        scenario.users.push("frank".to_string());
        assert!(run_scenario(&scenario)
            .unwrap_err()
            .to_string()
            .contains("5 roots"));
    }

    #[test]
    fn steps_about_unknown_users_fail_without_derailing_the_run() {
        let mut scenario = base_scenario();
        scenario.steps = vec![
            Step::Auth {
                user: "mallory".into(),
                forge_tag: None,
                expect_fail: true,
            },
            Step::Auth {
                user: "alice".into(),
                forge_tag: None,
                expect_fail: false,
            },
            Step::Send {
                from: "mallory".into(),
                to: vec!["alice".into()],
                message: 2,
                expect_fail: true,
            },
        ];
        let outcome = run_scenario(&scenario).unwrap();
        assert!(outcome.success());
        assert!(outcome.steps[0].failed);
        assert!(!outcome.steps[1].failed);
        assert!(outcome.steps[2].failed);
    }

    #[test]
    fn refresh_step_rotates_the_group_mid_run() {
        let mut scenario = base_scenario();
        scenario.steps = vec![
            Step::Auth {
                user: "alice".into(),
                forge_tag: None,
                expect_fail: false,
            },
            Step::Refresh {
                params: ScenarioParams { p: 5, q: 31, x: 5 },
                seed_message: 2,
                expect_fail: false,
            },
            // sessions were invalidated by the refresh
            Step::Send {
                from: "alice".into(),
                to: vec!["bob".into()],
                message: 2,
                expect_fail: true,
            },
            Step::Auth {
                user: "alice".into(),
                forge_tag: None,
                expect_fail: false,
            },
        ];
        let outcome = run_scenario(&scenario).unwrap();
        assert!(outcome.success(), "reports: {:?}", outcome.steps);
        let refresh = outcome
            .events
            .iter()
            .find(|e| e.kind == EventKind::Refresh)
            .unwrap();
        assert_eq!(refresh.payload["n"], 155);
        assert_eq!(refresh.payload["reassigned"]["alice"], 2);
        assert!(verify_transcript_safety(&outcome.events, 55, 5).is_empty());
    }

    #[test]
    fn observe_step_records_the_candidate_set() {
        let mut scenario = base_scenario();
        scenario.steps = vec![Step::Observe {
            cipher: 23,
            expect_fail: false,
        }];
        let outcome = run_scenario(&scenario).unwrap();
        let observe = outcome.events.last().unwrap();
        assert_eq!(observe.kind, EventKind::Observe);
        assert_eq!(observe.actor, ADVERSARY_ACTOR);
        assert_eq!(observe.payload["count"], 5);
        assert_eq!(observe.payload["candidates"], json!([3, 23, 38, 48, 53]));
    }

    #[test]
    fn ambiguity_never_narrows_below_the_registered_roots() {
        // For every sent cipher, the eavesdropper's candidate set is at least
        // as large as the number of registered roots behind that cipher.
        let outcome = run_scenario(&base_scenario()).unwrap();
        let registered: Vec<(u64, u64)> = outcome
            .events
            .iter()
            .filter(|e| e.kind == EventKind::Register)
            .map(|e| {
                (
                    e.payload["root"].as_u64().unwrap(),
                    e.payload["cipher"].as_u64().unwrap(),
                )
            })
            .collect();
        for event in outcome
            .events
            .iter()
            .filter(|e| e.kind == EventKind::MsgSend)
        {
            let cipher = event.payload["cipher"].as_u64().unwrap();
            let candidates = adversary_candidates(cipher, 55, 5).unwrap();
            let holders = registered.iter().filter(|(_, c)| *c == cipher).count();
            assert!(candidates.len() >= holders);
        }
    }

    #[test]
    fn scenario_schema_round_trips_through_json() {
        let scenario = base_scenario();
        let text = serde_json::to_string_pretty(&scenario).unwrap();
        let back: Scenario = serde_json::from_str(&text).unwrap();
        assert_eq!(back, scenario);
        // op tags are snake_case strings
        assert!(text.contains(r#""op": "db_access""#));
    }
}
