//! Declarative scenario documents.
//!
//! A scenario is a JSON object:
//!
//! ```json
//! {
//!   "name": "exp2",
//!   "profile": "default-forwarding",
//!   "routers": [{"name": "X1", "asn": 65001}, {"name": "Y1", "asn": 65002, "router_id": "10.255.0.2"}],
//!   "links": [{"a": "Y1", "b": "X1", "send_communities": true}],
//!   "policies": [{"router": "Y2", "neighbor": "Z1", "direction": "ingress", "action": {"add_community": "65002:300"}}],
//!   "events": [{"at": 0, "kind": {"announce_origin": {"router": "Z1", "prefix": "203.0.113.0/24"}}},
//!              {"at": 60, "kind": {"link_down": {"a": "Y1", "b": "Y2"}}}],
//!   "max_messages_per_event": 10000
//! }
//! ```
//!
//! `profile` is a preset name or an object of [`RouterProfile`] flags and may
//! be overridden per router. Each link carries one BGP session; it is iBGP
//! when both ends share an ASN. Link `k` (zero-based) is addressed
//! `10.0.k.1` on side `a` and `10.0.k.2` on side `b`. Router ids default to
//! `10.255.0.n` in declaration order. `send_communities` overrides the
//! profile default on eBGP links; iBGP links always carry communities.
//! Policy actions are `{"add_community": "hi:lo"}`,
//! `"strip_all_communities"` or `"none"`. Unknown fields are rejected.

use std::collections::BTreeSet;
use std::net::Ipv4Addr;

use commex_core::mrt::{Asn, Community};
use ipnet::IpNet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::{ProfileSpec, RouterProfile};

pub const DEFAULT_MAX_MESSAGES_PER_EVENT: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Ingress,
    Egress,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyAction {
    AddCommunity(Community),
    StripAllCommunities,
    None,
}

impl PolicyAction {
    pub fn apply(&self, communities: &mut Vec<Community>) {
        match self {
            PolicyAction::AddCommunity(c) => {
                if let Err(i) = communities.binary_search(c) {
                    communities.insert(i, *c);
                }
            }
            PolicyAction::StripAllCommunities => communities.clear(),
            PolicyAction::None => {}
        }
    }
}

/// Community rewrite on one side of one session. Ingress rules run before
/// the route enters the Adj-RIB-In; egress rules run on the outgoing route
/// before it is compared with what was sent last.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyRule {
    pub router: String,
    pub neighbor: String,
    pub direction: Direction,
    pub action: PolicyAction,
}

impl PolicyRule {
    pub fn new(router: &str, neighbor: &str, direction: Direction, action: PolicyAction) -> Self {
        PolicyRule { router: router.into(), neighbor: neighbor.into(), direction, action }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    AnnounceOrigin { router: String, prefix: IpNet },
    WithdrawOrigin { router: String, prefix: IpNet },
    LinkDown { a: String, b: String },
    LinkUp { a: String, b: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimEvent {
    /// Virtual time in seconds.
    pub at: u64,
    pub kind: EventKind,
}

impl SimEvent {
    pub fn announce(at: u64, router: &str, prefix: IpNet) -> Self {
        SimEvent { at, kind: EventKind::AnnounceOrigin { router: router.into(), prefix } }
    }

    pub fn withdraw(at: u64, router: &str, prefix: IpNet) -> Self {
        SimEvent { at, kind: EventKind::WithdrawOrigin { router: router.into(), prefix } }
    }

    pub fn link_down(at: u64, a: &str, b: &str) -> Self {
        SimEvent { at, kind: EventKind::LinkDown { a: a.into(), b: b.into() } }
    }

    pub fn link_up(at: u64, a: &str, b: &str) -> Self {
        SimEvent { at, kind: EventKind::LinkUp { a: a.into(), b: b.into() } }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouterSpec {
    pub name: String,
    pub asn: Asn,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub router_id: Option<Ipv4Addr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub a: String,
    pub b: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub send_communities: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub profile: ProfileSpec,
    pub routers: Vec<RouterSpec>,
    pub links: Vec<LinkSpec>,
    #[serde(default)]
    pub policies: Vec<PolicyRule>,
    #[serde(default)]
    pub events: Vec<SimEvent>,
    #[serde(default = "default_bound")]
    pub max_messages_per_event: usize,
}

fn default_bound() -> usize {
    DEFAULT_MAX_MESSAGES_PER_EVENT
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { field: field.into(), reason: reason.into() }
}

impl Scenario {
    /// Parse and validate a scenario document.
    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    fn router(&self, name: &str) -> Option<&RouterSpec> {
        self.routers.iter().find(|r| r.name == name)
    }

    fn link_index(&self, a: &str, b: &str) -> Option<usize> {
        self.links.iter().position(|l| (l.a == a && l.b == b) || (l.a == b && l.b == a))
    }

    pub fn profile_of(&self, router: &RouterSpec) -> Result<RouterProfile, String> {
        router.profile.as_ref().unwrap_or(&self.profile).resolve()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.routers.is_empty() {
            return Err(invalid("routers", "at least one router is required"));
        }
        if self.links.len() > 256 {
            return Err(invalid("links", "at most 256 links are supported"));
        }
        if self.max_messages_per_event == 0 {
            return Err(invalid("max_messages_per_event", "must be positive"));
        }
        self.profile.resolve().map_err(|e| invalid("profile", e))?;

        let mut names = BTreeSet::new();
        let mut ids = BTreeSet::new();
        for (i, r) in self.routers.iter().enumerate() {
            if r.name.is_empty() {
                return Err(invalid(format!("routers[{i}].name"), "must not be empty"));
            }
            if !names.insert(r.name.as_str()) {
                return Err(invalid(format!("routers[{i}].name"), format!("duplicate router `{}`", r.name)));
            }
            if let Some(id) = r.router_id {
                if !ids.insert(id) {
                    return Err(invalid(format!("routers[{i}].router_id"), format!("duplicate router id {id}")));
                }
            }
            if let Some(p) = &r.profile {
                p.resolve().map_err(|e| invalid(format!("routers[{i}].profile"), e))?;
            }
        }

        let known = |field: String, name: &str| -> Result<(), ScenarioError> {
            if self.router(name).is_none() {
                return Err(invalid(field, format!("unknown router `{name}`")));
            }
            Ok(())
        };
        for (i, l) in self.links.iter().enumerate() {
            known(format!("links[{i}].a"), &l.a)?;
            known(format!("links[{i}].b"), &l.b)?;
            if l.a == l.b {
                return Err(invalid(format!("links[{i}]"), "a link needs two distinct routers"));
            }
            if self.link_index(&l.a, &l.b) != Some(i) {
                return Err(invalid(format!("links[{i}]"), format!("duplicate link {}-{}", l.a, l.b)));
            }
        }
        for (i, p) in self.policies.iter().enumerate() {
            known(format!("policies[{i}].router"), &p.router)?;
            known(format!("policies[{i}].neighbor"), &p.neighbor)?;
            if self.link_index(&p.router, &p.neighbor).is_none() {
                return Err(invalid(
                    format!("policies[{i}].neighbor"),
                    format!("no session between {} and {}", p.router, p.neighbor),
                ));
            }
        }
        let mut last = 0;
        for (i, e) in self.events.iter().enumerate() {
            if e.at < last {
                return Err(invalid(format!("events[{i}].at"), "events must be sorted by time"));
            }
            last = e.at;
            match &e.kind {
                EventKind::AnnounceOrigin { router, .. } | EventKind::WithdrawOrigin { router, .. } => {
                    known(format!("events[{i}].kind.router"), router)?
                }
                EventKind::LinkDown { a, b } | EventKind::LinkUp { a, b } => {
                    if self.link_index(a, b).is_none() {
                        return Err(invalid(format!("events[{i}].kind"), format!("no link between {a} and {b}")));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_community_keeps_sorted_set() {
        let mut c = vec![Community::new(1, 1), Community::new(3, 3)];
        PolicyAction::AddCommunity(Community::new(2, 2)).apply(&mut c);
        PolicyAction::AddCommunity(Community::new(2, 2)).apply(&mut c);
        assert_eq!(c, vec![Community::new(1, 1), Community::new(2, 2), Community::new(3, 3)]);
        PolicyAction::StripAllCommunities.apply(&mut c);
        assert!(c.is_empty());
    }

    #[test]
    fn action_json_forms() {
        let a: PolicyAction = serde_json::from_str(r#"{"add_community": "65002:300"}"#).unwrap();
        assert_eq!(a, PolicyAction::AddCommunity(Community::new(65002, 300)));
        let a: PolicyAction = serde_json::from_str(r#""strip_all_communities""#).unwrap();
        assert_eq!(a, PolicyAction::StripAllCommunities);
    }
}
