use std::fmt;
use std::io::Write;
use std::str::FromStr;

use commex_core::mrt::{Asn, Community};
use ipnet::IpNet;
use serde::Serialize;

use crate::capture::CaptureLog;
use crate::engine::{run_scenario, SimError, Simulation};
use crate::profile::{ProfileSpec, RouterProfile};
use crate::scenario::{
    Direction, LinkSpec, PolicyAction, PolicyRule, RouterSpec, Scenario, SimEvent, DEFAULT_MAX_MESSAGES_PER_EVENT,
};

pub const ASN_X: Asn = 65001;
pub const ASN_Y: Asn = 65002;
pub const ASN_Z: Asn = 65003;
pub const ASN_C: Asn = 65004;

/// Virtual time of the link failure in the scripted experiments.
pub const FLAP_TIME: u64 = 60;

pub fn lab_prefix() -> IpNet {
    "203.0.113.0/24".parse().expect("valid prefix")
}

pub const TAG_Y2: Community = Community((ASN_Y << 16) | 300);
pub const TAG_Y3: Community = Community((ASN_Y << 16) | 400);

/// Community rules plus the eBGP community-sending override that make up
/// one experiment's configuration.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PolicySet {
    pub rules: Vec<PolicyRule>,
    /// Explicit `send_communities` on every eBGP link; `None` keeps the
    /// profile default.
    pub ebgp_send_communities: Option<bool>,
}

const ROUTERS: [(&str, Asn); 6] =
    [("X1", ASN_X), ("Y1", ASN_Y), ("Y2", ASN_Y), ("Y3", ASN_Y), ("Z1", ASN_Z), ("C1", ASN_C)];

const LINKS: [(&str, &str); 7] =
    [("Y1", "Y2"), ("Y1", "Y3"), ("Y2", "Y3"), ("Z1", "Y2"), ("Z1", "Y3"), ("Y1", "X1"), ("X1", "C1")];

/// Four-AS lab: C1 collects, Z1 originates, Y is an iBGP full mesh with
/// both Y2 and Y3 attached to Z. Router ids make Y2 win the final tie
/// at Y1.
pub fn lab_scenario(name: &str, profile: ProfileSpec, policies: &PolicySet, events: Vec<SimEvent>) -> Scenario {
    let routers = ROUTERS
        .iter()
        .enumerate()
        .map(|(i, (n, asn))| RouterSpec {
            name: n.to_string(),
            asn: *asn,
            router_id: Some(std::net::Ipv4Addr::new(10, 255, 0, i as u8 + 1)),
            profile: None,
        })
        .collect();
    let asn_of = |n: &str| ROUTERS.iter().find(|(r, _)| *r == n).map(|(_, a)| *a);
    let links = LINKS
        .iter()
        .map(|(a, b)| LinkSpec {
            a: a.to_string(),
            b: b.to_string(),
            send_communities: if asn_of(a) != asn_of(b) { policies.ebgp_send_communities } else { None },
        })
        .collect();
    Scenario {
        name: name.into(),
        profile,
        routers,
        links,
        policies: policies.rules.clone(),
        events,
        max_messages_per_event: DEFAULT_MAX_MESSAGES_PER_EVENT,
    }
}

pub fn build_lab_topology(profile: RouterProfile, policies: &PolicySet) -> Simulation {
    let s = lab_scenario("lab", ProfileSpec::Flags(profile), policies, Vec::new());
    Simulation::from_scenario(&s).expect("lab scenario is valid")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Exp1,
    Exp2,
    Exp3,
    Exp4,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [Experiment::Exp1, Experiment::Exp2, Experiment::Exp3, Experiment::Exp4];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Exp1 => "exp1",
            Experiment::Exp2 => "exp2",
            Experiment::Exp3 => "exp3",
            Experiment::Exp4 => "exp4",
        }
    }

    pub fn question(self) -> &'static str {
        match self {
            Experiment::Exp1 => "Y1 sends duplicate on next-hop change",
            Experiment::Exp2 => "X1 forwards communities set in Y",
            Experiment::Exp3 => "X1 strips at egress and still sends duplicate",
            Experiment::Exp4 => "X1 strips at ingress and sends no duplicate",
        }
    }

    /// Exp3 and Exp4 need communities to reach X1, so their eBGP links are
    /// configured to send them whatever the profile default.
    pub fn policies(self) -> PolicySet {
        let tag = |router: &str, c| PolicyRule::new(router, "Z1", Direction::Ingress, PolicyAction::AddCommunity(c));
        let tagging = vec![tag("Y2", TAG_Y2), tag("Y3", TAG_Y3)];
        match self {
            Experiment::Exp1 => PolicySet::default(),
            Experiment::Exp2 => PolicySet { rules: tagging, ebgp_send_communities: None },
            Experiment::Exp3 => {
                let mut rules = tagging;
                rules.push(PolicyRule::new("X1", "C1", Direction::Egress, PolicyAction::StripAllCommunities));
                PolicySet { rules, ebgp_send_communities: Some(true) }
            }
            Experiment::Exp4 => {
                let mut rules = tagging;
                rules.push(PolicyRule::new("X1", "Y1", Direction::Ingress, PolicyAction::StripAllCommunities));
                PolicySet { rules, ebgp_send_communities: Some(true) }
            }
        }
    }

    pub fn events() -> Vec<SimEvent> {
        vec![SimEvent::announce(0, "Z1", lab_prefix()), SimEvent::link_down(FLAP_TIME, "Y1", "Y2")]
    }

    pub fn scenario(self, profile: ProfileSpec) -> Scenario {
        lab_scenario(self.name(), profile, &self.policies(), Self::events())
    }

    /// The experiment's boolean read off a capture of its scenario.
    pub fn outcome(self, log: &CaptureLog) -> bool {
        match self {
            Experiment::Exp1 => !log.duplicates("Y1", "X1", FLAP_TIME).is_empty(),
            Experiment::Exp2 => {
                log.session("X1", "C1").any(|m| m.message.communities().iter().any(|c| Asn::from(c.asn()) == ASN_Y))
            }
            Experiment::Exp3 => !log.duplicates("X1", "C1", FLAP_TIME).is_empty(),
            Experiment::Exp4 => log.duplicates("X1", "C1", FLAP_TIME).is_empty(),
        }
    }

    pub fn run(self, profile: RouterProfile) -> Result<(bool, CaptureLog), SimError> {
        let log = run_scenario(&self.scenario(ProfileSpec::Flags(profile)))?;
        Ok((self.outcome(&log), log))
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}` (expected exp1..exp4)"))
    }
}

/// Built-in scenario by name, with the given profile.
pub fn builtin_scenario(name: &str, profile: ProfileSpec) -> Option<Scenario> {
    name.parse::<Experiment>().ok().map(|e| e.scenario(profile))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MatrixRow {
    pub profile: String,
    pub exp1: bool,
    pub exp2: bool,
    pub exp3: bool,
    pub exp4: bool,
}

impl MatrixRow {
    pub fn outcomes(&self) -> [bool; 4] {
        [self.exp1, self.exp2, self.exp3, self.exp4]
    }
}

pub fn run_experiment_matrix(profiles: &[(String, RouterProfile)]) -> Result<Vec<MatrixRow>, SimError> {
    profiles
        .iter()
        .map(|(name, p)| {
            let mut out = [false; 4];
            for (slot, e) in out.iter_mut().zip(Experiment::ALL) {
                *slot = e.run(*p)?.0;
            }
            let [exp1, exp2, exp3, exp4] = out;
            Ok(MatrixRow { profile: name.clone(), exp1, exp2, exp3, exp4 })
        })
        .collect()
}

pub fn write_matrix_csv<W: Write>(rows: &[MatrixRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed-width text rendering with one column per experiment.
pub fn format_matrix(rows: &[MatrixRow]) -> String {
    let width = rows.iter().map(|r| r.profile.len()).max().unwrap_or(0).max("profile".len());
    let mut s = format!("{:width$}  exp1   exp2   exp3   exp4\n", "profile");
    for r in rows {
        s.push_str(&format!("{:width$}", r.profile));
        for b in r.outcomes() {
            s.push_str(&format!("  {:5}", b));
        }
        s.push('\n');
    }
    s
}
