use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Update-generation behavior of a BGP implementation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouterProfile {
    /// Keep the last route sent per (neighbor, prefix) and never resend it.
    #[serde(default)]
    pub maintains_adj_rib_out: bool,
    /// Send communities on eBGP sessions without explicit configuration.
    #[serde(default)]
    pub forwards_communities_ebgp_default: bool,
    /// Suppress a repeated advertisement only when the best route changed
    /// in its communities alone.
    #[serde(default)]
    pub suppress_dup_on_community_change_only: bool,
}

impl RouterProfile {
    pub const DEFAULT_FORWARDING: RouterProfile = RouterProfile {
        maintains_adj_rib_out: false,
        forwards_communities_ebgp_default: true,
        suppress_dup_on_community_change_only: false,
    };
    pub const ADJ_RIB_OUT: RouterProfile = RouterProfile {
        maintains_adj_rib_out: true,
        forwards_communities_ebgp_default: true,
        suppress_dup_on_community_change_only: false,
    };
    pub const NO_FORWARD: RouterProfile = RouterProfile {
        maintains_adj_rib_out: false,
        forwards_communities_ebgp_default: false,
        suppress_dup_on_community_change_only: false,
    };
    pub const COMMUNITY_SUPPRESS: RouterProfile = RouterProfile {
        maintains_adj_rib_out: false,
        forwards_communities_ebgp_default: true,
        suppress_dup_on_community_change_only: true,
    };

    /// Whether the router has to remember what it sent to each neighbor.
    pub fn tracks_adj_rib_out(&self) -> bool {
        self.maintains_adj_rib_out || self.suppress_dup_on_community_change_only
    }
}

/// The shipped profiles, in table order.
pub const NAMED_PROFILES: [(&str, RouterProfile); 4] = [
    ("default-forwarding", RouterProfile::DEFAULT_FORWARDING),
    ("adj-rib-out", RouterProfile::ADJ_RIB_OUT),
    ("no-forward", RouterProfile::NO_FORWARD),
    ("community-suppress", RouterProfile::COMMUNITY_SUPPRESS),
];

pub fn named_profile(name: &str) -> Option<RouterProfile> {
    NAMED_PROFILES.iter().find(|(n, _)| *n == name).map(|(_, p)| *p)
}

pub fn default_profiles() -> Vec<(String, RouterProfile)> {
    NAMED_PROFILES.iter().map(|(n, p)| (n.to_string(), *p)).collect()
}

/// A profile given either by preset name or by explicit flags.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileSpec {
    Named(String),
    Flags(RouterProfile),
}

impl Default for ProfileSpec {
    fn default() -> Self {
        ProfileSpec::Named("default-forwarding".into())
    }
}

impl ProfileSpec {
    pub fn resolve(&self) -> Result<RouterProfile, String> {
        match self {
            ProfileSpec::Named(n) => named_profile(n).ok_or_else(|| {
                let known: Vec<&str> = NAMED_PROFILES.iter().map(|(n, _)| *n).collect();
                format!("unknown profile `{n}` (known: {})", known.join(", "))
            }),
            ProfileSpec::Flags(p) => Ok(*p),
        }
    }
}

impl FromStr for ProfileSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let spec = ProfileSpec::Named(s.to_string());
        spec.resolve().map(|_| spec)
    }
}

impl fmt::Display for ProfileSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileSpec::Named(n) => f.write_str(n),
            ProfileSpec::Flags(p) => write!(
                f,
                "adj_rib_out={} forward={} suppress_community_only={}",
                p.maintains_adj_rib_out, p.forwards_communities_ebgp_default, p.suppress_dup_on_community_change_only
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SoftwareRow {
    pub software: &'static str,
    pub version: &'static str,
    pub profile: &'static str,
}

/// Tested router software and the profile each one behaves like.
pub const SOFTWARE: [SoftwareRow; 10] = [
    SoftwareRow { software: "Cisco IOS", version: "12.4(20)T", profile: "no-forward" },
    SoftwareRow { software: "Cisco IOS", version: "XR v6.0.1", profile: "no-forward" },
    SoftwareRow { software: "Juniper Junos", version: "Olive 12.1R1.9", profile: "adj-rib-out" },
    SoftwareRow { software: "Nokia SR OS", version: "20.7.R2", profile: "adj-rib-out" },
    SoftwareRow { software: "BIRD", version: "v1.6.6", profile: "default-forwarding" },
    SoftwareRow { software: "BIRD", version: "v2.0.7", profile: "default-forwarding" },
    SoftwareRow { software: "FRRouting", version: "v6.0.2", profile: "default-forwarding" },
    SoftwareRow { software: "OpenBGPD", version: "v5.2", profile: "default-forwarding" },
    SoftwareRow { software: "OpenBGPD", version: "v6.6", profile: "community-suppress" },
    SoftwareRow { software: "Quagga", version: "v1.2.4", profile: "default-forwarding" },
];
