use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::net::Ipv4Addr;

use commex_core::mrt::{Asn, Community};
use ipnet::IpNet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capture::{CaptureLog, CapturedMessage, SimMessage};
use crate::profile::RouterProfile;
use crate::scenario::{Direction, EventKind, PolicyRule, Scenario, ScenarioError, SimEvent};

const DEFAULT_LOCAL_PREF: u32 = 100;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("event at t={at}s did not converge within {bound} messages")]
    NonConvergence { at: u64, bound: usize },
    #[error("event {index} is earlier than the one before it")]
    UnsortedEvents { index: usize },
    #[error("unknown router `{0}`")]
    UnknownRouter(String),
    #[error("no link between {0} and {1}")]
    UnknownLink(String, String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionKind {
    Ebgp,
    Ibgp,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Session {
    pub neighbor: String,
    pub kind: SessionKind,
    pub local_addr: Ipv4Addr,
    pub neighbor_addr: Ipv4Addr,
    pub send_communities: bool,
    neighbor_idx: usize,
    link: usize,
}

/// Route attributes as held in a RIB; communities are sorted and unique.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RouteAttrs {
    pub path: Vec<Asn>,
    pub communities: Vec<Community>,
    pub next_hop: Ipv4Addr,
    pub med: Option<u32>,
    pub local_pref: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RouteSource {
    Local,
    /// Index of the neighbor in the simulation's router list.
    Neighbor(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Route {
    pub attrs: RouteAttrs,
    pub source: RouteSource,
}

#[derive(Clone, Debug)]
pub struct SimRouter {
    pub name: String,
    pub asn: Asn,
    pub router_id: Ipv4Addr,
    pub profile: RouterProfile,
    pub sessions: Vec<Session>,
    pub policies: Vec<PolicyRule>,
    pub origins: BTreeSet<IpNet>,
    /// Routes after ingress policy, keyed by (neighbor index, prefix).
    pub adj_rib_in: BTreeMap<(usize, IpNet), RouteAttrs>,
    pub loc_rib: BTreeMap<IpNet, Route>,
    /// Last route sent per (neighbor index, prefix), after egress policy.
    /// Present only for profiles that consult it.
    pub adj_rib_out: Option<BTreeMap<(usize, IpNet), SimMessage>>,
    advertised: BTreeSet<(usize, IpNet)>,
}

impl SimRouter {
    fn session_to(&self, neighbor: usize) -> Option<&Session> {
        self.sessions.iter().find(|s| s.neighbor_idx == neighbor)
    }

    fn policy(&self, neighbor: &str, direction: Direction, communities: &mut Vec<Community>) {
        for p in self.policies.iter().filter(|p| p.neighbor == neighbor && p.direction == direction) {
            p.action.apply(communities);
        }
    }

    fn prefixes(&self) -> BTreeSet<IpNet> {
        let mut out = self.origins.clone();
        out.extend(self.loc_rib.keys().copied());
        out.extend(self.adj_rib_in.keys().map(|(_, p)| *p));
        out
    }
}

#[derive(Clone, Debug)]
struct Link {
    a: usize,
    b: usize,
    up: bool,
}

#[derive(Clone, Debug)]
struct InFlight {
    from: usize,
    to: usize,
    prefix: IpNet,
    message: SimMessage,
}

/// A network of routers with FIFO zero-delay message delivery.
#[derive(Clone, Debug)]
pub struct Simulation {
    routers: Vec<SimRouter>,
    links: Vec<Link>,
    queue: VecDeque<InFlight>,
    log: CaptureLog,
    now: u64,
    seq: u64,
    max_messages_per_event: usize,
}

impl Simulation {
    pub fn from_scenario(s: &Scenario) -> Result<Simulation, SimError> {
        s.validate()?;
        let index = |name: &str| s.routers.iter().position(|r| r.name == name).expect("validated");
        let mut routers = Vec::with_capacity(s.routers.len());
        for (i, r) in s.routers.iter().enumerate() {
            let profile = s
                .profile_of(r)
                .map_err(|e| ScenarioError::Invalid { field: format!("routers[{i}].profile"), reason: e })?;
            routers.push(SimRouter {
                name: r.name.clone(),
                asn: r.asn,
                router_id: r.router_id.unwrap_or(Ipv4Addr::new(10, 255, (i / 250) as u8, (i % 250 + 1) as u8)),
                profile,
                sessions: Vec::new(),
                policies: s.policies.iter().filter(|p| p.router == r.name).cloned().collect(),
                origins: BTreeSet::new(),
                adj_rib_in: BTreeMap::new(),
                loc_rib: BTreeMap::new(),
                adj_rib_out: profile.tracks_adj_rib_out().then(BTreeMap::new),
                advertised: BTreeSet::new(),
            });
        }
        let mut links = Vec::with_capacity(s.links.len());
        for (k, l) in s.links.iter().enumerate() {
            let (a, b) = (index(&l.a), index(&l.b));
            let kind = if routers[a].asn == routers[b].asn { SessionKind::Ibgp } else { SessionKind::Ebgp };
            let addr_a = Ipv4Addr::new(10, 0, k as u8, 1);
            let addr_b = Ipv4Addr::new(10, 0, k as u8, 2);
            for (me, other, local, remote) in [(a, b, addr_a, addr_b), (b, a, addr_b, addr_a)] {
                let send_communities = match kind {
                    SessionKind::Ibgp => true,
                    SessionKind::Ebgp => {
                        l.send_communities.unwrap_or(routers[me].profile.forwards_communities_ebgp_default)
                    }
                };
                let neighbor = routers[other].name.clone();
                routers[me].sessions.push(Session {
                    neighbor,
                    kind,
                    local_addr: local,
                    neighbor_addr: remote,
                    send_communities,
                    neighbor_idx: other,
                    link: k,
                });
            }
            links.push(Link { a, b, up: true });
        }
        Ok(Simulation {
            routers,
            links,
            queue: VecDeque::new(),
            log: CaptureLog::default(),
            now: 0,
            seq: 0,
            max_messages_per_event: s.max_messages_per_event,
        })
    }

    pub fn routers(&self) -> &[SimRouter] {
        &self.routers
    }

    pub fn router(&self, name: &str) -> Option<&SimRouter> {
        self.routers.iter().find(|r| r.name == name)
    }

    pub fn log(&self) -> &CaptureLog {
        &self.log
    }

    pub fn into_log(self) -> CaptureLog {
        self.log
    }

    pub fn set_max_messages_per_event(&mut self, bound: usize) {
        self.max_messages_per_event = bound;
    }

    /// Name of the router the best route for `prefix` at `router` came from.
    pub fn best_source(&self, router: &str, prefix: &IpNet) -> Option<&str> {
        let r = self.router(router)?;
        match r.loc_rib.get(prefix)?.source {
            RouteSource::Local => Some(&r.name),
            RouteSource::Neighbor(n) => Some(&self.routers[n].name),
        }
    }

    fn index(&self, name: &str) -> Result<usize, SimError> {
        self.routers.iter().position(|r| r.name == name).ok_or_else(|| SimError::UnknownRouter(name.into()))
    }

    fn link(&self, a: &str, b: &str) -> Result<usize, SimError> {
        let (ia, ib) = (self.index(a)?, self.index(b)?);
        self.links
            .iter()
            .position(|l| (l.a == ia && l.b == ib) || (l.a == ib && l.b == ia))
            .ok_or_else(|| SimError::UnknownLink(a.into(), b.into()))
    }

    /// Apply events in order, running the network to quiescence after each.
    pub fn run(&mut self, events: &[SimEvent]) -> Result<(), SimError> {
        if let Some(i) = events.windows(2).position(|w| w[1].at < w[0].at) {
            return Err(SimError::UnsortedEvents { index: i + 1 });
        }
        for e in events {
            self.apply(e)?;
        }
        Ok(())
    }

    pub fn apply(&mut self, event: &SimEvent) -> Result<(), SimError> {
        self.now = self.now.max(event.at);
        match &event.kind {
            EventKind::AnnounceOrigin { router, prefix } => {
                let r = self.index(router)?;
                self.routers[r].origins.insert(*prefix);
                self.refresh(r, *prefix);
            }
            EventKind::WithdrawOrigin { router, prefix } => {
                let r = self.index(router)?;
                self.routers[r].origins.remove(prefix);
                self.refresh(r, *prefix);
            }
            EventKind::LinkDown { a, b } => {
                let k = self.link(a, b)?;
                if self.links[k].up {
                    self.links[k].up = false;
                    let (a, b) = (self.links[k].a, self.links[k].b);
                    self.drop_session(a, b);
                    self.drop_session(b, a);
                    self.refresh_all();
                }
            }
            EventKind::LinkUp { a, b } => {
                let k = self.link(a, b)?;
                if !self.links[k].up {
                    self.links[k].up = true;
                    let (a, b) = (self.links[k].a, self.links[k].b);
                    self.open_session(a, b);
                    self.open_session(b, a);
                    self.refresh_all();
                }
            }
        }
        self.drain(event.at)
    }

    fn drain(&mut self, at: u64) -> Result<(), SimError> {
        let mut delivered = 0;
        while let Some(m) = self.queue.pop_front() {
            delivered += 1;
            if delivered > self.max_messages_per_event {
                self.queue.clear();
                return Err(SimError::NonConvergence { at, bound: self.max_messages_per_event });
            }
            self.receive(m);
        }
        Ok(())
    }

    fn session_up(&self, s: &Session) -> bool {
        self.links[s.link].up
    }

    fn drop_session(&mut self, me: usize, neighbor: usize) {
        let r = &mut self.routers[me];
        r.adj_rib_in.retain(|(n, _), _| *n != neighbor);
        r.advertised.retain(|(n, _)| *n != neighbor);
        if let Some(out) = &mut r.adj_rib_out {
            out.retain(|(n, _), _| *n != neighbor);
        }
    }

    fn open_session(&mut self, me: usize, neighbor: usize) {
        let prefixes: Vec<IpNet> = self.routers[me].loc_rib.keys().copied().collect();
        let si = self.routers[me].sessions.iter().position(|s| s.neighbor_idx == neighbor).expect("linked");
        for p in prefixes {
            self.export(me, si, p, false);
        }
    }

    fn refresh_all(&mut self) {
        for r in 0..self.routers.len() {
            for p in self.routers[r].prefixes() {
                self.refresh(r, p);
            }
        }
    }

    /// Hop counts from `from` to every router of the same AS over up links.
    fn igp_distances(&self, from: usize) -> Vec<Option<u32>> {
        let asn = self.routers[from].asn;
        let mut dist = vec![None; self.routers.len()];
        dist[from] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].expect("visited");
            for l in self.links.iter().filter(|l| l.up) {
                let v = match (l.a == u, l.b == u) {
                    (true, _) => l.b,
                    (_, true) => l.a,
                    _ => continue,
                };
                if self.routers[v].asn == asn && dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    fn decide(&self, me: usize, prefix: IpNet) -> Option<Route> {
        let r = &self.routers[me];
        let mut candidates: Vec<(Route, u32)> = Vec::new();
        if r.origins.contains(&prefix) {
            let attrs = RouteAttrs {
                path: Vec::new(),
                communities: Vec::new(),
                next_hop: r.router_id,
                med: None,
                local_pref: None,
            };
            candidates.push((Route { attrs, source: RouteSource::Local }, 0));
        }
        let igp = self.igp_distances(me);
        for ((n, p), attrs) in &r.adj_rib_in {
            if *p != prefix {
                continue;
            }
            let s = r.session_to(*n).expect("session exists");
            let metric = match s.kind {
                SessionKind::Ebgp => 0,
                SessionKind::Ibgp => match igp[*n] {
                    Some(d) => d,
                    None => continue,
                },
            };
            candidates.push((Route { attrs: attrs.clone(), source: RouteSource::Neighbor(*n) }, metric));
        }
        candidates.into_iter().min_by(|a, b| self.prefer(me, a, b)).map(|(r, _)| r)
    }

    /// Ordering where the preferred route compares as smaller.
    fn prefer(&self, me: usize, (a, ma): &(Route, u32), (b, mb): &(Route, u32)) -> Ordering {
        let local = |r: &Route| r.source != RouteSource::Local;
        let lp = |r: &Route| std::cmp::Reverse(r.attrs.local_pref.unwrap_or(DEFAULT_LOCAL_PREF));
        let ibgp = |r: &Route| match r.source {
            RouteSource::Local => false,
            RouteSource::Neighbor(n) => {
                self.routers[me].session_to(n).map(|s| s.kind == SessionKind::Ibgp).unwrap_or(true)
            }
        };
        let rid = |r: &Route| match r.source {
            RouteSource::Local => self.routers[me].router_id,
            RouteSource::Neighbor(n) => self.routers[n].router_id,
        };
        local(a)
            .cmp(&local(b))
            .then_with(|| lp(a).cmp(&lp(b)))
            .then_with(|| a.attrs.path.len().cmp(&b.attrs.path.len()))
            .then_with(|| a.attrs.med.unwrap_or(0).cmp(&b.attrs.med.unwrap_or(0)))
            .then_with(|| ibgp(a).cmp(&ibgp(b)))
            .then_with(|| ma.cmp(mb))
            .then_with(|| rid(a).cmp(&rid(b)))
    }

    fn refresh(&mut self, me: usize, prefix: IpNet) {
        let new = self.decide(me, prefix);
        let old = self.routers[me].loc_rib.get(&prefix);
        if new.as_ref() == old {
            return;
        }
        let community_only = match (old, &new) {
            (Some(o), Some(n)) => {
                o.source == n.source
                    && o.attrs.communities != n.attrs.communities
                    && RouteAttrs { communities: Vec::new(), ..o.attrs.clone() }
                        == RouteAttrs { communities: Vec::new(), ..n.attrs.clone() }
            }
            _ => false,
        };
        match new {
            Some(route) => self.routers[me].loc_rib.insert(prefix, route),
            None => self.routers[me].loc_rib.remove(&prefix),
        };
        for si in 0..self.routers[me].sessions.len() {
            self.export(me, si, prefix, community_only);
        }
    }

    /// What `me` would send on session `si` for its current best route.
    fn outgoing(&self, me: usize, si: usize, prefix: IpNet) -> Option<SimMessage> {
        let r = &self.routers[me];
        let s = &r.sessions[si];
        let best = r.loc_rib.get(&prefix)?;
        let learned_over = match best.source {
            RouteSource::Local => None,
            RouteSource::Neighbor(n) => {
                if n == s.neighbor_idx {
                    return None;
                }
                r.session_to(n).map(|s| s.kind)
            }
        };
        let mut communities = best.attrs.communities.clone();
        let message = match s.kind {
            SessionKind::Ibgp => {
                if learned_over == Some(SessionKind::Ibgp) {
                    return None;
                }
                let next_hop = match best.source {
                    RouteSource::Local => s.local_addr,
                    RouteSource::Neighbor(_) => best.attrs.next_hop,
                };
                r.policy(&s.neighbor, Direction::Egress, &mut communities);
                SimMessage::Announcement {
                    path: best.attrs.path.clone(),
                    communities,
                    next_hop,
                    med: best.attrs.med,
                    local_pref: Some(best.attrs.local_pref.unwrap_or(DEFAULT_LOCAL_PREF)),
                }
            }
            SessionKind::Ebgp => {
                if best.attrs.path.contains(&self.routers[s.neighbor_idx].asn) {
                    return None;
                }
                if !s.send_communities {
                    communities.clear();
                }
                r.policy(&s.neighbor, Direction::Egress, &mut communities);
                let mut path = Vec::with_capacity(best.attrs.path.len() + 1);
                path.push(r.asn);
                path.extend_from_slice(&best.attrs.path);
                SimMessage::Announcement { path, communities, next_hop: s.local_addr, med: None, local_pref: None }
            }
        };
        Some(message)
    }

    fn export(&mut self, me: usize, si: usize, prefix: IpNet, community_only: bool) {
        if !self.session_up(&self.routers[me].sessions[si]) {
            return;
        }
        let neighbor = self.routers[me].sessions[si].neighbor_idx;
        let key = (neighbor, prefix);
        match self.outgoing(me, si, prefix) {
            Some(msg) => {
                let r = &self.routers[me];
                let suppress = (r.profile.maintains_adj_rib_out
                    || (r.profile.suppress_dup_on_community_change_only && community_only))
                    && r.adj_rib_out.as_ref().and_then(|o| o.get(&key)) == Some(&msg);
                if suppress {
                    return;
                }
                let r = &mut self.routers[me];
                r.advertised.insert(key);
                if let Some(out) = &mut r.adj_rib_out {
                    out.insert(key, msg.clone());
                }
                self.send(me, si, prefix, msg);
            }
            None => {
                let r = &mut self.routers[me];
                if r.advertised.remove(&key) {
                    if let Some(out) = &mut r.adj_rib_out {
                        out.remove(&key);
                    }
                    self.send(me, si, prefix, SimMessage::Withdrawal);
                }
            }
        }
    }

    fn send(&mut self, me: usize, si: usize, prefix: IpNet, message: SimMessage) {
        let r = &self.routers[me];
        let s = &r.sessions[si];
        let to = &self.routers[s.neighbor_idx];
        self.log.push(CapturedMessage {
            seq: self.seq,
            time: self.now,
            from: r.name.clone(),
            to: to.name.clone(),
            from_asn: r.asn,
            to_asn: to.asn,
            from_addr: s.local_addr,
            to_addr: s.neighbor_addr,
            prefix,
            message: message.clone(),
        });
        self.seq += 1;
        self.queue.push_back(InFlight { from: me, to: s.neighbor_idx, prefix, message });
    }

    fn receive(&mut self, m: InFlight) {
        let r = &self.routers[m.to];
        let Some(s) = r.session_to(m.from) else { return };
        if !self.session_up(s) {
            return;
        }
        let key = (m.from, m.prefix);
        let entry = match m.message {
            SimMessage::Announcement { path, mut communities, next_hop, med, local_pref } => {
                if path.contains(&r.asn) {
                    None
                } else {
                    r.policy(&s.neighbor, Direction::Ingress, &mut communities);
                    let local_pref = match s.kind {
                        SessionKind::Ibgp => local_pref,
                        SessionKind::Ebgp => None,
                    };
                    Some(RouteAttrs { path, communities, next_hop, med, local_pref })
                }
            }
            SimMessage::Withdrawal => None,
        };
        let r = &mut self.routers[m.to];
        match entry {
            Some(attrs) => r.adj_rib_in.insert(key, attrs),
            None => r.adj_rib_in.remove(&key),
        };
        self.refresh(m.to, m.prefix);
    }
}

/// Build the simulation for `scenario`, run its event script and return
/// the capture.
pub fn run_scenario(scenario: &Scenario) -> Result<CaptureLog, SimError> {
    let mut sim = Simulation::from_scenario(scenario)?;
    sim.run(&scenario.events)?;
    Ok(sim.into_log())
}

pub fn run(mut sim: Simulation, events: &[SimEvent]) -> Result<CaptureLog, SimError> {
    sim.run(events)?;
    Ok(sim.into_log())
}
