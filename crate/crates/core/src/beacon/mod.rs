//! Routing-beacon schedules, phase attribution and community reveal
//! partitions.

mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};

use ipnet::IpNet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Timestamp, UpdateRecord};
use crate::mrt::Community;

pub use report::{beacon_case_report, CasePoint, CaseReport, CaseSelection};

#[derive(Debug, Error)]
pub enum BeaconError {
    #[error("no announcements match the case selection")]
    EmptySelection,
    #[error("beacon list line {line}: {reason}")]
    BadBeaconList { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    AnnouncePhase,
    WithdrawPhase,
    Outside,
}

impl Phase {
    fn bit(self) -> u8 {
        match self {
            Phase::AnnouncePhase => 1,
            Phase::WithdrawPhase => 2,
            Phase::Outside => 4,
        }
    }
}

/// Window starts are seconds after UTC midnight; windows do not wrap into
/// the next day.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeaconSchedule {
    pub announce_starts: Vec<u32>,
    pub withdraw_starts: Vec<u32>,
    pub window_secs: u32,
}

impl Default for BeaconSchedule {
    /// RIPE RIS beacons: announce every 4 h from 00:00, withdraw every 4 h
    /// from 02:00, 15-minute windows.
    fn default() -> Self {
        let every4h = |offset: u32| (0..6).map(|i| offset + i * 4 * 3600).collect();
        BeaconSchedule { announce_starts: every4h(0), withdraw_starts: every4h(2 * 3600), window_secs: 15 * 60 }
    }
}

impl BeaconSchedule {
    pub fn phase_of(&self, arrival: Timestamp) -> Phase {
        let s = arrival.second_of_day();
        let inside = |starts: &[u32]| starts.iter().any(|&st| s >= st && s - st < self.window_secs);
        if inside(&self.withdraw_starts) {
            Phase::WithdrawPhase
        } else if inside(&self.announce_starts) {
            Phase::AnnouncePhase
        } else {
            Phase::Outside
        }
    }
}

pub fn phase_of(arrival: Timestamp, schedule: &BeaconSchedule) -> Phase {
    schedule.phase_of(arrival)
}

/// Beacon prefixes keyed to a display name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BeaconList {
    prefixes: BTreeMap<IpNet, String>,
}

impl Default for BeaconList {
    /// RIPE RIS beacons rrc00..rrc26: `84.205.(64+N).0/24` and
    /// `2001:7fb:fe(N)::/48`.
    fn default() -> Self {
        let mut prefixes = BTreeMap::new();
        for n in 0u8..=26 {
            let name = format!("rrc{n:02}");
            let v4: IpNet = format!("84.205.{}.0/24", 64 + n).parse().expect("static prefix");
            let v6: IpNet = format!("2001:7fb:fe{n:02x}::/48").parse().expect("static prefix");
            prefixes.insert(v4, name.clone());
            prefixes.insert(v6, name);
        }
        BeaconList { prefixes }
    }
}

impl BeaconList {
    pub fn new() -> Self {
        BeaconList { prefixes: BTreeMap::new() }
    }

    pub fn insert(&mut self, prefix: IpNet, name: impl Into<String>) {
        self.prefixes.insert(prefix, name.into());
    }

    pub fn contains(&self, prefix: &IpNet) -> bool {
        self.prefixes.contains_key(prefix)
    }

    pub fn name(&self, prefix: &IpNet) -> Option<&str> {
        self.prefixes.get(prefix).map(String::as_str)
    }

    pub fn prefixes(&self) -> impl Iterator<Item = &IpNet> {
        self.prefixes.keys()
    }

    pub fn len(&self) -> usize {
        self.prefixes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefixes.is_empty()
    }

    /// One prefix per line with an optional name after whitespace; `#`
    /// starts a comment.
    pub fn load<R: BufRead>(input: R) -> Result<Self, BeaconError> {
        let mut list = BeaconList::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let prefix = parts.next().unwrap_or_default();
            let net: IpNet = prefix
                .parse()
                .map_err(|e| BeaconError::BadBeaconList { line: i + 1, reason: format!("{prefix}: {e}") })?;
            let name = parts.next().map(str::to_string).unwrap_or_else(|| net.to_string());
            list.insert(net, name);
        }
        Ok(list)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RevealCategory {
    WithdrawalOnly,
    AnnounceOnly,
    OutsideOnly,
    Ambiguous,
}

impl RevealCategory {
    pub const ALL: [RevealCategory; 4] = [
        RevealCategory::WithdrawalOnly,
        RevealCategory::AnnounceOnly,
        RevealCategory::OutsideOnly,
        RevealCategory::Ambiguous,
    ];

    fn from_mask(mask: u8) -> Self {
        match mask {
            2 => RevealCategory::WithdrawalOnly,
            1 => RevealCategory::AnnounceOnly,
            4 => RevealCategory::OutsideOnly,
            _ => RevealCategory::Ambiguous,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RevealCategory::WithdrawalOnly => "withdrawal_only",
            RevealCategory::AnnounceOnly => "announce_only",
            RevealCategory::OutsideOnly => "outside_only",
            RevealCategory::Ambiguous => "ambiguous",
        }
    }
}

impl fmt::Display for RevealCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Phases under which each key was observed. Merging is a bitwise union, so
/// accumulators built over disjoint record subsets combine exactly.
#[derive(Clone, Debug)]
pub struct RevealAccumulator<K: Ord> {
    seen: BTreeMap<K, u8>,
}

impl<K: Ord> Default for RevealAccumulator<K> {
    fn default() -> Self {
        RevealAccumulator { seen: BTreeMap::new() }
    }
}

impl<K: Ord + Clone> RevealAccumulator<K> {
    pub fn observe(&mut self, key: K, phase: Phase) {
        *self.seen.entry(key).or_insert(0) |= phase.bit();
    }

    pub fn merge(&mut self, other: RevealAccumulator<K>) {
        for (k, m) in other.seen {
            *self.seen.entry(k).or_insert(0) |= m;
        }
    }

    pub fn finish(&self) -> RevealPartition<K> {
        let mut p = RevealPartition::default();
        for (k, &m) in &self.seen {
            p.set_mut(RevealCategory::from_mask(m)).insert(k.clone());
        }
        p
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RevealPartition<K: Ord> {
    pub withdrawal_only: BTreeSet<K>,
    pub announce_only: BTreeSet<K>,
    pub outside_only: BTreeSet<K>,
    pub ambiguous: BTreeSet<K>,
}

impl<K: Ord> Default for RevealPartition<K> {
    fn default() -> Self {
        RevealPartition {
            withdrawal_only: BTreeSet::new(),
            announce_only: BTreeSet::new(),
            outside_only: BTreeSet::new(),
            ambiguous: BTreeSet::new(),
        }
    }
}

impl<K: Ord> RevealPartition<K> {
    pub fn set(&self, c: RevealCategory) -> &BTreeSet<K> {
        match c {
            RevealCategory::WithdrawalOnly => &self.withdrawal_only,
            RevealCategory::AnnounceOnly => &self.announce_only,
            RevealCategory::OutsideOnly => &self.outside_only,
            RevealCategory::Ambiguous => &self.ambiguous,
        }
    }

    fn set_mut(&mut self, c: RevealCategory) -> &mut BTreeSet<K> {
        match c {
            RevealCategory::WithdrawalOnly => &mut self.withdrawal_only,
            RevealCategory::AnnounceOnly => &mut self.announce_only,
            RevealCategory::OutsideOnly => &mut self.outside_only,
            RevealCategory::Ambiguous => &mut self.ambiguous,
        }
    }

    /// (withdrawal_only, announce_only, outside_only, ambiguous)
    pub fn sizes(&self) -> (usize, usize, usize, usize) {
        (self.withdrawal_only.len(), self.announce_only.len(), self.outside_only.len(), self.ambiguous.len())
    }

    pub fn total(&self) -> usize {
        RevealCategory::ALL.iter().map(|&c| self.set(c).len()).sum()
    }

    pub fn share(&self, c: RevealCategory) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.set(c).len() as f64 / n as f64,
        }
    }

    pub fn category_of(&self, key: &K) -> Option<RevealCategory> {
        RevealCategory::ALL.into_iter().find(|&c| self.set(c).contains(key))
    }

    pub fn is_disjoint(&self) -> bool {
        let all: Vec<_> = RevealCategory::ALL.iter().map(|&c| self.set(c)).collect();
        (0..4).all(|i| (i + 1..4).all(|j| all[i].is_disjoint(all[j])))
    }
}

impl<K: Ord + fmt::Display> RevealPartition<K> {
    /// `community_value,category`
    pub fn write_members_csv<W: Write>(&self, out: W, key_header: &str) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([key_header, "category"])?;
        for c in RevealCategory::ALL {
            for k in self.set(c) {
                w.write_record([k.to_string().as_str(), c.as_str()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// `category,count,share`
    pub fn write_summary_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["category", "count", "share"])?;
        for c in RevealCategory::ALL {
            w.write_record([c.as_str(), &self.set(c).len().to_string(), &format!("{:.6}", self.share(c))])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A whole community attribute, compared as a sorted multiset.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CommunitySet(pub Vec<Community>);

impl CommunitySet {
    pub fn new(mut communities: Vec<Community>) -> Self {
        communities.sort_unstable();
        CommunitySet(communities)
    }
}

impl fmt::Display for CommunitySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Both reveal partitions: per community value and per attribute multiset.
#[derive(Clone, Debug, Default)]
pub struct CommunityReveal {
    pub values: RevealPartition<Community>,
    pub attributes: RevealPartition<CommunitySet>,
}

#[derive(Clone, Debug, Default)]
pub struct RevealBuilder {
    values: RevealAccumulator<Community>,
    attributes: RevealAccumulator<CommunitySet>,
}

impl RevealBuilder {
    /// Announcements without communities contribute nothing.
    pub fn observe(&mut self, record: &UpdateRecord, schedule: &BeaconSchedule) {
        let Some(attrs) = record.attrs.as_ref().filter(|_| record.is_announcement()) else {
            return;
        };
        if attrs.communities.is_empty() {
            return;
        }
        let phase = schedule.phase_of(record.arrival);
        for &c in &attrs.communities {
            self.values.observe(c, phase);
        }
        self.attributes.observe(CommunitySet::new(attrs.communities.clone()), phase);
    }

    pub fn merge(&mut self, other: RevealBuilder) {
        self.values.merge(other.values);
        self.attributes.merge(other.attributes);
    }

    pub fn finish(&self) -> CommunityReveal {
        CommunityReveal { values: self.values.finish(), attributes: self.attributes.finish() }
    }
}

pub fn partition_communities<'a>(
    records: impl IntoIterator<Item = &'a UpdateRecord>,
    schedule: &BeaconSchedule,
) -> CommunityReveal {
    let mut b = RevealBuilder::default();
    for r in records {
        b.observe(r, schedule);
    }
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(h: u64, m: u64, s: u64) -> Timestamp {
        Timestamp::from_secs(1_584_230_400 + h * 3600 + m * 60 + s)
    }

    #[test]
    fn phase_boundaries() {
        let s = BeaconSchedule::default();
        assert_eq!(s.phase_of(at(2, 7, 0)), Phase::WithdrawPhase);
        assert_eq!(s.phase_of(at(2, 0, 0)), Phase::WithdrawPhase);
        assert_eq!(s.phase_of(at(2, 15, 0)), Phase::Outside);
        assert_eq!(s.phase_of(at(0, 0, 0)), Phase::AnnouncePhase);
        assert_eq!(s.phase_of(at(23, 50, 0)), Phase::Outside);
        assert_eq!(s.phase_of(Timestamp(at(2, 14, 59).0 + 999_999)), Phase::WithdrawPhase);
    }

    #[test]
    fn mixed_value_is_ambiguous() {
        let mut acc = RevealAccumulator::default();
        acc.observe(1u32, Phase::WithdrawPhase);
        acc.observe(1, Phase::WithdrawPhase);
        acc.observe(2, Phase::AnnouncePhase);
        acc.observe(2, Phase::WithdrawPhase);
        let p = acc.finish();
        assert_eq!(p.category_of(&1), Some(RevealCategory::WithdrawalOnly));
        assert_eq!(p.category_of(&2), Some(RevealCategory::Ambiguous));
        assert!(p.is_disjoint());
    }

    #[test]
    fn default_beacons() {
        let l = BeaconList::default();
        assert!(l.contains(&"84.205.64.0/24".parse().unwrap()));
        assert!(l.contains(&"2001:7fb:fe00::/48".parse().unwrap()));
        assert_eq!(l.name(&"84.205.65.0/24".parse().unwrap()), Some("rrc01"));
    }

    #[test]
    fn beacon_list_file() {
        let text = "# beacons\n84.205.64.0/24 rrc00\n\n2001:7fb:fe00::/48\n";
        let l = BeaconList::load(text.as_bytes()).unwrap();
        assert_eq!(l.len(), 2);
        assert!(matches!(BeaconList::load("nonsense\n".as_bytes()), Err(BeaconError::BadBeaconList { line: 1, .. })));
    }

    #[test]
    fn summary_csv() {
        let mut acc = RevealAccumulator::default();
        acc.observe(Community::new(3356, 2010), Phase::WithdrawPhase);
        let p = acc.finish();
        let mut buf = Vec::new();
        p.write_summary_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("withdrawal_only,1,1.000000"));
        let mut buf = Vec::new();
        p.write_members_csv(&mut buf, "community_value").unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "community_value,category\n3356:2010,withdrawal_only\n");
    }
}
