use std::collections::BTreeMap;
use std::io::Write;

use crate::model::UpdateRecord;
use crate::mrt::Asn;

use super::state::{Classification, StreamState};
use super::verdict::AnnouncementType;

/// Label counts plus the per-peer unnecessary-announcement breakdown.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeTally {
    counts: [u64; 7],
    /// peer ASN -> (nc, nn); every peer that sent an announcement is listed.
    pub per_peer: BTreeMap<Asn, (u64, u64)>,
    pub withdrawals: u64,
    pub reorderings: u64,
    pub out_of_order: u64,
    pub after_withdrawal: u64,
}

impl TypeTally {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, peer: Asn, c: &Classification) {
        self.counts[c.label.index()] += 1;
        let slot = self.per_peer.entry(peer).or_insert((0, 0));
        match c.label {
            AnnouncementType::Nc => slot.0 += 1,
            AnnouncementType::Nn => slot.1 += 1,
            _ => {}
        }
        self.reorderings += c.reordering as u64;
        self.out_of_order += c.out_of_order as u64;
        self.after_withdrawal += c.after_withdrawal as u64;
    }

    pub fn count(&self, t: AnnouncementType) -> u64 {
        self.counts[t.index()]
    }

    /// Announcements seen, `initial` included.
    pub fn announcements(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Announcements carrying one of the six comparison labels.
    pub fn labeled(&self) -> u64 {
        self.announcements() - self.count(AnnouncementType::Initial)
    }

    pub fn unnecessary(&self) -> u64 {
        self.count(AnnouncementType::Nc) + self.count(AnnouncementType::Nn)
    }

    /// Share among labeled announcements; `None` for `initial` or an empty tally.
    pub fn share(&self, t: AnnouncementType) -> Option<f64> {
        let n = self.labeled();
        (t != AnnouncementType::Initial && n > 0).then(|| self.count(t) as f64 / n as f64)
    }

    /// Peers that sent nc announcements but never nn, and vice versa.
    pub fn exclusive_peers(&self) -> (Vec<Asn>, Vec<Asn>) {
        let only = |want_nc: bool| {
            self.per_peer
                .iter()
                .filter(|(_, &(nc, nn))| if want_nc { nc > 0 && nn == 0 } else { nn > 0 && nc == 0 })
                .map(|(&a, _)| a)
                .collect()
        };
        (only(true), only(false))
    }

    pub fn merge(&mut self, other: &TypeTally) {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        for (&peer, &(nc, nn)) in &other.per_peer {
            let slot = self.per_peer.entry(peer).or_insert((0, 0));
            slot.0 += nc;
            slot.1 += nn;
        }
        self.withdrawals += other.withdrawals;
        self.reorderings += other.reorderings;
        self.out_of_order += other.out_of_order;
        self.after_withdrawal += other.after_withdrawal;
    }

    /// `type,count,share` with one row per label and a final `initial` row
    /// whose share is empty.
    pub fn write_types_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["type", "count", "share"])?;
        for t in AnnouncementType::ALL {
            let share = self.share(t).map(|s| format!("{s:.6}")).unwrap_or_default();
            w.write_record([t.as_str(), &self.count(t).to_string(), &share])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_peers_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["peer_asn", "nc_count", "nn_count"])?;
        for (peer, (nc, nn)) in &self.per_peer {
            w.write_record([peer.to_string(), nc.to_string(), nn.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Classify a record sequence from cold state and count the labels.
pub fn tally<'a>(records: impl IntoIterator<Item = &'a UpdateRecord>) -> TypeTally {
    let mut state = StreamState::new();
    tally_with(&mut state, records)
}

pub fn tally_with<'a>(state: &mut StreamState, records: impl IntoIterator<Item = &'a UpdateRecord>) -> TypeTally {
    let mut t = TypeTally::new();
    for r in records {
        match state.observe(r) {
            Some(c) => t.add(r.session.peer_asn, &c),
            None => t.withdrawals += 1,
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SessionKey, Timestamp, UpdateKind};
    use crate::mrt::BgpAttributes;

    fn rec(peer: Asn, t: u64, path: &str, comm: &[&str]) -> UpdateRecord {
        UpdateRecord {
            arrival: Timestamp::from_secs(t),
            native_microseconds: false,
            session: SessionKey::new("rrc00", peer, "192.0.2.1".parse().unwrap()),
            prefix: "10.0.0.0/24".parse().unwrap(),
            kind: UpdateKind::Announcement,
            attrs: Some(BgpAttributes {
                as_path: Some(path.parse().unwrap()),
                communities: comm.iter().map(|c| c.parse().unwrap()).collect(),
                ..Default::default()
            }),
            source_message_index: t,
            source_file: "f".into(),
            flags: vec![],
        }
    }

    #[test]
    fn repeated_identical_announcement() {
        let rs: Vec<_> = (0..5).map(|t| rec(1, t, "1 2", &[])).collect();
        let t = tally(&rs);
        assert_eq!(t.count(AnnouncementType::Initial), 1);
        assert_eq!(t.count(AnnouncementType::Nn), 4);
        assert_eq!(t.per_peer[&1], (0, 4));
        assert_eq!(t.share(AnnouncementType::Nn), Some(1.0));
        assert_eq!(t.share(AnnouncementType::Initial), None);
    }

    #[test]
    fn peers_with_no_unnecessary_announcements_are_listed() {
        let t = tally(&[rec(7, 0, "7", &[])]);
        assert_eq!(t.per_peer[&7], (0, 0));
    }

    #[test]
    fn merge_is_additive() {
        let a = tally(&[rec(1, 0, "1", &[]), rec(1, 1, "1", &["1:1"])]);
        let b = tally(&[rec(2, 0, "2", &[]), rec(2, 1, "2", &[])]);
        let mut ab = a.clone();
        ab.merge(&b);
        let mut ba = b.clone();
        ba.merge(&a);
        assert_eq!(ab, ba);
        assert_eq!(ab.announcements(), 4);
        assert_eq!(ab.exclusive_peers(), (vec![1], vec![2]));
    }

    #[test]
    fn csv_layout() {
        let t = tally(&[rec(1, 0, "1", &[]), rec(1, 1, "1", &["1:1"])]);
        let mut buf = Vec::new();
        t.write_types_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 8);
        assert_eq!(lines[0], "type,count,share");
        assert_eq!(lines[3], "nc,1,1.000000");
        assert_eq!(lines[7], "initial,1,");
        let mut buf = Vec::new();
        t.write_peers_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "peer_asn,nc_count,nn_count\n1,1,0\n");
    }
}
