use std::collections::VecDeque;

use crate::mrt::{BgpMessage, MessageKind, MrtError, MrtHeader, MrtReader};

use super::{SessionKey, Timestamp, UpdateKind, UpdateRecord};

/// Fan one update message out into per-prefix records: withdrawals first,
/// then announcements, each in wire order. Announcements share the message's
/// attributes with AS4_PATH already merged into the AS path.
pub fn expand_message(
    header: &MrtHeader,
    msg: &BgpMessage,
    collector: &str,
    file: &str,
    index: u64,
) -> Vec<UpdateRecord> {
    if msg.kind != MessageKind::Update {
        return Vec::new();
    }
    let arrival = Timestamp::from_parts(header.timestamp, header.microseconds.unwrap_or(0));
    let session = SessionKey::new(collector, msg.peer_asn, msg.peer_address);
    let base = |prefix, kind, attrs| UpdateRecord {
        arrival,
        native_microseconds: header.microseconds.is_some(),
        session: session.clone(),
        prefix,
        kind,
        attrs,
        source_message_index: index,
        source_file: file.to_string(),
        flags: Vec::new(),
    };
    let mut out = Vec::with_capacity(msg.withdrawn.len() + msg.announced.len());
    out.extend(msg.withdrawn.iter().map(|p| base(*p, UpdateKind::Withdrawal, None)));
    if !msg.announced.is_empty() {
        let mut attrs = msg.attributes.clone();
        attrs.as_path = Some(attrs.path());
        attrs.as4_path = None;
        out.extend(msg.announced.iter().map(|p| base(*p, UpdateKind::Announcement, Some(attrs.clone()))));
    }
    out
}

/// Update records of one MRT file in file order. `source_message_index` is
/// the ordinal of the MRT record within the file (all record types counted).
pub struct UpdateStream<'a> {
    reader: MrtReader<'a>,
    collector: String,
    file: String,
    index: u64,
    pending: VecDeque<UpdateRecord>,
}

impl<'a> UpdateStream<'a> {
    pub fn new(reader: MrtReader<'a>, collector: impl Into<String>, file: impl Into<String>) -> Self {
        UpdateStream { reader, collector: collector.into(), file: file.into(), index: 0, pending: VecDeque::new() }
    }

    pub fn reader(&self) -> &MrtReader<'a> {
        &self.reader
    }
}

impl Iterator for UpdateStream<'_> {
    type Item = Result<UpdateRecord, MrtError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(r) = self.pending.pop_front() {
                return Some(Ok(r));
            }
            let rec = match self.reader.next()? {
                Ok(rec) => rec,
                Err(e) => return Some(Err(e)),
            };
            let index = self.index;
            self.index += 1;
            if let Some(msg) = rec.message() {
                self.pending.extend(expand_message(rec.header(), msg, &self.collector, &self.file, index));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mrt::{AsPath, BgpAttributes, Community};

    fn header(us: Option<u32>) -> MrtHeader {
        MrtHeader { timestamp: 100, mrt_type: 16, subtype: 4, length: 0, microseconds: us }
    }

    fn msg(withdrawn: &[&str], announced: &[&str]) -> BgpMessage {
        let attrs = if announced.is_empty() {
            BgpAttributes::default()
        } else {
            BgpAttributes {
                as_path: Some(AsPath::from_sequence(vec![65001, 65002])),
                communities: vec![Community::new(65001, 1)],
                ..Default::default()
            }
        };
        BgpMessage::update(
            65001,
            "192.0.2.1".parse().unwrap(),
            65000,
            "192.0.2.2".parse().unwrap(),
            withdrawn.iter().map(|p| p.parse().unwrap()).collect(),
            announced.iter().map(|p| p.parse().unwrap()).collect(),
            attrs,
        )
    }

    #[test]
    fn three_nlri_fan_out_with_shared_attrs() {
        let m = msg(&[], &["10.0.0.0/24", "10.0.1.0/24", "10.0.2.0/24"]);
        let out = expand_message(&header(None), &m, "rrc00", "f", 7);
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|r| r.kind == UpdateKind::Announcement));
        assert!(out.iter().all(|r| r.attrs == out[0].attrs && r.source_message_index == 7));
        assert_eq!(out[1].prefix.to_string(), "10.0.1.0/24");
        assert_eq!(out[0].arrival, Timestamp(100_000_000));
        assert!(!out[0].native_microseconds);
    }

    #[test]
    fn withdrawals_come_first_without_attrs() {
        let m = msg(&["10.9.0.0/16", "10.8.0.0/16"], &[]);
        let out = expand_message(&header(Some(5)), &m, "rrc00", "f", 0);
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|r| r.kind == UpdateKind::Withdrawal && r.attrs.is_none()));
        assert_eq!(out[0].arrival, Timestamp(100_000_005));
        assert!(out[0].native_microseconds);
    }

    #[test]
    fn end_of_rib_expands_to_nothing() {
        let m = msg(&[], &[]);
        assert!(m.is_end_of_rib());
        assert!(expand_message(&header(None), &m, "c", "f", 0).is_empty());
    }

    #[test]
    fn as4_path_is_merged() {
        let mut m = msg(&[], &["10.0.0.0/24"]);
        m.attributes.as_path = Some("3356 23456".parse().unwrap());
        m.attributes.as4_path = Some("196608".parse().unwrap());
        let out = expand_message(&header(None), &m, "c", "f", 0);
        let attrs = out[0].attrs.as_ref().unwrap();
        assert_eq!(attrs.as_path.as_ref().unwrap().to_string(), "3356 196608");
        assert!(attrs.as4_path.is_none());
    }
}
