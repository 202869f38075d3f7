use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use ipnet::IpNet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{RecordFlag, SessionKey, Timestamp, UpdateKind, UpdateRecord};
use crate::mrt::{AsPath, BgpAttributes};

use super::verdict::{community_verdict, is_reordering, path_verdict, AnnouncementType};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("only announcements can be classified")]
    NotAnnouncement,
}

#[derive(Clone, Debug)]
struct StreamEntry {
    /// Attributes of the most recent announcement, if any.
    last_attrs: Option<BgpAttributes>,
    last_kind: UpdateKind,
    last_arrival: Timestamp,
}

/// Label plus the auxiliary facts recorded next to it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub label: AnnouncementType,
    /// The stream's previous update was a withdrawal.
    pub after_withdrawal: bool,
    /// MED differs from the previous announcement (`None` for `initial`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub med_changed: Option<bool>,
    /// Path change whose ASN multiset is unchanged (reordering).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reordering: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub out_of_order: bool,
}

/// Per (session, prefix) predecessor state.
///
/// Withdrawals are remembered as `last_kind` but do not reset the stored
/// attributes: the first announcement after a withdrawal is compared against
/// the route announced before it.
#[derive(Clone, Debug, Default)]
pub struct StreamState {
    streams: HashMap<(SessionKey, IpNet), StreamEntry>,
}

fn attrs_path(attrs: &BgpAttributes) -> AsPath {
    attrs.as_path.clone().unwrap_or_default()
}

impl StreamState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of tracked (session, prefix) streams.
    pub fn len(&self) -> usize {
        self.streams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.streams.is_empty()
    }

    pub fn last_kind(&self, session: &SessionKey, prefix: &IpNet) -> Option<UpdateKind> {
        self.streams.get(&(session.clone(), *prefix)).map(|e| e.last_kind)
    }

    /// Label an announcement and make it the stream's new predecessor.
    pub fn classify(&mut self, record: &UpdateRecord) -> Result<Classification, ClassifyError> {
        if record.kind != UpdateKind::Announcement {
            return Err(ClassifyError::NotAnnouncement);
        }
        let attrs = record.attrs.clone().unwrap_or_default();
        let key = (record.session.clone(), record.prefix);
        let entry = self.streams.entry(key).or_insert(StreamEntry {
            last_attrs: None,
            last_kind: UpdateKind::Announcement,
            last_arrival: record.arrival,
        });
        let out_of_order = record.arrival < entry.last_arrival;
        let after_withdrawal = entry.last_kind == UpdateKind::Withdrawal;
        let result = match &entry.last_attrs {
            None => Classification {
                label: AnnouncementType::Initial,
                after_withdrawal,
                med_changed: None,
                reordering: false,
                out_of_order,
            },
            Some(prev) => {
                let (pp, cp) = (attrs_path(prev), attrs_path(&attrs));
                let label = AnnouncementType::from_verdicts(
                    path_verdict(&pp, &cp),
                    community_verdict(&prev.communities, &attrs.communities),
                );
                Classification {
                    label,
                    after_withdrawal,
                    med_changed: Some(prev.med != attrs.med),
                    reordering: is_reordering(&pp, &cp),
                    out_of_order,
                }
            }
        };
        entry.last_attrs = Some(attrs);
        entry.last_kind = UpdateKind::Announcement;
        entry.last_arrival = entry.last_arrival.max(record.arrival);
        Ok(result)
    }

    /// Note a withdrawal; the stored predecessor attributes are kept.
    pub fn withdraw(&mut self, record: &UpdateRecord) {
        let key = (record.session.clone(), record.prefix);
        let entry = self.streams.entry(key).or_insert(StreamEntry {
            last_attrs: None,
            last_kind: UpdateKind::Withdrawal,
            last_arrival: record.arrival,
        });
        entry.last_kind = UpdateKind::Withdrawal;
        entry.last_arrival = entry.last_arrival.max(record.arrival);
    }

    /// Feed any record: announcements are labeled, withdrawals update state.
    pub fn observe(&mut self, record: &UpdateRecord) -> Option<Classification> {
        match record.kind {
            UpdateKind::Announcement => self.classify(record).ok(),
            UpdateKind::Withdrawal => {
                self.withdraw(record);
                None
            }
        }
    }

    /// Move every stream whose shard differs from `shard` into a new state.
    pub fn split_off_shard(&mut self, shards: usize, shard: usize) -> StreamState {
        let (keep, moved): (HashMap<_, _>, HashMap<_, _>) = std::mem::take(&mut self.streams)
            .into_iter()
            .partition(|((_, prefix), _)| shard_of(prefix, shards) == shard);
        self.streams = keep;
        StreamState { streams: moved }
    }

    /// Union of two states over disjoint stream sets.
    pub fn absorb(&mut self, other: StreamState) {
        self.streams.extend(other.streams);
    }
}

/// Stable prefix shard for partitioning full-archive runs.
pub fn shard_of(prefix: &IpNet, shards: usize) -> usize {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    prefix.hash(&mut h);
    (h.finish() % shards.max(1) as u64) as usize
}

/// A labeled announcement as written to line-delimited JSON.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledRecord {
    #[serde(flatten)]
    pub record: UpdateRecord,
    #[serde(flatten)]
    pub classification: Classification,
}

impl LabeledRecord {
    pub fn new(mut record: UpdateRecord, classification: Classification) -> Self {
        if classification.out_of_order {
            record.flag(RecordFlag::OutOfOrder);
        }
        LabeledRecord { record, classification }
    }

    pub fn label(&self) -> AnnouncementType {
        self.classification.label
    }
}
