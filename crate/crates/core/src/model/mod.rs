//! Normalized update records and the cleaning pipeline applied before
//! classification.

mod allocation;
mod expand;
mod jsonl;
mod normalize;

use std::fmt;
use std::net::IpAddr;

use chrono::{DateTime, NaiveDate, Utc};
use ipnet::IpNet;
use serde::{Deserialize, Serialize};

use crate::mrt::{Asn, BgpAttributes};

pub use allocation::{
    filter_allocated, AllocationError, AllocationFilter, AllocationTable, AllocationVerdict, FilterReport,
};
pub use expand::{expand_message, UpdateStream};
pub use jsonl::{read_jsonl, write_jsonl, JsonlError};
pub use normalize::{disambiguate_timestamps, repair_route_server_path, Disambiguator};

pub const MICROS_PER_SECOND: u64 = 1_000_000;

/// Arrival time in microseconds since the Unix epoch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub u64);

impl Timestamp {
    pub fn from_parts(seconds: u32, micros: u32) -> Self {
        Timestamp(u64::from(seconds) * MICROS_PER_SECOND + u64::from(micros))
    }

    pub fn from_secs(seconds: u64) -> Self {
        Timestamp(seconds * MICROS_PER_SECOND)
    }

    pub fn seconds(self) -> u64 {
        self.0 / MICROS_PER_SECOND
    }

    pub fn subsec_micros(self) -> u32 {
        (self.0 % MICROS_PER_SECOND) as u32
    }

    /// Seconds elapsed since midnight UTC of the same day.
    pub fn second_of_day(self) -> u32 {
        (self.seconds() % 86_400) as u32
    }

    pub fn utc_date(self) -> NaiveDate {
        self.to_datetime().date_naive()
    }

    pub fn to_datetime(self) -> DateTime<Utc> {
        DateTime::from_timestamp(self.seconds() as i64, self.subsec_micros() * 1000).unwrap_or(DateTime::<Utc>::MIN_UTC)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:06}", self.seconds(), self.subsec_micros())
    }
}

/// Stream key of a BGP session at a collector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SessionKey {
    pub collector: String,
    pub peer_asn: Asn,
    pub peer_address: IpAddr,
}

impl SessionKey {
    pub fn new(collector: impl Into<String>, peer_asn: Asn, peer_address: IpAddr) -> Self {
        SessionKey { collector: collector.into(), peer_asn, peer_address }
    }
}

impl fmt::Display for SessionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/AS{}/{}", self.collector, self.peer_asn, self.peer_address)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateKind {
    Announcement,
    Withdrawal,
}

/// Conditions noticed while normalizing or classifying; never cause drops.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordFlag {
    /// Empty AS path replaced by the peer ASN.
    AnomalousPath,
    /// Peer ASN found deeper in the path, or a leading AS_SET; left unrepaired.
    UnrepairedPath,
    /// Route-server style path that had the peer ASN prepended.
    RouteServerRepaired,
    /// Record predates the allocation table coverage.
    TableGap,
    /// More than 10^6 records shared one whole second.
    OverflowSecond,
    /// Arrival earlier than the previous record of the same stream.
    OutOfOrder,
}

/// One announced or withdrawn prefix from an archived update.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateRecord {
    pub arrival: Timestamp,
    /// Arrival came from an extended-timestamp record.
    #[serde(default)]
    pub native_microseconds: bool,
    pub session: SessionKey,
    pub prefix: IpNet,
    pub kind: UpdateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attrs: Option<BgpAttributes>,
    pub source_message_index: u64,
    pub source_file: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<RecordFlag>,
}

impl UpdateRecord {
    pub fn is_announcement(&self) -> bool {
        self.kind == UpdateKind::Announcement
    }

    pub fn flag(&mut self, flag: RecordFlag) {
        if !self.flags.contains(&flag) {
            self.flags.push(flag);
        }
    }

    pub fn has_flag(&self, flag: RecordFlag) -> bool {
        self.flags.contains(&flag)
    }
}
