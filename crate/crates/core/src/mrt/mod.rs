//! MRT (RFC 6396) framing with BGP4MP/BGP4MP_ET and TABLE_DUMP_V2 bodies.
//!
//! Parsed records keep the exact bytes they were read from, so a record that
//! is not mutated re-serializes bit-for-bit. Records built in code (or
//! mutated through [`MrtRecord::body_mut`]) go through the canonical encoder.

mod attributes;
mod message;
mod reader;
mod rib;
mod wire;

use std::io;

use thiserror::Error;

pub use attributes::{
    attr_code, AsPath, AsPathSegment, Asn, BgpAttributes, Community, LargeCommunity, MpNextHop, RawAttribute,
    SegmentKind, AS_TRANS,
};
pub use message::{BgpMessage, MessageKind, StateChange};
pub use reader::{read_mrt_stream, write_mrt_stream, Container, MrtReader, MrtWriter, ReadStats};
pub use rib::{PeerEntry, PeerIndexTable, RibEntry, RibSnapshot};
pub use wire::BodyError;

pub const HEADER_LEN: usize = 12;

/// Upper bound on a single record body; larger length fields are rejected
/// before any allocation happens.
pub const MAX_RECORD_LEN: u32 = 1 << 26;

pub mod mrt_type {
    pub const TABLE_DUMP_V2: u16 = 13;
    pub const BGP4MP: u16 = 16;
    pub const BGP4MP_ET: u16 = 17;
}

pub mod bgp4mp_subtype {
    pub const STATE_CHANGE: u16 = 0;
    pub const MESSAGE: u16 = 1;
    pub const MESSAGE_AS4: u16 = 4;
    pub const STATE_CHANGE_AS4: u16 = 5;
    pub const MESSAGE_LOCAL: u16 = 6;
    pub const MESSAGE_AS4_LOCAL: u16 = 7;
    pub const MESSAGE_ADDPATH: u16 = 8;
    pub const MESSAGE_AS4_ADDPATH: u16 = 9;
    pub const MESSAGE_LOCAL_ADDPATH: u16 = 10;
    pub const MESSAGE_AS4_LOCAL_ADDPATH: u16 = 11;
}

pub mod table_dump_v2_subtype {
    pub const PEER_INDEX_TABLE: u16 = 1;
    pub const RIB_IPV4_UNICAST: u16 = 2;
    pub const RIB_IPV4_MULTICAST: u16 = 3;
    pub const RIB_IPV6_UNICAST: u16 = 4;
    pub const RIB_IPV6_MULTICAST: u16 = 5;
}

#[derive(Debug, Error)]
pub enum MrtError {
    #[error("record at byte {offset} truncated: needed {needed} bytes, found {found}")]
    TruncatedRecord { offset: u64, needed: u64, found: u64 },
    #[error("record at byte {offset} declares {length} bytes, above the {MAX_RECORD_LEN} limit")]
    RecordTooLarge { offset: u64, length: u32 },
    #[error("compressed container is corrupt: {0}")]
    ContainerCorrupt(#[source] io::Error),
    #[error("read failed: {0}")]
    Io(#[source] io::Error),
    #[error("write failed: {0}")]
    SinkFailure(#[source] io::Error),
    #[error("record cannot be encoded: {0}")]
    Unencodable(&'static str),
}

/// Common MRT header; `length` is the wire value, which for extended-timestamp
/// types includes the 4-byte microsecond field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MrtHeader {
    pub timestamp: u32,
    pub mrt_type: u16,
    pub subtype: u16,
    pub length: u32,
    pub microseconds: Option<u32>,
}

impl MrtHeader {
    pub fn is_extended(&self) -> bool {
        self.mrt_type == mrt_type::BGP4MP_ET
    }

    /// Bytes of body after the (optional) microsecond field.
    pub fn body_len(&self) -> usize {
        let len = self.length as usize;
        if self.is_extended() {
            len.saturating_sub(4)
        } else {
            len
        }
    }

    fn encode(&self, out: &mut Vec<u8>) {
        wire::put_u32(out, self.timestamp);
        wire::put_u16(out, self.mrt_type);
        wire::put_u16(out, self.subtype);
        wire::put_u32(out, self.length);
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum MrtBody {
    Message(BgpMessage),
    StateChange(StateChange),
    PeerIndexTable(PeerIndexTable),
    Rib(RibSnapshot),
    /// Add-path encoded BGP4MP message; surfaced and counted, not decoded.
    AddPath,
    /// Type or subtype this toolkit does not decode.
    Unsupported,
    Malformed(BodyError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MrtRecord {
    header: MrtHeader,
    body: MrtBody,
    raw: Option<Vec<u8>>,
}

impl MrtRecord {
    /// Archived BGP message; extended timestamp when `microseconds` is given.
    pub fn bgp4mp(timestamp: u32, microseconds: Option<u32>, message: BgpMessage) -> Self {
        let subtype = if message.four_byte_asn { bgp4mp_subtype::MESSAGE_AS4 } else { bgp4mp_subtype::MESSAGE };
        Self::from_body(timestamp, microseconds, subtype, MrtBody::Message(message))
    }

    pub fn state_change(timestamp: u32, microseconds: Option<u32>, change: StateChange) -> Self {
        let subtype =
            if change.four_byte_asn { bgp4mp_subtype::STATE_CHANGE_AS4 } else { bgp4mp_subtype::STATE_CHANGE };
        Self::from_body(timestamp, microseconds, subtype, MrtBody::StateChange(change))
    }

    fn from_body(timestamp: u32, microseconds: Option<u32>, subtype: u16, body: MrtBody) -> Self {
        let mrt_type = if microseconds.is_some() { mrt_type::BGP4MP_ET } else { mrt_type::BGP4MP };
        let mut rec =
            MrtRecord { header: MrtHeader { timestamp, mrt_type, subtype, length: 0, microseconds }, body, raw: None };
        let len = rec.encode_body().map(|b| b.len()).unwrap_or(0);
        rec.header.length = len as u32;
        rec
    }

    /// Decode a record from its header and the `header.length` bytes after it.
    pub fn decode(header: MrtHeader, body_bytes: Vec<u8>) -> Self {
        let mut header = header;
        let mut body = decode_body(&mut header, &body_bytes);
        if let Some(us) = header.microseconds {
            if us >= 1_000_000 && !matches!(body, MrtBody::Malformed(_)) {
                body = MrtBody::Malformed(BodyError::Microseconds(us));
            }
        }
        MrtRecord { header, body, raw: Some(body_bytes) }
    }

    pub fn header(&self) -> &MrtHeader {
        &self.header
    }

    pub fn body(&self) -> &MrtBody {
        &self.body
    }

    /// Mutable body access; the record is re-encoded canonically afterwards.
    pub fn body_mut(&mut self) -> &mut MrtBody {
        self.raw = None;
        &mut self.body
    }

    pub fn set_timestamp(&mut self, timestamp: u32, microseconds: Option<u32>) {
        if microseconds.is_some() != self.header.is_extended() {
            self.raw = None;
            self.header.mrt_type = if microseconds.is_some() { mrt_type::BGP4MP_ET } else { mrt_type::BGP4MP };
        } else if microseconds != self.header.microseconds {
            self.raw = None;
        }
        self.header.timestamp = timestamp;
        self.header.microseconds = microseconds;
    }

    pub fn message(&self) -> Option<&BgpMessage> {
        match &self.body {
            MrtBody::Message(m) => Some(m),
            _ => None,
        }
    }

    /// Message kind of the archived BGP message, `Other` for non-message records.
    pub fn message_kind(&self) -> MessageKind {
        self.message().map_or(MessageKind::Other, |m| m.kind)
    }

    pub fn is_update(&self) -> bool {
        self.message_kind() == MessageKind::Update
    }

    /// Whether the record still carries the bytes it was decoded from.
    pub fn is_pristine(&self) -> bool {
        self.raw.is_some()
    }

    /// Total record size on the wire including the 12-byte header.
    pub fn wire_len(&self) -> usize {
        HEADER_LEN + self.header.length as usize
    }

    fn encode_body(&self) -> Result<Vec<u8>, MrtError> {
        if let Some(raw) = &self.raw {
            return Ok(raw.clone());
        }
        let mut out = Vec::new();
        if self.header.is_extended() {
            wire::put_u32(&mut out, self.header.microseconds.unwrap_or(0));
        }
        match &self.body {
            MrtBody::Message(m) => m.encode(&mut out),
            MrtBody::StateChange(s) => s.encode(&mut out),
            MrtBody::PeerIndexTable(_) | MrtBody::Rib(_) => {
                return Err(MrtError::Unencodable("TABLE_DUMP_V2 records are read-only"))
            }
            MrtBody::AddPath | MrtBody::Unsupported | MrtBody::Malformed(_) => {
                return Err(MrtError::Unencodable("record body was not decoded"))
            }
        }
        Ok(out)
    }

    /// Serialize header and body, appending to `out`.
    pub fn encode(&self, out: &mut Vec<u8>) -> Result<usize, MrtError> {
        let body = self.encode_body()?;
        let mut header = self.header;
        header.length = body.len() as u32;
        header.encode(out);
        out.extend_from_slice(&body);
        Ok(HEADER_LEN + body.len())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, MrtError> {
        let mut out = Vec::with_capacity(self.wire_len());
        self.encode(&mut out)?;
        Ok(out)
    }
}

fn decode_body(header: &mut MrtHeader, bytes: &[u8]) -> MrtBody {
    use bgp4mp_subtype::*;
    use table_dump_v2_subtype::*;

    let mut body = bytes;
    if header.is_extended() {
        if bytes.len() < 4 {
            return MrtBody::Malformed(BodyError::Short("microseconds"));
        }
        header.microseconds = Some(u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]));
        body = &bytes[4..];
    }
    let result = match (header.mrt_type, header.subtype) {
        (mrt_type::BGP4MP | mrt_type::BGP4MP_ET, st) => match st {
            MESSAGE | MESSAGE_LOCAL => BgpMessage::decode(body, false).map(MrtBody::Message),
            MESSAGE_AS4 | MESSAGE_AS4_LOCAL => BgpMessage::decode(body, true).map(MrtBody::Message),
            STATE_CHANGE => StateChange::decode(body, false).map(MrtBody::StateChange),
            STATE_CHANGE_AS4 => StateChange::decode(body, true).map(MrtBody::StateChange),
            MESSAGE_ADDPATH | MESSAGE_AS4_ADDPATH | MESSAGE_LOCAL_ADDPATH | MESSAGE_AS4_LOCAL_ADDPATH => {
                Ok(MrtBody::AddPath)
            }
            _ => Ok(MrtBody::Unsupported),
        },
        (mrt_type::TABLE_DUMP_V2, st) => match st {
            PEER_INDEX_TABLE => PeerIndexTable::decode(body).map(MrtBody::PeerIndexTable),
            RIB_IPV4_UNICAST | RIB_IPV4_MULTICAST => RibSnapshot::decode(body, false).map(MrtBody::Rib),
            RIB_IPV6_UNICAST | RIB_IPV6_MULTICAST => RibSnapshot::decode(body, true).map(MrtBody::Rib),
            8..=11 => Ok(MrtBody::AddPath),
            _ => Ok(MrtBody::Unsupported),
        },
        _ => Ok(MrtBody::Unsupported),
    };
    result.unwrap_or_else(MrtBody::Malformed)
}

/// Peer ASNs listed in the PEER_INDEX_TABLE records of a RIB dump.
pub fn rib_peer_asns<'a>(records: impl IntoIterator<Item = &'a MrtRecord>) -> Vec<Asn> {
    let mut asns: Vec<Asn> = records
        .into_iter()
        .filter_map(|r| match r.body() {
            MrtBody::PeerIndexTable(t) => Some(t.peers.iter().map(|p| p.asn)),
            _ => None,
        })
        .flatten()
        .collect();
    asns.sort_unstable();
    asns.dedup();
    asns
}
