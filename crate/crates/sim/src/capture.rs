use std::io::{self, Write};
use std::net::Ipv4Addr;

use commex_core::mrt::{AsPath, Asn, BgpAttributes, BgpMessage, Community, MrtError, MrtRecord, MrtWriter};
use ipnet::IpNet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Wall-clock origin of virtual time in exports: 2020-03-15T00:00:00Z.
pub const EXPORT_BASE_TIME: u32 = 1_584_230_400;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SimMessage {
    Announcement {
        path: Vec<Asn>,
        #[serde(default)]
        communities: Vec<Community>,
        next_hop: Ipv4Addr,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        med: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        local_pref: Option<u32>,
    },
    Withdrawal,
}

impl SimMessage {
    pub fn is_announcement(&self) -> bool {
        matches!(self, SimMessage::Announcement { .. })
    }

    pub fn communities(&self) -> &[Community] {
        match self {
            SimMessage::Announcement { communities, .. } => communities,
            SimMessage::Withdrawal => &[],
        }
    }

    pub fn path(&self) -> &[Asn] {
        match self {
            SimMessage::Announcement { path, .. } => path,
            SimMessage::Withdrawal => &[],
        }
    }
}

/// One message as seen on the wire between two routers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapturedMessage {
    /// Global send order across all sessions.
    pub seq: u64,
    /// Virtual time in seconds of the event that caused the message.
    pub time: u64,
    pub from: String,
    pub to: String,
    pub from_asn: Asn,
    pub to_asn: Asn,
    pub from_addr: Ipv4Addr,
    pub to_addr: Ipv4Addr,
    pub prefix: IpNet,
    #[serde(flatten)]
    pub message: SimMessage,
}

#[derive(Debug, Error)]
pub enum CaptureError {
    #[error("message {seq} does not fit in the microsecond field")]
    SequenceOverflow { seq: u64 },
    #[error("virtual time {time}s overflows the export timestamp")]
    TimeOverflow { time: u64 },
    #[error(transparent)]
    Mrt(#[from] MrtError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Append-only record of every announcement and withdrawal sent.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureLog {
    entries: Vec<CapturedMessage>,
}

impl CaptureLog {
    pub(crate) fn push(&mut self, m: CapturedMessage) {
        self.entries.push(m);
    }

    pub fn entries(&self) -> &[CapturedMessage] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Messages from `from` to `to`, in send order.
    pub fn session<'a>(&'a self, from: &'a str, to: &'a str) -> impl Iterator<Item = &'a CapturedMessage> + 'a {
        self.entries.iter().filter(move |m| m.from == from && m.to == to)
    }

    pub fn received_by<'a>(&'a self, router: &'a str) -> impl Iterator<Item = &'a CapturedMessage> + 'a {
        self.entries.iter().filter(move |m| m.to == router)
    }

    /// Directional sessions that carried at least one message, sorted.
    pub fn sessions(&self) -> Vec<(String, String)> {
        let mut s: Vec<_> = self.entries.iter().map(|m| (m.from.clone(), m.to.clone())).collect();
        s.sort();
        s.dedup();
        s
    }

    /// Announcements at or after `since` that repeat the previous
    /// announcement for the same prefix on the same session. A withdrawal in
    /// between breaks the chain.
    pub fn duplicates<'a>(&'a self, from: &'a str, to: &'a str, since: u64) -> Vec<&'a CapturedMessage> {
        let mut last: std::collections::BTreeMap<IpNet, &SimMessage> = Default::default();
        let mut out = Vec::new();
        for m in self.session(from, to) {
            match &m.message {
                SimMessage::Withdrawal => {
                    last.remove(&m.prefix);
                }
                msg => {
                    if m.time >= since && last.get(&m.prefix) == Some(&msg) {
                        out.push(m);
                    }
                    last.insert(m.prefix, msg);
                }
            }
        }
        out
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), CaptureError> {
        for m in &self.entries {
            serde_json::to_writer(&mut out, m).map_err(io::Error::from)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Messages received by `router` as BGP4MP_ET records, as a collector
    /// at that router would archive them. The microsecond field carries the
    /// global sequence number so that arrival order survives.
    pub fn to_mrt_records(&self, router: &str) -> Result<Vec<MrtRecord>, CaptureError> {
        self.received_by(router).map(to_record).collect()
    }

    pub fn write_mrt<W: Write>(&self, router: &str, writer: &mut MrtWriter<W>) -> Result<u64, CaptureError> {
        let mut n = 0;
        for r in self.to_mrt_records(router)? {
            writer.write_record(&r)?;
            n += 1;
        }
        Ok(n)
    }
}

fn to_record(m: &CapturedMessage) -> Result<MrtRecord, CaptureError> {
    let micros =
        u32::try_from(m.seq).ok().filter(|&s| s < 1_000_000).ok_or(CaptureError::SequenceOverflow { seq: m.seq })?;
    let secs = u32::try_from(m.time)
        .ok()
        .and_then(|t| EXPORT_BASE_TIME.checked_add(t))
        .ok_or(CaptureError::TimeOverflow { time: m.time })?;
    let (withdrawn, announced, attributes) = match &m.message {
        SimMessage::Withdrawal => (vec![m.prefix], vec![], BgpAttributes::default()),
        SimMessage::Announcement { path, communities, next_hop, med, local_pref } => {
            let attrs = BgpAttributes {
                origin: Some(0),
                as_path: Some(AsPath::from_sequence(path.clone())),
                next_hop: Some((*next_hop).into()),
                med: *med,
                local_pref: *local_pref,
                communities: communities.clone(),
                ..Default::default()
            };
            (vec![], vec![m.prefix], attrs)
        }
    };
    let msg = BgpMessage::update(
        m.from_asn,
        m.from_addr.into(),
        m.to_asn,
        m.to_addr.into(),
        withdrawn,
        announced,
        attributes,
    );
    Ok(MrtRecord::bgp4mp(secs, Some(micros), msg))
}
