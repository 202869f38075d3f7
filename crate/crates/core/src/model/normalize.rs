use std::collections::HashMap;

use crate::mrt::{AsPath, SegmentKind};

use super::{RecordFlag, Timestamp, UpdateKind, UpdateRecord, MICROS_PER_SECOND};

/// Prepend the peer ASN when a (route-server) peer left itself off the path.
///
/// Only the single-missing-hop case is repaired. A path that already carries
/// the peer ASN further right, or starts with an AS_SET, is flagged instead.
pub fn repair_route_server_path(record: &UpdateRecord) -> UpdateRecord {
    let mut out = record.clone();
    if record.kind != UpdateKind::Announcement {
        return out;
    }
    let peer = record.session.peer_asn;
    let Some(attrs) = out.attrs.as_mut() else {
        return out;
    };
    let path = attrs.as_path.get_or_insert_with(AsPath::default);
    if path.is_empty() {
        *path = AsPath::from_sequence(vec![peer]);
        out.flag(RecordFlag::AnomalousPath);
        return out;
    }
    let leading_set =
        path.segments.iter().find(|s| !s.asns.is_empty()).is_some_and(|s| s.kind != SegmentKind::Sequence);
    match path.first_asn() {
        Some(first) if first == peer => {}
        _ if leading_set || path.contains(peer) => out.flag(RecordFlag::UnrepairedPath),
        _ => {
            path.prepend(peer);
            out.flag(RecordFlag::RouteServerRepaired);
        }
    }
    out
}

/// Per-file state for spreading same-second arrivals over microseconds.
#[derive(Debug, Default)]
pub struct Disambiguator {
    runs: HashMap<String, (u64, u64)>,
    overflows: u64,
}

impl Disambiguator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records stamped at one-second precision get `+i` microseconds, `i`
    /// being the position within their run of equal whole seconds in the file.
    pub fn apply(&mut self, record: &mut UpdateRecord) {
        if record.native_microseconds {
            return;
        }
        let second = record.arrival.seconds();
        let run = self.runs.entry(record.source_file.clone()).or_insert((second, 0));
        if run.0 != second {
            *run = (second, 0);
        }
        let offset = run.1;
        run.1 += 1;
        if offset >= MICROS_PER_SECOND {
            record.flag(RecordFlag::OverflowSecond);
            self.overflows += 1;
        }
        record.arrival = Timestamp(second * MICROS_PER_SECOND + offset);
    }

    pub fn overflows(&self) -> u64 {
        self.overflows
    }
}

/// Apply [`Disambiguator`] over records in file order; returns overflow count.
pub fn disambiguate_timestamps(records: &mut [UpdateRecord]) -> u64 {
    let mut d = Disambiguator::new();
    for r in records.iter_mut() {
        d.apply(r);
    }
    d.overflows()
}
