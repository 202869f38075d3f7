//! Resource allocation lookups backed by RIR delegated-stats files.
//!
//! Line format (`delegated-extended`):
//! `registry|cc|type|start|value|date|status[|opaque-id[|extensions...]]`
//! with `type` one of `asn`, `ipv4`, `ipv6`. For `asn` and `ipv4` the value is
//! a count; for `ipv6` it is a prefix length. Only `allocated` and `assigned`
//! rows count as allocated.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::BufRead;
use std::net::IpAddr;

use chrono::NaiveDate;
use ipnet::IpNet;
use thiserror::Error;

use crate::mrt::Asn;

use super::{RecordFlag, UpdateKind, UpdateRecord};

#[derive(Debug, Error)]
pub enum AllocationError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("reading delegated stats: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Segment {
    start: u128,
    end: u128,
    valid_from: NaiveDate,
}

/// Disjoint, sorted intervals over a numeric resource space.
#[derive(Clone, Debug, Default)]
struct IntervalSet {
    raw: Vec<Segment>,
    segments: Vec<Segment>,
}

impl IntervalSet {
    fn push(&mut self, start: u128, end: u128, valid_from: NaiveDate) {
        self.raw.push(Segment { start, end, valid_from });
    }

    /// Split overlaps so every point keeps its earliest valid-from date.
    fn normalize(&mut self) {
        let mut raw = std::mem::take(&mut self.raw);
        raw.append(&mut self.segments);
        raw.sort_by_key(|s| (s.start, s.end));
        let mut bounds: Vec<u128> = raw.iter().flat_map(|s| [Some(s.start), s.end.checked_add(1)]).flatten().collect();
        bounds.sort_unstable();
        bounds.dedup();

        let mut out: Vec<Segment> = Vec::new();
        let mut active: BinaryHeap<Reverse<(NaiveDate, u128)>> = BinaryHeap::new();
        let mut next = 0;
        for (i, &point) in bounds.iter().enumerate() {
            while next < raw.len() && raw[next].start == point {
                active.push(Reverse((raw[next].valid_from, raw[next].end)));
                next += 1;
            }
            while active.peek().is_some_and(|Reverse((_, end))| *end < point) {
                active.pop();
            }
            // The heap top is the earliest date; expired entries deeper down
            // are removed once they surface.
            let Some(&Reverse((date, _))) = active.peek() else {
                continue;
            };
            let end = bounds.get(i + 1).map_or(u128::MAX, |b| b - 1);
            match out.last_mut() {
                Some(last) if last.end.checked_add(1) == Some(point) && last.valid_from == date => last.end = end,
                _ => out.push(Segment { start: point, end, valid_from: date }),
            }
        }
        self.segments = out;
    }

    /// Whether every point of `[lo, hi]` is covered by segments valid on `date`.
    fn covers(&self, lo: u128, hi: u128, date: NaiveDate) -> bool {
        let mut idx = self.segments.partition_point(|s| s.end < lo);
        let mut cursor = lo;
        while let Some(seg) = self.segments.get(idx) {
            if seg.start > cursor || seg.valid_from > date {
                return false;
            }
            if seg.end >= hi {
                return true;
            }
            cursor = seg.end + 1;
            idx += 1;
        }
        false
    }

    fn len(&self) -> usize {
        self.segments.len()
    }
}

/// Allocated ASNs and address blocks with the date each became valid.
#[derive(Clone, Debug, Default)]
pub struct AllocationTable {
    asns: IntervalSet,
    ipv4: IntervalSet,
    ipv6: IntervalSet,
    coverage_start: Option<NaiveDate>,
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    if s.is_empty() || s.chars().all(|c| c == '0') {
        return NaiveDate::from_ymd_opt(1970, 1, 1);
    }
    NaiveDate::parse_from_str(s, "%Y%m%d").ok()
}

impl AllocationTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_asns(&mut self, first: Asn, last: Asn, valid_from: NaiveDate) -> &mut Self {
        self.asns.push(u128::from(first), u128::from(last), valid_from);
        self
    }

    pub fn add_prefix(&mut self, net: IpNet, valid_from: NaiveDate) -> &mut Self {
        let (lo, hi) = net_bounds(&net);
        match net {
            IpNet::V4(_) => self.ipv4.push(lo, hi, valid_from),
            IpNet::V6(_) => self.ipv6.push(lo, hi, valid_from),
        }
        self
    }

    /// Records dated before this day cannot be judged and are flagged.
    pub fn set_coverage_start(&mut self, date: NaiveDate) -> &mut Self {
        self.coverage_start = Some(date);
        self
    }

    pub fn coverage_start(&self) -> Option<NaiveDate> {
        self.coverage_start
    }

    /// Merge overlapping intervals; call after the last `add_*`.
    pub fn finalize(&mut self) -> &mut Self {
        self.asns.normalize();
        self.ipv4.normalize();
        self.ipv6.normalize();
        self
    }

    pub fn interval_count(&self) -> usize {
        self.asns.len() + self.ipv4.len() + self.ipv6.len()
    }

    /// Add every allocated/assigned row of one delegated-stats file, then
    /// finalize.
    pub fn load_delegated(&mut self, reader: impl BufRead) -> Result<&mut Self, AllocationError> {
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let lineno = n + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('|').collect();
            let err = |reason: &str| AllocationError::Parse { line: lineno, reason: reason.to_string() };
            // Version line: version|registry|serial|records|startdate|enddate|UTCoffset
            if fields[0].chars().next().is_some_and(|c| c.is_ascii_digit()) {
                let start = fields.get(4).filter(|d| !d.trim().is_empty()).and_then(|d| parse_date(d));
                if let Some(start) = start {
                    self.coverage_start = Some(self.coverage_start.map_or(start, |c| c.min(start)));
                }
                continue;
            }
            if fields.len() < 7 {
                if fields.len() == 6 && fields[5] == "summary" {
                    continue;
                }
                return Err(err("expected at least 7 pipe-separated fields"));
            }
            if fields[5] == "summary" {
                continue;
            }
            let status = fields[6].trim();
            if status != "allocated" && status != "assigned" {
                continue;
            }
            let date = parse_date(fields[5]).ok_or_else(|| err("bad date"))?;
            let start = fields[3].trim();
            let value: u128 = fields[4].trim().parse().map_err(|_| err("bad value"))?;
            match fields[2].trim() {
                "asn" => {
                    let first: Asn = start.parse().map_err(|_| err("bad ASN"))?;
                    if value == 0 {
                        return Err(err("zero ASN count"));
                    }
                    let last = u128::from(first)
                        .checked_add(value - 1)
                        .and_then(|l| Asn::try_from(l).ok())
                        .ok_or_else(|| err("ASN range overflows"))?;
                    self.add_asns(first, last, date);
                }
                "ipv4" => {
                    let addr: std::net::Ipv4Addr = start.parse().map_err(|_| err("bad IPv4 address"))?;
                    if value == 0 {
                        return Err(err("zero address count"));
                    }
                    let lo = u128::from(u32::from(addr));
                    let hi = lo
                        .checked_add(value - 1)
                        .filter(|hi| *hi <= u128::from(u32::MAX))
                        .ok_or_else(|| err("IPv4 range overflows"))?;
                    self.ipv4.push(lo, hi, date);
                }
                "ipv6" => {
                    let addr: std::net::Ipv6Addr = start.parse().map_err(|_| err("bad IPv6 address"))?;
                    let len = u8::try_from(value).ok().filter(|l| *l <= 128).ok_or_else(|| err("bad IPv6 length"))?;
                    let net = ipnet::Ipv6Net::new(addr, len).map_err(|_| err("bad IPv6 prefix"))?;
                    self.add_prefix(IpNet::V6(net.trunc()), date);
                }
                _ => continue,
            }
        }
        Ok(self.finalize())
    }

    pub fn asn_allocated(&self, asn: Asn, date: NaiveDate) -> bool {
        let a = u128::from(asn);
        self.asns.covers(a, a, date)
    }

    /// A prefix is allocated when allocated blocks cover all of it.
    pub fn prefix_allocated(&self, net: &IpNet, date: NaiveDate) -> bool {
        let (lo, hi) = net_bounds(net);
        match net {
            IpNet::V4(_) => self.ipv4.covers(lo, hi, date),
            IpNet::V6(_) => self.ipv6.covers(lo, hi, date),
        }
    }
}

fn net_bounds(net: &IpNet) -> (u128, u128) {
    match (net.network(), net.broadcast()) {
        (IpAddr::V4(a), IpAddr::V4(b)) => (u128::from(u32::from(a)), u128::from(u32::from(b))),
        (IpAddr::V6(a), IpAddr::V6(b)) => (u128::from(a), u128::from(b)),
        _ => unreachable!("network and broadcast share a family"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AllocationVerdict {
    Allocated,
    UnallocatedPrefix,
    UnallocatedAsn(Asn),
    /// Record predates the table; passed through with a flag.
    TableGap,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct FilterReport {
    pub kept: u64,
    pub dropped_prefix: u64,
    pub dropped_asn: u64,
    pub table_gap: u64,
}

impl FilterReport {
    pub fn dropped(&self) -> u64 {
        self.dropped_prefix + self.dropped_asn
    }
}

/// Streaming allocation check; judges each record against its UTC day.
pub struct AllocationFilter<'t> {
    table: &'t AllocationTable,
    report: FilterReport,
}

impl<'t> AllocationFilter<'t> {
    pub fn new(table: &'t AllocationTable) -> Self {
        AllocationFilter { table, report: FilterReport::default() }
    }

    pub fn verdict(&self, record: &UpdateRecord) -> AllocationVerdict {
        let date = record.arrival.utc_date();
        if self.table.coverage_start.is_some_and(|start| date < start) {
            return AllocationVerdict::TableGap;
        }
        if !self.table.prefix_allocated(&record.prefix, date) {
            return AllocationVerdict::UnallocatedPrefix;
        }
        if record.kind == UpdateKind::Announcement {
            if let Some(path) = record.attrs.as_ref().and_then(|a| a.as_path.as_ref()) {
                if let Some(asn) = path.asns().find(|&a| !self.table.asn_allocated(a, date)) {
                    return AllocationVerdict::UnallocatedAsn(asn);
                }
            }
        }
        AllocationVerdict::Allocated
    }

    /// Returns the record if it is kept (possibly flagged), `None` if dropped.
    pub fn check(&mut self, mut record: UpdateRecord) -> Option<UpdateRecord> {
        match self.verdict(&record) {
            AllocationVerdict::Allocated => {}
            AllocationVerdict::TableGap => {
                record.flag(RecordFlag::TableGap);
                self.report.table_gap += 1;
            }
            AllocationVerdict::UnallocatedPrefix => {
                self.report.dropped_prefix += 1;
                return None;
            }
            AllocationVerdict::UnallocatedAsn(_) => {
                self.report.dropped_asn += 1;
                return None;
            }
        }
        self.report.kept += 1;
        Some(record)
    }

    pub fn report(&self) -> FilterReport {
        self.report
    }
}

/// Drop records carrying a resource that was unallocated on their UTC day.
pub fn filter_allocated(
    records: impl IntoIterator<Item = UpdateRecord>,
    table: &AllocationTable,
) -> (Vec<UpdateRecord>, FilterReport) {
    let mut filter = AllocationFilter::new(table);
    let kept = records.into_iter().filter_map(|r| filter.check(r)).collect();
    (kept, filter.report())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SessionKey, Timestamp};
    use crate::mrt::{AsPath, BgpAttributes};

    fn day(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    const MAR15: u64 = 1_584_230_400; // 2020-03-15T00:00:00Z

    fn ann(prefix: &str, path: &[Asn]) -> UpdateRecord {
        UpdateRecord {
            arrival: Timestamp::from_secs(MAR15 + 60),
            native_microseconds: false,
            session: SessionKey::new("rrc00", path[0], "192.0.2.1".parse().unwrap()),
            prefix: prefix.parse().unwrap(),
            kind: UpdateKind::Announcement,
            attrs: Some(BgpAttributes { as_path: Some(AsPath::from_sequence(path.to_vec())), ..Default::default() }),
            source_message_index: 0,
            source_file: "f".into(),
            flags: vec![],
        }
    }

    fn table() -> AllocationTable {
        let mut t = AllocationTable::new();
        t.add_asns(3356, 3356, day(2000, 1, 1))
            .add_asns(20205, 20205, day(2001, 1, 1))
            .add_asns(174, 174, day(1990, 1, 1))
            .add_asns(12654, 12654, day(2003, 1, 1))
            .add_prefix("84.205.64.0/19".parse().unwrap(), day(2004, 1, 1))
            .finalize();
        t
    }

    #[test]
    fn unallocated_path_asn_is_dropped() {
        let t = table();
        let (kept, report) = filter_allocated(vec![ann("84.205.64.0/24", &[20205, 65552, 12654])], &t);
        assert!(kept.is_empty());
        assert_eq!(report.dropped_asn, 1);
    }

    #[test]
    fn fully_allocated_record_is_kept() {
        let t = table();
        let r = ann("84.205.64.0/24", &[20205, 3356, 174, 12654]);
        let (kept, report) = filter_allocated(vec![r.clone()], &t);
        assert_eq!(kept, vec![r]);
        assert_eq!(report.kept, 1);
    }

    #[test]
    fn allocation_date_is_respected() {
        let mut t = AllocationTable::new();
        t.add_prefix("84.205.64.0/24".parse().unwrap(), day(2020, 3, 16))
            .add_asns(1, 100_000, day(1990, 1, 1))
            .finalize();
        let (kept, report) = filter_allocated(vec![ann("84.205.64.0/24", &[1, 2])], &t);
        assert!(kept.is_empty());
        assert_eq!(report.dropped_prefix, 1);
    }

    #[test]
    fn withdrawals_check_prefix_only() {
        let t = table();
        let mut w = ann("84.205.64.0/24", &[65552]);
        w.kind = UpdateKind::Withdrawal;
        w.attrs = None;
        assert_eq!(filter_allocated(vec![w], &t).1.kept, 1);
    }

    #[test]
    fn coverage_requires_all_of_prefix() {
        let mut t = AllocationTable::new();
        t.add_prefix("10.0.0.0/25".parse().unwrap(), day(2000, 1, 1))
            .add_prefix("10.0.0.128/25".parse().unwrap(), day(2001, 1, 1))
            .finalize();
        assert!(t.prefix_allocated(&"10.0.0.0/24".parse().unwrap(), day(2002, 1, 1)));
        assert!(!t.prefix_allocated(&"10.0.0.0/24".parse().unwrap(), day(2000, 6, 1)));
        assert!(!t.prefix_allocated(&"10.0.0.0/23".parse().unwrap(), day(2002, 1, 1)));
    }

    #[test]
    fn table_gap_passes_through_flagged() {
        let mut t = table();
        t.set_coverage_start(day(2021, 1, 1));
        let (kept, report) = filter_allocated(vec![ann("84.205.64.0/24", &[65552])], &t);
        assert_eq!(kept.len(), 1);
        assert!(kept[0].has_flag(RecordFlag::TableGap));
        assert_eq!(report.table_gap, 1);
    }

    #[test]
    fn overlaps_normalize_to_earliest_date() {
        let mut t = AllocationTable::new();
        t.add_asns(10, 20, day(2010, 1, 1)).add_asns(15, 30, day(2005, 1, 1)).finalize();
        assert_eq!(t.interval_count(), 2);
        assert!(t.asn_allocated(16, day(2006, 1, 1)));
        assert!(!t.asn_allocated(12, day(2006, 1, 1)));
        assert!(t.asn_allocated(12, day(2010, 1, 1)));
        assert!(!t.asn_allocated(31, day(2020, 1, 1)));
    }

    #[test]
    fn delegated_stats_are_parsed() {
        let text = "\
2.3|ripencc|20200315|3|19830705|20200314|+0100
ripencc|*|asn|*|1|summary
ripencc|*|ipv4|*|1|summary
# comment
ripencc|EU|asn|12654|1|19930901|allocated|x
ripencc|NL|ipv4|84.205.64.0|8192|20040610|allocated|y
ripencc|NL|ipv6|2001:7fb::|32|20030101|allocated|y
ripencc||asn|65552|1||reserved
ripencc|ZZ|ipv4|10.0.0.0|256||available
";
        let mut t = AllocationTable::new();
        t.load_delegated(text.as_bytes()).unwrap().finalize();
        assert_eq!(t.coverage_start(), Some(day(1983, 7, 5)));
        let d = day(2020, 3, 15);
        assert!(t.asn_allocated(12654, d));
        assert!(!t.asn_allocated(65552, d));
        assert!(t.prefix_allocated(&"84.205.95.0/24".parse().unwrap(), d));
        assert!(!t.prefix_allocated(&"84.205.96.0/24".parse().unwrap(), d));
        assert!(t.prefix_allocated(&"2001:7fb:fe00::/48".parse().unwrap(), d));
        assert!(!t.prefix_allocated(&"10.0.0.0/24".parse().unwrap(), d));
    }

    #[test]
    fn malformed_delegated_line_reports_position() {
        let mut t = AllocationTable::new();
        let err = t.load_delegated("ripencc|EU|asn|abc|1|19930901|allocated\n".as_bytes()).unwrap_err();
        assert!(matches!(err, AllocationError::Parse { line: 1, .. }));
    }
}
