//! Brute-force labeler: keeps every announcement of every stream and
//! compares each new one with the stored predecessor by direct scanning.

use std::collections::{BTreeMap, HashMap};

use commex_core::model::{UpdateKind, UpdateRecord};
use commex_core::mrt::{AsPath, Community, SegmentKind};

fn tokens(path: &AsPath) -> Vec<String> {
    let mut out = Vec::new();
    for seg in &path.segments {
        match seg.kind {
            SegmentKind::Sequence | SegmentKind::ConfedSequence => {
                out.extend(seg.asns.iter().map(|a| format!("as{a}")));
            }
            SegmentKind::Set | SegmentKind::ConfedSet => {
                let mut m: Vec<u32> = seg.asns.clone();
                m.sort();
                m.dedup();
                let joined: Vec<String> = m.iter().map(|a| a.to_string()).collect();
                out.push(format!("set{}", joined.join("+")));
            }
        }
    }
    out
}

fn run_values(t: &[String]) -> Vec<&String> {
    let mut out: Vec<&String> = Vec::new();
    for x in t {
        if out.last().map(|l| *l != x).unwrap_or(true) {
            out.push(x);
        }
    }
    out
}

pub fn path_letter(prev: &AsPath, cur: &AsPath) -> char {
    let (a, b) = (tokens(prev), tokens(cur));
    if a == b {
        'n'
    } else if run_values(&a) == run_values(&b) {
        'x'
    } else {
        'p'
    }
}

pub fn community_letter(prev: &[Community], cur: &[Community]) -> char {
    let count = |v: &[Community]| {
        let mut m: BTreeMap<u32, usize> = BTreeMap::new();
        for c in v {
            *m.entry(c.0).or_default() += 1;
        }
        m
    };
    if count(prev) == count(cur) {
        'n'
    } else {
        'c'
    }
}

/// One label per record: `None` for withdrawals, otherwise a label string.
pub fn oracle_labels(records: &[UpdateRecord]) -> Vec<Option<String>> {
    let mut history: HashMap<(String, u32, String, String), Vec<usize>> = HashMap::new();
    let mut out = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        if r.kind == UpdateKind::Withdrawal {
            out.push(None);
            continue;
        }
        let key =
            (r.session.collector.clone(), r.session.peer_asn, r.session.peer_address.to_string(), r.prefix.to_string());
        let h = history.entry(key).or_default();
        let label = match h.last() {
            None => "initial".to_string(),
            Some(&j) => {
                let prev = records[j].attrs.clone().unwrap_or_default();
                let cur = r.attrs.clone().unwrap_or_default();
                let pp = prev.as_path.unwrap_or_default();
                let cp = cur.as_path.unwrap_or_default();
                format!("{}{}", path_letter(&pp, &cp), community_letter(&prev.communities, &cur.communities))
            }
        };
        h.push(i);
        out.push(Some(label));
    }
    out
}
