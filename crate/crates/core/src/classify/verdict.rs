use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::mrt::{AsPath, Asn, Community, SegmentKind};

/// Two-letter announcement label: AS-path verdict then community verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnouncementType {
    Pc,
    Pn,
    Nc,
    Nn,
    Xc,
    Xn,
    /// First announcement of a (session, prefix) stream.
    Initial,
}

impl AnnouncementType {
    pub const LABELED: [AnnouncementType; 6] = [
        AnnouncementType::Pc,
        AnnouncementType::Pn,
        AnnouncementType::Nc,
        AnnouncementType::Nn,
        AnnouncementType::Xc,
        AnnouncementType::Xn,
    ];

    pub const ALL: [AnnouncementType; 7] = [
        AnnouncementType::Pc,
        AnnouncementType::Pn,
        AnnouncementType::Nc,
        AnnouncementType::Nn,
        AnnouncementType::Xc,
        AnnouncementType::Xn,
        AnnouncementType::Initial,
    ];

    pub fn from_verdicts(path: PathVerdict, community: CommunityVerdict) -> Self {
        use CommunityVerdict::*;
        use PathVerdict::*;
        match (path, community) {
            (Changed, Differs) => AnnouncementType::Pc,
            (Changed, Same) => AnnouncementType::Pn,
            (Unchanged, Differs) => AnnouncementType::Nc,
            (Unchanged, Same) => AnnouncementType::Nn,
            (Prepending, Differs) => AnnouncementType::Xc,
            (Prepending, Same) => AnnouncementType::Xn,
        }
    }

    /// No AS-path change: `nc` or `nn`.
    pub fn is_unnecessary(self) -> bool {
        matches!(self, AnnouncementType::Nc | AnnouncementType::Nn)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AnnouncementType::Pc => "pc",
            AnnouncementType::Pn => "pn",
            AnnouncementType::Nc => "nc",
            AnnouncementType::Nn => "nn",
            AnnouncementType::Xc => "xc",
            AnnouncementType::Xn => "xn",
            AnnouncementType::Initial => "initial",
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for AnnouncementType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnnouncementType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AnnouncementType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown announcement type `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PathVerdict {
    /// `p`: the traversed AS sequence changed.
    Changed,
    /// `n`: identical path.
    Unchanged,
    /// `x`: same path up to prepending inflation or deflation.
    Prepending,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CommunityVerdict {
    Differs,
    Same,
}

/// Path element used for comparison; an AS_SET is one unit keyed by its
/// sorted members.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) enum PathElement {
    Asn(Asn),
    Set(Vec<Asn>),
}

pub(crate) fn elements(path: &AsPath) -> Vec<PathElement> {
    let mut out = Vec::new();
    for seg in &path.segments {
        match seg.kind {
            SegmentKind::Sequence | SegmentKind::ConfedSequence => {
                out.extend(seg.asns.iter().map(|&a| PathElement::Asn(a)))
            }
            SegmentKind::Set | SegmentKind::ConfedSet => {
                let mut members = seg.asns.clone();
                members.sort_unstable();
                members.dedup();
                out.push(PathElement::Set(members));
            }
        }
    }
    out
}

fn collapse(mut elems: Vec<PathElement>) -> Vec<PathElement> {
    elems.dedup();
    elems
}

pub fn path_verdict(prev: &AsPath, cur: &AsPath) -> PathVerdict {
    let (a, b) = (elements(prev), elements(cur));
    if a == b {
        PathVerdict::Unchanged
    } else if collapse(a) == collapse(b) {
        PathVerdict::Prepending
    } else {
        PathVerdict::Changed
    }
}

/// A `p` verdict whose two paths hold the same ASN multiset, i.e. a pure
/// reordering. Counted separately since it is neither prepending nor a new
/// set of ASes.
pub fn is_reordering(prev: &AsPath, cur: &AsPath) -> bool {
    if path_verdict(prev, cur) != PathVerdict::Changed {
        return false;
    }
    let mut a = elements(prev);
    let mut b = elements(cur);
    a.sort();
    b.sort();
    a == b
}

/// Order-insensitive multiset comparison; an absent attribute is empty.
pub fn community_verdict(prev: &[Community], cur: &[Community]) -> CommunityVerdict {
    if prev.len() != cur.len() {
        return CommunityVerdict::Differs;
    }
    let mut a = prev.to_vec();
    let mut b = cur.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    if a == b {
        CommunityVerdict::Same
    } else {
        CommunityVerdict::Differs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> AsPath {
        s.parse().unwrap()
    }

    fn c(v: &[&str]) -> Vec<Community> {
        v.iter().map(|s| s.parse().unwrap()).collect()
    }

    #[test]
    fn explored_path_versus_best_path_is_a_change() {
        assert_eq!(path_verdict(&p("20205 3356 174 12654"), &p("20205 6939 50304 12654")), PathVerdict::Changed);
    }

    #[test]
    fn pure_prepending() {
        assert_eq!(path_verdict(&p("65001 65002"), &p("65001 65001 65002")), PathVerdict::Prepending);
        assert_eq!(path_verdict(&p("1 2 2 2 3"), &p("1 2 3")), PathVerdict::Prepending);
    }

    #[test]
    fn identity() {
        let x = p("20205 3356 174 12654");
        assert_eq!(path_verdict(&x, &x), PathVerdict::Unchanged);
    }

    #[test]
    fn reordering_is_a_change_and_counted() {
        let (a, b) = (p("1 2 3"), p("1 3 2"));
        assert_eq!(path_verdict(&a, &b), PathVerdict::Changed);
        assert!(is_reordering(&a, &b));
        assert!(!is_reordering(&a, &p("1 2 4")));
    }

    #[test]
    fn as_set_member_order_is_irrelevant() {
        assert_eq!(path_verdict(&p("1 {3,2}"), &p("1 {2,3}")), PathVerdict::Unchanged);
        assert_eq!(path_verdict(&p("1 {2,3}"), &p("1 {2,4}")), PathVerdict::Changed);
    }

    #[test]
    fn community_cases() {
        assert_eq!(community_verdict(&[], &[]), CommunityVerdict::Same);
        assert_eq!(community_verdict(&c(&["3356:2010"]), &c(&["3356:2011"])), CommunityVerdict::Differs);
        assert_eq!(community_verdict(&c(&["1:1", "2:2"]), &c(&["2:2", "1:1"])), CommunityVerdict::Same);
        assert_eq!(community_verdict(&c(&["1:1", "1:1"]), &c(&["1:1"])), CommunityVerdict::Differs);
        assert_eq!(
            community_verdict(&c(&["1:1", "1:1", "2:2"]), &c(&["1:1", "2:2", "2:2"])),
            CommunityVerdict::Differs
        );
    }

    #[test]
    fn label_text() {
        for t in AnnouncementType::ALL {
            assert_eq!(t.to_string().parse::<AnnouncementType>().unwrap(), t);
        }
        assert_eq!(serde_json::to_string(&AnnouncementType::Nc).unwrap(), "\"nc\"");
    }
}
