//! BGP path attributes (RFC 4271, RFC 1997, RFC 6793, RFC 4760).

use std::fmt;
use std::net::{IpAddr, Ipv6Addr};
use std::str::FromStr;

use ipnet::IpNet;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::wire::{self, BodyError, Wire, AFI_IPV4, AFI_IPV6};

pub type Asn = u32;

/// Placeholder ASN used by 2-byte speakers for 4-byte ASNs (RFC 6793).
pub const AS_TRANS: Asn = 23456;

pub mod attr_code {
    pub const ORIGIN: u8 = 1;
    pub const AS_PATH: u8 = 2;
    pub const NEXT_HOP: u8 = 3;
    pub const MED: u8 = 4;
    pub const LOCAL_PREF: u8 = 5;
    pub const COMMUNITIES: u8 = 8;
    pub const MP_REACH_NLRI: u8 = 14;
    pub const MP_UNREACH_NLRI: u8 = 15;
    pub const EXTENDED_COMMUNITIES: u8 = 16;
    pub const AS4_PATH: u8 = 17;
    pub const LARGE_COMMUNITIES: u8 = 32;
}

const FLAG_OPTIONAL: u8 = 0x80;
const FLAG_TRANSITIVE: u8 = 0x40;
const FLAG_EXTENDED: u8 = 0x10;

/// RFC 1997 community, rendered `high16:low16`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Community(pub u32);

impl Community {
    pub fn new(asn: u16, value: u16) -> Self {
        Community((u32::from(asn) << 16) | u32::from(value))
    }

    /// Upper two bytes; by convention the ASN that defined the tag.
    pub fn asn(self) -> u16 {
        (self.0 >> 16) as u16
    }

    pub fn value(self) -> u16 {
        self.0 as u16
    }
}

impl fmt::Display for Community {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.asn(), self.value())
    }
}

impl FromStr for Community {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (hi, lo) = s.split_once(':').ok_or_else(|| format!("community `{s}` is not high:low"))?;
        let hi: u16 = hi.trim().parse().map_err(|_| format!("bad community high part in `{s}`"))?;
        let lo: u16 = lo.trim().parse().map_err(|_| format!("bad community low part in `{s}`"))?;
        Ok(Community::new(hi, lo))
    }
}

impl Serialize for Community {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Community {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SegmentKind {
    Set,
    Sequence,
    ConfedSequence,
    ConfedSet,
}

impl SegmentKind {
    fn code(self) -> u8 {
        match self {
            SegmentKind::Set => 1,
            SegmentKind::Sequence => 2,
            SegmentKind::ConfedSequence => 3,
            SegmentKind::ConfedSet => 4,
        }
    }

    fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            1 => SegmentKind::Set,
            2 => SegmentKind::Sequence,
            3 => SegmentKind::ConfedSequence,
            4 => SegmentKind::ConfedSet,
            _ => return None,
        })
    }

    pub fn is_set(self) -> bool {
        matches!(self, SegmentKind::Set | SegmentKind::ConfedSet)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AsPathSegment {
    pub kind: SegmentKind,
    pub asns: Vec<Asn>,
}

impl AsPathSegment {
    pub fn sequence(asns: impl Into<Vec<Asn>>) -> Self {
        Self { kind: SegmentKind::Sequence, asns: asns.into() }
    }

    pub fn set(asns: impl Into<Vec<Asn>>) -> Self {
        Self { kind: SegmentKind::Set, asns: asns.into() }
    }
}

/// Ordered AS_PATH segments as carried on the wire.
///
/// Textual form follows the bgpdump convention: sequence members separated by
/// spaces, `{a,b}` for AS_SET, `(a b)` for confederation sequences and
/// `[a,b]` for confederation sets.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct AsPath {
    pub segments: Vec<AsPathSegment>,
}

impl AsPath {
    pub fn from_sequence(asns: impl Into<Vec<Asn>>) -> Self {
        let asns = asns.into();
        if asns.is_empty() {
            return AsPath::default();
        }
        AsPath { segments: vec![AsPathSegment::sequence(asns)] }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.iter().all(|s| s.asns.is_empty())
    }

    /// Path length for best-path selection: a set counts as one hop.
    pub fn route_len(&self) -> usize {
        self.segments
            .iter()
            .map(|s| match s.kind {
                SegmentKind::Sequence => s.asns.len(),
                SegmentKind::Set => usize::from(!s.asns.is_empty()),
                _ => 0,
            })
            .sum()
    }

    pub fn first_asn(&self) -> Option<Asn> {
        let seg = self.segments.iter().find(|s| !s.asns.is_empty())?;
        if seg.kind.is_set() {
            None
        } else {
            seg.asns.first().copied()
        }
    }

    pub fn asns(&self) -> impl Iterator<Item = Asn> + '_ {
        self.segments.iter().flat_map(|s| s.asns.iter().copied())
    }

    pub fn contains(&self, asn: Asn) -> bool {
        self.asns().any(|a| a == asn)
    }

    pub fn prepend(&mut self, asn: Asn) {
        match self.segments.first_mut() {
            Some(seg) if seg.kind == SegmentKind::Sequence && seg.asns.len() < 255 => seg.asns.insert(0, asn),
            _ => self.segments.insert(0, AsPathSegment::sequence(vec![asn])),
        }
    }

    /// Number of hops counted by RFC 6793 merge rules (sets count one, confed zero).
    fn merge_len(&self) -> usize {
        self.route_len()
    }

    /// Reconstruct the 4-byte path from a 2-byte AS_PATH and an AS4_PATH.
    pub fn merge_as4(&self, as4: &AsPath) -> AsPath {
        let len = self.merge_len();
        let len4 = as4.merge_len();
        if len4 > len {
            return self.clone();
        }
        let mut keep = len - len4;
        let mut out = AsPath::default();
        for seg in &self.segments {
            if keep == 0 {
                break;
            }
            match seg.kind {
                SegmentKind::Sequence => {
                    let n = seg.asns.len().min(keep);
                    out.segments.push(AsPathSegment::sequence(seg.asns[..n].to_vec()));
                    keep -= n;
                }
                SegmentKind::Set => {
                    out.segments.push(seg.clone());
                    keep -= usize::from(!seg.asns.is_empty());
                }
                _ => out.segments.push(seg.clone()),
            }
        }
        out.segments.extend(as4.segments.iter().cloned());
        out
    }

    fn decode(data: &[u8], four_byte: bool) -> Result<AsPath, BodyError> {
        let mut w = Wire::new(data);
        let mut segments = Vec::new();
        while !w.is_empty() {
            let code = w.u8("segment type")?;
            let kind = SegmentKind::from_code(code)
                .ok_or(BodyError::BadAttribute { code: attr_code::AS_PATH, reason: "unknown segment type" })?;
            let count = usize::from(w.u8("segment length")?);
            let mut asns = Vec::with_capacity(count);
            for _ in 0..count {
                asns.push(if four_byte { w.u32("segment asn")? } else { Asn::from(w.u16("segment asn")?) });
            }
            segments.push(AsPathSegment { kind, asns });
        }
        Ok(AsPath { segments })
    }

    fn encode(&self, four_byte: bool, out: &mut Vec<u8>) {
        for seg in &self.segments {
            out.push(seg.kind.code());
            out.push(seg.asns.len() as u8);
            for &asn in &seg.asns {
                if four_byte {
                    wire::put_u32(out, asn);
                } else {
                    let narrow = u16::try_from(asn).unwrap_or(AS_TRANS as u16);
                    wire::put_u16(out, narrow);
                }
            }
        }
    }
}

impl fmt::Display for AsPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for seg in &self.segments {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            let join = |sep: &str| seg.asns.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(sep);
            match seg.kind {
                SegmentKind::Sequence => f.write_str(&join(" "))?,
                SegmentKind::Set => write!(f, "{{{}}}", join(","))?,
                SegmentKind::ConfedSequence => write!(f, "({})", join(" "))?,
                SegmentKind::ConfedSet => write!(f, "[{}]", join(","))?,
            }
        }
        Ok(())
    }
}

impl FromStr for AsPath {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut path = AsPath::default();
        let mut rest = s.trim();
        let parse_list = |body: &str, sep: char| -> Result<Vec<Asn>, String> {
            body.split(sep)
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<Asn>().map_err(|_| format!("bad ASN `{t}` in path `{s}`")))
                .collect()
        };
        while !rest.is_empty() {
            let (kind, close, sep) = match rest.as_bytes()[0] {
                b'{' => (SegmentKind::Set, '}', ','),
                b'(' => (SegmentKind::ConfedSequence, ')', ' '),
                b'[' => (SegmentKind::ConfedSet, ']', ','),
                _ => {
                    let end = rest.find(['{', '(', '[']).unwrap_or(rest.len());
                    let asns = parse_list(&rest[..end], ' ')?;
                    if !asns.is_empty() {
                        match path.segments.last_mut() {
                            Some(seg) if seg.kind == SegmentKind::Sequence => seg.asns.extend(asns),
                            _ => path.segments.push(AsPathSegment::sequence(asns)),
                        }
                    }
                    rest = rest[end..].trim_start();
                    continue;
                }
            };
            let end = rest.find(close).ok_or_else(|| format!("unclosed segment in `{s}`"))?;
            let asns = parse_list(&rest[1..end], sep)?;
            path.segments.push(AsPathSegment { kind, asns });
            rest = rest[end + 1..].trim_start();
        }
        Ok(path)
    }
}

impl Serialize for AsPath {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AsPath {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Attribute the toolkit does not model, kept byte-for-byte.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RawAttribute {
    pub flags: u8,
    pub code: u8,
    pub value: Vec<u8>,
}

/// RFC 8092 large community, recognized but otherwise passed through.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LargeCommunity {
    pub global: u32,
    pub local1: u32,
    pub local2: u32,
}

impl fmt::Display for LargeCommunity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.global, self.local1, self.local2)
    }
}

/// Next hop carried inside MP_REACH_NLRI.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MpNextHop {
    pub global: IpAddr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link_local: Option<Ipv6Addr>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BgpAttributes {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub as_path: Option<AsPath>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub as4_path: Option<AsPath>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_hop: Option<IpAddr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mp_next_hop: Option<MpNextHop>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub med: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_pref: Option<u32>,
    /// Wire order is kept; comparisons elsewhere treat this as a multiset.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub communities: Vec<Community>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub other: Vec<RawAttribute>,
}

impl BgpAttributes {
    pub fn is_empty(&self) -> bool {
        *self == BgpAttributes::default()
    }

    /// Effective 4-byte AS path, merging AS4_PATH when present.
    pub fn path(&self) -> AsPath {
        let base = self.as_path.clone().unwrap_or_default();
        match &self.as4_path {
            Some(as4) => base.merge_as4(as4),
            None => base,
        }
    }

    pub fn effective_next_hop(&self) -> Option<IpAddr> {
        self.next_hop.or_else(|| self.mp_next_hop.as_ref().map(|n| n.global))
    }

    pub fn large_communities(&self) -> Vec<LargeCommunity> {
        self.other
            .iter()
            .filter(|a| a.code == attr_code::LARGE_COMMUNITIES)
            .flat_map(|a| {
                a.value.chunks_exact(12).map(|c| LargeCommunity {
                    global: u32::from_be_bytes([c[0], c[1], c[2], c[3]]),
                    local1: u32::from_be_bytes([c[4], c[5], c[6], c[7]]),
                    local2: u32::from_be_bytes([c[8], c[9], c[10], c[11]]),
                })
            })
            .collect()
    }

    pub fn has_extended_communities(&self) -> bool {
        self.other.iter().any(|a| a.code == attr_code::EXTENDED_COMMUNITIES)
    }
}

/// Where an attribute block lives; RIB entries abbreviate MP_REACH_NLRI.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum AttrContext {
    Update { four_byte: bool },
    RibEntry,
}

impl AttrContext {
    fn four_byte(self) -> bool {
        match self {
            AttrContext::Update { four_byte } => four_byte,
            AttrContext::RibEntry => true,
        }
    }
}

/// Prefixes carried in MP_REACH/MP_UNREACH for unicast AFIs.
#[derive(Debug, Default)]
pub(crate) struct MpPrefixes {
    pub announced: Vec<IpNet>,
    pub withdrawn: Vec<IpNet>,
}

pub(crate) fn decode_attributes(data: &[u8], ctx: AttrContext) -> Result<(BgpAttributes, MpPrefixes), BodyError> {
    let mut w = Wire::new(data);
    let mut attrs = BgpAttributes::default();
    let mut mp = MpPrefixes::default();
    while !w.is_empty() {
        let flags = w.u8("attribute flags")?;
        let code = w.u8("attribute type")?;
        let len = if flags & FLAG_EXTENDED != 0 {
            usize::from(w.u16("attribute length")?)
        } else {
            usize::from(w.u8("attribute length")?)
        };
        let value = w.take(len, "attribute value")?;
        let bad = |reason| BodyError::BadAttribute { code, reason };
        match code {
            attr_code::ORIGIN if len == 1 && attrs.origin.is_none() => attrs.origin = Some(value[0]),
            attr_code::AS_PATH if attrs.as_path.is_none() => {
                attrs.as_path = Some(AsPath::decode(value, ctx.four_byte())?)
            }
            attr_code::AS4_PATH if attrs.as4_path.is_none() => attrs.as4_path = Some(AsPath::decode(value, true)?),
            attr_code::NEXT_HOP if len == 4 && attrs.next_hop.is_none() => {
                attrs.next_hop = Some(IpAddr::V4(Wire::new(value).ipv4("next hop")?))
            }
            attr_code::MED if len == 4 && attrs.med.is_none() => attrs.med = Some(Wire::new(value).u32("med")?),
            attr_code::LOCAL_PREF if len == 4 && attrs.local_pref.is_none() => {
                attrs.local_pref = Some(Wire::new(value).u32("local pref")?)
            }
            attr_code::COMMUNITIES if len > 0 && len % 4 == 0 && attrs.communities.is_empty() => {
                attrs.communities =
                    value.chunks_exact(4).map(|c| Community(u32::from_be_bytes([c[0], c[1], c[2], c[3]]))).collect();
            }
            attr_code::MP_REACH_NLRI if attrs.mp_next_hop.is_none() => match decode_mp_reach(value, ctx)? {
                Some((nh, prefixes)) => {
                    attrs.mp_next_hop = Some(nh);
                    mp.announced.extend(prefixes);
                }
                None => attrs.other.push(RawAttribute { flags, code, value: value.to_vec() }),
            },
            attr_code::MP_UNREACH_NLRI if matches!(ctx, AttrContext::Update { .. }) => {
                let mut v = Wire::new(value);
                let afi = v.u16("mp afi")?;
                let safi = v.u8("mp safi")?;
                if safi == 1 && (afi == AFI_IPV4 || afi == AFI_IPV6) && mp.withdrawn.is_empty() {
                    while !v.is_empty() {
                        mp.withdrawn.push(v.prefix(afi)?);
                    }
                    if mp.withdrawn.is_empty() {
                        // AFI-specific end-of-RIB marker; keep verbatim.
                        attrs.other.push(RawAttribute { flags, code, value: value.to_vec() });
                    }
                } else {
                    attrs.other.push(RawAttribute { flags, code, value: value.to_vec() });
                }
            }
            attr_code::COMMUNITIES if len == 0 => attrs.other.push(RawAttribute { flags, code, value: Vec::new() }),
            attr_code::ORIGIN
            | attr_code::NEXT_HOP
            | attr_code::MED
            | attr_code::LOCAL_PREF
            | attr_code::COMMUNITIES
                if attrs_has(&attrs, code) =>
            {
                return Err(bad("duplicate attribute"));
            }
            attr_code::ORIGIN | attr_code::NEXT_HOP | attr_code::MED | attr_code::LOCAL_PREF => {
                return Err(bad("wrong length"));
            }
            attr_code::COMMUNITIES => return Err(bad("length not a multiple of 4")),
            attr_code::AS_PATH | attr_code::AS4_PATH | attr_code::MP_REACH_NLRI => {
                return Err(bad("duplicate attribute"));
            }
            _ => attrs.other.push(RawAttribute { flags, code, value: value.to_vec() }),
        }
    }
    Ok((attrs, mp))
}

fn attrs_has(attrs: &BgpAttributes, code: u8) -> bool {
    match code {
        attr_code::ORIGIN => attrs.origin.is_some(),
        attr_code::NEXT_HOP => attrs.next_hop.is_some(),
        attr_code::MED => attrs.med.is_some(),
        attr_code::LOCAL_PREF => attrs.local_pref.is_some(),
        attr_code::COMMUNITIES => !attrs.communities.is_empty(),
        _ => false,
    }
}

fn decode_mp_reach(value: &[u8], ctx: AttrContext) -> Result<Option<(MpNextHop, Vec<IpNet>)>, BodyError> {
    let mut v = Wire::new(value);
    if ctx == AttrContext::RibEntry {
        // RFC 6396 4.3.4: only the next-hop length and next hop are kept.
        let nh_len = usize::from(v.u8("mp next hop length")?);
        let nh = decode_next_hop(v.take(nh_len, "mp next hop")?)?;
        if !v.is_empty() {
            return Err(BodyError::BadAttribute { code: attr_code::MP_REACH_NLRI, reason: "trailing bytes" });
        }
        return Ok(Some((nh, Vec::new())));
    }
    let afi = v.u16("mp afi")?;
    let safi = v.u8("mp safi")?;
    if safi != 1 || (afi != AFI_IPV4 && afi != AFI_IPV6) {
        return Ok(None);
    }
    let nh_len = usize::from(v.u8("mp next hop length")?);
    let nh_bytes = v.take(nh_len, "mp next hop")?;
    let reserved = v.u8("mp reserved")?;
    if reserved != 0 {
        return Ok(None);
    }
    let nh = match decode_next_hop(nh_bytes) {
        Ok(nh) => nh,
        Err(_) => return Ok(None),
    };
    if afi_matches(afi, &nh.global).is_none() {
        return Ok(None);
    }
    let mut prefixes = Vec::new();
    while !v.is_empty() {
        prefixes.push(v.prefix(afi)?);
    }
    Ok(Some((nh, prefixes)))
}

fn afi_matches(afi: u16, addr: &IpAddr) -> Option<()> {
    (wire::afi_of(addr) == afi).then_some(())
}

fn decode_next_hop(bytes: &[u8]) -> Result<MpNextHop, BodyError> {
    let mut w = Wire::new(bytes);
    let err = BodyError::BadAttribute { code: attr_code::MP_REACH_NLRI, reason: "next hop length" };
    match bytes.len() {
        4 => Ok(MpNextHop { global: IpAddr::V4(w.ipv4("next hop")?), link_local: None }),
        16 => Ok(MpNextHop { global: IpAddr::V6(w.ipv6("next hop")?), link_local: None }),
        32 => {
            Ok(MpNextHop { global: IpAddr::V6(w.ipv6("next hop")?), link_local: Some(w.ipv6("link-local next hop")?) })
        }
        _ => Err(err),
    }
}

fn put_attr(out: &mut Vec<u8>, flags: u8, code: u8, value: &[u8]) {
    if value.len() > 255 {
        out.push(flags | FLAG_EXTENDED);
        out.push(code);
        wire::put_u16(out, value.len() as u16);
    } else {
        out.push(flags & !FLAG_EXTENDED);
        out.push(code);
        out.push(value.len() as u8);
    }
    out.extend_from_slice(value);
}

/// Canonical encoding: attributes in ascending type order, extended length
/// only when the value exceeds 255 bytes.
pub(crate) fn encode_attributes(attrs: &BgpAttributes, mp: &MpPrefixes, ctx: AttrContext, out: &mut Vec<u8>) {
    let mut items: Vec<(u8, u8, Vec<u8>)> = Vec::new();
    if let Some(origin) = attrs.origin {
        items.push((attr_code::ORIGIN, FLAG_TRANSITIVE, vec![origin]));
    }
    if let Some(path) = &attrs.as_path {
        let mut v = Vec::new();
        path.encode(ctx.four_byte(), &mut v);
        items.push((attr_code::AS_PATH, FLAG_TRANSITIVE, v));
    }
    if let Some(IpAddr::V4(nh)) = attrs.next_hop {
        items.push((attr_code::NEXT_HOP, FLAG_TRANSITIVE, nh.octets().to_vec()));
    }
    if let Some(med) = attrs.med {
        items.push((attr_code::MED, FLAG_OPTIONAL, med.to_be_bytes().to_vec()));
    }
    if let Some(lp) = attrs.local_pref {
        items.push((attr_code::LOCAL_PREF, FLAG_TRANSITIVE, lp.to_be_bytes().to_vec()));
    }
    if !attrs.communities.is_empty() {
        let v = attrs.communities.iter().flat_map(|c| c.0.to_be_bytes()).collect();
        items.push((attr_code::COMMUNITIES, FLAG_OPTIONAL | FLAG_TRANSITIVE, v));
    }
    let implied_next_hop = mp.announced.first().map(|p| MpNextHop {
        global: match p {
            IpNet::V4(_) => IpAddr::V4(std::net::Ipv4Addr::UNSPECIFIED),
            IpNet::V6(_) => IpAddr::V6(Ipv6Addr::UNSPECIFIED),
        },
        link_local: None,
    });
    if let Some(nh) = attrs.mp_next_hop.as_ref().or(implied_next_hop.as_ref()) {
        let mut nh_bytes = Vec::new();
        wire::put_ip(&mut nh_bytes, &nh.global);
        if let Some(ll) = nh.link_local {
            nh_bytes.extend_from_slice(&ll.octets());
        }
        let mut v = Vec::new();
        match ctx {
            AttrContext::RibEntry => {
                v.push(nh_bytes.len() as u8);
                v.extend_from_slice(&nh_bytes);
            }
            AttrContext::Update { .. } => {
                let afi = wire::afi_of(&nh.global);
                wire::put_u16(&mut v, afi);
                v.push(1);
                v.push(nh_bytes.len() as u8);
                v.extend_from_slice(&nh_bytes);
                v.push(0);
                for p in mp.announced.iter().filter(|p| wire::afi_of_net(p) == afi) {
                    wire::put_prefix(&mut v, p);
                }
            }
        }
        items.push((attr_code::MP_REACH_NLRI, FLAG_OPTIONAL, v));
    }
    if !mp.withdrawn.is_empty() {
        let afi = wire::afi_of_net(&mp.withdrawn[0]);
        let mut v = Vec::new();
        wire::put_u16(&mut v, afi);
        v.push(1);
        for p in &mp.withdrawn {
            wire::put_prefix(&mut v, p);
        }
        items.push((attr_code::MP_UNREACH_NLRI, FLAG_OPTIONAL, v));
    }
    if let Some(path) = &attrs.as4_path {
        let mut v = Vec::new();
        path.encode(true, &mut v);
        items.push((attr_code::AS4_PATH, FLAG_OPTIONAL | FLAG_TRANSITIVE, v));
    }
    // Stable sort keeps opaque attributes in their original relative order.
    let mut order: Vec<(u8, usize)> = items.iter().enumerate().map(|(i, it)| (it.0, i)).collect();
    let base = items.len();
    for (i, raw) in attrs.other.iter().enumerate() {
        order.push((raw.code, base + i));
    }
    order.sort_by_key(|&(code, _)| code);
    for (_, idx) in order {
        if idx < base {
            let (code, flags, value) = &items[idx];
            put_attr(out, *flags, *code, value);
        } else {
            let raw = &attrs.other[idx - base];
            put_attr(out, raw.flags, raw.code, &raw.value);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn community_text_round_trip() {
        let c: Community = "65001:100".parse().unwrap();
        assert_eq!(c, Community((65001 << 16) | 100));
        assert_eq!(c.to_string(), "65001:100");
        assert!("65536:1".parse::<Community>().is_err());
        assert!("1".parse::<Community>().is_err());
    }

    #[test]
    fn as_path_text_forms() {
        let p: AsPath = "20205 3356 {174,1299} 12654".parse().unwrap();
        assert_eq!(p.segments.len(), 3);
        assert_eq!(p.segments[1], AsPathSegment::set(vec![174, 1299]));
        assert_eq!(p.to_string(), "20205 3356 {174,1299} 12654");
        assert_eq!(p.route_len(), 4);
        let c: AsPath = "(65000 65001) 3356".parse().unwrap();
        assert_eq!(c.segments[0].kind, SegmentKind::ConfedSequence);
        assert_eq!(c.route_len(), 1);
        assert_eq!("".parse::<AsPath>().unwrap(), AsPath::default());
    }

    #[test]
    fn as4_merge_replaces_trailing_hops() {
        let two: AsPath = "3356 23456 23456".parse().unwrap();
        let four: AsPath = "196608 196609".parse().unwrap();
        assert_eq!(two.merge_as4(&four).to_string(), "3356 196608 196609");
        // AS4_PATH longer than AS_PATH is ignored.
        let long: AsPath = "1 2 3 4".parse().unwrap();
        assert_eq!(two.merge_as4(&long), two);
    }

    #[test]
    fn prepend_extends_leading_sequence() {
        let mut p: AsPath = "{1,2}".parse().unwrap();
        p.prepend(7);
        assert_eq!(p.to_string(), "7 {1,2}");
        p.prepend(8);
        assert_eq!(p.to_string(), "8 7 {1,2}");
    }

    #[test]
    fn opaque_attributes_survive_encoding() {
        let attrs = BgpAttributes {
            origin: Some(0),
            as_path: Some(AsPath::from_sequence(vec![1, 2])),
            next_hop: Some("192.0.2.1".parse().unwrap()),
            communities: vec![Community::new(1, 2), Community::new(1, 1)],
            other: vec![RawAttribute { flags: 0xc0, code: 32, value: vec![0; 12] }],
            ..Default::default()
        };
        let ctx = AttrContext::Update { four_byte: true };
        let mut buf = Vec::new();
        encode_attributes(&attrs, &MpPrefixes::default(), ctx, &mut buf);
        let (back, _) = decode_attributes(&buf, ctx).unwrap();
        assert_eq!(back, attrs);
        assert_eq!(back.large_communities().len(), 1);
    }

    #[test]
    fn duplicate_communities_attribute_is_rejected() {
        let block = [0xc0, 8, 4, 0, 1, 0, 2, 0xc0, 8, 4, 0, 1, 0, 3];
        let err = decode_attributes(&block, AttrContext::Update { four_byte: true }).unwrap_err();
        assert!(matches!(err, BodyError::BadAttribute { code: 8, .. }));
    }
}
