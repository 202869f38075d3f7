//! TABLE_DUMP_V2 bodies (RFC 6396 section 4.3). Decoding only.

use std::net::{IpAddr, Ipv4Addr};

use ipnet::IpNet;

use super::attributes::{decode_attributes, Asn, AttrContext, BgpAttributes};
use super::wire::{BodyError, Wire, AFI_IPV4, AFI_IPV6};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeerEntry {
    pub bgp_id: Ipv4Addr,
    pub address: IpAddr,
    pub asn: Asn,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeerIndexTable {
    pub collector_bgp_id: Ipv4Addr,
    pub view_name: String,
    pub peers: Vec<PeerEntry>,
}

impl PeerIndexTable {
    pub(crate) fn decode(body: &[u8]) -> Result<Self, BodyError> {
        let mut w = Wire::new(body);
        let collector_bgp_id = w.ipv4("collector id")?;
        let name_len = usize::from(w.u16("view name length")?);
        let view_name = String::from_utf8_lossy(w.take(name_len, "view name")?).into_owned();
        let count = w.u16("peer count")?;
        let mut peers = Vec::with_capacity(usize::from(count).min(w.remaining() / 7));
        for _ in 0..count {
            let peer_type = w.u8("peer type")?;
            let bgp_id = w.ipv4("peer bgp id")?;
            let address = if peer_type & 0x01 != 0 {
                IpAddr::V6(w.ipv6("peer address")?)
            } else {
                IpAddr::V4(w.ipv4("peer address")?)
            };
            let asn = if peer_type & 0x02 != 0 { w.u32("peer as")? } else { Asn::from(w.u16("peer as")?) };
            peers.push(PeerEntry { bgp_id, address, asn });
        }
        Ok(PeerIndexTable { collector_bgp_id, view_name, peers })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RibEntry {
    pub peer_index: u16,
    pub originated: u32,
    pub attributes: BgpAttributes,
}

/// RIB_IPV4_UNICAST / RIB_IPV6_UNICAST (and the multicast twins).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RibSnapshot {
    pub sequence: u32,
    pub prefix: IpNet,
    pub entries: Vec<RibEntry>,
}

impl RibSnapshot {
    pub(crate) fn decode(body: &[u8], ipv6: bool) -> Result<Self, BodyError> {
        let mut w = Wire::new(body);
        let sequence = w.u32("sequence number")?;
        let prefix = w.prefix(if ipv6 { AFI_IPV6 } else { AFI_IPV4 })?;
        let count = w.u16("entry count")?;
        let mut entries = Vec::with_capacity(usize::from(count).min(w.remaining() / 8));
        for _ in 0..count {
            let peer_index = w.u16("peer index")?;
            let originated = w.u32("originated time")?;
            let alen = usize::from(w.u16("attribute length")?);
            let (attributes, _) = decode_attributes(w.take(alen, "rib attributes")?, AttrContext::RibEntry)?;
            entries.push(RibEntry { peer_index, originated, attributes });
        }
        if !w.is_empty() {
            return Err(BodyError::Trailing(w.remaining()));
        }
        Ok(RibSnapshot { sequence, prefix, entries })
    }
}
