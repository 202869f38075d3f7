//! BGP4MP bodies: archived BGP messages and session state changes.

use std::net::IpAddr;

use ipnet::IpNet;
use serde::{Deserialize, Serialize};

use super::attributes::{decode_attributes, encode_attributes, Asn, AttrContext, BgpAttributes, MpPrefixes};
use super::wire::{self, BodyError, Wire, AFI_IPV4};

const BGP_HEADER_LEN: usize = 19;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    Open,
    Update,
    Notification,
    Keepalive,
    Other,
}

impl MessageKind {
    fn from_code(code: u8) -> Self {
        match code {
            1 => MessageKind::Open,
            2 => MessageKind::Update,
            3 => MessageKind::Notification,
            4 => MessageKind::Keepalive,
            _ => MessageKind::Other,
        }
    }
}

/// One BGP message as archived by a collector, with its session envelope.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BgpMessage {
    pub peer_asn: Asn,
    pub local_asn: Asn,
    pub interface_index: u16,
    pub peer_address: IpAddr,
    pub local_address: IpAddr,
    /// Whether the envelope and AS_PATH use 4-byte ASNs (MESSAGE_AS4 subtypes).
    pub four_byte_asn: bool,
    pub kind: MessageKind,
    pub type_code: u8,
    pub withdrawn: Vec<IpNet>,
    pub announced: Vec<IpNet>,
    pub attributes: BgpAttributes,
    /// Payload after the 19-byte BGP header for non-update messages.
    pub payload: Vec<u8>,
}

impl BgpMessage {
    /// Update with no prefixes and no attributes.
    pub fn is_end_of_rib(&self) -> bool {
        self.kind == MessageKind::Update
            && self.withdrawn.is_empty()
            && self.announced.is_empty()
            && (self.attributes.is_empty() || self.is_mp_end_of_rib())
    }

    fn is_mp_end_of_rib(&self) -> bool {
        let a = &self.attributes;
        a.other.len() == 1
            && a.other[0].code == super::attributes::attr_code::MP_UNREACH_NLRI
            && a.other[0].value.len() == 3
            && a.as_path.is_none()
            && a.mp_next_hop.is_none()
    }

    pub fn update(
        peer_asn: Asn,
        peer_address: IpAddr,
        local_asn: Asn,
        local_address: IpAddr,
        withdrawn: Vec<IpNet>,
        announced: Vec<IpNet>,
        attributes: BgpAttributes,
    ) -> Self {
        BgpMessage {
            peer_asn,
            local_asn,
            interface_index: 0,
            peer_address,
            local_address,
            four_byte_asn: true,
            kind: MessageKind::Update,
            type_code: 2,
            withdrawn,
            announced,
            attributes,
            payload: Vec::new(),
        }
    }

    pub(crate) fn decode(body: &[u8], four_byte_asn: bool) -> Result<Self, BodyError> {
        let mut w = Wire::new(body);
        let (peer_asn, local_asn) = if four_byte_asn {
            (w.u32("peer as")?, w.u32("local as")?)
        } else {
            (Asn::from(w.u16("peer as")?), Asn::from(w.u16("local as")?))
        };
        let interface_index = w.u16("interface index")?;
        let afi = w.u16("address family")?;
        let peer_address = w.ip_by_afi(afi, "peer address")?;
        let local_address = w.ip_by_afi(afi, "local address")?;

        let bgp = w.rest();
        let mut b = Wire::new(bgp);
        if b.take(16, "bgp marker")?.iter().any(|&x| x != 0xff) {
            return Err(BodyError::BadMarker);
        }
        let declared = usize::from(b.u16("bgp length")?);
        if declared != bgp.len() || declared < BGP_HEADER_LEN {
            return Err(BodyError::BadBgpLength { declared, available: bgp.len() });
        }
        let type_code = b.u8("bgp type")?;
        let kind = MessageKind::from_code(type_code);
        let mut msg = BgpMessage {
            peer_asn,
            local_asn,
            interface_index,
            peer_address,
            local_address,
            four_byte_asn,
            kind,
            type_code,
            withdrawn: Vec::new(),
            announced: Vec::new(),
            attributes: BgpAttributes::default(),
            payload: Vec::new(),
        };
        if kind != MessageKind::Update {
            msg.payload = b.rest().to_vec();
            return Ok(msg);
        }

        let wlen = usize::from(b.u16("withdrawn length")?);
        let mut wd = Wire::new(b.take(wlen, "withdrawn routes")?);
        while !wd.is_empty() {
            msg.withdrawn.push(wd.prefix(AFI_IPV4)?);
        }
        let alen = usize::from(b.u16("attributes length")?);
        let attr_bytes = b.take(alen, "path attributes")?;
        let (attributes, mp) = decode_attributes(attr_bytes, AttrContext::Update { four_byte: four_byte_asn })?;
        while !b.is_empty() {
            msg.announced.push(b.prefix(AFI_IPV4)?);
        }
        // Classic NLRI first, then MP_REACH, mirroring the canonical encoder.
        msg.withdrawn.extend(mp.withdrawn);
        msg.announced.extend(mp.announced);
        msg.attributes = attributes;
        Ok(msg)
    }

    pub(crate) fn encode(&self, out: &mut Vec<u8>) {
        if self.four_byte_asn {
            wire::put_u32(out, self.peer_asn);
            wire::put_u32(out, self.local_asn);
        } else {
            wire::put_u16(out, u16::try_from(self.peer_asn).unwrap_or(23456));
            wire::put_u16(out, u16::try_from(self.local_asn).unwrap_or(23456));
        }
        wire::put_u16(out, self.interface_index);
        wire::put_u16(out, wire::afi_of(&self.peer_address));
        wire::put_ip(out, &self.peer_address);
        wire::put_ip(out, &self.local_address);

        let mut bgp = vec![0xff; 16];
        bgp.extend_from_slice(&[0, 0]);
        bgp.push(self.type_code);
        if self.kind == MessageKind::Update {
            // Prefixes of the MP next hop's family ride in MP_REACH; IPv6 always does.
            let mp_v4 = matches!(self.attributes.mp_next_hop.as_ref().map(|n| n.global), Some(IpAddr::V4(_)))
                && self.attributes.next_hop.is_none();
            let in_mp = |p: &IpNet| matches!(p, IpNet::V6(_)) || mp_v4;
            let (mp_announced, nlri): (Vec<IpNet>, Vec<IpNet>) = self.announced.iter().partition(|p| in_mp(p));
            let (mp_withdrawn, classic_withdrawn): (Vec<IpNet>, Vec<IpNet>) =
                self.withdrawn.iter().partition(|p| matches!(p, IpNet::V6(_)));

            let mut wd = Vec::new();
            for p in &classic_withdrawn {
                wire::put_prefix(&mut wd, p);
            }
            wire::put_u16(&mut bgp, wd.len() as u16);
            bgp.extend_from_slice(&wd);

            let mut attrs = Vec::new();
            let mp = MpPrefixes { announced: mp_announced, withdrawn: mp_withdrawn };
            encode_attributes(&self.attributes, &mp, AttrContext::Update { four_byte: self.four_byte_asn }, &mut attrs);
            wire::put_u16(&mut bgp, attrs.len() as u16);
            bgp.extend_from_slice(&attrs);
            for p in &nlri {
                wire::put_prefix(&mut bgp, p);
            }
        } else {
            bgp.extend_from_slice(&self.payload);
        }
        let len = bgp.len() as u16;
        bgp[16..18].copy_from_slice(&len.to_be_bytes());
        out.extend_from_slice(&bgp);
    }
}

/// BGP4MP_STATE_CHANGE(_AS4) body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateChange {
    pub peer_asn: Asn,
    pub local_asn: Asn,
    pub interface_index: u16,
    pub peer_address: IpAddr,
    pub local_address: IpAddr,
    pub four_byte_asn: bool,
    pub old_state: u16,
    pub new_state: u16,
}

impl StateChange {
    pub(crate) fn decode(body: &[u8], four_byte_asn: bool) -> Result<Self, BodyError> {
        let mut w = Wire::new(body);
        let (peer_asn, local_asn) = if four_byte_asn {
            (w.u32("peer as")?, w.u32("local as")?)
        } else {
            (Asn::from(w.u16("peer as")?), Asn::from(w.u16("local as")?))
        };
        let interface_index = w.u16("interface index")?;
        let afi = w.u16("address family")?;
        let peer_address = w.ip_by_afi(afi, "peer address")?;
        let local_address = w.ip_by_afi(afi, "local address")?;
        let old_state = w.u16("old state")?;
        let new_state = w.u16("new state")?;
        if !w.is_empty() {
            return Err(BodyError::Trailing(w.remaining()));
        }
        Ok(StateChange {
            peer_asn,
            local_asn,
            interface_index,
            peer_address,
            local_address,
            four_byte_asn,
            old_state,
            new_state,
        })
    }

    pub(crate) fn encode(&self, out: &mut Vec<u8>) {
        if self.four_byte_asn {
            wire::put_u32(out, self.peer_asn);
            wire::put_u32(out, self.local_asn);
        } else {
            wire::put_u16(out, self.peer_asn as u16);
            wire::put_u16(out, self.local_asn as u16);
        }
        wire::put_u16(out, self.interface_index);
        wire::put_u16(out, wire::afi_of(&self.peer_address));
        wire::put_ip(out, &self.peer_address);
        wire::put_ip(out, &self.local_address);
        wire::put_u16(out, self.old_state);
        wire::put_u16(out, self.new_state);
    }
}
