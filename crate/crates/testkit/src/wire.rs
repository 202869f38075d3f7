//! Byte-level MRT builders written directly from the wire layouts, without
//! going through the codec.

pub fn be16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_be_bytes());
}

pub fn be32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_be_bytes());
}

/// MRT common header followed by `body`; `micros` selects the extended form.
pub fn mrt(ts: u32, mrt_type: u16, subtype: u16, micros: Option<u32>, body: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    be32(&mut out, ts);
    be16(&mut out, mrt_type);
    be16(&mut out, subtype);
    let extra = if micros.is_some() { 4 } else { 0 };
    be32(&mut out, (body.len() + extra) as u32);
    if let Some(us) = micros {
        be32(&mut out, us);
    }
    out.extend_from_slice(body);
    out
}

/// BGP4MP envelope with IPv4 addresses.
pub fn envelope(as4: bool, peer_as: u32, local_as: u32, peer: [u8; 4], local: [u8; 4], bgp: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    if as4 {
        be32(&mut out, peer_as);
        be32(&mut out, local_as);
    } else {
        be16(&mut out, peer_as as u16);
        be16(&mut out, local_as as u16);
    }
    be16(&mut out, 0);
    be16(&mut out, 1);
    out.extend_from_slice(&peer);
    out.extend_from_slice(&local);
    out.extend_from_slice(bgp);
    out
}

pub fn bgp(msg_type: u8, payload: &[u8]) -> Vec<u8> {
    let mut out = vec![0xff; 16];
    be16(&mut out, (19 + payload.len()) as u16);
    out.push(msg_type);
    out.extend_from_slice(payload);
    out
}

pub fn update(withdrawn: &[u8], attrs: &[u8], nlri: &[u8]) -> Vec<u8> {
    let mut p = Vec::new();
    be16(&mut p, withdrawn.len() as u16);
    p.extend_from_slice(withdrawn);
    be16(&mut p, attrs.len() as u16);
    p.extend_from_slice(attrs);
    p.extend_from_slice(nlri);
    bgp(2, &p)
}

pub fn attr(flags: u8, code: u8, value: &[u8]) -> Vec<u8> {
    let mut out = vec![flags, code];
    if flags & 0x10 != 0 {
        be16(&mut out, value.len() as u16);
    } else {
        out.push(value.len() as u8);
    }
    out.extend_from_slice(value);
    out
}

/// AS_PATH value with one segment.
pub fn segment(kind: u8, asns: &[u32], as4: bool) -> Vec<u8> {
    let mut out = vec![kind, asns.len() as u8];
    for &a in asns {
        if as4 {
            be32(&mut out, a);
        } else {
            be16(&mut out, a as u16);
        }
    }
    out
}

pub fn communities(values: &[(u16, u16)]) -> Vec<u8> {
    let mut v = Vec::new();
    for &(hi, lo) in values {
        be16(&mut v, hi);
        be16(&mut v, lo);
    }
    attr(0xc0, 8, &v)
}

/// The single-record message: 10.0.0.0/24, AS_PATH 65001 65002, community 65001:100.
pub fn basic_message() -> Vec<u8> {
    let mut attrs = attr(0x40, 1, &[0]);
    attrs.extend(attr(0x40, 2, &segment(2, &[65001, 65002], false)));
    attrs.extend(attr(0x40, 3, &[192, 0, 2, 1]));
    attrs.extend(communities(&[(65001, 100)]));
    let msg = update(&[], &attrs, &[24, 10, 0, 0]);
    mrt(1_584_230_400, 16, 1, None, &envelope(false, 65001, 65000, [192, 0, 2, 1], [192, 0, 2, 2], &msg))
}

/// Extended-timestamp MESSAGE_AS4 with microseconds 999999, canonical
/// attribute order.
pub fn et_message() -> Vec<u8> {
    let mut attrs = attr(0x40, 1, &[0]);
    attrs.extend(attr(0x40, 2, &segment(2, &[65001, 4_200_000_000], true)));
    attrs.extend(attr(0x40, 3, &[192, 0, 2, 1]));
    attrs.extend(communities(&[(65001, 100)]));
    let msg = update(&[], &attrs, &[24, 10, 0, 0]);
    mrt(1_584_230_400, 17, 4, Some(999_999), &envelope(true, 65001, 65000, [192, 0, 2, 1], [192, 0, 2, 2], &msg))
}

/// A session's worth of varied records.
pub fn mixed_session() -> Vec<u8> {
    let peer = [192, 0, 2, 1];
    let local = [192, 0, 2, 2];
    let mut out = Vec::new();

    let mut sc = Vec::new();
    be32(&mut sc, 20205);
    be32(&mut sc, 12654);
    be16(&mut sc, 0);
    be16(&mut sc, 1);
    sc.extend_from_slice(&peer);
    sc.extend_from_slice(&local);
    be16(&mut sc, 1);
    be16(&mut sc, 6);
    out.extend(mrt(1_584_230_400, 16, 5, None, &sc));

    let mut attrs = attr(0x40, 1, &[0]);
    attrs.extend(attr(0x40, 2, &segment(2, &[20205, 3356, 174, 12654], true)));
    attrs.extend(attr(0x40, 3, &peer));
    attrs.extend(attr(0x80, 4, &[0, 0, 0, 10]));
    attrs.extend(communities(&[(3356, 2010), (3356, 2), (174, 21000)]));
    attrs.extend(attr(0xe0, 99, &[1, 2, 3]));
    let nlri = [24, 84, 205, 64, 16, 10, 1];
    let msg = update(&[], &attrs, &nlri);
    out.extend(mrt(1_584_230_401, 16, 4, None, &envelope(true, 20205, 12654, peer, local, &msg)));

    let msg = update(&[24, 84, 205, 64, 8, 11], &[], &[]);
    out.extend(mrt(1_584_230_402, 16, 4, None, &envelope(true, 20205, 12654, peer, local, &msg)));

    let mut set_path = segment(2, &[20205, 3356], true);
    set_path.extend(segment(1, &[65010, 65009], true));
    let many: Vec<(u16, u16)> = (0..70).map(|i| (3356, i)).collect();
    let mut big = Vec::new();
    for &(hi, lo) in &many {
        be16(&mut big, hi);
        be16(&mut big, lo);
    }
    let mut attrs = attr(0x40, 1, &[2]);
    attrs.extend(attr(0x40, 2, &set_path));
    attrs.extend(attr(0x40, 3, &peer));
    attrs.extend(attr(0xd0, 8, &big));
    let msg = update(&[], &attrs, &[22, 198, 51, 100]);
    out.extend(mrt(1_584_230_403, 17, 4, Some(17), &envelope(true, 20205, 12654, peer, local, &msg)));

    // IPv6 announcement through MP_REACH_NLRI.
    let mut reach = Vec::new();
    be16(&mut reach, 2);
    reach.push(1);
    reach.push(16);
    reach.extend_from_slice(&[0x20, 0x01, 0x0d, 0xb8, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1]);
    reach.push(0);
    reach.extend_from_slice(&[48, 0x20, 0x01, 0x07, 0xfb, 0xfe, 0x00]);
    let mut attrs = attr(0x40, 1, &[0]);
    attrs.extend(attr(0x40, 2, &segment(2, &[20205, 12654], true)));
    attrs.extend(attr(0x80, 14, &reach));
    let msg = update(&[], &attrs, &[]);
    out.extend(mrt(1_584_230_404, 16, 4, None, &envelope(true, 20205, 12654, peer, local, &msg)));

    // 2-byte session carrying AS_TRANS plus AS4_PATH.
    let mut attrs = attr(0x40, 1, &[0]);
    attrs.extend(attr(0x40, 2, &segment(2, &[3356, 23456], false)));
    attrs.extend(attr(0x40, 3, &peer));
    attrs.extend(attr(0xc0, 17, &segment(2, &[196_608], true)));
    let msg = update(&[], &attrs, &[24, 10, 2, 0]);
    out.extend(mrt(1_584_230_405, 16, 1, None, &envelope(false, 3356, 12654, peer, local, &msg)));

    out.extend(mrt(1_584_230_406, 16, 4, None, &envelope(true, 20205, 12654, peer, local, &bgp(4, &[]))));
    out.extend(mrt(1_584_230_407, 16, 4, None, &envelope(true, 20205, 12654, peer, local, &update(&[], &[], &[]))));
    out
}

/// PEER_INDEX_TABLE followed by one RIB_IPV4_UNICAST entry.
pub fn table_dump() -> Vec<u8> {
    let mut pit = Vec::new();
    pit.extend_from_slice(&[10, 0, 0, 1]);
    be16(&mut pit, 4);
    pit.extend_from_slice(b"rrc0");
    be16(&mut pit, 2);
    pit.push(0x02);
    pit.extend_from_slice(&[1, 1, 1, 1]);
    pit.extend_from_slice(&[192, 0, 2, 1]);
    be32(&mut pit, 20205);
    pit.push(0x02);
    pit.extend_from_slice(&[2, 2, 2, 2]);
    pit.extend_from_slice(&[192, 0, 2, 9]);
    be32(&mut pit, 6939);
    let mut out = mrt(1_584_230_400, 13, 1, None, &pit);

    let mut rib = Vec::new();
    be32(&mut rib, 0);
    rib.extend_from_slice(&[24, 84, 205, 64]);
    be16(&mut rib, 1);
    be16(&mut rib, 1);
    be32(&mut rib, 1_584_000_000);
    let mut attrs = attr(0x40, 1, &[0]);
    attrs.extend(attr(0x40, 2, &segment(2, &[6939, 12654], true)));
    attrs.extend(attr(0x40, 3, &[192, 0, 2, 9]));
    be16(&mut rib, attrs.len() as u16);
    rib.extend(attrs);
    out.extend(mrt(1_584_230_400, 13, 2, None, &rib));
    out
}

/// An add-path message and a record of an unknown MRT type.
pub fn opaque_records() -> Vec<u8> {
    let mut out = mrt(1_584_230_400, 16, 9, None, &[0u8; 24]);
    out.extend(mrt(1_584_230_400, 99, 0, None, b"opaque"));
    out
}

pub fn fixtures() -> Vec<(&'static str, Vec<u8>)> {
    vec![
        ("bgp4mp_message.mrt", basic_message()),
        ("bgp4mp_et.mrt", et_message()),
        ("mixed_session.mrt", mixed_session()),
        ("table_dump_v2.mrt", table_dump()),
        ("opaque_records.mrt", opaque_records()),
    ]
}

/// Deterministic byte-level mutation: flips, overwrites, inserts, deletes
/// and truncation.
pub fn mutate(rng: &mut impl rand::Rng, input: &[u8]) -> Vec<u8> {
    let mut out = input.to_vec();
    for _ in 0..rng.gen_range(1..=8) {
        if out.is_empty() {
            out.push(rng.gen());
            continue;
        }
        let i = rng.gen_range(0..out.len());
        match rng.gen_range(0..6) {
            0 => out[i] ^= 1 << rng.gen_range(0..8),
            1 => out[i] = rng.gen(),
            2 => out[i] = [0x00, 0xff, 0x7f, 0x80][rng.gen_range(0..4)],
            3 => out.insert(i, rng.gen()),
            4 => {
                out.remove(i);
            }
            _ => out.truncate(i),
        }
    }
    out
}
