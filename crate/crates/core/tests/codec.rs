use std::io::Read;

use commex_core::mrt::{
    read_mrt_stream, write_mrt_stream, AsPath, BgpAttributes, BgpMessage, Community, Container, MessageKind, MrtBody,
    MrtError, MrtReader, MrtRecord, MrtWriter, SegmentKind,
};

fn read_all(bytes: &[u8]) -> Vec<MrtRecord> {
    MrtReader::new(bytes, Container::Plain).unwrap().collect::<Result<_, _>>().unwrap()
}

fn rewrite(records: &[MrtRecord], container: Container) -> Vec<u8> {
    let mut out = Vec::new();
    write_mrt_stream(records, &mut out, container).unwrap();
    out
}

#[test]
fn checked_in_fixtures_match_builders() {
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    for (name, bytes) in commex_testkit::wire::fixtures() {
        let path = dir.join(name);
        if std::env::var_os("COMMEX_BLESS").is_some() {
            std::fs::write(&path, &bytes).unwrap();
        }
        assert_eq!(std::fs::read(&path).unwrap(), bytes, "{name}");
    }
}

#[test]
fn hand_built_message_parses_to_exact_fields() {
    let recs = read_all(&commex_testkit::wire::basic_message());
    assert_eq!(recs.len(), 1);
    let h = recs[0].header();
    assert_eq!((h.timestamp, h.mrt_type, h.subtype, h.microseconds), (1_584_230_400, 16, 1, None));
    let m = recs[0].message().unwrap();
    assert_eq!(m.kind, MessageKind::Update);
    assert_eq!((m.peer_asn, m.local_asn), (65001, 65000));
    assert_eq!(m.peer_address.to_string(), "192.0.2.1");
    assert_eq!(m.announced, vec!["10.0.0.0/24".parse().unwrap()]);
    assert!(m.withdrawn.is_empty());
    assert_eq!(m.attributes.as_path, Some(AsPath::from_sequence(vec![65001, 65002])));
    assert_eq!(m.attributes.communities, vec![Community::new(65001, 100)]);
    assert_eq!(m.attributes.next_hop, Some("192.0.2.1".parse().unwrap()));
}

#[test]
fn extended_timestamp_microseconds() {
    let bytes = commex_testkit::wire::et_message();
    let recs = read_all(&bytes);
    let h = recs[0].header();
    assert_eq!(h.microseconds, Some(999_999));
    assert_eq!(h.length as usize, bytes.len() - 12);
    assert_eq!(recs[0].message().unwrap().attributes.as_path.as_ref().unwrap().to_string(), "65001 4200000000");
}

#[test]
fn constructed_record_encodes_to_hand_built_bytes() {
    let attrs = BgpAttributes {
        origin: Some(0),
        as_path: Some(AsPath::from_sequence(vec![65001, 4_200_000_000])),
        next_hop: Some("192.0.2.1".parse().unwrap()),
        communities: vec![Community::new(65001, 100)],
        ..Default::default()
    };
    let msg = BgpMessage::update(
        65001,
        "192.0.2.1".parse().unwrap(),
        65000,
        "192.0.2.2".parse().unwrap(),
        vec![],
        vec!["10.0.0.0/24".parse().unwrap()],
        attrs,
    );
    let rec = MrtRecord::bgp4mp(1_584_230_400, Some(999_999), msg);
    assert_eq!(rec.to_bytes().unwrap(), commex_testkit::wire::et_message());
}

#[test]
fn mixed_session_contents() {
    let recs = read_all(&commex_testkit::wire::mixed_session());
    assert_eq!(recs.len(), 8);
    assert!(matches!(recs[0].body(), MrtBody::StateChange(_)));
    let first = recs[1].message().unwrap();
    assert_eq!(first.announced.len(), 2);
    assert_eq!(first.attributes.med, Some(10));
    assert_eq!(first.attributes.other.len(), 1);
    assert_eq!(first.attributes.other[0].code, 99);
    assert_eq!(recs[2].message().unwrap().withdrawn.len(), 2);
    let set = recs[3].message().unwrap();
    assert_eq!(set.attributes.communities.len(), 70);
    assert_eq!(set.attributes.as_path.as_ref().unwrap().segments[1].kind, SegmentKind::Set);
    assert_eq!(recs[3].header().microseconds, Some(17));
    assert_eq!(recs[4].message().unwrap().announced, vec!["2001:7fb:fe00::/48".parse().unwrap()]);
    assert_eq!(recs[5].message().unwrap().attributes.path().to_string(), "3356 196608");
    assert_eq!(recs[6].message_kind(), MessageKind::Keepalive);
    assert!(recs[7].message().unwrap().is_end_of_rib());
}

#[test]
fn table_dump_and_opaque_records() {
    let recs = read_all(&commex_testkit::wire::table_dump());
    assert!(matches!(recs[0].body(), MrtBody::PeerIndexTable(t) if t.peers.len() == 2));
    assert!(matches!(recs[1].body(), MrtBody::Rib(r) if r.entries.len() == 1));
    assert_eq!(commex_core::mrt::rib_peer_asns(&recs), vec![6939, 20205]);

    let opaque = commex_testkit::wire::opaque_records();
    let mut reader = MrtReader::new(&opaque[..], Container::Plain).unwrap();
    let recs: Vec<_> = reader.by_ref().collect::<Result<_, _>>().unwrap();
    assert!(matches!(recs[0].body(), MrtBody::AddPath));
    assert!(matches!(recs[1].body(), MrtBody::Unsupported));
    assert_eq!(recs[0].message_kind(), MessageKind::Other);
    let stats = reader.stats();
    assert_eq!((stats.add_path, stats.unsupported), (1, 1));
}

#[test]
fn plain_round_trip_is_byte_identical() {
    for (name, bytes) in commex_testkit::wire::fixtures() {
        assert_eq!(rewrite(&read_all(&bytes), Container::Plain), bytes, "{name}");
    }
}

#[test]
fn pruning_nothing_or_everything() {
    let bytes = commex_testkit::wire::mixed_session();
    let recs = read_all(&bytes);
    let kept: Vec<_> = recs.iter().collect();
    let mut out = Vec::new();
    write_mrt_stream(kept, &mut out, Container::Plain).unwrap();
    assert_eq!(out, bytes);

    for c in [Container::Plain, Container::Gzip, Container::Bzip2] {
        let mut out = Vec::new();
        assert_eq!(write_mrt_stream([], &mut out, c).unwrap(), 0);
        assert_eq!(read_mrt_stream(&out[..], Container::Detect).unwrap().count(), 0);
    }
}

#[test]
fn compressed_containers_round_trip() {
    let bytes = commex_testkit::wire::mixed_session();
    let recs = read_all(&bytes);
    for c in [Container::Gzip, Container::Bzip2] {
        let packed = rewrite(&recs, c);
        assert_eq!(Container::sniff(&packed), c);
        let reader = MrtReader::new(&packed[..], Container::Detect).unwrap();
        assert_eq!(reader.container(), c);
        let back: Vec<_> = reader.collect::<Result<_, _>>().unwrap();
        assert_eq!(back, recs);
        assert_eq!(rewrite(&back, Container::Plain), bytes);
    }
}

#[test]
fn truncated_record_is_reported() {
    let mut bytes = commex_testkit::wire::basic_message();
    bytes.truncate(bytes.len() - 3);
    let mut it = MrtReader::new(&bytes[..], Container::Plain).unwrap();
    assert!(matches!(it.next(), Some(Err(MrtError::TruncatedRecord { .. }))));
    assert!(it.next().is_none());
}

#[test]
fn microseconds_out_of_range_is_malformed() {
    let mut bytes = commex_testkit::wire::et_message();
    bytes[12..16].copy_from_slice(&1_000_000u32.to_be_bytes());
    let recs = read_all(&bytes);
    assert!(matches!(recs[0].body(), MrtBody::Malformed(_)));
    assert_eq!(rewrite(&recs, Container::Plain), bytes);
}

#[test]
fn edited_record_is_reencoded() {
    let mut recs = read_all(&commex_testkit::wire::basic_message());
    if let MrtBody::Message(m) = recs[0].body_mut() {
        m.attributes.communities.push(Community::new(65001, 200));
    }
    let bytes = rewrite(&recs, Container::Plain);
    let back = read_all(&bytes);
    assert_eq!(back[0].message().unwrap().attributes.communities.len(), 2);
    assert_eq!(back[0].header().length as usize, bytes.len() - 12);
}

#[test]
fn writer_reports_uncompressed_bytes() {
    let bytes = commex_testkit::wire::mixed_session();
    let recs = read_all(&bytes);
    let mut w = MrtWriter::new(Vec::new(), Container::Gzip);
    for r in &recs {
        w.write_record(r).unwrap();
    }
    assert_eq!(w.bytes_written() as usize, bytes.len());
    let gz = w.finish().unwrap();
    let mut plain = Vec::new();
    flate2::read::MultiGzDecoder::new(&gz[..]).read_to_end(&mut plain).unwrap();
    assert_eq!(plain, bytes);
}
