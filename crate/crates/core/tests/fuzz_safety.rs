use commex_core::model::{read_jsonl, AllocationTable, UpdateStream};
use commex_core::mrt::{write_mrt_stream, Container, MrtReader};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MUTATIONS: usize = 10_000;

#[test]
fn mutated_mrt_never_panics_and_decoded_records_reencode() {
    let seeds: Vec<Vec<u8>> = commex_testkit::wire::fixtures().into_iter().map(|(_, b)| b).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d72_7431);
    let mut outcomes = [0usize; 2];
    for i in 0..MUTATIONS {
        let input = commex_testkit::mutate(&mut rng, &seeds[i % seeds.len()]);
        let mut ok = Vec::new();
        let mut failed = false;
        for r in MrtReader::new(&input[..], Container::Plain).unwrap() {
            match r {
                Ok(rec) => ok.push(rec),
                Err(_) => failed = true,
            }
        }
        outcomes[failed as usize] += 1;
        let mut out = Vec::new();
        write_mrt_stream(&ok, &mut out, Container::Plain).unwrap();
        assert_eq!(out, input[..out.len()], "mutation {i}");
        let stream = UpdateStream::new(MrtReader::new(&input[..], Container::Plain).unwrap(), "c", "f");
        stream.for_each(drop);
    }
    assert!(outcomes[0] > 0 && outcomes[1] > 0);
}

#[test]
fn mutated_compressed_input_never_panics() {
    let plain = commex_testkit::wire::mixed_session();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for c in [Container::Gzip, Container::Bzip2] {
        let mut packed = Vec::new();
        write_mrt_stream(
            &MrtReader::new(&plain[..], Container::Plain).unwrap().collect::<Result<Vec<_>, _>>().unwrap(),
            &mut packed,
            c,
        )
        .unwrap();
        for _ in 0..500 {
            let input = commex_testkit::mutate(&mut rng, &packed);
            let reader = MrtReader::new(&input[..], Container::Detect);
            if let Ok(reader) = reader {
                reader.for_each(drop);
            }
        }
    }
}

#[test]
fn mutated_text_inputs_never_panic() {
    let delegated = "2|ripencc|20200315|3|19830705|20200314|+0100\n\
ripencc|*|asn|*|1|summary\n\
ripencc|NL|asn|3333|1|19930901|allocated\n\
ripencc|NL|ipv4|84.205.64.0|8192|20050101|allocated\n\
ripencc|NL|ipv6|2001:7fb::|32|20050101|assigned\n";
    let jsonl = r#"{"arrival":1584238020000001,"native_microseconds":true,"session":{"collector":"rrc00","peer_asn":20205,"peer_address":"192.0.2.1"},"prefix":"84.205.64.0/24","kind":"announcement","attrs":{"as_path":"20205 3356","communities":["3356:2010"]},"source_message_index":0,"source_file":"f","flags":[]}
"#;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..MUTATIONS / 2 {
        let d = commex_testkit::mutate(&mut rng, delegated.as_bytes());
        let _ = AllocationTable::new().load_delegated(&d[..]);
        let j = commex_testkit::mutate(&mut rng, jsonl.as_bytes());
        read_jsonl(&j[..]).for_each(drop);
    }
}
