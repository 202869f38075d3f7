use std::path::PathBuf;

use commex_core::classify::StreamState;
use commex_core::mrt::{
    write_mrt_stream, AsPath, BgpAttributes, BgpMessage, Community, Container, MrtReader, MrtRecord,
};
use commex_core::reduce::{corpus_reduction, reduce_file, ReduceError, StateMode};
use commex_testkit::corpus::{corpus, write_corpus};

fn update(prefixes: &[&str], withdrawn: &[&str], path: &[u32], comm: &[(u16, u16)]) -> BgpMessage {
    let attrs = if prefixes.is_empty() {
        BgpAttributes::default()
    } else {
        BgpAttributes {
            origin: Some(0),
            as_path: Some(AsPath::from_sequence(path.to_vec())),
            next_hop: Some("192.0.2.1".parse().unwrap()),
            communities: comm.iter().map(|&(a, v)| Community::new(a, v)).collect(),
            ..Default::default()
        }
    };
    BgpMessage::update(
        20205,
        "192.0.2.1".parse().unwrap(),
        12654,
        "192.0.2.2".parse().unwrap(),
        withdrawn.iter().map(|p| p.parse().unwrap()).collect(),
        prefixes.iter().map(|p| p.parse().unwrap()).collect(),
        attrs,
    )
}

fn file_of(msgs: Vec<BgpMessage>) -> Vec<u8> {
    let recs: Vec<_> = msgs.into_iter().enumerate().map(|(i, m)| MrtRecord::bgp4mp(1000 + i as u32, None, m)).collect();
    let mut out = Vec::new();
    write_mrt_stream(&recs, &mut out, Container::Plain).unwrap();
    out
}

fn records(bytes: &[u8]) -> Vec<MrtRecord> {
    MrtReader::new(bytes, Container::Detect).unwrap().collect::<Result<_, _>>().unwrap()
}

fn run(bytes: &[u8]) -> (commex_core::reduce::ReductionReport, Vec<u8>) {
    let dir = tempfile::tempdir().unwrap();
    let (input, output) = (dir.path().join("in.mrt"), dir.path().join("out.mrt"));
    std::fs::write(&input, bytes).unwrap();
    let report = reduce_file(&input, &output, &mut StreamState::new(), "rrc00").unwrap();
    (report, std::fs::read(output).unwrap())
}

const A: &str = "84.205.64.0/24";
const B: &str = "84.205.65.0/24";
const C: &str = "84.205.66.0/24";
const P1: &[u32] = &[20205, 3356, 174, 12654];
const P2: &[u32] = &[20205, 6939, 50304, 12654];

fn ten_messages() -> Vec<BgpMessage> {
    vec![
        update(&[A, B], &[], P1, &[(3356, 2010)]), // initial, initial
        update(&[A], &[], P1, &[(3356, 2011)]),    // nc: dropped
        update(&[A, B], &[], P2, &[(3356, 2011)]), // pn, pc
        update(&[B], &[], P2, &[]),                // nc: dropped
        update(&[], &[A], &[], &[]),               // withdrawal
        update(&[A], &[], P2, &[(3356, 2011)]),    // nn after withdrawal: dropped
        update(&[A], &[B], P2, &[(3356, 2011)]),   // nn with a withdrawal
        update(&[A, C], &[], P2, &[(3356, 2012)]), // nc, initial
        update(&[A], &[], &[20205, 20205, 6939, 50304, 12654], &[(3356, 2012)]), // xn
        update(&[B], &[], P1, &[(3356, 2012)]),    // pc
    ]
}

#[test]
fn ten_messages_three_unnecessary() {
    let bytes = file_of(ten_messages());
    let (report, out) = run(&bytes);
    assert_eq!((report.total_messages, report.discarded_messages), (10, 3));
    assert!((report.reduction_ratio - 0.30).abs() < 1e-12);
    let kept = records(&out);
    let input = records(&bytes);
    let kept_ts: Vec<u32> = kept.iter().map(|r| r.header().timestamp).collect();
    assert_eq!(kept_ts, vec![1000, 1002, 1004, 1006, 1007, 1008, 1009]);
    for k in &kept {
        let orig = input.iter().find(|r| r.header().timestamp == k.header().timestamp).unwrap();
        assert_eq!(k.to_bytes().unwrap(), orig.to_bytes().unwrap());
    }
    assert_eq!(report.total_bytes_out as usize, out.len());
    assert_eq!(report.total_bytes_in as usize, bytes.len());
}

#[test]
fn withdrawal_only_file_keeps_everything() {
    let bytes = file_of(vec![update(&[], &[A], &[], &[]), update(&[], &[A, B], &[], &[])]);
    let (report, out) = run(&bytes);
    assert_eq!(report.reduction_ratio, 0.0);
    assert_eq!(out, bytes);
}

#[test]
fn second_pass_discards_nothing() {
    let bytes = file_of(ten_messages());
    let (_, once) = run(&bytes);
    let (report, twice) = run(&once);
    assert_eq!(report.discarded_messages, 0);
    assert_eq!(twice, once);
}

#[test]
fn failed_reduction_leaves_no_output() {
    let mut bytes = file_of(ten_messages());
    bytes.truncate(bytes.len() - 5);
    let dir = tempfile::tempdir().unwrap();
    let (input, output) = (dir.path().join("in.mrt"), dir.path().join("out.mrt"));
    std::fs::write(&input, &bytes).unwrap();
    let err = reduce_file(&input, &output, &mut StreamState::new(), "rrc00").unwrap_err();
    assert!(matches!(err, ReduceError::Mrt(_)));
    assert!(!output.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn synthetic_corpus_matches_ground_truth() {
    let files = corpus(2020, 50, 0.22);
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_corpus(&dir.path().join("in"), &files);

    for (f, path) in files.iter().zip(&inputs) {
        let out = dir.path().join("cold").join(&f.name);
        std::fs::create_dir_all(out.parent().unwrap()).unwrap();
        let r = reduce_file(path, &out, &mut StreamState::new(), &f.collector).unwrap();
        assert_eq!(r.total_messages as usize, f.unnecessary_cold.len());
        assert_eq!(r.discarded_messages as usize, f.unnecessary_cold.iter().filter(|&&u| u).count(), "{}", f.name);
        assert_eq!(r.other_records as usize, f.other_records);
        assert_eq!(MrtReader::open(&out).unwrap().container(), f.container);
        let kept = records(&std::fs::read(&out).unwrap());
        let input = records(&f.bytes);
        let expected: Vec<&MrtRecord> = {
            let mut i = 0;
            input
                .iter()
                .filter(|r| {
                    if !r.is_update() {
                        return true;
                    }
                    i += 1;
                    !f.unnecessary_cold[i - 1]
                })
                .collect()
        };
        assert_eq!(kept.len(), expected.len());
        for (k, e) in kept.iter().zip(expected) {
            assert_eq!(k.to_bytes().unwrap(), e.to_bytes().unwrap());
        }
    }

    let summary = corpus_reduction(&inputs, &dir.path().join("warm"), StateMode::Warm);
    assert!(summary.failures.is_empty());
    assert_eq!(summary.files.len(), 50);
    let truth_mean = files.iter().map(|f| f.warm_ratio()).sum::<f64>() / 50.0;
    assert!((summary.mean_ratio - truth_mean).abs() < 1e-12);
    assert!((summary.mean_ratio - 0.22).abs() < 0.08, "mean {}", summary.mean_ratio);
    for r in &summary.files {
        let f = files.iter().find(|f| f.name == r.file && f.collector == r.collector).unwrap();
        assert!((r.reduction_ratio - f.warm_ratio()).abs() < 1e-12, "{}", r.file);
    }
    assert_eq!(summary.per_project.keys().collect::<Vec<_>>(), ["ripe_ris", "routeviews"]);
    assert!(summary.bytes_out < summary.bytes_in);
    assert_eq!(summary.cdf.last().unwrap().1, 1.0);
    let cold = corpus_reduction(&inputs, &dir.path().join("cold2"), StateMode::Cold);
    let cold_mean = files.iter().map(|f| f.cold_ratio()).sum::<f64>() / 50.0;
    assert!((cold.mean_ratio - cold_mean).abs() < 1e-12);
    assert!(cold.mean_ratio <= summary.mean_ratio);
}

#[test]
fn unreadable_files_are_reported_and_excluded() {
    let files = corpus(7, 4, 0.3);
    let dir = tempfile::tempdir().unwrap();
    let mut inputs = write_corpus(dir.path(), &files);
    let broken = dir.path().join("rrc00").join("updates.20200315.2359");
    std::fs::write(&broken, [0u8; 5]).unwrap();
    inputs.push(broken);
    inputs.push(PathBuf::from("/nonexistent/rrc00/updates.20200315.0000"));
    let s = corpus_reduction(&inputs, &dir.path().join("out"), StateMode::Warm);
    assert_eq!(s.files.len(), 4);
    assert_eq!(s.failures.len(), 2);
}
