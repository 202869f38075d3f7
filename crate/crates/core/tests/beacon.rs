use commex_core::beacon::{
    beacon_case_report, partition_communities, phase_of, BeaconError, BeaconSchedule, CaseSelection, Phase,
    RevealCategory,
};
use commex_core::classify::AnnouncementType;
use commex_core::model::Timestamp;
use commex_core::mrt::{AsPath, Community};
use commex_testkit::beacon_day::beacon_day;
use commex_testkit::streams::{announcement, session, withdrawal, BASE_TIME};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn hms(h: u64, m: u64, s: u64) -> Timestamp {
    Timestamp::from_secs(BASE_TIME + h * 3600 + m * 60 + s)
}

#[test]
fn synthetic_day_partition_sizes() {
    let (records, truth) = beacon_day(1, "84.205.64.0/24", [50, 20, 5, 25]);
    let reveal = partition_communities(&records, &BeaconSchedule::default());
    assert_eq!(reveal.values.sizes(), (50, 20, 5, 25));
    assert_eq!(reveal.attributes.sizes(), (50, 20, 5, 25));
    for (c, cat) in truth {
        assert_eq!(reveal.values.category_of(&c), Some(cat));
    }
    assert!(reveal.values.is_disjoint());
    assert!((reveal.values.share(RevealCategory::WithdrawalOnly) - 0.5).abs() < 1e-12);
}

#[test]
fn value_and_attribute_granularities_differ() {
    let s = session(20205);
    let path = AsPath::from_sequence(vec![20205, 3356]);
    let a = Community::new(3356, 1);
    let b = Community::new(3356, 2);
    let records = vec![
        announcement(&s, "84.205.64.0/24", hms(2, 1, 0), path.clone(), vec![a, b]),
        announcement(&s, "84.205.64.0/24", hms(0, 1, 0), path.clone(), vec![a]),
    ];
    let r = partition_communities(&records, &BeaconSchedule::default());
    assert_eq!(r.values.sizes(), (1, 0, 0, 1));
    assert_eq!(r.attributes.sizes(), (1, 1, 0, 0));
}

#[test]
fn phase_examples() {
    let s = BeaconSchedule::default();
    assert_eq!(phase_of(hms(2, 7, 0), &s), Phase::WithdrawPhase);
    assert_eq!(phase_of(hms(2, 15, 0), &s), Phase::Outside);
    assert_eq!(phase_of(hms(0, 0, 0), &s), Phase::AnnouncePhase);
    assert_eq!(phase_of(hms(23, 45, 0), &s), Phase::Outside);
}

#[test]
fn case_report_mirrors_a_withdrawal_phase() {
    let s = session(20205);
    let best = AsPath::from_sequence(vec![20205, 6939, 50304, 12654]);
    let explored = AsPath::from_sequence(vec![20205, 3356, 174, 12654]);
    let p = "84.205.64.0/24";
    let records = vec![
        announcement(&s, p, hms(0, 1, 0), best.clone(), vec![]),
        withdrawal(&s, p, hms(2, 0, 30)),
        announcement(&s, p, hms(2, 1, 0), explored.clone(), vec![Community::new(3356, 2010)]),
        announcement(&s, p, hms(2, 2, 0), explored.clone(), vec![Community::new(3356, 2011)]),
        announcement(&s, p, hms(2, 3, 0), explored.clone(), vec![Community::new(3356, 2012)]),
        announcement(&s, p, hms(2, 4, 0), explored.clone(), vec![Community::new(3356, 2013)]),
    ];
    let sel = CaseSelection::prefix(p.parse().unwrap()).with_path(explored);
    let report = beacon_case_report(&records, &sel).unwrap();
    let labels: Vec<_> = report.points.iter().map(|pt| (pt.label, pt.cumulative)).collect();
    use AnnouncementType::*;
    assert_eq!(labels, vec![(Pc, 1), (Nc, 1), (Nc, 2), (Nc, 3)]);
    assert_eq!(report.withdrawals, vec![hms(2, 0, 30)]);

    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "arrival_us,type,cumulative_count");
    assert_eq!(rows[1], format!("{},withdrawal,1", hms(2, 0, 30).0));
    assert_eq!(rows.len(), 6);

    let none = CaseSelection::prefix(p.parse().unwrap()).with_path(AsPath::from_sequence(vec![1]));
    assert!(matches!(beacon_case_report(&records, &none), Err(BeaconError::EmptySelection)));

    let no_withdrawals: Vec<_> = records.iter().filter(|r| r.is_announcement()).cloned().collect();
    let r = beacon_case_report(&no_withdrawals, &CaseSelection::prefix(p.parse().unwrap())).unwrap();
    assert!(r.withdrawals.is_empty());
    assert_eq!(r.points.len(), 5);
}

proptest! {
    #[test]
    fn phase_has_a_four_hour_period(offset in 0u64..(20 * 3600)) {
        let s = BeaconSchedule::default();
        let t = Timestamp::from_secs(BASE_TIME + offset);
        let later = Timestamp::from_secs(BASE_TIME + offset + 4 * 3600);
        prop_assert_eq!(s.phase_of(t), s.phase_of(later));
    }

    #[test]
    fn partition_ignores_record_order(seed in any::<u64>()) {
        let (mut records, _) = beacon_day(seed, "84.205.64.0/24", [7, 5, 3, 6]);
        let sched = BeaconSchedule::default();
        let before = partition_communities(&records, &sched);
        records.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let after = partition_communities(&records, &sched);
        prop_assert_eq!(&before.values, &after.values);
        prop_assert_eq!(before.attributes.sizes(), after.attributes.sizes());
        prop_assert!(before.values.is_disjoint() && before.values.total() == 21);
    }
}
