use commex_core::mrt::{Community, Container, MrtReader, MrtWriter};
use commex_sim::experiments::{FLAP_TIME, TAG_Y2, TAG_Y3};
use commex_sim::*;

fn expected(profile: &str) -> [bool; 4] {
    match profile {
        "default-forwarding" => [true, true, true, true],
        "adj-rib-out" => [false, true, false, true],
        "no-forward" => [true, false, true, true],
        "community-suppress" => [true, true, false, true],
        other => panic!("no expectation for {other}"),
    }
}

#[test]
fn matrix_matches_table() {
    let rows = run_experiment_matrix(&default_profiles()).unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!(r.outcomes(), expected(&r.profile), "{}", r.profile);
    }
}

#[test]
fn software_rows_resolve_to_table_outcomes() {
    let table: [(&str, [bool; 4]); 10] = [
        ("12.4(20)T", [true, false, true, true]),
        ("XR v6.0.1", [true, false, true, true]),
        ("Olive 12.1R1.9", [false, true, false, true]),
        ("20.7.R2", [false, true, false, true]),
        ("v1.6.6", [true; 4]),
        ("v2.0.7", [true; 4]),
        ("v6.0.2", [true; 4]),
        ("v5.2", [true; 4]),
        ("v6.6", [true, true, false, true]),
        ("v1.2.4", [true; 4]),
    ];
    for (version, want) in table {
        let row = SOFTWARE.iter().find(|r| r.version == version).unwrap();
        assert_eq!(expected(row.profile), want, "{version}");
    }
}

#[test]
fn converged_lab_is_silent() {
    let mut sim = build_lab_topology(RouterProfile::DEFAULT_FORWARDING, &Experiment::Exp2.policies());
    sim.run(&[SimEvent::announce(0, "Z1", lab_prefix())]).unwrap();
    let converged = sim.log().clone();
    assert!(!converged.is_empty());
    sim.run(&[]).unwrap();
    sim.run(&[SimEvent::announce(5, "Z1", lab_prefix())]).unwrap();
    assert_eq!(sim.log(), &converged);
}

#[test]
fn collector_first_sees_y2_tag() {
    let mut sim = build_lab_topology(RouterProfile::DEFAULT_FORWARDING, &Experiment::Exp2.policies());
    sim.run(&[SimEvent::announce(0, "Z1", lab_prefix())]).unwrap();
    assert_eq!(sim.best_source("Y1", &lab_prefix()), Some("Y2"));
    let c1 = sim.router("C1").unwrap();
    let best = &c1.loc_rib[&lab_prefix()];
    assert_eq!(best.attrs.path, vec![65001, 65002, 65003]);
    assert_eq!(best.attrs.communities, vec![TAG_Y2]);
}

#[test]
fn origin_withdrawal_reaches_collector() {
    let mut sim = build_lab_topology(RouterProfile::DEFAULT_FORWARDING, &PolicySet::default());
    sim.run(&[SimEvent::announce(0, "Z1", lab_prefix()), SimEvent::withdraw(10, "Z1", lab_prefix())]).unwrap();
    let last = sim.log().session("X1", "C1").last().unwrap();
    assert_eq!(last.message, SimMessage::Withdrawal);
    assert!(sim.router("C1").unwrap().loc_rib.is_empty());
}

#[test]
fn exp1_single_duplicate_not_propagated() {
    let (_, log) = Experiment::Exp1.run(RouterProfile::DEFAULT_FORWARDING).unwrap();
    let after: Vec<_> = log.session("Y1", "X1").filter(|m| m.time >= FLAP_TIME).collect();
    assert_eq!(after.len(), 1);
    assert_eq!(after[0].message.path(), &[65002, 65003]);
    assert_eq!(log.session("X1", "C1").filter(|m| m.time >= FLAP_TIME).count(), 0);
}

#[test]
fn exp1_adj_rib_out_sends_nothing() {
    let (_, log) = Experiment::Exp1.run(RouterProfile::ADJ_RIB_OUT).unwrap();
    assert_eq!(log.session("Y1", "X1").filter(|m| m.time >= FLAP_TIME).count(), 0);
}

#[test]
fn exp2_community_change_reaches_collector() {
    let (_, log) = Experiment::Exp2.run(RouterProfile::DEFAULT_FORWARDING).unwrap();
    let y1: Vec<_> = log.session("Y1", "X1").filter(|m| m.time >= FLAP_TIME).collect();
    assert_eq!(y1.len(), 1);
    assert_eq!(y1[0].message.communities(), &[TAG_Y3]);
    let c1: Vec<_> = log.session("X1", "C1").collect();
    assert_eq!(c1.len(), 2);
    assert_eq!(c1[0].message.path(), c1[1].message.path());
    assert_eq!(c1[0].message.communities(), &[TAG_Y2]);
    assert_eq!(c1[1].message.communities(), &[TAG_Y3]);
    let nh = |m: &CapturedMessage| match &m.message {
        SimMessage::Announcement { next_hop, .. } => *next_hop,
        SimMessage::Withdrawal => unreachable!(),
    };
    assert_eq!(nh(c1[0]), nh(c1[1]));
}

#[test]
fn exp4_holds_for_every_profile() {
    for (name, p) in default_profiles() {
        let (ok, log) = Experiment::Exp4.run(p).unwrap();
        assert!(ok, "{name}");
        assert!(log.session("X1", "C1").all(|m| m.message.communities().is_empty()));
    }
}

#[test]
fn runs_are_deterministic() {
    for (_, p) in default_profiles() {
        for e in Experiment::ALL {
            assert_eq!(e.run(p).unwrap().1, e.run(p).unwrap().1);
        }
    }
}

#[test]
fn non_convergence_is_reported() {
    let mut sim = build_lab_topology(RouterProfile::DEFAULT_FORWARDING, &PolicySet::default());
    sim.set_max_messages_per_event(3);
    let err = sim.run(&Experiment::events()).unwrap_err();
    assert_eq!(err, SimError::NonConvergence { at: 0, bound: 3 });
}

#[test]
fn unsorted_events_rejected() {
    let sim = build_lab_topology(RouterProfile::DEFAULT_FORWARDING, &PolicySet::default());
    let events = [SimEvent::link_down(5, "Y1", "Y2"), SimEvent::announce(0, "Z1", lab_prefix())];
    assert_eq!(run(sim, &events).unwrap_err(), SimError::UnsortedEvents { index: 1 });
}

#[test]
fn builtin_scenarios_round_trip_through_json() {
    for e in Experiment::ALL {
        let s = builtin_scenario(e.name(), ProfileSpec::Named("no-forward".into())).unwrap();
        let back = Scenario::from_json(&s.to_json_pretty()).unwrap();
        assert_eq!(back, s);
        assert_eq!(run_scenario(&back).unwrap(), e.run(RouterProfile::NO_FORWARD).unwrap().1);
    }
    assert!(builtin_scenario("exp5", ProfileSpec::default()).is_none());
}

#[test]
fn scenario_errors_point_at_fields() {
    let base = Experiment::Exp2.scenario(ProfileSpec::default());
    let mut bad = base.clone();
    bad.links[2].b = "Q9".into();
    assert_eq!(
        Scenario::from_json(&bad.to_json_pretty()).unwrap_err(),
        ScenarioError::Invalid { field: "links[2].b".into(), reason: "unknown router `Q9`".into() }
    );
    let mut bad = base.clone();
    bad.policies[0].neighbor = "C1".into();
    assert!(matches!(
        Scenario::from_json(&bad.to_json_pretty()).unwrap_err(),
        ScenarioError::Invalid { field, .. } if field == "policies[0].neighbor"
    ));
    let mut bad = base.clone();
    bad.events.swap(0, 1);
    assert!(matches!(
        Scenario::from_json(&bad.to_json_pretty()).unwrap_err(),
        ScenarioError::Invalid { field, .. } if field == "events[1].at"
    ));
    let mut bad = base;
    bad.profile = ProfileSpec::Named("junos".into());
    assert!(
        matches!(Scenario::from_json(&bad.to_json_pretty()).unwrap_err(), ScenarioError::Invalid { field, .. } if field == "profile")
    );

    let text = "{\n  \"name\": \"x\",\n  \"routers\": [],\n  \"links\": [],\n  \"colour\": 1\n}";
    match Scenario::from_json(text).unwrap_err() {
        ScenarioError::Parse { line, .. } => assert_eq!(line, 5),
        other => panic!("{other:?}"),
    }
}

#[test]
fn mrt_export_reparses() {
    let (_, log) = Experiment::Exp2.run(RouterProfile::DEFAULT_FORWARDING).unwrap();
    let mut writer = MrtWriter::new(Vec::new(), Container::Plain);
    assert_eq!(log.write_mrt("C1", &mut writer).unwrap(), 2);
    let bytes = writer.finish().unwrap();
    let records: Vec<_> = MrtReader::new(&bytes[..], Container::Detect).unwrap().map(Result::unwrap).collect();
    assert_eq!(records.len(), 2);
    for (r, m) in records.iter().zip(log.received_by("C1")) {
        assert_eq!(r.header().timestamp, EXPORT_BASE_TIME + m.time as u32);
        assert_eq!(r.header().microseconds, Some(m.seq as u32));
        let msg = r.message().unwrap();
        assert_eq!(msg.peer_asn, 65001);
        assert_eq!(msg.announced, vec![lab_prefix()]);
        assert_eq!(msg.attributes.communities, m.message.communities().to_vec());
    }
    let c = records[1].message().unwrap().attributes.communities.clone();
    assert_eq!(c, vec![Community::new(65002, 400)]);
}

#[test]
fn jsonl_export_is_one_object_per_message() {
    let (_, log) = Experiment::Exp3.run(RouterProfile::DEFAULT_FORWARDING).unwrap();
    let mut out = Vec::new();
    log.write_jsonl(&mut out).unwrap();
    let lines: Vec<&str> = std::str::from_utf8(&out).unwrap().lines().collect();
    assert_eq!(lines.len(), log.len());
    let first: CapturedMessage = serde_json_line(lines[0]);
    assert_eq!(&first, &log.entries()[0]);
}

fn serde_json_line(s: &str) -> CapturedMessage {
    serde_json::from_str(s).unwrap()
}

#[test]
fn matrix_renders() {
    let rows = run_experiment_matrix(&default_profiles()).unwrap();
    let text = format_matrix(&rows);
    assert!(text.lines().nth(2).unwrap().starts_with("adj-rib-out"));
    let mut csv = Vec::new();
    write_matrix_csv(&rows, &mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "profile,exp1,exp2,exp3,exp4");
    assert_eq!(csv.lines().nth(2).unwrap(), "adj-rib-out,false,true,false,true");
}

#[test]
fn exp2_collector_sees_community_only_change() {
    let (_, log) = Experiment::Exp2.run(RouterProfile::DEFAULT_FORWARDING).unwrap();
    let c1: Vec<_> = log.session("X1", "C1").map(|m| &m.message).collect();
    let community_only = c1
        .windows(2)
        .filter(|w| match (w[0], w[1]) {
            (
                SimMessage::Announcement { path: p0, communities: c0, next_hop: n0, med: m0, .. },
                SimMessage::Announcement { path: p1, communities: c1, next_hop: n1, med: m1, .. },
            ) => p0 == p1 && n0 == n1 && m0 == m1 && c0 != c1,
            _ => false,
        })
        .count();
    assert!(community_only >= 1);
}
