//! Randomized update streams and streams of known label composition.

use commex_core::classify::AnnouncementType;
use commex_core::model::{SessionKey, Timestamp, UpdateKind, UpdateRecord};
use commex_core::mrt::{AsPath, AsPathSegment, BgpAttributes, Community, SegmentKind};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BASE_TIME: u64 = 1_584_230_400;

pub fn session(peer: u32) -> SessionKey {
    SessionKey::new("rrc00", peer, format!("192.0.2.{}", peer % 250 + 1).parse().unwrap())
}

pub fn announcement(
    session: &SessionKey,
    prefix: &str,
    t: Timestamp,
    path: AsPath,
    communities: Vec<Community>,
) -> UpdateRecord {
    UpdateRecord {
        arrival: t,
        native_microseconds: true,
        session: session.clone(),
        prefix: prefix.parse().unwrap(),
        kind: UpdateKind::Announcement,
        attrs: Some(BgpAttributes { as_path: Some(path), communities, ..Default::default() }),
        source_message_index: 0,
        source_file: "synthetic".into(),
        flags: Vec::new(),
    }
}

pub fn withdrawal(session: &SessionKey, prefix: &str, t: Timestamp) -> UpdateRecord {
    UpdateRecord {
        arrival: t,
        native_microseconds: true,
        session: session.clone(),
        prefix: prefix.parse().unwrap(),
        kind: UpdateKind::Withdrawal,
        attrs: None,
        source_message_index: 0,
        source_file: "synthetic".into(),
        flags: Vec::new(),
    }
}

fn random_path(rng: &mut ChaCha8Rng, peer: u32) -> AsPath {
    let len = rng.gen_range(1..5);
    let mut asns = vec![peer];
    asns.extend((0..len).map(|_| rng.gen_range(1..12u32)));
    let mut path = AsPath::from_sequence(asns);
    if rng.gen_bool(0.1) {
        let members: Vec<u32> = (0..rng.gen_range(1..4)).map(|_| rng.gen_range(1..12u32)).collect();
        path.segments.push(AsPathSegment { kind: SegmentKind::Set, asns: members });
    }
    path
}

/// Inflate or deflate one run of the sequence part.
fn reprepend(rng: &mut ChaCha8Rng, path: &AsPath) -> AsPath {
    let mut out = path.clone();
    let seg = &mut out.segments[0];
    let i = rng.gen_range(0..seg.asns.len());
    let a = seg.asns[i];
    let dup = i + 1 < seg.asns.len() && seg.asns[i + 1] == a;
    if dup && rng.gen_bool(0.5) {
        seg.asns.remove(i);
    } else {
        seg.asns.insert(i, a);
    }
    out
}

fn reorder(rng: &mut ChaCha8Rng, path: &AsPath) -> AsPath {
    let mut out = path.clone();
    out.segments[0].asns[1..].shuffle(rng);
    out
}

fn random_communities(rng: &mut ChaCha8Rng) -> Vec<Community> {
    (0..rng.gen_range(0..4)).map(|_| Community::new(rng.gen_range(1..4), rng.gen_range(0..4))).collect()
}

/// `len` records over a handful of (session, prefix) streams: repeats,
/// prepending changes, reorderings, AS_SETs, shuffled and duplicated
/// communities, MED flips, withdrawals and occasional backwards arrivals.
pub fn random_stream(seed: u64, len: usize) -> Vec<UpdateRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sessions: Vec<SessionKey> = (0..rng.gen_range(1..4)).map(|i| session(100 + i)).collect();
    let prefixes: Vec<String> = (0..rng.gen_range(1..6)).map(|i| format!("10.{i}.0.0/16")).collect();
    let mut last: std::collections::HashMap<(usize, usize), (AsPath, Vec<Community>)> = Default::default();
    let mut t = BASE_TIME * 1_000_000;
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let (s, p) = (rng.gen_range(0..sessions.len()), rng.gen_range(0..prefixes.len()));
        t += rng.gen_range(0..2_000_000);
        let arrival = if rng.gen_bool(0.02) { Timestamp(t - 3_000_000) } else { Timestamp(t) };
        if rng.gen_bool(0.1) {
            out.push(withdrawal(&sessions[s], &prefixes[p], arrival));
            continue;
        }
        let peer = sessions[s].peer_asn;
        let (path, mut comms) = match last.get(&(s, p)) {
            Some((path, comms)) => {
                let path = match rng.gen_range(0..10) {
                    0..=3 => path.clone(),
                    4..=5 => reprepend(&mut rng, path),
                    6 if path.segments[0].asns.len() > 2 => reorder(&mut rng, path),
                    _ => random_path(&mut rng, peer),
                };
                let comms = if rng.gen_bool(0.5) { comms.clone() } else { random_communities(&mut rng) };
                (path, comms)
            }
            None => (random_path(&mut rng, peer), random_communities(&mut rng)),
        };
        last.insert((s, p), (path.clone(), comms.clone()));
        comms.shuffle(&mut rng);
        let mut r = announcement(&sessions[s], &prefixes[p], arrival, path, comms);
        if rng.gen_bool(0.2) {
            r.attrs.as_mut().unwrap().med = Some(rng.gen_range(0..3));
        }
        out.push(r);
    }
    out
}

/// Next route on a stream that produces `label` against `prev`.
pub fn step(
    rng: &mut ChaCha8Rng,
    prev: &(AsPath, Vec<Community>),
    label: AnnouncementType,
    fresh: &mut u32,
) -> (AsPath, Vec<Community>) {
    use AnnouncementType::*;
    let (path, comms) = prev;
    let new_path = |fresh: &mut u32| {
        *fresh += 1;
        let mut p = path.clone();
        let seg = &mut p.segments[0];
        let last = seg.asns.len() - 1;
        seg.asns.insert(last, 60_000 + *fresh);
        if seg.asns.len() > 6 {
            seg.asns.remove(1);
        }
        p
    };
    let prepended = || {
        let mut p = path.clone();
        let seg = &mut p.segments[0];
        let a = seg.asns[0];
        if seg.asns.len() > 1 && seg.asns[1] == a {
            seg.asns.remove(0);
        } else {
            seg.asns.insert(0, a);
        }
        p
    };
    let new_comms = |fresh: &mut u32| {
        *fresh += 1;
        vec![Community::new(3356, (*fresh % 60_000) as u16 + 1)]
    };
    let mut same_comms = comms.clone();
    same_comms.shuffle(rng);
    match label {
        Pc => (new_path(fresh), new_comms(fresh)),
        Pn => (new_path(fresh), same_comms),
        Nc => (path.clone(), new_comms(fresh)),
        Nn => (path.clone(), same_comms),
        Xc => (prepended(), new_comms(fresh)),
        Xn => (prepended(), same_comms),
        Initial => unreachable!("initial is not a transition"),
    }
}

/// Records whose labels follow `composition` exactly, spread over
/// `streams` streams. Returns the records with their intended labels.
pub fn composed_stream(
    seed: u64,
    composition: &[(AnnouncementType, usize)],
    streams: usize,
) -> (Vec<UpdateRecord>, Vec<AnnouncementType>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut plan: Vec<AnnouncementType> = composition.iter().flat_map(|&(t, n)| std::iter::repeat_n(t, n)).collect();
    plan.shuffle(&mut rng);
    let keys: Vec<(SessionKey, String)> =
        (0..streams).map(|i| (session(200 + (i % 7) as u32), format!("10.{}.0.0/16", i / 7))).collect();
    let mut state: Vec<Option<(AsPath, Vec<Community>)>> = vec![None; streams];
    let mut fresh = 0u32;
    let mut t = BASE_TIME * 1_000_000;
    let mut records = Vec::new();
    let mut truth = Vec::new();
    let mut emit = |k: usize, route: (AsPath, Vec<Community>), label, t: u64, records: &mut Vec<UpdateRecord>| {
        records.push(announcement(&keys[k].0, &keys[k].1, Timestamp(t), route.0, route.1));
        truth.push(label);
    };
    for label in plan {
        let k = rng.gen_range(0..streams);
        t += 1_000;
        if state[k].is_none() {
            let peer = keys[k].0.peer_asn;
            let init = (AsPath::from_sequence(vec![peer, 3356, 174, 12654]), vec![Community::new(3356, 2010)]);
            emit(k, init.clone(), AnnouncementType::Initial, t, &mut records);
            state[k] = Some(init);
            t += 1_000;
        }
        let next = step(&mut rng, state[k].as_ref().unwrap(), label, &mut fresh);
        emit(k, next.clone(), label, t, &mut records);
        state[k] = Some(next);
    }
    (records, truth)
}
