//! Synthetic MRT update files with per-message necessity known under both
//! cold and warm classifier state.

use std::collections::HashMap;
use std::net::IpAddr;
use std::path::{Path, PathBuf};

use commex_core::mrt::{
    write_mrt_stream, AsPath, BgpAttributes, BgpMessage, Community, Container, MrtRecord, StateChange,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracle::path_letter;

type Net = String;
type Route = (AsPath, Vec<Community>);

#[derive(Default)]
struct Tracker {
    routes: HashMap<(u32, Net), Route>,
}

impl Tracker {
    /// Whether a message is unnecessary, judged against stored routes; the
    /// routes are then updated.
    fn judge(&mut self, peer: u32, withdrawn: &[Net], announced: &[Net], route: &Route) -> bool {
        let mut unnecessary = withdrawn.is_empty() && !announced.is_empty();
        for p in announced {
            match self.routes.get(&(peer, p.clone())) {
                Some(prev) => unnecessary &= path_letter(&prev.0, &route.0) == 'n',
                None => unnecessary = false,
            }
            self.routes.insert((peer, p.clone()), route.clone());
        }
        unnecessary
    }
}

#[derive(Clone, Debug)]
pub struct SynthFile {
    pub collector: String,
    pub name: String,
    pub container: Container,
    pub bytes: Vec<u8>,
    /// One entry per update message in file order.
    pub unnecessary_cold: Vec<bool>,
    pub unnecessary_warm: Vec<bool>,
    /// Records that are not update messages.
    pub other_records: usize,
}

fn ratio(v: &[bool]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().filter(|&&b| b).count() as f64 / v.len() as f64
    }
}

impl SynthFile {
    pub fn cold_ratio(&self) -> f64 {
        ratio(&self.unnecessary_cold)
    }

    pub fn warm_ratio(&self) -> f64 {
        ratio(&self.unnecessary_warm)
    }

    pub fn relative_path(&self) -> PathBuf {
        PathBuf::from(&self.collector).join(&self.name)
    }
}

fn peer_ip(peer: u32) -> IpAddr {
    format!("192.0.2.{}", peer % 250 + 1).parse().unwrap()
}

/// A day's worth of consecutive files for one collector. Each message is
/// drawn unnecessary with probability near `target`.
pub fn collector_day(
    rng: &mut ChaCha8Rng,
    collector: &str,
    day: &str,
    files: usize,
    messages_per_file: std::ops::Range<usize>,
    target: f64,
) -> Vec<SynthFile> {
    let peers = [20205u32, 3333];
    let groups: Vec<Vec<Net>> =
        (0..8u32).map(|g| (0..1 + g % 3).map(|k| format!("10.{g}.{k}.0/24")).collect()).collect();
    let mut routes: HashMap<(u32, usize), Route> = HashMap::new();
    let mut warm = Tracker::default();
    let mut fresh = 0u32;
    let mut out = Vec::new();
    for f in 0..files {
        let mut cold = Tracker::default();
        let container = [Container::Plain, Container::Gzip, Container::Bzip2][f % 3];
        let micros = f % 2 == 0;
        let mut records = Vec::new();
        let (mut uc, mut uw) = (Vec::new(), Vec::new());
        let mut other = 0;
        let base = 1_584_230_400 + (f as u32) * 900;
        let n = rng.gen_range(messages_per_file.clone());
        for m in 0..n {
            let ts = base + m as u32;
            let us = micros.then_some(m as u32);
            if rng.gen_bool(0.03) {
                let peer = *peers.choose(rng).unwrap();
                let sc = StateChange {
                    peer_asn: peer,
                    local_asn: 12654,
                    interface_index: 0,
                    peer_address: peer_ip(peer),
                    local_address: "192.0.2.254".parse().unwrap(),
                    four_byte_asn: true,
                    old_state: 5,
                    new_state: 6,
                };
                records.push(MrtRecord::state_change(ts, us, sc));
                other += 1;
            }
            let peer = *peers.choose(rng).unwrap();
            let g = rng.gen_range(0..groups.len());
            let prev = routes.get(&(peer, g)).cloned();
            let roll: f64 = rng.gen();
            let (withdrawn, announced, route): (Vec<Net>, Vec<Net>, Route) = match prev {
                Some((path, comms)) if roll < target => {
                    let comms = if rng.gen_bool(0.5) {
                        fresh += 1;
                        vec![Community::new(3356, (fresh % 60_000) as u16 + 1)]
                    } else {
                        comms
                    };
                    (vec![], groups[g].clone(), (path, comms))
                }
                Some(_) if roll < target + 0.15 => {
                    let h = (g + 1) % groups.len();
                    (groups[h].clone(), vec![], (AsPath::default(), vec![]))
                }
                _ => {
                    fresh += 1;
                    let mut asns = vec![peer, 3356, 60_000 + fresh % 5_000];
                    if rng.gen_bool(0.3) {
                        asns.insert(1, peer);
                    }
                    asns.push(12_654);
                    (vec![], groups[g].clone(), (AsPath::from_sequence(asns), vec![Community::new(3356, 2010)]))
                }
            };
            uw.push(warm.judge(peer, &withdrawn, &announced, &route));
            uc.push(cold.judge(peer, &withdrawn, &announced, &route));
            if !announced.is_empty() {
                routes.insert((peer, g), route.clone());
            }
            let attrs = if announced.is_empty() {
                BgpAttributes::default()
            } else {
                BgpAttributes {
                    origin: Some(0),
                    as_path: Some(route.0.clone()),
                    next_hop: Some(peer_ip(peer)),
                    communities: route.1.clone(),
                    ..Default::default()
                }
            };
            let msg = BgpMessage::update(
                peer,
                peer_ip(peer),
                12654,
                "192.0.2.254".parse().unwrap(),
                withdrawn.iter().map(|p| p.parse().unwrap()).collect(),
                announced.iter().map(|p| p.parse().unwrap()).collect(),
                attrs,
            );
            records.push(MrtRecord::bgp4mp(ts, us, msg));
        }
        let mut bytes = Vec::new();
        write_mrt_stream(&records, &mut bytes, container).unwrap();
        let ext = match container {
            Container::Gzip => ".gz",
            Container::Bzip2 => ".bz2",
            _ => "",
        };
        out.push(SynthFile {
            collector: collector.to_string(),
            name: format!("updates.{day}.{:02}{:02}{ext}", f / 4, (f % 4) * 15),
            container,
            bytes,
            unnecessary_cold: uc,
            unnecessary_warm: uw,
            other_records: other,
        });
    }
    out
}

/// `files` files split over two collectors of different projects.
pub fn corpus(seed: u64, files: usize, target_mean: f64) -> Vec<SynthFile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = files / 2;
    let mut out = Vec::new();
    for (collector, count) in [("rrc00", half), ("route-views2", files - half)] {
        let target = (target_mean + rng.gen_range(-0.05..0.05)).clamp(0.0, 1.0);
        out.extend(collector_day(&mut rng, collector, "20200315", count, 20..60, target));
    }
    out
}

pub fn write_corpus(dir: &Path, files: &[SynthFile]) -> Vec<PathBuf> {
    files
        .iter()
        .map(|f| {
            let path = dir.join(f.relative_path());
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            std::fs::write(&path, &f.bytes).unwrap();
            path
        })
        .collect()
}
