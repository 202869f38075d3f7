//! A synthetic beacon day whose community reveal categories are known.

use commex_core::beacon::RevealCategory;
use commex_core::model::{Timestamp, UpdateRecord};
use commex_core::mrt::{AsPath, Community};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::streams::{announcement, session, withdrawal, BASE_TIME};

const HOUR: u64 = 3600;

fn in_window(rng: &mut ChaCha8Rng, start_hours: u64) -> Timestamp {
    let slot = rng.gen_range(0..6u64);
    let s = BASE_TIME + (start_hours + 4 * slot) * HOUR + rng.gen_range(0..15 * 60);
    Timestamp(s * 1_000_000 + rng.gen_range(0..1_000_000))
}

fn outside(rng: &mut ChaCha8Rng) -> Timestamp {
    loop {
        let s = rng.gen_range(0..86_400u64);
        let into = s % (2 * HOUR);
        if into >= 15 * 60 {
            return Timestamp((BASE_TIME + s) * 1_000_000);
        }
    }
}

/// Announcements for `prefix` carrying one community each, plus the
/// scheduled withdrawals. Every value of category `c` is seen 1..=3 times
/// (twice at least for ambiguous values, in two different phases).
pub fn beacon_day(seed: u64, prefix: &str, sizes: [usize; 4]) -> (Vec<UpdateRecord>, Vec<(Community, RevealCategory)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let peer = session(20205);
    let path = AsPath::from_sequence(vec![20205, 3356, 174, 12654]);
    let mut truth = Vec::new();
    let mut records = Vec::new();
    let mut next = 0u16;
    for (cat, &n) in RevealCategory::ALL.iter().zip(&sizes) {
        for _ in 0..n {
            next += 1;
            let c = Community::new(3356, next);
            truth.push((c, *cat));
            let times: Vec<Timestamp> = match cat {
                RevealCategory::WithdrawalOnly => (0..rng.gen_range(1..=3)).map(|_| in_window(&mut rng, 2)).collect(),
                RevealCategory::AnnounceOnly => (0..rng.gen_range(1..=3)).map(|_| in_window(&mut rng, 0)).collect(),
                RevealCategory::OutsideOnly => (0..rng.gen_range(1..=3)).map(|_| outside(&mut rng)).collect(),
                RevealCategory::Ambiguous => {
                    let mut picks = vec![in_window(&mut rng, 2), in_window(&mut rng, 0), outside(&mut rng)];
                    picks.shuffle(&mut rng);
                    picks.truncate(rng.gen_range(2..=3));
                    picks
                }
            };
            for t in times {
                records.push(announcement(&peer, prefix, t, path.clone(), vec![c]));
            }
        }
    }
    for slot in 0..6 {
        records.push(withdrawal(&peer, prefix, Timestamp((BASE_TIME + (2 + 4 * slot) * HOUR) * 1_000_000)));
    }
    records.sort_by_key(|r| r.arrival);
    (records, truth)
}
