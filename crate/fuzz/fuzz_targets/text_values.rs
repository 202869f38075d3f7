#![no_main]

use commex_core::mrt::{AsPath, Community};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|s: &str| {
    if let Ok(c) = s.parse::<Community>() {
        assert_eq!(c.to_string().parse::<Community>().unwrap(), c);
    }
    if let Ok(p) = s.parse::<AsPath>() {
        assert_eq!(p.to_string().parse::<AsPath>().unwrap(), p);
    }
});
