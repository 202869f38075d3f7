#![no_main]

use commex_sim::Scenario;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|s: &str| {
    if let Ok(scenario) = Scenario::from_json(s) {
        let again = Scenario::from_json(&scenario.to_json_pretty()).expect("printed scenario parses");
        assert_eq!(scenario, again);
    }
});
