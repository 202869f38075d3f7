#![no_main]

use commex_core::beacon::BeaconList;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = BeaconList::load(data);
});
