#![no_main]

use commex_core::classify::StreamState;
use commex_core::model::{repair_route_server_path, Disambiguator, UpdateStream};
use commex_core::mrt::{Container, MrtReader};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(reader) = MrtReader::new(data, Container::Plain) else { return };
    let mut dis = Disambiguator::new();
    let mut state = StreamState::new();
    for r in UpdateStream::new(reader, "rrc00", "fuzz") {
        let Ok(mut r) = r else { continue };
        dis.apply(&mut r);
        let r = repair_route_server_path(&r);
        state.observe(&r);
    }
});
