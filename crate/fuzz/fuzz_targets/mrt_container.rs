#![no_main]

use commex_core::mrt::{Container, MrtReader};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(reader) = MrtReader::new(data, Container::Detect) {
        reader.take(10_000).for_each(drop);
    }
});
