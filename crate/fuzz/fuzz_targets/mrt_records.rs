#![no_main]

use commex_core::mrt::{Container, MrtReader};
use libfuzzer_sys::fuzz_target;

// Every record that decodes must re-encode to the bytes it came from.
fuzz_target!(|data: &[u8]| {
    let Ok(reader) = MrtReader::new(data, Container::Plain) else { return };
    let mut offset = 0;
    for rec in reader {
        let Ok(rec) = rec else { break };
        let bytes = rec.to_bytes().expect("decoded record encodes");
        assert_eq!(bytes[..], data[offset..offset + bytes.len()]);
        offset += bytes.len();
    }
});
