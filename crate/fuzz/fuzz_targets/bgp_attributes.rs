#![no_main]

use commex_core::model::UpdateStream;
use commex_core::mrt::{Container, MrtReader};
use libfuzzer_sys::fuzz_target;

// The input is used as the path attribute block of one BGP4MP_MESSAGE_AS4
// update announcing 192.0.2.0/24.
fuzz_target!(|data: &[u8]| {
    if data.len() > 4000 {
        return;
    }
    let mut bgp = vec![0xff; 16];
    let len = 19 + 4 + data.len() + 4;
    bgp.extend_from_slice(&(len as u16).to_be_bytes());
    bgp.push(2);
    bgp.extend_from_slice(&0u16.to_be_bytes());
    bgp.extend_from_slice(&(data.len() as u16).to_be_bytes());
    bgp.extend_from_slice(data);
    bgp.extend_from_slice(&[24, 192, 0, 2]);

    let mut body = Vec::new();
    body.extend_from_slice(&20205u32.to_be_bytes());
    body.extend_from_slice(&12654u32.to_be_bytes());
    body.extend_from_slice(&0u16.to_be_bytes());
    body.extend_from_slice(&1u16.to_be_bytes());
    body.extend_from_slice(&[192, 0, 2, 1, 192, 0, 2, 254]);
    body.extend_from_slice(&bgp);

    let mut rec = Vec::new();
    rec.extend_from_slice(&1_584_230_400u32.to_be_bytes());
    rec.extend_from_slice(&16u16.to_be_bytes());
    rec.extend_from_slice(&4u16.to_be_bytes());
    rec.extend_from_slice(&(body.len() as u32).to_be_bytes());
    rec.extend_from_slice(&body);

    let reader = MrtReader::new(&rec[..], Container::Plain).unwrap();
    for r in UpdateStream::new(reader, "rrc00", "fuzz").flatten() {
        if let Some(p) = r.attrs.as_ref().and_then(|a| a.as_path.as_ref()) {
            let _ = p.to_string();
        }
    }
});
