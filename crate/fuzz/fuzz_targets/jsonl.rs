#![no_main]

use commex_core::model::{read_jsonl, write_jsonl};
use libfuzzer_sys::fuzz_target;

// Records that parse must survive a write and read unchanged.
fuzz_target!(|data: &[u8]| {
    let records: Vec<_> = read_jsonl(data).filter_map(Result::ok).collect();
    let mut out = Vec::new();
    write_jsonl(&records, &mut out).unwrap();
    let again: Vec<_> = read_jsonl(&out[..]).map(Result::unwrap).collect();
    assert_eq!(records, again);
});
