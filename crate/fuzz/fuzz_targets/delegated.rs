#![no_main]

use commex_core::model::AllocationTable;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = AllocationTable::new().load_delegated(data);
});
