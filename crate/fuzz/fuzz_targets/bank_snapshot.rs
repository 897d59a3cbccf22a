#![no_main]

use libfuzzer_sys::fuzz_target;
use pvskit::memory::MemoryBank;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(bank) = MemoryBank::from_json(text) {
        let again = MemoryBank::from_json(&bank.to_json().unwrap()).expect("saved bank loads");
        assert_eq!(again.snapshot(), bank.snapshot());
        let _ = bank.context_for(usize::MAX);
    }
});
