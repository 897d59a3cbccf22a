#![no_main]

use libfuzzer_sys::fuzz_target;
use pvskit::dataset::Manifest;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = Manifest::from_json(text) {
        let again = Manifest::from_json(&m.to_json().unwrap()).expect("saved manifest loads");
        assert_eq!(again, m);
    }
});
