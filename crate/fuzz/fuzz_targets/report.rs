#![no_main]

use libfuzzer_sys::fuzz_target;
use pvskit::report::DatasetReport;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(r) = DatasetReport::from_json(text) {
        let again = DatasetReport::from_json(&r.to_json().unwrap()).expect("saved report loads");
        assert_eq!(again.to_json().unwrap(), r.to_json().unwrap());
    }
});
