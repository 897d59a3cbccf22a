#![no_main]

use libfuzzer_sys::fuzz_target;
use pvskit::frames::GrayFrame;

fuzz_target!(|data: &[u8]| {
    if let Ok(f) = GrayFrame::from_pgm(data) {
        assert_eq!(GrayFrame::from_pgm(&f.to_pgm()).unwrap(), f);
    }
});
