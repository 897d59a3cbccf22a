#![no_main]

use libfuzzer_sys::fuzz_target;
use pvskit::mask::{rle_decode, rle_encode, RleMask};

fuzz_target!(|data: &[u8]| {
    let Ok(rle) = serde_json::from_slice::<RleMask>(data) else {
        return;
    };
    if rle.height() * rle.width() > 1 << 20 {
        return;
    }
    let m = rle_decode(&rle).expect("validated RLE decodes");
    assert_eq!(rle_encode(&m), rle);
    assert_eq!(rle.iou(&rle).unwrap(), 1.0);
});
