#![no_main]

use libfuzzer_sys::fuzz_target;
use pvskit::prompt::PromptLog;

fuzz_target!(|data: &[u8]| {
    if let Ok(log) = serde_json::from_slice::<PromptLog>(data) {
        let _ = log.validate(64, 64, 8);
        let text = serde_json::to_string(&log).unwrap();
        assert_eq!(serde_json::from_str::<PromptLog>(&text).unwrap(), log);
    }
});
