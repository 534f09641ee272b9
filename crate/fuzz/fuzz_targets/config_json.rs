#![no_main]

use cabinsynth_core::config::{validate_config, GenerationConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = GenerationConfig::from_json_str(text) {
        let _ = validate_config(&config);
        let _ = config.digest();
    }
});
