#![no_main]

use cabinsynth_core::labels::{format_bbox_text, parse_bbox_text};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(file) = parse_bbox_text(text) {
        // Accepted input is canonical.
        assert_eq!(format_bbox_text(file.sample_id, &file.records), text);
    }
});
