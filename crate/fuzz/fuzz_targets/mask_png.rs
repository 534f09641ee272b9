#![no_main]

use cabinsynth_core::mask::{decode_mask_png, instance_bboxes, Palette, StructuringElement};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(split) = decode_mask_png(data, &Palette::default()) {
        if split.mask.width() * split.mask.height() <= 1 << 16 {
            let _ = instance_bboxes(&split.mask, StructuringElement::default());
        }
    }
});
