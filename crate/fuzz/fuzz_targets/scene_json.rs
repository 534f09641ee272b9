#![no_main]

use cabinsynth_core::sampler::SceneDescription;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(scene) = SceneDescription::from_json(text) {
        let again = SceneDescription::from_json(&scene.to_json_pretty()).expect("re-parse");
        assert_eq!(again.sample_id, scene.sample_id);
    }
});
