//! Dataset checks that need nothing but the files on disk.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use cabinsynth_core::config::validate_config;
use cabinsynth_core::labels::{
    build_annotations, labels_file_name, mask_file_name, read_bbox_file, rgb_file_name,
    LabelFileError, Manifest, ManifestSample, SampleAnnotation, MANIFEST_FILE,
};
use cabinsynth_core::mask::{instance_bboxes, read_mask_png, BoundingBox, IndexedMask, StructuringElement};
use cabinsynth_core::render::joints_of;
use cabinsynth_core::rng::derive_seed;
use cabinsynth_core::sampler::{sample_scene_unchecked, SceneDescription};
use rayon::prelude::*;
use serde::Serialize;

use crate::pipeline::list_scenes;

/// One failed check, located as precisely as the data allows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub sample: Option<u64>,
    pub file: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(s) = self.sample {
            write!(f, "sample {s}: ")?;
        }
        write!(f, "{}", self.file)?;
        if let Some(l) = self.line {
            write!(f, " line {l}")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub samples_checked: usize,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }
}

struct Sink {
    sample: Option<u64>,
    issues: Vec<Issue>,
}

impl Sink {
    fn new(sample: Option<u64>) -> Self {
        Self {
            sample,
            issues: Vec::new(),
        }
    }

    fn push(&mut self, file: impl Into<String>, line: Option<usize>, message: impl Into<String>) {
        self.issues.push(Issue {
            sample: self.sample,
            file: file.into(),
            line,
            message: message.into(),
        });
    }
}

/// Checks the dataset in `dir`; `jobs` workers check samples in parallel.
pub fn cmd_validate(dir: &Path, jobs: usize) -> ValidationReport {
    let mut top = Sink::new(None);
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest = match Manifest::read(&manifest_path) {
        Ok(m) => m,
        Err(e) => {
            top.push(MANIFEST_FILE, None, format!("cannot load manifest: {e}"));
            return ValidationReport {
                samples_checked: 0,
                issues: top.issues,
            };
        }
    };
    check_manifest_header(&manifest, &mut top);
    let config_ok = top.issues.is_empty();

    let listed: BTreeSet<u64> = manifest.samples.iter().map(|s| s.sample_id).collect();
    if listed.len() != manifest.samples.len() {
        top.push(MANIFEST_FILE, None, "duplicate sample ids");
    }
    match list_scenes(dir) {
        Ok(on_disk) => {
            for id in on_disk.into_iter().filter(|id| !listed.contains(id)) {
                top.push(SceneDescription::file_name(id), None, "scene file is not listed in the manifest");
            }
        }
        Err(e) => top.push(dir.display().to_string(), None, e.to_string()),
    }

    let samples = &manifest.samples;
    let per_sample: Vec<Vec<Issue>> = match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(|| {
            samples
                .par_iter()
                .map(|s| check_sample(dir, &manifest, s, config_ok))
                .collect()
        }),
        Err(_) => samples
            .iter()
            .map(|s| check_sample(dir, &manifest, s, config_ok))
            .collect(),
    };
    let mut issues = top.issues;
    issues.extend(per_sample.into_iter().flatten());
    ValidationReport {
        samples_checked: samples.len(),
        issues,
    }
}

fn check_manifest_header(m: &Manifest, sink: &mut Sink) {
    for v in validate_config(&m.config) {
        sink.push(MANIFEST_FILE, None, format!("config.{v}"));
    }
    if m.config_digest != m.config.digest() {
        sink.push(MANIFEST_FILE, None, "config_digest does not match the recorded config");
    }
    if m.master_seed != m.config.master_seed {
        sink.push(MANIFEST_FILE, None, "master_seed differs from config.master_seed");
    }
    if m.palette != m.config.palette {
        sink.push(MANIFEST_FILE, None, "palette differs from config.palette");
    }
    if m.camera != m.config.camera {
        sink.push(MANIFEST_FILE, None, "camera differs from config.camera");
    }
    if m.closing_kernel != m.config.closing_kernel {
        sink.push(MANIFEST_FILE, None, "closing_kernel differs from config.closing_kernel");
    }
}

fn check_sample(dir: &Path, manifest: &Manifest, entry: &ManifestSample, config_ok: bool) -> Vec<Issue> {
    let id = entry.sample_id;
    let mut sink = Sink::new(Some(id));
    let config = &manifest.config;

    if entry.derived_seed != derive_seed(manifest.master_seed, id) {
        sink.push(MANIFEST_FILE, None, "derived_seed is not derive_seed(master_seed, sample_id)");
    }
    if id >= config.sample_count {
        sink.push(MANIFEST_FILE, None, format!("sample id beyond sample_count {}", config.sample_count));
    }
    let expected_refs = [
        (&entry.scene_ref, SceneDescription::file_name(id)),
        (&entry.image_ref, rgb_file_name(id)),
        (&entry.mask_ref, mask_file_name(id)),
        (&entry.labels_ref, labels_file_name(id)),
    ];
    for (got, want) in expected_refs {
        if *got != want {
            sink.push(MANIFEST_FILE, None, format!("reference {got:?} should be {want:?}"));
        }
    }
    if !dir.join(rgb_file_name(id)).is_file() {
        sink.push(rgb_file_name(id), None, "RGB image is missing");
    }

    let scene = check_scene(dir, manifest, entry, config_ok, &mut sink);
    let labels = check_labels_grammar(dir, id, &mut sink);
    let Ok(se) = StructuringElement::square(manifest.closing_kernel) else {
        sink.push(MANIFEST_FILE, None, "closing_kernel is not an odd size");
        return sink.issues;
    };
    let Some(mask) = check_mask(dir, manifest, id, &mut sink) else {
        return sink.issues;
    };

    let from_mask: Vec<(u8, BoundingBox)> = instance_bboxes(&mask, se).boxes.into_iter().collect();
    if let Some(records) = &labels {
        compare_boxes(&labels_file_name(id), records, &from_mask, true, &mut sink);
    }
    let recorded: Vec<(u8, BoundingBox)> = entry.instances.iter().map(|r| (r.instance_id, r.bbox)).collect();
    compare_boxes(MANIFEST_FILE, &recorded, &from_mask, false, &mut sink);

    if let Some(scene) = scene {
        match build_annotations(&scene, &mask, &scene.camera, &joints_of(&scene), se) {
            Ok(fresh) => compare_annotation(entry, &fresh, &mut sink),
            Err(e) => sink.push(mask_file_name(id), None, format!("cannot annotate: {e}")),
        }
    }
    sink.issues
}

fn check_scene(
    dir: &Path,
    manifest: &Manifest,
    entry: &ManifestSample,
    config_ok: bool,
    sink: &mut Sink,
) -> Option<SceneDescription> {
    let id = entry.sample_id;
    let name = SceneDescription::file_name(id);
    let text = match std::fs::read_to_string(dir.join(&name)) {
        Ok(t) => t,
        Err(e) => {
            sink.push(&name, None, format!("cannot read scene: {e}"));
            return None;
        }
    };
    let scene = match SceneDescription::from_json(&text) {
        Ok(s) => s,
        Err(e) => {
            sink.push(&name, Some(e.line()), format!("scene does not parse: {e}"));
            return None;
        }
    };
    if scene.sample_id != id {
        sink.push(&name, None, format!("scene records sample_id {}", scene.sample_id));
    }
    if scene.derived_seed != entry.derived_seed {
        sink.push(&name, None, "scene derived_seed differs from the manifest");
    }
    if config_ok && id < manifest.config.sample_count {
        match sample_scene_unchecked(&manifest.config, id) {
            Ok(expected) if expected == scene => {}
            Ok(_) => sink.push(&name, None, "scene differs from the one the recorded config and seed produce"),
            Err(e) => sink.push(&name, None, e.to_string()),
        }
    }
    Some(scene)
}

fn check_labels_grammar(dir: &Path, id: u64, sink: &mut Sink) -> Option<Vec<(u8, BoundingBox)>> {
    let name = labels_file_name(id);
    match read_bbox_file(&dir.join(&name)) {
        Ok(file) => {
            if file.sample_id != id {
                sink.push(&name, Some(1), format!("header names sample {}", file.sample_id));
            }
            Some(file.records)
        }
        Err(LabelFileError::Parse { source, .. }) => {
            sink.push(&name, Some(source.line), source.message);
            None
        }
        Err(e) => {
            sink.push(&name, None, e.to_string());
            None
        }
    }
}

fn check_mask(dir: &Path, manifest: &Manifest, id: u64, sink: &mut Sink) -> Option<IndexedMask> {
    let name = mask_file_name(id);
    let split = match read_mask_png(&dir.join(&name), &manifest.palette) {
        Ok(s) => s,
        Err(e) => {
            sink.push(&name, None, e.to_string());
            return None;
        }
    };
    if split.unknown_pixels > 0 {
        sink.push(
            &name,
            None,
            format!("{} pixels carry colors outside the palette", split.unknown_pixels),
        );
    }
    let size = manifest.camera.image_size;
    if (split.mask.width(), split.mask.height()) != (size.width, size.height) {
        sink.push(
            &name,
            None,
            format!(
                "mask is {}x{}, camera is {}x{}",
                split.mask.width(),
                split.mask.height(),
                size.width,
                size.height
            ),
        );
        return None;
    }
    Some(split.mask)
}

/// Reports the first disagreement; for the labels file, line numbers count
/// the header as line 1.
fn compare_boxes(
    file: &str,
    recorded: &[(u8, BoundingBox)],
    from_mask: &[(u8, BoundingBox)],
    cite_lines: bool,
    sink: &mut Sink,
) {
    let line = |i: usize| cite_lines.then_some(i + 2);
    for (i, (rec, truth)) in recorded.iter().zip(from_mask).enumerate() {
        if rec != truth {
            sink.push(
                file,
                line(i),
                format!(
                    "record {} {:?} disagrees with mask-derived {} {:?}",
                    rec.0, rec.1, truth.0, truth.1
                ),
            );
            return;
        }
    }
    if recorded.len() > from_mask.len() {
        let (id, _) = recorded[from_mask.len()];
        sink.push(file, line(from_mask.len()), format!("instance {id} has no pixels in the mask"));
    } else if recorded.len() < from_mask.len() {
        let (id, _) = from_mask[recorded.len()];
        sink.push(file, line(recorded.len()), format!("mask instance {id} has no record"));
    }
}

fn compare_annotation(entry: &ManifestSample, fresh: &SampleAnnotation, sink: &mut Sink) {
    if entry.placements != fresh.placements {
        sink.push(MANIFEST_FILE, None, "placements differ from the scene file");
    }
    if entry.background != fresh.background {
        sink.push(MANIFEST_FILE, None, "background differs from the scene file");
    }
    if entry.unseen_instances != fresh.unseen_instances {
        sink.push(MANIFEST_FILE, None, "unseen_instances differ from the mask");
    }
    for rec in &entry.instances {
        match fresh.instances.iter().find(|r| r.instance_id == rec.instance_id) {
            Some(f) if f == rec => {}
            Some(_) => sink.push(
                MANIFEST_FILE,
                None,
                format!("instance {} record differs from the recomputed annotation", rec.instance_id),
            ),
            None => {}
        }
    }
}
