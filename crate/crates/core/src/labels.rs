//! Per-sample annotations and the dataset files that carry them.
//!
//! Label text file grammar (`labels_<id:06>.txt`), LF line endings, final
//! LF required, nothing else allowed:
//!
//! ```text
//! # sample <sample_id>
//! <instance_id> <x> <y> <w> <h>
//! ...
//! ```
//!
//! Numbers are unsigned base-10 without leading zeros or sign, separated by
//! single ASCII spaces. Records are sorted by strictly ascending instance
//! id, and `w`, `h` are positive.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{distance_to_camera, project, CameraSpec};
use crate::config::{BoneAxis, GenerationConfig};
use crate::geometry::{Orientation, Vec3};
use crate::mask::{close_indexed, instance_bboxes, BoundingBox, IndexedMask, Palette, StructuringElement};
use crate::render::{Joints, HEAD_JOINT, NECK_BONE, TORSO_JOINT};
use crate::sampler::{BonePose, Placement, SceneDescription};

/// Joints every placed instance must provide.
pub const REQUIRED_JOINTS: [&str; 2] = [HEAD_JOINT, TORSO_JOINT];

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn labels_file_name(sample_id: u64) -> String {
    format!("labels_{sample_id:06}.txt")
}

pub fn rgb_file_name(sample_id: u64) -> String {
    format!("rgb_{sample_id:06}.png")
}

pub fn mask_file_name(sample_id: u64) -> String {
    format!("mask_{sample_id:06}.png")
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabelError {
    #[error("mask is {mask_w}x{mask_h} but the camera renders {cam_w}x{cam_h}")]
    SizeMismatch {
        mask_w: u32,
        mask_h: u32,
        cam_w: u32,
        cam_h: u32,
    },
    #[error("instance {instance} is missing joints: {}", .missing.join(", "))]
    IncompleteScene { instance: u8, missing: Vec<String> },
    #[error("mask contains instance id {0} with no placement in the scene")]
    UnknownInstance(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    Visible,
    Occluded,
    OutsideFrame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keypoint2D {
    pub name: String,
    pub u: f64,
    pub v: f64,
    pub visibility: Visibility,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadPose {
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    pub roll_deg: f64,
}

impl HeadPose {
    /// Neck angles: horizontal is yaw, vertical is pitch.
    pub fn from_bone_pose(pose: &BonePose) -> Self {
        let angle = |axis| {
            pose.get(NECK_BONE)
                .and_then(|a| a.get(&axis))
                .copied()
                .unwrap_or(0.0)
        };
        Self {
            yaw_deg: angle(BoneAxis::Horizontal),
            pitch_deg: angle(BoneAxis::Vertical),
            roll_deg: angle(BoneAxis::Roll),
        }
    }

    pub fn orientation(&self) -> Orientation {
        Orientation::new(self.yaw_deg, self.pitch_deg, self.roll_deg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub instance_id: u8,
    pub human_id: String,
    pub seat_id: String,
    pub bbox: BoundingBox,
    pub keypoints: Vec<Keypoint2D>,
    /// Euclidean distance from the camera to the head joint, meters.
    pub distance_to_camera_m: f64,
    pub head_pose: HeadPose,
    /// Head-forward unit vector in the vehicle frame.
    pub gaze: [f64; 3],
}

/// Who sat where, kept for provenance and statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementSummary {
    pub instance_id: u8,
    pub human_id: String,
    pub seat_id: String,
    pub bone_pose: BonePose,
}

impl From<&Placement> for PlacementSummary {
    fn from(p: &Placement) -> Self {
        Self {
            instance_id: p.instance_id,
            human_id: p.human_id().to_string(),
            seat_id: p.seat_id().to_string(),
            bone_pose: p.bone_pose.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleAnnotation {
    pub sample_id: u64,
    pub derived_seed: u64,
    pub image_ref: String,
    pub mask_ref: String,
    pub background: String,
    pub placements: Vec<PlacementSummary>,
    /// One record per instance that survives in the cleaned mask,
    /// ascending id.
    pub instances: Vec<InstanceRecord>,
    /// Placed instances with no pixels in the mask.
    pub unseen_instances: Vec<u8>,
}

impl SampleAnnotation {
    pub fn bbox_records(&self) -> Vec<(u8, BoundingBox)> {
        self.instances.iter().map(|r| (r.instance_id, r.bbox)).collect()
    }
}

/// Combines scene, mask and camera into labels.
///
/// Visibility reads the per-instance closed mask at the pixel containing
/// the projection, i.e. the pixel whose center is nearest.
pub fn build_annotations(
    scene: &SceneDescription,
    mask: &IndexedMask,
    camera: &CameraSpec,
    joints: &Joints,
    se: StructuringElement,
) -> Result<SampleAnnotation, LabelError> {
    let size = camera.image_size;
    if mask.width() != size.width || mask.height() != size.height {
        return Err(LabelError::SizeMismatch {
            mask_w: mask.width(),
            mask_h: mask.height(),
            cam_w: size.width,
            cam_h: size.height,
        });
    }
    for p in &scene.placements {
        let missing: Vec<String> = REQUIRED_JOINTS
            .iter()
            .filter(|j| !joints.contains_key(&(p.instance_id, j.to_string())))
            .map(|j| j.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(LabelError::IncompleteScene {
                instance: p.instance_id,
                missing,
            });
        }
    }
    let boxes = instance_bboxes(mask, se);
    if let Some(&id) = boxes.boxes.keys().find(|&&id| scene.placement(id).is_none()) {
        return Err(LabelError::UnknownInstance(id));
    }
    let cleaned = close_indexed(mask, se);

    let mut instances = Vec::new();
    let mut unseen = Vec::new();
    for p in &scene.placements {
        let Some(&bbox) = boxes.boxes.get(&p.instance_id) else {
            unseen.push(p.instance_id);
            continue;
        };
        let keypoints = joints
            .range((p.instance_id, String::new())..)
            .take_while(|((id, _), _)| *id == p.instance_id)
            .map(|((_, name), &pos)| keypoint(name, pos, p.instance_id, camera, &cleaned))
            .collect();
        let head = joints[&(p.instance_id, HEAD_JOINT.to_string())];
        let head_pose = HeadPose::from_bone_pose(&p.bone_pose);
        let gaze = p.seat.orientation.rotation() * head_pose.orientation().rotation() * Vec3::z();
        instances.push(InstanceRecord {
            instance_id: p.instance_id,
            human_id: p.human_id().to_string(),
            seat_id: p.seat_id().to_string(),
            bbox,
            keypoints,
            distance_to_camera_m: distance_to_camera(head, camera),
            head_pose,
            gaze: [gaze.x, gaze.y, gaze.z],
        });
    }
    instances.sort_by_key(|r| r.instance_id);

    Ok(SampleAnnotation {
        sample_id: scene.sample_id,
        derived_seed: scene.derived_seed,
        image_ref: rgb_file_name(scene.sample_id),
        mask_ref: mask_file_name(scene.sample_id),
        background: scene.background.label(),
        placements: scene.placements.iter().map(PlacementSummary::from).collect(),
        instances,
        unseen_instances: unseen,
    })
}

fn keypoint(name: &str, pos: Vec3, id: u8, camera: &CameraSpec, cleaned: &IndexedMask) -> Keypoint2D {
    let (u, v, visibility) = match project(pos, camera) {
        Ok(p) if p.valid => {
            let owner = cleaned.get(p.u.floor() as u32, p.v.floor() as u32);
            let vis = if owner == id {
                Visibility::Visible
            } else {
                Visibility::Occluded
            };
            (p.u, p.v, vis)
        }
        Ok(p) => (p.u, p.v, Visibility::OutsideFrame),
        Err(_) => {
            let (cx, cy) = camera.principal_point();
            (cx, cy, Visibility::OutsideFrame)
        }
    };
    Keypoint2D {
        name: name.to_string(),
        u,
        v,
        visibility,
    }
}

/// Renders the label text file.
pub fn format_bbox_text(sample_id: u64, records: &[(u8, BoundingBox)]) -> String {
    let mut sorted = records.to_vec();
    sorted.sort_by_key(|r| r.0);
    let mut s = format!("# sample {sample_id}\n");
    for (id, b) in sorted {
        writeln!(s, "{id} {} {} {} {}", b.x, b.y, b.w, b.h).expect("write to String");
    }
    s
}

pub fn write_bbox_textfile(annotation: &SampleAnnotation, path: &Path) -> std::io::Result<()> {
    std::fs::write(
        path,
        format_bbox_text(annotation.sample_id, &annotation.bbox_records()),
    )
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct BboxParseError {
    /// 1-based.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum LabelFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        source: BboxParseError,
    },
}

/// Parsed label text file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BboxFile {
    pub sample_id: u64,
    pub records: Vec<(u8, BoundingBox)>,
}

fn parse_number<T: std::str::FromStr>(tok: &str, what: &str, line: usize) -> Result<T, BboxParseError> {
    let err = |message: String| BboxParseError { line, message };
    if tok.is_empty() || !tok.bytes().all(|b| b.is_ascii_digit()) {
        return Err(err(format!("{what} `{tok}` is not an unsigned integer")));
    }
    if tok.len() > 1 && tok.starts_with('0') {
        return Err(err(format!("{what} `{tok}` has a leading zero")));
    }
    tok.parse()
        .map_err(|_| err(format!("{what} `{tok}` is out of range")))
}

/// Strict inverse of [`format_bbox_text`].
pub fn parse_bbox_text(text: &str) -> Result<BboxFile, BboxParseError> {
    let err = |line: usize, message: &str| BboxParseError {
        line,
        message: message.to_string(),
    };
    if text.is_empty() {
        return Err(err(1, "empty file, expected `# sample <id>` header"));
    }
    if !text.ends_with('\n') {
        let last = text.split('\n').count();
        return Err(err(last, "missing final line feed"));
    }
    let mut lines = text[..text.len() - 1].split('\n').enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().expect("non-empty");
    let Some(id_tok) = header.strip_prefix("# sample ") else {
        return Err(err(1, "expected `# sample <id>` header"));
    };
    let sample_id = parse_number::<u64>(id_tok, "sample id", 1)?;
    let mut records: Vec<(u8, BoundingBox)> = Vec::new();
    for (n, line) in lines {
        let toks: Vec<&str> = line.split(' ').collect();
        if toks.len() != 5 {
            return Err(err(n, "expected `<id> <x> <y> <w> <h>` separated by single spaces"));
        }
        let id = parse_number::<u8>(toks[0], "instance id", n)?;
        let x = parse_number::<u32>(toks[1], "x", n)?;
        let y = parse_number::<u32>(toks[2], "y", n)?;
        let w = parse_number::<u32>(toks[3], "w", n)?;
        let h = parse_number::<u32>(toks[4], "h", n)?;
        if id == 0 {
            return Err(err(n, "instance id 0 is background"));
        }
        if w == 0 || h == 0 {
            return Err(err(n, "width and height must be positive"));
        }
        if x.checked_add(w).is_none() || y.checked_add(h).is_none() {
            return Err(err(n, "box extends past the coordinate range"));
        }
        if records.last().is_some_and(|&(prev, _)| prev >= id) {
            return Err(err(n, "instance ids must be strictly ascending"));
        }
        records.push((id, BoundingBox::new(x, y, w, h)));
    }
    Ok(BboxFile { sample_id, records })
}

/// Reads a label file, returning its records.
pub fn parse_bbox_textfile(path: &Path) -> Result<Vec<(u8, BoundingBox)>, LabelFileError> {
    read_bbox_file(path).map(|f| f.records)
}

pub fn read_bbox_file(path: &Path) -> Result<BboxFile, LabelFileError> {
    let text = std::fs::read(path).map_err(|source| LabelFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let text = String::from_utf8(text).map_err(|_| LabelFileError::Parse {
        path: path.display().to_string(),
        source: BboxParseError {
            line: 1,
            message: "file is not UTF-8".into(),
        },
    })?;
    parse_bbox_text(&text).map_err(|source| LabelFileError::Parse {
        path: path.display().to_string(),
        source,
    })
}

/// One sample as recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSample {
    pub sample_id: u64,
    pub derived_seed: u64,
    pub scene_ref: String,
    pub image_ref: String,
    pub mask_ref: String,
    pub labels_ref: String,
    pub background: String,
    pub placements: Vec<PlacementSummary>,
    pub instances: Vec<InstanceRecord>,
    pub unseen_instances: Vec<u8>,
}

impl From<&SampleAnnotation> for ManifestSample {
    fn from(a: &SampleAnnotation) -> Self {
        Self {
            sample_id: a.sample_id,
            derived_seed: a.derived_seed,
            scene_ref: SceneDescription::file_name(a.sample_id),
            image_ref: a.image_ref.clone(),
            mask_ref: a.mask_ref.clone(),
            labels_ref: labels_file_name(a.sample_id),
            background: a.background.clone(),
            placements: a.placements.clone(),
            instances: a.instances.clone(),
            unseen_instances: a.unseen_instances.clone(),
        }
    }
}

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

/// Dataset provenance record.
///
/// `created_unix` is the only field that varies between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub generator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_unix: Option<u64>,
    pub master_seed: u64,
    pub config_digest: String,
    pub palette: Palette,
    pub camera: CameraSpec,
    pub closing_kernel: usize,
    pub config: GenerationConfig,
    pub samples: Vec<ManifestSample>,
}

impl Manifest {
    pub fn new(config: &GenerationConfig, annotations: &[SampleAnnotation]) -> Self {
        let mut samples: Vec<ManifestSample> = annotations.iter().map(ManifestSample::from).collect();
        samples.sort_by_key(|s| s.sample_id);
        Self {
            format_version: MANIFEST_FORMAT_VERSION,
            generator: concat!("cabinsynth ", env!("CARGO_PKG_VERSION")).to_string(),
            created_unix: None,
            master_seed: config.master_seed,
            config_digest: config.digest(),
            palette: config.palette.clone(),
            camera: config.camera.clone(),
            closing_kernel: config.closing_kernel,
            config: config.clone(),
            samples,
        }
    }

    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn read(path: &Path) -> Result<Self, std::io::Error> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    /// Per-sample annotations as recorded.
    pub fn sample(&self, sample_id: u64) -> Option<&ManifestSample> {
        self.samples.iter().find(|s| s.sample_id == sample_id)
    }

    pub fn bbox_map(&self) -> BTreeMap<u64, Vec<(u8, BoundingBox)>> {
        self.samples
            .iter()
            .map(|s| {
                (
                    s.sample_id,
                    s.instances.iter().map(|r| (r.instance_id, r.bbox)).collect(),
                )
            })
            .collect()
    }
}

/// Writes `manifest.json` content to `path`, stamped with the current time.
pub fn write_manifest(
    config: &GenerationConfig,
    annotations: &[SampleAnnotation],
    path: &Path,
) -> std::io::Result<Manifest> {
    let mut manifest = Manifest::new(config, annotations);
    manifest.created_unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .ok()
        .map(|d| d.as_secs());
    std::fs::write(path, manifest.to_json_pretty())?;
    Ok(manifest)
}
