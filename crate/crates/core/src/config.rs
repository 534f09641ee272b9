//! Generation configuration: the whole randomization space of a dataset.
//!
//! Files are JSON or TOML (picked by extension); keys match the field names
//! below. Optional knobs fall back to the defaults documented on each field.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::camera::{CameraPose, CameraSpec, ImageSize};
use crate::geometry::Orientation;
use crate::mask::Palette;
use crate::sampler::{sample_human_pool, HumanPoolSpec};

/// One failed constraint, addressed by a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed TOML config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("asset list `{0}` is empty")]
    EmptyAssetList(&'static str),
    #[error("invalid slider range `{name}`: need 0 <= min <= max <= 1")]
    BadSliderRange { name: String },
    #[error("human count must be at least 1")]
    ZeroCount,
    #[error("{} violation(s): {}", .0.len(), join_violations(.0))]
    Invalid(Vec<Violation>),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanSpec {
    pub human_id: String,
    /// Named body sliders, each in `[0, 1]`.
    pub attributes: BTreeMap<String, f64>,
    pub clothing_asset: String,
    pub hair_asset: String,
    pub skeleton_ref: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeatSlot {
    pub seat_id: String,
    /// Hip reference point, meters, vehicle frame.
    pub position: [f64; 3],
    pub orientation: Orientation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoneAxis {
    /// Nodding, up and down.
    Vertical,
    /// Turning, left and right.
    Horizontal,
    Roll,
}

impl BoneAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoneAxis::Vertical => "vertical",
            BoneAxis::Horizontal => "horizontal",
            BoneAxis::Roll => "roll",
        }
    }
}

/// Reserved for non-uniform priors; only `uniform` is accepted today.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    #[default]
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationRange {
    pub bone_name: String,
    pub axis: BoneAxis,
    pub min_deg: f64,
    pub max_deg: f64,
    #[serde(default)]
    pub distribution: Distribution,
}

impl RotationRange {
    pub fn new(bone_name: &str, axis: BoneAxis, min_deg: f64, max_deg: f64) -> Self {
        Self {
            bone_name: bone_name.to_string(),
            axis,
            min_deg,
            max_deg,
            distribution: Distribution::Uniform,
        }
    }

    pub fn contains(&self, angle_deg: f64) -> bool {
        self.min_deg <= angle_deg && angle_deg <= self.max_deg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightKind {
    HdriBackground,
    Point,
    Spot,
    Directional,
    Area,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightingPreset {
    pub kind: LightKind,
    pub intensity: f64,
    /// When present, the sampled intensity is drawn from `[min, max]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensity_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cone_angle_deg: Option<f64>,
    /// Width x height, meters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area_size: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hdri_ref: Option<String>,
}

impl LightingPreset {
    fn bare(kind: LightKind, intensity: f64) -> Self {
        Self {
            kind,
            intensity,
            intensity_range: None,
            position: None,
            direction: None,
            cone_angle_deg: None,
            area_size: None,
            hdri_ref: None,
        }
    }

    pub fn violations(&self, prefix: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut missing = |field: &str| {
            out.push(Violation::new(
                format!("{prefix}.{field}"),
                format!("required for {:?} lights", self.kind),
            ))
        };
        let (needs_pos, needs_dir) = match self.kind {
            LightKind::HdriBackground => (false, false),
            LightKind::Point => (true, false),
            LightKind::Spot | LightKind::Area => (true, true),
            LightKind::Directional => (false, true),
        };
        if needs_pos && self.position.is_none() {
            missing("position");
        }
        if needs_dir && self.direction.is_none() {
            missing("direction");
        }
        if self.kind == LightKind::Spot && self.cone_angle_deg.is_none() {
            missing("cone_angle_deg");
        }
        if self.kind == LightKind::Area && self.area_size.is_none() {
            missing("area_size");
        }
        if self.kind == LightKind::HdriBackground && self.hdri_ref.is_none() {
            missing("hdri_ref");
        }
        if !(self.intensity >= 0.0) {
            out.push(Violation::new(
                format!("{prefix}.intensity"),
                "must be non-negative",
            ));
        }
        if let Some([lo, hi]) = self.intensity_range {
            if !(lo >= 0.0 && lo <= hi) {
                out.push(Violation::new(
                    format!("{prefix}.intensity_range"),
                    "need 0 <= min <= max",
                ));
            }
        }
        if let Some(angle) = self.cone_angle_deg {
            if !(angle > 0.0 && angle < 180.0) {
                out.push(Violation::new(
                    format!("{prefix}.cone_angle_deg"),
                    "must lie in (0, 180)",
                ));
            }
        }
        if let Some(d) = self.direction {
            let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            if !((norm - 1.0).abs() <= 1e-9) {
                out.push(Violation::new(
                    format!("{prefix}.direction"),
                    format!("must have unit norm, got {norm}"),
                ));
            }
        }
        if let Some([w, h]) = self.area_size {
            if !(w > 0.0 && h > 0.0) {
                out.push(Violation::new(
                    format!("{prefix}.area_size"),
                    "must be positive",
                ));
            }
        }
        out
    }
}

fn default_occupancy() -> usize {
    5
}

fn default_closing_kernel() -> usize {
    3
}

fn default_polygon_epsilon() -> f64 {
    1.0
}

fn default_noise_rate() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub master_seed: u64,
    pub sample_count: u64,
    pub human_pool: Vec<HumanSpec>,
    pub seat_layout: Vec<SeatSlot>,
    /// Seats filled per sample. Default 5.
    #[serde(default = "default_occupancy")]
    pub occupancy: usize,
    pub pose_ranges: Vec<RotationRange>,
    #[serde(default)]
    pub hdri_pool: Vec<String>,
    #[serde(default)]
    pub light_presets: Vec<LightingPreset>,
    pub camera: CameraSpec,
    pub image_size: ImageSize,
    /// Mask colors for instance ids 1..N. Default: the eight-color palette.
    #[serde(default)]
    pub palette: Palette,
    /// Side of the square closing kernel. Default 3.
    #[serde(default = "default_closing_kernel")]
    pub closing_kernel: usize,
    /// Polygon approximation tolerance in pixels. Default 1.0.
    #[serde(default = "default_polygon_epsilon")]
    pub polygon_epsilon: f64,
    /// Fraction of eligible interior pixels the oracle backend knocks out
    /// to imitate engine mask noise. Default 0.01.
    #[serde(default = "default_noise_rate")]
    pub oracle_noise_rate: f64,
}

impl GenerationConfig {
    pub fn from_json_str(s: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(s)?)
    }

    /// Reads a `.toml` or JSON config. Does not validate.
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => Self::from_toml_str(&text),
            _ => Self::from_json_str(&text),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// SHA-256 over the compact JSON form, lowercase hex.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Background candidates in draw order: HDRIs first, then light presets.
    pub fn background_count(&self) -> usize {
        self.hdri_pool.len() + self.light_presets.len()
    }

    /// A five-seat cabin with a thirty-person pool and a mirror-mounted
    /// 180 degree fisheye.
    pub fn default_cabin() -> Self {
        let pool = sample_human_pool(&HumanPoolSpec::default_sliders(), 30, 0x5eed_cab1)
            .expect("default pool spec is valid");
        let seat = |id: &str, x: f64, z: f64| SeatSlot {
            seat_id: id.to_string(),
            position: [x, 0.55, z],
            orientation: Orientation::new(180.0, 0.0, 0.0),
        };
        let image_size = ImageSize::new(640, 480);
        let mut spot = LightingPreset::bare(LightKind::Spot, 400.0);
        spot.position = Some([0.0, -0.6, 1.2]);
        spot.direction = Some([0.0, 1.0, 0.0]);
        spot.cone_angle_deg = Some(60.0);
        spot.intensity_range = Some([200.0, 600.0]);
        let mut point = LightingPreset::bare(LightKind::Point, 150.0);
        point.position = Some([0.0, -0.5, 1.0]);
        point.intensity_range = Some([50.0, 250.0]);
        let mut sun = LightingPreset::bare(LightKind::Directional, 3.0);
        sun.direction = Some([0.0, 0.6, 0.8]);
        sun.intensity_range = Some([1.0, 5.0]);
        let mut area = LightingPreset::bare(LightKind::Area, 80.0);
        area.position = Some([0.0, -0.65, 1.2]);
        area.direction = Some([0.0, 1.0, 0.0]);
        area.area_size = Some([0.8, 0.5]);
        Self {
            master_seed: 42,
            sample_count: 20,
            human_pool: pool,
            seat_layout: vec![
                seat("front_left", -0.40, 0.80),
                seat("front_right", 0.40, 0.80),
                seat("rear_left", -0.50, 1.60),
                seat("rear_middle", 0.0, 1.60),
                seat("rear_right", 0.50, 1.60),
            ],
            occupancy: 5,
            pose_ranges: vec![
                RotationRange::new("neck", BoneAxis::Vertical, -15.0, 15.0),
                RotationRange::new("neck", BoneAxis::Horizontal, -15.0, 15.0),
                RotationRange::new("upperarm_l", BoneAxis::Vertical, -10.0, 20.0),
                RotationRange::new("upperarm_r", BoneAxis::Vertical, -10.0, 20.0),
                RotationRange::new("spine", BoneAxis::Roll, -5.0, 5.0),
            ],
            hdri_pool: vec![
                "hdri/parking_garage.hdr".into(),
                "hdri/city_street_noon.hdr".into(),
                "hdri/country_road_dusk.hdr".into(),
                "hdri/overcast_highway.hdr".into(),
            ],
            light_presets: vec![point, spot, sun, area],
            camera: CameraSpec {
                image_size,
                pose: CameraPose {
                    position: [0.0, 0.0, 0.0],
                    orientation: Orientation::IDENTITY,
                },
                ..CameraSpec::default()
            },
            image_size,
            palette: Palette::default(),
            closing_kernel: default_closing_kernel(),
            polygon_epsilon: default_polygon_epsilon(),
            oracle_noise_rate: default_noise_rate(),
        }
    }
}

/// Checks every configuration invariant. Empty iff the config is usable.
pub fn validate_config(config: &GenerationConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    if config.sample_count == 0 {
        out.push(Violation::new("sample_count", "must be positive"));
    }
    if config.human_pool.len() < config.occupancy {
        out.push(Violation::new(
            "human_pool",
            format!(
                "has {} humans, fewer than occupancy {}",
                config.human_pool.len(),
                config.occupancy
            ),
        ));
    }
    if config.occupancy > config.seat_layout.len() {
        out.push(Violation::new(
            "occupancy",
            format!(
                "{} exceeds the {} configured seats",
                config.occupancy,
                config.seat_layout.len()
            ),
        ));
    }
    if config.occupancy > config.palette.len() {
        out.push(Violation::new(
            "palette",
            format!(
                "has {} colors, fewer than occupancy {}",
                config.palette.len(),
                config.occupancy
            ),
        ));
    }

    let mut ids = BTreeSet::new();
    for (i, h) in config.human_pool.iter().enumerate() {
        if !ids.insert(h.human_id.as_str()) {
            out.push(Violation::new(
                format!("human_pool[{i}].human_id"),
                format!("duplicate id `{}`", h.human_id),
            ));
        }
        for (name, value) in &h.attributes {
            if !(0.0..=1.0).contains(value) {
                out.push(Violation::new(
                    format!("human_pool[{i}].attributes.{name}"),
                    format!("slider value {value} outside [0, 1]"),
                ));
            }
        }
    }

    let mut seats = BTreeSet::new();
    for (i, s) in config.seat_layout.iter().enumerate() {
        if !seats.insert(s.seat_id.as_str()) {
            out.push(Violation::new(
                format!("seat_layout[{i}].seat_id"),
                format!("duplicate id `{}`", s.seat_id),
            ));
        }
    }

    let mut axes = BTreeSet::new();
    for (i, r) in config.pose_ranges.iter().enumerate() {
        if !(r.min_deg <= r.max_deg) {
            out.push(Violation::new(
                format!("pose_ranges[{i}]"),
                format!(
                    "{} {}: min {} exceeds max {}",
                    r.bone_name,
                    r.axis.as_str(),
                    r.min_deg,
                    r.max_deg
                ),
            ));
        }
        if !axes.insert((r.bone_name.as_str(), r.axis)) {
            out.push(Violation::new(
                format!("pose_ranges[{i}]"),
                format!("duplicate range for {} {}", r.bone_name, r.axis.as_str()),
            ));
        }
    }

    if config.hdri_pool.is_empty() && config.light_presets.is_empty() {
        out.push(Violation::new(
            "hdri_pool",
            "hdri_pool and light_presets are both empty",
        ));
    }
    for (i, l) in config.light_presets.iter().enumerate() {
        out.extend(l.violations(&format!("light_presets[{i}]")));
    }

    out.extend(config.camera.violations("camera"));
    if config.image_size != config.camera.image_size {
        out.push(Violation::new(
            "image_size",
            format!(
                "{}x{} differs from camera.image_size {}x{}",
                config.image_size.width,
                config.image_size.height,
                config.camera.image_size.width,
                config.camera.image_size.height
            ),
        ));
    }

    if let Err(e) = config.palette.check() {
        out.push(Violation::new("palette", e.to_string()));
    }
    if config.closing_kernel == 0 || config.closing_kernel.is_multiple_of(2) {
        out.push(Violation::new("closing_kernel", "must be odd and at least 1"));
    }
    if !(config.polygon_epsilon >= 0.0) {
        out.push(Violation::new("polygon_epsilon", "must be non-negative"));
    }
    if !(0.0..=1.0).contains(&config.oracle_noise_rate) {
        out.push(Violation::new("oracle_noise_rate", "must lie in [0, 1]"));
    }
    out
}
