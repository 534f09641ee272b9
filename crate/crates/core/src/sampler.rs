//! Seeded sampling of human pools and per-sample scene descriptions.
//!
//! Every scene draws from its own stream seeded with
//! [`derive_seed`]`(master_seed, sample_index)`, so samples are independent
//! of generation order. Within one scene the draw order is fixed:
//!
//! 1. `occupancy` humans, partial Fisher-Yates over the pool;
//! 2. `occupancy` seats the same way, then sorted into layout order, so the
//!    k-th drawn human sits in the k-th chosen seat;
//! 3. for each placement, one angle per configured rotation range, in
//!    config order;
//! 4. the background index over `hdri_pool ++ light_presets`, then the
//!    light intensity when the chosen preset carries a range.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{CameraSpec, ImageSize};
use crate::config::{
    validate_config, BoneAxis, ConfigError, GenerationConfig, HumanSpec, LightingPreset, SeatSlot,
    Violation,
};
use crate::mask::Palette;
use crate::rng::{derive_seed, SampleRng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("sample index {index} out of range for sample_count {count}")]
    IndexOutOfRange { index: u64, count: u64 },
    #[error("config has {} violation(s)", .0.len())]
    InvalidConfig(Vec<Violation>),
}

/// Ranges for randomly generated people.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanPoolSpec {
    /// Slider name to `[min, max]`, both within `[0, 1]`.
    pub slider_ranges: BTreeMap<String, [f64; 2]>,
    pub clothing_assets: Vec<String>,
    pub hair_assets: Vec<String>,
    pub skeleton_ref: String,
}

impl HumanPoolSpec {
    pub fn default_sliders() -> Self {
        let ranges = [
            ("height", [0.15, 0.95]),
            ("width", [0.2, 0.8]),
            ("proportions", [0.3, 0.7]),
            ("eye_size", [0.3, 0.7]),
            ("mouth", [0.3, 0.7]),
            ("forehead", [0.3, 0.7]),
        ];
        Self {
            slider_ranges: ranges
                .iter()
                .map(|(k, r)| (k.to_string(), *r))
                .collect(),
            clothing_assets: ["casual_shirt", "hoodie", "suit_jacket", "tshirt", "dress"]
                .iter()
                .map(|c| format!("clothing/{c}"))
                .collect(),
            hair_assets: ["short", "long", "bald", "ponytail", "curly"]
                .iter()
                .map(|h| format!("hair/{h}"))
                .collect(),
            skeleton_ref: "rigs/cmu_mb.json".to_string(),
        }
    }
}

/// Draws `count` people, sliders uniform within their ranges.
///
/// Ids are `human_000`, `human_001`, ...; per human the draws are the
/// sliders in name order, then clothing, then hair.
pub fn sample_human_pool(
    spec: &HumanPoolSpec,
    count: usize,
    seed: u64,
) -> Result<Vec<HumanSpec>, ConfigError> {
    if spec.clothing_assets.is_empty() {
        return Err(ConfigError::EmptyAssetList("clothing_assets"));
    }
    if spec.hair_assets.is_empty() {
        return Err(ConfigError::EmptyAssetList("hair_assets"));
    }
    if count == 0 {
        return Err(ConfigError::ZeroCount);
    }
    for (name, &[lo, hi]) in &spec.slider_ranges {
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(ConfigError::BadSliderRange { name: name.clone() });
        }
    }
    let mut rng = SampleRng::new(seed);
    let humans = (0..count)
        .map(|i| {
            let attributes = spec
                .slider_ranges
                .iter()
                .map(|(name, &[lo, hi])| (name.clone(), rng.uniform(lo, hi)))
                .collect();
            let clothing = &spec.clothing_assets[rng.below(spec.clothing_assets.len() as u64) as usize];
            let hair = &spec.hair_assets[rng.below(spec.hair_assets.len() as u64) as usize];
            HumanSpec {
                human_id: format!("human_{i:03}"),
                attributes,
                clothing_asset: clothing.clone(),
                hair_asset: hair.clone(),
                skeleton_ref: spec.skeleton_ref.clone(),
            }
        })
        .collect();
    Ok(humans)
}

/// Per-bone, per-axis angles in degrees.
pub type BonePose = BTreeMap<String, BTreeMap<BoneAxis, f64>>;

/// One person in one seat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    /// Mask instance id, 1-based.
    pub instance_id: u8,
    pub seat: SeatSlot,
    pub human: HumanSpec,
    pub bone_pose: BonePose,
}

impl Placement {
    pub fn seat_id(&self) -> &str {
        &self.seat.seat_id
    }

    pub fn human_id(&self) -> &str {
        &self.human.human_id
    }

    /// Sampled angle, or 0 when the bone/axis is not randomized.
    pub fn angle(&self, bone: &str, axis: BoneAxis) -> f64 {
        self.bone_pose
            .get(bone)
            .and_then(|axes| axes.get(&axis))
            .copied()
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Background {
    Hdri {
        hdri_ref: String,
    },
    Light {
        preset_index: usize,
        preset: LightingPreset,
        /// Sampled intensity.
        intensity: f64,
    },
}

impl Background {
    /// Stable label used for tinting and statistics.
    pub fn label(&self) -> String {
        match self {
            Background::Hdri { hdri_ref } => hdri_ref.clone(),
            Background::Light { preset_index, .. } => format!("light_presets[{preset_index}]"),
        }
    }
}

/// A fully resolved sample, independent of any renderer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDescription {
    pub sample_id: u64,
    pub derived_seed: u64,
    pub placements: Vec<Placement>,
    pub background: Background,
    pub camera: CameraSpec,
    pub image_size: ImageSize,
    /// Colors a renderer must use for instance ids in the mask file.
    pub mask_palette: Palette,
}

impl SceneDescription {
    pub fn file_name(sample_id: u64) -> String {
        format!("scene_{sample_id:06}.json")
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scene serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn placement(&self, instance_id: u8) -> Option<&Placement> {
        self.placements.iter().find(|p| p.instance_id == instance_id)
    }
}

/// Resolves sample `sample_index` of `config`.
pub fn sample_scene(
    config: &GenerationConfig,
    sample_index: u64,
) -> Result<SceneDescription, SamplerError> {
    let violations = validate_config(config);
    if !violations.is_empty() {
        return Err(SamplerError::InvalidConfig(violations));
    }
    sample_scene_unchecked(config, sample_index)
}

/// [`sample_scene`] without re-validating the config; for tight loops over
/// a config that already passed [`validate_config`].
pub fn sample_scene_unchecked(
    config: &GenerationConfig,
    sample_index: u64,
) -> Result<SceneDescription, SamplerError> {
    if sample_index >= config.sample_count {
        return Err(SamplerError::IndexOutOfRange {
            index: sample_index,
            count: config.sample_count,
        });
    }
    let derived_seed = derive_seed(config.master_seed, sample_index);
    let mut rng = SampleRng::new(derived_seed);
    let k = config.occupancy;

    let humans = rng.choose_distinct(config.human_pool.len(), k);
    let mut seats = rng.choose_distinct(config.seat_layout.len(), k);
    seats.sort_unstable();

    let placements = humans
        .iter()
        .zip(&seats)
        .enumerate()
        .map(|(i, (&h, &s))| {
            let mut bone_pose = BonePose::new();
            for range in &config.pose_ranges {
                let angle = rng.uniform(range.min_deg, range.max_deg);
                bone_pose
                    .entry(range.bone_name.clone())
                    .or_default()
                    .insert(range.axis, angle);
            }
            Placement {
                instance_id: (i + 1) as u8,
                seat: config.seat_layout[s].clone(),
                human: config.human_pool[h].clone(),
                bone_pose,
            }
        })
        .collect();

    let pick = rng.below(config.background_count() as u64) as usize;
    let background = if pick < config.hdri_pool.len() {
        Background::Hdri {
            hdri_ref: config.hdri_pool[pick].clone(),
        }
    } else {
        let preset_index = pick - config.hdri_pool.len();
        let preset = config.light_presets[preset_index].clone();
        let intensity = match preset.intensity_range {
            Some([lo, hi]) => rng.uniform(lo, hi),
            None => preset.intensity,
        };
        Background::Light {
            preset_index,
            preset,
            intensity,
        }
    };

    Ok(SceneDescription {
        sample_id: sample_index,
        derived_seed,
        placements,
        background,
        camera: config.camera.clone(),
        image_size: config.image_size,
        mask_palette: config.palette.clone(),
    })
}
