//! Pipeline stages. All stages communicate through files in one directory.

use std::path::{Path, PathBuf};

use cabinsynth_core::config::{validate_config, GenerationConfig};
use cabinsynth_core::labels::{
    build_annotations, labels_file_name, mask_file_name, rgb_file_name, write_bbox_textfile,
    write_manifest, Manifest, SampleAnnotation, MANIFEST_FILE,
};
use cabinsynth_core::mask::{read_mask_png, StructuringElement};
use cabinsynth_core::render::joints_of;
use cabinsynth_core::sampler::{sample_scene_unchecked, SceneDescription};
use rayon::prelude::*;

use crate::backend::{Backend, BackendKind, EngineInvocation, RenderTarget};
use crate::error::{PipelineError, Result};

/// Resolved config written next to the scenes by `gen-scenes`.
pub const CONFIG_FILE: &str = "generation_config.json";

/// Settings shared by every stage.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub config_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub backend: BackendKind,
    pub jobs: usize,
    pub seed: Option<u64>,
    pub count: Option<u64>,
    pub assets: Option<PathBuf>,
}

impl PipelineRun {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            config_path: None,
            out_dir: out_dir.into(),
            backend: BackendKind::Oracle,
            jobs: 1,
            seed: None,
            count: None,
            assets: None,
        }
    }

    /// Loads the config from `--config`, else from the dataset directory,
    /// else the built-in cabin; applies overrides and validates.
    pub fn load_config(&self) -> Result<GenerationConfig> {
        let stored = self.out_dir.join(CONFIG_FILE);
        let path = match &self.config_path {
            Some(p) => Some(p.clone()),
            None => stored.is_file().then_some(stored),
        };
        let mut config = match path {
            Some(p) => GenerationConfig::from_path(&p)
                .map_err(|e| PipelineError::ConfigLoad(format!("{}: {e}", p.display())))?,
            None => GenerationConfig::default_cabin(),
        };
        if let Some(seed) = self.seed {
            config.master_seed = seed;
        }
        if let Some(count) = self.count {
            config.sample_count = count;
        }
        let violations = validate_config(&config);
        if !violations.is_empty() {
            return Err(PipelineError::Config(violations));
        }
        Ok(config)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs.max(1))
            .build()
            .map_err(|e| PipelineError::ConfigLoad(format!("cannot start {} workers: {e}", self.jobs)))
    }

    fn backend(&self, config: &GenerationConfig) -> Result<Backend> {
        Ok(match self.backend {
            BackendKind::Oracle => Backend::Oracle {
                noise_rate: config.oracle_noise_rate,
            },
            BackendKind::Blender => Backend::Engine(EngineInvocation::from_env(self.assets.as_deref())?),
        })
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| PipelineError::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| PipelineError::io(path, e))
}

/// Parses `scene_NNNNNN.json` into its sample id.
pub fn scene_id_of(name: &str) -> Option<u64> {
    let digits = name.strip_prefix("scene_")?.strip_suffix(".json")?;
    if digits.len() < 6 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Sample ids of the scene files in `dir`, ascending.
pub fn list_scenes(dir: &Path) -> Result<Vec<u64>> {
    let entries = std::fs::read_dir(dir).map_err(|e| PipelineError::io(dir, e))?;
    let mut ids = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| PipelineError::io(dir, e))?;
        if let Some(id) = entry.file_name().to_str().and_then(scene_id_of) {
            ids.push(id);
        }
    }
    ids.sort_unstable();
    Ok(ids)
}

pub fn read_scene(dir: &Path, sample_id: u64) -> Result<SceneDescription> {
    let path = dir.join(SceneDescription::file_name(sample_id));
    let text = std::fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
    SceneDescription::from_json(&text).map_err(|e| {
        PipelineError::DataMismatch(format!("sample {sample_id}: {}: {e}", path.display()))
    })
}

/// Writes one scene file per sample plus the resolved config. Scene files
/// from an earlier, larger run are removed.
pub fn cmd_gen_scenes(run: &PipelineRun) -> Result<Vec<PathBuf>> {
    let config = run.load_config()?;
    create_dir(&run.out_dir)?;
    write(&run.out_dir.join(CONFIG_FILE), config.to_json_pretty())?;
    for stale in list_scenes(&run.out_dir)?.into_iter().filter(|&id| id >= config.sample_count) {
        let path = run.out_dir.join(SceneDescription::file_name(stale));
        std::fs::remove_file(&path).map_err(|e| PipelineError::io(&path, e))?;
    }
    let pool = run.pool()?;
    pool.install(|| {
        (0..config.sample_count)
            .into_par_iter()
            .map(|id| {
                let scene = sample_scene_unchecked(&config, id)
                    .map_err(|e| PipelineError::ConfigLoad(e.to_string()))?;
                let path = run.out_dir.join(SceneDescription::file_name(id));
                write(&path, scene.to_json_pretty())?;
                Ok(path)
            })
            .collect()
    })
}

/// Renders every scene in the output directory; returns the sample ids.
pub fn cmd_render(run: &PipelineRun) -> Result<Vec<u64>> {
    let config = run.load_config()?;
    let backend = run.backend(&config)?;
    let ids = list_scenes(&run.out_dir)?;
    let dir = &run.out_dir;
    run.pool()?.install(|| {
        ids.par_iter().try_for_each(|&id| {
            let scene = read_scene(dir, id)?;
            let scene_path = dir.join(SceneDescription::file_name(id));
            let rgb_path = dir.join(rgb_file_name(id));
            let mask_path = dir.join(mask_file_name(id));
            backend.render(
                &scene,
                &RenderTarget {
                    scene_path: &scene_path,
                    rgb_path: &rgb_path,
                    mask_path: &mask_path,
                },
            )
        })
    })?;
    Ok(ids)
}

/// Labels one rendered sample.
pub fn annotate_sample(
    dir: &Path,
    config: &GenerationConfig,
    sample_id: u64,
) -> Result<SampleAnnotation> {
    let scene = read_scene(dir, sample_id)?;
    let mask_path = dir.join(mask_file_name(sample_id));
    if !mask_path.is_file() {
        return Err(PipelineError::DataMismatch(format!(
            "sample {sample_id}: mask file {} is missing",
            mask_path.display()
        )));
    }
    let split = read_mask_png(&mask_path, &config.palette)
        .map_err(|e| PipelineError::DataMismatch(format!("sample {sample_id}: {e}")))?;
    if split.unknown_pixels > 0 {
        return Err(PipelineError::DataMismatch(format!(
            "sample {sample_id}: {} mask pixels carry colors outside the palette",
            split.unknown_pixels
        )));
    }
    let se = StructuringElement::square(config.closing_kernel)
        .map_err(|e| PipelineError::ConfigLoad(e.to_string()))?;
    build_annotations(&scene, &split.mask, &scene.camera, &joints_of(&scene), se)
        .map_err(|e| PipelineError::DataMismatch(format!("sample {sample_id}: {e}")))
}

/// Writes a labels file per scene and the manifest.
pub fn cmd_annotate(run: &PipelineRun) -> Result<Manifest> {
    let config = run.load_config()?;
    let dir = &run.out_dir;
    let ids = list_scenes(dir)?;
    let annotations: Vec<SampleAnnotation> = run.pool()?.install(|| {
        ids.par_iter()
            .map(|&id| {
                let annotation = annotate_sample(dir, &config, id)?;
                let path = dir.join(labels_file_name(id));
                write_bbox_textfile(&annotation, &path).map_err(|e| PipelineError::io(&path, e))?;
                Ok(annotation)
            })
            .collect::<Result<_>>()
    })?;
    let path = dir.join(MANIFEST_FILE);
    write_manifest(&config, &annotations, &path).map_err(|e| PipelineError::io(&path, e))
}

/// gen-scenes, render and annotate in sequence.
pub fn cmd_run(run: &PipelineRun) -> Result<Manifest> {
    cmd_gen_scenes(run)?;
    // Later stages read the config written by gen-scenes so overrides stick.
    let stored = PipelineRun {
        config_path: Some(run.out_dir.join(CONFIG_FILE)),
        seed: None,
        count: None,
        ..run.clone()
    };
    cmd_render(&stored)?;
    cmd_annotate(&stored)
}
