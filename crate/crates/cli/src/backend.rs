//! Render backends: the built-in oracle and an external 3D engine.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::Command;

use cabinsynth_core::mask::{encode_rgb_png, palette_render};
use cabinsynth_core::render::{inject_holes, render_scene};
use cabinsynth_core::rng::mix64;
use cabinsynth_core::sampler::SceneDescription;

use crate::error::{PipelineError, Result};

/// Path of the external renderer executable.
pub const ENGINE_ENV: &str = "CABINSYNTH_BLENDER";
/// Path of the adapter script handed to the engine. Default: `adapter.py`.
pub const ADAPTER_ENV: &str = "CABINSYNTH_BLENDER_ADAPTER";
/// Asset root handed to the adapter when `--assets` is absent. Default: `assets`.
pub const ASSETS_ENV: &str = "CABINSYNTH_ASSETS";

const NOISE_SALT: u64 = 0x6e6f_6973_655f_6d6b;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BackendKind {
    Oracle,
    Blender,
}

/// Output locations for one sample.
#[derive(Debug, Clone)]
pub struct RenderTarget<'a> {
    pub scene_path: &'a Path,
    pub rgb_path: &'a Path,
    pub mask_path: &'a Path,
}

/// A backend ready to render samples.
#[derive(Debug, Clone)]
pub enum Backend {
    Oracle { noise_rate: f64 },
    Engine(EngineInvocation),
}

impl Backend {
    pub fn render(&self, scene: &SceneDescription, target: &RenderTarget) -> Result<()> {
        match self {
            Backend::Oracle { noise_rate } => render_oracle(scene, *noise_rate, target),
            Backend::Engine(engine) => engine.run(scene.sample_id, target),
        }
    }
}

/// Seed of the hole pattern for a sample.
pub fn noise_seed(derived_seed: u64) -> u64 {
    mix64(derived_seed ^ NOISE_SALT)
}

fn render_oracle(scene: &SceneDescription, noise_rate: f64, target: &RenderTarget) -> Result<()> {
    let rendered = render_scene(scene);
    let noisy = inject_holes(&rendered.mask, noise_rate, noise_seed(scene.derived_seed));
    let mask_png = encode_rgb_png(&palette_render(&noisy, &scene.mask_palette));
    std::fs::write(target.rgb_path, encode_rgb_png(&rendered.rgb))
        .map_err(|e| PipelineError::io(target.rgb_path, e))?;
    std::fs::write(target.mask_path, mask_png).map_err(|e| PipelineError::io(target.mask_path, e))
}

/// How the external engine is launched:
/// `<engine> --background --python <adapter> -- --scene <json> --assets <dir> --rgb <png> --mask <png>`.
#[derive(Debug, Clone)]
pub struct EngineInvocation {
    pub engine: PathBuf,
    pub adapter: PathBuf,
    pub assets: PathBuf,
}

impl EngineInvocation {
    /// Resolves the engine from the environment and checks that it exists.
    pub fn from_env(assets: Option<&Path>) -> Result<Self> {
        Self::resolve(
            std::env::var_os(ENGINE_ENV),
            std::env::var_os(ADAPTER_ENV),
            assets
                .map(|p| p.as_os_str().to_owned())
                .or_else(|| std::env::var_os(ASSETS_ENV)),
        )
    }

    pub fn resolve(
        engine: Option<OsString>,
        adapter: Option<OsString>,
        assets: Option<OsString>,
    ) -> Result<Self> {
        let engine = engine.filter(|s| !s.is_empty()).ok_or_else(|| PipelineError::BackendMissing {
            message: format!("{ENGINE_ENV} is not set"),
            hint: format!(
                "set {ENGINE_ENV} to the Blender executable, e.g. {ENGINE_ENV}=/opt/blender/blender, \
                 or use --backend oracle"
            ),
        })?;
        let engine = find_executable(Path::new(&engine)).ok_or_else(|| PipelineError::BackendMissing {
            message: format!("renderer executable {} not found", Path::new(&engine).display()),
            hint: format!("point {ENGINE_ENV} at an existing Blender executable"),
        })?;
        let adapter = PathBuf::from(adapter.unwrap_or_else(|| "adapter.py".into()));
        if !adapter.is_file() {
            return Err(PipelineError::BackendMissing {
                message: format!("adapter script {} not found", adapter.display()),
                hint: format!("set {ADAPTER_ENV} to the path of the render adapter script"),
            });
        }
        let assets = PathBuf::from(assets.unwrap_or_else(|| "assets".into()));
        Ok(Self {
            engine,
            adapter,
            assets,
        })
    }

    pub fn command(&self, target: &RenderTarget) -> Command {
        let mut cmd = Command::new(&self.engine);
        cmd.arg("--background")
            .arg("--python")
            .arg(&self.adapter)
            .arg("--")
            .arg("--scene")
            .arg(target.scene_path)
            .arg("--assets")
            .arg(&self.assets)
            .arg("--rgb")
            .arg(target.rgb_path)
            .arg("--mask")
            .arg(target.mask_path);
        cmd
    }

    fn run(&self, sample: u64, target: &RenderTarget) -> Result<()> {
        let failed = |message: String| PipelineError::BackendFailed { sample, message };
        let output = self
            .command(target)
            .output()
            .map_err(|e| failed(format!("cannot start {}: {e}", self.engine.display())))?;
        if !output.status.success() {
            let stderr = String::from_utf8_lossy(&output.stderr);
            let tail: Vec<&str> = stderr.lines().rev().take(20).collect();
            let tail: Vec<&str> = tail.into_iter().rev().collect();
            return Err(failed(format!("{} exited with {}\n{}", self.engine.display(), output.status, tail.join("\n"))));
        }
        for path in [target.rgb_path, target.mask_path] {
            if !path.is_file() {
                return Err(failed(format!("renderer did not write {}", path.display())));
            }
        }
        Ok(())
    }
}

/// Bare names are looked up on `PATH`.
fn find_executable(name: &Path) -> Option<PathBuf> {
    if name.components().count() > 1 || name.is_absolute() {
        return name.is_file().then(|| name.to_path_buf());
    }
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path)
        .map(|dir| dir.join(name))
        .find(|p| p.is_file())
}
