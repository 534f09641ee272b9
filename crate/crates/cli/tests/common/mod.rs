#![allow(dead_code)]

use std::path::Path;
use std::process::Command;

use cabinsynth_core::camera::ImageSize;
use cabinsynth_core::config::GenerationConfig;

/// Built-in cabin with fewer samples and a smaller frame.
pub fn small_config(count: u64, width: u32, height: u32) -> GenerationConfig {
    let mut c = GenerationConfig::default_cabin();
    c.sample_count = count;
    c.image_size = ImageSize::new(width, height);
    c.camera.image_size = c.image_size;
    c
}

pub fn write_config(dir: &Path, config: &GenerationConfig) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, config.to_json_pretty()).unwrap();
    path
}

pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn cli(args: &[&str]) -> Outcome {
    cli_with_env(args, &[])
}

pub fn cli_with_env(args: &[&str], env: &[(&str, &str)]) -> Outcome {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cabinsynth"));
    cmd.args(args).env_remove("CABINSYNTH_BLENDER");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    Outcome {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn file_names(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}
