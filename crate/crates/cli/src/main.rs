use std::path::PathBuf;
use std::process::ExitCode;

use cabinsynth::stats::{render_table, STATS_FILE};
use cabinsynth::{
    cmd_annotate, cmd_gen_scenes, cmd_render, cmd_run, cmd_stats, cmd_validate, BackendKind,
    PipelineError, PipelineRun,
};
use clap::{Args, Parser, Subcommand};

/// Synthetic in-cabin occupancy dataset generator.
#[derive(Parser)]
#[command(name = "cabinsynth", version)]
struct Cli {
    #[command(subcommand)]
    stage: Stage,
}

#[derive(Subcommand)]
enum Stage {
    /// Sample scene descriptions.
    GenScenes(Common),
    /// Render RGB and mask images for every scene.
    Render(Common),
    /// Build label files and the manifest from scenes and masks.
    Annotate(Common),
    /// gen-scenes, render and annotate.
    Run(Common),
    /// Check a dataset directory; exit 1 on any issue.
    Validate(Common),
    /// Report selection and pose distributions.
    Stats(Common),
}

#[derive(Args)]
struct Common {
    /// Generation config (.json or .toml). Defaults to the one stored in
    /// the output directory, then to the built-in cabin.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "oracle")]
    backend: BackendKind,
    /// Worker threads; defaults to the available cores.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
    /// Overrides master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides sample_count.
    #[arg(long)]
    count: Option<u64>,
    /// Asset root passed to the external renderer (default: $CABINSYNTH_ASSETS or ./assets).
    #[arg(long)]
    assets: Option<PathBuf>,
}

impl Common {
    fn run(self) -> PipelineRun {
        let jobs = self.jobs.map(|j| j as usize).unwrap_or_else(|| {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        });
        PipelineRun {
            config_path: self.config,
            out_dir: self.out,
            backend: self.backend,
            jobs,
            seed: self.seed,
            count: self.count,
            assets: self.assets,
        }
    }
}

fn execute(stage: Stage) -> Result<(), PipelineError> {
    match stage {
        Stage::GenScenes(c) => {
            let files = cmd_gen_scenes(&c.run())?;
            println!("wrote {} scene files", files.len());
        }
        Stage::Render(c) => {
            let ids = cmd_render(&c.run())?;
            println!("rendered {} samples", ids.len());
        }
        Stage::Annotate(c) => {
            let manifest = cmd_annotate(&c.run())?;
            println!("annotated {} samples", manifest.samples.len());
        }
        Stage::Run(c) => {
            let manifest = cmd_run(&c.run())?;
            println!("generated {} samples", manifest.samples.len());
        }
        Stage::Validate(c) => {
            let run = c.run();
            let report = cmd_validate(&run.out_dir, run.jobs);
            for issue in &report.issues {
                println!("{issue}");
            }
            println!(
                "checked {} samples, {} issue(s)",
                report.samples_checked,
                report.issues.len()
            );
            if !report.is_clean() {
                return Err(PipelineError::Validation(report.issues.len()));
            }
        }
        Stage::Stats(c) => {
            let run = c.run();
            let stats = cmd_stats(&run.out_dir)?;
            print!("{}", render_table(&stats));
            println!("\nwrote {}", run.out_dir.join(STATS_FILE).display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.stage) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
