//! Distribution report over the placements recorded in a manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use cabinsynth_core::config::{BoneAxis, GenerationConfig};
use cabinsynth_core::labels::{Manifest, PlacementSummary, MANIFEST_FILE};
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

pub const HISTOGRAM_BINS: usize = 20;
pub const STATS_FILE: &str = "stats.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleHistogram {
    pub bone: String,
    pub axis: BoneAxis,
    pub min_deg: f64,
    pub max_deg: f64,
    /// Equal-width bins over `[min_deg, max_deg]`; the last bin is closed.
    pub bins: Vec<u64>,
    /// Angles outside the configured range.
    pub out_of_range: u64,
    pub observed_min: Option<f64>,
    pub observed_max: Option<f64>,
}

impl AngleHistogram {
    fn new(bone: &str, axis: BoneAxis, min_deg: f64, max_deg: f64) -> Self {
        Self {
            bone: bone.to_string(),
            axis,
            min_deg,
            max_deg,
            bins: vec![0; HISTOGRAM_BINS],
            out_of_range: 0,
            observed_min: None,
            observed_max: None,
        }
    }

    fn add(&mut self, angle: f64) {
        self.observed_min = Some(self.observed_min.map_or(angle, |m| m.min(angle)));
        self.observed_max = Some(self.observed_max.map_or(angle, |m| m.max(angle)));
        if !(self.min_deg..=self.max_deg).contains(&angle) {
            self.out_of_range += 1;
            return;
        }
        let span = self.max_deg - self.min_deg;
        let bin = if span > 0.0 {
            (((angle - self.min_deg) / span) * HISTOGRAM_BINS as f64) as usize
        } else {
            0
        };
        self.bins[bin.min(HISTOGRAM_BINS - 1)] += 1;
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().sum::<u64>() + self.out_of_range
    }
}

/// Binomial check of per-human selection counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionBalance {
    pub expected: f64,
    pub sigma: f64,
    pub max_abs_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub sample_count: u64,
    /// Selection count per pool human, including humans never chosen.
    pub humans: BTreeMap<String, u64>,
    pub seats: BTreeMap<String, u64>,
    pub angles: Vec<AngleHistogram>,
    pub selection: Option<SelectionBalance>,
}

/// Tallies the placements of each sample against the config's pool,
/// seats and rotation ranges.
pub fn compute_stats<'a>(
    config: &GenerationConfig,
    samples: impl IntoIterator<Item = &'a [PlacementSummary]>,
) -> DatasetStats {
    let mut humans: BTreeMap<String, u64> = config.human_pool.iter().map(|h| (h.human_id.clone(), 0)).collect();
    let mut seats: BTreeMap<String, u64> = config.seat_layout.iter().map(|s| (s.seat_id.clone(), 0)).collect();
    let mut angles: Vec<AngleHistogram> = config
        .pose_ranges
        .iter()
        .map(|r| AngleHistogram::new(&r.bone_name, r.axis, r.min_deg, r.max_deg))
        .collect();
    let mut n = 0u64;
    for placements in samples {
        n += 1;
        for p in placements {
            *humans.entry(p.human_id.clone()).or_default() += 1;
            *seats.entry(p.seat_id.clone()).or_default() += 1;
            for h in &mut angles {
                if let Some(&a) = p.bone_pose.get(&h.bone).and_then(|axes| axes.get(&h.axis)) {
                    h.add(a);
                }
            }
        }
    }
    let selection = (n > 0 && !config.human_pool.is_empty()).then(|| {
        let p = config.occupancy as f64 / config.human_pool.len() as f64;
        let expected = n as f64 * p;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        let max_abs_z = humans
            .values()
            .map(|&c| if sigma > 0.0 { (c as f64 - expected).abs() / sigma } else { 0.0 })
            .fold(0.0, f64::max);
        SelectionBalance {
            expected,
            sigma,
            max_abs_z,
        }
    });
    DatasetStats {
        sample_count: n,
        humans,
        seats,
        angles,
        selection,
    }
}

pub fn stats_of_manifest(manifest: &Manifest) -> DatasetStats {
    compute_stats(&manifest.config, manifest.samples.iter().map(|s| s.placements.as_slice()))
}

/// Reads the manifest, writes `stats.json` and returns the report.
pub fn cmd_stats(dir: &Path) -> Result<DatasetStats> {
    let path = dir.join(MANIFEST_FILE);
    let manifest = Manifest::read(&path).map_err(|e| PipelineError::io(&path, e))?;
    let stats = stats_of_manifest(&manifest);
    let out = dir.join(STATS_FILE);
    let mut json = serde_json::to_string_pretty(&stats).expect("stats serialize");
    json.push('\n');
    std::fs::write(&out, json).map_err(|e| PipelineError::io(&out, e))?;
    Ok(stats)
}

pub fn render_table(stats: &DatasetStats) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "samples: {}", stats.sample_count);
    if let Some(b) = &stats.selection {
        let _ = writeln!(
            s,
            "selection: expected {:.1} per human, sigma {:.2}, max |z| {:.2}",
            b.expected, b.sigma, b.max_abs_z
        );
    }
    let _ = writeln!(s, "\n{:<24} {:>8}", "human", "count");
    for (h, c) in &stats.humans {
        let _ = writeln!(s, "{h:<24} {c:>8}");
    }
    let _ = writeln!(s, "\n{:<24} {:>8}", "seat", "count");
    for (seat, c) in &stats.seats {
        let _ = writeln!(s, "{seat:<24} {c:>8}");
    }
    for h in &stats.angles {
        let _ = writeln!(
            s,
            "\n{} {} in [{}, {}] deg, {} outside",
            h.bone,
            h.axis.as_str(),
            h.min_deg,
            h.max_deg,
            h.out_of_range
        );
        let width = (h.max_deg - h.min_deg) / HISTOGRAM_BINS as f64;
        for (i, c) in h.bins.iter().enumerate() {
            let lo = h.min_deg + width * i as f64;
            let _ = writeln!(s, "  {:>8.2} .. {:>8.2} {:>8}", lo, lo + width, c);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_edges() {
        let mut h = AngleHistogram::new("neck", BoneAxis::Vertical, -10.0, 10.0);
        for a in [-10.0, 10.0, 0.0, 9.99, 10.5] {
            h.add(a);
        }
        assert_eq!(h.bins[0], 1);
        assert_eq!(h.bins[10], 1);
        assert_eq!(h.bins[19], 2);
        assert_eq!(h.out_of_range, 1);
        assert_eq!(h.total(), 5);
    }

    #[test]
    fn zero_samples_give_empty_tallies() {
        let config = GenerationConfig::default_cabin();
        let stats = compute_stats(&config, std::iter::empty());
        assert_eq!(stats.sample_count, 0);
        assert!(stats.humans.values().all(|&c| c == 0));
        assert!(stats.angles.iter().all(|h| h.total() == 0));
        assert!(stats.selection.is_none());
    }
}
