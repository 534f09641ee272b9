//! Building blocks for reproducible synthetic in-cabin occupancy datasets.
//!
//! - [`sampler`] turns a seeded [`config::GenerationConfig`] into per-sample
//!   [`sampler::SceneDescription`]s.
//! - [`camera`] is the equisolid fisheye model used for labels and by the
//!   oracle renderer.
//! - [`mask`] cleans instance masks (closing) and extracts contours,
//!   polygons and bounding boxes.
//! - [`labels`] assembles per-sample annotations and reads/writes the label
//!   text files and the dataset manifest.
//! - [`render`] is a CPU ray caster over ellipsoid body proxies, so the
//!   whole pipeline runs without a 3D engine.

// Negated comparisons make NaN fail range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod camera;
pub mod config;
pub mod geometry;
pub mod labels;
pub mod mask;
pub mod render;
pub mod rng;
pub mod sampler;
