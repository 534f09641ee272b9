//! Equisolid fisheye camera: `r = 2 f sin(theta / 2)`.
//!
//! The principal point sits at the image center and pixels are square, with
//! `image_width / sensor_width_mm` pixels per millimeter. Pixel `(i, j)`
//! covers the continuous square `[i, i+1) x [j, j+1)`, so the principal
//! point of a 640x480 image is `(320.0, 240.0)`.

use nalgebra::Rotation3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Violation;
use crate::geometry::{vec3, Orientation, Vec3};

/// Rounding slack when comparing incidence angles against the FOV edge.
const ANGLE_SLACK_RAD: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CameraError {
    #[error("field of view must lie in (0, 360] degrees, got {0}")]
    FovDomain(f64),
    #[error("sensor width and focal length must be positive")]
    NonPositiveIntrinsics,
    #[error("point coincides with the camera center")]
    DegenerateInput,
    #[error("pixel ({u}, {v}) lies outside the field of view")]
    OutOfFov { u: f64, v: f64 },
    #[error("pixel ({u}, {v}) lies outside the {width}x{height} frame")]
    OutsideFrame { u: f64, v: f64, width: u32, height: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageSize {
    pub width: u32,
    pub height: u32,
}

impl ImageSize {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

impl Default for ImageSize {
    fn default() -> Self {
        Self::new(640, 480)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LensModel {
    #[default]
    EquisolidFisheye,
}

/// Camera placement in the vehicle frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CameraPose {
    /// Meters.
    pub position: [f64; 3],
    pub orientation: Orientation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    #[serde(default)]
    pub model: LensModel,
    #[serde(default = "default_fov")]
    pub fov_deg: f64,
    #[serde(default = "default_sensor_width")]
    pub sensor_width_mm: f64,
    /// Overrides the value derived from FOV and sensor width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focal_length_mm: Option<f64>,
    pub image_size: ImageSize,
    #[serde(default)]
    pub pose: CameraPose,
}

fn default_fov() -> f64 {
    180.0
}

fn default_sensor_width() -> f64 {
    5.3
}

impl Default for CameraSpec {
    fn default() -> Self {
        Self {
            model: LensModel::EquisolidFisheye,
            fov_deg: default_fov(),
            sensor_width_mm: default_sensor_width(),
            focal_length_mm: None,
            image_size: ImageSize::default(),
            pose: CameraPose::default(),
        }
    }
}

/// Projection of a 3D point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
    /// Inside the field of view and inside the frame.
    pub valid: bool,
}

/// Focal length that puts the half-FOV ray on the sensor half-width.
pub fn focal_from_fov(fov_deg: f64, sensor_width_mm: f64) -> Result<f64, CameraError> {
    if !(fov_deg > 0.0 && fov_deg <= 360.0) {
        return Err(CameraError::FovDomain(fov_deg));
    }
    if !(sensor_width_mm > 0.0) {
        return Err(CameraError::NonPositiveIntrinsics);
    }
    Ok((sensor_width_mm / 2.0) / (2.0 * (fov_deg / 4.0).to_radians().sin()))
}

impl CameraSpec {
    pub fn focal_length(&self) -> Result<f64, CameraError> {
        match self.focal_length_mm {
            Some(f) if f > 0.0 => Ok(f),
            Some(_) => Err(CameraError::NonPositiveIntrinsics),
            None => focal_from_fov(self.fov_deg, self.sensor_width_mm),
        }
    }

    pub fn pixels_per_mm(&self) -> f64 {
        self.image_size.width as f64 / self.sensor_width_mm
    }

    pub fn principal_point(&self) -> (f64, f64) {
        (
            self.image_size.width as f64 / 2.0,
            self.image_size.height as f64 / 2.0,
        )
    }

    pub fn half_fov_rad(&self) -> f64 {
        (self.fov_deg / 2.0).to_radians()
    }

    /// Camera-to-vehicle rotation.
    pub fn rotation(&self) -> Rotation3<f64> {
        self.pose.orientation.rotation()
    }

    pub fn position(&self) -> Vec3 {
        vec3(self.pose.position)
    }

    pub fn to_camera_frame(&self, point_world: Vec3) -> Vec3 {
        self.rotation().inverse() * (point_world - self.position())
    }

    pub fn to_world_direction(&self, dir_camera: Vec3) -> Vec3 {
        self.rotation() * dir_camera
    }

    /// Radial sensor distance (mm) of a ray at incidence angle `theta_rad`.
    pub fn sensor_radius_mm(&self, theta_rad: f64) -> Result<f64, CameraError> {
        Ok(2.0 * self.focal_length()? * (theta_rad / 2.0).sin())
    }

    pub fn in_frame(&self, u: f64, v: f64) -> bool {
        u >= 0.0
            && v >= 0.0
            && u < self.image_size.width as f64
            && v < self.image_size.height as f64
    }

    /// Constraint violations, with field paths rooted at `prefix`.
    pub fn violations(&self, prefix: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.fov_deg > 0.0 && self.fov_deg <= 360.0) {
            out.push(Violation::new(
                format!("{prefix}.fov_deg"),
                format!("must lie in (0, 360], got {}", self.fov_deg),
            ));
        }
        if !(self.sensor_width_mm > 0.0) {
            out.push(Violation::new(
                format!("{prefix}.sensor_width_mm"),
                "must be positive",
            ));
        }
        if let Some(f) = self.focal_length_mm {
            if !(f > 0.0) {
                out.push(Violation::new(
                    format!("{prefix}.focal_length_mm"),
                    "must be positive",
                ));
            }
        }
        if self.image_size.width == 0 || self.image_size.height == 0 {
            out.push(Violation::new(
                format!("{prefix}.image_size"),
                "width and height must be positive",
            ));
        }
        out
    }
}

/// Projects a camera-frame point.
pub fn project_camera_frame(point_cam: Vec3, camera: &CameraSpec) -> Result<PixelPoint, CameraError> {
    let rho = point_cam.x.hypot(point_cam.y);
    if rho == 0.0 && point_cam.z == 0.0 {
        return Err(CameraError::DegenerateInput);
    }
    let theta = rho.atan2(point_cam.z);
    let r_px = camera.sensor_radius_mm(theta)? * camera.pixels_per_mm();
    let (cx, cy) = camera.principal_point();
    let (u, v) = if rho == 0.0 {
        (cx, cy)
    } else {
        (cx + r_px * point_cam.x / rho, cy + r_px * point_cam.y / rho)
    };
    let in_fov = theta <= camera.half_fov_rad() + ANGLE_SLACK_RAD;
    Ok(PixelPoint {
        u,
        v,
        valid: in_fov && camera.in_frame(u, v),
    })
}

/// Projects a vehicle-frame point onto the image.
pub fn project(point_world: Vec3, camera: &CameraSpec) -> Result<PixelPoint, CameraError> {
    project_camera_frame(camera.to_camera_frame(point_world), camera)
}

/// Unit ray in the camera frame through the continuous pixel position `(u, v)`.
pub fn unproject(u: f64, v: f64, camera: &CameraSpec) -> Result<Vec3, CameraError> {
    if !camera.in_frame(u, v) {
        return Err(CameraError::OutsideFrame {
            u,
            v,
            width: camera.image_size.width,
            height: camera.image_size.height,
        });
    }
    let f = camera.focal_length()?;
    let (cx, cy) = camera.principal_point();
    let (dx, dy) = (u - cx, v - cy);
    let r_px = dx.hypot(dy);
    let r_mm = r_px / camera.pixels_per_mm();
    let r_max = camera.sensor_radius_mm(camera.half_fov_rad())?;
    if r_mm > 2.0 * f || r_mm > r_max * (1.0 + 1e-12) {
        return Err(CameraError::OutOfFov { u, v });
    }
    if r_px == 0.0 {
        return Ok(Vec3::z());
    }
    let theta = 2.0 * (r_mm / (2.0 * f)).min(1.0).asin();
    let (s, c) = theta.sin_cos();
    Ok(Vec3::new(s * dx / r_px, s * dy / r_px, c))
}

/// Euclidean distance from the camera center, in meters.
pub fn distance_to_camera(point_world: Vec3, camera: &CameraSpec) -> f64 {
    (point_world - camera.position()).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn cam(width: u32, height: u32) -> CameraSpec {
        CameraSpec {
            image_size: ImageSize::new(width, height),
            ..CameraSpec::default()
        }
    }

    #[test]
    fn focal_closed_form_values() {
        // f = (w/2) / (2 sin(fov/4)); for 180 deg sin(45) = 1/sqrt(2).
        let f = focal_from_fov(180.0, 5.3).unwrap();
        assert!((f - 2.65 / std::f64::consts::SQRT_2).abs() < 1e-15);
        assert!((f - 1.873_832_970).abs() < 1e-9);
        let f4 = focal_from_fov(180.0, 4.0).unwrap();
        assert!((f4 - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn focal_round_trips_to_half_sensor() {
        for &(fov, w) in &[(180.0, 5.3), (120.0, 4.0), (360.0, 6.0), (30.0, 2.0)] {
            let f = focal_from_fov(fov, w).unwrap();
            let r = 2.0 * f * (f64::to_radians(fov) / 4.0).sin();
            assert!((r - w / 2.0).abs() <= 1e-12 * w);
        }
    }

    #[test]
    fn focal_rejects_bad_fov() {
        assert_eq!(focal_from_fov(0.0, 5.3), Err(CameraError::FovDomain(0.0)));
        assert_eq!(focal_from_fov(-10.0, 5.3), Err(CameraError::FovDomain(-10.0)));
        assert!(focal_from_fov(361.0, 5.3).is_err());
    }

    #[test]
    fn optical_axis_hits_principal_point() {
        let c = cam(640, 480);
        let p = project(Vec3::new(0.0, 0.0, 2.0), &c).unwrap();
        assert_eq!((p.u, p.v, p.valid), (320.0, 240.0, true));
    }

    #[test]
    fn ninety_degrees_lands_on_half_width() {
        let c = cam(640, 480);
        let p = project(Vec3::new(0.0, 1.0, 0.0), &c).unwrap();
        assert!((p.u - 320.0).abs() < 1e-12);
        assert!(((p.v - 240.0) - 320.0).abs() <= 320.0 * 1e-12);
        // Outside the 480-row frame even though inside the FOV.
        assert!(!p.valid);
    }

    #[test]
    fn behind_camera_is_invalid() {
        let c = cam(640, 480);
        let theta = 135f64.to_radians();
        let p = project(Vec3::new(theta.sin(), 0.0, theta.cos()), &c).unwrap();
        assert!(!p.valid);
    }

    #[test]
    fn origin_is_degenerate() {
        let c = cam(640, 480);
        assert_eq!(project(Vec3::zeros(), &c), Err(CameraError::DegenerateInput));
    }

    #[test]
    fn unproject_principal_point() {
        let c = cam(640, 480);
        let ray = unproject(320.0, 240.0, &c).unwrap();
        assert!((ray - Vec3::z()).norm() < 1e-15);
    }

    #[test]
    fn unproject_corner_beyond_image_circle_fails() {
        // Corner radius 400 px exceeds the 320 px image circle.
        let c = cam(640, 480);
        assert!(matches!(
            unproject(0.0, 0.0, &c),
            Err(CameraError::OutOfFov { .. })
        ));
        assert!(matches!(
            unproject(700.0, 10.0, &c),
            Err(CameraError::OutsideFrame { .. })
        ));
    }

    #[test]
    fn radius_strictly_increases_with_angle() {
        let c = cam(640, 480);
        let mut last = -1.0;
        for i in 0..=900 {
            let theta = FRAC_PI_2 * i as f64 / 900.0;
            let p = project_camera_frame(Vec3::new(theta.sin(), 0.0, theta.cos()), &c).unwrap();
            let r = p.u - 320.0;
            assert!(r > last);
            last = r;
        }
    }

    #[test]
    fn rotated_camera_sees_rotated_point() {
        let c = CameraSpec {
            pose: CameraPose {
                position: [1.0, 2.0, 3.0],
                orientation: Orientation::new(180.0, 0.0, 0.0),
            },
            ..cam(640, 480)
        };
        // One meter along the camera's forward axis, which is -z in the vehicle frame.
        let p = project(Vec3::new(1.0, 2.0, 2.0), &c).unwrap();
        assert!((p.u - 320.0).abs() < 1e-9 && (p.v - 240.0).abs() < 1e-9);
    }

    #[test]
    fn distance_examples() {
        let c = cam(640, 480);
        assert_eq!(distance_to_camera(Vec3::zeros(), &c), 0.0);
        assert_eq!(distance_to_camera(Vec3::new(3.0, 4.0, 0.0), &c), 5.0);
    }

    #[test]
    fn full_sphere_lens_accepts_rear_rays() {
        let c = CameraSpec {
            fov_deg: 360.0,
            ..cam(640, 640)
        };
        let theta = 170f64.to_radians();
        let p = project(Vec3::new(0.0, theta.sin(), theta.cos()), &c).unwrap();
        assert!(p.valid);
        let ray = unproject(p.u, p.v, &c).unwrap();
        assert!((ray.z - theta.cos()).abs() < 1e-9);
    }
}
