//! Frame conventions shared by the camera, the seats and the proxy bodies.
//!
//! Vehicle frame: right-handed, `x` to the camera's right, `y` down, `z`
//! along the optical axis of a camera with zero orientation. A local frame
//! with orientation `(yaw, pitch, roll)` is obtained by intrinsic rotations
//! yaw about `y`, then pitch about the new `x`, then roll about the new `z`.
//! Every oriented object looks along its own `+z` and has its "up" at `-y`.

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;

/// Yaw/pitch/roll in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Orientation {
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    pub roll_deg: f64,
}

impl Orientation {
    pub const IDENTITY: Orientation = Orientation {
        yaw_deg: 0.0,
        pitch_deg: 0.0,
        roll_deg: 0.0,
    };

    pub fn new(yaw_deg: f64, pitch_deg: f64, roll_deg: f64) -> Self {
        Self {
            yaw_deg,
            pitch_deg,
            roll_deg,
        }
    }

    /// Local-to-parent rotation.
    pub fn rotation(&self) -> Rotation3<f64> {
        let yaw = Rotation3::from_axis_angle(&Vector3::y_axis(), self.yaw_deg.to_radians());
        let pitch = Rotation3::from_axis_angle(&Vector3::x_axis(), self.pitch_deg.to_radians());
        let roll = Rotation3::from_axis_angle(&Vector3::z_axis(), self.roll_deg.to_radians());
        yaw * pitch * roll
    }

    pub fn forward(&self) -> Vec3 {
        self.rotation() * Vec3::z()
    }

    pub fn up(&self) -> Vec3 {
        self.rotation() * -Vec3::y()
    }
}

pub fn vec3(p: [f64; 3]) -> Vec3 {
    Vec3::new(p[0], p[1], p[2])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Vec3, b: Vec3) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn identity_looks_down_z() {
        assert!(close(Orientation::IDENTITY.forward(), Vec3::z()));
        assert!(close(Orientation::IDENTITY.up(), -Vec3::y()));
    }

    #[test]
    fn yaw_half_turn_faces_back() {
        let o = Orientation::new(180.0, 0.0, 0.0);
        assert!(close(o.forward(), -Vec3::z()));
        assert!(close(o.up(), -Vec3::y()));
    }

    #[test]
    fn positive_yaw_turns_towards_plus_x() {
        let o = Orientation::new(90.0, 0.0, 0.0);
        assert!(close(o.forward(), Vec3::x()));
    }

    #[test]
    fn pitch_is_applied_after_yaw() {
        // Positive pitch looks up, measured in the yawed frame.
        let o = Orientation::new(90.0, 45.0, 0.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(o.forward(), Vec3::new(h, -h, 0.0)));
    }
}
