//! Oracle render backend: ray casting against ellipsoid body proxies.
//!
//! Each passenger is a torso and a head ellipsoid sized from the height and
//! width sliders. Pixels are sampled once at their centers through the same
//! camera model used for labels, so masks are hard-edged and exactly
//! reproducible.

use std::collections::BTreeMap;

use image::RgbImage;
use nalgebra::Rotation3;

use crate::camera::{unproject, CameraSpec};
use crate::config::BoneAxis;
use crate::geometry::{vec3, Orientation, Vec3};
use crate::mask::IndexedMask;
use crate::rng::{mix64, SampleRng};
use crate::sampler::{Background, Placement, SceneDescription};

pub const HEAD_JOINT: &str = "head";
pub const TORSO_JOINT: &str = "torso";

/// Bone whose sampled angles turn the proxy head.
pub const NECK_BONE: &str = "neck";

#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    pub center: Vec3,
    /// Semi-axis lengths along the local x, y, z axes, meters.
    pub semi_axes: Vec3,
    /// Local-to-vehicle rotation.
    pub rotation: Rotation3<f64>,
}

impl Ellipsoid {
    pub fn sphere(center: Vec3, radius: f64) -> Self {
        Self {
            center,
            semi_axes: Vec3::repeat(radius),
            rotation: Rotation3::identity(),
        }
    }

    /// Nearest positive ray parameter where `origin + t * dir` meets the
    /// surface, with the outward normal there.
    pub fn intersect(&self, origin: Vec3, dir: Vec3) -> Option<(f64, Vec3)> {
        self.intersect_with(&self.rotation.inverse(), origin, dir)
    }

    fn intersect_with(&self, inv: &Rotation3<f64>, origin: Vec3, dir: Vec3) -> Option<(f64, Vec3)> {
        let o = (inv * (origin - self.center)).component_div(&self.semi_axes);
        let d = (inv * dir).component_div(&self.semi_axes);
        let a = d.dot(&d);
        let b = o.dot(&d);
        let c = o.dot(&o) - 1.0;
        let disc = b * b - a * c;
        if disc < 0.0 {
            return None;
        }
        let root = disc.sqrt();
        let t = [(-b - root) / a, (-b + root) / a]
            .into_iter()
            .find(|&t| t > 0.0)?;
        let local = (o + d * t).component_div(&self.semi_axes);
        Some((t, (self.rotation * local).normalize()))
    }

    pub fn contains(&self, p: Vec3) -> bool {
        let q = (self.rotation.inverse() * (p - self.center)).component_div(&self.semi_axes);
        q.norm_squared() <= 1.0
    }
}

/// All ellipsoids of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxyBody {
    pub instance_id: u8,
    pub torso: Ellipsoid,
    pub head: Ellipsoid,
}

impl ProxyBody {
    /// A body made of one sphere, used for analytic checks.
    pub fn single_sphere(instance_id: u8, center: Vec3, radius: f64) -> Self {
        let s = Ellipsoid::sphere(center, radius);
        Self {
            instance_id,
            torso: s.clone(),
            head: s,
        }
    }

    fn parts(&self) -> [&Ellipsoid; 2] {
        [&self.torso, &self.head]
    }
}

fn slider(p: &Placement, name: &str) -> f64 {
    p.human.attributes.get(name).copied().unwrap_or(0.5)
}

/// Proxy geometry for one placement.
pub fn proxy_of(p: &Placement) -> ProxyBody {
    let scale = 0.9 + 0.2 * slider(p, "height");
    let girth = 0.85 + 0.3 * slider(p, "width");
    let seat_rot = p.seat.orientation.rotation();
    let hip = vec3(p.seat.position);
    let up = seat_rot * -Vec3::y();

    let torso = Ellipsoid {
        center: hip + up * (0.30 * scale),
        semi_axes: Vec3::new(0.19 * girth, 0.30, 0.12 * girth) * scale,
        rotation: seat_rot,
    };

    let neck = Orientation::new(
        p.angle(NECK_BONE, BoneAxis::Horizontal),
        p.angle(NECK_BONE, BoneAxis::Vertical),
        p.angle(NECK_BONE, BoneAxis::Roll),
    );
    let head_rot = seat_rot * neck.rotation();
    let pivot = hip + up * (0.62 * scale);
    let head = Ellipsoid {
        center: pivot + head_rot * Vec3::new(0.0, -0.11 * scale, 0.0),
        semi_axes: Vec3::new(0.08, 0.11, 0.095) * scale,
        rotation: head_rot,
    };
    ProxyBody {
        instance_id: p.instance_id,
        torso,
        head,
    }
}

pub fn proxies_of(scene: &SceneDescription) -> Vec<ProxyBody> {
    scene.placements.iter().map(proxy_of).collect()
}

struct Hit {
    id: u8,
    normal: Vec3,
    dir: Vec3,
}

/// Ellipsoid with its inverse rotation cached.
struct Prepared<'a> {
    id: u8,
    shape: &'a Ellipsoid,
    inv: Rotation3<f64>,
    /// Squared radius of a sphere enclosing the ellipsoid, with slack.
    bound2: f64,
}

impl Prepared<'_> {
    /// True when the ray (unit `dir`) cannot reach the bounding sphere.
    fn misses_bound(&self, origin: Vec3, dir: Vec3) -> bool {
        let oc = self.shape.center - origin;
        let c = oc.norm_squared() - self.bound2;
        let b = oc.dot(&dir);
        c > 0.0 && (b <= 0.0 || b * b < c)
    }
}

/// Per-frame ray setup shared by every pixel.
struct Caster<'a> {
    camera: &'a CameraSpec,
    rotation: Rotation3<f64>,
    origin: Vec3,
    parts: Vec<Prepared<'a>>,
}

impl<'a> Caster<'a> {
    fn new(camera: &'a CameraSpec, proxies: &'a [ProxyBody]) -> Self {
        let parts = proxies
            .iter()
            .flat_map(|b| {
                b.parts().into_iter().map(move |shape| Prepared {
                    id: b.instance_id,
                    shape,
                    inv: shape.rotation.inverse(),
                    bound2: (shape.semi_axes.max() * (1.0 + 1e-6) + 1e-9).powi(2),
                })
            })
            .collect();
        Self {
            camera,
            rotation: camera.rotation(),
            origin: camera.position(),
            parts,
        }
    }

    /// Casts the ray through the center of pixel `(x, y)`.
    fn cast(&self, x: u32, y: u32) -> Option<Hit> {
        let ray = unproject(x as f64 + 0.5, y as f64 + 0.5, self.camera).ok()?;
        let dir = self.rotation * ray;
        let mut best: Option<(f64, u8, Vec3)> = None;
        for part in &self.parts {
            if part.misses_bound(self.origin, dir) {
                continue;
            }
            if let Some((t, n)) = part.shape.intersect_with(&part.inv, self.origin, dir) {
                if best.is_none_or(|(bt, _, _)| t < bt) {
                    best = Some((t, part.id, n));
                }
            }
        }
        best.map(|(_, id, normal)| Hit { id, normal, dir })
    }
}

/// Instance mask of the given proxies: nearest hit per pixel, 0 elsewhere.
pub fn rasterize_proxies(camera: &CameraSpec, proxies: &[ProxyBody]) -> IndexedMask {
    let size = camera.image_size;
    let caster = Caster::new(camera, proxies);
    let mut mask = IndexedMask::new(size.width, size.height);
    for y in 0..size.height {
        for x in 0..size.width {
            if let Some(hit) = caster.cast(x, y) {
                mask.set(x, y, hit.id);
            }
        }
    }
    mask
}

pub fn rasterize(scene: &SceneDescription) -> IndexedMask {
    rasterize_proxies(&scene.camera, &proxies_of(scene))
}

/// Mask plus flat-shaded preview image.
#[derive(Debug, Clone)]
pub struct Rendered {
    pub mask: IndexedMask,
    pub rgb: RgbImage,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

fn color_from(label: &str, lo: u8, span: u8) -> [f64; 3] {
    let h = mix64(fnv1a(label.as_bytes()));
    let ch = |shift: u32| (lo as u64 + ((h >> shift) & 0xff) * span as u64 / 255) as f64;
    [ch(0), ch(8), ch(16)]
}

/// Overall brightness implied by the background choice.
fn exposure(bg: &Background) -> f64 {
    match bg {
        Background::Hdri { .. } => 1.0,
        Background::Light {
            preset, intensity, ..
        } => {
            let reference = preset.intensity_range.map_or(preset.intensity, |r| r[1]);
            if reference > 0.0 {
                0.55 + 0.45 * (intensity / reference).clamp(0.0, 1.0)
            } else {
                0.55
            }
        }
    }
}

/// Renders mask and preview in one pass.
pub fn render_scene(scene: &SceneDescription) -> Rendered {
    let camera = &scene.camera;
    let proxies = proxies_of(scene);
    let caster = Caster::new(camera, &proxies);
    let size = camera.image_size;
    let mut mask = IndexedMask::new(size.width, size.height);
    let mut rgb = RgbImage::new(size.width, size.height);
    let sky = color_from(&scene.background.label(), 40, 150);
    let gain = exposure(&scene.background);
    let skin: BTreeMap<u8, [f64; 3]> = scene
        .placements
        .iter()
        .map(|p| (p.instance_id, color_from(&p.human.clothing_asset, 60, 180)))
        .collect();
    for y in 0..size.height {
        let fade = 0.6 + 0.4 * (y as f64 / size.height.max(1) as f64);
        for x in 0..size.width {
            let color = match caster.cast(x, y) {
                Some(hit) => {
                    mask.set(x, y, hit.id);
                    let lambert = hit.normal.dot(&-hit.dir).max(0.0);
                    let base = skin.get(&hit.id).copied().unwrap_or([200.0; 3]);
                    base.map(|c| c * (0.35 + 0.65 * lambert) * gain)
                }
                None => sky.map(|c| c * fade * gain),
            };
            rgb.put_pixel(x, y, image::Rgb(color.map(|c| c.round().clamp(0.0, 255.0) as u8)));
        }
    }
    Rendered { mask, rgb }
}

/// Punches isolated single-pixel holes into instance interiors.
///
/// Candidates are foreground pixels whose eight neighbors carry the same
/// id. They are visited in raster order; each draws one uniform number and
/// is cleared when it falls below `rate`, unless an already-cleared pixel
/// touches it.
pub fn inject_holes(mask: &IndexedMask, rate: f64, seed: u64) -> IndexedMask {
    let mut out = mask.clone();
    if !(rate > 0.0) {
        return out;
    }
    let (w, h) = (mask.width(), mask.height());
    if w < 3 || h < 3 {
        return out;
    }
    let mut rng = SampleRng::new(seed);
    let mut cleared = vec![false; w as usize * h as usize];
    let at = |x: u32, y: u32| y as usize * w as usize + x as usize;
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let id = mask.get(x, y);
            if id == 0 {
                continue;
            }
            let interior = (y - 1..=y + 1)
                .all(|ny| (x - 1..=x + 1).all(|nx| mask.get(nx, ny) == id));
            if !interior {
                continue;
            }
            if rng.next_f64() >= rate {
                continue;
            }
            // Only already-visited neighbors can be cleared.
            let touching = cleared[at(x - 1, y)]
                || cleared[at(x - 1, y - 1)]
                || cleared[at(x, y - 1)]
                || cleared[at(x + 1, y - 1)];
            if !touching {
                cleared[at(x, y)] = true;
                out.set(x, y, 0);
            }
        }
    }
    out
}

/// Joint positions (vehicle frame, meters) keyed by instance and joint name.
pub type Joints = BTreeMap<(u8, String), Vec3>;

/// Head and torso centers of every proxy.
pub fn joints_of(scene: &SceneDescription) -> Joints {
    let mut joints = Joints::new();
    for body in proxies_of(scene) {
        joints.insert((body.instance_id, HEAD_JOINT.to_string()), body.head.center);
        joints.insert((body.instance_id, TORSO_JOINT.to_string()), body.torso.center);
    }
    joints
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::ImageSize;
    use crate::config::GenerationConfig;
    use crate::sampler::sample_scene;

    fn small_camera() -> CameraSpec {
        CameraSpec {
            image_size: ImageSize::new(64, 48),
            ..CameraSpec::default()
        }
    }

    #[test]
    fn ray_sphere_hits_front_surface() {
        let s = Ellipsoid::sphere(Vec3::new(0.0, 0.0, 5.0), 1.0);
        let (t, n) = s.intersect(Vec3::zeros(), Vec3::z()).unwrap();
        assert!((t - 4.0).abs() < 1e-12);
        assert!((n + Vec3::z()).norm() < 1e-12);
        assert!(s.intersect(Vec3::zeros(), Vec3::x()).is_none());
        assert!(s.intersect(Vec3::zeros(), -Vec3::z()).is_none());
    }

    #[test]
    fn rotated_ellipsoid_intersection() {
        // Long axis along local x, turned 90 degrees to lie along vehicle z.
        let e = Ellipsoid {
            center: Vec3::zeros(),
            semi_axes: Vec3::new(3.0, 1.0, 1.0),
            rotation: Orientation::new(90.0, 0.0, 0.0).rotation(),
        };
        let (t, _) = e.intersect(Vec3::new(0.0, 0.0, -10.0), Vec3::z()).unwrap();
        assert!((t - 7.0).abs() < 1e-9);
    }

    #[test]
    fn empty_scene_is_background() {
        let m = rasterize_proxies(&small_camera(), &[]);
        assert!(m.ids().iter().all(|&i| i == 0));
    }

    #[test]
    fn nearer_proxy_wins() {
        let cam = small_camera();
        let far = ProxyBody::single_sphere(1, Vec3::new(0.0, 0.0, 3.0), 0.9);
        let near = ProxyBody::single_sphere(2, Vec3::new(0.0, 0.0, 1.5), 0.25);
        let m = rasterize_proxies(&cam, &[far.clone(), near.clone()]);
        let m_swapped = rasterize_proxies(&cam, &[near, far]);
        assert_eq!(m, m_swapped);
        assert_eq!(m.get(32, 24), 2);
        assert!(m.ids().contains(&1));
    }

    #[test]
    fn head_joint_inside_head() {
        let scene = sample_scene(&GenerationConfig::default_cabin(), 0).unwrap();
        let joints = joints_of(&scene);
        for body in proxies_of(&scene) {
            assert!(body.head.contains(joints[&(body.instance_id, HEAD_JOINT.to_string())]));
        }
        assert_eq!(joints.len(), 2 * scene.placements.len());
    }

    #[test]
    fn holes_zero_rate_is_identity() {
        let mut m = IndexedMask::new(20, 20);
        for y in 2..18 {
            for x in 2..18 {
                m.set(x, y, 1);
            }
        }
        assert_eq!(inject_holes(&m, 0.0, 5), m);
        let holed = inject_holes(&m, 1.0, 5);
        assert!(holed.ids().iter().filter(|&&i| i == 0).count() > 400 - 256 + 10);
        assert_eq!(inject_holes(&m, 0.3, 5), inject_holes(&m, 0.3, 5));
    }
}
