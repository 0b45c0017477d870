//! Front-center depth-perspective camera.
//!
//! Pixels are rendered by casting one pinhole ray through each pixel center
//! and storing the Euclidean hit distance (ray length, not axial depth).

use std::io::{self, Write};

use nalgebra::Vector3;

use crate::world::{ray_intersect, Arena};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraConfig {
    pub width: usize,
    pub height: usize,
    /// Horizontal field of view, degrees.
    pub horizontal_fov: f64,
    pub max_range: f64,
    /// Camera height above the vehicle center.
    pub mount_height: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self { width: 84, height: 84, horizontal_fov: 90.0, max_range: 40.0, mount_height: 0.0 }
    }
}

impl CameraConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.width < 2 || self.height < 2 {
            return Err("camera resolution must be at least 2x2".into());
        }
        if !(self.horizontal_fov > 0.0 && self.horizontal_fov < 180.0) {
            return Err("camera fov must lie in (0, 180) degrees".into());
        }
        if !(self.max_range > 0.0) {
            return Err("camera max range must be positive".into());
        }
        Ok(())
    }

    /// Focal length in pixel units.
    pub fn focal_length(&self) -> f64 {
        (self.width as f64 / 2.0) / (self.horizontal_fov.to_radians() / 2.0).tan()
    }

    /// Unit world-frame direction of the ray through pixel `(u, v)`; `v` grows downward.
    pub fn pixel_ray(&self, yaw_deg: f64, u: usize, v: usize) -> Vector3<f64> {
        let f = self.focal_length();
        let right_px = u as f64 + 0.5 - self.width as f64 / 2.0;
        let up_px = self.height as f64 / 2.0 - (v as f64 + 0.5);
        let (s, c) = yaw_deg.to_radians().sin_cos();
        let forward = Vector3::new(c, s, 0.0);
        let right = Vector3::new(s, -c, 0.0);
        (forward * f + right * right_px + Vector3::z() * up_px).normalize()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Degrees, counter-clockwise from +x.
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    /// Row-major distances in meters.
    pub data: Vec<f64>,
}

impl DepthImage {
    pub fn at(&self, u: usize, v: usize) -> f64 {
        self.data[v * self.width + u]
    }
}

/// Network input: depth scaled into `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl Observation {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0.0; width * height] }
    }
}

pub fn render_depth(arena: &Arena, pose: CameraPose, config: &CameraConfig) -> DepthImage {
    let origin = Vector3::new(pose.x, pose.y, pose.z + config.mount_height);
    let mut data = Vec::with_capacity(config.width * config.height);
    for v in 0..config.height {
        for u in 0..config.width {
            let dir = config.pixel_ray(pose.yaw, u, v);
            data.push(ray_intersect(arena, origin, dir, config.max_range));
        }
    }
    DepthImage { width: config.width, height: config.height, data }
}

pub fn normalize_depth(img: &DepthImage, max_range: f64) -> Observation {
    let data = img
        .data
        .iter()
        .map(|&d| (d / max_range).clamp(0.0, 1.0) as f32)
        .collect();
    Observation { width: img.width, height: img.height, data }
}

/// Plain-text PGM (P2, maxval 255) of the normalized image.
pub fn write_pgm<W: Write>(mut out: W, img: &DepthImage, max_range: f64) -> io::Result<()> {
    writeln!(out, "P2")?;
    writeln!(out, "{} {}", img.width, img.height)?;
    writeln!(out, "255")?;
    let obs = normalize_depth(img, max_range);
    for row in obs.data.chunks(img.width) {
        let line: Vec<String> = row
            .iter()
            .map(|&x| ((x as f64 * 255.0).round() as u32).to_string())
            .collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{Bounds, Obstacle, StartPose, Waypoint};
    use approx::assert_relative_eq;

    fn wall_arena() -> Arena {
        Arena {
            name: "wall".into(),
            bounds: Bounds::new(-50.0, -50.0, 50.0, 50.0),
            obstacles: vec![Obstacle::Box { cx: 11.0, cy: 0.0, hx: 1.0, hy: 40.0, height: 30.0 }],
            start: StartPose { x: 0.0, y: 0.0, yaw: 0.0 },
            goal: Waypoint { x: -10.0, y: 0.0, radius: 1.0 },
            checkpoints: vec![],
            wall_height: 30.0,
            boundary_is_wall: false,
        }
    }

    #[test]
    fn center_pixel_hits_wall_straight_on() {
        // Odd resolution puts a pixel center on the optical axis.
        let cfg = CameraConfig { width: 5, height: 5, ..Default::default() };
        let img = render_depth(&wall_arena(), CameraPose { x: 0.0, y: 0.0, z: 2.0, yaw: 0.0 }, &cfg);
        assert_relative_eq!(img.at(2, 2), 10.0, epsilon = 1e-12);
    }

    #[test]
    fn off_axis_pixel_reports_ray_length() {
        // 2x2 image: pixel (1, 0) sits half a pixel right and up of the axis.
        // Choose the fov so that its ray makes 30 degrees with the optical axis.
        let half_fov = (30f64.to_radians().tan() * 2f64.sqrt()).atan();
        let cfg = CameraConfig { width: 2, height: 2, horizontal_fov: 2.0 * half_fov.to_degrees(), ..Default::default() };
        let dir = cfg.pixel_ray(0.0, 1, 0);
        assert_relative_eq!(dir.x.acos().to_degrees(), 30.0, epsilon = 1e-9);
        let img = render_depth(&wall_arena(), CameraPose { x: 0.0, y: 0.0, z: 2.0, yaw: 0.0 }, &cfg);
        assert_relative_eq!(img.at(1, 0), 11.547005383792516, max_relative = 1e-12);
    }

    #[test]
    fn empty_sky_is_max_range() {
        let mut a = wall_arena();
        a.obstacles.clear();
        let cfg = CameraConfig { width: 8, height: 8, ..Default::default() };
        let img = render_depth(&a, CameraPose { x: 0.0, y: 0.0, z: 2.0, yaw: 0.0 }, &cfg);
        for v in 0..4 {
            for u in 0..8 {
                assert_eq!(img.at(u, v), cfg.max_range);
            }
        }
    }

    #[test]
    fn normalization() {
        let img = DepthImage { width: 3, height: 1, data: vec![40.0, 1e-6, 10.0] };
        let obs = normalize_depth(&img, 40.0);
        assert_eq!(obs.data[0], 1.0);
        assert!(obs.data[1] > 0.0 && obs.data[1] < 1e-6);
        assert_eq!(obs.data[2], 0.25);
    }

    #[test]
    fn pgm_header_and_size() {
        let img = DepthImage { width: 2, height: 2, data: vec![40.0, 20.0, 10.0, 0.0] };
        let mut buf = Vec::new();
        write_pgm(&mut buf, &img, 40.0).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "P2\n2 2\n255\n255 128\n64 0\n");
    }
}
