//! Gaze direction representations, angular error, screen projection and
//! interval clamping.
//!
//! Angles are in degrees. Positive pitch looks up, positive yaw looks to the
//! subject's left. The unit vector of a gaze `(pitch, yaw)` is
//! `(-cos(pitch) sin(yaw), -sin(pitch), -cos(pitch) cos(yaw))`, so the zero
//! gaze points down the camera's optical axis towards the camera.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GazeAngles {
    pub pitch: f64,
    pub yaw: f64,
}

impl GazeAngles {
    pub const ZERO: GazeAngles = GazeAngles { pitch: 0.0, yaw: 0.0 };

    pub fn new(pitch: f64, yaw: f64) -> Self {
        Self { pitch, yaw }
    }

    pub fn is_finite(&self) -> bool {
        self.pitch.is_finite() && self.yaw.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl GazeVector {
    /// Normalizes `(x, y, z)`; zero or non-finite input is rejected.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n < 1e-12 {
            return Err(Error::Degenerate("gaze vector has zero length".into()));
        }
        Ok(Self { x: x / n, y: y / n, z: z / n })
    }

    pub fn dot(&self, other: &GazeVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn neg(&self) -> GazeVector {
        GazeVector { x: -self.x, y: -self.y, z: -self.z }
    }
}

pub fn angles_to_vector(a: GazeAngles) -> GazeVector {
    let (sp, cp) = a.pitch.to_radians().sin_cos();
    let (sy, cy) = a.yaw.to_radians().sin_cos();
    GazeVector { x: -cp * sy, y: -sp, z: -cp * cy }
}

pub fn vector_to_angles(g: GazeVector) -> Result<GazeAngles> {
    let g = GazeVector::new(g.x, g.y, g.z)?;
    Ok(GazeAngles { pitch: (-g.y).clamp(-1.0, 1.0).asin().to_degrees(), yaw: (-g.x).atan2(-g.z).to_degrees() })
}

/// Angle between two gaze directions in degrees.
pub fn angular_error(a: &GazeVector, b: &GazeVector) -> f64 {
    let cos = a.dot(b) / (a.norm() * b.norm());
    cos.clamp(-1.0, 1.0).acos().to_degrees()
}

pub fn angular_error_angles(a: GazeAngles, b: GazeAngles) -> f64 {
    angular_error(&angles_to_vector(a), &angles_to_vector(b))
}

/// A rectangular region in (pitch, yaw) space, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GazeInterval {
    pub pitch_min: f64,
    pub pitch_max: f64,
    pub yaw_min: f64,
    pub yaw_max: f64,
}

impl GazeInterval {
    /// Shared gaze range of the training datasets.
    pub const DEFAULT_GAZE: GazeInterval =
        GazeInterval { pitch_min: -30.0, pitch_max: 14.0, yaw_min: -26.0, yaw_max: 26.0 };

    /// Shared head-pose range of the training datasets.
    pub const DEFAULT_HEAD_POSE: GazeInterval =
        GazeInterval { pitch_min: -30.0, pitch_max: 30.0, yaw_min: -30.0, yaw_max: 30.0 };

    pub fn new(pitch_min: f64, pitch_max: f64, yaw_min: f64, yaw_max: f64) -> Result<Self> {
        let iv = Self { pitch_min, pitch_max, yaw_min, yaw_max };
        iv.validate()?;
        Ok(iv)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.pitch_min, self.pitch_max, self.yaw_min, self.yaw_max].iter().all(|v| v.is_finite())
            && self.pitch_min < self.pitch_max
            && self.yaw_min < self.yaw_max;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("interval bounds must satisfy min < max: {self:?}")))
        }
    }

    pub fn contains(&self, a: GazeAngles) -> bool {
        a.pitch >= self.pitch_min && a.pitch <= self.pitch_max && a.yaw >= self.yaw_min && a.yaw <= self.yaw_max
    }

    pub fn pitch_width(&self) -> f64 {
        self.pitch_max - self.pitch_min
    }

    pub fn yaw_width(&self) -> f64 {
        self.yaw_max - self.yaw_min
    }
}

impl Default for GazeInterval {
    fn default() -> Self {
        Self::DEFAULT_GAZE
    }
}

pub fn clamp_to_interval(a: GazeAngles, interval: &GazeInterval) -> GazeAngles {
    GazeAngles {
        pitch: a.pitch.clamp(interval.pitch_min, interval.pitch_max),
        yaw: a.yaw.clamp(interval.yaw_min, interval.yaw_max),
    }
}

/// Screen model: the screen plane contains the camera and is perpendicular
/// to its optical axis. Screen coordinates are millimeters, x right, y down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScreenGeometry {
    /// Position of the screen origin relative to the camera, in camera x/y (mm).
    pub screen_origin_mm: [f64; 2],
    /// Distance from the eye to the screen plane (mm).
    pub eye_distance_mm: f64,
    /// Physical size of one screen pixel (mm/px).
    pub pixel_pitch_mm: f64,
    /// Screen extent (mm); used to locate calibration anchors.
    pub screen_size_mm: [f64; 2],
}

impl Default for ScreenGeometry {
    fn default() -> Self {
        Self {
            screen_origin_mm: [0.0, 0.0],
            eye_distance_mm: 500.0,
            pixel_pitch_mm: 0.1,
            screen_size_mm: [250.0, 170.0],
        }
    }
}

impl ScreenGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.eye_distance_mm > 0.0) || !(self.pixel_pitch_mm > 0.0) {
            return Err(Error::invalid("eye distance and pixel pitch must be positive"));
        }
        if !(self.screen_size_mm[0] > 0.0 && self.screen_size_mm[1] > 0.0) {
            return Err(Error::invalid("screen size must be positive"));
        }
        Ok(())
    }

    pub fn mm_to_pixels(&self, p: [f64; 2]) -> [f64; 2] {
        [p[0] / self.pixel_pitch_mm, p[1] / self.pixel_pitch_mm]
    }
}

/// Intersects the gaze ray from an eye at `(0, 0, eye_distance)` with the
/// screen plane `z = 0`.
pub fn project_to_screen(a: GazeAngles, geom: &ScreenGeometry) -> Result<[f64; 2]> {
    let g = angles_to_vector(a);
    if g.z > -1e-12 {
        return Err(Error::Degenerate(format!(
            "gaze ray ({:.3}, {:.3}) never reaches the screen plane",
            a.pitch, a.yaw
        )));
    }
    let t = geom.eye_distance_mm / -g.z;
    Ok([t * g.x - geom.screen_origin_mm[0], t * g.y - geom.screen_origin_mm[1]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EPS: f64 = 1e-12;

    #[test]
    fn zero_gaze_axis() {
        let g = angles_to_vector(GazeAngles::ZERO);
        assert!(g.x.abs() < EPS && g.y.abs() < EPS && (g.z + 1.0).abs() < EPS);
    }

    #[test]
    fn straight_up() {
        let g = angles_to_vector(GazeAngles::new(90.0, 0.0));
        assert!(g.x.abs() < EPS && (g.y + 1.0).abs() < EPS && g.z.abs() < EPS);
    }

    #[test]
    fn inverse_rejects_zero_vector() {
        let z = GazeVector { x: 0.0, y: 0.0, z: 0.0 };
        assert!(vector_to_angles(z).is_err());
    }

    #[test]
    fn angular_error_cases() {
        let g = angles_to_vector(GazeAngles::new(5.0, -12.0));
        assert!(angular_error(&g, &g) < 1e-6);
        assert!((angular_error(&g, &g.neg()) - 180.0).abs() < 1e-9);
        let d = angular_error_angles(GazeAngles::ZERO, GazeAngles::new(4.0, 0.0));
        assert!((d - 4.0).abs() < 1e-9);
    }

    #[test]
    fn clamp_examples() {
        let iv = GazeInterval::DEFAULT_GAZE;
        assert_eq!(clamp_to_interval(GazeAngles::ZERO, &iv), GazeAngles::ZERO);
        assert_eq!(clamp_to_interval(GazeAngles::new(20.0, 0.0), &iv), GazeAngles::new(14.0, 0.0));
        assert_eq!(clamp_to_interval(GazeAngles::new(-40.0, -40.0), &iv), GazeAngles::new(-30.0, -26.0));
        assert!(GazeInterval::new(1.0, 1.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn projection_examples() {
        let geom = ScreenGeometry::default();
        let p = project_to_screen(GazeAngles::ZERO, &geom).unwrap();
        assert!(p[0].abs() < 1e-9 && p[1].abs() < 1e-9);

        let d = geom.eye_distance_mm;
        for yaw in [-20.0f64, -3.0, 10.0, 25.0] {
            let p = project_to_screen(GazeAngles::new(0.0, yaw), &geom).unwrap();
            assert!((p[0] + d * yaw.to_radians().tan()).abs() < 1e-9);
            assert!(p[1].abs() < 1e-9);
        }
        // Looking up moves the point of gaze up the screen (negative y).
        assert!(project_to_screen(GazeAngles::new(10.0, 0.0), &geom).unwrap()[1] < 0.0);
        assert!(project_to_screen(GazeAngles::new(-90.0, 0.0), &geom).is_err());
    }

    #[test]
    fn projection_slope_matches_derivative() {
        let geom = ScreenGeometry::default();
        let h = 1e-4;
        for yaw in [-20.0f64, 0.0, 15.0] {
            let f = |y: f64| project_to_screen(GazeAngles::new(0.0, y), &geom).unwrap()[0];
            let fd = (f(yaw + h) - f(yaw - h)) / (2.0 * h);
            let r = yaw.to_radians();
            let analytic = -geom.eye_distance_mm / (r.cos() * r.cos()) * std::f64::consts::PI / 180.0;
            assert!((fd - analytic).abs() < 1e-6 * analytic.abs().max(1.0), "{fd} vs {analytic}");
        }
    }

    proptest! {
        #[test]
        fn roundtrip_inside_interval(p in -30.0f64..14.0, y in -26.0f64..26.0) {
            let back = vector_to_angles(angles_to_vector(GazeAngles::new(p, y))).unwrap();
            prop_assert!((back.pitch - p).abs() < 1e-9);
            prop_assert!((back.yaw - y).abs() < 1e-9);
        }

        #[test]
        fn unit_norm(p in -180.0f64..180.0, y in -180.0f64..180.0) {
            prop_assert!((angles_to_vector(GazeAngles::new(p, y)).norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn error_symmetric_and_triangle(
            a in (-60.0f64..60.0, -80.0f64..80.0),
            b in (-60.0f64..60.0, -80.0f64..80.0),
            c in (-60.0f64..60.0, -80.0f64..80.0),
        ) {
            let (va, vb, vc) = (
                angles_to_vector(GazeAngles::new(a.0, a.1)),
                angles_to_vector(GazeAngles::new(b.0, b.1)),
                angles_to_vector(GazeAngles::new(c.0, c.1)),
            );
            prop_assert!((angular_error(&va, &vb) - angular_error(&vb, &va)).abs() < 1e-9);
            prop_assert!(angular_error(&va, &vc) <= angular_error(&va, &vb) + angular_error(&vb, &vc) + 1e-9);
        }

        #[test]
        fn clamp_idempotent(p in -100.0f64..100.0, y in -100.0f64..100.0) {
            let iv = GazeInterval::DEFAULT_GAZE;
            let once = clamp_to_interval(GazeAngles::new(p, y), &iv);
            prop_assert_eq!(clamp_to_interval(once, &iv), once);
            prop_assert!(iv.contains(once));
        }
    }
}
