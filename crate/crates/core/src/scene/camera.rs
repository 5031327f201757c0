use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::math::{Mat3, Rigid, Vec3};

/// Points closer than this to the camera plane (m) are not projected.
pub const NEAR_PLANE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    /// Focal length in pixels.
    pub focal: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

/// Pinhole camera; `extrinsics` maps world to camera coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub intrinsics: Intrinsics,
    pub extrinsics: Rigid<f64>,
}

/// World-to-camera rotation of an unrotated camera looking along world +z.
fn forward_rotation() -> Mat3<f64> {
    Mat3::from_rows([[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]])
}

impl Camera {
    /// Camera at `center` looking along world +z with image y pointing down.
    pub fn looking_forward(intrinsics: Intrinsics, center: Vec3<f64>) -> Self {
        let r = forward_rotation();
        Self {
            intrinsics,
            extrinsics: Rigid::new(r, -r.mul_vec(center)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = &self.intrinsics;
        if !(k.focal > 0.0 && k.focal.is_finite()) {
            return invalid(format!("focal length must be positive, got {}", k.focal));
        }
        if k.width < 32 || k.height < 32 {
            return invalid(format!("image size {}x{} below 32x32", k.width, k.height));
        }
        if !(k.cx.is_finite() && k.cy.is_finite()) {
            return invalid("principal point must be finite");
        }
        let r = &self.extrinsics.rotation;
        let rrt = r.mul_mat(&r.transpose());
        let id = Mat3::<f64>::identity();
        let off = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| (rrt.rows[i][j] - id.rows[i][j]).abs())
            .fold(0.0, f64::max);
        if off > 1e-6 || r.determinant() <= 0.0 || !self.extrinsics.translation.is_finite() {
            return invalid("camera rotation must be a proper orthonormal matrix");
        }
        Ok(())
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vec3<f64> {
        self.extrinsics.inverse().translation
    }

    #[inline]
    pub fn to_camera(&self, p: Vec3<f64>) -> Vec3<f64> {
        self.extrinsics.apply(p)
    }

    /// Pixel coordinates of a camera-space point (no near-plane check).
    #[inline]
    pub fn project_camera(&self, c: Vec3<f64>) -> [f64; 2] {
        let k = &self.intrinsics;
        [k.focal * c.x / c.z + k.cx, k.focal * c.y / c.z + k.cy]
    }

    /// Pixel coordinates of a world point, `None` behind the near plane.
    pub fn project(&self, p: Vec3<f64>) -> Option<[f64; 2]> {
        let c = self.to_camera(p);
        (c.z > NEAR_PLANE).then(|| self.project_camera(c))
    }

    pub fn in_image(&self, uv: [f64; 2]) -> bool {
        let k = &self.intrinsics;
        uv[0] >= 0.0 && uv[1] >= 0.0 && uv[0] < k.width as f64 && uv[1] < k.height as f64
    }

    /// World-space ray through pixel coordinates `(u, v)`; the direction has
    /// unit camera-space depth.
    pub fn ray(&self, u: f64, v: f64) -> (Vec3<f64>, Vec3<f64>) {
        let k = &self.intrinsics;
        let d_cam = Vec3::new((u - k.cx) / k.focal, (v - k.cy) / k.focal, 1.0);
        let inv = self.extrinsics.inverse();
        (inv.translation, inv.rotation.mul_vec(d_cam))
    }

    /// This camera moved by accumulated noise: the center shifts by
    /// `translation` (world) and the camera rotates about its own axes by the
    /// intrinsic XYZ Euler angles.
    pub fn perturbed(&self, translation: Vec3<f64>, euler: [f64; 3]) -> Self {
        let cam_to_world = self.extrinsics.rotation.transpose();
        let rotated = cam_to_world.mul_mat(&Mat3::from_euler_xyz(euler[0], euler[1], euler[2]));
        let r = rotated.transpose();
        let center = self.center() + translation;
        Self {
            intrinsics: self.intrinsics,
            extrinsics: Rigid::new(r, -r.mul_vec(center)),
        }
    }
}

/// Increment applied between two consecutive frames.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraDelta {
    /// Center displacement (m, world axes).
    pub translation: Vec3<f64>,
    /// Euler increments (rad) about the camera's x, y and z axes.
    pub rotation: [f64; 3],
}

/// Per-transition camera increments; `deltas[k]` moves frame k to k + 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraNoise {
    pub deltas: Vec<Option<CameraDelta>>,
}

impl CameraNoise {
    /// Accumulated `(translation, euler)` at `frame`.
    pub fn accumulated(&self, frame: usize) -> (Vec3<f64>, [f64; 3]) {
        let mut t = Vec3::zero();
        let mut e = [0.0; 3];
        for d in self.deltas.iter().take(frame).flatten() {
            t += d.translation;
            for (ek, dk) in e.iter_mut().zip(d.rotation) {
                *ek += dk;
            }
        }
        (t, e)
    }

    /// Number of transitions that move the camera.
    pub fn active_steps(&self) -> usize {
        self.deltas.iter().filter(|d| d.is_some()).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam() -> Camera {
        Camera::looking_forward(
            Intrinsics {
                focal: 800.0,
                cx: 320.0,
                cy: 320.0,
                width: 640,
                height: 640,
            },
            Vec3::new(0.0, 1.0, 0.0),
        )
    }

    #[test]
    fn axis_conventions() {
        let c = cam();
        c.validate().unwrap();
        assert_eq!(c.project(Vec3::new(0.0, 1.0, 5.0)).unwrap(), [320.0, 320.0]);
        let left = c.project(Vec3::new(1.0, 1.0, 5.0)).unwrap();
        assert!(left[0] < 320.0);
        let up = c.project(Vec3::new(0.0, 2.0, 5.0)).unwrap();
        assert!(up[1] < 320.0);
        assert!(c.project(Vec3::new(0.0, 1.0, -1.0)).is_none());
        assert!((c.center() - Vec3::new(0.0, 1.0, 0.0)).max_abs() < 1e-15);
    }

    #[test]
    fn ray_hits_projected_point() {
        let c = cam().perturbed(Vec3::new(0.1, -0.05, 0.2), [0.01, -0.02, 0.03]);
        let p = Vec3::new(0.7, 1.4, 6.0);
        let uv = c.project(p).unwrap();
        let (o, d) = c.ray(uv[0], uv[1]);
        let depth = c.to_camera(p).z;
        assert!((o + d * depth - p).max_abs() < 1e-12);
    }

    #[test]
    fn noise_accumulates() {
        let d = CameraDelta {
            translation: Vec3::new(0.01, 0.0, 0.0),
            rotation: [0.0, 0.001, 0.0],
        };
        let n = CameraNoise {
            deltas: vec![Some(d), None, Some(d)],
        };
        let (t, e) = n.accumulated(3);
        assert!((t.x - 0.02).abs() < 1e-15 && (e[1] - 0.002).abs() < 1e-15);
        assert_eq!(n.accumulated(0).0, Vec3::zero());
        assert_eq!(n.active_steps(), 2);
    }

    #[test]
    fn degenerate_camera_rejected() {
        let mut c = cam();
        c.intrinsics.focal = 0.0;
        assert!(c.validate().is_err());
        let mut c = cam();
        c.extrinsics.rotation.rows[0][0] = 2.0;
        assert!(c.validate().is_err());
    }
}
