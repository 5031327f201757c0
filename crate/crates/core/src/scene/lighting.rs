use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::math::Vec3;
use crate::scalar::Real;

pub const SH_COEFFS: usize = 9;

/// Index of the l = 0 (ambient) coefficient.
pub const AMBIENT: usize = 0;
/// Index of the l = 1 coefficient along camera y (pointing down).
pub const VERTICAL: usize = 1;

/// Real spherical harmonics up to l = 2 at a unit direction, ordered
/// `Y00, Y1-1 (y), Y10 (z), Y11 (x), Y2-2 (xy), Y2-1 (yz), Y20, Y21 (xz), Y22`.
pub fn sh_basis<T: Real>(n: Vec3<T>) -> [T; SH_COEFFS] {
    let c0 = T::lit(0.282_094_791_773_878_14);
    let c1 = T::lit(0.488_602_511_902_919_9);
    let c2 = T::lit(1.092_548_430_592_079_2);
    let c3 = T::lit(0.315_391_565_252_520_05);
    let c4 = T::lit(0.546_274_215_296_039_6);
    let (x, y, z) = (n.x, n.y, n.z);
    [
        c0,
        c1 * y,
        c1 * z,
        c1 * x,
        c2 * x * y,
        c2 * y * z,
        c3 * (T::lit(3.0) * z * z - T::one()),
        c2 * x * z,
        c4 * (x * x - y * y),
    ]
}

/// Second-order SH lighting, nine coefficients per RGB channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShLighting {
    pub coeffs: [[f64; SH_COEFFS]; 3],
}

impl ShLighting {
    pub fn uniform(coeffs: [f64; SH_COEFFS]) -> Self {
        Self { coeffs: [coeffs; 3] }
    }

    /// Per-channel irradiance at a camera-space unit normal, clamped at 0.
    pub fn irradiance<T: Real>(&self, n: Vec3<T>) -> [T; 3] {
        let y = sh_basis(n);
        self.coeffs.map(|c| {
            let e = c.iter().zip(&y).fold(T::zero(), |acc, (ci, yi)| acc + T::lit(*ci) * *yi);
            e.max(T::zero())
        })
    }

    /// `albedo × irradiance`, clamped to `[0, 1]`.
    pub fn shade<T: Real>(&self, n: Vec3<T>, albedo: [T; 3]) -> [T; 3] {
        let e = self.irradiance(n);
        std::array::from_fn(|k| (albedo[k] * e[k]).max(T::zero()).min(T::one()))
    }
}

/// Coefficients uniform in `[-0.7, 0.7]`, ambient in `[0.3, 0.7]`, vertical in
/// `[-0.7, 0)`; shared by the three channels.
pub fn sample_lighting<R: Rng + ?Sized>(rng: &mut R) -> ShLighting {
    let mut c = [0.0; SH_COEFFS];
    for (k, v) in c.iter_mut().enumerate() {
        *v = match k {
            AMBIENT => rng.random_range(0.3..=0.7),
            VERTICAL => -rng.random_range(f64::MIN_POSITIVE..=0.7),
            _ => rng.random_range(-0.7..=0.7),
        };
    }
    ShLighting::uniform(c)
}
