//! Radial profiles u: S^1 → R describing star-shaped planar sets
//! E_u = { x : |x| < 1 + u(x/|x|) }: uniform angular sampling, periodic
//! interpolation (linear and trigonometric), trapezoid means and
//! rasterization onto a cell grid.

use alloc::vec::Vec;

use crate::grid::{rasterize_where, GridError, GridSet};
use crate::quad::KahanSum;

/// Errors raised by profile construction and rasterization.
#[derive(Clone, Debug, PartialEq)]
pub enum ProfileError {
    TooFewSamples { got: usize, min: usize },
    NonFinite(usize),
    NotStarShaped { min_radius: f64 },
    Grid(GridError),
}

impl core::fmt::Display for ProfileError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ProfileError::TooFewSamples { got, min } => {
                write!(f, "profile needs at least {min} samples, got {got}")
            }
            ProfileError::NonFinite(k) => write!(f, "sample {k} is not finite"),
            ProfileError::NotStarShaped { min_radius } => {
                write!(f, "radial extent 1 + u must stay positive, min is {min_radius}")
            }
            ProfileError::Grid(e) => write!(f, "rasterization failed: {e}"),
        }
    }
}

impl From<GridError> for ProfileError {
    fn from(e: GridError) -> Self {
        ProfileError::Grid(e)
    }
}

/// Minimum angular resolution for a usable profile.
pub const MIN_PROFILE_SAMPLES: usize = 8;

/// u sampled at the M equispaced angles θ_k = 2πk/M.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    samples: Vec<f64>,
}

impl RadialProfile {
    /// Builds a profile from equispaced samples; the radial extent 1 + u
    /// must stay strictly positive.
    pub fn new(samples: Vec<f64>) -> Result<Self, ProfileError> {
        if samples.len() < MIN_PROFILE_SAMPLES {
            return Err(ProfileError::TooFewSamples {
                got: samples.len(),
                min: MIN_PROFILE_SAMPLES,
            });
        }
        let mut min_radius = f64::INFINITY;
        for (k, &v) in samples.iter().enumerate() {
            if !v.is_finite() {
                return Err(ProfileError::NonFinite(k));
            }
            min_radius = min_radius.min(1.0 + v);
        }
        if !(min_radius > 0.0) {
            return Err(ProfileError::NotStarShaped { min_radius });
        }
        Ok(Self { samples })
    }

    /// Samples f at the M equispaced angles.
    pub fn from_fn<F: Fn(f64) -> f64>(m: usize, f: F) -> Result<Self, ProfileError> {
        let samples = (0..m)
            .map(|k| f(2.0 * core::f64::consts::PI * k as f64 / m as f64))
            .collect();
        Self::new(samples)
    }

    pub fn sample_count(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Angle of the k-th sample.
    #[inline]
    pub fn angle(&self, k: usize) -> f64 {
        2.0 * core::f64::consts::PI * k as f64 / self.samples.len() as f64
    }

    /// min over samples of the radial extent 1 + u.
    pub fn min_radial_extent(&self) -> f64 {
        let mut m = f64::INFINITY;
        for &v in &self.samples {
            m = m.min(1.0 + v);
        }
        m
    }

    /// max over samples of |u|.
    pub fn sup_norm(&self) -> f64 {
        let mut m = 0.0f64;
        for &v in &self.samples {
            m = m.max(libm::fabs(v));
        }
        m
    }

    /// Periodic linear interpolation of u at angle θ.
    pub fn eval(&self, theta: f64) -> f64 {
        let m = self.samples.len() as f64;
        let two_pi = 2.0 * core::f64::consts::PI;
        let mut t = theta % two_pi;
        if t < 0.0 {
            t += two_pi;
        }
        let pos = t / two_pi * m;
        let k = libm::floor(pos) as usize % self.samples.len();
        let frac = pos - libm::floor(pos);
        let next = (k + 1) % self.samples.len();
        self.samples[k] * (1.0 - frac) + self.samples[next] * frac
    }

    /// Trapezoid (here: exact periodic mean) of g(u, θ) over the circle.
    pub fn mean<F: Fn(f64, f64) -> f64>(&self, g: F) -> f64 {
        let mut acc = KahanSum::new();
        for (k, &v) in self.samples.iter().enumerate() {
            acc.add(g(v, self.angle(k)));
        }
        acc.value() / self.samples.len() as f64
    }

    /// L²(S¹) norm of u: sqrt(∫ u² dθ) by the periodic trapezoid rule.
    pub fn l2_norm(&self) -> f64 {
        let mean_sq = self.mean(|v, _| v * v);
        libm::sqrt(mean_sq * 2.0 * core::f64::consts::PI)
    }

    /// Adds a constant to every sample.
    pub fn shifted(&self, c: f64) -> RadialProfile {
        RadialProfile { samples: self.samples.iter().map(|v| v + c).collect() }
    }

    /// Real Fourier coefficients (a_0, [(a_k, b_k); k = 1..=kmax]) of the
    /// sample sequence, u(θ) ≈ a_0 + Σ a_k cos kθ + b_k sin kθ.
    pub fn fourier_coefficients(&self, kmax: usize) -> (f64, Vec<(f64, f64)>) {
        let m = self.samples.len();
        let mut a0 = KahanSum::new();
        for &v in &self.samples {
            a0.add(v);
        }
        let a0 = a0.value() / m as f64;
        let mut modes = Vec::with_capacity(kmax);
        for k in 1..=kmax {
            let mut ca = KahanSum::new();
            let mut cb = KahanSum::new();
            for (j, &v) in self.samples.iter().enumerate() {
                let th = self.angle(j) * k as f64;
                ca.add(v * libm::cos(th));
                cb.add(v * libm::sin(th));
            }
            modes.push((2.0 * ca.value() / m as f64, 2.0 * cb.value() / m as f64));
        }
        (a0, modes)
    }

    /// Evaluates the truncated Fourier series from `fourier_coefficients`.
    pub fn eval_trig(a0: f64, modes: &[(f64, f64)], theta: f64) -> f64 {
        let mut acc = a0;
        for (i, &(a, b)) in modes.iter().enumerate() {
            let k = (i + 1) as f64;
            acc += a * libm::cos(k * theta) + b * libm::sin(k * theta);
        }
        acc
    }

    /// Rasterizes E_u = { x : |x| < 1 + u(θ(x)) } at resolution h.
    /// Rejects h larger than the minimum radial extent, where the midpoint
    /// rasterization could miss the set entirely along some ray.
    pub fn rasterize(&self, h: f64) -> Result<GridSet, ProfileError> {
        let min_extent = self.min_radial_extent();
        if h > min_extent {
            return Err(ProfileError::Grid(GridError::CellSizeTooCoarse { h, min_extent }));
        }
        let rmax = 1.0 + self.sup_norm();
        let n = libm::ceil(rmax / h) as i64 + 1;
        let set = rasterize_where(2, h, [0.0; 3], [-n, -n, 0], [n, n, 0], |p| {
            let r = libm::sqrt(p[0] * p[0] + p[1] * p[1]);
            let theta = libm::atan2(p[1], p[0]);
            r < 1.0 + self.eval(theta)
        })?;
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_profile_rasterizes_to_unit_disk() {
        let u = RadialProfile::from_fn(64, |_| 0.0).unwrap();
        let e = u.rasterize(1.0 / 64.0).unwrap();
        assert!((e.volume() - core::f64::consts::PI).abs() < 5e-2);
    }

    #[test]
    fn eval_interpolates_linearly_and_periodically() {
        let u = RadialProfile::new(alloc::vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
        let dth = 2.0 * core::f64::consts::PI / 8.0;
        assert!((u.eval(0.5 * dth) - 0.5).abs() < 1e-12);
        assert!((u.eval(-0.5 * dth) - 0.5).abs() < 1e-12);
        assert!((u.eval(8.5 * dth) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mean_of_constant_is_constant() {
        let u = RadialProfile::from_fn(32, |_| 0.25).unwrap();
        assert!((u.mean(|v, _| v) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn l2_norm_of_sine_mode() {
        // ∫ (a sin 3θ)² dθ = a²π, so the L² norm is a·sqrt(π).
        let a = 0.3;
        let u = RadialProfile::from_fn(256, |t| a * libm::sin(3.0 * t)).unwrap();
        let expected = a * libm::sqrt(core::f64::consts::PI);
        assert!((u.l2_norm() - expected).abs() < 1e-10);
    }

    #[test]
    fn fourier_roundtrip_on_band_limited_profile() {
        let f = |t: f64| 0.1 + 0.05 * libm::cos(2.0 * t) - 0.02 * libm::sin(5.0 * t);
        let u = RadialProfile::from_fn(128, f).unwrap();
        let (a0, modes) = u.fourier_coefficients(8);
        assert!((a0 - 0.1).abs() < 1e-12);
        assert!((modes[1].0 - 0.05).abs() < 1e-12);
        assert!((modes[4].1 + 0.02).abs() < 1e-12);
        // The truncated series reproduces the band-limited source exactly.
        for t in [0.3, 1.7, 4.4] {
            assert!((RadialProfile::eval_trig(a0, &modes, t) - f(t)).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_too_coarse_rasterization() {
        let u = RadialProfile::from_fn(32, |_| -0.9).unwrap();
        assert!(matches!(
            u.rasterize(0.5),
            Err(ProfileError::Grid(GridError::CellSizeTooCoarse { .. }))
        ));
    }

    #[test]
    fn rejects_non_star_shaped() {
        let r = RadialProfile::from_fn(32, |t| if t < 1.0 { -1.5 } else { 0.0 });
        assert!(matches!(r, Err(ProfileError::NotStarShaped { .. })));
    }
}
