//! Fractional-perimeter functionals, asymmetry indices, penalized
//! isoperimetric energies and fractional Cheeger constants on discretized
//! planar and spatial sets.
//!
//! The crate is organized bottom-up:
//!
//! * [`quad`], [`rng`], [`fft`] — numerical plumbing (compensated sums,
//!   Gauss panels, adaptive singular quadrature, deterministic RNG, a
//!   radix-2 FFT for autocorrelation counts).
//! * [`grid`], [`profile`] — set representations: sparse binary cell grids
//!   and star-shaped boundary profiles.
//! * [`kernel`], [`perimeter`], [`potential`] — the singular-kernel cell
//!   interaction table, the s-perimeter `P_s`, pairwise interactions `L_s`,
//!   the Riesz potential and the maximized functional `V_s`.
//! * [`reference`] — cached reference constants for the unit ball with a
//!   Monte Carlo cross-check.
//! * [`indices`] — the asymmetry/deficit hierarchy α, δ_s, ζ_s, β_s, A_s.
//! * [`sphere`] — boundary-graph machinery: Gagliardo seminorms,
//!   normalizations, gap diagnostics for nearly spherical sets.
//! * [`minimize`] — volume-constrained minimization of `P_s + εV_s`.
//! * [`cheeger`] — fractional Cheeger constants `h_{m,s}` and stability.
//! * [`families`] — oscillating and fractal set families with their
//!   closed-form growth bounds.
//!
//! All computations are deterministic: fixed summation orders, compensated
//! accumulation, seeded RNG, and `libm` for every transcendental call.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(test)]
#[macro_use]
extern crate std;

pub mod cheeger;
pub mod families;
pub mod fft;
pub mod grid;
pub mod indices;
pub mod kernel;
pub mod minimize;
pub mod perimeter;
pub mod potential;
pub mod profile;
pub mod quad;
pub mod reference;
pub mod rng;
pub mod sphere;

/// Volume of the unit ball in dimension `n` (n ∈ {2, 3}).
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        2 => core::f64::consts::PI,
        3 => 4.0 * core::f64::consts::PI / 3.0,
        _ => panic!("unsupported dimension {n}"),
    }
}

/// Surface measure of the unit sphere in dimension `n`: n·ω_n.
pub fn unit_sphere_measure(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}
