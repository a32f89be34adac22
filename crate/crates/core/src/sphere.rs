//! Boundary-graph machinery for nearly spherical planar sets
//! E_u = { x : |x| < 1 + u(x/|x|) }: volume and barycenter normalization,
//! the Gagliardo seminorm [u]²_{(1+s)/2} on the circle with chord distance,
//! the radial expansion h(t) = ∫ (1 + t·u)^{n−s}, and gap diagnostics that
//! compare grid perimeters and potentials against their spectral
//! counterparts. Planar only: n = 2 throughout.

use alloc::vec::Vec;

use crate::kernel::{InteractionTable, KernelParams};
use crate::perimeter::{fractional_perimeter, PerimeterError};
use crate::profile::{ProfileError, RadialProfile};
use crate::quad::{adaptive_simpson, KahanSum};
use crate::reference::{ReferenceCache, ReferenceError};

/// Bisection target for the volume constraint, measured on the discrete
/// form of ∫ ((1+u)ⁿ − 1) dθ.
pub const VOLUME_NORMALIZE_TOL: f64 = 1e-10;

/// Fixed-point target for the barycenter norm after recentering.
pub const BARYCENTER_TOL: f64 = 1e-8;

/// Iteration cap for the barycenter fixed point; recentering is exact up
/// to interpolation error, so hitting this cap means the profile is too
/// large for the star-shaped resampling to be well posed.
pub const MAX_BARYCENTER_ITERS: usize = 40;

/// Minimum angular resolution for seminorm quadrature.
pub const MIN_SEMINORM_SAMPLES: usize = 32;

/// Relative accuracy of the diagonal-cell correction; the inner
/// quadratures run three decades tighter so this bound never binds.
pub const DIAGONAL_REL_TOL: f64 = 1e-4;

/// Normalized profiles must stay strictly below this sup bound.
pub const NORMALIZED_SUP_LIMIT: f64 = 0.5;

/// Largest profile amplitude accepted by the grid gap comparison.
pub const FUGLEDE_SUP_LIMIT: f64 = 0.2;

/// A grid perimeter gap below −tol·P_s(B_1) flags a rasterization too
/// coarse to resolve the profile.
pub const NEGATIVE_GAP_REL_TOL: f64 = 1e-3;

/// Errors raised by profile normalization and gap diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub enum SphereError {
    Profile(ProfileError),
    Perimeter(PerimeterError),
    Reference(ReferenceError),
    /// s must lie strictly between 0 and 1.
    InvalidOrder { s: f64 },
    /// Spectral operations are implemented in the plane only.
    PlanarOnly { dim: usize },
    TooFewSamples { got: usize, min: usize },
    /// No additive shift reaches the target volume with a positive
    /// radial extent.
    NormalizationInfeasible { residual: f64 },
    SupNormTooLarge { sup: f64, limit: f64 },
    /// The barycenter iteration lost star-shapedness about the new origin.
    BarycenterStalled { norm: f64 },
    /// 1 + t·u must stay strictly positive.
    NonPositiveExtent { min_extent: f64 },
    /// Grid perimeter fell below the cached ball value by more than the
    /// coarse-resolution tolerance.
    NegativeGap { gap: f64, tol: f64 },
}

impl core::fmt::Display for SphereError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SphereError::Profile(e) => write!(f, "profile error: {e}"),
            SphereError::Perimeter(e) => write!(f, "perimeter evaluation failed: {e}"),
            SphereError::Reference(e) => write!(f, "reference cache rejected: {e}"),
            SphereError::InvalidOrder { s } => write!(f, "order s = {s} outside (0, 1)"),
            SphereError::PlanarOnly { dim } => {
                write!(f, "spectral operations need dimension 2, got {dim}")
            }
            SphereError::TooFewSamples { got, min } => {
                write!(f, "seminorm needs at least {min} samples, got {got}")
            }
            SphereError::NormalizationInfeasible { residual } => {
                write!(f, "volume normalization infeasible, residual {residual}")
            }
            SphereError::SupNormTooLarge { sup, limit } => {
                write!(f, "profile sup norm {sup} exceeds the limit {limit}")
            }
            SphereError::BarycenterStalled { norm } => {
                write!(f, "barycenter iteration stalled at norm {norm}")
            }
            SphereError::NonPositiveExtent { min_extent } => {
                write!(f, "radial extent 1 + t·u reaches {min_extent}")
            }
            SphereError::NegativeGap { gap, tol } => {
                write!(f, "perimeter gap {gap} below -{tol}: resolution too coarse")
            }
        }
    }
}

impl From<ProfileError> for SphereError {
    fn from(e: ProfileError) -> Self {
        SphereError::Profile(e)
    }
}

impl From<PerimeterError> for SphereError {
    fn from(e: PerimeterError) -> Self {
        SphereError::Perimeter(e)
    }
}

impl From<ReferenceError> for SphereError {
    fn from(e: ReferenceError) -> Self {
        SphereError::Reference(e)
    }
}

fn check_order(s: f64) -> Result<(), SphereError> {
    if !(s > 0.0 && s < 1.0) {
        return Err(SphereError::InvalidOrder { s });
    }
    Ok(())
}

/// ∫ u² dθ by the exact periodic mean.
fn l2_sq(u: &RadialProfile) -> f64 {
    2.0 * core::f64::consts::PI * u.mean(|v, _| v * v)
}

/// Wraps an angle difference into [−π, π).
fn wrap_angle(x: f64) -> f64 {
    let pi = core::f64::consts::PI;
    let mut y = libm::fmod(x + pi, 2.0 * pi);
    if y < 0.0 {
        y += 2.0 * pi;
    }
    y - pi
}

fn check_normalized(u: RadialProfile) -> Result<RadialProfile, SphereError> {
    let sup = u.sup_norm();
    if sup >= NORMALIZED_SUP_LIMIT {
        return Err(SphereError::SupNormTooLarge { sup, limit: NORMALIZED_SUP_LIMIT });
    }
    Ok(u)
}

/// Shifts u by the additive constant that restores the unit-ball volume:
/// the discrete mean of (1 + u)² is driven to 1 by bisection, so that
/// ∫ ((1+u)² − 1) dθ vanishes within `VOLUME_NORMALIZE_TOL`.
pub fn volume_normalize(u: &RadialProfile) -> Result<RadialProfile, SphereError> {
    let two_pi = 2.0 * core::f64::consts::PI;
    let excess = |c: f64| {
        u.mean(|v, _| {
            let e = 1.0 + v + c;
            e * e
        }) - 1.0
    };
    let at_zero = excess(0.0);
    if libm::fabs(at_zero) * two_pi <= VOLUME_NORMALIZE_TOL {
        return check_normalized(u.clone());
    }
    let (mut lo, mut hi);
    if at_zero > 0.0 {
        // Shrink: the shift may approach the star-shapedness boundary but
        // not cross it. If even the flattest valid profile is too big, no
        // constant works.
        lo = 1e-12 - u.min_radial_extent();
        hi = 0.0;
        let at_lo = excess(lo);
        if at_lo >= 0.0 {
            return Err(SphereError::NormalizationInfeasible { residual: at_lo });
        }
    } else {
        lo = 0.0;
        hi = 1.0;
        while excess(hi) <= 0.0 {
            hi *= 2.0;
            if hi > 1e9 {
                return Err(SphereError::NormalizationInfeasible { residual: at_zero });
            }
        }
    }
    for _ in 0..128 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    let residual = excess(c);
    if libm::fabs(residual) * two_pi > VOLUME_NORMALIZE_TOL {
        return Err(SphereError::NormalizationInfeasible { residual });
    }
    check_normalized(u.shifted(c))
}

/// Barycenter of E_u (n = 2) from the exact radial moments
/// ∫ ω(θ)·(1+u)³/3 dθ over the area ∫ (1+u)²/2 dθ.
pub fn barycenter(u: &RadialProfile) -> [f64; 2] {
    let pi = core::f64::consts::PI;
    let area = pi * u.mean(|v, _| (1.0 + v) * (1.0 + v));
    let third = 2.0 * pi / 3.0;
    let mx = third
        * u.mean(|v, th| {
            let e = 1.0 + v;
            libm::cos(th) * e * e * e
        });
    let my = third
        * u.mean(|v, th| {
            let e = 1.0 + v;
            libm::sin(th) * e * e * e
        });
    [mx / area, my / area]
}

/// Profile of E_u − b about the shifted origin: for each target angle the
/// boundary ray is found by bisection on the trigonometric interpolant of
/// the boundary curve.
fn translated_profile(u: &RadialProfile, b: [f64; 2]) -> Result<RadialProfile, SphereError> {
    let m = u.sample_count();
    let (a0, modes) = u.fourier_coefficients(m / 2 - 1);
    let bnorm = libm::sqrt(b[0] * b[0] + b[1] * b[1]);
    let point = |phi: f64| -> [f64; 2] {
        let r = 1.0 + RadialProfile::eval_trig(a0, &modes, phi);
        [r * libm::cos(phi) - b[0], r * libm::sin(phi) - b[1]]
    };
    let mut samples = Vec::with_capacity(m);
    for k in 0..m {
        let th = u.angle(k);
        let miss = |phi: f64| {
            let p = point(phi);
            wrap_angle(libm::atan2(p[1], p[0]) - th)
        };
        // |b| < extent/2 keeps the angular deflection below asin(1/2), so
        // a ±1 radian bracket always straddles the root.
        let (mut lo, mut hi) = (th - 1.0, th + 1.0);
        if !(miss(lo) < 0.0 && miss(hi) > 0.0) {
            return Err(SphereError::BarycenterStalled { norm: bnorm });
        }
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if miss(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let p = point(0.5 * (lo + hi));
        samples.push(libm::sqrt(p[0] * p[0] + p[1] * p[1]) - 1.0);
    }
    Ok(RadialProfile::new(samples)?)
}

/// Translates E_u so its barycenter sits at the origin, re-sampling the
/// star-shaped boundary about the new center. Recentering is exact up to
/// interpolation, so the fixed point converges in a couple of rounds.
pub fn barycenter_normalize(u: &RadialProfile) -> Result<RadialProfile, SphereError> {
    let mut cur = u.clone();
    for _ in 0..MAX_BARYCENTER_ITERS {
        let b = barycenter(&cur);
        let norm = libm::sqrt(b[0] * b[0] + b[1] * b[1]);
        if norm <= BARYCENTER_TOL {
            return check_normalized(cur);
        }
        if norm >= 0.5 * cur.min_radial_extent() {
            return Err(SphereError::BarycenterStalled { norm });
        }
        cur = translated_profile(&cur, b)?;
    }
    let b = barycenter(&cur);
    Err(SphereError::BarycenterStalled { norm: libm::sqrt(b[0] * b[0] + b[1] * b[1]) })
}

/// Chord-distance kernel |x − y|^{−(2+s)} on the unit circle as a function
/// of the angle gap w.
fn kernel_chord(w: f64, s: f64) -> f64 {
    libm::pow(2.0 * libm::sin(0.5 * w), -(2.0 + s))
}

/// Smooth factor φ(w) = (w / (2 sin(w/2)))^{2+s}, the chord kernel with its
/// power singularity divided out.
fn chord_factor(w: f64, s: f64) -> f64 {
    if w < 1e-8 {
        1.0
    } else {
        libm::pow(w / (2.0 * libm::sin(0.5 * w)), 2.0 + s)
    }
}

/// ∫_0^a (a − w) w² K(w) dw, the same-slope half of a diagonal cell, with
/// the substitution w = v^{1/(1−s)} that removes the endpoint singularity.
fn half_cell_integral(a: f64, s: f64) -> f64 {
    let q = 1.0 / (1.0 - s);
    let f = |v: f64| {
        let w = libm::pow(v, q);
        q * (a - w) * chord_factor(w, s)
    };
    adaptive_simpson(&f, 0.0, libm::pow(a, 1.0 - s), DIAGONAL_REL_TOL * 1e-3)
}

/// Quadratic-form weights (same-slope, cross-slope) for the two cross
/// quadrants of a diagonal cell: integrating (g_l·p + g_r·η)² K(p + η)
/// over [0,a]² reduces along anti-diagonals σ = p + η to weights on
/// g_l² + g_r² and g_l·g_r.
fn cross_cell_weights(a: f64, s: f64) -> (f64, f64) {
    let rel = DIAGONAL_REL_TOL * 1e-3;
    // σ ≤ a: the anti-diagonal segment is unclipped and the η-moments are
    // σ³/3, σ³/6, σ³/3, all proportional to the third kernel moment.
    let q = 1.0 / (1.0 - s);
    let third_moment = {
        let f = |v: f64| {
            let w = libm::pow(v, q);
            q * w * chord_factor(w, s)
        };
        adaptive_simpson(&f, 0.0, libm::pow(a, 1.0 - s), rel)
    };
    // σ ∈ [a, 2a]: the segment is clipped to η ∈ [σ−a, a]; T1 = ∫ p² dη
    // equals T3 = ∫ η² dη by the p ↔ η reflection, T2 = ∫ p·η dη.
    let t13 = |sg: f64| {
        let d = sg - a;
        (a * a * a - d * d * d) / 3.0
    };
    let t2 = |sg: f64| {
        let d = sg - a;
        0.5 * sg * (a * a - d * d) - t13(sg)
    };
    let u13 = adaptive_simpson(&|sg: f64| kernel_chord(sg, s) * t13(sg), a, 2.0 * a, rel);
    let u2 = adaptive_simpson(&|sg: f64| kernel_chord(sg, s) * t2(sg), a, 2.0 * a, rel);
    (third_moment / 3.0 + u13, third_moment / 6.0 + u2)
}

/// Squared Gagliardo seminorm [u]²_{(1+s)/2} = ∬ |u(x)−u(y)|²/|x−y|^{2+s}
/// over ∂B_1 × ∂B_1: ordered double sum over distinct node pairs with the
/// chord kernel, plus the exact integral of the piecewise-linear
/// interpolant over the diagonal cells the sum cannot see.
pub fn gagliardo_seminorm_sq(u: &RadialProfile, s: f64) -> Result<f64, SphereError> {
    check_order(s)?;
    let m = u.sample_count();
    if m < MIN_SEMINORM_SAMPLES {
        return Err(SphereError::TooFewSamples { got: m, min: MIN_SEMINORM_SAMPLES });
    }
    let vals = u.samples();
    let pi = core::f64::consts::PI;
    let dth = 2.0 * pi / m as f64;
    let mut off_diag = KahanSum::new();
    for d in 1..m {
        let mut lag = KahanSum::new();
        for k in 0..m {
            let diff = vals[(k + d) % m] - vals[k];
            lag.add(diff * diff);
        }
        off_diag.add(lag.value() * kernel_chord(dth * d as f64, s));
    }
    let mut total = off_diag.value() * dth * dth;
    // Each diagonal cell spans the two arcs adjacent to its node, with
    // slopes g_l, g_r of the interpolant on either side: two same-slope
    // halves plus two mixed quadrants.
    let a = 0.5 * dth;
    let jhalf = half_cell_integral(a, s);
    let (w_same, w_cross) = cross_cell_weights(a, s);
    let mut corr = KahanSum::new();
    for k in 0..m {
        let gl = (vals[k] - vals[(k + m - 1) % m]) / dth;
        let gr = (vals[(k + 1) % m] - vals[k]) / dth;
        corr.add(
            2.0 * (gl * gl + gr * gr) * (jhalf + w_same) + 4.0 * gl * gr * w_cross,
        );
    }
    total += corr.value();
    Ok(total)
}

/// h(t) = ∫_{∂B_1} (1 + t·u)^{n−s} dθ for n = 2, by the exact periodic
/// mean; h(0) is the circumference 2π.
pub fn h_function(u: &RadialProfile, t: f64, s: f64) -> Result<f64, SphereError> {
    check_order(s)?;
    let mut min_extent = f64::INFINITY;
    for &v in u.samples() {
        min_extent = min_extent.min(1.0 + t * v);
    }
    if !(min_extent > 0.0) {
        return Err(SphereError::NonPositiveExtent { min_extent });
    }
    let q = 2.0 - s;
    Ok(2.0 * core::f64::consts::PI * u.mean(|v, _| libm::pow(1.0 + t * v, q)))
}

/// Spectral bound for the potential gap of a normalized profile.
#[derive(Clone, Copy, Debug)]
pub struct VsGapBound {
    /// (h(0) − h(1))/(n − s): the potential gap measured at the origin.
    /// An upper bound for V_s(B_1) − V_s(E_u), exact when the maximizing
    /// center of E_u sits at the origin.
    pub gap_bound: f64,
    /// ∫ u² dθ.
    pub l2_sq: f64,
    /// gap_bound / ‖u‖², zero for the zero profile.
    pub ratio: f64,
}

/// Potential-gap bound (h(0) − h(1))/(n − s) for a volume- and
/// barycenter-normalized profile, with the ratio against ‖u‖²_{L²}.
pub fn vs_gap_bound(u: &RadialProfile, s: f64) -> Result<VsGapBound, SphereError> {
    let h0 = h_function(u, 0.0, s)?;
    let h1 = h_function(u, 1.0, s)?;
    let gap_bound = (h0 - h1) / (2.0 - s);
    let l2 = l2_sq(u);
    let ratio = if l2 > 0.0 { gap_bound / l2 } else { 0.0 };
    Ok(VsGapBound { gap_bound, l2_sq: l2, ratio })
}

/// Grid-versus-spectral gap diagnostics for one profile.
#[derive(Clone, Copy, Debug)]
pub struct FugledeGap {
    /// P_s(E_u) − P_s(B_1), both on the cache's grid.
    pub gap: f64,
    /// [u]²_{(1+s)/2}.
    pub seminorm_sq: f64,
    /// ∫ u² dθ.
    pub l2_sq: f64,
    /// gap / ([u]² + s·P_s(B_1)·‖u‖²), zero for the zero profile.
    pub ratio: f64,
}

/// Rasterizes E_u at the cache's resolution and compares its perimeter
/// against the shared cached P_s(B_1); the ratio reports the gap over the
/// seminorm form [u]² + s·P_s(B_1)·‖u‖².
pub fn fuglede_gap(
    u: &RadialProfile,
    params: &KernelParams,
    table: &InteractionTable,
    cache: &ReferenceCache,
) -> Result<FugledeGap, SphereError> {
    if params.dim != 2 {
        return Err(SphereError::PlanarOnly { dim: params.dim });
    }
    let sup = u.sup_norm();
    if sup > FUGLEDE_SUP_LIMIT {
        return Err(SphereError::SupNormTooLarge { sup, limit: FUGLEDE_SUP_LIMIT });
    }
    cache.check_matches(params.dim, params.s, cache.h)?;
    let e = u.rasterize(cache.h)?;
    let p = fractional_perimeter(&e, params, table)?;
    let gap = p - cache.ps_b1;
    let tol = NEGATIVE_GAP_REL_TOL * cache.ps_b1;
    if gap < -tol {
        return Err(SphereError::NegativeGap { gap, tol });
    }
    let seminorm_sq = gagliardo_seminorm_sq(u, params.s)?;
    let l2 = l2_sq(u);
    let denom = seminorm_sq + params.s * cache.ps_b1 * l2;
    let ratio = if denom > 0.0 { gap / denom } else { 0.0 };
    Ok(FugledeGap { gap, seminorm_sq, l2_sq: l2, ratio })
}
