//! Asymmetry indices of a grid set relative to balls: Fraenkel asymmetry,
//! isoperimetric deficit, potential gap, their square-root combination,
//! and the strong asymmetry that couples the symmetric-difference and
//! potential terms through one shared center.
//!
//! All normalizations use cached unit-ball values at matching resolution,
//! so the leading discretization bias cancels in every ratio, and the
//! identity beta² = delta + zeta holds at roundoff by construction.

use crate::grid::{rasterize_ball, Ball, GridError, GridSet};
use crate::kernel::{InteractionTable, KernelParams};
use crate::perimeter::{fractional_perimeter, PerimeterError};
use crate::potential::{
    default_seeds, pattern_search_max, riesz_potential, riesz_potential_search, vs_value,
    PotentialError, SEARCH_INITIAL_STEP_CELLS, SEARCH_MIN_STEP_CELLS,
};
use crate::reference::{ReferenceCache, ReferenceError};

/// Hard error threshold for the beta radicand: more negative than this is
/// an inconsistent cache or a broken perimeter, not discretization noise.
pub const BETA_RADICAND_HARD_LIMIT: f64 = 1e-3;

/// Accepted relative mismatch between the set's cell size and the cache
/// resolution. Exact-volume rescaling perturbs h by the scale factor, so
/// bit-exact agreement is too strict for normalized sets.
pub const CACHE_H_REL_TOL: f64 = 0.02;

/// Relative slack granted when testing the annulus lower bound.
pub const ANNULUS_SLACK: f64 = 0.01;

/// Errors raised while computing indices.
#[derive(Clone, Debug, PartialEq)]
pub enum IndexError {
    Grid(GridError),
    Perimeter(PerimeterError),
    Potential(PotentialError),
    Reference(ReferenceError),
    EmptySet,
    /// The beta radicand fell below −BETA_RADICAND_HARD_LIMIT.
    NegativeBetaRadicand { radicand: f64 },
}

impl core::fmt::Display for IndexError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            IndexError::Grid(e) => write!(f, "grid error: {e}"),
            IndexError::Perimeter(e) => write!(f, "perimeter error: {e}"),
            IndexError::Potential(e) => write!(f, "potential error: {e}"),
            IndexError::Reference(e) => write!(f, "reference error: {e}"),
            IndexError::EmptySet => write!(f, "indices of the empty set are undefined"),
            IndexError::NegativeBetaRadicand { radicand } => write!(
                f,
                "beta radicand {radicand} is below -{BETA_RADICAND_HARD_LIMIT}; \
                 cache and set are inconsistent"
            ),
        }
    }
}

impl From<GridError> for IndexError {
    fn from(e: GridError) -> Self {
        IndexError::Grid(e)
    }
}

impl From<PerimeterError> for IndexError {
    fn from(e: PerimeterError) -> Self {
        IndexError::Perimeter(e)
    }
}

impl From<PotentialError> for IndexError {
    fn from(e: PotentialError) -> Self {
        IndexError::Potential(e)
    }
}

impl From<ReferenceError> for IndexError {
    fn from(e: ReferenceError) -> Self {
        IndexError::Reference(e)
    }
}

/// All indices of one set, with the optimizing centers.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexReport {
    /// Equivalent ball radius in the grid sense; see equivalent_radius.
    pub r: f64,
    /// Fraenkel asymmetry min_y |EΔB_r(y)|/|E|.
    pub alpha: f64,
    pub alpha_center: [f64; 3],
    /// Isoperimetric deficit P_s(E)/P_s(B_r) − 1.
    pub delta_s: f64,
    /// Potential gap (V_s(B_r) − V_s(E))/V_s(B_r).
    pub zeta_s: f64,
    /// (P_s(E) − c_{n,s} V_s(E))/P_s(B_r), computed directly.
    pub beta_sq: f64,
    pub beta_s: f64,
    /// True when a slightly negative radicand was clamped to zero.
    pub beta_clamped: bool,
    /// Strong asymmetry: joint minimum over one center of the Fraenkel
    /// quotient plus the square root of the potential term.
    pub a_s: f64,
    pub a_center: [f64; 3],
    /// Maximizer of the Riesz potential.
    pub vs_center: [f64; 3],
}

/// Annulus lower bound for the potential gap of a volume-normalized set
/// in terms of the volume fraction a = |E \ B_1(y_V)|/ω_n:
/// 2 − (1+a)^{(n−s)/n} − (1−a)^{(n−s)/n}.
pub fn annulus_lower_bound(n: usize, s: f64, outside_fraction: f64) -> f64 {
    let q = (n as f64 - s) / n as f64;
    2.0 - libm::pow(1.0 + outside_fraction, q) - libm::pow(1.0 - outside_fraction, q)
}

/// Outcome of testing the annulus bound on one set.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnulusReport {
    pub zeta_s: f64,
    /// |E \ B_1(y_V)| / ω_n after exact-volume rescaling.
    pub outside_fraction: f64,
    pub lower_bound: f64,
    pub satisfied: bool,
}

/// Equivalent ball radius in the grid sense: r with vol_h(B_r) = |E|,
/// where vol_h(B_1) is the volume of the unit ball rasterized at E's own
/// cell size. Using the discrete ball volume instead of ω_n keeps the
/// erratic lattice volume error of the reference ball out of every index:
/// the rasterized unit ball gets r = 1 and vanishing indices exactly.
pub fn equivalent_radius(e: &GridSet) -> Result<f64, IndexError> {
    if e.is_empty() {
        return Err(IndexError::EmptySet);
    }
    let unit = Ball { dim: e.dim(), center: [0.0; 3], radius: 1.0 };
    let v1 = rasterize_ball(&unit, e.cell_size())?.volume();
    Ok(libm::pow(e.volume() / v1, 1.0 / e.dim() as f64))
}

fn check_cache(e: &GridSet, params: &KernelParams, cache: &ReferenceCache) -> Result<(), IndexError> {
    if cache.n != params.dim || cache.s.to_bits() != params.s.to_bits() {
        return Err(IndexError::Reference(ReferenceError::ParameterMismatch {
            field: if cache.n != params.dim { "n" } else { "s" },
        }));
    }
    if libm::fabs(e.cell_size() / cache.h - 1.0) > CACHE_H_REL_TOL {
        return Err(IndexError::Reference(ReferenceError::ParameterMismatch { field: "h" }));
    }
    Ok(())
}

/// Symmetric difference volume against the ball of equivalent radius
/// centered at y, divided by the set volume. The ball shares the set's
/// dimension, so the measurement cannot fail.
fn fraenkel_quotient(e: &GridSet, r: f64, y: &[f64; 3]) -> f64 {
    let ball = Ball { dim: e.dim(), center: *y, radius: r };
    let sym = e.symmetric_difference_volume(&ball).expect("dimensions match");
    sym / e.volume()
}

/// Fraenkel asymmetry min_y |EΔB_r(y)|/|E| by multi-start pattern search,
/// returning the value and the optimizing center. The objective is
/// cellwise, so the center is resolved to a fraction of a cell.
pub fn fraenkel_asymmetry(e: &GridSet) -> Result<(f64, [f64; 3]), IndexError> {
    if e.is_empty() {
        return Err(IndexError::EmptySet);
    }
    let r = equivalent_radius(e)?;
    let h = e.cell_size();
    let seeds = default_seeds(e);
    let outcome = pattern_search_max(
        &|y| -fraenkel_quotient(e, r, y),
        e.dim(),
        &seeds,
        SEARCH_INITIAL_STEP_CELLS * h,
        SEARCH_MIN_STEP_CELLS * h,
    );
    Ok((-outcome.value, outcome.point))
}

/// Computes every index of one set. The cache must match (n, s) exactly
/// and the cell size up to CACHE_H_REL_TOL.
pub fn index_report(
    e: &GridSet,
    params: &KernelParams,
    table: &InteractionTable,
    cache: &ReferenceCache,
) -> Result<IndexReport, IndexError> {
    if e.is_empty() {
        return Err(IndexError::EmptySet);
    }
    check_cache(e, params, cache)?;
    let n = params.dim;
    let s = params.s;
    let r = equivalent_radius(e)?;
    let scale = libm::pow(r, n as f64 - s);
    let ps_ball = scale * cache.ps_b1;
    let vs_ball = scale * cache.vs_b1;
    let c_ns = cache.c_ns();

    let p = fractional_perimeter(e, params, table)?;
    let vs = vs_value(e, s)?;
    let (alpha, alpha_center) = fraenkel_asymmetry(e)?;

    let delta_s = (p - ps_ball) / ps_ball;
    let zeta_s = (vs_ball - vs.value) / vs_ball;
    let beta_sq = (p - c_ns * vs.value) / ps_ball;
    let (beta_sq_clamped, beta_clamped) = if beta_sq >= 0.0 {
        (beta_sq, false)
    } else if beta_sq >= -BETA_RADICAND_HARD_LIMIT {
        (0.0, true)
    } else {
        return Err(IndexError::NegativeBetaRadicand { radicand: beta_sq });
    };
    let beta_s = libm::sqrt(beta_sq_clamped);

    // Strong asymmetry: joint center. Search with the cheap potential and
    // re-evaluate the winner with the accurate one.
    let h = e.cell_size();
    let seeds = default_seeds(e);
    let search_obj = |y: &[f64; 3]| -> f64 {
        let radicand = ((p - c_ns * riesz_potential_search(e, y, s)) / ps_ball).max(0.0);
        -(fraenkel_quotient(e, r, y) + libm::sqrt(radicand))
    };
    let outcome = pattern_search_max(
        &search_obj,
        n,
        &seeds,
        SEARCH_INITIAL_STEP_CELLS * h,
        SEARCH_MIN_STEP_CELLS * h,
    );
    let a_center = outcome.point;
    let radicand = ((p - c_ns * riesz_potential(e, &a_center, s)?) / ps_ball).max(0.0);
    let a_s = fraenkel_quotient(e, r, &a_center) + libm::sqrt(radicand);

    Ok(IndexReport {
        r,
        alpha,
        alpha_center,
        delta_s,
        zeta_s,
        beta_sq,
        beta_s,
        beta_clamped,
        a_s,
        a_center,
        vs_center: vs.center,
    })
}

/// Tests the annulus lower bound on the potential gap: rescales the set
/// to exact volume ω_n, finds the potential-optimal center, measures the
/// volume fraction outside the unit ball there, and compares the gap to
/// the bound with ANNULUS_SLACK relative slack. Expects input volume
/// already within a few percent of ω_n so the cache resolution stays
/// applicable.
pub fn annulus_report(
    e: &GridSet,
    params: &KernelParams,
    table: &InteractionTable,
    cache: &ReferenceCache,
) -> Result<AnnulusReport, IndexError> {
    if e.is_empty() {
        return Err(IndexError::EmptySet);
    }
    let n = params.dim;
    let s = params.s;
    let wn = crate::unit_ball_volume(n);
    let lambda = libm::pow(wn / e.volume(), 1.0 / n as f64);
    let e1 = e.scale(lambda)?;
    check_cache(&e1, params, cache)?;

    let vs = vs_value(&e1, s)?;
    let vs_ball = cache.vs_b1;
    let zeta_s = (vs_ball - vs.value) / vs_ball;

    let ball = Ball { dim: n, center: vs.center, radius: 1.0 };
    // |E| = ω_n exactly after rescaling, so |E \ B_1| = |EΔB_1|/2.
    let outside = 0.5 * e1.symmetric_difference_volume(&ball)?;
    let outside_fraction = outside / wn;
    let lower_bound = annulus_lower_bound(n, s, outside_fraction);
    let slack = ANNULUS_SLACK * zeta_s.abs().max(lower_bound.abs()).max(1e-9);
    let _ = table;
    Ok(AnnulusReport {
        zeta_s,
        outside_fraction,
        lower_bound,
        satisfied: zeta_s + slack >= lower_bound,
    })
}
