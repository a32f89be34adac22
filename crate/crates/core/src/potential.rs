//! Riesz potentials ∫_E |x−y|^{−s} dx of grid sets and the potential
//! functional V_s(E) = max_y ∫_E |x−y|^{−s} dx: midpoint far field,
//! adaptive integration of cells near the evaluation point, and a
//! deterministic multi-start pattern search for the maximizing center.

use alloc::vec::Vec;

use crate::grid::GridSet;
use crate::kernel::kernel_times_weight;
use crate::quad::{KahanSum, SingularBoxIntegral};

/// Cells within this many cell widths of the evaluation point are
/// integrated adaptively in the full-accuracy potential; farther cells use
/// the midpoint rule, whose relative error decays like (h/d)².
pub const NEAR_FIELD_RADIUS_CELLS: f64 = 8.0;

/// Relative tolerance of the adaptive near-field cell integrals.
pub const RIESZ_NEAR_REL_TOL: f64 = 1e-4;

/// Pattern search starts at this many cell widths per step.
pub const SEARCH_INITIAL_STEP_CELLS: f64 = 4.0;

/// Pattern search refines the step down to this fraction of a cell width.
pub const SEARCH_MIN_STEP_CELLS: f64 = 0.125;

/// Optima from different starts count as coincident when their values
/// agree within this relative tolerance.
pub const MULTISTART_VALUE_TOL: f64 = 1e-6;

/// Errors raised by potential evaluation.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialError {
    InvalidExponent(f64),
    InvalidPoint,
    EmptySet,
}

impl core::fmt::Display for PotentialError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PotentialError::InvalidExponent(s) => {
                write!(f, "order s must lie strictly in (0, 1), got {s}")
            }
            PotentialError::InvalidPoint => write!(f, "evaluation point must be finite"),
            PotentialError::EmptySet => write!(f, "operation requires a nonempty set"),
        }
    }
}

/// ∫_E |x−y|^{−s} dx at full accuracy.
pub fn riesz_potential(e: &GridSet, y: &[f64; 3], s: f64) -> Result<f64, PotentialError> {
    validate(y, s)?;
    Ok(riesz_graded(e, y, s, NEAR_FIELD_RADIUS_CELLS, RIESZ_NEAR_REL_TOL))
}

/// Search-grade potential: midpoint everywhere except the few cells
/// containing or touching y. Tracks the full-accuracy landscape closely
/// enough to locate maxima; final values should be re-evaluated with
/// `riesz_potential`.
pub(crate) fn riesz_potential_search(e: &GridSet, y: &[f64; 3], s: f64) -> f64 {
    riesz_graded(e, y, s, 1.5, 1e-3)
}

fn validate(y: &[f64; 3], s: f64) -> Result<(), PotentialError> {
    if !(s > 0.0 && s < 1.0) {
        return Err(PotentialError::InvalidExponent(s));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(PotentialError::InvalidPoint);
    }
    Ok(())
}

fn riesz_graded(e: &GridSet, y: &[f64; 3], s: f64, near_cells: f64, near_tol: f64) -> f64 {
    let n = e.dim();
    let h = e.cell_size();
    let near_r2 = near_cells * h * near_cells * h;
    let mut far = KahanSum::new();
    let mut near = KahanSum::new();
    for c in e.cells() {
        let p = e.cell_center(c);
        let mut d2 = 0.0;
        for a in 0..n {
            let d = p[a] - y[a];
            d2 += d * d;
        }
        if d2 > near_r2 {
            far.add(libm::pow(d2, -0.5 * s));
        } else {
            near.add(cell_riesz_integral(n, h, e.origin(), c, y, s, near_tol));
        }
    }
    libm::pow(h, n as f64) * far.value() + near.value()
}

/// One cell's contribution to the graded potential at y: midpoint kernel
/// beyond `near_cells` cell radii, adaptive cell integral inside. Summing
/// this over a set's cells reproduces the graded potential, which makes
/// the value usable for incremental bookkeeping under cell flips.
pub(crate) fn graded_cell_potential(
    dim: usize,
    h: f64,
    origin: [f64; 3],
    c: &[i64; 3],
    y: &[f64; 3],
    s: f64,
    near_cells: f64,
    near_tol: f64,
) -> f64 {
    let mut d2 = 0.0;
    for a in 0..dim {
        let p = origin[a] + (c[a] as f64 + 0.5) * h;
        let d = p - y[a];
        d2 += d * d;
    }
    if d2 > near_cells * h * near_cells * h {
        libm::pow(h, dim as f64) * libm::pow(d2, -0.5 * s)
    } else {
        cell_riesz_integral(dim, h, origin, c, y, s, near_tol)
    }
}

/// Adaptive ∫_cell |x−y|^{−s} dx; the integrand is integrable even with y
/// inside the cell (s < 1 ≤ n), with ρ-box mass O(ρ^{n−s}).
fn cell_riesz_integral(
    n: usize,
    h: f64,
    origin: [f64; 3],
    c: &[i64; 3],
    y: &[f64; 3],
    s: f64,
    rel_tol: f64,
) -> f64 {
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    for a in 0..n {
        lo[a] = origin[a] + c[a] as f64 * h;
        hi[a] = lo[a] + h;
    }
    let yy = *y;
    let f = move |u: &[f64; 3]| {
        let mut d2 = 0.0;
        for a in 0..n {
            let d = u[a] - yy[a];
            d2 += d * d;
        }
        kernel_times_weight(d2, 1.0, s)
    };
    let inside = (0..n).all(|a| y[a] >= lo[a] - h && y[a] <= hi[a] + h);
    let bound = move |rho: f64| 32.0 * libm::pow(rho, n as f64 - s);
    let integ = SingularBoxIntegral {
        dim: n,
        f: &f,
        singular_point: if inside { Some(yy) } else { None },
        singular_bound: &bound,
        rel_tol,
    };
    integ.integrate(lo, hi)
}

/// Outcome of a multi-start pattern search: the best point and value, and
/// how much the per-start optima disagreed (a large spread signals an
/// ambiguous, multimodal landscape).
#[derive(Clone, Copy, Debug)]
pub struct SearchOutcome {
    pub value: f64,
    pub point: [f64; 3],
    pub value_spread: f64,
    pub center_spread: f64,
}

/// Deterministic compass directions: 8 in the plane, 26 in space.
pub(crate) fn compass_directions(dim: usize) -> Vec<[f64; 3]> {
    let mut dirs = Vec::new();
    let range = [-1i32, 0, 1];
    let zs: &[i32] = if dim == 3 { &range } else { &[0] };
    for &i in &range {
        for &j in &range {
            for &k in zs {
                if i == 0 && j == 0 && k == 0 {
                    continue;
                }
                let norm = libm::sqrt((i * i + j * j + k * k) as f64);
                dirs.push([i as f64 / norm, j as f64 / norm, k as f64 / norm]);
            }
        }
    }
    dirs
}

/// Standard optimizer seeds for a set: barycenter, deepest interior cell,
/// and a compass ring at a third of the volume radius around the
/// barycenter.
pub(crate) fn default_seeds(e: &GridSet) -> Vec<[f64; 3]> {
    let mut seeds = Vec::new();
    let b = match e.barycenter() {
        Ok(b) => b,
        Err(_) => return seeds,
    };
    seeds.push(b);
    if let Ok(d) = e.deepest_cell_center() {
        seeds.push(d);
    }
    let r = libm::pow(e.volume() / crate::unit_ball_volume(e.dim()), 1.0 / e.dim() as f64);
    for dir in compass_directions(e.dim()) {
        let mut p = b;
        for a in 0..e.dim() {
            p[a] += dir[a] * r / 3.0;
        }
        seeds.push(p);
    }
    seeds
}

/// Maximizes f by compass pattern search from each seed (step halves when
/// no direction improves, until it falls below min_step), then picks the
/// best outcome; exact value ties go to the lexicographically smallest
/// point. Fully deterministic.
pub(crate) fn pattern_search_max<F: Fn(&[f64; 3]) -> f64>(
    f: &F,
    dim: usize,
    seeds: &[[f64; 3]],
    initial_step: f64,
    min_step: f64,
) -> SearchOutcome {
    let dirs = compass_directions(dim);
    let mut optima: Vec<([f64; 3], f64)> = Vec::with_capacity(seeds.len());
    for seed in seeds {
        let mut point = *seed;
        let mut value = f(&point);
        let mut step = initial_step;
        while step >= min_step {
            let mut best_dir: Option<usize> = None;
            let mut best_val = value;
            for (i, d) in dirs.iter().enumerate() {
                let mut cand = point;
                for a in 0..dim {
                    cand[a] += step * d[a];
                }
                let v = f(&cand);
                if v > best_val {
                    best_val = v;
                    best_dir = Some(i);
                }
            }
            match best_dir {
                Some(i) => {
                    for a in 0..dim {
                        point[a] += step * dirs[i][a];
                    }
                    value = best_val;
                }
                None => step *= 0.5,
            }
        }
        optima.push((point, value));
    }
    let mut best = 0usize;
    for i in 1..optima.len() {
        let (pi, vi) = optima[i];
        let (pb, vb) = optima[best];
        if vi > vb || (vi == vb && pi < pb) {
            best = i;
        }
    }
    let (point, value) = optima[best];
    let mut value_spread = 0.0f64;
    let mut center_spread = 0.0f64;
    for (pi, vi) in &optima {
        value_spread = value_spread.max(value - vi);
        if value - vi <= MULTISTART_VALUE_TOL * value.abs().max(1e-12) {
            let mut d2 = 0.0;
            for a in 0..dim {
                let d = pi[a] - point[a];
                d2 += d * d;
            }
            center_spread = center_spread.max(libm::sqrt(d2));
        }
    }
    SearchOutcome { value, point, value_spread, center_spread }
}

/// V_s(E) with its maximizing center and the multi-start diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct VsResult {
    pub value: f64,
    pub center: [f64; 3],
    pub value_spread: f64,
    pub center_spread: f64,
}

/// V_s(E) = max_y ∫_E |x−y|^{−s} dx by multi-start pattern search on the
/// search-grade potential, with the winner re-evaluated at full accuracy.
pub fn vs_value(e: &GridSet, s: f64) -> Result<VsResult, PotentialError> {
    validate(&[0.0; 3], s)?;
    if e.is_empty() {
        return Err(PotentialError::EmptySet);
    }
    let h = e.cell_size();
    let phi = |y: &[f64; 3]| riesz_potential_search(e, y, s);
    let seeds = default_seeds(e);
    let outcome = pattern_search_max(
        &phi,
        e.dim(),
        &seeds,
        SEARCH_INITIAL_STEP_CELLS * h,
        SEARCH_MIN_STEP_CELLS * h,
    );
    let value = riesz_potential(e, &outcome.point, s)?;
    Ok(VsResult {
        value,
        center: outcome.point,
        value_spread: outcome.value_spread,
        center_spread: outcome.center_spread,
    })
}

/// Re-runs the V_s multi-start search and reports how far the per-start
/// optima scattered in value and position.
pub fn vs_center_stability(e: &GridSet, s: f64) -> Result<(f64, f64), PotentialError> {
    let r = vs_value(e, s)?;
    Ok((r.value_spread, r.center_spread))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{rasterize_ball, Ball, GridSet};
    use crate::quad::adaptive_simpson;

    fn disk(h: f64) -> GridSet {
        rasterize_ball(&Ball { dim: 2, center: [0.0; 3], radius: 1.0 }, h).unwrap()
    }

    #[test]
    fn potential_of_single_cell_at_center_matches_polar_reduction() {
        // ∫_{[−1/2,1/2]²} |u|^{−s} du = 8/(2−s)·(1/2)^{2−s}·∫_0^{π/4} cos^{s−2}φ dφ.
        let s = 0.5;
        let e = GridSet::new(2, 1.0, [0.0; 3], alloc::vec![[0, 0, 0]]).unwrap();
        let got = riesz_potential(&e, &[0.5, 0.5, 0.0], s).unwrap();
        let f = |phi: f64| libm::pow(libm::cos(phi), s - 2.0);
        let exact = 8.0 / (2.0 - s)
            * libm::pow(0.5, 2.0 - s)
            * adaptive_simpson(&f, 0.0, core::f64::consts::PI / 4.0, 1e-12);
        assert!(
            ((got - exact) / exact).abs() < 2e-4,
            "cell potential {got} vs polar oracle {exact}"
        );
    }

    #[test]
    fn potential_at_disk_center_matches_equivalent_ball() {
        // Compare against the analytic center potential of the ball with
        // the set's measured volume, removing the rasterization volume
        // bias: V = nω_n r^{n−s}/(n−s).
        let h = 1.0 / 64.0;
        let e = disk(h);
        for s in [0.25, 0.75] {
            let got = riesz_potential(&e, &[0.0, 0.0, 0.0], s).unwrap();
            let r = libm::sqrt(e.volume() / core::f64::consts::PI);
            let exact = 2.0 * core::f64::consts::PI / (2.0 - s) * libm::pow(r, 2.0 - s);
            assert!(
                ((got - exact) / exact).abs() < 2e-3,
                "center potential {got} vs ball value {exact} at s = {s}"
            );
        }
    }

    #[test]
    fn potential_far_away_sees_a_point_mass() {
        let h = 1.0 / 32.0;
        let e = disk(h);
        let s = 0.5;
        let y = [12.0, 0.0, 0.0];
        let got = riesz_potential(&e, &y, s).unwrap();
        let point_mass = e.volume() * libm::pow(12.0, -s);
        assert!(
            ((got - point_mass) / point_mass).abs() < 2e-3,
            "far potential {got} vs point mass {point_mass}"
        );
    }

    #[test]
    fn vs_of_disk_peaks_at_the_center() {
        let h = 1.0 / 32.0;
        let e = disk(h);
        let s = 0.5;
        let r = vs_value(&e, s).unwrap();
        assert!(
            libm::sqrt(r.center[0] * r.center[0] + r.center[1] * r.center[1]) <= 2.0 * h,
            "center {:?} should be near the origin",
            r.center
        );
        let radius = libm::sqrt(e.volume() / core::f64::consts::PI);
        let exact = 2.0 * core::f64::consts::PI / (2.0 - s) * libm::pow(radius, 2.0 - s);
        assert!(((r.value - exact) / exact).abs() < 5e-3);
        assert!(r.center_spread < 0.1, "unimodal landscape, spread {}", r.center_spread);
    }

    #[test]
    fn vs_of_two_balls_picks_one_ball_not_the_midpoint() {
        let h = 1.0 / 32.0;
        let r = 1.0 / libm::sqrt(2.0);
        let left = rasterize_ball(&Ball { dim: 2, center: [-1.5, 0.0, 0.0], radius: r }, h).unwrap();
        let right = rasterize_ball(&Ball { dim: 2, center: [1.5, 0.0, 0.0], radius: r }, h).unwrap();
        let e = left.union_disjoint(&right).unwrap();
        let s = 0.5;
        let out = vs_value(&e, s).unwrap();
        let dist_left = libm::fabs(out.center[0] + 1.5);
        let dist_right = libm::fabs(out.center[0] - 1.5);
        assert!(
            dist_left.min(dist_right) < r / 2.0,
            "maximizer {:?} must sit deep inside one ball",
            out.center
        );
        let at_midpoint = riesz_potential(&e, &[0.0, 0.0, 0.0], s).unwrap();
        assert!(out.value > at_midpoint, "{} should beat the saddle {at_midpoint}", out.value);
    }

    #[test]
    fn vs_is_translation_equivariant() {
        let h = 1.0 / 32.0;
        let e = disk(h);
        let s = 0.5;
        let base = vs_value(&e, s).unwrap();
        let v = [17.0 * h, -9.0 * h, 0.0];
        let moved = vs_value(&e.translate(v), s).unwrap();
        // The search stops once its step falls below h/8, so optima of the
        // shifted landscape scatter within that step and values within the
        // curvature times its square.
        assert!(((moved.value - base.value) / base.value).abs() < 2e-5);
        assert!((moved.center[0] - (base.center[0] + v[0])).abs() < h / 4.0);
        assert!((moved.center[1] - (base.center[1] + v[1])).abs() < h / 4.0);
    }

    #[test]
    fn rejects_bad_exponent_and_empty_set() {
        let e = disk(1.0 / 16.0);
        assert!(riesz_potential(&e, &[0.0; 3], 1.0).is_err());
        assert!(riesz_potential(&e, &[0.0; 3], 0.0).is_err());
        assert!(riesz_potential(&e, &[f64::NAN, 0.0, 0.0], 0.5).is_err());
        let empty = GridSet::new(2, 0.5, [0.0; 3], alloc::vec::Vec::new()).unwrap();
        assert!(vs_value(&empty, 0.5).is_err());
        assert_eq!(riesz_potential(&empty, &[0.0; 3], 0.5).unwrap(), 0.0);
    }
}
