//! Fractional perimeter of grid sets by the exact complement
//! decomposition: with S = one cell against its whole complement and
//! Q = Σ over unordered occupied pairs of the pair integral,
//!
//!   P_s(E) = h^{n−s}·(N·S_unit − 2·Q_unit),
//!
//! which needs no truncation of the complement. Pair sums run either
//! directly over all pairs or, for large planar sets, through an exact
//! integer autocorrelation computed by FFT. A truncated variant with an
//! analytic radial tail is kept as a cross-check diagnostic.

use alloc::vec::Vec;

use crate::fft::AutocorrCounts;
use crate::grid::GridSet;
use crate::kernel::{InteractionTable, KernelError, KernelParams};
use crate::quad::KahanSum;

/// Pair sums switch to the FFT autocorrelation path above this cell count
/// (planar sets only; the crossover is approximate and the paths agree to
/// rounding).
pub const FFT_PAIR_THRESHOLD: usize = 3000;

/// Largest tolerated distance between raw FFT autocorrelation values and
/// integers; far below 1/2 in practice, so counts restore exactly.
pub const FFT_COUNT_GUARD: f64 = 0.1;

/// Errors raised by perimeter evaluation.
#[derive(Clone, Debug, PartialEq)]
pub enum PerimeterError {
    Kernel(KernelError),
    ParamsMismatch,
    DimensionMismatch { expected: usize, got: usize },
    FftAccuracy { max_error: f64 },
    InvalidTailRadius(f64),
}

impl core::fmt::Display for PerimeterError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PerimeterError::Kernel(e) => write!(f, "kernel error: {e}"),
            PerimeterError::ParamsMismatch => {
                write!(f, "kernel parameters do not match the interaction table")
            }
            PerimeterError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            PerimeterError::FftAccuracy { max_error } => {
                write!(f, "autocorrelation counts failed to restore to integers ({max_error})")
            }
            PerimeterError::InvalidTailRadius(r) => {
                write!(f, "tail radius must be positive, got {r}")
            }
        }
    }
}

impl From<KernelError> for PerimeterError {
    fn from(e: KernelError) -> Self {
        PerimeterError::Kernel(e)
    }
}

/// Radial truncation used by the diagnostic perimeter variant: complement
/// interactions are summed on the lattice within this distance of each
/// cell and integrated analytically beyond it.
#[derive(Clone, Copy, Debug)]
pub struct TailModel {
    pub radius: f64,
}

impl TailModel {
    pub fn new(radius: f64) -> Result<Self, PerimeterError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(PerimeterError::InvalidTailRadius(radius));
        }
        Ok(Self { radius })
    }
}

fn check_compatible(
    e: &GridSet,
    params: &KernelParams,
    table: &InteractionTable,
) -> Result<(), PerimeterError> {
    params.validate()?;
    if params != table.params() {
        return Err(PerimeterError::ParamsMismatch);
    }
    if e.dim() != params.dim {
        return Err(PerimeterError::DimensionMismatch { expected: params.dim, got: e.dim() });
    }
    Ok(())
}

/// P_s(E) by the exact complement decomposition. The table's unit-lattice
/// values serve any cell size; the set's own h supplies the h^{n−s} scale,
/// so rescaled sets get exactly rescaled perimeters.
pub fn fractional_perimeter(
    e: &GridSet,
    params: &KernelParams,
    table: &InteractionTable,
) -> Result<f64, PerimeterError> {
    check_compatible(e, params, table)?;
    if e.is_empty() {
        return Ok(0.0);
    }
    let q = pair_sum_unit(e, table)?;
    let scale = libm::pow(e.cell_size(), params.cell_power());
    Ok(scale * (e.len() as f64 * table.complement_sum_unit() - 2.0 * q))
}

/// Unit-lattice pair sum Q_unit(E) = Σ_{unordered pairs} I_1(Δ), choosing
/// the direct or FFT path by set size.
pub fn pair_sum_unit(e: &GridSet, table: &InteractionTable) -> Result<f64, PerimeterError> {
    if e.len() > FFT_PAIR_THRESHOLD {
        if e.dim() == 2 {
            pair_sum_unit_fft(e, table)
        } else {
            pair_sum_unit_fft3(e, table)
        }
    } else {
        Ok(pair_sum_unit_direct(e.cells(), table))
    }
}

/// Direct O(N²) pair sum; exposed so the FFT path can be validated
/// against it.
pub fn pair_sum_unit_direct(cells: &[[i64; 3]], table: &InteractionTable) -> f64 {
    let mut acc = KahanSum::new();
    for (i, a) in cells.iter().enumerate() {
        for b in cells.iter().skip(i + 1) {
            acc.add(table.unit_value(&[a[0] - b[0], a[1] - b[1], a[2] - b[2]]));
        }
    }
    acc.value()
}

/// Pair sum through the exact offset-count autocorrelation (planar sets):
/// Q = (1/2)·Σ_{Δ≠0} count(Δ)·I_1(Δ), with counts restored to integers.
pub fn pair_sum_unit_fft(e: &GridSet, table: &InteractionTable) -> Result<f64, PerimeterError> {
    let (lo, _hi) = e.bounding_box().map_err(|_| PerimeterError::DimensionMismatch {
        expected: 2,
        got: e.dim(),
    })?;
    let mut width = 0usize;
    let mut height = 0usize;
    let cells: Vec<(usize, usize)> = e
        .cells()
        .iter()
        .map(|c| {
            let x = (c[0] - lo[0]) as usize;
            let y = (c[1] - lo[1]) as usize;
            width = width.max(x + 1);
            height = height.max(y + 1);
            (x, y)
        })
        .collect();
    let counts = AutocorrCounts::compute(&cells, width, height);
    if counts.max_rounding_error > FFT_COUNT_GUARD {
        return Err(PerimeterError::FftAccuracy { max_error: counts.max_rounding_error });
    }
    let mut acc = KahanSum::new();
    for dy in -(height as i64 - 1)..=(height as i64 - 1) {
        for dx in -(width as i64 - 1)..=(width as i64 - 1) {
            if dx == 0 && dy == 0 {
                continue;
            }
            let c = counts.count(dx, dy);
            if c > 0 {
                acc.add(c as f64 * table.unit_value(&[dx, dy, 0]));
            }
        }
    }
    Ok(0.5 * acc.value())
}

/// Spatial counterpart of `pair_sum_unit_fft`.
pub fn pair_sum_unit_fft3(e: &GridSet, table: &InteractionTable) -> Result<f64, PerimeterError> {
    let (lo, hi) = e.bounding_box().map_err(|_| PerimeterError::DimensionMismatch {
        expected: 3,
        got: e.dim(),
    })?;
    let width = (hi[0] - lo[0] + 1) as usize;
    let height = (hi[1] - lo[1] + 1) as usize;
    let depth = (hi[2] - lo[2] + 1) as usize;
    let cells: Vec<(usize, usize, usize)> = e
        .cells()
        .iter()
        .map(|c| ((c[0] - lo[0]) as usize, (c[1] - lo[1]) as usize, (c[2] - lo[2]) as usize))
        .collect();
    let counts = crate::fft::AutocorrCounts3::compute(&cells, width, height, depth);
    if counts.max_rounding_error > FFT_COUNT_GUARD {
        return Err(PerimeterError::FftAccuracy { max_error: counts.max_rounding_error });
    }
    let mut acc = KahanSum::new();
    for dz in -(depth as i64 - 1)..=(depth as i64 - 1) {
        for dy in -(height as i64 - 1)..=(height as i64 - 1) {
            for dx in -(width as i64 - 1)..=(width as i64 - 1) {
                if dx == 0 && dy == 0 && dz == 0 {
                    continue;
                }
                let c = counts.count(dx, dy, dz);
                if c > 0 {
                    acc.add(c as f64 * table.unit_value(&[dx, dy, dz]));
                }
            }
        }
    }
    Ok(0.5 * acc.value())
}

/// Σ_{c ∈ cells, c ≠ target} I_1(target − c): the pair-sum change from
/// inserting or removing one cell, used by incremental energy updates.
pub fn one_to_all_pair_sum_unit(
    cells: &[[i64; 3]],
    target: &[i64; 3],
    table: &InteractionTable,
) -> f64 {
    let mut acc = KahanSum::new();
    for c in cells {
        if c == target {
            continue;
        }
        acc.add(table.unit_value(&[target[0] - c[0], target[1] - c[1], target[2] - c[2]]));
    }
    acc.value()
}

/// Diagnostic perimeter with radial truncation: per cell, complement
/// interactions on the lattice within `tail.radius`, an analytic radial
/// tail nω_n·R^{−s}/s beyond, and the implicit assumption that no occupied
/// cell lies outside the truncation ball (it overcounts when one does).
pub fn fractional_perimeter_boxed(
    e: &GridSet,
    params: &KernelParams,
    table: &InteractionTable,
    tail: &TailModel,
) -> Result<f64, PerimeterError> {
    check_compatible(e, params, table)?;
    if !(tail.radius > 0.0) || !tail.radius.is_finite() {
        return Err(PerimeterError::InvalidTailRadius(tail.radius));
    }
    if e.is_empty() {
        return Ok(0.0);
    }
    let h = e.cell_size();
    let n = params.dim;
    let rho = tail.radius / h;
    let rho2 = rho * rho;
    // One cell against all lattice cells within distance ρ.
    let rint = libm::ceil(rho) as i64;
    let zrange = if n == 3 { rint } else { 0 };
    let mut ball_sum = KahanSum::new();
    for i in -rint..=rint {
        for j in -rint..=rint {
            for k in -zrange..=zrange {
                if i == 0 && j == 0 && k == 0 {
                    continue;
                }
                let d2 = (i * i + j * j + k * k) as f64;
                if d2 <= rho2 {
                    ball_sum.add(table.unit_value(&[i, j, k]));
                }
            }
        }
    }
    // Occupied pairs within distance ρ.
    let cells = e.cells();
    let mut q_near = KahanSum::new();
    for (i, a) in cells.iter().enumerate() {
        for b in cells.iter().skip(i + 1) {
            let dx = a[0] - b[0];
            let dy = a[1] - b[1];
            let dz = a[2] - b[2];
            let d2 = (dx * dx + dy * dy + dz * dz) as f64;
            if d2 <= rho2 {
                q_near.add(table.unit_value(&[dx, dy, dz]));
            }
        }
    }
    let scale = libm::pow(h, params.cell_power());
    let near = scale * (e.len() as f64 * ball_sum.value() - 2.0 * q_near.value());
    let tail_per_volume =
        crate::unit_sphere_measure(n) / params.s * libm::pow(tail.radius, -params.s);
    Ok(near + e.volume() * tail_per_volume)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{rasterize_ball, rasterize_where, Ball};
    use crate::kernel::build_interaction_table;

    fn disk(h: f64) -> GridSet {
        rasterize_ball(&Ball { dim: 2, center: [0.0; 3], radius: 1.0 }, h).unwrap()
    }

    fn table2(s: f64, h: f64) -> InteractionTable {
        build_interaction_table(KernelParams::new(2, s).unwrap(), h, 1e-6).unwrap()
    }

    #[test]
    fn empty_set_has_zero_perimeter() {
        let params = KernelParams::new(2, 0.5).unwrap();
        let t = table2(0.5, 0.25);
        let e = GridSet::new(2, 0.25, [0.0; 3], alloc::vec::Vec::new()).unwrap();
        assert_eq!(fractional_perimeter(&e, &params, &t).unwrap(), 0.0);
    }

    #[test]
    fn scaling_law_is_machine_exact() {
        let h = 1.0 / 16.0;
        let params = KernelParams::new(2, 0.5).unwrap();
        let t = table2(0.5, h);
        let e = disk(h);
        let p1 = fractional_perimeter(&e, &params, &t).unwrap();
        let e2 = e.scale(2.0).unwrap();
        let p2 = fractional_perimeter(&e2, &params, &t).unwrap();
        let expected = libm::pow(2.0, params.cell_power());
        assert!(
            (p2 / p1 - expected).abs() < 1e-13 * expected,
            "scaling ratio {} vs {expected}",
            p2 / p1
        );
    }

    #[test]
    fn lattice_translation_is_exact() {
        let h = 1.0 / 16.0;
        let params = KernelParams::new(2, 0.5).unwrap();
        let t = table2(0.5, h);
        let e = disk(h);
        let moved = e.translate([7.0 * h, -3.0 * h, 0.0]);
        let p1 = fractional_perimeter(&e, &params, &t).unwrap();
        let p2 = fractional_perimeter(&moved, &params, &t).unwrap();
        assert_eq!(p1.to_bits(), p2.to_bits());
    }

    #[test]
    fn fft_and_direct_pair_sums_agree() {
        let h = 1.0 / 64.0;
        let t = table2(0.5, h);
        let e = disk(h);
        assert!(e.len() > FFT_PAIR_THRESHOLD, "test set must exercise the FFT path");
        let direct = pair_sum_unit_direct(e.cells(), &t);
        let fft = pair_sum_unit_fft(&e, &t).unwrap();
        assert!(
            ((direct - fft) / direct).abs() < 1e-12,
            "direct {direct} vs fft {fft}"
        );
    }

    #[test]
    fn fft3_and_direct_pair_sums_agree() {
        let h = 1.0 / 8.0;
        let t = build_interaction_table(KernelParams::new(3, 0.5).unwrap(), h, 1e-5).unwrap();
        let e = rasterize_ball(&Ball { dim: 3, center: [0.0; 3], radius: 1.0 }, h).unwrap();
        let direct = pair_sum_unit_direct(e.cells(), &t);
        let fft = pair_sum_unit_fft3(&e, &t).unwrap();
        assert!(
            ((direct - fft) / direct).abs() < 1e-12,
            "direct {direct} vs fft3 {fft}"
        );
    }

    #[test]
    fn union_identity_for_disjoint_sets() {
        // P(A ∪ B) = P(A) + P(B) − 2·L(A, B): the union's pair sum runs
        // through different code than the parts plus the interaction.
        let h = 1.0 / 16.0;
        let params = KernelParams::new(2, 0.5).unwrap();
        let t = table2(0.5, h);
        let a = disk(h);
        let b = rasterize_where(2, h, [0.0; 3], [40, -8, 0], [56, 8, 0], |_| true).unwrap();
        let u = a.union_disjoint(&b).unwrap();
        let pa = fractional_perimeter(&a, &params, &t).unwrap();
        let pb = fractional_perimeter(&b, &params, &t).unwrap();
        let pu = fractional_perimeter(&u, &params, &t).unwrap();
        let l = t.interaction(&a, &b).unwrap();
        let lhs = pu;
        let rhs = pa + pb - 2.0 * l;
        assert!(
            ((lhs - rhs) / lhs).abs() < 1e-12,
            "union identity: {lhs} vs {rhs}"
        );
    }

    #[test]
    fn boxed_variant_approaches_exact_complement() {
        let h = 1.0 / 16.0;
        let params = KernelParams::new(2, 0.5).unwrap();
        let t = table2(0.5, h);
        let e = disk(h);
        let exact = fractional_perimeter(&e, &params, &t).unwrap();
        let err_at = |r: f64| {
            let tail = TailModel::new(r).unwrap();
            let boxed = fractional_perimeter_boxed(&e, &params, &t, &tail).unwrap();
            (boxed - exact).abs() / exact
        };
        let e2 = err_at(2.0);
        let e4 = err_at(4.0);
        let e8 = err_at(8.0);
        assert!(e4 < e2 && e8 < e4, "truncation error must shrink: {e2} {e4} {e8}");
        assert!(e8 < 1e-3, "tail radius 8 should be accurate, got {e8}");
    }

    #[test]
    fn boxed_variant_is_blind_beyond_the_truncation_radius() {
        // Two cells separated by more than the truncation radius: the
        // boxed variant treats the partner as complement, so it cannot
        // distinguish separations, while the exact perimeter shrinks as
        // the cells approach and shield each other.
        let h = 1.0;
        let params = KernelParams::new(2, 0.5).unwrap();
        let t = table2(0.5, h);
        let pair = |d: i64| GridSet::new(2, h, [0.0; 3], alloc::vec![[0, 0, 0], [d, 0, 0]]).unwrap();
        let tail = TailModel::new(3.0).unwrap();
        let boxed_near = fractional_perimeter_boxed(&pair(6), &params, &t, &tail).unwrap();
        let boxed_far = fractional_perimeter_boxed(&pair(20), &params, &t, &tail).unwrap();
        assert_eq!(boxed_near.to_bits(), boxed_far.to_bits());
        let exact_near = fractional_perimeter(&pair(6), &params, &t).unwrap();
        let exact_far = fractional_perimeter(&pair(20), &params, &t).unwrap();
        assert!(exact_near < exact_far, "shielding must lower the exact perimeter");
    }

    #[test]
    fn params_must_match_table() {
        let params_a = KernelParams::new(2, 0.5).unwrap();
        let params_b = KernelParams::new(2, 0.75).unwrap();
        let t = table2(0.5, 0.25);
        let e = disk(0.25);
        assert!(fractional_perimeter(&e, &params_a, &t).is_ok());
        assert!(matches!(
            fractional_perimeter(&e, &params_b, &t),
            Err(PerimeterError::ParamsMismatch)
        ));
    }
}
