//! Deterministic quadrature plumbing: compensated summation, Gauss-Legendre
//! panels, a 1D adaptive Simpson rule, and an adaptive box integrator that
//! grades panels geometrically toward a point singularity.

use alloc::vec::Vec;

/// Compensated (Kahan) accumulator for reproducible long sums.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    /// Creates an empty accumulator.
    pub fn new() -> Self {
        Self { sum: 0.0, compensation: 0.0 }
    }

    /// Adds one term, carrying the rounding compensation.
    #[inline]
    pub fn add(&mut self, value: f64) {
        let y = value - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    /// Current compensated value.
    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Sums a slice in its given order with compensation.
pub fn kahan_sum(values: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for &v in values {
        acc.add(v);
    }
    acc.value()
}

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton
/// iteration on the Legendre recurrence. Deterministic for fixed order.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let n = order;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev-based initial guess.
        let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if libm::fabs(dx) < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    // Newton order above runs from the right; flip to ascending nodes.
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Adaptive Simpson integrator on [a, b] with absolute/relative stopping.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fb, fm, whole, rel_tol * libm::fabs(whole) + 1e-300, 40)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fm: f64,
    whole: f64,
    abs_tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || libm::fabs(delta) <= 15.0 * abs_tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, fm, flm, left, 0.5 * abs_tol, depth - 1)
        + simpson_rec(f, m, b, fm, fb, frm, right, 0.5 * abs_tol, depth - 1)
}

/// An axis-aligned box in up to three dimensions; `dim` leading entries used.
#[derive(Clone, Copy, Debug)]
pub struct Box3 {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Box3 {
    fn widest_axis(&self, dim: usize) -> usize {
        let mut axis = 0;
        let mut best = self.hi[0] - self.lo[0];
        for a in 1..dim {
            let w = self.hi[a] - self.lo[a];
            if w > best {
                best = w;
                axis = a;
            }
        }
        axis
    }

    fn max_half_extent_from(&self, point: [f64; 3], dim: usize) -> f64 {
        let mut m: f64 = 0.0;
        for a in 0..dim {
            m = m.max(libm::fabs(self.hi[a] - point[a]));
            m = m.max(libm::fabs(self.lo[a] - point[a]));
        }
        m
    }

    fn contains_closure(&self, point: [f64; 3], dim: usize) -> bool {
        (0..dim).all(|a| point[a] >= self.lo[a] - 1e-300 && point[a] <= self.hi[a] + 1e-300)
    }
}

/// Adaptive tensor-Gauss integration over a box with an optional point
/// singularity. Panels touching the singular point are split geometrically;
/// the recursion stops once the caller-supplied bound on the remaining
/// contribution around the singularity drops below the accumulated
/// tolerance. All other panels accept when two Gauss orders agree.
pub struct SingularBoxIntegral<'a> {
    pub dim: usize,
    /// Integrand, evaluated at points of the box.
    pub f: &'a dyn Fn(&[f64; 3]) -> f64,
    /// Location of the (integrable) singularity, if any.
    pub singular_point: Option<[f64; 3]>,
    /// Bound on |∫ over the box of half-width ρ centered at the singular
    /// point|; must tend to 0 with ρ. Consulted to terminate the grading.
    pub singular_bound: &'a dyn Fn(f64) -> f64,
    /// Relative tolerance target for the whole integral.
    pub rel_tol: f64,
}

impl<'a> SingularBoxIntegral<'a> {
    /// Integrates over [lo, hi]. Deterministic: fixed traversal order.
    pub fn integrate(&self, lo: [f64; 3], hi: [f64; 3]) -> f64 {
        let (n4, w4) = gauss_legendre(4);
        let (n8, w8) = gauss_legendre(8);
        let mut acc = KahanSum::new();
        // Depth-first; children pushed so the singular child is processed
        // last, letting the termination bound compare against a nearly
        // complete accumulated value.
        let mut stack: Vec<(Box3, u32)> = Vec::new();
        stack.push((Box3 { lo, hi }, 0));
        while let Some((bx, depth)) = stack.pop() {
            let singular = match self.singular_point {
                Some(p) => bx.contains_closure(p, self.dim),
                None => false,
            };
            if singular {
                let p = self.singular_point.unwrap();
                let rho = bx.max_half_extent_from(p, self.dim);
                let bound = (self.singular_bound)(rho);
                let floor = self.rel_tol * libm::fabs(acc.value()) + 1e-300;
                if bound <= floor || depth >= 1100 {
                    // Remaining mass around the singularity is negligible.
                    continue;
                }
                let axis = bx.widest_axis(self.dim);
                let mid = clamp_interior(0.5 * (bx.lo[axis] + bx.hi[axis]), p[axis], bx, axis);
                let mut left = bx;
                left.hi[axis] = mid;
                let mut right = bx;
                right.lo[axis] = mid;
                // Push the singular half first so the smooth half is popped
                // (and accumulated) before the grading continues.
                if p[axis] <= mid {
                    stack.push((left, depth + 1));
                    stack.push((right, depth + 1));
                } else {
                    stack.push((right, depth + 1));
                    stack.push((left, depth + 1));
                }
                continue;
            }
            let coarse = self.gauss_panel(&bx, &n4, &w4);
            let fine = self.gauss_panel(&bx, &n8, &w8);
            let err = libm::fabs(fine - coarse);
            // Panels contributing negligibly to the accumulated total may
            // accept at coarser relative accuracy.
            let scale = libm::fabs(fine).max(1e-3 * libm::fabs(acc.value()));
            if err <= self.rel_tol * scale + 1e-300 || depth >= 1100 {
                acc.add(fine);
            } else {
                let axis = bx.widest_axis(self.dim);
                let mid = 0.5 * (bx.lo[axis] + bx.hi[axis]);
                let mut left = bx;
                left.hi[axis] = mid;
                let mut right = bx;
                right.lo[axis] = mid;
                stack.push((right, depth + 1));
                stack.push((left, depth + 1));
            }
        }
        acc.value()
    }

    fn gauss_panel(&self, bx: &Box3, nodes: &[f64], weights: &[f64]) -> f64 {
        let dim = self.dim;
        let mut centers = [0.0f64; 3];
        let mut halves = [0.0f64; 3];
        for a in 0..dim {
            centers[a] = 0.5 * (bx.lo[a] + bx.hi[a]);
            halves[a] = 0.5 * (bx.hi[a] - bx.lo[a]);
        }
        let p = nodes.len();
        let mut acc = KahanSum::new();
        match dim {
            2 => {
                for i in 0..p {
                    let x = centers[0] + halves[0] * nodes[i];
                    for j in 0..p {
                        let y = centers[1] + halves[1] * nodes[j];
                        let v = (self.f)(&[x, y, 0.0]);
                        acc.add(weights[i] * weights[j] * v);
                    }
                }
                acc.value() * halves[0] * halves[1]
            }
            3 => {
                for i in 0..p {
                    let x = centers[0] + halves[0] * nodes[i];
                    for j in 0..p {
                        let y = centers[1] + halves[1] * nodes[j];
                        for k in 0..p {
                            let z = centers[2] + halves[2] * nodes[k];
                            let v = (self.f)(&[x, y, z]);
                            acc.add(weights[i] * weights[j] * weights[k] * v);
                        }
                    }
                }
                acc.value() * halves[0] * halves[1] * halves[2]
            }
            _ => panic!("unsupported dimension {dim}"),
        }
    }
}

/// Keeps the split point strictly useful when the singularity sits on the
/// candidate midpoint: nudges toward the box interior.
fn clamp_interior(mid: f64, p: f64, bx: Box3, axis: usize) -> f64 {
    if mid != p {
        return mid;
    }
    let w = bx.hi[axis] - bx.lo[axis];
    mid + 0.25 * w
}
