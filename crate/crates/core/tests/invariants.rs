//! Property tests for the structural invariants: translation invariance,
//! the scaling laws of P_s and V_s, the beta-squared decomposition and
//! the rearrangement inequality, on randomly generated cell sets.

use std::sync::OnceLock;

use proptest::prelude::*;

use fracperim_core::grid::GridSet;
use fracperim_core::indices::index_report;
use fracperim_core::kernel::{build_interaction_table, InteractionTable, KernelParams};
use fracperim_core::perimeter::fractional_perimeter;
use fracperim_core::potential::vs_value;
use fracperim_core::reference::{analytic_vs_unit_ball, ReferenceCache};

/// Base cell size of the random lattice sets.
const BASE_H: f64 = 0.25;

/// Relative tolerance for the lattice scaling law of P_s: the pair sums
/// are identical, only the closed-form scale factor is recomputed.
const SCALING_REL_TOL: f64 = 1e-11;

/// Relative tolerance for the scaling law of V_s, whose center search
/// re-runs on the scaled lattice.
const VS_SCALING_REL_TOL: f64 = 1e-6;

/// Exactness tolerance for the beta-squared decomposition.
const IDENTITY_TOL: f64 = 1e-10;

/// Relative slack for the rearrangement inequality: the grid potential
/// carries only its near-field quadrature tolerance.
const REARRANGEMENT_SLACK: f64 = 1e-3;

const TEST_S: [f64; 3] = [0.25, 0.5, 0.75];

fn table_for(si: usize) -> &'static (KernelParams, InteractionTable) {
    static TABLES: [OnceLock<(KernelParams, InteractionTable)>; 3] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    TABLES[si].get_or_init(|| {
        let params = KernelParams::new(2, TEST_S[si]).unwrap();
        let table = build_interaction_table(params, BASE_H, 1e-5).unwrap();
        (params, table)
    })
}

fn cache_for(si: usize) -> &'static ReferenceCache {
    static CACHES: [OnceLock<ReferenceCache>; 3] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    CACHES[si].get_or_init(|| {
        let (params, table) = table_for(si);
        let ball = fracperim_core::grid::Ball { dim: 2, center: [0.0; 3], radius: 1.0 };
        let e = fracperim_core::grid::rasterize_ball(&ball, BASE_H).unwrap();
        ReferenceCache {
            n: 2,
            s: TEST_S[si],
            h: BASE_H,
            r: 8.0,
            ps_b1: fractional_perimeter(&e, params, table).unwrap(),
            vs_b1: vs_value(&e, TEST_S[si]).unwrap().value,
            method: String::from("grid"),
            error_estimate: 0.0,
        }
    })
}

fn random_set() -> impl Strategy<Value = GridSet> {
    proptest::collection::vec((-5i64..=5, -5i64..=5), 1..=24).prop_map(|pairs| {
        let cells: Vec<[i64; 3]> = pairs.into_iter().map(|(i, j)| [i, j, 0]).collect();
        GridSet::new(2, BASE_H, [0.0; 3], cells).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn perimeter_is_translation_invariant(e in random_set(), si in 0usize..3, dx in -7i64..=7, dy in -7i64..=7) {
        let (params, table) = table_for(si);
        let p = fractional_perimeter(&e, params, table).unwrap();
        // Lattice shift plus a continuum origin shift: the pair sums see
        // only index differences, so the value is bit-identical.
        let cells: Vec<[i64; 3]> = e.cells().iter().map(|c| [c[0] + dx, c[1] + dy, 0]).collect();
        let moved = GridSet::new(2, BASE_H, [0.37, -1.25, 0.0], cells).unwrap();
        let q = fractional_perimeter(&moved, params, table).unwrap();
        prop_assert_eq!(p.to_bits(), q.to_bits(), "{} vs {}", p, q);
    }

    #[test]
    fn perimeter_scales_with_the_lattice(e in random_set(), si in 0usize..3) {
        let (params, table) = table_for(si);
        let lambda = 2.0;
        let p = fractional_perimeter(&e, params, table).unwrap();
        let scaled = e.scale(lambda).unwrap();
        let table_scaled = table.with_cell_size(scaled.cell_size()).unwrap();
        let q = fractional_perimeter(&scaled, params, &table_scaled).unwrap();
        let expected = libm::pow(lambda, 2.0 - params.s) * p;
        prop_assert!(
            (q - expected).abs() <= SCALING_REL_TOL * expected,
            "scaled {} vs expected {}", q, expected
        );
    }

    #[test]
    fn potential_scales_with_the_lattice(e in random_set(), si in 0usize..3) {
        let s = TEST_S[si];
        let lambda = 2.0;
        let v = vs_value(&e, s).unwrap().value;
        let scaled = e.scale(lambda).unwrap();
        let w = vs_value(&scaled, s).unwrap().value;
        let expected = libm::pow(lambda, 2.0 - s) * v;
        prop_assert!(
            (w - expected).abs() <= VS_SCALING_REL_TOL * expected,
            "scaled {} vs expected {}", w, expected
        );
    }

    #[test]
    fn beta_squared_decomposes_exactly(e in random_set(), si in 0usize..3) {
        let (params, table) = table_for(si);
        let cache = cache_for(si);
        let report = index_report(&e, params, table, cache).unwrap();
        let residual = (report.beta_sq - report.delta_s - report.zeta_s).abs();
        let scale = report.beta_sq.abs().max(1.0);
        prop_assert!(residual <= IDENTITY_TOL * scale, "residual {}", residual);
    }

    #[test]
    fn rearrangement_bounds_the_potential(e in random_set(), si in 0usize..3) {
        let s = TEST_S[si];
        let v = vs_value(&e, s).unwrap().value;
        let ball = e.schwarz_rearrangement().unwrap();
        let v_ball = analytic_vs_unit_ball(2, s) * libm::pow(ball.radius, 2.0 - s);
        prop_assert!(
            v <= v_ball * (1.0 + REARRANGEMENT_SLACK),
            "V_s {} above rearranged ball {}", v, v_ball
        );
    }
}
