mod common;

use common::{small_instance, unique_optimum, vertex_oracle};
use nalgebra::DVector;
use proptest::prelude::*;
use reweight_l1::wbpdn::{residual_norm, solve, SolverConfig, WeightVector};
use reweight_l1::{gen_gaussian, measure, signalgen::gen_sparse, MeasurementSet};

fn oracle_for(inst: &common::SmallInstance) -> common::Vertex {
    let y = DVector::from_column_slice(&inst.m.y);
    vertex_oracle(inst.a.matrix(), &y, inst.w.as_slice()).expect("random instance is feasible")
}

#[test]
fn matches_vertex_oracle_on_fixed_seeds() {
    for seed in 0..40 {
        let inst = small_instance(seed);
        let best = oracle_for(&inst);
        let res = solve(&inst.a, &inst.m, &inst.w, &SolverConfig::default()).unwrap();
        let rel = (res.objective - best.objective).abs() / best.objective.max(1e-300);
        assert!(rel <= 1e-6, "seed {seed}: solver {} oracle {}", res.objective, best.objective);
        assert!(residual_norm(&inst.a, &res.solution, &inst.m.y) <= 1e-8, "seed {seed}");
    }
}

#[test]
fn bp_recovers_a_single_spike() {
    // Basis pursuit recovers 1-sparse vectors when n is comfortably large.
    let mut hits = 0;
    for seed in 0..50u64 {
        let a = gen_gaussian(20, 100, 1000 + seed).unwrap();
        let x = gen_sparse(100, 1, 2000 + seed).unwrap();
        let m = measure(&a, &x, 0.0, 0).unwrap();
        let res = solve(&a, &m, &WeightVector::ones(100), &SolverConfig::default()).unwrap();
        if res.solution.distance(&x) <= 1e-6 * x.norm2() {
            hits += 1;
        }
    }
    assert!(hits >= 48, "{hits}/50");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solver_objective_equals_oracle(seed in 1000u64..1_000_000) {
        let inst = small_instance(seed);
        let best = oracle_for(&inst);
        let res = solve(&inst.a, &inst.m, &inst.w, &SolverConfig::default()).unwrap();
        prop_assert!((res.objective - best.objective).abs() <= 1e-6 * best.objective.max(1e-300));
    }

    #[test]
    fn raising_a_weight_never_grows_that_entry(seed in 0u64..1_000_000, bump in 1.1f64..5.0) {
        let inst = small_instance(seed);
        let y = DVector::from_column_slice(&inst.m.y);
        let dim = inst.w.len();
        let i = (seed as usize) % dim;
        let mut raised = inst.w.as_slice().to_vec();
        raised[i] *= bump;
        let before = unique_optimum(inst.a.matrix(), &y, inst.w.as_slice());
        let after = unique_optimum(inst.a.matrix(), &y, &raised);
        prop_assume!(before.is_some() && after.is_some());
        let (before, after) = (before.unwrap(), after.unwrap());
        prop_assert!(after.x[i].abs() <= before.x[i].abs() + 1e-9);

        // The solver lands on the same unique points.
        let cfg = SolverConfig::default();
        let w2 = WeightVector::new(raised).unwrap();
        let s1 = solve(&inst.a, &inst.m, &inst.w, &cfg).unwrap();
        let s2 = solve(&inst.a, &inst.m, &w2, &cfg).unwrap();
        let tol = 1e-5 * (1.0 + before.x.norm());
        prop_assert!((DVector::from_column_slice(s1.solution.as_slice()) - &before.x).norm() <= tol);
        prop_assert!((DVector::from_column_slice(s2.solution.as_slice()) - &after.x).norm() <= tol);
        prop_assert!(s2.solution[i].abs() <= s1.solution[i].abs() + tol);
    }

    #[test]
    fn noisy_solutions_stay_in_the_ball(
        seed in 0u64..1_000_000,
        n in 5usize..30,
        k in 1usize..5,
        noise in 0.0f64..0.5,
        eps_scale in 1.0f64..2.0,
    ) {
        let dim = 3 * n;
        let a = gen_gaussian(n, dim, seed).unwrap();
        let x = gen_sparse(dim, k, seed ^ 0x55).unwrap();
        let clean = measure(&a, &x, noise, seed ^ 0xaa).unwrap();
        let eps = noise * eps_scale;
        let m = MeasurementSet::new(clean.y, eps).unwrap();
        let res = solve(&a, &m, &WeightVector::ones(dim), &SolverConfig::default()).unwrap();
        let r = residual_norm(&a, &res.solution, &m.y);
        prop_assert!(r <= eps * (1.0 + 1e-6) + 1e-8, "residual {} eps {}", r, eps);
        // x itself is feasible, so the optimum costs no more than ||x||_1.
        prop_assert!(res.objective <= x.norm1() * (1.0 + 1e-6));
    }
}
