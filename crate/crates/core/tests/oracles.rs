mod common;

use airload::analysis::{decode, shear_profile, validate, LoadingPlan};
use airload::model::{ConstraintSet, ContainerSpec, ContainerType, ProblemInstance};
use airload::qubo::{
    assemble, build_terms, cog_slack_bound, AssemblyOptions, CogMode, Family, PenaltyWeights, QuadraticModel,
    VariableRegistry,
};
use airload::solvers::{exact_solve, tabu_solve, SolverParams};
use airload::AircraftParams;
use common::*;
use rand::Rng;

const SETS: [ConstraintSet; 4] = [ConstraintSet::NONE, ConstraintSet::PL, ConstraintSet::PL_CL, ConstraintSet::PL_CL_SL];

#[test]
fn matrix_energy_matches_term_by_term_oracle() {
    let mut r = rng(11);
    for k in 0..12 {
        let set = SETS[k % 4];
        let (n, npos) = (r.random_range(1..=5), r.random_range(1..=4));
        let inst = random_instance(&mut r, n, npos, set);
        let w = random_weights(&mut r);
        let model = assemble(&inst, &w).unwrap();
        for _ in 0..50 {
            let bits: Vec<bool> = (0..model.num_vars()).map(|_| r.random()).collect();
            let e = model.energy(&bits).unwrap();
            let o = energy_oracle(&inst, &w, model.registry(), &bits);
            assert!((e - o).abs() <= 1e-6 * o.abs().max(1.0), "set {set}: {e} vs {o}");
        }
    }
}

#[test]
fn unexpanded_terms_agree_with_expansion() {
    let mut r = rng(12);
    for _ in 0..8 {
        let inst = random_instance(&mut r, 4, 3, ConstraintSet::PL_CL_SL);
        let model = assemble(&inst, &random_weights(&mut r)).unwrap();
        for _ in 0..30 {
            let bits: Vec<bool> = (0..model.num_vars()).map(|_| r.random()).collect();
            let sum: f64 = model.breakdown(&bits).values().sum();
            let e = model.energy(&bits).unwrap();
            assert!((sum - e).abs() <= 1e-6 * e.abs().max(1.0));
        }
    }
}

#[test]
fn shear_profile_matches_nested_loops_exhaustively() {
    let shapes = [(4, 4), (2, 8), (3, 3), (5, 3), (4, 3), (16, 1), (3, 5)];
    let mut r = rng(13);
    for (n, npos) in shapes {
        let inst = random_instance(&mut r, n, npos, ConstraintSet::PL_CL_SL);
        let total = n * npos;
        for mask in 0u32..(1 << total) {
            let bits: Vec<bool> = (0..total).map(|k| mask & (1 << k) != 0).collect();
            let plan = decode(&bits, &VariableRegistry::new(n, npos), &inst).unwrap();
            let got = shear_profile(&plan, &inst);
            let want = shear_oracle(&inst, &p_matrix(&bits, n, npos));
            assert_eq!(got.len(), want.len());
            for (g, (side, u, v, lim)) in got.iter().zip(want) {
                assert_eq!((g.side, g.station), (side, u));
                assert!((g.value - v).abs() < 1e-9 && (g.limit - lim).abs() < 1e-9);
                assert_eq!(g.violated, v > lim + 1e-9 * lim.max(1.0));
            }
            let report = validate(&plan, &inst).unwrap();
            assert_eq!(report.sl_valid, report.shear_violations == 0);
        }
    }
}

#[test]
fn zero_penalty_iff_pl_valid_small_exhaustive() {
    let masses = [100.0, 150.0, 70.0];
    for n in 1..=3 {
        for npos in 1..=3 {
            for code in 0..3usize.pow(n as u32) {
                let cs: Vec<ContainerSpec> = (0..n)
                    .map(|i| {
                        let ct = ContainerType::from_code((code / 3usize.pow(i as u32) % 3) as u8 + 1).unwrap();
                        ContainerSpec::new(i as u32 + 1, ct, masses[i])
                    })
                    .collect();
                let params = AircraftParams { num_positions: npos, max_payload: 230.0, ..AircraftParams::reference() };
                let inst = ProblemInstance::new("z", cs, params, ConstraintSet::PL, None).unwrap();
                let model = assemble(&inst, &PenaltyWeights::uniform(3.0)).unwrap();
                for mask in 0u32..(1 << (n * npos)) {
                    let bits: Vec<bool> = (0..n * npos).map(|k| mask & (1 << k) != 0).collect();
                    let pen = min_pl_penalty(&model, &bits);
                    let valid = pl_valid_oracle(&inst, &p_matrix(&bits, n, npos));
                    assert!(pen >= 0.0);
                    assert_eq!(pen == 0.0, valid, "n={n} N={npos} code={code} mask={mask:b} pen={pen}");
                    let plan = LoadingPlan::from_matrix(&inst, &p_matrix(&bits, n, npos).iter().map(|r| r.iter().map(|&x| x > 0.5).collect()).collect::<Vec<_>>());
                    assert_eq!(validate(&plan, &inst).unwrap().pl_valid, valid);
                }
            }
        }
    }
}

#[test]
fn contiguity_lemma_holds_for_all_patterns() {
    let mut r = rng(14);
    for _ in 0..5 {
        let p_contig = r.random_range(0.1..100.0);
        let mut w = PenaltyWeights::uniform(1.0);
        w.p_contig = p_contig;
        w.p_dup = 2.0 * p_contig * (1.0 + 1e-6);
        for n in 3..=8 {
            for mask in 0u32..(1 << n) {
                let pattern: Vec<bool> = (0..n).map(|k| mask & (1 << k) != 0).collect();
                let m = pattern.iter().filter(|&&b| b).count();
                let v = best_slack_dup_plus_contig(&w, &pattern);
                assert!(v >= 0.0);
                if m > 2 {
                    assert!(v > 0.0, "pattern {mask:b}");
                }
            }
        }
    }
}

#[test]
fn cog_slack_bound_covers_every_valid_plan() {
    let mut r = rng(15);
    for _ in 0..6 {
        let inst = random_instance(&mut r, 3, 3, ConstraintSet::PL_CL);
        let p = inst.params().clone();
        let lower = cog_slack_bound(&inst, CogMode::Lower);
        let upper = cog_slack_bound(&inst, CogMode::Upper);
        for mask in 0u32..(1 << 9) {
            let bits: Vec<bool> = (0..9).map(|k| mask & (1 << k) != 0).collect();
            let pm = p_matrix(&bits, 3, 3);
            if !pl_valid_oracle(&inst.with_constraints(ConstraintSet::PL).unwrap(), &pm) {
                continue;
            }
            let mut ml = p.empty_mass * (p.empty_cog - p.cog_min);
            let mut mu = p.empty_mass * (p.cog_max - p.empty_cog);
            for (i, c) in inst.containers().iter().enumerate() {
                for j in 1..=3 {
                    let m = t_of(c.ctype) * c.mass * pm[i][j - 1];
                    ml += m * (x_pos(j, p.length, 3) - p.cog_min);
                    mu += m * (p.cog_max - x_pos(j, p.length, 3));
                }
            }
            assert!(ml <= lower + 1e-6 && mu <= upper + 1e-6);
        }
    }
}

#[test]
fn squared_penalties_are_nonnegative() {
    let mut r = rng(16);
    for _ in 0..10 {
        let inst = random_instance(&mut r, 5, 4, ConstraintSet::PL_CL_SL);
        let (reg, terms) = build_terms(&inst, &random_weights(&mut r), &AssemblyOptions::default()).unwrap();
        for _ in 0..50 {
            let bits: Vec<bool> = (0..reg.total_vars()).map(|_| r.random()).collect();
            for t in &terms {
                if !matches!(t.family, Family::Objective | Family::Contiguity) {
                    assert!(t.value(&bits) >= 0.0);
                }
            }
        }
    }
}

#[test]
fn transposed_storage_gives_the_same_energy() {
    let mut r = rng(17);
    let inst = random_instance(&mut r, 4, 4, ConstraintSet::PL_CL_SL);
    let model = assemble(&inst, &random_weights(&mut r)).unwrap();
    let flipped: Vec<(usize, usize, f64)> = model.coefficients().map(|((i, j), q)| (j, i, q)).collect();
    let t = QuadraticModel::from_entries(model.registry().clone(), flipped, model.offset());
    for _ in 0..100 {
        let bits: Vec<bool> = (0..model.num_vars()).map(|_| r.random()).collect();
        assert_eq!(model.energy(&bits).unwrap(), t.energy(&bits).unwrap());
    }
}

#[test]
fn exact_never_beaten_by_tabu() {
    let mut r = rng(18);
    for k in 0..8 {
        let set = [ConstraintSet::PL, ConstraintSet::PL_CL, ConstraintSet::PL_CL_SL][k % 3];
        let inst = random_instance(&mut r, 5, 4, set);
        let exact = exact_solve(&inst, false).unwrap();
        let model = assemble(&inst, &PenaltyWeights::scaled(&inst)).unwrap();
        for seed in 0..4 {
            let sol = tabu_solve(&model, &SolverParams::for_model(&model, seed)).unwrap();
            let plan = decode(&sol.bits, model.registry(), &inst).unwrap();
            let rep = validate(&plan, &inst).unwrap();
            if rep.feasible_for(&inst) {
                assert!(rep.loaded_weight <= exact.weight + 1e-9, "{} > {}", rep.loaded_weight, exact.weight);
            }
        }
    }
}

#[test]
fn exact_matches_brute_force_on_tiny_instances() {
    let mut r = rng(19);
    for k in 0..20 {
        let set = [ConstraintSet::PL, ConstraintSet::PL_CL, ConstraintSet::PL_CL_SL][k % 3];
        let inst = random_instance(&mut r, 3, 3, set);
        let exact = exact_solve(&inst, false).unwrap();
        let mut best = 0.0_f64;
        for mask in 0u32..(1 << 9) {
            let bits: Vec<bool> = (0..9).map(|k| mask & (1 << k) != 0).collect();
            let plan = decode(&bits, &VariableRegistry::new(3, 3), &inst).unwrap();
            let rep = validate(&plan, &inst).unwrap();
            if rep.feasible_for(&inst) {
                best = best.max(rep.loaded_weight);
            }
        }
        assert_eq!(exact.weight, best);
    }
}
