use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_recovery::certificates::{
    erc, erc_oxx_cardinality, omp_forward_update, recursive_factor, Evaluation, SupportAnalysis,
};
use sparse_recovery::dictionaries::Dictionary;
use sparse_recovery::experiments::{draw_support, Placement};
use sparse_recovery::greedy::{build_failure_input, run_greedy, Algorithm, Status, SupportSet};
use sparse_recovery::linalg::{Matrix, ProjectionState, Vector};

struct Instance {
    dict: Dictionary,
    support: Vec<usize>,
    order: Vec<usize>,
}

fn instance(m: usize, n: usize, k: usize, seed: u64) -> Instance {
    let dict = Dictionary::gaussian(m, n, seed).unwrap();
    let (support, order) = draw_support(&Placement::Random, n, k, seed).unwrap();
    Instance { dict, support, order }
}

fn dims() -> impl Strategy<Value = (usize, usize, usize, u64)> {
    (8usize..30, 2usize..5, any::<u64>()).prop_flat_map(|(m, k, seed)| {
        (Just(m), m + 1..3 * m, Just(k.min(m - 1)), Just(seed))
    })
}

fn amplitudes(support: &[usize], n: usize, rng: &mut ChaCha8Rng) -> Vector {
    let mut x = Vector::zeros(n);
    for &i in support {
        let mag: f64 = rng.random_range(0.1..1.0);
        x[i] = if rng.random::<bool>() { mag } else { -mag };
    }
    x
}

fn agree(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn factor_forms_agree_along_chains((m, n, k, seed) in dims()) {
        let inst = instance(m, n, k, seed);
        let a = inst.dict.matrix();
        let analysis = SupportAnalysis::new(a, &SupportSet::new(inst.support.clone(), n).unwrap()).unwrap();
        for q in 0..k {
            let state = ProjectionState::with_active(a, &inst.order[..q]).unwrap();
            for alg in Algorithm::ALL {
                let def = analysis.definitional_factors(&state, alg).unwrap();
                let proj = analysis.projected_factors(&state, alg).unwrap();
                for (d, p) in def.iter().zip(&proj) {
                    prop_assert!(agree(d.1, p.1, 1e-8), "{alg} q={q}: {} vs {}", d.1, p.1);
                }
            }
        }
    }

    #[test]
    fn omp_factor_never_increases((m, n, k, seed) in dims()) {
        let inst = instance(m, n, k, seed);
        let a = inst.dict.matrix();
        let analysis = SupportAnalysis::new(a, &SupportSet::new(inst.support.clone(), n).unwrap()).unwrap();
        let mut prev: Option<Vec<(usize, f64)>> = None;
        for q in 0..k {
            let state = ProjectionState::with_active(a, &inst.order[..q]).unwrap();
            let cur = analysis.factors(&state, Algorithm::Omp, Evaluation::Checked).unwrap();
            if let Some(p) = &prev {
                for (before, after) in p.iter().zip(&cur) {
                    prop_assert!(after.1 <= before.1 + 1e-10 * before.1.max(1.0));
                }
                let updated = omp_forward_update(&analysis, p, inst.order[q - 1]).unwrap();
                for (u, c) in updated.iter().zip(&cur) {
                    prop_assert!(agree(u.1, c.1, 1e-8));
                }
            }
            prev = Some(cur);
        }
    }

    #[test]
    fn ols_factor_below_one_never_increases((m, n, k, seed) in dims()) {
        let inst = instance(m, n, k, seed);
        let a = inst.dict.matrix();
        let analysis = SupportAnalysis::new(a, &SupportSet::new(inst.support.clone(), n).unwrap()).unwrap();
        let mut prev: Option<Vec<(usize, f64)>> = None;
        for q in 0..k {
            let state = ProjectionState::with_active(a, &inst.order[..q]).unwrap();
            let cur = analysis.factors(&state, Algorithm::Ols, Evaluation::Checked).unwrap();
            if let Some(p) = &prev {
                for (before, after) in p.iter().zip(&cur) {
                    if before.1 < 1.0 {
                        prop_assert!(after.1 <= before.1 + 1e-10, "{} -> {}", before.1, after.1);
                    }
                }
            }
            prev = Some(cur);
        }
    }

    #[test]
    fn recursive_factors_match_direct((m, n, k, seed) in dims()) {
        let inst = instance(m, n, k, seed);
        let a = inst.dict.matrix();
        let analysis = SupportAnalysis::new(a, &SupportSet::new(inst.support.clone(), n).unwrap()).unwrap();
        for q in 1..k {
            let next = ProjectionState::with_active(a, &inst.order[..q]).unwrap();
            for &j in analysis.wrong_atoms() {
                for alg in Algorithm::ALL {
                    recursive_factor(&analysis, &next, j, alg).unwrap();
                }
            }
        }
    }

    #[test]
    fn last_step_ols_certificate_holds((m, n, k, seed) in dims()) {
        let inst = instance(m, n, k, seed);
        let report = erc_oxx_cardinality(inst.dict.matrix(), &inst.support, k - 1, Algorithm::Ols, Evaluation::Checked).unwrap();
        prop_assert!(report.verdict && report.margin > 0.0);
    }

    #[test]
    fn erc_guarantees_success((m, n, k, seed) in dims()) {
        let inst = instance(m, n, k, seed);
        let a = inst.dict.matrix();
        let report = erc(a, &inst.support).unwrap();
        prop_assume!(report.verdict && report.margin > 1e-6);
        let oracle = SupportSet::new(inst.support.clone(), n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = a * amplitudes(&inst.support, n, &mut rng);
        for alg in Algorithm::ALL {
            let trace = run_greedy(alg, a, &y, k, Some(&oracle)).unwrap();
            prop_assert!(trace.is_success(), "{alg}: {:?}", trace.status);
        }
    }

    #[test]
    fn failed_erc_yields_first_step_failure((m, n, k, seed) in dims()) {
        let inst = instance(m, n, k, seed);
        let a = inst.dict.matrix();
        let report = erc(a, &inst.support).unwrap();
        prop_assume!(!report.verdict && report.margin > 1e-6);
        let qstar = SupportSet::new(inst.support.clone(), n).unwrap();
        for alg in Algorithm::ALL {
            let built = build_failure_input(a, &qstar, &[], alg, None).unwrap();
            let first = matches!(
                built.trace.status,
                Status::WrongAtom { iteration: 1, .. } | Status::TieFailure { iteration: 1 }
            );
            prop_assert!(first, "{alg}: {:?}", built.trace.status);
        }
    }
}

#[test]
fn failure_inputs_after_reached_subsets() {
    let mut built = 0;
    for seed in 0..40u64 {
        let inst = instance(12, 30, 4, seed);
        let a: &Matrix = inst.dict.matrix();
        let qstar = SupportSet::new(inst.support.clone(), 30).unwrap();
        let analysis = SupportAnalysis::new(a, &qstar).unwrap();
        let q = &inst.order[..1];
        let state = ProjectionState::with_active(a, q).unwrap();
        for alg in Algorithm::ALL {
            if analysis.max_factor(&state, alg, Evaluation::Checked).unwrap() < 1.0 {
                continue;
            }
            let input = build_failure_input(a, &qstar, q, alg, None).unwrap();
            assert_eq!(input.trace.iterations[0].selected, q[0]);
            assert!(matches!(
                input.trace.status,
                Status::WrongAtom { iteration: 2, .. } | Status::TieFailure { iteration: 2 }
            ));
            built += 1;
        }
    }
    assert!(built > 0);
}
