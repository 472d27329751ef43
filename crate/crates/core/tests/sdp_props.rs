use mlota::experiments::Instance;
use mlota::sdp::{recover_rank1, solve_sdr, SdpOptions, SdrProblem};
use mlota::{ExperimentConfig, RealifiedProblem};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_problem(m: usize, seed: u64) -> SdrProblem {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let n = 2 * m;
    let a = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    let caps = (0..m).map(|_| r.random_range(0.1..3.0)).collect();
    SdrProblem::new((&a + a.transpose()) * 0.5, caps).unwrap()
}

fn random_feasible(problem: &SdrProblem, r: &mut ChaCha8Rng) -> DVector<f64> {
    let m = problem.sources();
    let x = DVector::from_fn(2 * m, |_, _| r.random_range(-1.0..1.0));
    let d = problem.max_scale(&x) * r.random::<f64>().sqrt();
    x * d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn duality_and_feasibility(m in 1usize..7, seed in any::<u64>()) {
        let problem = random_problem(m, seed);
        let sol = solve_sdr(&problem, &SdpOptions::default()).unwrap();
        let scale = problem.b.amax() * problem.caps.iter().sum::<f64>();
        prop_assert!(sol.lower_bound <= sol.objective + 1e-7 * scale);
        prop_assert!(sol.objective - sol.lower_bound <= 1e-6 * scale);
        let eig = sol.x.clone().symmetric_eigen();
        prop_assert!(eig.eigenvalues.min() >= -1e-8 * scale.max(1.0));
        for i in 0..m {
            let load = sol.x[(i, i)] + sol.x[(i + m, i + m)];
            prop_assert!(load <= problem.caps[i] * (1.0 + 1e-7));
        }
        // The relaxation lower-bounds every rank-one feasible point.
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ 1);
        for _ in 0..50 {
            let x = random_feasible(&problem, &mut r);
            prop_assert!(problem.quadratic(&x) >= sol.lower_bound - 1e-7 * scale);
        }
        let rec = recover_rank1(&sol, &problem, 50, seed);
        prop_assert!(problem.max_scale(&rec.eta_ext) >= 1.0 - 1e-9);
        prop_assert!(rec.objective >= sol.lower_bound - 1e-7 * scale);
        prop_assert!(rec.objective <= 0.0);
    }
}

/// Reports how often randomization lands within 2% of the relaxation bound on
/// random three-device instances. Informational: the SDR is usually tight here.
#[test]
fn randomization_quality_report() {
    let cfg = ExperimentConfig::default();
    let mut within = 0;
    let mut total = 0;
    for trial in 0..200u64 {
        let Ok(inst) = Instance::build(&cfg, 3, 5.0, trial) else { continue };
        let problem = RealifiedProblem::new(&inst.ivas, &inst.caps, inst.sigma_sq).unwrap();
        let xi = problem.ratio(&problem.to_real(&[mlota::Complex64::new(inst.caps.p_min().sqrt(), 0.0); 2]));
        let sdr = SdrProblem::new(problem.b_matrix(xi), problem.caps.clone()).unwrap();
        let sol = solve_sdr(&sdr, &SdpOptions::default()).unwrap();
        let rec = recover_rank1(&sol, &sdr, 100, trial);
        total += 1;
        if (rec.objective - sol.objective).abs() <= 0.02 * sol.objective.abs() {
            within += 1;
        }
    }
    println!("randomization within 2% of the SDR optimum on {within}/{total} instances");
    assert!(total > 100);
}
