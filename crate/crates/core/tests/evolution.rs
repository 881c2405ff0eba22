use approx::assert_abs_diff_eq;
use hbl_core::evolution::{
    blowup_threshold, evolve_physical, free_semigroup_gaussian, initial_data_op, linear_fit, project_unstable,
    tune_blowup_time, EvolutionError, LinearPart, PhysicalConfig, PhysicalScheme, ProjectionWeights,
    SimilarityConfig, SimilarityState, SimilarityStepper, TuneConfig,
};
use hbl_core::spectral::{discrete_eigenfunction, Grid, RadialOperatorSpec};
use hbl_core::ModelParams;

fn params() -> ModelParams {
    ModelParams::three_d(3, 0.3).unwrap()
}

fn rate(history: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = history.iter().map(|&(t, s)| (t, s.ln())).collect();
    linear_fit(&pts).0
}

#[test]
fn dipole_mode_decays_at_its_eigenvalue() {
    let g = Grid::new(12.0, 599).unwrap();
    let spec = RadialOperatorSpec::ell(params(), 1).unwrap();
    let (lam, v) = discrete_eigenfunction(&spec, &g, 0).unwrap();
    let stepper = SimilarityStepper::new(&params(), SimilarityConfig::linear(g, 5e-4, 1)).unwrap();
    let mut st = SimilarityState::from_conjugated(v, 1, &g).unwrap();
    stepper.evolve(&mut st, 3.0, 20).unwrap();
    let h: Vec<(f64, f64)> = st.history.iter().filter(|r| r.tau >= 1.0).map(|r| (r.tau, r.sigma_norm)).collect();
    assert!(((rate(&h) + lam) / lam).abs() < 0.02);
}

#[test]
fn stable_remainder_decays_at_the_second_eigenvalue() {
    let m = params();
    let g = Grid::new(12.0, 1199).unwrap();
    let spec = RadialOperatorSpec::ell(m, 0).unwrap();
    let (_, v0) = discrete_eigenfunction(&spec, &g, 0).unwrap();
    let (lam1, v1) = discrete_eigenfunction(&spec, &g, 1).unwrap();
    assert_abs_diff_eq!(lam1, 1.3706, epsilon = 1e-3);
    let v: Vec<f64> = v0.iter().zip(&v1).map(|(a, b)| 1e-3 * a + b).collect();
    let weights = ProjectionWeights::discrete(&m, &g).unwrap();
    let stepper = SimilarityStepper::new(&m, SimilarityConfig::linear(g, 5e-4, 0)).unwrap();
    let mut st = SimilarityState::from_conjugated(v, 0, &g).unwrap();
    let mut samples = Vec::new();
    for k in 1..=6 {
        stepper.evolve(&mut st, 0.5 * k as f64, usize::MAX).unwrap();
        let (_, rem) = project_unstable(&st.values(&g), &weights).unwrap();
        let norm = SimilarityState::from_values(&rem, 0, &g).unwrap().sigma_norm(g.h());
        samples.push((st.tau, norm));
    }
    assert!(((rate(&samples) + lam1) / lam1).abs() < 0.05);
}

#[test]
fn free_flow_matches_the_gaussian_semigroup_at_second_order() {
    let m = params();
    let err = |n: usize| {
        let g = Grid::new(12.0, n).unwrap();
        let cfg = SimilarityConfig { grid: g, dtau: 0.25 * g.h() * g.h(), ell: 0, linear: LinearPart::Free, nonlinear: false };
        let stepper = SimilarityStepper::new(&m, cfg).unwrap();
        let f0: Vec<f64> = g.nodes().iter().map(|&r| (-r * r / 2.0).exp()).collect();
        let mut st = SimilarityState::from_values(&f0, 0, &g).unwrap();
        stepper.evolve(&mut st, 0.3, usize::MAX).unwrap();
        st.values(&g)
            .iter()
            .zip(g.nodes())
            .filter(|(_, r)| *r <= 6.0)
            .map(|(v, r)| (v - free_semigroup_gaussian(0.5, 0.3, m.m(), r)).abs())
            .fold(0.0f64, f64::max)
    };
    let order = (err(299) / err(599)).log2();
    assert!((1.8..=2.2).contains(&order), "order {order}");
}

#[test]
fn large_perturbation_escapes_and_cannot_be_tuned() {
    let m = params();
    let cfg = SimilarityConfig::nonlinear(Grid::new(12.0, 1199).unwrap(), 5e-4);
    let stepper = SimilarityStepper::new(&m, cfg).unwrap();
    let v0 = |r: f64| 0.5 * (-r * r).exp();
    let f0 = initial_data_op(v0, 1.0, &m, &cfg.grid).unwrap();
    let mut st = SimilarityState::from_values(&f0, 0, &cfg.grid).unwrap();
    let err = stepper.evolve(&mut st, 8.0, 100).unwrap_err();
    assert!(matches!(err, EvolutionError::BlowupDetected { .. }), "{err:?}");

    let tuned = tune_blowup_time(v0, &m, &TuneConfig::default());
    assert!(matches!(tuned, Err(EvolutionError::NoSignChange { .. })), "{tuned:?}");
}

#[test]
fn escape_level_follows_the_first_node() {
    let m = params();
    let g = Grid::new(12.0, 1199).unwrap();
    assert_abs_diff_eq!(blowup_threshold(&m, &g), 0.5 / (0.3f64 * 1e-4).sqrt(), epsilon = 1e-9);
    let coarse = Grid::new(12.0, 100).unwrap();
    assert!(blowup_threshold(&m, &coarse) <= 1e6);
}

#[test]
fn unperturbed_profile_blows_up_at_one() {
    let m = params();
    let cfg = PhysicalConfig {
        h: 0.01,
        r_max: 8.0,
        scheme: PhysicalScheme::Centered4Rk4,
        stop_sup: 60.0,
        ..PhysicalConfig::default()
    };
    let run = evolve_physical(|r| m.phi(r), &m, &cfg).unwrap();
    assert_abs_diff_eq!(run.t_est, 1.0, epsilon = 1e-3);
    assert!(run.fit_r2 > 0.999);
}

#[test]
fn initial_data_map_rejects_far_blowup_times() {
    let m = params();
    let g = Grid::new(12.0, 100).unwrap();
    assert!(matches!(initial_data_op(|_| 0.0, 1.6, &m, &g), Err(EvolutionError::Range { .. })));
}
