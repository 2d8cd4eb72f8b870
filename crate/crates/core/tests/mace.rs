use proptest::prelude::*;
use rare_mace::mace::{
    apply_agents, average_operator, averaging_weights, dr_step, solve_mace, solve_mace_state, Agent, MaceConfig,
    StackedState,
};
use rare_mace::{Error, Image, ImageGrid, Result};

fn identity(x: &[f64]) -> Result<Vec<f64>> {
    Ok(x.to_vec())
}

/// Proximal map of f(z) = ‖z − a‖²/2 with parameter β.
struct QuadProx {
    a: Vec<f64>,
    beta: f64,
}

impl Agent for QuadProx {
    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        Ok(v.iter().zip(&self.a).map(|(v, a)| (self.beta * a + v) / (1.0 + self.beta)).collect())
    }
}

fn line_image(values: Vec<f64>) -> Image {
    Image::new(ImageGrid::new(values.len(), 1, 1.0, 0.0).unwrap(), values).unwrap()
}

/// For proximal agents with a common β the equilibrium is the
/// weighted mean of the individual minimizers.
fn closed_form_equilibrium(targets: &[Vec<f64>], mu: f64) -> Vec<f64> {
    let w = averaging_weights(targets.len(), mu).unwrap();
    (0..targets[0].len()).map(|j| targets.iter().zip(&w).map(|(t, w)| w * t[j]).sum()).collect()
}

#[test]
fn apply_agents_examples() {
    let plus_one = |x: &[f64]| -> Result<Vec<f64>> { Ok(x.iter().map(|v| v + 1.0).collect()) };
    let double = |x: &[f64]| -> Result<Vec<f64>> { Ok(x.iter().map(|v| v * 2.0).collect()) };
    let zero = |x: &[f64]| -> Result<Vec<f64>> { Ok(vec![0.0; x.len()]) };
    let w = StackedState::new(vec![vec![1.0; 3]; 3]).unwrap();
    let out = apply_agents(&w, &[&plus_one, &double, &zero]).unwrap();
    assert_eq!(out.components(), &[vec![2.0; 3], vec![2.0; 3], vec![0.0; 3]]);

    let id = apply_agents(&w, &[&identity, &identity, &identity]).unwrap();
    assert_eq!(id, w);

    let mut changed = w.clone().into_components();
    changed[1] = vec![5.0, -1.0, 7.0];
    let out2 = apply_agents(&StackedState::new(changed).unwrap(), &[&plus_one, &double, &zero]).unwrap();
    assert_eq!(out2.component(0), out.component(0));
    assert_eq!(out2.component(2), out.component(2));
}

#[test]
fn apply_agents_rejects_wrong_output_length() {
    let short = |_: &[f64]| -> Result<Vec<f64>> { Ok(vec![0.0]) };
    let w = StackedState::new(vec![vec![1.0; 3]; 2]).unwrap();
    assert!(matches!(apply_agents(&w, &[&identity, &short]), Err(Error::Dimension { .. })));
    assert!(apply_agents(&w, &[&identity]).is_err());
}

#[test]
fn average_operator_examples() {
    let w = StackedState::new(vec![vec![4.0], vec![2.0], vec![2.0]]).unwrap();
    assert_eq!(average_operator(&w, 1.0).unwrap().components(), &[vec![3.0], vec![3.0], vec![3.0]]);
    let w = StackedState::new(vec![vec![4.0, -1.0], vec![2.0, 8.0], vec![9.0, 3.0]]).unwrap();
    let g = average_operator(&w, 0.0).unwrap();
    for c in g.components() {
        assert_eq!(c, &vec![4.0, -1.0]);
    }
}

#[test]
fn dr_step_identity_agents_keep_consensus() {
    let w = StackedState::replicate(&[1.5, -2.0, 0.25], 3).unwrap();
    for rho in [0.1, 0.5, 0.9] {
        assert_eq!(dr_step(&w, &[&identity, &identity, &identity], 1.0, rho).unwrap(), w);
    }
}

#[test]
fn dr_step_tiny_rho_is_nearly_identity() {
    let agents = [
        QuadProx { a: vec![1.0, 2.0], beta: 0.5 },
        QuadProx { a: vec![-3.0, 0.5], beta: 0.5 },
        QuadProx { a: vec![7.0, 1.0], beta: 0.5 },
    ];
    let refs: Vec<&dyn Agent> = agents.iter().map(|a| a as &dyn Agent).collect();
    let w = StackedState::new(vec![vec![0.3, 0.1], vec![2.0, -1.0], vec![1.0, 4.0]]).unwrap();
    let next = dr_step(&w, &refs, 1.0, 1e-12).unwrap();
    assert!(next.distance(&w) <= 1e-9 * w.norm());
}

#[test]
fn identity_agents_return_init_after_one_iteration() {
    let init = line_image(vec![0.5, -1.0, 2.0, 0.0]);
    let (x, report) = solve_mace(&MaceConfig::default(), &[&identity, &identity, &identity], &init).unwrap();
    assert_eq!(x, init);
    assert_eq!(report.iterations_run, 1);
    assert_eq!(report.residual_history, vec![0.0]);
    assert!(report.converged);
}

fn quad_agents(targets: &[Vec<f64>], beta: f64) -> Vec<QuadProx> {
    targets.iter().map(|a| QuadProx { a: a.clone(), beta }).collect()
}

#[test]
fn scalar_quadratics_reach_closed_form_equilibrium() {
    let targets = vec![vec![4.0, -1.0, 0.5], vec![2.0, 3.0, 0.0], vec![-6.0, 1.0, 2.5]];
    for (mu, beta) in [(1.0, 1.0), (1.0, 0.3), (0.4, 2.0), (3.0, 1.0)] {
        let agents = quad_agents(&targets, beta);
        let refs: Vec<&dyn Agent> = agents.iter().map(|a| a as &dyn Agent).collect();
        let cfg = MaceConfig { mu, tol: 1e-13, max_iters: 5000, ..MaceConfig::default() };
        let (x, report) = solve_mace(&cfg, &refs, &line_image(vec![0.0; 3])).unwrap();
        let expected = closed_form_equilibrium(&targets, mu);
        for (a, b) in x.values.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-8, "mu {mu}, beta {beta}: {a} vs {b}");
        }
        assert!(report.converged);
    }
}

#[test]
fn zero_mu_selects_forward_agent_minimizer() {
    let targets = vec![vec![4.0, -1.0], vec![2.0, 3.0], vec![-6.0, 1.0]];
    let agents = quad_agents(&targets, 0.7);
    let refs: Vec<&dyn Agent> = agents.iter().map(|a| a as &dyn Agent).collect();
    let cfg = MaceConfig { mu: 0.0, tol: 1e-13, max_iters: 5000, ..MaceConfig::default() };
    let (x, _) = solve_mace(&cfg, &refs, &line_image(vec![10.0, 10.0])).unwrap();
    for (a, b) in x.values.iter().zip(&targets[0]) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn fixed_point_certificate() {
    let targets = vec![vec![1.0, -2.0, 3.0, 0.0], vec![0.5, 0.5, 0.5, 0.5], vec![-1.0, 4.0, 2.0, 1.0]];
    let agents = quad_agents(&targets, 0.8);
    let refs: Vec<&dyn Agent> = agents.iter().map(|a| a as &dyn Agent).collect();
    let cfg = MaceConfig { tol: 1e-6, max_iters: 1000, ..MaceConfig::default() };
    let (w, report) = solve_mace_state(&cfg, &refs, &line_image(vec![0.0; 4])).unwrap();
    assert!(report.converged);
    let l = apply_agents(&w, &refs).unwrap();
    let g = average_operator(&w, cfg.mu).unwrap();
    assert!(l.distance(&g) / w.norm() < 3.0 * cfg.tol);
}

#[test]
fn non_finite_agent_output_reports_iteration() {
    let calls = std::sync::atomic::AtomicUsize::new(0);
    let flaky = |x: &[f64]| -> Result<Vec<f64>> {
        let n = calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        Ok(x.iter().map(|v| if n >= 2 { f64::NAN } else { v * 0.5 }).collect())
    };
    let init = line_image(vec![1.0, 2.0]);
    match solve_mace(&MaceConfig::default(), &[&identity, &flaky], &init) {
        Err(Error::Numerical { iteration, .. }) => assert_eq!(iteration, 3),
        other => panic!("expected a numerical error, got {other:?}"),
    }
    let bad = Image { grid: ImageGrid::new(1, 1, 1.0, 0.0).unwrap(), values: vec![f64::NAN] };
    assert!(solve_mace(&MaceConfig::default(), &[&identity], &bad).is_err());
}

#[test]
fn snapshots_are_recorded() {
    let targets = vec![vec![1.0], vec![2.0]];
    let agents = quad_agents(&targets, 1.0);
    let refs: Vec<&dyn Agent> = agents.iter().map(|a| a as &dyn Agent).collect();
    let cfg = MaceConfig { tol: 1e-30, max_iters: 12, snapshot_every: Some(5), ..MaceConfig::default() };
    let (_, report) = solve_mace(&cfg, &refs, &line_image(vec![0.0])).unwrap();
    let its: Vec<usize> = report.snapshots.iter().map(|s| s.iteration).collect();
    assert_eq!(its, vec![5, 10]);
    assert_eq!(report.residual_history.len(), report.iterations_run);
}

fn state_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..6).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(-100.0f64..100.0, n), 3))
}

proptest! {
    #[test]
    fn average_operator_is_idempotent(comps in state_strategy(), mu in 0.0f64..10.0) {
        let w = StackedState::new(comps).unwrap();
        let g = average_operator(&w, mu).unwrap();
        prop_assert_eq!(average_operator(&g, mu).unwrap(), g);
    }

    #[test]
    fn average_of_consensus_is_consensus(c in prop::collection::vec(-50.0f64..50.0, 1..6), mu in 0.0f64..10.0) {
        let w = StackedState::replicate(&c, 3).unwrap();
        let g = average_operator(&w, mu).unwrap();
        for comp in g.components() {
            for (a, b) in comp.iter().zip(&c) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn weights_sum_to_one(n in 1usize..6, mu in 0.0f64..100.0) {
        let w = averaging_weights(n, mu).unwrap();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_point_step_non_increasing_for_quadratic_proxes(
        targets in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 3), 3),
        beta in 0.05f64..5.0,
        rho in 0.1f64..0.95,
        mu in 0.2f64..5.0,
    ) {
        let agents = quad_agents(&targets, beta);
        let refs: Vec<&dyn Agent> = agents.iter().map(|a| a as &dyn Agent).collect();
        // T is nonexpansive in the norm weighted by the averaging weights
        let weights = averaging_weights(3, mu).unwrap();
        let wnorm = |d: &StackedState| -> f64 {
            d.components().iter().zip(&weights).map(|(c, w)| w * c.iter().map(|v| v * v).sum::<f64>()).sum::<f64>().sqrt()
        };
        let mut state = StackedState::replicate(&[1.0, -1.0, 0.5], 3).unwrap();
        let mut prev = f64::INFINITY;
        for _ in 0..60 {
            let next = dr_step(&state, &refs, mu, rho).unwrap();
            let diff = StackedState::new(
                next.components().iter().zip(state.components()).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect(),
            )
            .unwrap();
            let step = wnorm(&diff);
            prop_assert!(step <= prev * (1.0 + 1e-9) + 1e-12, "step grew from {prev} to {step}");
            prev = step;
            state = next;
        }
    }
}
