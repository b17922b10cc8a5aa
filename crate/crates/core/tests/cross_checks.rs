//! Cross-module invariants: solver designs against the conditional-mean
//! decoder bound, affine anchors against the discrete frontier and the
//! simulator, and frontier reproducibility down to the bit level.

use witslab::affine::{
    affine_costs, gaussian_frontier_sample, monte_carlo_timeshare_affine, timeshare_affine,
    AffinePolicy,
};
use witslab::designs::{causal_cost, CausalDesign, Kernel};
use witslab::mix_seed;
use witslab::model::{DiscreteModel, ModelParams};
use witslab::simulator::{run_block, verify_achievability, Scenario, StationaryPolicy};
use witslab::solver::{
    envelope_value_at, log_spaced_lambdas, mmse_decoder_full, pareto_frontier_causal,
    SolverSettings,
};

fn unit_params() -> ModelParams {
    ModelParams::new(1.0, 1.0).unwrap()
}

fn settings(lambdas: Vec<f64>, restarts: usize, seed: u64) -> SolverSettings {
    SolverSettings {
        lambda_schedule: lambdas,
        restarts,
        max_alternations: 40,
        tolerance: 1e-10,
        penalty_weight: None,
        seed,
    }
}

#[test]
fn frontier_decoders_are_within_the_snapping_bound_of_optimal() {
    let model = DiscreteModel::with_default_grids(unit_params(), 32).unwrap();
    let frontier =
        pareto_frontier_causal(&model, &settings(log_spaced_lambdas(7, 1e-2, 1e2), 3, 5)).unwrap();
    let du = model.u2_grid.value(1) - model.u2_grid.value(0);
    let bound = (du / 2.0) * (du / 2.0);
    for pt in &frontier.points {
        let refreshed = CausalDesign::new(
            pt.design.p_t.clone(),
            pt.design.enc.clone(),
            mmse_decoder_full(&pt.design, &model).unwrap(),
        )
        .unwrap();
        let s_refreshed = causal_cost(&refreshed, &model).unwrap().s;
        assert!(
            s_refreshed >= pt.costs.s - bound - 1e-12,
            "conditional-mean decoder improved S by more than the snapping bound: \
             {} -> {s_refreshed}",
            pt.costs.s
        );
    }
}

#[test]
fn affine_envelope_stays_above_the_fine_grid_frontier() {
    // The affine family is a subset of all single-letter designs, so its
    // time-shared envelope can only lie above the causal frontier; on a
    // 128-point model the discretization gap stays inside a 2% of Q band.
    let model = DiscreteModel::with_default_grids(unit_params(), 128).unwrap();
    let frontier =
        pareto_frontier_causal(&model, &settings(log_spaced_lambdas(9, 1e-3, 1e3), 3, 17)).unwrap();
    let gains: Vec<f64> = (0..=60).map(|i| -1.5 + i as f64 * 0.05).collect();
    let affine = gaussian_frontier_sample(unit_params(), &gains).unwrap();

    let lo = affine.envelope.first().unwrap().p;
    let hi = affine.envelope.last().unwrap().p;
    for pt in &frontier.points {
        if pt.costs.p < lo || pt.costs.p > hi {
            continue;
        }
        let s_affine = envelope_value_at(&affine.envelope, pt.costs.p);
        assert!(
            s_affine >= pt.costs.s - 0.02,
            "affine envelope {} fell below the frontier {} at P = {}",
            s_affine,
            pt.costs.s,
            pt.costs.p
        );
    }
}

#[test]
fn timeshared_affine_chord_matches_monte_carlo() {
    let m = unit_params();
    let p1 = AffinePolicy::new(-1.0).unwrap();
    let p2 = AffinePolicy::new(0.0).unwrap();
    for &theta in &[0.0, 0.25, 0.5, 0.75, 1.0] {
        let chord = timeshare_affine(p1, p2, theta, m).unwrap();
        let mc = monte_carlo_timeshare_affine(p1, p2, theta, m, 100_000, mix_seed(3, theta.to_bits()))
            .unwrap();
        assert!(
            (mc.costs.p - chord.p).abs() <= 3.0 * mc.se_p.max(1e-12) + 1e-4,
            "theta {theta}: P {} vs chord {}",
            mc.costs.p,
            chord.p
        );
        assert!(
            (mc.costs.s - chord.s).abs() <= 3.0 * mc.se_s.max(1e-12) + 1e-4,
            "theta {theta}: S {} vs chord {}",
            mc.costs.s,
            chord.s
        );
    }
    // endpoints collapse to the single-policy costs
    let end = monte_carlo_timeshare_affine(p1, p2, 1.0, m, 50_000, 9).unwrap();
    let exact = affine_costs(p1, m);
    assert!((end.costs.s - exact.s).abs() <= 3.0 * end.se_s.max(1e-12));
}

#[test]
fn frontier_is_bit_reproducible() {
    let model = DiscreteModel::with_default_grids(unit_params(), 16).unwrap();
    let s = settings(log_spaced_lambdas(5, 1e-2, 1e2), 3, 123);
    let a = pareto_frontier_causal(&model, &s).unwrap();
    let b = pareto_frontier_causal(&model, &s).unwrap();
    assert_eq!(a.points.len(), b.points.len());
    for (x, y) in a.points.iter().zip(&b.points) {
        assert_eq!(x.lambda.to_bits(), y.lambda.to_bits());
        assert_eq!(x.costs.p.to_bits(), y.costs.p.to_bits());
        assert_eq!(x.costs.s.to_bits(), y.costs.s.to_bits());
        assert_eq!(x.design, y.design);
    }
}

#[test]
fn degenerate_channel_gap_reaches_the_quantization_floor() {
    // Nearly noiseless channel, zero-forcing encoder, decoder pinned at 0:
    // the only residual cost is the source quantization error, so the
    // achievability gap settles at the quantizer floor instead of 0.
    let params = ModelParams::new(1.0, 1e-12).unwrap();
    let model = DiscreteModel::with_default_grids(params, 64).unwrap();
    let nx = model.x0_grid.len();
    let x0g = model.x0_grid.clone();
    let u1g = model.u1_grid.clone();
    let iv0 = model.u2_grid.nearest_index(0.0);
    let design = CausalDesign::new(
        vec![1.0],
        Kernel::point_mass(vec![nx, 1], model.u1_grid.len(), move |idx| {
            u1g.nearest_index(-x0g.value(idx[0]))
        }),
        Kernel::point_mass(vec![1, model.y1_grid.len()], model.u2_grid.len(), move |_| iv0),
    )
    .unwrap();
    // discrete-model costs: x1 = 0 exactly on the shared lattice except at the
    // leftmost midtread point (no +span partner), whose tail bin carries
    // ~4e-5 mass, so S* is ~5e-7 rather than exactly 0
    let targets = causal_cost(&design, &model).unwrap();
    assert!(targets.s.abs() < 1e-5);

    // quantizer-floor oracle: E[(x - q(x))^2] by Simpson quadrature
    let grid = model.x0_grid.clone();
    let err2 = |x: f64| {
        let d = x - grid.value(grid.nearest_index(x));
        d * d
    };
    let steps = 100_000;
    let (a, b) = (-10.0, 10.0);
    let h = (b - a) / steps as f64;
    let dens = |x: f64| (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut floor = err2(a) * dens(a) + err2(b) * dens(b);
    for i in 1..steps {
        let x = a + h * i as f64;
        let f = err2(x) * dens(x);
        floor += if i % 2 == 1 { 4.0 * f } else { 2.0 * f };
    }
    floor *= h / 3.0;

    // the power term's sampling noise decays as 1/sqrt(n) while the S term
    // settles at the floor, so the floor dominates only for large blocks
    let seeds: Vec<u64> = (0..3).collect();
    let report =
        verify_achievability(&design, &model, targets, &[1_000_000, 10_000_000], &seeds, f64::INFINITY)
            .unwrap();
    let final_gap = report.final_gap;
    assert!(
        final_gap >= 0.7 * floor && final_gap <= 2.2 * floor,
        "gap {final_gap} vs quantizer floor {floor}"
    );

    // and the per-block cost itself concentrates on the floor
    let policy = StationaryPolicy::from_causal_design(&design, &model, 50_000).unwrap();
    let run = run_block(&policy, Scenario::CausalCausal, &params, 50_000, 5, false).unwrap();
    assert!((run.stats.c_s - floor).abs() <= 5.0 * run.stats.se_s + 0.1 * floor);
}
