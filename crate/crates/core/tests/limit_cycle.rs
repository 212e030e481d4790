mod common;

use wobble_core::limit_cycle::{
    continue_in_parameter, map_jacobian, sorted_eigenvalues, ColdStart, ContinuationConfig, ParamAxis,
};
use wobble_core::{
    cold_start, find_fixed_point, poincare_map, simulate_n_strides, LimitCycle, ModelParams, NewtonConfig,
    SectionState, SimConfig, WalkerError,
};

fn solve(k: f64) -> LimitCycle {
    let p = ModelParams {
        k,
        ..ModelParams::default()
    };
    cold_start(
        &p,
        &SimConfig::default(),
        &NewtonConfig::default(),
        &ColdStart::default(),
    )
    .unwrap()
}

fn gap(a: &SectionState, b: &SectionState) -> f64 {
    (&a.0 - &b.0).norm()
}

#[test]
fn fixed_point_closes_the_orbit() {
    let c = solve(6.0);
    assert!(c.stable);
    assert!(c.residual <= 1e-10);
    let sim = SimConfig::default();
    let again = poincare_map(&c.fixed_point, &c.params, &sim).unwrap();
    assert!(gap(&again, &c.fixed_point) <= 1e-8);

    let mut z = c.fixed_point.clone();
    for _ in 0..5 {
        z = poincare_map(&z, &c.params, &sim).unwrap();
    }
    assert!(
        gap(&z, &c.fixed_point) <= 1e-8,
        "five-stride drift {}",
        gap(&z, &c.fixed_point)
    );

    let tr = c.trajectory(&sim).unwrap();
    assert!((tr.duration() - c.period).abs() < 1e-12);
    let end = tr.samples.last().unwrap().state;
    assert!(end.x.abs() < 1.0 && end.theta1 > 0.0);
}

#[test]
fn exact_seed_needs_no_iterations() {
    let c = solve(6.0);
    let again = find_fixed_point(
        &c.fixed_point,
        &c.params,
        &SimConfig::default(),
        &NewtonConfig::default(),
    )
    .unwrap();
    assert!(again.iterations <= 2);
    assert!(gap(&again.fixed_point, &c.fixed_point) <= 1e-9);
}

#[test]
fn map_composes_like_consecutive_strides() {
    let c = solve(6.0);
    let sim = SimConfig::default();
    let mut z = c.fixed_point.clone();
    z.0[1] += 1e-3;
    z.0[3] += 1e-3;
    let two = poincare_map(&poincare_map(&z, &c.params, &sim).unwrap(), &c.params, &sim).unwrap();
    let strides = simulate_n_strides(&z.to_state(&c.params), 3, &c.params, &sim).unwrap();
    let mut third = strides[2].samples[0].state;
    third.stance_foot_x = 0.0;
    let via_chain = SectionState::from_state(&third, &c.params);
    assert!(gap(&two, &via_chain) < 1e-12);
}

#[test]
fn multipliers_do_not_depend_on_the_difference_step() {
    let c = solve(6.0);
    let sim = SimConfig::default();
    let lead = |fd: f64| {
        let newton = NewtonConfig {
            fd_rel: fd,
            fd_min: fd,
            ..NewtonConfig::default()
        };
        let jac = map_jacobian(&c.fixed_point, &c.params, &sim, &newton).unwrap();
        sorted_eigenvalues(&jac)[0].norm()
    };
    let (a, b) = (lead(1e-5), lead(1e-7));
    assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    assert!((a - c.max_multiplier()).abs() < 1e-4);
}

#[test]
fn continuation_does_not_cross_a_band_gap() {
    let c = solve(6.0);
    let grid: Vec<f64> = (0..5).map(|i| 5.75 - 0.25 * i as f64).collect();
    let pts = continue_in_parameter(
        &c,
        ParamAxis::K,
        &grid,
        &SimConfig::default(),
        &ContinuationConfig::default(),
    );
    assert_eq!(pts.len(), grid.len());
    assert!(
        pts.iter().any(|p| p.cycle.is_none()),
        "continued straight through the gap"
    );
    for p in &pts {
        assert_eq!(p.cycle.is_some(), p.failure.is_none());
    }
}

#[test]
fn single_point_continuation_returns_the_start() {
    let c = solve(6.0);
    let pts = continue_in_parameter(
        &c,
        ParamAxis::K,
        &[6.0],
        &SimConfig::default(),
        &ContinuationConfig::default(),
    );
    assert_eq!(pts.len(), 1);
    assert_eq!(pts[0].cycle.as_ref(), Some(&c));
}

#[test]
fn compass_section_has_three_stable_multipliers() {
    let p = ModelParams::default().compass();
    let c = cold_start(
        &p,
        &SimConfig::default(),
        &NewtonConfig::default(),
        &ColdStart::default(),
    )
    .unwrap();
    assert_eq!(c.fixed_point.dim(), 3);
    assert_eq!(c.eigenvalues.len(), 3);
    assert!(c.eigenvalues.iter().all(|e| e.norm() < 1.0));
    // sorted by magnitude
    assert!(c.eigenvalues.windows(2).all(|w| w[0].norm() >= w[1].norm()));
}

#[test]
fn section_without_phase_reset_carries_the_phase() {
    let p = ModelParams {
        phase_reset: false,
        ..ModelParams::default()
    };
    assert!(SectionState::new(vec![-0.1, 0.3, 0.0, 0.0, 0.0], &p).is_err());
    let z = SectionState::new(vec![-0.1, 0.3, 0.0, 0.0, 0.0, 1.0], &p).unwrap();
    assert_eq!(z.to_state(&p).phi, 1.0);
    assert_eq!(SectionState::from_state(&z.to_state(&p), &p), z);
}

#[test]
fn map_is_undefined_without_forward_motion() {
    let p = ModelParams {
        kp: 0.0,
        kd: 0.0,
        ..ModelParams::default()
    };
    let z = SectionState::new(vec![-1e-9, 0.0, 0.0, 0.0, 0.0], &p).unwrap();
    match poincare_map(&z, &p, &SimConfig::default()) {
        Err(WalkerError::MapUndefined(_)) => {}
        other => panic!("expected an undefined map, got {other:?}"),
    }
}

#[test]
fn wrong_section_size_is_rejected() {
    let p = ModelParams::default();
    let z = SectionState(nalgebra::DVector::from_vec(vec![-0.1, 0.3, 0.0]));
    let err = find_fixed_point(&z, &p, &SimConfig::default(), &NewtonConfig::default()).unwrap_err();
    assert!(matches!(err, WalkerError::SectionDimension { expected: 5, got: 3 }));
}
