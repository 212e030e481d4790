//! Poincaré section at touchdown, Newton shooting for periodic gaits, and
//! natural-parameter continuation.
//!
//! The section is taken just after impact. With phase resetting the phase is
//! fixed there and `θ2 = 2θ1` holds, so the wobbling model lives on the
//! 5-vector `(θ1, θ̇1, θ̇2, x, ẋ)`; the compass model drops `x, ẋ`; without
//! phase resetting `φ` is appended.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WalkerError};
use crate::params::ModelParams;
use crate::sim::{simulate_stride, SimConfig, StrideOutcome, Trajectory};
use crate::state::HybridState;

#[derive(Debug, Clone, PartialEq)]
pub struct SectionState(pub DVector<f64>);

pub fn section_dim(params: &ModelParams) -> usize {
    let base = if params.is_compass() { 3 } else { 5 };
    base + usize::from(!params.phase_reset)
}

impl SectionState {
    pub fn new(coords: Vec<f64>, params: &ModelParams) -> Result<Self> {
        let expected = section_dim(params);
        if coords.len() != expected {
            return Err(WalkerError::SectionDimension {
                expected,
                got: coords.len(),
            });
        }
        Ok(Self(DVector::from_vec(coords)))
    }

    pub fn from_state(state: &HybridState, params: &ModelParams) -> Self {
        let mut v = vec![state.theta1, state.dtheta1, state.dtheta2];
        if !params.is_compass() {
            v.extend([state.x, state.dx]);
        }
        if !params.phase_reset {
            v.push(state.phi);
        }
        Self(DVector::from_vec(v))
    }

    /// Embeds into a full post-touchdown state with the stance foot at zero.
    pub fn to_state(&self, params: &ModelParams) -> HybridState {
        let z = &self.0;
        let (x, dx, tail) = if params.is_compass() {
            (0.0, 0.0, 3)
        } else {
            (z[3], z[4], 5)
        };
        HybridState {
            theta1: z[0],
            theta2: 2.0 * z[0],
            x,
            dtheta1: z[1],
            dtheta2: z[2],
            dx,
            phi: if params.phase_reset {
                params.reset_phase
            } else {
                z[tail]
            },
            stance_foot_x: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }
}

/// One application of the stride map, keeping the trajectory.
pub fn poincare_stride(
    z: &SectionState,
    params: &ModelParams,
    config: &SimConfig,
) -> Result<(SectionState, Trajectory)> {
    let StrideOutcome {
        trajectory,
        post_impact,
    } = simulate_stride(&z.to_state(params), params, config)?;
    match post_impact {
        Some(post) => Ok((SectionState::from_state(&post, params), trajectory)),
        None => Err(WalkerError::MapUndefined(trajectory.termination)),
    }
}

pub fn poincare_map(z: &SectionState, params: &ModelParams, config: &SimConfig) -> Result<SectionState> {
    poincare_stride(z, params, config).map(|(next, _)| next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonConfig {
    pub max_iter: usize,
    /// Required `|P(z) − z|` (Euclidean).
    pub tol: f64,
    /// Finite-difference step is `max(fd_min, fd_rel·|z_i|)`.
    pub fd_rel: f64,
    pub fd_min: f64,
    /// Smallest damping factor tried in the backtracking line search.
    pub min_damping: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            max_iter: 50,
            tol: 1e-10,
            fd_rel: 1e-6,
            fd_min: 1e-6,
            min_damping: 1.0 / 64.0,
        }
    }
}

/// Central-difference Jacobian of the stride map.
pub fn map_jacobian(
    z: &SectionState,
    params: &ModelParams,
    config: &SimConfig,
    newton: &NewtonConfig,
) -> Result<DMatrix<f64>> {
    let n = z.dim();
    let mut jac = DMatrix::zeros(n, n);
    for i in 0..n {
        let h = newton.fd_min.max(newton.fd_rel * z.0[i].abs());
        let mut plus = z.clone();
        let mut minus = z.clone();
        plus.0[i] += h;
        minus.0[i] -= h;
        let fp = poincare_map(&plus, params, config)?;
        let fm = poincare_map(&minus, params, config)?;
        jac.set_column(i, &((fp.0 - fm.0) / (2.0 * h)));
    }
    Ok(jac)
}

/// Eigenvalues sorted by decreasing magnitude.
pub fn sorted_eigenvalues(jac: &DMatrix<f64>) -> Vec<Complex64> {
    let mut ev: Vec<Complex64> = jac.clone().complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.im.total_cmp(&a.im)));
    ev
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitCycle {
    pub fixed_point: SectionState,
    /// Stride duration.
    pub period: f64,
    /// Eigenvalues of the linearised stride map, largest magnitude first.
    pub eigenvalues: Vec<Complex64>,
    pub stable: bool,
    pub residual: f64,
    pub iterations: usize,
    pub params: ModelParams,
}

impl LimitCycle {
    pub fn max_multiplier(&self) -> f64 {
        self.eigenvalues.first().map_or(f64::NAN, |e| e.norm())
    }

    /// Re-simulates one period from the fixed point.
    pub fn trajectory(&self, config: &SimConfig) -> Result<Trajectory> {
        poincare_stride(&self.fixed_point, &self.params, config).map(|(_, t)| t)
    }
}

/// Damped Newton on `F(z) = P(z) − z` with a finite-difference Jacobian.
pub fn find_fixed_point(
    guess: &SectionState,
    params: &ModelParams,
    config: &SimConfig,
    newton: &NewtonConfig,
) -> Result<LimitCycle> {
    let n = guess.dim();
    let expected = section_dim(params);
    if n != expected {
        return Err(WalkerError::SectionDimension { expected, got: n });
    }
    let mut z = guess.clone();
    let mut f = poincare_map(&z, params, config)?.0 - &z.0;
    let mut norm = f.norm();
    let mut iterations = 0;

    while norm > newton.tol {
        if iterations >= newton.max_iter {
            return Err(WalkerError::NoConvergence {
                iterations,
                residual: norm,
            });
        }
        iterations += 1;
        let jac = map_jacobian(&z, params, config, newton)? - DMatrix::<f64>::identity(n, n);
        let delta = jac.lu().solve(&(-&f)).ok_or(WalkerError::NoConvergence {
            iterations,
            residual: norm,
        })?;

        let mut lambda = 1.0;
        loop {
            let trial = SectionState(&z.0 + &delta * lambda);
            let accepted = match poincare_map(&trial, params, config) {
                Ok(next) => {
                    let ft = next.0 - &trial.0;
                    let nt = ft.norm();
                    if nt < norm {
                        z = trial;
                        f = ft;
                        norm = nt;
                        true
                    } else {
                        false
                    }
                }
                Err(WalkerError::MapUndefined(_)) => false,
                Err(e) => return Err(e),
            };
            if accepted {
                break;
            }
            lambda *= 0.5;
            if lambda < newton.min_damping {
                return Err(WalkerError::NoConvergence {
                    iterations,
                    residual: norm,
                });
            }
        }
    }

    let (_, trajectory) = poincare_stride(&z, params, config)?;
    let jac = map_jacobian(&z, params, config, newton)?;
    let eigenvalues = sorted_eigenvalues(&jac);
    let stable = eigenvalues.first().is_some_and(|e| e.norm() < 1.0);
    Ok(LimitCycle {
        fixed_point: z,
        period: trajectory.duration(),
        eigenvalues,
        stable,
        residual: norm,
        iterations,
        params: *params,
    })
}

/// Guess grid for solving without a neighbouring solution: each guess is
/// iterated forward for `settle_strides` strides and then polished by Newton.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColdStart {
    pub theta1: Vec<f64>,
    pub dtheta1: Vec<f64>,
    /// Initial wobble velocities tried on top of `x = 0`.
    pub dx: Vec<f64>,
    pub settle_strides: usize,
}

impl Default for ColdStart {
    fn default() -> Self {
        Self {
            theta1: vec![-0.1, -0.15, -0.2, -0.3],
            dtheta1: vec![0.15, 0.25, 0.4, 0.6],
            dx: vec![0.0, 0.05, -0.05],
            settle_strides: 30,
        }
    }
}

/// Searches the guess grid in order and returns the first converged cycle.
/// Stable cycles are preferred; an unstable one is returned only if no
/// guess reaches a stable cycle.
pub fn cold_start(
    params: &ModelParams,
    sim: &SimConfig,
    newton: &NewtonConfig,
    grid: &ColdStart,
) -> Result<LimitCycle> {
    let wobble: &[f64] = if params.is_compass() { &[0.0] } else { &grid.dx };
    let mut fallback: Option<LimitCycle> = None;
    let mut last_err = WalkerError::NoConvergence {
        iterations: 0,
        residual: f64::INFINITY,
    };
    for &dx in wobble {
        for &t1 in &grid.theta1 {
            for &d1 in &grid.dtheta1 {
                let mut v = vec![t1, d1, 0.0];
                if !params.is_compass() {
                    v.extend([0.0, dx]);
                }
                if !params.phase_reset {
                    v.push(params.reset_phase);
                }
                let mut z = SectionState::new(v, params)?;
                let settled = (0..grid.settle_strides).try_for_each(|_| {
                    z = poincare_map(&z, params, sim)?;
                    Ok::<_, WalkerError>(())
                });
                if let Err(e) = settled {
                    last_err = e;
                    continue;
                }
                match find_fixed_point(&z, params, sim, newton) {
                    Ok(c) if c.stable => return Ok(c),
                    Ok(c) => {
                        fallback.get_or_insert(c);
                    }
                    Err(e) => last_err = e,
                }
            }
        }
    }
    fallback.ok_or(last_err)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamAxis {
    K,
    Alpha,
    Omega,
}

impl ParamAxis {
    pub fn get(self, p: &ModelParams) -> f64 {
        match self {
            Self::K => p.k,
            Self::Alpha => p.alpha,
            Self::Omega => p.omega,
        }
    }

    pub fn set(self, p: &ModelParams, value: f64) -> ModelParams {
        let mut q = *p;
        match self {
            Self::K => q.k = value,
            Self::Alpha => q.alpha = value,
            Self::Omega => q.omega = value,
        }
        q
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationPoint {
    pub value: f64,
    pub cycle: Option<LimitCycle>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContinuationConfig {
    /// Smallest sub-step tried when halving towards the next grid value.
    pub min_step: f64,
    pub newton: NewtonConfig,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            min_step: 1e-3,
            newton: NewtonConfig {
                max_iter: 20,
                ..NewtonConfig::default()
            },
        }
    }
}

/// Solves at `target` starting from `from`, halving the parameter step on
/// failure.
pub fn continue_to(
    from: &LimitCycle,
    axis: ParamAxis,
    target: f64,
    sim: &SimConfig,
    cont: &ContinuationConfig,
) -> Result<LimitCycle> {
    let mut current = from.clone();
    let mut step = target - axis.get(&current.params);
    let mut last_err = None;
    while axis.get(&current.params) != target {
        let here = axis.get(&current.params);
        let value = if (target - here).abs() <= step.abs() {
            target
        } else {
            here + step
        };
        let params = axis.set(&current.params, value);
        match find_fixed_point(&current.fixed_point, &params, sim, &cont.newton) {
            Ok(c) => {
                current = c;
                // grow back after a successful sub-step
                step *= 2.0;
            }
            Err(e) => {
                step *= 0.5;
                if step.abs() < cont.min_step {
                    return Err(last_err.unwrap_or(e));
                }
                last_err = Some(e);
            }
        }
    }
    Ok(current)
}

/// Natural-parameter continuation along `grid`. Points where no solution is
/// reached are recorded with the failure; later points restart from the last
/// converged cycle with a single direct solve.
pub fn continue_in_parameter(
    start: &LimitCycle,
    axis: ParamAxis,
    grid: &[f64],
    sim: &SimConfig,
    cont: &ContinuationConfig,
) -> Vec<ContinuationPoint> {
    let mut last = start.clone();
    let mut broken = false;
    let mut out = Vec::with_capacity(grid.len());
    for &value in grid {
        let attempt = if broken {
            let params = axis.set(&last.params, value);
            find_fixed_point(&last.fixed_point, &params, sim, &cont.newton)
        } else {
            continue_to(&last, axis, value, sim, cont)
        };
        match attempt {
            Ok(c) => {
                last = c.clone();
                broken = false;
                out.push(ContinuationPoint {
                    value,
                    cycle: Some(c),
                    failure: None,
                });
            }
            Err(e) => {
                broken = true;
                out.push(ContinuationPoint {
                    value,
                    cycle: None,
                    failure: Some(e.to_string()),
                });
            }
        }
    }
    out
}
