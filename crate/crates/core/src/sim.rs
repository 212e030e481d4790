//! Hybrid simulation: swing-phase integration, touchdown detection, impact
//! and fall detection.

use std::fmt::Write as _;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WalkerError};
use crate::impact::impact_map_with_tol;
use crate::integrate::{Step, Stepper, Tolerances};
use crate::model::{accelerations, controller_torque};
use crate::params::ModelParams;
use crate::state::HybridState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Root tolerance on the guard `2θ1 − θ2`.
    pub event_tol: f64,
    pub max_stride_time: f64,
    /// Recording interval for trajectory samples.
    pub sample_dt: f64,
    pub max_step: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            event_tol: 1e-12,
            max_stride_time: 5.0,
            sample_dt: 1e-3,
            max_step: 0.05,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("event_tol", self.event_tol),
            ("max_stride_time", self.max_stride_time),
            ("sample_dt", self.sample_dt),
            ("max_step", self.max_step),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(WalkerError::InvalidParameter {
                    name,
                    reason: "must be finite and strictly positive".into(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    CompletedStride,
    Fell,
    TimedOut,
}

/// One recorded instant of a stride.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: HybridState,
    pub torque: f64,
    pub ddq: Vector3<f64>,
    /// Accumulated `∫ u θ̇2 dt` since the stride started.
    pub work: f64,
    /// Accumulated `∫ |u θ̇2| dt`.
    pub abs_work: f64,
    /// Accumulated positive part of `u θ̇2`.
    pub pos_work: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// Touchdown times.
    pub events: Vec<f64>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn start_time(&self) -> f64 {
        self.samples.first().map_or(0.0, |s| s.t)
    }

    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    /// Pre-impact state at touchdown, when the stride completed.
    pub fn pre_impact(&self) -> Option<&HybridState> {
        match self.termination {
            Termination::CompletedStride => self.samples.last().map(|s| &s.state),
            _ => None,
        }
    }

    pub const CSV_HEADER: &'static str =
        "t,theta1,theta2,x,dtheta1,dtheta2,dx,phi,stance_foot_x,u,ddtheta1,ddtheta2,ddx,work,abs_work";

    /// One sample per row, columns as in [`Trajectory::CSV_HEADER`].
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.samples.len() * 200);
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            let st = &s.state;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                s.t,
                st.theta1,
                st.theta2,
                st.x,
                st.dtheta1,
                st.dtheta2,
                st.dx,
                st.phi,
                st.stance_foot_x,
                s.torque,
                s.ddq[0],
                s.ddq[1],
                s.ddq[2],
                s.work,
                s.abs_work
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrideOutcome {
    pub trajectory: Trajectory,
    /// Post-impact state, present when the stride completed.
    pub post_impact: Option<HybridState>,
}

const DIM: usize = 10;

fn unpack(y: &[f64; DIM], stance_foot_x: f64) -> HybridState {
    HybridState::from_slice(y, stance_foot_x)
}

/// Events this close to the stride start are the lift-off of the previous
/// impact, not a new touchdown.
const LIFTOFF_WINDOW: f64 = 1e-9;

pub fn simulate_stride(initial: &HybridState, params: &ModelParams, config: &SimConfig) -> Result<StrideOutcome> {
    simulate_stride_from(initial, 0.0, params, config)
}

pub fn simulate_stride_from(
    initial: &HybridState,
    t_start: f64,
    params: &ModelParams,
    config: &SimConfig,
) -> Result<StrideOutcome> {
    params.validate()?;
    config.validate()?;
    let foot = initial.stance_foot_x;
    let compass = params.is_compass();

    let rhs = |_t: f64, y: &[f64; DIM]| -> [f64; DIM] {
        let s = unpack(y, foot);
        let u = controller_torque(&s, params);
        let a = accelerations(&s, params).unwrap_or_else(|_| Vector3::repeat(f64::NAN));
        let power = u * s.dtheta2;
        [
            s.dtheta1,
            s.dtheta2,
            if compass { 0.0 } else { s.dx },
            a[0],
            a[1],
            a[2],
            params.omega,
            power,
            power.abs(),
            power.max(0.0),
        ]
    };

    let mut init = *initial;
    if compass {
        init.x = 0.0;
        init.dx = 0.0;
    }
    let a = init.to_array();
    let y0 = [a[0], a[1], a[2], a[3], a[4], a[5], a[6], 0.0, 0.0, 0.0];
    let tol = Tolerances {
        rel: config.rel_tol,
        abs: config.abs_tol,
        max_step: config.max_step,
        min_step: 1e-14,
    };
    let mut stepper = Stepper::new(rhs, 0.0, y0, 1e-3, tol);

    let record = |t: f64, y: &[f64; DIM]| -> Result<Sample> {
        let state = unpack(y, foot);
        Ok(Sample {
            t: t_start + t,
            state,
            torque: controller_torque(&state, params),
            ddq: accelerations(&state, params)?,
            work: y[7],
            abs_work: y[8],
            pos_work: y[9],
        })
    };

    let mut samples = vec![record(0.0, &y0)?];
    let mut next_sample = 1usize;
    let t_end = config.max_stride_time;

    if !init.is_upright() {
        return Ok(ended(samples, Termination::Fell));
    }

    loop {
        let step = match stepper.advance(t_end) {
            Ok(s) => s,
            Err(_) => {
                // step-size underflow: the walker has left the physical region
                return Ok(ended(samples, Termination::Fell));
            }
        };

        let touchdown = locate_touchdown(&mut stepper, &step, config.event_tol);
        let horizon = touchdown.map_or(step.t1(), |(t, _)| t);

        while (next_sample as f64) * config.sample_dt < horizon {
            let t = next_sample as f64 * config.sample_dt;
            samples.push(record(t, &step.interpolate(t))?);
            next_sample += 1;
        }

        if let Some((t_event, y_event)) = touchdown {
            let pre = unpack(&y_event, foot);
            if pre.theta1 <= 0.0 {
                // swing foot landed behind the stance foot
                samples.push(record(t_event, &y_event)?);
                return Ok(ended(samples, Termination::Fell));
            }
            if samples.last().is_some_and(|s| s.t >= t_start + t_event) {
                samples.pop();
            }
            samples.push(record(t_event, &y_event)?);
            let post = impact_map_with_tol(&pre, params, config.event_tol.max(1e-10))?;
            let mut trajectory = finish(samples, Termination::CompletedStride);
            trajectory.events.push(t_start + t_event);
            return Ok(StrideOutcome {
                trajectory,
                post_impact: Some(post),
            });
        }

        let now = unpack(&step.y1, foot);
        if !now.is_upright() {
            samples.push(record(step.t1(), &step.y1)?);
            return Ok(ended(samples, Termination::Fell));
        }
        if step.t1() >= t_end {
            if samples.last().is_some_and(|s| s.t < t_start + step.t1()) {
                samples.push(record(step.t1(), &step.y1)?);
            }
            return Ok(ended(samples, Termination::TimedOut));
        }
    }
}

fn ended(samples: Vec<Sample>, termination: Termination) -> StrideOutcome {
    StrideOutcome {
        trajectory: finish(samples, termination),
        post_impact: None,
    }
}

fn finish(samples: Vec<Sample>, termination: Termination) -> Trajectory {
    Trajectory {
        samples,
        events: vec![],
        termination,
    }
}

/// Finds a guard crossing from negative to non-negative inside `step` with the
/// swing tip descending. The crossing is bracketed with the step's own
/// endpoints and refined by re-integrating partial steps from the step start,
/// so the returned state carries full integrator accuracy.
fn locate_touchdown<F>(stepper: &mut Stepper<DIM, F>, step: &Step<DIM>, event_tol: f64) -> Option<(f64, [f64; DIM])>
where
    F: FnMut(f64, &[f64; DIM]) -> [f64; DIM],
{
    let guard = |y: &[f64; DIM]| 2.0 * y[0] - y[1];
    let (g0, g1) = (guard(&step.y0), guard(&step.y1));
    if !(g0 < 0.0 && g1 >= 0.0) {
        return None;
    }

    // Illinois regula falsi on the partial-step map τ ↦ guard(y(t0 + τ)).
    let (mut a, mut fa) = (0.0, g0);
    let (mut b, mut fb) = (step.h, g1);
    let mut y_best = step.y1;
    let mut tau = b;
    if fb.abs() > event_tol {
        let mut side = 0i8;
        for _ in 0..200 {
            tau = (a * fb - b * fa) / (fb - fa);
            if !(tau > a && tau < b) {
                tau = 0.5 * (a + b);
            }
            let y = stepper.restep(step, tau);
            let g = guard(&y);
            y_best = y;
            if g.abs() <= event_tol || (b - a) < 1e-15 * step.t1().max(1.0) {
                break;
            }
            if g < 0.0 {
                a = tau;
                fa = g;
                if side == -1 {
                    fb *= 0.5;
                }
                side = -1;
            } else {
                b = tau;
                fb = g;
                if side == 1 {
                    fa *= 0.5;
                }
                side = 1;
            }
        }
    }

    let t_event = step.t0 + tau;
    if t_event < LIFTOFF_WINDOW {
        return None;
    }
    let s = unpack(&y_best, 0.0);
    if s.swing_tip_vertical_velocity() >= 0.0 {
        // guard reached with the tip rising: the foot is passing the mirrored
        // posture on its way forward, not landing
        return None;
    }
    Some((t_event, y_best))
}

/// Chains strides, stopping early at the first stride that does not complete.
pub fn simulate_n_strides(
    initial: &HybridState,
    n: usize,
    params: &ModelParams,
    config: &SimConfig,
) -> Result<Vec<Trajectory>> {
    let mut out = Vec::with_capacity(n);
    let mut state = *initial;
    let mut t = 0.0;
    for _ in 0..n {
        let outcome = simulate_stride_from(&state, t, params, config)?;
        t = outcome.trajectory.samples.last().map_or(t, |s| s.t);
        out.push(outcome.trajectory);
        match outcome.post_impact {
            Some(next) => state = next,
            None => break,
        }
    }
    Ok(out)
}
