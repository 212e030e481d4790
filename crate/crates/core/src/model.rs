//! Swing-phase mechanics: geometry, Lagrangian equations of motion, the CPG
//! control law and energies.
//!
//! The stance foot sits at the origin. Point masses: `1 - alpha` at the hip,
//! `alpha` on the wobbling slider (at hip height, offset `x`), `mu` at each
//! leg tip. The kinetic energy is
//!
//! ```text
//! T = ½(1-α)θ̇1² + ½μ|v_tip|² + ½α[(θ̇1 cos θ1 + ẋ)² + (θ̇1 sin θ1)²]
//! V = cos θ1 + μ(cos θ1 − cos(θ1 − θ2)) + ½k x²
//! ```
//!
//! which yields the inertia matrix below; the velocity-product terms come from
//! its Christoffel symbols.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use crate::error::{Result, WalkerError};
use crate::params::ModelParams;
use crate::state::HybridState;

/// A material point's position, velocity and (optionally) acceleration in the
/// stance-foot frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PointMotion {
    pub pos: Vector2<f64>,
    pub vel: Vector2<f64>,
    pub acc: Vector2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyKinematics {
    pub hip: PointMotion,
    pub swing_tip: PointMotion,
    pub wobble: PointMotion,
    /// Whole-body centre of mass, stance tip and wobbling mass included.
    pub com: PointMotion,
}

fn unit(angle: f64) -> Vector2<f64> {
    Vector2::new(angle.sin(), angle.cos())
}

fn unit_rate(angle: f64) -> Vector2<f64> {
    Vector2::new(angle.cos(), -angle.sin())
}

/// Body-point kinematics in the stance-foot frame. Accelerations are filled
/// in when `ddq` is supplied and left at zero otherwise.
pub fn kinematics(state: &HybridState, params: &ModelParams, ddq: Option<&Vector3<f64>>) -> BodyKinematics {
    let (t1, dt1) = (state.theta1, state.dtheta1);
    let psi = state.swing_angle();
    let dpsi = state.dtheta1 - state.dtheta2;

    let mut hip = PointMotion {
        pos: unit(t1),
        vel: unit_rate(t1) * dt1,
        ..Default::default()
    };
    let mut swing_tip = PointMotion {
        pos: hip.pos - unit(psi),
        vel: hip.vel - unit_rate(psi) * dpsi,
        ..Default::default()
    };
    let mut wobble = PointMotion {
        pos: hip.pos + Vector2::new(state.x, 0.0),
        vel: hip.vel + Vector2::new(state.dx, 0.0),
        ..Default::default()
    };

    if let Some(a) = ddq {
        // d/dt of unit_rate(θ)θ̇ = unit_rate(θ)θ̈ − unit(θ)θ̇²
        let ddpsi = a[0] - a[1];
        hip.acc = unit_rate(t1) * a[0] - unit(t1) * dt1 * dt1;
        swing_tip.acc = hip.acc - (unit_rate(psi) * ddpsi - unit(psi) * dpsi * dpsi);
        wobble.acc = hip.acc + Vector2::new(a[2], 0.0);
    }

    let m_hip = params.hip_mass();
    let m_wob = params.wobble_mass();
    let m_tip = params.mu;
    let total = params.total_mass();
    // stance tip rests at the origin and contributes only to the denominator
    let com = PointMotion {
        pos: (hip.pos * m_hip + wobble.pos * m_wob + swing_tip.pos * m_tip) / total,
        vel: (hip.vel * m_hip + wobble.vel * m_wob + swing_tip.vel * m_tip) / total,
        acc: (hip.acc * m_hip + wobble.acc * m_wob + swing_tip.acc * m_tip) / total,
    };

    BodyKinematics {
        hip,
        swing_tip,
        wobble,
        com,
    }
}

/// Terms of `M(q) q̈ + h(q, q̇) + v(q) = Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsTerms {
    pub inertia: Matrix3<f64>,
    pub bias: Vector3<f64>,
    pub conservative: Vector3<f64>,
    pub input: Vector3<f64>,
}

pub fn inertia_matrix(q: &Vector3<f64>, params: &ModelParams) -> Matrix3<f64> {
    let mu = params.mu;
    let a = params.wobble_mass();
    let one_minus_c2 = 1.0 - q[1].cos();
    let c1 = q[0].cos();
    Matrix3::new(
        params.hip_mass() + a + 2.0 * mu * one_minus_c2,
        -mu * one_minus_c2,
        a * c1,
        -mu * one_minus_c2,
        mu,
        0.0,
        a * c1,
        0.0,
        a,
    )
}

/// `∂M/∂q_i` for i = theta1, theta2, x.
fn inertia_partials(q: &Vector3<f64>, params: &ModelParams) -> [Matrix3<f64>; 3] {
    let mu = params.mu;
    let a = params.wobble_mass();
    let s1 = q[0].sin();
    let s2 = q[1].sin();
    let mut d1 = Matrix3::zeros();
    d1[(0, 2)] = -a * s1;
    d1[(2, 0)] = -a * s1;
    let mut d2 = Matrix3::zeros();
    d2[(0, 0)] = 2.0 * mu * s2;
    d2[(0, 1)] = -mu * s2;
    d2[(1, 0)] = -mu * s2;
    [d1, d2, Matrix3::zeros()]
}

fn bias_terms(q: &Vector3<f64>, dq: &Vector3<f64>, params: &ModelParams) -> Vector3<f64> {
    let dm = inertia_partials(q, params);
    // h_i = Σ_jk (∂M_ij/∂q_k − ½ ∂M_jk/∂q_i) q̇_j q̇_k
    let mdot: Matrix3<f64> = dm[0] * dq[0] + dm[1] * dq[1] + dm[2] * dq[2];
    let mut h = mdot * dq;
    for (i, dmi) in dm.iter().enumerate() {
        h[i] -= 0.5 * dq.dot(&(dmi * dq));
    }
    h
}

fn conservative_terms(q: &Vector3<f64>, params: &ModelParams) -> Vector3<f64> {
    let (t1, t2) = (q[0], q[1]);
    let mu = params.mu;
    let spring = if params.is_compass() { 0.0 } else { params.k * q[2] };
    Vector3::new(
        -t1.sin() + mu * (-t1.sin() + (t1 - t2).sin()),
        -mu * (t1 - t2).sin(),
        spring,
    )
}

/// Desired inter-leg angle and its rate from the phase oscillator.
pub fn desired_interleg(phi: f64, params: &ModelParams) -> (f64, f64) {
    let angle = params.gamma * (1.0 + phi.cos()) - params.stride_angle;
    let rate = -params.gamma * params.omega * phi.sin();
    (angle, rate)
}

/// PD torque tracking the oscillator's desired inter-leg angle.
pub fn controller_torque(state: &HybridState, params: &ModelParams) -> f64 {
    let (target, target_rate) = desired_interleg(state.phi, params);
    -params.kp * (state.theta2 - target) - params.kd * (state.dtheta2 - target_rate)
}

pub fn dynamics_terms(state: &HybridState, params: &ModelParams) -> DynamicsTerms {
    let q = state.q();
    let dq = state.dq();
    DynamicsTerms {
        inertia: inertia_matrix(&q, params),
        bias: bias_terms(&q, &dq, params),
        conservative: conservative_terms(&q, params),
        input: Vector3::new(0.0, controller_torque(state, params), 0.0),
    }
}

impl DynamicsTerms {
    /// Solves for `q̈`. The compass model has no wobble coordinate, so only the
    /// upper-left 2×2 block is used and `ẍ` is returned as zero.
    pub fn accelerations(&self, params: &ModelParams) -> Result<Vector3<f64>> {
        let rhs = self.input - self.bias - self.conservative;
        if params.is_compass() {
            let m: Matrix2<f64> = self.inertia.fixed_view::<2, 2>(0, 0).into_owned();
            let a = m
                .cholesky()
                .ok_or(WalkerError::SingularInertia)?
                .solve(&Vector2::new(rhs[0], rhs[1]));
            Ok(Vector3::new(a[0], a[1], 0.0))
        } else {
            self.inertia
                .cholesky()
                .map(|c| c.solve(&rhs))
                .ok_or(WalkerError::SingularInertia)
        }
    }
}

/// Joint accelerations at `state` under the CPG controller.
pub fn accelerations(state: &HybridState, params: &ModelParams) -> Result<Vector3<f64>> {
    dynamics_terms(state, params).accelerations(params)
}

/// Kinetic and potential energy, normalised by `M g L`.
pub fn total_energy(state: &HybridState, params: &ModelParams) -> (f64, f64) {
    let q = state.q();
    let dq = state.dq();
    let kinetic = 0.5 * dq.dot(&(inertia_matrix(&q, params) * dq));
    let spring = if params.is_compass() {
        0.0
    } else {
        0.5 * params.k * state.x * state.x
    };
    let potential = state.theta1.cos() + params.mu * state.swing_tip_height() + spring;
    (kinetic, potential)
}

/// Angular momentum (z component) of all moving point masses about `pivot`,
/// with `pivot` given in the stance-foot frame.
pub fn angular_momentum_about(state: &HybridState, params: &ModelParams, pivot: Vector2<f64>) -> f64 {
    let kin = kinematics(state, params, None);
    let cross = |p: &PointMotion| {
        let r = p.pos - pivot;
        r.x * p.vel.y - r.y * p.vel.x
    };
    params.hip_mass() * cross(&kin.hip) + params.wobble_mass() * cross(&kin.wobble) + params.mu * cross(&kin.swing_tip)
}
