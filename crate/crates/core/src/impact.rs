//! Touchdown: instantaneous leg exchange with a perfectly plastic contact at
//! the new stance tip.
//!
//! Post-impact velocities solve three linear conditions:
//! whole-body angular momentum about the new contact is conserved, the
//! trailing leg tip's angular momentum about the hip is conserved (it was
//! stationary, so it is zero afterwards), and the wobbling mass keeps its
//! absolute horizontal velocity because its slider constraint can only push
//! vertically.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use crate::error::{Result, WalkerError};
use crate::model::{angular_momentum_about, kinematics, total_energy};
use crate::params::ModelParams;
use crate::state::HybridState;

/// Guard residual accepted by [`impact_map`].
pub const IMPACT_GUARD_TOL: f64 = 1e-8;

pub fn impact_map(pre: &HybridState, params: &ModelParams) -> Result<HybridState> {
    impact_map_with_tol(pre, params, IMPACT_GUARD_TOL)
}

pub fn impact_map_with_tol(pre: &HybridState, params: &ModelParams, guard_tol: f64) -> Result<HybridState> {
    if pre.guard().abs() > guard_tol {
        return Err(WalkerError::InvalidEvent(format!(
            "guard 2θ1 − θ2 = {:.3e} exceeds tolerance {:.1e}",
            pre.guard(),
            guard_tol
        )));
    }
    let tip_rate = pre.swing_tip_vertical_velocity();
    if tip_rate > 1e-12 {
        return Err(WalkerError::InvalidEvent(format!(
            "swing tip rising at touchdown (ẏ = {tip_rate:.3e})"
        )));
    }

    let pre_kin = kinematics(pre, params, None);
    let contact = pre_kin.swing_tip.pos;
    let momentum = angular_momentum_about(pre, params, contact);
    let wobble_vx = pre_kin.wobble.vel.x;

    let mut post = HybridState {
        theta1: pre.theta1 - pre.theta2,
        theta2: -pre.theta2,
        x: pre.x,
        dtheta1: 0.0,
        dtheta2: 0.0,
        dx: 0.0,
        phi: if params.phase_reset {
            params.reset_phase
        } else {
            pre.phi
        },
        stance_foot_x: pre.stance_foot_x + contact.x,
    };

    // Each condition is linear in the post-impact rates; build its row by
    // probing with unit rates.
    let conditions = |rates: Vector3<f64>| -> Vector3<f64> {
        let probe = HybridState {
            dtheta1: rates[0],
            dtheta2: rates[1],
            dx: rates[2],
            ..post
        };
        let kin = kinematics(&probe, params, None);
        let rel = kin.swing_tip.pos - kin.hip.pos;
        Vector3::new(
            angular_momentum_about(&probe, params, Vector2::zeros()),
            rel.x * kin.swing_tip.vel.y - rel.y * kin.swing_tip.vel.x,
            kin.wobble.vel.x,
        )
    };
    let cols: Vec<Vector3<f64>> = (0..3).map(|j| conditions(Vector3::ith(j, 1.0))).collect();

    if params.is_compass() {
        let a = Matrix2::new(cols[0][0], cols[1][0], cols[0][1], cols[1][1]);
        let rates = a
            .lu()
            .solve(&Vector2::new(momentum, 0.0))
            .ok_or(WalkerError::SingularInertia)?;
        post.dtheta1 = rates[0];
        post.dtheta2 = rates[1];
    } else {
        let a = Matrix3::from_columns(&cols);
        let rates = a
            .lu()
            .solve(&Vector3::new(momentum, 0.0, wobble_vx))
            .ok_or(WalkerError::SingularInertia)?;
        post.dtheta1 = rates[0];
        post.dtheta2 = rates[1];
        post.dx = rates[2];
    }

    let before = total_energy(pre, params).0;
    let after = total_energy(&post, params).0;
    if after > before + 1e-12 * before.max(1.0) {
        return Err(WalkerError::NonDissipativeImpact { before, after });
    }
    Ok(post)
}
