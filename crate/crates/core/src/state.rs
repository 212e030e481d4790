use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// Continuous walker state plus oscillator phase and contact bookkeeping.
///
/// `theta1` is the stance-leg angle from vertical (positive with the hip ahead
/// of the stance foot), `theta2` the inter-leg angle, so the swing leg's
/// absolute angle is `theta1 - theta2`. `x` is the wobbling mass offset from
/// the hip, positive forward.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HybridState {
    pub theta1: f64,
    pub theta2: f64,
    pub x: f64,
    pub dtheta1: f64,
    pub dtheta2: f64,
    pub dx: f64,
    pub phi: f64,
    pub stance_foot_x: f64,
}

impl HybridState {
    pub fn from_q(q: Vector3<f64>, dq: Vector3<f64>, phi: f64) -> Self {
        Self {
            theta1: q[0],
            theta2: q[1],
            x: q[2],
            dtheta1: dq[0],
            dtheta2: dq[1],
            dx: dq[2],
            phi,
            stance_foot_x: 0.0,
        }
    }

    pub fn q(&self) -> Vector3<f64> {
        Vector3::new(self.theta1, self.theta2, self.x)
    }

    pub fn dq(&self) -> Vector3<f64> {
        Vector3::new(self.dtheta1, self.dtheta2, self.dx)
    }

    /// Touchdown guard `2 theta1 - theta2`; zero when the swing tip is on the
    /// ground in the mirrored leg posture.
    pub fn guard(&self) -> f64 {
        2.0 * self.theta1 - self.theta2
    }

    /// Hip height above the ground.
    pub fn hip_height(&self) -> f64 {
        self.theta1.cos()
    }

    pub fn is_upright(&self) -> bool {
        self.theta1.cos() > 0.0 && self.theta1.abs() < std::f64::consts::FRAC_PI_2
    }

    pub fn swing_angle(&self) -> f64 {
        self.theta1 - self.theta2
    }

    pub fn swing_tip_height(&self) -> f64 {
        self.theta1.cos() - self.swing_angle().cos()
    }

    pub fn swing_tip_vertical_velocity(&self) -> f64 {
        let psi = self.swing_angle();
        -self.theta1.sin() * self.dtheta1 + psi.sin() * (self.dtheta1 - self.dtheta2)
    }

    pub(crate) fn to_array(self) -> [f64; 7] {
        [
            self.theta1,
            self.theta2,
            self.x,
            self.dtheta1,
            self.dtheta2,
            self.dx,
            self.phi,
        ]
    }

    pub(crate) fn from_slice(y: &[f64], stance_foot_x: f64) -> Self {
        Self {
            theta1: y[0],
            theta2: y[1],
            x: y[2],
            dtheta1: y[3],
            dtheta2: y[4],
            dx: y[5],
            phi: y[6],
            stance_foot_x,
        }
    }
}
