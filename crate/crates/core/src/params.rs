//! Dimensionless model parameters.
//!
//! Lengths are scaled by the leg length `L`, time by `sqrt(L/g)` and masses by
//! the upper-body mass `M`, so gravity is 1 and the hip sits at height
//! `cos(theta1)`. The spring constant is `k = K L / (M g)`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WalkerError};

/// Which mechanical model is being simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BodyKind {
    /// Three degrees of freedom: stance angle, inter-leg angle, wobble offset.
    #[default]
    Wobbling,
    /// Classical two-degree-of-freedom compass gait; the whole upper-body
    /// mass sits at the hip and the wobble coordinate is frozen at zero.
    Compass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    pub body: BodyKind,
    /// Spring constant supporting the wobbling mass.
    pub k: f64,
    /// Wobbling fraction of the upper-body mass.
    pub alpha: f64,
    /// Mass of each leg tip relative to the upper body.
    pub mu: f64,
    /// CPG amplitude (rad).
    pub gamma: f64,
    /// Stride angle (rad).
    pub stride_angle: f64,
    /// CPG phase velocity.
    pub omega: f64,
    pub kp: f64,
    pub kd: f64,
    /// Reset the oscillator phase at every touchdown.
    pub phase_reset: bool,
    /// Phase assigned at touchdown when `phase_reset` is on.
    pub reset_phase: f64,
}

/// Touchdown phase of the reference oscillator. With the phase reset to π
/// the k = 0.5 cycle is unstable; a slightly later reset makes it stable
/// without moving the band structure.
pub const DEFAULT_RESET_PHASE: f64 = 3.4;

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            body: BodyKind::Wobbling,
            k: 6.0,
            alpha: 0.25,
            mu: 0.1,
            gamma: 0.3,
            stride_angle: 0.3,
            omega: 3.0,
            kp: 10.0,
            kd: 1.0,
            phase_reset: true,
            reset_phase: DEFAULT_RESET_PHASE,
        }
    }
}

impl ModelParams {
    /// Same controller and leg masses, with the wobbling mass removed.
    pub fn compass(&self) -> Self {
        Self {
            body: BodyKind::Compass,
            alpha: 0.0,
            ..*self
        }
    }

    pub fn with_k_alpha_omega(&self, k: f64, alpha: f64, omega: f64) -> Self {
        Self {
            k,
            alpha,
            omega,
            ..*self
        }
    }

    pub fn is_compass(&self) -> bool {
        self.body == BodyKind::Compass
    }

    /// Hip point mass `m1 / M`.
    pub fn hip_mass(&self) -> f64 {
        match self.body {
            BodyKind::Wobbling => 1.0 - self.alpha,
            BodyKind::Compass => 1.0,
        }
    }

    /// Wobbling point mass `m3 / M`.
    pub fn wobble_mass(&self) -> f64 {
        match self.body {
            BodyKind::Wobbling => self.alpha,
            BodyKind::Compass => 0.0,
        }
    }

    /// `M + 2 m2` in units of `M`.
    pub fn total_mass(&self) -> f64 {
        1.0 + 2.0 * self.mu
    }

    pub fn validate(&self) -> Result<()> {
        fn bad(name: &'static str, reason: &str) -> Result<()> {
            Err(WalkerError::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        }
        let all = [
            self.k,
            self.alpha,
            self.mu,
            self.gamma,
            self.stride_angle,
            self.omega,
            self.kp,
            self.kd,
            self.reset_phase,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("params", "all values must be finite");
        }
        if self.body == BodyKind::Wobbling {
            if !(self.alpha > 0.0 && self.alpha < 1.0) {
                return bad("alpha", "must lie in (0, 1)");
            }
            if self.k <= 0.0 {
                return bad("k", "must be positive");
            }
        }
        if self.mu < 0.0 {
            return bad("mu", "must be non-negative");
        }
        if self.omega <= 0.0 {
            return bad("omega", "must be positive");
        }
        if self.kp < 0.0 || self.kd < 0.0 {
            return bad("kp/kd", "gains must be non-negative");
        }
        Ok(())
    }
}
