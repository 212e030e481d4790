//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Three operations are exposed: [`solve`] finds a periodic gait from a cold
//! start, [`compass`] does the same for the walker without the wobbling
//! mass, and [`Gait::walk`] replays a gait for several strides after a kick
//! so the page can animate it and show whether it recovers.

use wasm_bindgen::prelude::*;
use wobble_core::limit_cycle::ColdStart;
use wobble_core::metrics::{gait_metrics, GaitMetrics, WorkConvention};
use wobble_core::{
    cold_start, kinematics, simulate_n_strides, LimitCycle, ModelParams, NewtonConfig, SectionState, SimConfig,
};

/// Values per animation frame: `t, hip_x, hip_y, tip_x, tip_y, foot_x,
/// wobble_x, wobble_y`.
pub const FRAME_WIDTH: usize = 8;

const FRAME_DT: f64 = 0.02;

fn sim() -> SimConfig {
    SimConfig {
        sample_dt: FRAME_DT,
        ..SimConfig::default()
    }
}

#[wasm_bindgen]
pub struct Gait {
    cycle: LimitCycle,
    metrics: GaitMetrics,
}

pub fn solve_params(params: ModelParams) -> Result<Gait, String> {
    params.validate().map_err(|e| e.to_string())?;
    let config = sim();
    let cycle =
        cold_start(&params, &config, &NewtonConfig::default(), &ColdStart::default()).map_err(|e| e.to_string())?;
    let tr = cycle.trajectory(&config).map_err(|e| e.to_string())?;
    let metrics = gait_metrics(&tr, &params, WorkConvention::Absolute).map_err(|e| e.to_string())?;
    Ok(Gait { cycle, metrics })
}

pub fn solve_gait(k: f64, alpha: f64, omega: f64) -> Result<Gait, String> {
    solve_params(ModelParams::default().with_k_alpha_omega(k, alpha, omega))
}

pub fn compass_gait(omega: f64) -> Result<Gait, String> {
    let mut p = ModelParams::default().compass();
    p.omega = omega;
    solve_params(p)
}

/// Periodic gait at spring constant `k`, wobble mass ratio `alpha` and
/// oscillator frequency `omega`, other parameters at their defaults.
#[wasm_bindgen]
pub fn solve(k: f64, alpha: f64, omega: f64) -> Result<Gait, JsError> {
    solve_gait(k, alpha, omega).map_err(|e| JsError::new(&e))
}

/// The same controller on a walker without the wobbling mass.
#[wasm_bindgen]
pub fn compass(omega: f64) -> Result<Gait, JsError> {
    compass_gait(omega).map_err(|e| JsError::new(&e))
}

impl Gait {
    /// Frames for `strides` strides starting from the fixed point with
    /// `kick` added to the stance-leg rate, and the section distance from the
    /// fixed point at the start of each stride. Stops early on a fall.
    pub fn replay(&self, strides: usize, kick: f64) -> (Vec<f64>, Vec<f64>) {
        let p = &self.cycle.params;
        let mut z = self.cycle.fixed_point.clone();
        z.0[1] += kick;
        let runs = simulate_n_strides(&z.to_state(p), strides, p, &sim()).unwrap_or_default();
        let mut frames = Vec::new();
        let mut deviation = Vec::new();
        for tr in &runs {
            let mut start = tr.samples[0].state;
            start.stance_foot_x = 0.0;
            deviation.push((SectionState::from_state(&start, p).0 - &self.cycle.fixed_point.0).norm());
            for s in &tr.samples {
                let kin = kinematics(&s.state, p, None);
                let foot = s.state.stance_foot_x;
                frames.extend([
                    s.t,
                    foot + kin.hip.pos.x,
                    kin.hip.pos.y,
                    foot + kin.swing_tip.pos.x,
                    kin.swing_tip.pos.y,
                    foot,
                    foot + kin.wobble.pos.x,
                    kin.wobble.pos.y,
                ]);
            }
        }
        (frames, deviation)
    }
}

#[wasm_bindgen]
impl Gait {
    #[wasm_bindgen(getter)]
    pub fn stable(&self) -> bool {
        self.cycle.stable
    }

    #[wasm_bindgen(getter, js_name = maxMultiplier)]
    pub fn max_multiplier(&self) -> f64 {
        self.cycle.max_multiplier()
    }

    #[wasm_bindgen(getter)]
    pub fn period(&self) -> f64 {
        self.cycle.period
    }

    #[wasm_bindgen(getter)]
    pub fn group(&self) -> String {
        if self.cycle.params.is_compass() {
            "compass".into()
        } else {
            self.metrics.group().to_string()
        }
    }

    #[wasm_bindgen(getter, js_name = dMax)]
    pub fn d_max(&self) -> f64 {
        self.metrics.d_max
    }

    #[wasm_bindgen(getter)]
    pub fn cot(&self) -> f64 {
        self.metrics.cot
    }

    #[wasm_bindgen(getter, js_name = xPeak)]
    pub fn x_peak(&self) -> f64 {
        self.metrics.x_peak
    }

    #[wasm_bindgen(getter, js_name = dtheta1Peaks)]
    pub fn dtheta1_peaks(&self) -> usize {
        self.metrics.classification.dtheta1_peaks
    }

    /// ZMP distance over one stride as interleaved `(t/T, d)` pairs.
    #[wasm_bindgen(js_name = dProfile)]
    pub fn d_profile(&self) -> Vec<f64> {
        let t0 = self.metrics.d_profile.first().map_or(0.0, |p| p.0);
        self.metrics
            .d_profile
            .iter()
            .flat_map(|(t, d)| [(t - t0) / self.cycle.period, *d])
            .collect()
    }

    /// Animation frames, [`FRAME_WIDTH`] values each.
    pub fn walk(&self, strides: usize, kick: f64) -> Vec<f64> {
        self.replay(strides, kick).0
    }

    /// Distance from the fixed point at the start of each replayed stride.
    pub fn recovery(&self, strides: usize, kick: f64) -> Vec<f64> {
        self.replay(strides, kick).1
    }
}
