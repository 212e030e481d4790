//! Gait quality measures over one stride: zero-moment-point excursion, cost
//! of transport, and the wobble-based gait family.

use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WalkerError};
use crate::model::kinematics;
use crate::params::ModelParams;
use crate::sim::Trajectory;
use crate::state::HybridState;

/// ZMP horizontal position in the stance-foot frame:
/// `p = x_g − ẍ_g y_g / (1 + ÿ_g)` (gravity is 1 in these units).
/// Returns `(p, 1 + ÿ_g)`.
pub fn zmp_point(state: &HybridState, ddq: &Vector3<f64>, params: &ModelParams) -> (f64, f64) {
    let com = kinematics(state, params, Some(ddq)).com;
    let denom = 1.0 + com.acc.y;
    (com.pos.x - com.acc.x * com.pos.y / denom, denom)
}

/// Smallest `1 + ÿ_g` accepted before the ZMP is considered undefined.
pub const FREE_FALL_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct ZmpProfile {
    /// `(t, d)` with `d` the signed distance from the stance toe, positive
    /// forward.
    pub profile: Vec<(f64, f64)>,
    /// `max |d|`.
    pub d_max: f64,
    pub d_upper: f64,
    pub d_lower: f64,
}

pub fn zmp_distance(trajectory: &Trajectory, params: &ModelParams) -> Result<ZmpProfile> {
    let mut profile = Vec::with_capacity(trajectory.samples.len());
    for s in &trajectory.samples {
        let (p, denom) = zmp_point(&s.state, &s.ddq, params);
        if denom < FREE_FALL_LIMIT {
            return Err(WalkerError::FreeFall(denom, s.t));
        }
        profile.push((s.t, p));
    }
    let d_upper = profile.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let d_lower = profile.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    Ok(ZmpProfile {
        profile,
        d_max: d_upper.abs().max(d_lower.abs()),
        d_upper,
        d_lower,
    })
}

/// Which actuator work enters the cost of transport.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WorkConvention {
    /// `∫ |u θ̇2| dt`
    #[default]
    Absolute,
    /// `∫ max(u θ̇2, 0) dt`
    PositiveOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostOfTransport {
    pub cot: f64,
    pub mean_speed: f64,
    pub work: f64,
}

/// `CoT = W / (m v̄)` with `W` the hip actuator work over the stride, `m` the
/// total mass and `v̄` the mean forward COM speed.
pub fn cost_of_transport(
    trajectory: &Trajectory,
    params: &ModelParams,
    convention: WorkConvention,
) -> Result<CostOfTransport> {
    let (first, last) = match (trajectory.samples.first(), trajectory.samples.last()) {
        (Some(a), Some(b)) if b.t > a.t => (a, b),
        _ => return Err(WalkerError::ZeroSpeed),
    };
    let x0 = kinematics(&first.state, params, None).com.pos.x + first.state.stance_foot_x;
    let x1 = kinematics(&last.state, params, None).com.pos.x + last.state.stance_foot_x;
    let mean_speed = (x1 - x0) / (last.t - first.t);
    if mean_speed.is_nan() || mean_speed <= 0.0 {
        return Err(WalkerError::ZeroSpeed);
    }
    let work = match convention {
        WorkConvention::Absolute => last.abs_work - first.abs_work,
        WorkConvention::PositiveOnly => last.pos_work - first.pos_work,
    };
    Ok(CostOfTransport {
        cot: work / (params.total_mass() * mean_speed),
        mean_speed,
        work,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Group {
    A,
    B,
    C,
    D,
    E,
    Other(usize),
}

impl Group {
    /// Number of `θ̇1` peaks per cycle that goes with this family.
    pub fn expected_peaks(self) -> Option<usize> {
        match self {
            Group::A => Some(1),
            Group::B => Some(2),
            Group::C => Some(3),
            Group::D => Some(4),
            Group::E => Some(5),
            Group::Other(_) => None,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::A => f.write_str("A"),
            Group::B => f.write_str("B"),
            Group::C => f.write_str("C"),
            Group::D => f.write_str("D"),
            Group::E => f.write_str("E"),
            Group::Other(n) => write!(f, "other{n}"),
        }
    }
}

impl std::str::FromStr for Group {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "A" => Ok(Group::A),
            "B" => Ok(Group::B),
            "C" => Ok(Group::C),
            "D" => Ok(Group::D),
            "E" => Ok(Group::E),
            _ => s
                .strip_prefix("other")
                .and_then(|n| n.parse().ok())
                .map(Group::Other)
                .ok_or_else(|| format!("unknown group `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub group: Group,
    pub x_oscillations: usize,
    pub dtheta1_peaks: usize,
    /// Mean `ẋ` over the first quarter of the stride.
    pub early_dx: f64,
    /// Whether the peak count agrees with the wobble count; a mismatch is
    /// reported rather than resolved.
    pub consistent: bool,
}

pub const DX_HYSTERESIS: f64 = 1e-6;
pub const PEAK_PROMINENCE: f64 = 1e-4;
/// Fraction of the stride that counts as early stance.
pub const EARLY_WINDOW: f64 = 0.25;

/// Sign changes of a periodic signal, ignoring values inside `±band`.
pub fn cyclic_sign_changes(values: &[f64], band: f64) -> usize {
    let signs: Vec<bool> = values.iter().filter(|v| v.abs() > band).map(|v| *v > 0.0).collect();
    if signs.len() < 2 {
        return 0;
    }
    let inner = signs.windows(2).filter(|w| w[0] != w[1]).count();
    inner + usize::from(signs[0] != signs[signs.len() - 1])
}

/// Strict local maxima of a periodic sequence whose topographic prominence is
/// at least `min_prominence`.
pub fn cyclic_peaks(values: &[f64], min_prominence: f64) -> usize {
    let n = values.len();
    if n < 3 {
        return 0;
    }
    let at = |i: isize| values[i.rem_euclid(n as isize) as usize];
    let mut count = 0;
    for i in 0..n as isize {
        let v = at(i);
        if !(v > at(i - 1) && v > at(i + 1)) {
            continue;
        }
        let walk = |dir: isize| {
            let mut lowest = v;
            for step in 1..n as isize {
                let w = at(i + dir * step);
                if w > v {
                    return lowest;
                }
                lowest = lowest.min(w);
            }
            lowest
        };
        let base = walk(-1).max(walk(1));
        if v - base >= min_prominence {
            count += 1;
        }
    }
    count
}

/// Assigns the gait family from the number of wobble oscillations per stride;
/// single-oscillation gaits split by the sign of early-stance `ẋ`.
pub fn classify_group(trajectory: &Trajectory) -> Classification {
    let dx: Vec<f64> = trajectory.samples.iter().map(|s| s.state.dx).collect();
    let dtheta1: Vec<f64> = trajectory.samples.iter().map(|s| s.state.dtheta1).collect();
    let x_oscillations = (cyclic_sign_changes(&dx, DX_HYSTERESIS) as f64 / 2.0).round() as usize;
    let dtheta1_peaks = cyclic_peaks(&dtheta1, PEAK_PROMINENCE);

    let t0 = trajectory.start_time();
    let window = EARLY_WINDOW * trajectory.duration();
    let early: Vec<f64> = trajectory
        .samples
        .iter()
        .filter(|s| s.t - t0 <= window)
        .map(|s| s.state.dx)
        .collect();
    let early_dx = if early.is_empty() {
        0.0
    } else {
        early.iter().sum::<f64>() / early.len() as f64
    };

    let group = match x_oscillations {
        1 if early_dx < 0.0 => Group::A,
        1 => Group::B,
        2 => Group::C,
        3 => Group::D,
        4 => Group::E,
        n => Group::Other(n),
    };
    let consistent = group.expected_peaks().is_none_or(|p| p == dtheta1_peaks);
    Classification {
        group,
        x_oscillations,
        dtheta1_peaks,
        early_dx,
        consistent,
    }
}

/// Everything reported about one periodic gait.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitMetrics {
    pub d_max: f64,
    pub d_upper: f64,
    pub d_lower: f64,
    pub d_profile: Vec<(f64, f64)>,
    pub cot: f64,
    pub mean_speed: f64,
    pub work: f64,
    pub classification: Classification,
    /// Peak `|x|` over the stride.
    pub x_peak: f64,
}

impl GaitMetrics {
    pub fn group(&self) -> Group {
        self.classification.group
    }
}

pub fn gait_metrics(trajectory: &Trajectory, params: &ModelParams, convention: WorkConvention) -> Result<GaitMetrics> {
    let zmp = zmp_distance(trajectory, params)?;
    let cot = cost_of_transport(trajectory, params, convention)?;
    let x_peak = trajectory.samples.iter().map(|s| s.state.x.abs()).fold(0.0, f64::max);
    Ok(GaitMetrics {
        d_max: zmp.d_max,
        d_upper: zmp.d_upper,
        d_lower: zmp.d_lower,
        d_profile: zmp.profile,
        cot: cot.cot,
        mean_speed: cot.mean_speed,
        work: cot.work,
        classification: classify_group(trajectory),
        x_peak,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{Sample, Termination};

    fn synthetic(dx: impl Fn(f64) -> f64, dtheta1: impl Fn(f64) -> f64, period: f64, n: usize) -> Trajectory {
        let samples = (0..=n)
            .map(|i| {
                let t = period * i as f64 / n as f64;
                Sample {
                    t,
                    state: HybridState {
                        dx: dx(t),
                        dtheta1: dtheta1(t),
                        ..Default::default()
                    },
                    torque: 0.0,
                    ddq: Vector3::zeros(),
                    work: 0.0,
                    abs_work: 0.0,
                    pos_work: 0.0,
                }
            })
            .collect();
        Trajectory {
            samples,
            events: vec![period],
            termination: Termination::CompletedStride,
        }
    }

    #[test]
    fn static_standing_zmp_under_com() {
        let p = ModelParams::default();
        let (zmp, denom) = zmp_point(&HybridState::default(), &Vector3::zeros(), &p);
        assert_eq!(zmp, 0.0);
        assert_eq!(denom, 1.0);
    }

    #[test]
    fn two_wobble_oscillations_from_constructed_signal() {
        let period = 1.3;
        let eps = 0.01;
        // x = ε sin(4πt/T) → ẋ = ε(4π/T) cos(4πt/T)
        let w = 4.0 * std::f64::consts::PI / period;
        let tr = synthetic(|t| eps * w * (w * t).cos(), |_| 0.0, period, 1000);
        let c = classify_group(&tr);
        assert_eq!(c.x_oscillations, 2);
        assert_eq!(c.group, Group::C);
    }

    #[test]
    fn early_wobble_direction_splits_a_and_b() {
        let period = 1.0;
        let w = 2.0 * std::f64::consts::PI / period;
        let a = classify_group(&synthetic(|t| -(w * t).sin(), |_| 0.0, period, 500));
        let b = classify_group(&synthetic(|t| (w * t).sin(), |_| 0.0, period, 500));
        assert_eq!(a.group, Group::A);
        assert_eq!(b.group, Group::B);
    }

    #[test]
    fn cyclic_peak_at_the_seam_counts_once() {
        // rising ramp that drops back at the wrap: one peak at the end
        let v: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        assert_eq!(cyclic_peaks(&v, 1e-4), 1);
        // two bumps
        let v: Vec<f64> = (0..200)
            .map(|i| (4.0 * std::f64::consts::PI * i as f64 / 200.0).sin())
            .collect();
        assert_eq!(cyclic_peaks(&v, 1e-4), 2);
        // tiny ripple below prominence is ignored
        let v: Vec<f64> = (0..200)
            .map(|i| {
                let s = 2.0 * std::f64::consts::PI * i as f64 / 200.0;
                s.sin() + 1e-6 * (40.0 * s).sin()
            })
            .collect();
        assert_eq!(cyclic_peaks(&v, 1e-4), 1);
    }

    #[test]
    fn hysteresis_band_suppresses_noise() {
        let v = [1.0, 1e-8, -1e-8, 1e-8, 1.0, -1.0];
        assert_eq!(cyclic_sign_changes(&v, 1e-6), 2);
    }

    #[test]
    fn zero_torque_gives_zero_cost() {
        let p = ModelParams::default();
        let mut tr = synthetic(|_| 0.0, |_| 0.5, 1.0, 10);
        for (i, s) in tr.samples.iter_mut().enumerate() {
            s.state.theta1 = -0.1 + 0.02 * i as f64;
            s.state.theta2 = 2.0 * s.state.theta1;
        }
        let c = cost_of_transport(&tr, &p, WorkConvention::Absolute).unwrap();
        assert_eq!(c.cot, 0.0);
        assert!(c.mean_speed > 0.0);
    }

    #[test]
    fn backward_stride_is_rejected() {
        let p = ModelParams::default();
        let mut tr = synthetic(|_| 0.0, |_| 0.0, 1.0, 10);
        for (i, s) in tr.samples.iter_mut().enumerate() {
            s.state.theta1 = 0.1 - 0.02 * i as f64;
        }
        assert!(matches!(
            cost_of_transport(&tr, &p, WorkConvention::Absolute),
            Err(WalkerError::ZeroSpeed)
        ));
    }
}
