//! Plot-ready delimited text for the figure datasets.
//!
//! `fig2`, `fig5`, `fig6` and `fig8` are tables over the sweep records; the
//! time-profile figures `fig3`, `fig4` and `fig7` re-simulate the stored
//! fixed points of the named solutions over one stride, with time
//! normalised to `[0, 1]`.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Result, WalkerError};
use crate::limit_cycle::{poincare_stride, SectionState};
use crate::metrics::zmp_distance;
use crate::params::ModelParams;
use crate::sim::{SimConfig, Trajectory};
use crate::sweep::SweepRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
}

impl FromStr for Figure {
    type Err = WalkerError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fig2" => Self::Fig2,
            "fig3" => Self::Fig3,
            "fig4" => Self::Fig4,
            "fig5" => Self::Fig5,
            "fig6" => Self::Fig6,
            "fig7" => Self::Fig7,
            "fig8" => Self::Fig8,
            other => {
                return Err(WalkerError::InvalidParameter {
                    name: "figure",
                    reason: format!("unknown figure id {other:?}"),
                })
            }
        })
    }
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Self::Fig2 => "fig2",
            Self::Fig3 => "fig3",
            Self::Fig4 => "fig4",
            Self::Fig5 => "fig5",
            Self::Fig6 => "fig6",
            Self::Fig7 => "fig7",
            Self::Fig8 => "fig8",
        }
    }

    pub fn header(self) -> &'static str {
        match self {
            Self::Fig2 => "omega,alpha,k,status,group",
            Self::Fig3 => "solution,omega,alpha,k,t_norm,theta1,theta2,x,dtheta1,dtheta2,dx,u",
            Self::Fig4 => "omega,t_norm,theta1,theta2,dtheta1,dtheta2,u",
            Self::Fig5 => "omega,alpha,k,group,status,max_lambda,baseline",
            Self::Fig6 => "omega,alpha,k,group,status,d_max,d_upper,d_lower,baseline",
            Self::Fig7 => "solution,omega,alpha,k,t_norm,d",
            Self::Fig8 => "omega,alpha,k,group,status,cot,baseline",
        }
    }
}

/// `(label, k, α, ω)` of the representative solutions of the first three
/// gait families.
pub const NAMED_SOLUTIONS: [(&str, f64, f64, f64); 3] =
    [("a", 0.5, 0.25, 3.0), ("b", 6.0, 0.25, 3.0), ("c", 22.5, 0.25, 3.0)];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn status(r: &SweepRecord) -> &'static str {
    match r.status {
        crate::sweep::SolveStatus::Stable => "stable",
        crate::sweep::SolveStatus::Unstable => "unstable",
        crate::sweep::SolveStatus::None => "none",
    }
}

fn baseline_for(baseline: &[SweepRecord], omega: f64, f: impl Fn(&SweepRecord) -> Option<f64>) -> String {
    baseline
        .iter()
        .filter(|b| b.solved())
        .min_by(|a, b| (a.omega - omega).abs().total_cmp(&(b.omega - omega).abs()))
        .filter(|b| (b.omega - omega).abs() < 1e-9)
        .and_then(f)
        .map(|x| x.to_string())
        .unwrap_or_default()
}

/// Solved record closest to `(k, α, ω)`, preferring an exact `ω` match.
pub fn nearest_solved(records: &[SweepRecord], k: f64, alpha: f64, omega: f64) -> Option<&SweepRecord> {
    records.iter().filter(|r| r.solved()).min_by(|a, b| {
        let da = (
            (a.omega - omega).abs(),
            (a.k - k).abs() / k.max(1.0) + (a.alpha - alpha).abs(),
        );
        let db = (
            (b.omega - omega).abs(),
            (b.k - k).abs() / k.max(1.0) + (b.alpha - alpha).abs(),
        );
        da.0.total_cmp(&db.0).then(da.1.total_cmp(&db.1))
    })
}

/// Re-simulates a stored fixed point for one stride.
pub fn record_trajectory(record: &SweepRecord, base: &ModelParams, sim: &SimConfig) -> Result<Trajectory> {
    let mut params = base.with_k_alpha_omega(record.k, record.alpha, record.omega);
    if record.z_x.is_none() {
        params = params.compass();
        params.omega = record.omega;
    }
    let coords = record.section_coords().ok_or(WalkerError::InvalidParameter {
        name: "record",
        reason: "no fixed point stored".into(),
    })?;
    let z = SectionState::new(coords, &params)?;
    poincare_stride(&z, &params, sim).map(|(_, t)| t)
}

/// Builds the dataset for `figure`. `baseline` holds compass records (one per
/// `ω`); `base` supplies the parameters not stored in the records.
pub fn emit_plot(
    figure: Figure,
    records: &[SweepRecord],
    baseline: &[SweepRecord],
    base: &ModelParams,
    sim: &SimConfig,
) -> Result<String> {
    let mut out = String::new();
    out.push_str(figure.header());
    out.push('\n');
    match figure {
        Figure::Fig2 => {
            for r in records {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.omega,
                    r.alpha,
                    r.k,
                    status(r),
                    r.group.as_deref().unwrap_or("")
                );
            }
        }
        Figure::Fig5 | Figure::Fig6 | Figure::Fig8 => {
            for r in records.iter().filter(|r| r.solved()) {
                let group = r.group.as_deref().unwrap_or("");
                let _ = match figure {
                    Figure::Fig5 => writeln!(
                        out,
                        "{},{},{},{group},{},{},{}",
                        r.omega,
                        r.alpha,
                        r.k,
                        status(r),
                        opt(r.max_lambda),
                        baseline_for(baseline, r.omega, |b| b.max_lambda)
                    ),
                    Figure::Fig6 => writeln!(
                        out,
                        "{},{},{},{group},{},{},{},{},{}",
                        r.omega,
                        r.alpha,
                        r.k,
                        status(r),
                        opt(r.d_max),
                        opt(r.d_upper),
                        opt(r.d_lower),
                        baseline_for(baseline, r.omega, |b| b.d_max)
                    ),
                    _ => writeln!(
                        out,
                        "{},{},{},{group},{},{},{}",
                        r.omega,
                        r.alpha,
                        r.k,
                        status(r),
                        opt(r.cot),
                        baseline_for(baseline, r.omega, |b| b.cot)
                    ),
                };
            }
        }
        Figure::Fig3 | Figure::Fig7 => {
            if records.iter().any(|r| r.solved()) {
                for (label, k, alpha, omega) in NAMED_SOLUTIONS {
                    let Some(r) = nearest_solved(records, k, alpha, omega) else {
                        continue;
                    };
                    let tr = record_trajectory(r, base, sim)?;
                    let t0 = tr.start_time();
                    let period = tr.duration();
                    let prefix = format!("{label},{},{},{}", r.omega, r.alpha, r.k);
                    if figure == Figure::Fig3 {
                        for s in &tr.samples {
                            let st = &s.state;
                            let _ = writeln!(
                                out,
                                "{prefix},{},{},{},{},{},{},{},{}",
                                (s.t - t0) / period,
                                st.theta1,
                                st.theta2,
                                st.x,
                                st.dtheta1,
                                st.dtheta2,
                                st.dx,
                                s.torque
                            );
                        }
                    } else {
                        let params = base.with_k_alpha_omega(r.k, r.alpha, r.omega);
                        for (t, d) in zmp_distance(&tr, &params)?.profile {
                            let _ = writeln!(out, "{prefix},{},{d}", (t - t0) / period);
                        }
                    }
                }
            }
        }
        Figure::Fig4 => {
            for b in baseline.iter().filter(|b| b.solved()) {
                let tr = record_trajectory(b, base, sim)?;
                let t0 = tr.start_time();
                let period = tr.duration();
                for s in &tr.samples {
                    let st = &s.state;
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        b.omega,
                        (s.t - t0) / period,
                        st.theta1,
                        st.theta2,
                        st.dtheta1,
                        st.dtheta2,
                        s.torque
                    );
                }
            }
        }
    }
    Ok(out)
}
