//! Reference implementations used as test oracles. Nothing here calls into
//! the crate's mechanics: geometry, energies, the compass walker and its
//! integrator are written out again from first principles.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Point-mass positions and velocities, stance foot at the origin.
pub struct Points {
    /// `(mass, position, velocity)` of hip, wobbler, swing tip.
    pub masses: [(f64, [f64; 2], [f64; 2]); 3],
}

/// `q = (θ1, θ2, x)`, `dq` their rates.
pub fn points(q: [f64; 3], dq: [f64; 3], alpha: f64, mu: f64) -> Points {
    let (t1, t2, x) = (q[0], q[1], q[2]);
    let psi = t1 - t2;
    let dpsi = dq[0] - dq[1];
    let hip = [t1.sin(), t1.cos()];
    let vhip = [t1.cos() * dq[0], -t1.sin() * dq[0]];
    let tip = [hip[0] - psi.sin(), hip[1] - psi.cos()];
    let vtip = [vhip[0] - psi.cos() * dpsi, vhip[1] + psi.sin() * dpsi];
    let wob = [hip[0] + x, hip[1]];
    let vwob = [vhip[0] + dq[2], vhip[1]];
    Points {
        masses: [(1.0 - alpha, hip, vhip), (alpha, wob, vwob), (mu, tip, vtip)],
    }
}

/// Accelerations of hip, wobbler, swing tip for joint accelerations `ddq`.
pub fn point_accelerations(q: [f64; 3], dq: [f64; 3], ddq: [f64; 3]) -> [[f64; 2]; 3] {
    let (t1, dt1, ddt1) = (q[0], dq[0], ddq[0]);
    let (psi, dpsi, ddpsi) = (q[0] - q[1], dq[0] - dq[1], ddq[0] - ddq[1]);
    let hip = [
        -t1.sin() * dt1 * dt1 + t1.cos() * ddt1,
        -t1.cos() * dt1 * dt1 - t1.sin() * ddt1,
    ];
    let tip = [
        hip[0] + psi.sin() * dpsi * dpsi - psi.cos() * ddpsi,
        hip[1] + psi.cos() * dpsi * dpsi + psi.sin() * ddpsi,
    ];
    [hip, [hip[0] + ddq[2], hip[1]], tip]
}

pub fn kinetic(q: [f64; 3], dq: [f64; 3], alpha: f64, mu: f64) -> f64 {
    points(q, dq, alpha, mu)
        .masses
        .iter()
        .map(|(m, _, v)| 0.5 * m * (v[0] * v[0] + v[1] * v[1]))
        .sum()
}

pub fn potential(q: [f64; 3], alpha: f64, mu: f64, k: f64) -> f64 {
    let p = points(q, [0.0; 3], alpha, mu);
    // the stance tip sits at height zero
    p.masses.iter().map(|(m, r, _)| m * r[1]).sum::<f64>() + 0.5 * k * q[2] * q[2]
}

/// Angular momentum of the moving masses about `pivot` (counter-clockwise
/// positive).
pub fn angular_momentum(q: [f64; 3], dq: [f64; 3], alpha: f64, mu: f64, pivot: [f64; 2]) -> f64 {
    points(q, dq, alpha, mu)
        .masses
        .iter()
        .map(|(m, r, v)| m * ((r[0] - pivot[0]) * v[1] - (r[1] - pivot[1]) * v[0]))
        .sum()
}

/// Euler–Lagrange left-hand side `d/dt ∂T/∂q̇ − ∂(T − V)/∂q` by central
/// differences of the point-mass energies, along a motion with acceleration
/// `ddq`.
pub fn lagrange_residual_fd(q: [f64; 3], dq: [f64; 3], ddq: [f64; 3], alpha: f64, mu: f64, k: f64) -> [f64; 3] {
    let lag = |q: [f64; 3], dq: [f64; 3]| kinetic(q, dq, alpha, mu) - potential(q, alpha, mu, k);
    // T is quadratic in q̇, so a wide central difference is exact
    let momentum = |q: [f64; 3], dq: [f64; 3], i: usize| {
        let h = 0.1;
        let mut a = dq;
        let mut b = dq;
        a[i] += h;
        b[i] -= h;
        (kinetic(q, a, alpha, mu) - kinetic(q, b, alpha, mu)) / (2.0 * h)
    };
    let mut out = [0.0; 3];
    for i in 0..3 {
        let e = 1e-4;
        let qa = [q[0] + e * dq[0], q[1] + e * dq[1], q[2] + e * dq[2]];
        let qb = [q[0] - e * dq[0], q[1] - e * dq[1], q[2] - e * dq[2]];
        let va = [dq[0] + e * ddq[0], dq[1] + e * ddq[1], dq[2] + e * ddq[2]];
        let vb = [dq[0] - e * ddq[0], dq[1] - e * ddq[1], dq[2] - e * ddq[2]];
        let dt_p = (momentum(qa, va, i) - momentum(qb, vb, i)) / (2.0 * e);
        let h = 1e-5;
        let mut qp = q;
        let mut qm = q;
        qp[i] += h;
        qm[i] -= h;
        let dl = (lag(qp, dq) - lag(qm, dq)) / (2.0 * h);
        out[i] = dt_p - dl;
    }
    out
}

/// Classical point-mass compass walker written in absolute leg angles:
/// stance angle `th` from vertical and swing angle `ps`, hip mass 1, tip
/// masses `mu`, hip torque `u` acting on `th − ps`.
#[derive(Debug, Clone, Copy)]
pub struct Compass {
    pub mu: f64,
    pub gamma: f64,
    pub stride: f64,
    pub omega: f64,
    pub kp: f64,
    pub kd: f64,
    pub reset_phase: f64,
}

/// `[th, ps, dth, dps, phase]`
pub type CState = [f64; 5];

impl Compass {
    pub fn torque(&self, y: &CState) -> f64 {
        let rel = y[0] - y[1];
        let drel = y[2] - y[3];
        let target = self.gamma * (1.0 + y[4].cos()) - self.stride;
        let target_rate = -self.gamma * self.omega * y[4].sin();
        -self.kp * (rel - target) - self.kd * (drel - target_rate)
    }

    pub fn rhs(&self, y: &CState) -> CState {
        let (th, ps, dth, dps) = (y[0], y[1], y[2], y[3]);
        let mu = self.mu;
        let c = (th - ps).cos();
        let s = (th - ps).sin();
        let u = self.torque(y);
        // (1+μ) θ̈ − μ c ψ̈ = u + μ s ψ̇² + (1+μ) sin θ
        // −μ c θ̈ + μ ψ̈   = −u − μ s θ̇² − μ sin ψ
        let a11 = 1.0 + mu;
        let a12 = -mu * c;
        let a22 = mu;
        let b1 = u + mu * s * dps * dps + (1.0 + mu) * th.sin();
        let b2 = -u - mu * s * dth * dth - mu * ps.sin();
        let det = a11 * a22 - a12 * a12;
        let ddth = (b1 * a22 - a12 * b2) / det;
        let ddps = (a11 * b2 - a12 * b1) / det;
        [dth, dps, ddth, ddps, self.omega]
    }

    fn rk4(&self, y: &CState, h: f64) -> CState {
        let add = |a: &CState, b: &CState, s: f64| {
            let mut r = *a;
            for i in 0..5 {
                r[i] += s * b[i];
            }
            r
        };
        let k1 = self.rhs(y);
        let k2 = self.rhs(&add(y, &k1, h / 2.0));
        let k3 = self.rhs(&add(y, &k2, h / 2.0));
        let k4 = self.rhs(&add(y, &k3, h));
        let mut r = *y;
        for i in 0..5 {
            r[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        r
    }

    /// Touchdown when the swing tip returns to the ground ahead of the
    /// stance foot: `th + ps = 0` with `th > 0`.
    fn guard(y: &CState) -> f64 {
        y[0] + y[1]
    }

    /// Integrates one swing phase and applies the touchdown map. Returns the
    /// post-impact state and stride time, or `None` on a fall.
    pub fn stride(&self, y0: &CState) -> Option<(CState, f64)> {
        let h = 2e-4;
        let mut y = *y0;
        let mut t = 0.0;
        while t < 5.0 {
            let next = self.rk4(&y, h);
            if next[0].abs() > PI / 2.0 {
                return None;
            }
            let descending = {
                // swing tip height cos th − cos ps, rate
                -next[0].sin() * next[2] + next[1].sin() * next[3] < 0.0
            };
            if Self::guard(&y) < 0.0 && Self::guard(&next) >= 0.0 && next[0] > 0.0 && descending {
                let (mut lo, mut hi) = (0.0, h);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if Self::guard(&self.rk4(&y, mid)) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let pre = self.rk4(&y, 0.5 * (lo + hi));
                return Some((self.impact(&pre), t + 0.5 * (lo + hi)));
            }
            y = next;
            t += h;
        }
        None
    }

    /// Momentum balance at touchdown with `a = th⁻`: the hip's angular
    /// momentum about the new contact is conserved and the trailing tip has
    /// none about the hip.
    pub fn impact(&self, pre: &CState) -> CState {
        let a = pre[0];
        let c2 = (2.0 * a).cos();
        let s2 = (2.0 * a).sin();
        let dth = c2 * pre[2] / (1.0 + self.mu * s2 * s2);
        let dps = dth * c2;
        [-a, a, dth, dps, self.reset_phase]
    }

    /// Section `(th, dth, dth − dps)` just after touchdown.
    pub fn section(y: &CState) -> [f64; 3] {
        [y[0], y[2], y[2] - y[3]]
    }

    pub fn embed(&self, z: [f64; 3]) -> CState {
        [z[0], -z[0], z[1], z[1] - z[2], self.reset_phase]
    }

    pub fn map(&self, z: [f64; 3]) -> Option<[f64; 3]> {
        self.stride(&self.embed(z)).map(|(y, _)| Self::section(&y))
    }

    /// Plain Newton with forward-difference Jacobian and Gaussian elimination.
    pub fn fixed_point(&self, guess: [f64; 3]) -> Option<[f64; 3]> {
        let mut z = guess;
        for _ in 0..40 {
            let f0 = self.map(z)?;
            let r = [f0[0] - z[0], f0[1] - z[1], f0[2] - z[2]];
            if r.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-12 {
                return Some(z);
            }
            let mut jac = [[0.0; 3]; 3];
            for j in 0..3 {
                let h = 1e-7;
                let mut zp = z;
                zp[j] += h;
                let fp = self.map(zp)?;
                for i in 0..3 {
                    jac[i][j] = ((fp[i] - zp[i]) - r[i]) / h;
                }
            }
            let dz = solve3(jac, [-r[0], -r[1], -r[2]])?;
            for i in 0..3 {
                z[i] += dz[i];
            }
        }
        None
    }
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            let pivot = a[col];
            for (x, p) in a[row][col..].iter_mut().zip(&pivot[col..]) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}
