//! Dormand–Prince 5(4) with the standard fourth-order continuous extension.

/// One accepted step with the data needed for dense output.
#[derive(Debug, Clone)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub h: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    cont: [[f64; N]; 5],
}

impl<const N: usize> Step<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// Interpolated state at `t` inside the step.
    pub fn interpolate(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let c = &self.cont;
        std::array::from_fn(|i| c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * c[4][i]))))
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

/// Single explicit step of size `h` from `(t, y)` with `k1 = f(t, y)` already
/// known. Returns the fifth-order solution, `f` at the new point, the error
/// estimate and the dense-output coefficients.
pub fn dp5_step<const N: usize, F>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
) -> (Step<N>, [f64; N], [f64; N])
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, k1)]));
    let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(
        t + C5 * h,
        &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = f(
        t + h,
        &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    );
    let y1 = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = f(t + h, &y1);
    let err: [f64; N] =
        std::array::from_fn(|i| h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]));

    let r2: [f64; N] = std::array::from_fn(|i| y1[i] - y[i]);
    let r3: [f64; N] = std::array::from_fn(|i| h * k1[i] - r2[i]);
    let r4: [f64; N] = std::array::from_fn(|i| r2[i] - h * k7[i] - r3[i]);
    let r5: [f64; N] =
        std::array::from_fn(|i| h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]));
    let step = Step {
        t0: t,
        h,
        y0: *y,
        y1,
        cont: [*y, r2, r3, r4, r5],
    };
    (step, k7, err)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
    pub max_step: f64,
    pub min_step: f64,
}

/// Adaptive stepper. The caller drives it one accepted step at a time so it
/// can inspect events between steps.
pub struct Stepper<const N: usize, F> {
    f: F,
    t: f64,
    y: [f64; N],
    k1: [f64; N],
    h: f64,
    tol: Tolerances,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepSizeUnderflow;

impl<const N: usize, F> Stepper<N, F>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    pub fn new(mut f: F, t0: f64, y0: [f64; N], h0: f64, tol: Tolerances) -> Self {
        let k1 = f(t0, &y0);
        Self {
            f,
            t: t0,
            y: y0,
            k1,
            h: h0.min(tol.max_step),
            tol,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64; N] {
        &self.y
    }

    fn error_norm(&self, y0: &[f64; N], y1: &[f64; N], err: &[f64; N]) -> f64 {
        let sum: f64 = (0..N)
            .map(|i| {
                let sc = self.tol.abs + self.tol.rel * y0[i].abs().max(y1[i].abs());
                (err[i] / sc).powi(2)
            })
            .sum();
        (sum / N as f64).sqrt()
    }

    /// Takes one accepted step, never going past `t_end`.
    pub fn advance(&mut self, t_end: f64) -> Result<Step<N>, StepSizeUnderflow> {
        loop {
            let h = self.h.min(t_end - self.t).min(self.tol.max_step);
            if h < self.tol.min_step {
                return Err(StepSizeUnderflow);
            }
            let (step, k7, err) = dp5_step(&mut self.f, self.t, &self.y, &self.k1, h);
            let e = self.error_norm(&step.y0, &step.y1, &err);
            if !e.is_finite() {
                self.h = 0.2 * h;
                continue;
            }
            let factor = if e == 0.0 {
                5.0
            } else {
                (0.9 * e.powf(-0.2)).clamp(0.2, 5.0)
            };
            if e <= 1.0 {
                self.t = step.t1();
                self.y = step.y1;
                self.k1 = k7;
                // a step clipped by t_end must not shrink the next one
                let next = h * factor;
                self.h = if h < self.h { self.h.max(next) } else { next };
                return Ok(step);
            }
            self.h = h * factor.min(1.0);
        }
    }

    /// Evaluates the right-hand side; used for event refinement.
    pub fn rhs(&mut self, t: f64, y: &[f64; N]) -> [f64; N] {
        (self.f)(t, y)
    }

    /// Fresh single step of size `h` from the start of `step`, used to refine
    /// event locations with full step accuracy.
    pub fn restep(&mut self, step: &Step<N>, h: f64) -> [f64; N] {
        let k1 = (self.f)(step.t0, &step.y0);
        dp5_step(&mut self.f, step.t0, &step.y0, &k1, h).0.y1
    }

    /// Restarts from an explicit state (after an event or reset).
    pub fn reset(&mut self, t: f64, y: [f64; N]) {
        self.t = t;
        self.y = y;
        self.k1 = (self.f)(t, &y);
    }
}
