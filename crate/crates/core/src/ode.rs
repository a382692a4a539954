//! Adaptive Dormand–Prince 5(4) integrator for small real systems.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("exceeded {max_steps} steps before reaching t = {t_end} (stopped at t = {t})")]
    MaxSteps {
        max_steps: usize,
        t: f64,
        t_end: f64,
    },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 {
            rtol: 1e-12,
            atol: 1e-14,
            h_init: 1e-3,
            h_max: f64::INFINITY,
            max_steps: 10_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B_HAT: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl Dopri5 {
    pub fn with_tolerance(rtol: f64, atol: f64) -> Self {
        Dopri5 {
            rtol,
            atol,
            ..Default::default()
        }
    }

    /// Integrate `y' = f(t, y)` from `t0` to `t1` (either direction). `observe`
    /// is called with every accepted step, including the initial point.
    pub fn integrate<const N: usize>(
        &self,
        mut f: impl FnMut(f64, &[f64; N]) -> [f64; N],
        t0: f64,
        y0: [f64; N],
        t1: f64,
        mut observe: impl FnMut(f64, &[f64; N]),
    ) -> Result<[f64; N], OdeError> {
        let dir = if t1 >= t0 { 1.0 } else { -1.0 };
        let span = (t1 - t0).abs();
        let mut t = t0;
        let mut y = y0;
        observe(t, &y);
        if span == 0.0 {
            return Ok(y);
        }
        let mut h = self.h_init.min(span).min(self.h_max);
        let mut k = [[0.0; N]; 7];
        k[0] = f(t, &y);
        let mut steps = 0;
        while (t1 - t) * dir > 0.0 {
            if steps >= self.max_steps {
                return Err(OdeError::MaxSteps {
                    max_steps: self.max_steps,
                    t,
                    t_end: t1,
                });
            }
            steps += 1;
            let last = h >= (t1 - t).abs();
            if last {
                h = (t1 - t).abs();
            }
            let hs = h * dir;
            for s in 1..7 {
                let mut ys = y;
                for (i, yi) in ys.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += A[s][j] * kj[i];
                    }
                    *yi += hs * acc;
                }
                k[s] = f(t + C[s] * hs, &ys);
            }
            let mut y_new = y;
            let mut err = 0.0_f64;
            for i in 0..N {
                let mut hi = 0.0;
                let mut lo = 0.0;
                for s in 0..7 {
                    hi += B[s] * k[s][i];
                    lo += B_HAT[s] * k[s][i];
                }
                y_new[i] = y[i] + hs * hi;
                let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((hs * (hi - lo) / sc).abs());
            }
            if !err.is_finite() {
                return Err(OdeError::NonFinite { t });
            }
            if err <= 1.0 {
                t = if last { t1 } else { t + hs };
                y = y_new;
                // FSAL: the last stage is f(t_new, y_new)
                k[0] = k[6];
                observe(t, &y);
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = (h * factor).min(self.h_max);
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(OdeError::StepSizeUnderflow { t, h });
            }
        }
        Ok(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_phase_is_accurate() {
        let y = Dopri5::default()
            .integrate(|_, y| [y[1], -y[0]], 0.0, [1.0, 0.0], 10.0, |_, _| {})
            .unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-10);
        assert!((y[1] + 10f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn integrates_backwards_and_observes_endpoints() {
        let mut seen = Vec::new();
        let y = Dopri5::default()
            .integrate(|_, y| [-y[0]], 1.0, [1.0], 0.0, |t, _| seen.push(t))
            .unwrap();
        assert!((y[0] - 1f64.exp()).abs() < 1e-11);
        assert_eq!(seen.first(), Some(&1.0));
        assert_eq!(seen.last(), Some(&0.0));
    }

    #[test]
    fn step_limit_is_reported() {
        let solver = Dopri5 {
            max_steps: 3,
            ..Default::default()
        };
        let err = solver
            .integrate(|_, y| [y[1], -y[0]], 0.0, [1.0, 0.0], 100.0, |_, _| {})
            .unwrap_err();
        assert!(matches!(err, OdeError::MaxSteps { .. }));
    }
}
