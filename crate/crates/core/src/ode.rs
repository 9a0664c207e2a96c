//! Dormand–Prince 5(4) with step-size control and continuous (dense) output.
//!
//! Written against [`Real`] and fixed-size state arrays so that the
//! time-domain model stays generic over the scalar type; the coefficients and
//! the fourth-order interpolant are those of Hairer & Wanner's DOPRI5.

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    pub rel: T,
    pub abs: T,
    /// Steps longer than this are never taken (None: unbounded).
    pub max_step: Option<T>,
    pub max_steps: usize,
}

impl<T: Real> Tolerances<T> {
    pub fn new(rel: T, abs: T) -> Self {
        Tolerances {
            rel,
            abs,
            max_step: None,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OdeFailure<T> {
    StepUnderflow { t: T },
    NonFinite { t: T },
    TooManySteps { t: T },
}

impl<T: Real> OdeFailure<T> {
    pub fn time(&self) -> T {
        match self {
            OdeFailure::StepUnderflow { t } | OdeFailure::NonFinite { t } | OdeFailure::TooManySteps { t } => *t,
        }
    }

    pub fn reason(&self) -> &'static str {
        match self {
            OdeFailure::StepUnderflow { .. } => "step size underflow",
            OdeFailure::NonFinite { .. } => "non-finite state",
            OdeFailure::TooManySteps { .. } => "step budget exhausted",
        }
    }
}

#[rustfmt::skip]
mod tableau {
    pub const C: [f64; 5] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0];
    pub const A21: f64 = 0.2;
    pub const A31: f64 = 3.0 / 40.0;
    pub const A32: f64 = 9.0 / 40.0;
    pub const A41: f64 = 44.0 / 45.0;
    pub const A42: f64 = -56.0 / 15.0;
    pub const A43: f64 = 32.0 / 9.0;
    pub const A51: f64 = 19372.0 / 6561.0;
    pub const A52: f64 = -25360.0 / 2187.0;
    pub const A53: f64 = 64448.0 / 6561.0;
    pub const A54: f64 = -212.0 / 729.0;
    pub const A61: f64 = 9017.0 / 3168.0;
    pub const A62: f64 = -355.0 / 33.0;
    pub const A63: f64 = 46732.0 / 5247.0;
    pub const A64: f64 = 49.0 / 176.0;
    pub const A65: f64 = -5103.0 / 18656.0;
    pub const A71: f64 = 35.0 / 384.0;
    pub const A73: f64 = 500.0 / 1113.0;
    pub const A74: f64 = 125.0 / 192.0;
    pub const A75: f64 = -2187.0 / 6784.0;
    pub const A76: f64 = 11.0 / 84.0;
    pub const E1: f64 = 71.0 / 57600.0;
    pub const E3: f64 = -71.0 / 16695.0;
    pub const E4: f64 = 71.0 / 1920.0;
    pub const E5: f64 = -17253.0 / 339200.0;
    pub const E6: f64 = 22.0 / 525.0;
    pub const E7: f64 = -1.0 / 40.0;
    pub const D1: f64 = -12715105075.0 / 11282082432.0;
    pub const D3: f64 = 87487479700.0 / 32700410799.0;
    pub const D4: f64 = -10690763975.0 / 1880347072.0;
    pub const D5: f64 = 701980252875.0 / 199316789632.0;
    pub const D6: f64 = -1453857185.0 / 822651844.0;
    pub const D7: f64 = 69997945.0 / 29380423.0;
}

fn combine<T: Real, const N: usize>(y: &[T; N], h: T, terms: &[(f64, &[T; N])]) -> [T; N] {
    let mut out = *y;
    for (c, k) in terms {
        let ch = T::of(*c) * h;
        for i in 0..N {
            out[i] += ch * k[i];
        }
    }
    out
}

fn all_finite<T: Real, const N: usize>(y: &[T; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

/// Integrates y' = f(t, y) from (t0, y0) and returns y at every time in
/// `t_out` (ascending, all ≥ t0), interpolated from the dense output.
pub fn integrate_dense<T, const N: usize, F>(
    mut f: F,
    t0: T,
    y0: [T; N],
    t_out: &[T],
    tol: &Tolerances<T>,
) -> Result<Vec<[T; N]>, OdeFailure<T>>
where
    T: Real,
    F: FnMut(T, &[T; N]) -> [T; N],
{
    use tableau::*;
    let mut out = Vec::with_capacity(t_out.len());
    let Some(&t_end) = t_out.last() else {
        return Ok(out);
    };
    let mut next = 0;
    while next < t_out.len() && t_out[next] <= t0 {
        out.push(y0);
        next += 1;
    }
    if next == t_out.len() {
        return Ok(out);
    }

    let scale = |a: &[T; N], b: &[T; N], i: usize| tol.abs + tol.rel * a[i].abs().max(b[i].abs());
    let norm = |v: &[T; N], y: &[T; N], y1: &[T; N]| {
        let s: T = (0..N).map(|i| (v[i] / scale(y, y1, i)).powi(2)).sum();
        (s / T::of(N as f64)).sqrt()
    };

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    if !all_finite(&k1) {
        return Err(OdeFailure::NonFinite { t });
    }
    let span = t_end - t0;
    let max_step = tol.max_step.unwrap_or(span).min(span);

    // initial step (Hairer's heuristic)
    let mut h = {
        let d0 = norm(&y, &y, &y);
        let d1 = norm(&k1, &y, &y);
        let h0 = if d0 < T::of(1e-5) || d1 < T::of(1e-5) {
            T::of(1e-6)
        } else {
            T::of(0.01) * d0 / d1
        }
        .min(max_step);
        let y1 = combine(&y, h0, &[(1.0, &k1)]);
        let k2 = f(t + h0, &y1);
        let diff: [T; N] = std::array::from_fn(|i| k2[i] - k1[i]);
        let d2 = norm(&diff, &y, &y) / h0;
        let dm = d1.max(d2);
        let h1 = if dm <= T::of(1e-15) {
            (h0 * T::of(1e-3)).max(T::of(1e-6))
        } else {
            (T::of(0.01) / dm).powf(T::of(0.2))
        };
        (T::of(100.0) * h0).min(h1).min(max_step)
    };

    let mut steps = 0usize;
    let mut last_rejected = false;
    while next < t_out.len() {
        steps += 1;
        if steps > tol.max_steps {
            return Err(OdeFailure::TooManySteps { t });
        }
        if h <= T::of(16.0) * T::epsilon() * t.abs().max(T::one()) {
            return Err(OdeFailure::StepUnderflow { t });
        }
        if t + h > t_end {
            h = t_end - t;
        }

        let k2 = f(t + T::of(C[0]) * h, &combine(&y, h, &[(A21, &k1)]));
        let k3 = f(t + T::of(C[1]) * h, &combine(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(
            t + T::of(C[2]) * h,
            &combine(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = f(
            t + T::of(C[3]) * h,
            &combine(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &combine(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y1 = combine(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t + h, &y1);
        if !all_finite(&y1) || !all_finite(&k7) {
            // shrink and retry; persistent blow-up ends in underflow
            h = h * T::of(0.25);
            last_rejected = true;
            if !h.is_finite() || h <= T::zero() {
                return Err(OdeFailure::NonFinite { t });
            }
            continue;
        }
        let err_vec = combine(
            &[T::zero(); N],
            h,
            &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
        );
        let err = norm(&err_vec, &y, &y1);

        if err <= T::one() {
            let t_new = t + h;
            // dense output on [t, t_new]
            let ydiff: [T; N] = std::array::from_fn(|i| y1[i] - y[i]);
            let bspl: [T; N] = std::array::from_fn(|i| h * k1[i] - ydiff[i]);
            let r4: [T; N] = std::array::from_fn(|i| ydiff[i] - h * k7[i] - bspl[i]);
            let r5 = combine(
                &[T::zero(); N],
                h,
                &[(D1, &k1), (D3, &k3), (D4, &k4), (D5, &k5), (D6, &k6), (D7, &k7)],
            );
            while next < t_out.len() && (t_out[next] <= t_new || t_new >= t_end) {
                let theta = (t_out[next] - t) / h;
                let theta1 = T::one() - theta;
                out.push(std::array::from_fn(|i| {
                    y[i] + theta * (ydiff[i] + theta1 * (bspl[i] + theta * (r4[i] + theta1 * r5[i])))
                }));
                next += 1;
            }
            t = t_new;
            y = y1;
            k1 = k7;
            let fac = if err == T::zero() {
                T::of(10.0)
            } else {
                (T::of(0.9) * err.powf(T::of(-0.2))).min(T::of(10.0)).max(T::of(0.2))
            };
            let fac = if last_rejected { fac.min(T::one()) } else { fac };
            h = (h * fac).min(max_step);
            last_rejected = false;
        } else {
            let fac = (T::of(0.9) * err.powf(T::of(-0.2))).max(T::of(0.2));
            h = h * fac;
            last_rejected = true;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let ts: Vec<f64> = (0..=100).map(|i| i as f64 * 0.05).collect();
        let ys = integrate_dense(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], &ts, &Tolerances::new(1e-10, 1e-12)).unwrap();
        for (t, y) in ts.iter().zip(&ys) {
            assert!((y[0] - (-t).exp()).abs() < 1e-9, "{t}");
        }
    }

    #[test]
    fn harmonic_oscillator_dense_output() {
        // x'' = −ω² x on a grid much finer than the steps taken
        let w = 3.0;
        let ts: Vec<f64> = (0..=2000).map(|i| i as f64 * 0.01).collect();
        let ys = integrate_dense(
            |_, y: &[f64; 2]| [y[1], -w * w * y[0]],
            0.0,
            [1.0, 0.0],
            &ts,
            &Tolerances::new(1e-10, 1e-12),
        )
        .unwrap();
        for (t, y) in ts.iter().zip(&ys) {
            assert!((y[0] - (w * t).cos()).abs() < 1e-7, "{t}: {}", y[0]);
        }
    }

    #[test]
    fn time_dependent_forcing() {
        // y' = cos t → sin t
        let ts: Vec<f64> = (0..=300).map(|i| i as f64 * 0.1).collect();
        let ys = integrate_dense(|t, _: &[f64; 1]| [t.cos()], 0.0, [0.0], &ts, &Tolerances::new(1e-10, 1e-12)).unwrap();
        for (t, y) in ts.iter().zip(&ys) {
            assert!((y[0] - t.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn blow_up_is_reported() {
        // y' = y², y(0) = 1 diverges at t = 1
        let r = integrate_dense(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], &[0.5, 2.0], &Tolerances::new(1e-9, 1e-12));
        let e = r.unwrap_err();
        assert!(e.time() > 0.9 && e.time() <= 1.0, "{e:?}");
    }

    #[test]
    fn output_at_start_time() {
        let ys = integrate_dense(|_, y: &[f64; 1]| [y[0]], 0.0, [2.0], &[0.0, 0.0, 1.0], &Tolerances::new(1e-10, 1e-12)).unwrap();
        assert_eq!(ys[0][0], 2.0);
        assert_eq!(ys[1][0], 2.0);
        assert!((ys[2][0] - 2.0 * 1f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn f32_instantiation() {
        let ts = [1.0f32];
        let ys = integrate_dense(|_, y: &[f32; 1]| [-y[0]], 0.0, [1.0], &ts, &Tolerances::new(1e-5, 1e-7)).unwrap();
        assert!((ys[0][0] - (-1f32).exp()).abs() < 1e-4);
    }
}
