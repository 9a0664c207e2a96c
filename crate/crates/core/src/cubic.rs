//! Real roots of a monic cubic y³ + b y² + c y + d = 0.

use crate::scalar::Real;

/// Real roots, ascending, each polished by Newton iteration.
///
/// A double root is reported once; `double` then holds its index.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicRoots<T> {
    pub roots: Vec<T>,
    pub double: Option<usize>,
}

fn eval<T: Real>(b: T, c: T, d: T, y: T) -> (T, T) {
    let p = ((y + b) * y + c) * y + d;
    let dp = (T::of(3.0) * y + T::two() * b) * y + c;
    (p, dp)
}

fn polish<T: Real>(b: T, c: T, d: T, mut y: T) -> T {
    for _ in 0..8 {
        let (p, dp) = eval(b, c, d, y);
        if dp == T::zero() {
            break;
        }
        let step = p / dp;
        let next = y - step;
        if !next.is_finite() {
            break;
        }
        // keep the better of the two iterates (guards against overshoot near a double root)
        if eval(b, c, d, next).0.abs() > p.abs() {
            break;
        }
        y = next;
        if step.abs() <= T::epsilon() * y.abs().max(T::one()) {
            break;
        }
    }
    y
}

/// Closed-form (discriminant-based) real roots of y³ + b y² + c y + d.
pub fn solve_monic_cubic<T: Real>(b: T, c: T, d: T) -> CubicRoots<T> {
    let three = T::of(3.0);
    let shift = b / three;
    // depressed cubic t³ + p t + q, y = t − b/3
    let p = c - b * b / three;
    let q = T::two() * b * b * b / T::of(27.0) - b * c / three + d;
    let disc = (q / T::two()).powi(2) + (p / three).powi(3);
    let scale = (p.abs() / three).powf(T::of(1.5)).max((q / T::two()).abs()).max(T::min_positive_value());
    let tol = T::of(64.0) * T::epsilon() * scale * scale;

    let mut roots: Vec<T>;
    let mut repeated: Option<T> = None;
    if disc > tol {
        // one real root (Cardano)
        let sq = disc.sqrt();
        let u = (-q / T::two() + sq).cbrt();
        let v = (-q / T::two() - sq).cbrt();
        roots = vec![u + v - shift];
    } else if disc < -tol {
        // three distinct real roots (trigonometric form), p < 0 here
        let r = T::two() * (-p / three).sqrt();
        let arg = (three * q / (p * r)).max(-T::one()).min(T::one());
        let phi = arg.acos() / three;
        roots = (0..3)
            .map(|k| r * (phi - T::two_pi() * T::of(k as f64) / three).cos() - shift)
            .collect();
    } else if p.abs() <= T::epsilon() * (b * b + c.abs()).max(T::one()) {
        // triple root
        roots = vec![-shift];
    } else {
        let double = -three * q / (T::two() * p) - shift;
        roots = vec![three * q / p - shift, double];
        repeated = Some(double);
    }
    for r in roots.iter_mut() {
        *r = polish(b, c, d, *r);
    }
    roots.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));

    // collapse roots that polishing could not separate
    let merge_tol = T::of(64.0) * T::epsilon().sqrt();
    let mut out: Vec<T> = Vec::with_capacity(3);
    for r in roots {
        match out.last() {
            Some(last) if (r - *last).abs() <= merge_tol * r.abs().max(T::one()) => {
                repeated = Some(*last);
            }
            _ => out.push(r),
        }
    }
    let double = repeated.map(|v| {
        (0..out.len())
            .min_by(|&i, &j| {
                (out[i] - v)
                    .abs()
                    .partial_cmp(&(out[j] - v).abs())
                    .expect("finite roots")
            })
            .expect("at least one root")
    });
    CubicRoots { roots: out, double }
}
