//! Dirichlet kernel `K(f, t) = sin((2f+1) pi t) / ((2f+1) sin(pi t))` and its
//! first three derivatives in `t`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Below this value of `(2f+1) pi |t|` the closed-form derivatives lose digits
/// to cancellation and the Taylor expansion is used instead.
const SERIES_SWITCH: f64 = 0.5;
const SERIES_TERMS: usize = 14;

/// Map `t` onto `(-1/2, 1/2]`.
pub fn wrap_centered(t: f64) -> f64 {
    if t > -0.5 && t <= 0.5 {
        return t;
    }
    let w = t.rem_euclid(1.0);
    if w > 0.5 {
        w - 1.0
    } else {
        w
    }
}

/// `K(f, t)` and its derivatives of order 0..=3 at once.
///
/// `f` may be non-integer (the interpolation kernel evaluates `K(gamma f_c, .)`);
/// positions are wrapped onto `(-1/2, 1/2]` first.
pub fn dirichlet_all(f: f64, t: f64) -> [f64; 4] {
    let t = wrap_centered(t);
    let n = 2.0 * f + 1.0;
    // Evaluate at |t| so that parity holds exactly.
    let a = t.abs();
    let mut out = if n * PI * a < SERIES_SWITCH {
        series(n, a)
    } else {
        closed_form(n, a)
    };
    if t < 0.0 {
        out[1] = -out[1];
        out[3] = -out[3];
    }
    out
}

fn closed_form(n: f64, t: f64) -> [f64; 4] {
    let x = PI * t;
    let (s, c) = x.sin_cos();
    let (sn, cn) = (n * x).sin_cos();
    let tan = s / c;
    let k0 = sn / (n * s);
    let k1 = PI * (cn - k0 * c) / s;
    let k2 = -PI * PI * k0 * (n * n - 1.0) - 2.0 * PI * k1 / tan;
    let k3 = -PI * PI * k1 * (n * n - 3.0) - 2.0 * PI / tan * (k2 - PI * k1 / tan);
    [k0, k1, k2, k3]
}

/// Taylor expansion of `sin(n x) / (n sin x)` in `x = pi t`, differentiated
/// term by term.
fn series(n: f64, t: f64) -> [f64; 4] {
    // Numerator sin(n x)/(n x) and denominator sin(x)/x as series in x^2.
    let mut num = [0.0; SERIES_TERMS];
    let mut den = [0.0; SERIES_TERMS];
    let mut fact = 1.0; // (2m+1)!
    let mut n2m = 1.0; // n^{2m}
    for m in 0..SERIES_TERMS {
        if m > 0 {
            fact *= (2 * m) as f64 * (2 * m + 1) as f64;
            n2m *= n * n;
        }
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        num[m] = sign * n2m / fact;
        den[m] = sign / fact;
    }
    let mut a = [0.0; SERIES_TERMS];
    for m in 0..SERIES_TERMS {
        let mut v = num[m];
        for k in 1..=m {
            v -= den[k] * a[m - k];
        }
        a[m] = v;
    }
    let x = PI * t;
    let mut out = [0.0; 4];
    for (order, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (m, &am) in a.iter().enumerate() {
            let p = 2 * m;
            if p < order {
                continue;
            }
            // d^order/dt^order of (pi t)^p = pi^order p!/(p-order)! x^(p-order)
            let mut falling = 1.0;
            for q in 0..order {
                falling *= (p - q) as f64;
            }
            acc += am * falling * x.powi((p - order) as i32);
        }
        *slot = acc * PI.powi(order as i32);
    }
    out
}

/// Value of `K(f, .)` or one of its first three derivatives.
pub fn dirichlet_eval(f: f64, t: f64, order: usize) -> Result<f64> {
    if order > 3 {
        return Err(Error::Order(order));
    }
    if !(f >= 0.0) {
        return Err(Error::OutOfRange(format!("kernel frequency {f} must be non-negative")));
    }
    Ok(dirichlet_all(f, t)[order])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_values() {
        for f in [1.0, 10.0, 247.0, 1000.0] {
            let k = dirichlet_all(f, 0.0);
            assert_eq!(k[0], 1.0);
            assert_eq!(k[1], 0.0);
            let want = -4.0 * PI * PI * f * (1.0 + f) / 3.0;
            assert!((k[2] - want).abs() <= 1e-12 * want.abs());
            assert_eq!(k[3], 0.0);
        }
    }

    #[test]
    fn first_zero() {
        for f in [3.0, 50.0, 1000.0] {
            let v = dirichlet_eval(f, 1.0 / (2.0 * f + 1.0), 0).unwrap();
            assert!(v.abs() < 1e-14, "{v}");
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let (f, t, h) = (1000.0, 1e-3, 1e-9);
        let d = dirichlet_eval(f, t, 1).unwrap();
        let fd = (dirichlet_eval(f, t + h, 0).unwrap() - dirichlet_eval(f, t - h, 0).unwrap())
            / (2.0 * h);
        assert!(((d - fd) / d).abs() < 1e-5, "{d} vs {fd}");
    }

    #[test]
    fn series_and_closed_form_agree_at_switch() {
        for f in [2.0, 40.0, 414.0, 4140.0] {
            let n = 2.0 * f + 1.0;
            let t = SERIES_SWITCH / (PI * n);
            let lo = series(n, t);
            let hi = closed_form(n, t);
            let scale = [1.0, PI * n, (PI * n).powi(2), (PI * n).powi(3)];
            for l in 0..4 {
                assert!(
                    (lo[l] - hi[l]).abs() <= 1e-10 * scale[l],
                    "f={f} order={l}: {} vs {}",
                    lo[l],
                    hi[l]
                );
            }
        }
    }

    #[test]
    fn order_four_is_rejected() {
        assert!(dirichlet_eval(10.0, 0.1, 4).is_err());
    }
}
