//! The two compactly supported shapes used throughout the crate.
//!
//! [`plateau`] is the cutoff `ζ`: identically 1 on `[-1, 1]`, identically 0
//! outside `[-2, 2]`, with a septic `C³` transition. It is used for the time
//! window of transport triples, the frequency splitting of the momentum
//! average and the smooth momentum truncation of the initial-data presets.
//!
//! [`bump`] is the `C^∞` profile `exp(-1/(1-u²))` on `(-1, 1)`.

#[inline]
fn smoothstep(u: f64) -> f64 {
    u * u * u * u * (35.0 - 84.0 * u + 70.0 * u * u - 20.0 * u * u * u)
}

#[inline]
fn smoothstep_derivative(u: f64) -> f64 {
    let v = u * (1.0 - u);
    140.0 * v * v * v
}

/// `ζ(t)`: 1 on `|t| ≤ 1`, 0 on `|t| ≥ 2`.
#[inline]
pub fn plateau(t: f64) -> f64 {
    let a = t.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 2.0 {
        0.0
    } else {
        smoothstep(2.0 - a)
    }
}

/// `ζ'(t)`.
#[inline]
pub fn plateau_derivative(t: f64) -> f64 {
    let a = t.abs();
    if a <= 1.0 || a >= 2.0 {
        0.0
    } else {
        -t.signum() * smoothstep_derivative(2.0 - a)
    }
}

/// `exp(-1/(1-u²))` for `|u| < 1`, else 0.
#[inline]
pub fn bump(u: f64) -> f64 {
    let q = 1.0 - u * u;
    if q <= 0.0 {
        0.0
    } else {
        (-1.0 / q).exp()
    }
}

/// Derivative of [`bump`].
#[inline]
pub fn bump_derivative(u: f64) -> f64 {
    let q = 1.0 - u * u;
    if q <= 0.0 {
        0.0
    } else {
        (-1.0 / q).exp() * (-2.0 * u / (q * q))
    }
}

/// Smooth taper: 1 for `r ≤ a`, 0 for `r ≥ b`, flat to all orders at both
/// ends (built from `e^{-1/s}`).
pub fn flat_taper(r: f64, a: f64, b: f64) -> f64 {
    let s = (r - a) / (b - a);
    if s <= 0.0 {
        return 1.0;
    }
    if s >= 1.0 {
        return 0.0;
    }
    let up = (-1.0 / s).exp();
    let down = (-1.0 / (1.0 - s)).exp();
    down / (up + down)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_shape() {
        assert_eq!(plateau(0.0), 1.0);
        assert_eq!(plateau(-1.0), 1.0);
        assert_eq!(plateau(2.0), 0.0);
        assert_eq!(plateau(-7.5), 0.0);
        for i in 0..200 {
            let t = -2.5 + 0.025 * i as f64;
            let v = plateau(t);
            assert!((0.0..=1.0).contains(&v));
            assert_eq!(v, plateau(-t));
        }
    }

    #[test]
    fn plateau_derivative_matches_differences() {
        let h = 1e-6;
        for &t in &[-1.7, -1.2, 1.05, 1.5, 1.93] {
            let fd = (plateau(t + h) - plateau(t - h)) / (2.0 * h);
            assert!((fd - plateau_derivative(t)).abs() < 1e-7, "t = {t}");
        }
    }

    #[test]
    fn bump_derivative_matches_differences() {
        let h = 1e-6;
        for &u in &[-0.8, -0.3, 0.0, 0.45, 0.9] {
            let fd = (bump(u + h) - bump(u - h)) / (2.0 * h);
            assert!((fd - bump_derivative(u)).abs() < 1e-8, "u = {u}");
        }
    }

    #[test]
    fn flat_taper_limits_and_monotonicity() {
        assert_eq!(flat_taper(0.5, 1.0, 2.0), 1.0);
        assert_eq!(flat_taper(2.5, 1.0, 2.0), 0.0);
        assert!((flat_taper(1.5, 1.0, 2.0) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for k in 0..=100 {
            let v = flat_taper(1.0 + k as f64 / 100.0, 1.0, 2.0);
            assert!(v <= prev);
            prev = v;
        }
    }
}
