//! Strictly increasing scalar maps and their inverses.

use alloc::format;

use crate::error::{Error, Result};

/// Absolute tolerance of the bisection inverse.
pub const INVERSE_TOL: f64 = 1e-13;

pub trait MonotoneMap {
    fn eval(&self, x: f64) -> f64;

    fn derivative(&self, x: f64) -> f64;

    /// Closed domain; infinite ends allowed.
    fn domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    fn inverse(&self, y: f64) -> Result<f64> {
        bisect_inverse(|x| self.eval(x), y, self.domain(), INVERSE_TOL)
    }
}

/// Solves `f(x) = y` for nondecreasing `f` by bracketing and bisection.
///
/// The bracket starts at `[-1, 2] ∩ domain` and grows geometrically. Newton is
/// deliberately avoided: the maps here have vanishing derivative on fat sets.
pub fn bisect_inverse<F: Fn(f64) -> f64>(f: F, y: f64, domain: (f64, f64), tol: f64) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::Domain(format!("inverse requested at {y}")));
    }
    let (dlo, dhi) = domain;
    let mut lo = (-1.0f64).max(dlo);
    let mut hi = 2.0f64.min(dhi);
    if lo > hi {
        lo = dlo;
        hi = dhi;
    }
    let mut step = 1.0;
    while f(lo) > y {
        if lo == dlo {
            return Err(Error::OutOfRange { value: y, lo: f(dlo), hi: f(dhi) });
        }
        hi = lo;
        lo = (lo - step).max(dlo);
        step *= 2.0;
        if lo < -1e300 {
            return Err(Error::OutOfRange { value: y, lo: f64::NEG_INFINITY, hi: f64::INFINITY });
        }
    }
    step = 1.0;
    while f(hi) < y {
        if hi == dhi {
            return Err(Error::OutOfRange { value: y, lo: f(dlo), hi: f(dhi) });
        }
        lo = hi;
        hi = (hi + step).min(dhi);
        step *= 2.0;
        if hi > 1e300 {
            return Err(Error::OutOfRange { value: y, lo: f64::NEG_INFINITY, hi: f64::INFINITY });
        }
    }
    for _ in 0..2100 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v < y {
            lo = mid;
        } else if v > y {
            hi = mid;
        } else {
            return Ok(mid);
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Cube;
    impl MonotoneMap for Cube {
        fn eval(&self, x: f64) -> f64 {
            x * x * x
        }
        fn derivative(&self, x: f64) -> f64 {
            3.0 * x * x
        }
    }

    struct Clamp01;
    impl MonotoneMap for Clamp01 {
        fn eval(&self, x: f64) -> f64 {
            2.0 * x
        }
        fn derivative(&self, _x: f64) -> f64 {
            2.0
        }
        fn domain(&self) -> (f64, f64) {
            (0.0, 1.0)
        }
    }

    #[test]
    fn inverse_roundtrip_with_bracket_growth() {
        for &y in &[-1e6, -3.0, 0.0, 0.125, 27.0, 1e9] {
            let x = Cube.inverse(y).unwrap();
            assert!((x * x * x - y).abs() <= 1e-12 * y.abs().max(1.0) * 3.0 * x * x + 1e-12, "y={y}");
        }
    }

    #[test]
    fn inverse_respects_domain() {
        assert!((Clamp01.inverse(1.5).unwrap() - 0.75).abs() < 1e-13);
        assert!(matches!(Clamp01.inverse(3.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(Clamp01.inverse(-0.1), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn flat_map_returns_some_preimage() {
        let f = |x: f64| if x < 0.0 { x } else if x < 1.0 { 0.0 } else { x - 1.0 };
        let x = bisect_inverse(f, 0.0, (f64::NEG_INFINITY, f64::INFINITY), 1e-13).unwrap();
        assert!((-1e-13..=1.0 + 1e-13).contains(&x));
    }
}
