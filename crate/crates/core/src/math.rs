//! Thin wrappers over `libm` plus a few log-domain helpers.
//!
//! Everything in the crate goes through these so that results are identical
//! whether or not `std` is linked.

pub use core::f64::consts::{E, LN_2, PI};

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}
#[inline]
pub fn expm1(x: f64) -> f64 {
    libm::expm1(x)
}
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub fn ln1p(x: f64) -> f64 {
    libm::log1p(x)
}
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}
#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}
#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}
#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}
#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}
#[inline]
pub fn lgamma(x: f64) -> f64 {
    libm::lgamma(x)
}
#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}
#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}
#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}
#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}
#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

/// `log⁺ t = max{1, log t}`; note the floor is 1, not 0.
#[inline]
pub fn log_plus(t: f64) -> f64 {
    if t > E {
        ln(t)
    } else {
        1.0
    }
}

/// `log⁺` expressed through `log t`.
#[inline]
pub fn log_plus_from_log(log_t: f64) -> f64 {
    if log_t > 1.0 {
        log_t
    } else {
        1.0
    }
}

/// `log(e^a + e^b)` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + ln1p(exp(lo - hi))
}

/// `log(1 + e^x)`.
pub fn log1p_exp(x: f64) -> f64 {
    if x > 36.0 {
        x + exp(-x)
    } else {
        ln1p(exp(x))
    }
}

/// A signed number stored as `sign · exp(log_magnitude)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSigned {
    pub sign: i8,
    pub log_magnitude: f64,
}

impl LogSigned {
    pub const ZERO: LogSigned = LogSigned { sign: 0, log_magnitude: f64::NEG_INFINITY };

    pub fn new(sign: i8, log_magnitude: f64) -> Self {
        if sign == 0 || log_magnitude == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogSigned { sign: sign.signum(), log_magnitude }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogSigned { sign: if x > 0.0 { 1 } else { -1 }, log_magnitude: ln(x.abs()) }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Plain value; overflows to ±∞ for large magnitudes.
    pub fn to_f64(&self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => s as f64 * exp(self.log_magnitude),
        }
    }

    /// Multiply by a positive number given by its log.
    pub fn scale_log(self, log_factor: f64) -> Self {
        LogSigned::new(self.sign, self.log_magnitude + log_factor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_plus_floor_is_one() {
        assert_eq!(log_plus(0.0), 1.0);
        assert_eq!(log_plus(E), 1.0);
        assert!((log_plus(E * E) - 2.0).abs() < 1e-15);
        assert_eq!(log_plus_from_log(f64::NEG_INFINITY), 1.0);
    }

    #[test]
    fn log_signed_zero_invariant() {
        assert!(LogSigned::new(1, f64::NEG_INFINITY).is_zero());
        assert!(LogSigned::new(0, 3.0).is_zero());
        assert_eq!(LogSigned::from_f64(-2.0).sign, -1);
        assert!((LogSigned::from_f64(-2.0).to_f64() + 2.0).abs() < 1e-15);
    }

    #[test]
    fn log_add_exp_large() {
        assert!((log_add_exp(1000.0, 1000.0) - (1000.0 + LN_2)).abs() < 1e-12);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 2.0), 2.0);
    }
}
