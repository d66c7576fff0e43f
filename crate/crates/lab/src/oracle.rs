//! Closed-form Luxemburg norms of indicators, independent of the bisection in
//! the core: `‖c χ_E‖_P = |c| / P⁻¹(1/|E|)`.

use std::f64::consts::E;

use crate::config::YoungSpec;

/// Lower branch `W₋₁` on `[−1/e, 0)` by Halley iteration.
pub fn lambert_w_minus1(x: f64) -> Option<f64> {
    if !(-1.0 / E..0.0).contains(&x) {
        return None;
    }
    let p = 1.0 + E * x;
    let mut w = if p < 0.25 {
        -1.0 - (2.0 * p).sqrt()
    } else {
        let l = (-x).ln();
        l - (-l).ln()
    };
    halley(x, &mut w);
    Some(w)
}

/// Principal branch `W₀` on `[0, ∞)`.
pub fn lambert_w0(x: f64) -> Option<f64> {
    if !(x >= 0.0 && x.is_finite()) {
        return None;
    }
    let mut w = if x < 3.0 { 0.5 * x.ln_1p() } else { x.ln() - x.ln().ln().max(0.0) };
    halley(x, &mut w);
    Some(w)
}

fn halley(x: f64, w: &mut f64) {
    for _ in 0..100 {
        let ew = w.exp();
        let f = *w * ew - x;
        let d = ew * (*w + 1.0) - (*w + 2.0) * f / (2.0 * *w + 2.0);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let step = f / d;
        *w -= step;
        if step.abs() <= 1e-16 * w.abs().max(1e-300) {
            break;
        }
    }
}

/// `t` with `P(t) = y` for the three named Young functions.
pub fn young_inverse(young: &YoungSpec, y: f64) -> Option<f64> {
    if !(y > 0.0 && y.is_finite()) {
        return None;
    }
    match *young {
        // exp(t) − 1 = y
        YoungSpec::SubExp { gamma: 0.0 } => Some(y.ln_1p()),
        // exp(t / log⁺t) − 1 = y: t ≤ e gives t = a, beyond it t / ln t = a.
        YoungSpec::SubExp { gamma: 1.0 } => {
            let a = y.ln_1p();
            if a <= E {
                Some(a)
            } else {
                lambert_w_minus1(-1.0 / a).map(|w| -a * w)
            }
        }
        // t log⁺t log⁺log⁺t = y, piecewise in t ≤ e, t ≤ e^e, beyond.
        YoungSpec::Zygmund { r, s } if r == 1.0 && s == 1.0 => {
            if y <= E {
                Some(y)
            } else if y <= E.exp() * E {
                lambert_w0(y).map(|w| y / w)
            } else {
                // s + ln s + ln ln s = ln y in s = ln t.
                let target = y.ln();
                let mut l = target;
                for _ in 0..100 {
                    let f = l + l.ln() + l.ln().ln() - target;
                    let d = 1.0 + 1.0 / l + 1.0 / (l * l.ln());
                    let step = f / d;
                    l -= step;
                    if step.abs() <= 1e-16 * l {
                        break;
                    }
                }
                Some(l.exp())
            }
        }
        _ => None,
    }
}

/// `‖c χ_E‖_P` with `|E| = measure`; `None` outside the three named functions.
pub fn indicator_norm(young: &YoungSpec, value: f64, measure: f64) -> Option<f64> {
    if value == 0.0 || measure == 0.0 {
        return Some(0.0);
    }
    young_inverse(young, 1.0 / measure).map(|t| value.abs() / t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambert_branches_invert() {
        for x in [-1.0 / E + 1e-12, -0.3, -0.1, -1e-5] {
            let w = lambert_w_minus1(x).unwrap();
            assert!(w <= -1.0 && (w * w.exp() - x).abs() < 1e-14, "{x} {w}");
        }
        for x in [0.0, 0.5, 3.0, 40.0, 1e6] {
            let w = lambert_w0(x).unwrap();
            assert!((w * w.exp() - x).abs() <= 1e-14 * x.max(1.0), "{x} {w}");
        }
        assert!(lambert_w_minus1(0.1).is_none());
    }

    #[test]
    fn inverses_round_trip() {
        for spec in [YoungSpec::EXP_L, YoungSpec::EXP_L_OVER_LOG_L, YoungSpec::L_LOG_L_LOGLOG_L] {
            let p = spec.young();
            for y in [0.01, 1.0, 2.0, 10.0, 40.0, 1e3, 1e8] {
                let t = young_inverse(&spec, y).unwrap();
                assert!((p.eval(t).unwrap() - y).abs() <= 1e-12 * y, "{spec:?} {y} {t}");
            }
        }
    }

    #[test]
    fn three_chi_in_exp_l() {
        let n = indicator_norm(&YoungSpec::EXP_L, 3.0, 1.0).unwrap();
        assert!((n - 4.328085).abs() < 1e-6);
        assert_eq!(indicator_norm(&YoungSpec::EXP_L, 0.0, 1.0), Some(0.0));
    }
}
