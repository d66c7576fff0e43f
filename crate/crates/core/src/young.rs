//! Young functions, Luxemburg norms and the Orlicz Hölder / interpolation
//! estimates.
//!
//! `log⁺ t` is `max{1, log t}` throughout (floor 1, not 0). Every constant in
//! [`holder_pairing`] and [`zygmund_interpolation_bound`] depends on it.

use alloc::format;

use crate::error::{Error, Result};
use crate::grid::SampledFunction;
use crate::math::{exp, expm1, ln, log1p_exp, log_plus, log_plus_from_log, powf, E};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum YoungFunction {
    /// `t (log⁺t)^r (log⁺log⁺t)^s`
    Zygmund { r: f64, s: f64 },
    /// `exp(t / (log⁺t)^γ) − 1`
    SubExp { gamma: f64 },
    /// `exp(t / (L₁ ⋯ L_{k−1} L_k^γ)) − 1` with `L_j` the `j`-fold `log⁺`.
    IteratedLog { k: u32, gamma: f64 },
}

impl YoungFunction {
    /// `Exp L`
    pub const EXP_L: YoungFunction = YoungFunction::SubExp { gamma: 0.0 };
    /// `Exp(L / log L)`
    pub const EXP_L_OVER_LOG_L: YoungFunction = YoungFunction::SubExp { gamma: 1.0 };
    /// `L log L log log L`
    pub const L_LOG_L_LOGLOG_L: YoungFunction = YoungFunction::Zygmund { r: 1.0, s: 1.0 };

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        match *self {
            YoungFunction::Zygmund { r, s } if ok(r) && ok(s) => Ok(()),
            YoungFunction::Zygmund { .. } => Err(Error::param("r, s", "must be finite and nonnegative")),
            YoungFunction::SubExp { gamma } if ok(gamma) => Ok(()),
            YoungFunction::SubExp { .. } => Err(Error::param("gamma", "must be finite and nonnegative")),
            YoungFunction::IteratedLog { k, gamma } if k >= 1 && gamma.is_finite() && gamma >= 1.0 => Ok(()),
            YoungFunction::IteratedLog { .. } => Err(Error::param("k, gamma", "need k >= 1 and gamma >= 1")),
        }
    }

    /// `P(t)`; overflows to `+∞` rather than failing.
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.validate()?;
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("Young function evaluated at t = {t}")));
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        match *self {
            YoungFunction::Zygmund { r, s } => {
                let l1 = log_plus(t);
                let l2 = log_plus(l1);
                t * pow_or_one(l1, r) * pow_or_one(l2, s)
            }
            YoungFunction::SubExp { gamma } => expm1(t / pow_or_one(log_plus(t), gamma)),
            YoungFunction::IteratedLog { k, gamma } => {
                let mut denom = 1.0;
                let mut l = t;
                for j in 1..=k {
                    l = log_plus(l);
                    denom *= if j == k { powf(l, gamma) } else { l };
                }
                expm1(t / denom)
            }
        }
    }

    /// `log(P(t) + 1)` from `log t`, with no intermediate overflow.
    pub fn log_eval(&self, log_t: f64) -> f64 {
        if log_t == f64::NEG_INFINITY {
            return 0.0;
        }
        match *self {
            YoungFunction::Zygmund { r, s } => {
                let l1 = log_plus_from_log(log_t);
                let l2 = log_plus(l1);
                log1p_exp(log_t + r * ln(l1) + s * ln(l2))
            }
            YoungFunction::SubExp { gamma } => exp(log_t - gamma * ln(log_plus_from_log(log_t))),
            YoungFunction::IteratedLog { k, gamma } => {
                let mut l = log_plus_from_log(log_t);
                let mut log_denom = 0.0;
                for j in 1..=k {
                    if j > 1 {
                        l = log_plus(l);
                    }
                    log_denom += if j == k { gamma * ln(l) } else { ln(l) };
                }
                exp(log_t - log_denom)
            }
        }
    }
}

fn pow_or_one(base: f64, e: f64) -> f64 {
    if base == 1.0 || e == 0.0 {
        1.0
    } else if e == 1.0 {
        base
    } else {
        powf(base, e)
    }
}

/// `Q(λ) = ∫ P(|f|/λ)` by the grid quadrature.
pub fn modular(f: &SampledFunction, p: &YoungFunction, lambda: f64) -> f64 {
    f.integrate_abs_with(|a| if a == 0.0 { 0.0 } else { p.eval_unchecked(a / lambda) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LuxemburgOptions {
    /// Bisection stops once the bracket is narrower than `rel_tol · λ`.
    pub rel_tol: f64,
}

impl Default for LuxemburgOptions {
    fn default() -> Self {
        LuxemburgOptions { rel_tol: 1e-10 }
    }
}

pub fn luxemburg_norm(f: &SampledFunction, p: &YoungFunction) -> Result<f64> {
    luxemburg_norm_with(f, p, LuxemburgOptions::default())
}

/// Solves `Q(λ) = 1` by bisection and returns the upper bracket end, so the
/// result always satisfies `Q(λ) ≤ 1`.
///
/// For `SubExp` with `γ > 1` the Young function is not monotone and `Q` need
/// not be either; the bracket still contains a crossing of level 1.
pub fn luxemburg_norm_with(f: &SampledFunction, p: &YoungFunction, opts: LuxemburgOptions) -> Result<f64> {
    p.validate()?;
    if !(opts.rel_tol > 0.0) {
        return Err(Error::param("rel_tol", "must be positive"));
    }
    let sup = f.sup_norm();
    let support_weight = f.integrate_abs_with(|a| if a > 0.0 { 1.0 } else { 0.0 });
    if sup == 0.0 || support_weight == 0.0 {
        return Ok(0.0);
    }
    let q = |lambda: f64| modular(f, p, lambda);

    let mut hi = sup;
    let mut doublings = 0;
    while q(hi) > 1.0 {
        hi *= 2.0;
        doublings += 1;
        if !hi.is_finite() || doublings > 2000 {
            return Err(Error::NotInClass { lambda: hi });
        }
    }
    let mut lo = 0.5 * hi;
    while q(lo) <= 1.0 {
        lo *= 0.5;
        if lo == 0.0 {
            return Ok(hi);
        }
    }
    while hi - lo > opts.rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if q(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderPairing {
    /// `∫|fg|`
    pub lhs: f64,
    /// `2 ‖f‖_{L log L loglog L} ‖g‖_{Exp(L/log L)}`
    pub rhs: f64,
}

pub fn holder_pairing(f: &SampledFunction, g: &SampledFunction) -> Result<HolderPairing> {
    f.grid().ensure_same(g.grid())?;
    let lhs = f
        .values()
        .iter()
        .zip(g.values())
        .zip(f.weights())
        .map(|((a, b), w)| w * (a * b).abs())
        .sum();
    let nf = luxemburg_norm(f, &YoungFunction::L_LOG_L_LOGLOG_L)?;
    let ng = luxemburg_norm(g, &YoungFunction::EXP_L_OVER_LOG_L)?;
    Ok(HolderPairing { lhs, rhs: 2.0 * nf * ng })
}

/// `2e‖f‖₁ (log(e+‖f‖∞) + |log‖f‖₁|)(loglog(eᵉ+‖f‖∞) + |log|log‖f‖₁||)`.
///
/// The term `|log|log‖f‖₁||` blows up as `‖f‖₁ → 1`; when `|log‖f‖₁| < 1e-12`
/// (quadrature roundoff around 1) it is taken to be 0. The estimate still
/// holds there since the bracket it protects is then `loglog(eᵉ+‖f‖∞) ≥ 1`.
pub fn zygmund_interpolation_bound(f: &SampledFunction) -> Result<f64> {
    let n1 = f.lp_norm(1.0);
    if n1 == 0.0 {
        return Err(Error::Domain("interpolation bound needs a nonzero function".into()));
    }
    let ninf = f.sup_norm();
    let log_n1 = ln(n1);
    let loglog_n1 = if log_n1.abs() < 1e-12 { 0.0 } else { ln(log_n1.abs()).abs() };
    let ee = exp(E);
    Ok(2.0 * E * n1 * (ln(E + ninf) + log_n1.abs()) * (ln(ln(ee + ninf)) + loglog_n1))
}

/// `eγ^γ / e^γ`: the constant in `t/(log⁺t)^γ ≤ C s/(log⁺s)^γ` for `t < s`.
pub fn quasi_monotone_constant(gamma: f64) -> f64 {
    E * powf(gamma, gamma) / exp(gamma)
}

/// `t / (log⁺t)^γ`
pub fn sub_exp_argument(t: f64, gamma: f64) -> f64 {
    t / pow_or_one(log_plus(t), gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Axis, Grid};
    use crate::math::ln1p;

    fn unit_grid(n: usize) -> Grid {
        Grid::line(Axis::periodic(0.0, 1.0, n).unwrap())
    }

    #[test]
    fn eval_examples() {
        let p = YoungFunction::SubExp { gamma: 1.5 };
        assert_eq!(p.eval(0.0).unwrap(), 0.0);
        let e1 = YoungFunction::EXP_L.eval(1.0).unwrap();
        assert!((e1 - (E - 1.0)).abs() < 1e-15);
        let e2 = E * E;
        let v = YoungFunction::EXP_L_OVER_LOG_L.eval(e2).unwrap();
        assert!((v - (exp(e2 / 2.0) - 1.0)).abs() < 1e-12 * v);
        assert!((v - 39.23).abs() < 0.01);
        assert_eq!(YoungFunction::L_LOG_L_LOGLOG_L.eval(1.0).unwrap(), 1.0);
        assert!(p.eval(-1.0).is_err());
    }

    #[test]
    fn log_eval_examples() {
        assert_eq!(YoungFunction::SubExp { gamma: 1.5 }.log_eval(f64::NEG_INFINITY), 0.0);
        assert!((YoungFunction::EXP_L.log_eval(ln(5.0)) - 5.0).abs() < 1e-14);
        let v = YoungFunction::EXP_L_OVER_LOG_L.log_eval(100.0);
        assert!((v - exp(100.0) / 100.0).abs() < 1e-12 * v);
        assert!((v - 2.688e41).abs() < 1e-3 * v);
    }

    #[test]
    fn log_eval_agrees_with_eval() {
        let kinds = [
            YoungFunction::Zygmund { r: 1.0, s: 1.0 },
            YoungFunction::Zygmund { r: 2.0, s: 0.5 },
            YoungFunction::SubExp { gamma: 0.0 },
            YoungFunction::SubExp { gamma: 1.5 },
            YoungFunction::IteratedLog { k: 2, gamma: 1.0 },
            YoungFunction::IteratedLog { k: 3, gamma: 1.7 },
        ];
        for p in kinds {
            for &t in &[1e-3, 0.5, 1.0, 2.0, E, 5.0, 20.0, 100.0, 500.0] {
                let direct = ln1p(p.eval(t).unwrap());
                let logd = p.log_eval(ln(t));
                assert!((direct - logd).abs() <= 1e-12 * direct.abs().max(1e-300), "{p:?} t={t}");
            }
        }
    }

    #[test]
    fn iterated_log_with_one_level_is_sub_exp() {
        let a = YoungFunction::IteratedLog { k: 1, gamma: 1.3 };
        let b = YoungFunction::SubExp { gamma: 1.3 };
        for &t in &[0.1, 3.0, 40.0] {
            assert_eq!(a.eval(t).unwrap(), b.eval(t).unwrap());
        }
    }

    #[test]
    fn zero_function_has_zero_norm() {
        let z = SampledFunction::zeros(unit_grid(16)).unwrap();
        for p in [YoungFunction::EXP_L, YoungFunction::L_LOG_L_LOGLOG_L] {
            assert_eq!(luxemburg_norm(&z, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn indicator_examples() {
        let g = Grid::line(Axis::new(0.0, 1.0, 101).unwrap());
        let three = SampledFunction::from_fn(g.clone(), |_, _| 3.0).unwrap();
        let n = luxemburg_norm(&three, &YoungFunction::EXP_L).unwrap();
        assert!((n - 3.0 / core::f64::consts::LN_2).abs() < 1e-9 * n);
        assert!((n - 4.328085).abs() < 1e-6);
        let one = SampledFunction::from_fn(g, |_, _| 1.0).unwrap();
        let n = luxemburg_norm(&one, &YoungFunction::L_LOG_L_LOGLOG_L).unwrap();
        assert!((n - 1.0).abs() < 1e-9);
    }

    #[test]
    fn holder_indicator_example() {
        let g = Grid::line(Axis::new(0.0, 1.0, 101).unwrap());
        let one = SampledFunction::from_fn(g.clone(), |_, _| 1.0).unwrap();
        let hp = holder_pairing(&one, &one).unwrap();
        assert!((hp.lhs - 1.0).abs() < 1e-14);
        assert!((hp.rhs - 2.0 / core::f64::consts::LN_2).abs() < 1e-8);
        let z = SampledFunction::zeros(g).unwrap();
        let hp = holder_pairing(&z, &one).unwrap();
        assert_eq!((hp.lhs, hp.rhs), (0.0, 0.0));
    }

    #[test]
    fn holder_rejects_grid_mismatch() {
        let a = SampledFunction::zeros(unit_grid(8)).unwrap();
        let b = SampledFunction::zeros(unit_grid(9)).unwrap();
        assert!(matches!(holder_pairing(&a, &b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn interpolation_bound_for_unit_indicator() {
        let g = Grid::line(Axis::new(0.0, 1.0, 101).unwrap());
        let one = SampledFunction::from_fn(g, |_, _| 1.0).unwrap();
        let b = zygmund_interpolation_bound(&one).unwrap();
        let expect = 2.0 * E * ln(E + 1.0) * ln(ln(exp(E) + 1.0));
        assert!((b - expect).abs() < 1e-12);
        assert!((b - 7.3055).abs() < 1e-3);
        assert!(zygmund_interpolation_bound(&SampledFunction::zeros(unit_grid(4)).unwrap()).is_err());
    }

    #[test]
    fn not_in_class_is_reported() {
        // A spike near f64::MAX on a wide cell keeps the modular above 1 up to overflow.
        let g = Grid::line(Axis::periodic(0.0, 100.0, 4).unwrap());
        let f = SampledFunction::new(g, alloc::vec![1e308, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(luxemburg_norm(&f, &YoungFunction::EXP_L), Err(Error::NotInClass { .. })));
    }

    #[test]
    fn quasi_monotone_constant_value() {
        assert!((quasi_monotone_constant(1.0) - 1.0).abs() < 1e-15);
        let c = quasi_monotone_constant(1.5);
        assert!((c - E * powf(1.5, 1.5) / exp(1.5)).abs() < 1e-15);
    }
}
