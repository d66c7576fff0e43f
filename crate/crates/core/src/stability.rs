//! The triple-log Gronwall comparator `α*` and the quantitative bounds
//! built on it.
//!
//! With `K(s) = 16e ∫₀^s β`, `α*(s) = exp(−exp(exp(lll(1/ε) − K)))`, evaluated as
//! `ε exp(−L₁ expm1(L₂ expm1(−K)))` where `L₁ = log(1/ε)`, `L₂ = log L₁`, so
//! that `α*(0) = ε` holds exactly.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::SampledFunction;
use crate::math::{exp, expm1, ln, powf, E};
use crate::solver::{solve_regularized, MollifierSpec, ScalarField, SolverOptions, SpaceTimeSolution, TransportProblem};
use crate::young::{luxemburg_norm, YoungFunction};

/// `16e`
pub const GROWTH: f64 = 16.0 * E;

/// `e^{e^e}`; `1/ε` must exceed it.
pub fn epsilon_ceiling() -> f64 {
    exp(-exp(E))
}

/// `β(tₙ) = ‖B₁(tₙ)‖_P + ‖B₂(tₙ)‖_∞`
pub fn beta_series(b1: &[SampledFunction], b2: &[SampledFunction], young: &YoungFunction) -> Result<Vec<f64>> {
    if b1.len() != b2.len() {
        return Err(Error::param("b2", format!("{} snapshots against {} for B₁", b2.len(), b1.len())));
    }
    b1.iter().zip(b2).map(|(a, b)| Ok(luxemburg_norm(a, young)? + b.sup_norm())).collect()
}

/// Grid samples of the split of `problem` at `times`.
pub fn split_series(problem: &TransportProblem, times: &[f64]) -> Result<(Vec<SampledFunction>, Vec<SampledFunction>)> {
    let split = problem.split.as_ref().ok_or_else(|| Error::Precondition("problem has no divergence split".into()))?;
    let sample = |f: &dyn ScalarField, t: f64| SampledFunction::from_fn(problem.grid().clone(), |x, y| f.value(t, [x, y]));
    let b1 = times.iter().map(|&t| sample(split.b1.as_ref(), t)).collect::<Result<_>>()?;
    let b2 = times.iter().map(|&t| sample(split.b2.as_ref(), t)).collect::<Result<_>>()?;
    Ok((b1, b2))
}

pub fn cumulative_trapezoid(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    for n in 0..times.len() {
        if n > 0 {
            acc += 0.5 * (times[n] - times[n - 1]) * (values[n] + values[n - 1]);
        }
        out.push(acc);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparator {
    pub epsilon: f64,
    l1: f64,
    l2: f64,
}

impl Comparator {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::Precondition(format!("Gronwall ε must be positive, got {epsilon:e}")));
        }
        let l1 = -ln(epsilon);
        if !(l1 > exp(E)) {
            return Err(Error::Precondition(format!(
                "Gronwall ε = {epsilon:e} violates 1/ε > e^(e^e) (ε < {:e})",
                epsilon_ceiling()
            )));
        }
        Ok(Comparator { epsilon, l1, l2: ln(l1) })
    }

    /// `log α*` given `∫₀^s β`.
    pub fn log_alpha_star(&self, beta_integral: f64) -> f64 {
        -self.l1 * exp(self.l2 * expm1(-GROWTH * beta_integral))
    }

    pub fn alpha_star(&self, beta_integral: f64) -> f64 {
        self.epsilon * exp(-self.l1 * expm1(self.l2 * expm1(-GROWTH * beta_integral)))
    }

    /// `α* log(1/α*) loglog(1/α*)` from the closed forms of both logs.
    pub fn rate(&self, beta_integral: f64) -> f64 {
        let k = exp(-GROWTH * beta_integral);
        let log_inv = self.l1 * exp(self.l2 * (k - 1.0));
        self.alpha_star(beta_integral) * log_inv * self.l2 * k
    }
}

/// `α*(tₙ)` with `∫β` by the trapezoid rule.
pub fn gronwall_comparator(epsilon: f64, beta: &[f64], times: &[f64]) -> Result<Vec<f64>> {
    check_series(beta, times)?;
    let c = Comparator::new(epsilon)?;
    Ok(cumulative_trapezoid(times, beta).into_iter().map(|b| c.alpha_star(b)).collect())
}

fn check_series(beta: &[f64], times: &[f64]) -> Result<()> {
    if beta.len() != times.len() || times.is_empty() {
        return Err(Error::param("beta", format!("{} values for {} times", beta.len(), times.len())));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("times", "must be strictly increasing"));
    }
    if beta.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
        return Err(Error::param("beta", "must be finite and nonnegative"));
    }
    Ok(())
}

/// `max |α*(tₙ) − ε − 16e ∫₀^{tₙ} β α* log(1/α*) loglog(1/α*)|`, with the
/// right side by the trapezoid rule.
pub fn comparator_identity_residual(epsilon: f64, beta: &[f64], times: &[f64]) -> Result<f64> {
    check_series(beta, times)?;
    let c = Comparator::new(epsilon)?;
    let ib = cumulative_trapezoid(times, beta);
    let integrand: Vec<f64> = ib.iter().zip(beta).map(|(&i, &b)| GROWTH * b * c.rate(i)).collect();
    let rhs = cumulative_trapezoid(times, &integrand);
    Ok(ib.iter().zip(&rhs).fold(0.0f64, |m, (&i, &r)| m.max((c.alpha_star(i) - epsilon - r).abs())))
}

/// Which iterated logarithm the bound is stated with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogDepth {
    /// `log log log`, for `B₁ ∈ Exp(L/log L)`.
    Triple,
    /// `log log`, for `B₁ ∈ Exp L`.
    Double,
}

impl LogDepth {
    /// The iterated log of `1/a` given `log a`; `None` outside its domain.
    pub fn of_inverse(&self, log_a: f64) -> Option<f64> {
        let l1 = -log_a;
        match self {
            LogDepth::Double => (l1 > 0.0).then(|| ln(l1)),
            LogDepth::Triple => (l1 > 1.0).then(|| ln(ln(l1))),
        }
    }

    pub fn young(&self) -> YoungFunction {
        match self {
            LogDepth::Triple => YoungFunction::EXP_L_OVER_LOG_L,
            LogDepth::Double => YoungFunction::EXP_L,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantBound {
    pub depth: LogDepth,
    pub p: f64,
    /// `‖u(0)‖_p^p`
    pub initial: f64,
    /// `‖u‖^p_{L^∞(0,T;L^p)}`
    pub maximum: f64,
    /// `|Δ|` of the iterated logs.
    pub log_change: f64,
    /// `16e ∫₀^T β`
    pub allowance: f64,
    /// `allowance − log_change`
    pub margin: f64,
    /// `M = ‖u‖_{L^∞(L^∞)}`
    pub sup_bound: f64,
    /// `log` of the largest admissible `‖u₀‖_p^p`, from
    /// `α*(T; 32e) < ½ exp(−e^{e+M})`.
    pub log_epsilon_threshold: f64,
    pub smallness_holds: bool,
}

/// `16e ∫β − |L(1/‖u‖^p_{L^∞(L^p)}) − L(1/‖u(0)‖^p_p)|` for the iterated log `L`.
///
/// `u(0)` is the first frame, i.e. the datum the solver actually transported.
pub fn quant_bound_check(u: &SpaceTimeSolution, beta: &[f64], p: f64, depth: LogDepth) -> Result<QuantBound> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param("p", format!("need 1 ≤ p < ∞, got {p}")));
    }
    check_series(beta, &u.times)?;
    let initial = u.frames[0].lp_norm_pow(p);
    let maximum = u.max_lp_norm_pow(p);
    let name = match depth {
        LogDepth::Triple => "‖u‖^p < 1/e for log log log(1/‖u‖^p)",
        LogDepth::Double => "‖u‖^p < 1 for log log(1/‖u‖^p)",
    };
    let (Some(a), Some(b)) = (depth.of_inverse(ln(initial)), depth.of_inverse(ln(maximum))) else {
        return Err(Error::Precondition(format!("{name} (initial {initial:e}, maximum {maximum:e})")));
    };
    let ib = *cumulative_trapezoid(&u.times, beta).last().unwrap();
    let allowance = GROWTH * ib;
    let log_change = (a - b).abs();
    let sup_bound = u.sup_norm();
    // log ε_max = −exp(e^{32e∫β} log Q), Q = e^{e+M} + log 2, for the triple log;
    // the double log drops one exponential.
    let q = exp(E + sup_bound) + ln(2.0);
    let k = exp(2.0 * allowance);
    let log_epsilon_threshold = match depth {
        LogDepth::Triple => -exp(k * ln(q)),
        LogDepth::Double => -q * k,
    };
    Ok(QuantBound {
        depth,
        p,
        initial,
        maximum,
        log_change,
        allowance,
        margin: allowance - log_change,
        sup_bound,
        log_epsilon_threshold,
        smallness_holds: ln(initial) < log_epsilon_threshold,
    })
}

/// Time series of one run against its comparator, `ε = α(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub times: Vec<f64>,
    /// `‖u(t)‖_p^p`
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub alpha_star: Vec<f64>,
    pub p: f64,
    pub gronwall_epsilon: f64,
    pub bound: QuantBound,
    pub domination: Domination,
}

pub fn stability_report(u: &SpaceTimeSolution, beta: &[f64], p: f64, depth: LogDepth) -> Result<StabilityReport> {
    let bound = quant_bound_check(u, beta, p, depth)?;
    let alpha: Vec<f64> = u.frames.iter().map(|f| f.lp_norm_pow(p)).collect();
    let gronwall_epsilon = alpha[0];
    let alpha_star = gronwall_comparator(gronwall_epsilon, beta, &u.times)?;
    let domination = comparator_domination(&alpha, beta, &u.times, bound.sup_bound)?;
    Ok(StabilityReport { times: u.times.clone(), alpha, beta: beta.to_vec(), alpha_star, p, gronwall_epsilon, bound, domination })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domination {
    /// `α` satisfies the integral inequality on the grid, to trapezoid accuracy.
    pub inequality_holds: bool,
    /// `α < exp(−e^{e+M})` and `α ≤ e^{−e}` throughout.
    pub in_regime: bool,
    /// Grid times with `α > α*`.
    pub excursions: usize,
    /// `max (α − α*) / α*`
    pub worst_excess: f64,
}

impl Domination {
    /// Hypotheses hold and `α ≤ α*` everywhere; vacuous when they fail.
    pub fn holds(&self) -> bool {
        !(self.inequality_holds && self.in_regime) || self.excursions == 0
    }
}

/// The discrete Gronwall comparison `α ≤ α*` with `ε = α(0)`, together with
/// whether its hypotheses hold on the run.
pub fn comparator_domination(alpha: &[f64], beta: &[f64], times: &[f64], sup_bound: f64) -> Result<Domination> {
    check_series(beta, times)?;
    if alpha.len() != times.len() || alpha.iter().any(|a| !(*a > 0.0)) {
        return Err(Error::param("alpha", "need one positive value per time"));
    }
    let eps = alpha[0];
    let c = Comparator::new(eps)?;
    let integrand: Vec<f64> = alpha
        .iter()
        .zip(beta)
        .map(|(&a, &b)| {
            let l = -ln(a);
            GROWTH * b * a * l * ln(l)
        })
        .collect();
    let rhs = cumulative_trapezoid(times, &integrand);
    let slack = 1e-12 * eps;
    let inequality_holds = alpha.iter().zip(&rhs).all(|(&a, &r)| a <= eps + r + slack);
    let ceiling = exp(-exp(E + sup_bound)).min(exp(-E));
    let in_regime = alpha.iter().all(|&a| a < ceiling);
    let ib = cumulative_trapezoid(times, beta);
    let (mut excursions, mut worst_excess) = (0, f64::NEG_INFINITY);
    for (&a, &i) in alpha.iter().zip(&ib) {
        let star = c.alpha_star(i);
        worst_excess = worst_excess.max((a - star) / star);
        if a > star * (1.0 + 1e-12) {
            excursions += 1;
        }
    }
    Ok(Domination { inequality_holds, in_regime, excursions, worst_excess })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityRung {
    pub k: u32,
    /// `‖u₀^k − u₀‖_p^p` of the regularized data.
    pub initial_gap: f64,
    /// `‖u^k − u‖_{L^∞(0,T;L^p)}`
    pub difference: f64,
    /// `α*(T)` with `ε` the initial gap.
    pub alpha_star: f64,
    /// `‖u^k − u‖^p_{L^∞(L^p)} ≤ α*(T)`
    pub bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityTable {
    pub p: f64,
    pub beta_integral: f64,
    pub rungs: Vec<StabilityRung>,
    pub monotone: bool,
}

/// Perturb the datum by `2^{−k}·bump` for `k = 1..=rungs` and tabulate the
/// distance of each solution to the unperturbed one.
#[allow(clippy::too_many_arguments)]
pub fn stability_experiment(
    problem: &TransportProblem,
    bump: &SampledFunction,
    rungs: u32,
    p: f64,
    sup_bound: f64,
    beta: &[f64],
    spec: &MollifierSpec,
    opts: SolverOptions,
) -> Result<StabilityTable> {
    let u = solve_regularized(problem, spec, opts)?;
    check_series(beta, &u.times)?;
    let ib = *cumulative_trapezoid(&u.times, beta).last().unwrap();
    let mut out = Vec::new();
    for k in 1..=rungs {
        let scale = powf(2.0, -(k as f64));
        let u0k = problem.u0.zip_with(bump, |a, b| a + scale * b)?;
        if u0k.sup_norm() > sup_bound {
            return Err(Error::Precondition(format!(
                "rung {k}: ‖u₀^k‖_∞ = {} exceeds the uniform bound {sup_bound}",
                u0k.sup_norm()
            )));
        }
        let pk = TransportProblem { u0: u0k, ..problem.clone() };
        let uk = solve_regularized(&pk, spec, opts)?;
        let v = uk.zip_with(&u, |a, b| a - b)?;
        let initial_gap = v.frames[0].lp_norm_pow(p);
        let dp = v.max_lp_norm_pow(p);
        let alpha_star = Comparator::new(initial_gap)?.alpha_star(ib);
        out.push(StabilityRung { k, initial_gap, difference: powf(dp, 1.0 / p), alpha_star, bound_holds: dp <= alpha_star });
    }
    let monotone = out.windows(2).all(|w| w[1].difference < w[0].difference);
    Ok(StabilityTable { p, beta_integral: ib, rungs: out, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Axis, Grid};
    use crate::solver::output_times;

    #[test]
    fn alpha_star_at_zero_is_epsilon() {
        for eps in [1e-8, 1e-20, 1e-100, 1e-300] {
            let c = Comparator::new(eps).unwrap();
            assert_eq!(c.alpha_star(0.0), eps);
        }
    }

    #[test]
    fn rejects_large_epsilon() {
        assert!(Comparator::new(1e-3).is_err());
        assert!(Comparator::new(0.0).is_err());
        assert!(Comparator::new(1e-7).is_ok());
    }

    #[test]
    fn matches_direct_formula() {
        let eps: f64 = 1e-20;
        let c = Comparator::new(eps).unwrap();
        for i in [0.01, 0.05, 0.1] {
            let direct = (-(((1.0 / eps).ln().ln().ln() - GROWTH * i).exp().exp())).exp();
            assert!((c.alpha_star(i) - direct).abs() <= 1e-12 * direct);
        }
        assert!(c.alpha_star(0.1) > c.alpha_star(0.05));
    }

    #[test]
    fn rate_matches_derivative() {
        let c = Comparator::new(1e-20).unwrap();
        let (i, d) = (0.03, 1e-7);
        let fd = (c.alpha_star(i + d) - c.alpha_star(i - d)) / (2.0 * d);
        assert!((fd - GROWTH * c.rate(i)).abs() < 1e-6 * fd);
    }

    #[test]
    fn zero_beta_gives_constant() {
        let t = output_times(1.0, 10);
        let a = gronwall_comparator(1e-10, &[0.0; 11], &t).unwrap();
        assert!(a.iter().all(|&v| v == 1e-10));
        assert_eq!(comparator_identity_residual(1e-10, &[0.0; 11], &t).unwrap(), 0.0);
    }

    #[test]
    fn identity_residual_quarters() {
        let r: Vec<f64> = [1000usize, 2000, 4000]
            .iter()
            .map(|&n| comparator_identity_residual(1e-20, &alloc::vec![1.0; n + 1], &output_times(0.1, n)).unwrap())
            .collect();
        assert!(r[0] / r[1] > 3.5 && r[1] / r[2] > 3.5, "{r:?}");
    }

    #[test]
    fn beta_of_zero_split_is_zero() {
        let g = Grid::plane(Axis::new(0.0, 1.0, 9).unwrap(), Axis::new(0.0, 1.0, 9).unwrap());
        let z = SampledFunction::zeros(g).unwrap();
        let b = beta_series(&[z.clone(), z.clone()], &[z.clone(), z], &YoungFunction::EXP_L_OVER_LOG_L).unwrap();
        assert_eq!(b, [0.0, 0.0]);
    }

    #[test]
    fn iterated_logs() {
        assert!((LogDepth::Double.of_inverse(-E).unwrap() - 1.0).abs() < 1e-15);
        assert!(LogDepth::Triple.of_inverse(-0.5).is_none());
        assert!((LogDepth::Triple.of_inverse(-exp(E)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn domination_of_constant_alpha() {
        let t = output_times(0.1, 20);
        let d = comparator_domination(&[1e-12; 21], &[0.5; 21], &t, 1e-6).unwrap();
        assert!(d.inequality_holds && d.in_regime && d.excursions == 0 && d.holds());
        let mut grow = alloc::vec![1e-12; 21];
        grow[20] = 1e-6;
        let d = comparator_domination(&grow, &[0.0; 21], &t, 1.0).unwrap();
        assert!(!d.inequality_holds && d.excursions == 1 && d.holds());
    }
}
