//! The counterexample velocity `b̃(x) = (0, φ(x₁) g(f⁻¹(x₂)))`, its divergence
//! `φ(x₁) (g′/g)(f⁻¹(x₂))` in sign/log form, and the integrability checks of
//! that divergence in the sub-exponential Orlicz classes.

use alloc::format;
use alloc::vec::Vec;

use crate::cantor_map::{half_width, removed_intervals, Bump, BumpProfile, FMap, Location, Piece};
use crate::error::{Error, Result};
use crate::grid::{Grid, SampledFunction};
use crate::math::{exp, expm1, ln, lgamma, log_add_exp, powf, LogSigned, E};
use crate::monotone::MonotoneMap;
use crate::quadrature::adaptive;

/// A `C^∞` plateau: 1 on `plateau`, 0 outside `support`, built from the
/// `exp(−1/t)` transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub plateau: (f64, f64),
    pub support: (f64, f64),
}

impl Default for Cutoff {
    fn default() -> Self {
        Cutoff { plateau: (0.0, 1.0), support: (-1.0, 2.0) }
    }
}

/// `log τ(t)` with `τ(t) = e^{−1/t} / (e^{−1/t} + e^{−1/(1−t)})`.
fn log_step(t: f64) -> f64 {
    if t <= 0.0 {
        f64::NEG_INFINITY
    } else if t >= 1.0 {
        0.0
    } else {
        let a = -1.0 / t;
        a - log_add_exp(a, -1.0 / (1.0 - t))
    }
}

fn step_derivative(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let tau = exp(log_step(t));
    tau * (1.0 - tau) * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t)))
}

impl Cutoff {
    pub fn new(plateau: (f64, f64), support: (f64, f64)) -> Result<Self> {
        if !(support.0 < plateau.0 && plateau.0 <= plateau.1 && plateau.1 < support.1) {
            return Err(Error::param("cutoff", "need support.0 < plateau.0 <= plateau.1 < support.1"));
        }
        Ok(Cutoff { plateau, support })
    }

    fn rising(&self, x: f64) -> f64 {
        (x - self.support.0) / (self.plateau.0 - self.support.0)
    }

    fn falling(&self, x: f64) -> f64 {
        (self.support.1 - x) / (self.support.1 - self.plateau.1)
    }

    pub fn log_value(&self, x: f64) -> f64 {
        if x < self.plateau.0 {
            log_step(self.rising(x))
        } else if x > self.plateau.1 {
            log_step(self.falling(x))
        } else {
            0.0
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        exp(self.log_value(x))
    }

    pub fn derivative(&self, x: f64) -> f64 {
        if x < self.plateau.0 {
            step_derivative(self.rising(x)) / (self.plateau.0 - self.support.0)
        } else if x > self.plateau.1 {
            -step_derivative(self.falling(x)) / (self.support.1 - self.plateau.1)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone)]
pub struct RoughField2D {
    pub cutoff: Cutoff,
    pub f: FMap,
}

pub fn build_field(profile: BumpProfile, cutoff: Cutoff) -> Result<RoughField2D> {
    Ok(RoughField2D { cutoff, f: FMap::new(profile)? })
}

impl RoughField2D {
    pub fn profile(&self) -> BumpProfile {
        self.f.profile()
    }

    pub fn bump(&self) -> &Bump {
        self.f.bump()
    }

    /// `b̃` at `(x₁, f(t))`, avoiding the inverse.
    pub fn velocity_preimage(&self, x1: f64, t: f64) -> [f64; 2] {
        let phi = self.cutoff.value(x1);
        if phi == 0.0 {
            return [0.0, 0.0];
        }
        [0.0, phi * self.f.derivative(t)]
    }

    pub fn velocity(&self, x: [f64; 2]) -> Result<[f64; 2]> {
        if self.cutoff.value(x[0]) == 0.0 {
            return Ok([0.0, 0.0]);
        }
        Ok(self.velocity_preimage(x[0], self.f.inverse(x[1])?))
    }

    pub fn divergence_log_preimage(&self, x1: f64, t: f64) -> LogSigned {
        let log_phi = self.cutoff.log_value(x1);
        if log_phi == f64::NEG_INFINITY {
            return LogSigned::ZERO;
        }
        self.bump().log_ratio(t).scale_log(log_phi)
    }

    pub fn divergence_log(&self, x: [f64; 2]) -> Result<LogSigned> {
        if self.cutoff.value(x[0]) == 0.0 {
            return Ok(LogSigned::ZERO);
        }
        Ok(self.divergence_log_preimage(x[0], self.f.inverse(x[1])?))
    }

    /// `div b̃` on a grid; only for profiles whose divergence is representable.
    pub fn sampled_divergence(&self, grid: Grid) -> Result<SampledFunction> {
        if self.profile().is_exact() {
            return Err(Error::Precondition("the exact profile's divergence overflows f64".into()));
        }
        let mut values = Vec::with_capacity(grid.len());
        for k in 0..grid.len() {
            let (x1, x2) = grid.point(k);
            values.push(self.divergence_log([x1, x2])?.to_f64());
        }
        SampledFunction::new(grid, values)
    }
}

/// The two factors of the exact profile: `log g = −e^E` and
/// `log|g′/g| = E + log q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactFactors {
    pub big_e: f64,
    /// `log E`, finite even when `E` overflows.
    pub log_big_e: f64,
    pub log_q: f64,
}

/// Exact-profile factors at a point of a gap with relative coordinate `u`.
pub fn exact_gap_factors(generation: u32, u: f64, one_minus_u2: f64) -> ExactFactors {
    let r = half_width(generation);
    let w = 1.0 / (r * r * one_minus_u2);
    ExactFactors { big_e: exp(w), log_big_e: w, log_q: w + ln(2.0 * u.abs() * r * w * w) }
}

/// Exact-profile factors at distance `t` from `[0, 1]` in the tails.
pub fn exact_tail_factors(t: f64) -> ExactFactors {
    let v = 1.0 / (t * t);
    ExactFactors { big_e: exp(v), log_big_e: v, log_q: v + ln(2.0 / (t * t * t).abs()) }
}

pub fn exact_factors_at(x: f64) -> Option<ExactFactors> {
    match crate::cantor_map::piece(x) {
        Piece::LeftTail(t) | Piece::RightTail(t) => Some(exact_tail_factors(t)),
        Piece::Inner(loc @ Location::Gap { .. }) => {
            let (k, u) = loc.gap_coordinate()?;
            Some(exact_gap_factors(k, u, loc.one_minus_u2()?))
        }
        Piece::Inner(Location::Cantor { .. }) => None,
    }
}

/// Constants of the integrability argument for a fixed `γ ∈ (1, 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrliczConstants {
    pub gamma: f64,
    /// `A = (γ−1)²/8`
    pub a: f64,
    /// `A e^{1−γ} γ^γ`
    pub c1: f64,
}

impl OrliczConstants {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0 && gamma < 2.0) {
            return Err(Error::param("gamma", format!("must lie in (1, 2), got {gamma}")));
        }
        let a = (gamma - 1.0) * (gamma - 1.0) / 8.0;
        Ok(OrliczConstants { gamma, a, c1: a * exp(1.0 - gamma) * powf(gamma, gamma) })
    }

    /// `eγ^γ`
    pub fn pointwise_bound(&self) -> f64 {
        E * powf(self.gamma, self.gamma)
    }

    /// `r = log(c₁ q / ℓ^γ)` where `ℓ = log⁺(inner · Z)`, `log Z = E + log q`.
    fn log_ratio_excess(&self, f: ExactFactors, log_inner: f64) -> (f64, f64) {
        if f.log_q == f64::NEG_INFINITY {
            // Z = 0 at a bump center.
            return (f64::NEG_INFINITY, f64::NEG_INFINITY);
        }
        let log_z = f.big_e + f.log_q;
        let log_ell = if f.big_e.is_finite() {
            ln((log_inner + log_z).max(1.0))
        } else {
            // ℓ = E (1 + o(1)) once E overflows.
            f.log_big_e
        };
        let log_x = ln(self.c1) + log_z - self.gamma * log_ell;
        (log_x, ln(self.c1) + f.log_q - self.gamma * log_ell)
    }

    /// `log[exp(c₁Z/(log⁺AZ)^γ) · g]` and the bracket `κ` with `log = e^E κ`.
    pub fn log_product(&self, f: ExactFactors) -> (f64, f64) {
        let (_, r) = self.log_ratio_excess(f, ln(self.a));
        let kappa = expm1(r);
        (scaled(f.big_e, kappa), kappa)
    }

    /// `log[(exp(c₁Z/(log⁺(inner·Z))^γ) − 1) · g^{with_g}]`.
    pub fn log_modular_density(&self, f: ExactFactors, log_inner: f64, with_g: bool) -> f64 {
        let (log_x, r) = self.log_ratio_excess(f, log_inner);
        if log_x == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        if !with_g {
            return log_expm1_from_log(log_x);
        }
        if log_x < 5.0 {
            return log_expm1_from_log(log_x) - exp(f.big_e);
        }
        // x − e^E = e^E (e^r − 1), then the log(1 − e^{−x}) correction.
        let x = exp(log_x);
        scaled(f.big_e, expm1(r)) + ln(-expm1(-x))
    }
}

/// `e^E · κ` without forming `0 · ∞`.
fn scaled(big_e: f64, kappa: f64) -> f64 {
    if kappa == 0.0 {
        0.0
    } else {
        exp(big_e) * kappa
    }
}

fn log_expm1_from_log(log_x: f64) -> f64 {
    if log_x < -30.0 {
        log_x
    } else if log_x < 5.0 {
        ln(expm1(exp(log_x)))
    } else {
        let x = exp(log_x);
        x + ln(-expm1(-x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductBoundReport {
    pub gamma: f64,
    pub k_max: u32,
    /// Largest sampled `log[exp(c₁|g′/g|/(log⁺|Ag′/g|)^γ) g]`.
    pub max_log_product: f64,
    /// Largest sampled bracket `κ`; negative brackets force the product to 0.
    pub max_bracket: f64,
    /// `eγ^γ`
    pub bound: f64,
    pub samples: usize,
    pub holds: bool,
}

/// Samples the exact-profile pointwise product on every gap of generation
/// `≤ k_max`, at midpoints of `samples_per_interval` equal cells.
pub fn pointwise_product_bound_check(gamma: f64, k_max: u32, samples_per_interval: usize) -> Result<ProductBoundReport> {
    let c = OrliczConstants::new(gamma)?;
    if samples_per_interval == 0 {
        return Err(Error::param("samples_per_interval", "must be positive"));
    }
    let bump = Bump::new(BumpProfile::Exact, true)?;
    let mut max_log_product = f64::NEG_INFINITY;
    let mut max_bracket = f64::NEG_INFINITY;
    let mut samples = 0;
    for gap in removed_intervals(k_max)? {
        for i in 0..samples_per_interval {
            let u = -1.0 + 2.0 * (i as f64 + 0.5) / samples_per_interval as f64;
            let x = gap.center + u * gap.half_width;
            let Some(factors) = exact_factors_at(x) else {
                continue;
            };
            let (log_p, kappa) = c.log_product(factors);
            // The log-domain value of g itself must agree with the factorization.
            debug_assert!(bump.log_value(x) == -exp(factors.big_e));
            max_log_product = max_log_product.max(log_p);
            max_bracket = max_bracket.max(kappa);
            samples += 1;
        }
    }
    let bound = c.pointwise_bound();
    Ok(ProductBoundReport {
        gamma,
        k_max,
        max_log_product,
        max_bracket,
        bound,
        samples,
        holds: max_log_product <= bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrliczIntegral {
    pub gamma: f64,
    pub k_max: u32,
    /// `interior + boundary + far_tail`.
    pub value: f64,
    /// `3 Σ_{k>k_max} 2^{k−1} 3^{−k} exp(eγ^γ)`.
    pub tail_bound: f64,
    /// Gaps of generation `≤ k_max`.
    pub interior: f64,
    /// `[−1, 0) ∪ (1, 2]`
    pub boundary: f64,
    /// `(−∞, −1) ∪ (2, ∞)`
    pub far_tail: f64,
}

/// `∫ 3[exp(c₁|g′/g|/(log⁺|Ag′/g|)^γ) − 1] g` for the exact profile.
///
/// Each gap of generation `≤ k_max` is integrated by adaptive quadrature in
/// its relative coordinate; the two outer pieces are mirror images and are
/// integrated once.
pub fn orlicz_divergence_integral(gamma: f64, k_max: u32) -> Result<OrliczIntegral> {
    let c = OrliczConstants::new(gamma)?;
    let log_a = ln(c.a);
    let density = |f: ExactFactors| exp(c.log_modular_density(f, log_a, true));

    let mut interior = 0.0;
    for gap in removed_intervals(k_max)? {
        let k = gap.generation;
        let r = gap.half_width;
        let res = adaptive(
            |u: f64| {
                let q = (1.0 - u) * (1.0 + u);
                if q <= 0.0 {
                    return 0.0;
                }
                density(exact_gap_factors(k, u, q)) * r
            },
            -1.0,
            1.0,
            1e-300,
            1e-12,
            200,
        );
        interior += 3.0 * res.value;
    }
    let side = |s: f64| if s <= 0.0 { 0.0 } else { density(exact_tail_factors(s)) };
    let boundary = 2.0 * 3.0 * adaptive(side, 0.0, 1.0, 1e-300, 1e-12, 400).value;
    let far_tail = 2.0 * 3.0 * adaptive(|sig| if sig <= 0.0 { 0.0 } else { side(1.0 / sig) / (sig * sig) }, 0.0, 1.0, 1e-300, 1e-12, 400).value;

    let tail_bound = 3.0 * exp(c.pointwise_bound()) * powf(2.0 / 3.0, k_max as f64);
    Ok(OrliczIntegral { gamma, k_max, value: interior + boundary + far_tail, tail_bound, interior, boundary, far_tail })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryCheck {
    pub gamma: f64,
    /// `∫_{−∞}^{−1} [exp(c₁|g′/g|/(log⁺(c₁|g′/g|))^γ) − 1] dt`
    pub quadrature: f64,
    /// `Ã = 2 c₁ exp(e^{1+e})`
    pub a_tilde: f64,
    /// `log Σ_{l≥1} Ã^l / (l! (3l−1))`, or a lower estimate of it (one term).
    pub log_series: f64,
    pub series_is_lower_estimate: bool,
    pub holds: bool,
}

/// Series summed exactly in log domain up to this `Ã`.
const SERIES_EXACT_LIMIT: f64 = 1e6;

/// `log Σ_{l≥1} a^l / (l! (3l−1))`; the second value is true when only the
/// largest term was used (a lower estimate).
pub fn log_claim_series(a: f64) -> (f64, bool) {
    let term = |l: f64| l * ln(a) - lgamma(l + 1.0) - ln(3.0 * l - 1.0);
    if a > SERIES_EXACT_LIMIT {
        let l = libm::floor(a).max(1.0);
        return (term(l), true);
    }
    let l_max = (a + 40.0 * libm::sqrt(a) + 60.0) as u64;
    let mut acc = f64::NEG_INFINITY;
    for l in 1..=l_max {
        acc = log_add_exp(acc, term(l as f64));
    }
    (acc, false)
}

pub fn boundary_integral_check(gamma: f64) -> Result<BoundaryCheck> {
    let c = OrliczConstants::new(gamma)?;
    let log_c1 = ln(c.c1);
    let quadrature = boundary_quadrature_beyond(&c, log_c1, 1.0);
    let a_tilde = 2.0 * c.c1 * exp(exp(1.0 + E));
    let (log_series, lower) = log_claim_series(a_tilde);
    Ok(BoundaryCheck {
        gamma,
        quadrature,
        a_tilde,
        log_series,
        series_is_lower_estimate: lower,
        holds: ln(quadrature) <= log_series,
    })
}

/// `∫_{−∞}^{−R}` of the boundary integrand, via `t = −R/σ`.
fn boundary_quadrature_beyond(c: &OrliczConstants, log_c1: f64, r: f64) -> f64 {
    let integrand = |s: f64| exp(c.log_modular_density(exact_tail_factors(-s), log_c1, false));
    adaptive(
        |sig| if sig <= 0.0 { 0.0 } else { integrand(r / sig) * r / (sig * sig) },
        0.0,
        1.0,
        1e-300,
        1e-12,
        400,
    )
    .value
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailDecay {
    pub radius: f64,
    /// Quadrature of the boundary integrand over `(−∞, −R)`.
    pub quadrature: f64,
    /// `e^{a/R³} a / (2R²)` with `a = 2c₁ exp(e^{1/R²} + 1/R²)`.
    pub analytic_bound: f64,
}

/// Compares the far part of the boundary integral with its `1/R²` decay bound.
pub fn boundary_tail_decay(gamma: f64, radius: f64) -> Result<TailDecay> {
    let c = OrliczConstants::new(gamma)?;
    if !(radius >= 1.0) {
        return Err(Error::param("radius", "must be at least 1"));
    }
    let quadrature = boundary_quadrature_beyond(&c, ln(c.c1), radius);
    let v = 1.0 / (radius * radius);
    let a = 2.0 * c.c1 * exp(exp(v) + v);
    let r3 = radius * radius * radius;
    Ok(TailDecay { radius, quadrature, analytic_bound: exp(a / r3) * a / (2.0 * radius * radius) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor_map::Location;

    fn demo_field() -> RoughField2D {
        build_field(BumpProfile::demo(0.5), Cutoff::default()).unwrap()
    }

    #[test]
    fn cutoff_shape() {
        let c = Cutoff::default();
        for &x in &[0.0, 0.3, 1.0] {
            assert_eq!(c.value(x), 1.0);
        }
        for &x in &[-1.0, -3.0, 2.0, 5.0] {
            assert_eq!(c.value(x), 0.0);
        }
        let mut prev = 0.0;
        for i in 0..=100 {
            let x = -1.0 + i as f64 / 100.0;
            let v = c.value(x);
            assert!(v >= prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
        for &x in &[-0.7, -0.2, 1.4, 1.9] {
            let d = 1e-6;
            let fd = (c.value(x + d) - c.value(x - d)) / (2.0 * d);
            assert!((fd - c.derivative(x)).abs() < 1e-7, "x={x}");
        }
    }

    #[test]
    fn velocity_examples() {
        let b = demo_field();
        assert_eq!(b.velocity([5.0, 0.3]).unwrap(), [0.0, 0.0]);
        let v = b.velocity([0.5, b.f.eval(0.5)]).unwrap();
        assert_eq!(v[0], 0.0);
        assert!((v[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn divergence_examples() {
        let b = demo_field();
        assert!(b.divergence_log([3.0, 0.1]).unwrap().is_zero());
        assert!(b.divergence_log_preimage(0.5, 0.5).is_zero());
        // Exact profile, generation 1, a quarter of the way in from the center.
        let exact = build_field(BumpProfile::Exact, Cutoff::default()).unwrap();
        let r = 1.0 / 6.0;
        let t = 0.5 + r / 2.0;
        let d = exact.divergence_log_preimage(0.5, t);
        assert_eq!(d.sign, -1);
        let w: f64 = 48.0;
        let expect = w.exp() + w + ln(2.0 * (r / 2.0) * w * w);
        assert!((d.log_magnitude - expect).abs() < 1e-9 * expect);
        assert!((ln(2.0 * (r / 2.0) * w * w) - ln(48.0 * 48.0 / 6.0)).abs() < 1e-12);
    }

    #[test]
    fn divergence_sign_flips_across_center() {
        let b = demo_field();
        for gap in removed_intervals(4).unwrap() {
            let l = b.divergence_log_preimage(0.5, gap.center - 0.3 * gap.half_width);
            let r = b.divergence_log_preimage(0.5, gap.center + 0.3 * gap.half_width);
            assert_eq!((l.sign, r.sign), (1, -1));
        }
    }

    #[test]
    fn divergence_matches_finite_differences() {
        let b = demo_field();
        for &(x1, t) in &[(0.5, 0.45), (0.2, 0.55), (-0.5, 0.15), (1.5, 0.87), (0.7, -0.6), (0.3, 1.8)] {
            let x2 = b.f.eval(t);
            let d = 1e-5 * b.f.derivative(t).max(1e-3);
            let fd = (b.velocity([x1, x2 + d]).unwrap()[1] - b.velocity([x1, x2 - d]).unwrap()[1]) / (2.0 * d);
            let an = b.divergence_log([x1, x2]).unwrap().to_f64();
            assert!((fd - an).abs() <= 1e-4 * an.abs(), "x1={x1} t={t}: {fd} vs {an}");
        }
    }

    #[test]
    fn velocity_is_bounded_by_one() {
        let b = demo_field();
        let mut sup: f64 = 0.0;
        for i in 0..100 {
            for j in 0..100 {
                let x1 = -2.0 + 5.0 * i as f64 / 99.0;
                let t = -2.0 + 5.0 * j as f64 / 99.0;
                sup = sup.max(b.velocity_preimage(x1, t)[1].abs());
            }
        }
        assert!(sup <= 1.0);
    }

    #[test]
    fn exact_factors_match_log_ratio() {
        let bump = Bump::new(BumpProfile::Exact, true).unwrap();
        for &x in &[0.55, 0.4, 0.19, 0.95, -0.8, 1.6, -3.0] {
            let f = exact_factors_at(x).unwrap();
            let lr = bump.log_ratio(x);
            if !f.big_e.is_finite() {
                assert_eq!(lr.log_magnitude, f64::INFINITY);
                continue;
            }
            assert!((lr.log_magnitude - (f.big_e + f.log_q)).abs() <= 1e-12 * lr.log_magnitude.abs());
        }
        assert!(exact_factors_at(0.25).is_none());
        assert!(matches!(crate::cantor_map::locate(0.25).0, Location::Cantor { .. }));
    }

    #[test]
    fn product_bound_holds() {
        let rep = pointwise_product_bound_check(1.5, 6, 50).unwrap();
        assert!(rep.holds);
        assert!(rep.max_bracket < 0.0);
        assert!((rep.bound - 4.99).abs() < 0.01);
        assert!(pointwise_product_bound_check(0.5, 3, 5).is_err());
    }

    #[test]
    fn modular_density_matches_direct_where_representable() {
        let c = OrliczConstants::new(1.5).unwrap();
        for &s in &[0.8, 1.0, 2.0, 10.0] {
            let f = exact_tail_factors(s);
            let g = exp(-exp(f.big_e));
            let z = exp(f.big_e + f.log_q);
            let ell = ln(c.a * z).max(1.0);
            let direct = expm1(c.c1 * z / powf(ell, 1.5)) * g;
            let logd = c.log_modular_density(f, ln(c.a), true);
            assert!((exp(logd) - direct).abs() <= 1e-10 * direct, "s={s}");
        }
    }

    #[test]
    fn series_log_sum_matches_direct() {
        for &a in &[0.5, 3.0, 40.0] {
            let mut direct = 0.0;
            let mut term = 1.0;
            for l in 1..400 {
                term *= a / l as f64;
                direct += term / (3.0 * l as f64 - 1.0);
            }
            let (ls, lower) = log_claim_series(a);
            assert!(!lower);
            assert!((ls - ln(direct)).abs() < 1e-12);
        }
        let (ls, lower) = log_claim_series(1e16);
        assert!(lower && ls > 1e15);
    }

    #[test]
    fn boundary_checks() {
        for &g in &[1.2, 1.5, 1.8] {
            let b = boundary_integral_check(g).unwrap();
            assert!(b.holds && b.quadrature.is_finite() && b.quadrature > 0.0);
        }
        let d = boundary_tail_decay(1.5, 10.0).unwrap();
        assert!(d.quadrature <= d.analytic_bound);
    }

    #[test]
    fn orlicz_integral_is_finite() {
        let r = orlicz_divergence_integral(1.5, 4).unwrap();
        assert!(r.value.is_finite() && r.value > 0.0);
        assert_eq!(r.interior, 0.0);
        let expect = 3.0 * exp(E * powf(1.5, 1.5)) * powf(2.0 / 3.0, 4.0);
        assert!((r.tail_bound - expect).abs() < 1e-12 * expect);
    }
}
