//! Seeded problem families for the solver and stability suites.
//!
//! Every family lives on `[−1, 1]²`: either periodic, or with fields supported
//! well inside the box so that characteristics started at grid nodes never
//! leave.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::flows::Bump2D;
use crate::grid::{Axis, Grid, SampledFunction};
use crate::math::{atan2, cos, exp, floor, ln, sin, sqrt, PI};
use crate::solver::{DivergenceSplit, ScalarField, TransportProblem, VelocityField, Zero};

pub fn unit_box(n: usize) -> Result<Grid> {
    Ok(Grid::plane(Axis::new(-1.0, 1.0, n)?, Axis::new(-1.0, 1.0, n)?))
}

pub fn periodic_box(n: usize) -> Result<Grid> {
    Ok(Grid::plane(Axis::periodic(-1.0, 1.0, n)?, Axis::periodic(-1.0, 1.0, n)?))
}

/// `a sin(π k·x + φ)`, periodic on `[−1, 1]²` for integer `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub wave: [f64; 2],
    pub amplitude: f64,
    pub phase: f64,
}

impl Mode {
    fn arg(&self, x: [f64; 2]) -> f64 {
        PI * (self.wave[0] * x[0] + self.wave[1] * x[1]) + self.phase
    }

    pub fn value(&self, x: [f64; 2]) -> f64 {
        self.amplitude * sin(self.arg(x))
    }

    pub fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        let c = self.amplitude * PI * cos(self.arg(x));
        [c * self.wave[0], c * self.wave[1]]
    }

    pub fn laplacian(&self, x: [f64; 2]) -> f64 {
        let k2 = self.wave[0] * self.wave[0] + self.wave[1] * self.wave[1];
        -PI * PI * k2 * self.value(x)
    }

    /// `Σ w m(· − z)`, again a mode.
    pub fn averaged(&self, stencil: &[([f64; 2], f64)]) -> Mode {
        let (mut c, mut s) = (0.0, 0.0);
        for &(z, w) in stencil {
            let a = PI * (self.wave[0] * z[0] + self.wave[1] * z[1]);
            c += w * cos(a);
            s += w * sin(a);
        }
        Mode { wave: self.wave, amplitude: self.amplitude * sqrt(c * c + s * s), phase: self.phase - atan2(s, c) }
    }
}

fn average_all(modes: &[Mode], stencil: &[([f64; 2], f64)]) -> Vec<Mode> {
    modes.iter().map(|m| m.averaged(stencil)).collect()
}

/// `∇^⊥ψ + ∇χ₁ + ∇χ₂` with `ψ, χ₁, χ₂` trigonometric sums.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigFlow {
    pub stream: Vec<Mode>,
    pub potential: Vec<Mode>,
    pub bounded_potential: Vec<Mode>,
}

impl VelocityField for TrigFlow {
    fn velocity(&self, _t: f64, x: [f64; 2]) -> [f64; 2] {
        let mut v = [0.0, 0.0];
        for m in &self.stream {
            let g = m.gradient(x);
            v[0] -= g[1];
            v[1] += g[0];
        }
        for m in self.potential.iter().chain(&self.bounded_potential) {
            let g = m.gradient(x);
            v[0] += g[0];
            v[1] += g[1];
        }
        v
    }
    fn divergence(&self, _t: f64, x: [f64; 2]) -> f64 {
        self.potential.iter().chain(&self.bounded_potential).map(|m| m.laplacian(x)).sum()
    }
    fn is_autonomous(&self) -> bool {
        true
    }
    fn averaged(&self, stencil: &[([f64; 2], f64)]) -> Option<Arc<dyn VelocityField>> {
        Some(Arc::new(TrigFlow {
            stream: average_all(&self.stream, stencil),
            potential: average_all(&self.potential, stencil),
            bounded_potential: average_all(&self.bounded_potential, stencil),
        }))
    }
}

/// `Σ Δχ`
#[derive(Debug, Clone, PartialEq)]
pub struct ModeLaplacian(pub Vec<Mode>);

impl ScalarField for ModeLaplacian {
    fn value(&self, _t: f64, x: [f64; 2]) -> f64 {
        self.0.iter().map(|m| m.laplacian(x)).sum()
    }
    fn is_autonomous(&self) -> bool {
        true
    }
    fn averaged(&self, stencil: &[([f64; 2], f64)]) -> Option<Arc<dyn ScalarField>> {
        Some(Arc::new(ModeLaplacian(average_all(&self.0, stencil))))
    }
}

/// `c₀ + Σ mᵢ(x)`
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSum {
    pub offset: f64,
    pub modes: Vec<Mode>,
}

impl ScalarField for ModeSum {
    fn value(&self, _t: f64, x: [f64; 2]) -> f64 {
        self.offset + self.modes.iter().map(|m| m.value(x)).sum::<f64>()
    }
    fn is_autonomous(&self) -> bool {
        true
    }
    fn averaged(&self, stencil: &[([f64; 2], f64)]) -> Option<Arc<dyn ScalarField>> {
        let mass: f64 = stencil.iter().map(|p| p.1).sum();
        Some(Arc::new(ModeSum { offset: self.offset * mass, modes: average_all(&self.modes, stencil) }))
    }
}

/// `Σ bᵢ(x)`
#[derive(Debug, Clone, PartialEq)]
pub struct BumpSum(pub Vec<Bump2D>);

impl BumpSum {
    pub fn sample(&self, grid: &Grid) -> Result<SampledFunction> {
        SampledFunction::from_fn(grid.clone(), |x, y| self.value(0.0, [x, y]))
    }
}

impl ScalarField for BumpSum {
    fn value(&self, _t: f64, x: [f64; 2]) -> f64 {
        self.0.iter().map(|b| b.value(x)).sum()
    }
    fn is_autonomous(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothOptions {
    pub nodes: usize,
    pub horizon: f64,
    /// Drop the potentials and the reaction.
    pub incompressible: bool,
}

impl Default for SmoothOptions {
    fn default() -> Self {
        SmoothOptions { nodes: 64, horizon: 1.0, incompressible: false }
    }
}

fn random_mode(rng: &mut ChaCha8Rng, amp: (f64, f64)) -> Mode {
    let wave = loop {
        let k = [rng.random_range(-1i32..=1) as f64, rng.random_range(-1i32..=1) as f64];
        if k != [0.0, 0.0] {
            break k;
        }
    };
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    Mode { wave, amplitude: sign * rng.random_range(amp.0..amp.1), phase: rng.random_range(0.0..2.0 * PI) }
}

/// Periodic `exp(κ (cos π(x − c₁) + cos π(y − c₂) − 2))`, sampled.
pub fn von_mises(grid: &Grid, center: [f64; 2], kappa: f64) -> Result<SampledFunction> {
    SampledFunction::from_fn(grid.clone(), |x, y| {
        exp(kappa * (cos(PI * (x - center[0])) + cos(PI * (y - center[1])) - 2.0))
    })
}

/// A random smooth periodic problem with exact split `B₁ = Δχ₁`, `B₂ = Δχ₂`.
pub fn smooth_problem(seed: u64, opts: SmoothOptions) -> Result<TransportProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = periodic_box(opts.nodes)?;
    let stream = (0..3).map(|_| random_mode(&mut rng, (0.02, 0.05))).collect();
    let (potential, bounded_potential, reaction) = if opts.incompressible {
        (Vec::new(), Vec::new(), None)
    } else {
        (
            alloc::vec![random_mode(&mut rng, (0.004, 0.012))],
            alloc::vec![random_mode(&mut rng, (0.004, 0.012))],
            Some(ModeSum { offset: rng.random_range(-0.2..0.2), modes: alloc::vec![random_mode(&mut rng, (0.1, 0.4))] }),
        )
    };
    let mut u0 = SampledFunction::zeros(grid.clone())?;
    for _ in 0..2 {
        let c = [rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)];
        let kappa = rng.random_range(2.0..4.0);
        let a = rng.random_range(0.5..1.0);
        u0 = u0.zip_with(&von_mises(&grid, c, kappa)?, |x, y| x + a * y)?;
    }
    let flow = TrigFlow { stream, potential: potential.clone(), bounded_potential: bounded_potential.clone() };
    let reaction: Arc<dyn ScalarField> = match reaction {
        Some(r) => Arc::new(r),
        None => Arc::new(Zero),
    };
    Ok(TransportProblem::new(Arc::new(flow), reaction, u0, opts.horizon)?
        .with_split(DivergenceSplit { b1: Arc::new(ModeLaplacian(potential)), b2: Arc::new(ModeLaplacian(bounded_potential)) }))
}

/// Shear `b = (a(x₂), 0)`; the exact solution is `u₀(x₁ − t a(x₂), x₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shear {
    pub amplitude: f64,
    /// Centre of the kink of `a`; `None` gives a smooth profile.
    pub kink: Option<f64>,
}

impl Shear {
    pub fn profile(&self, y: f64) -> f64 {
        let cutoff = Bump2D { center: [0.0, 0.0], radii: [1.0, 0.8], amplitude: self.amplitude };
        let c = cutoff.value([0.0, y]);
        match self.kink {
            Some(k) => (y - k).abs() * c,
            None => (0.5 + y) * c,
        }
    }

    pub fn exact(&self, u0: &Bump2D, t: f64, x: [f64; 2]) -> f64 {
        u0.value([x[0] - t * self.profile(x[1]), x[1]])
    }
}

impl VelocityField for Shear {
    fn velocity(&self, _t: f64, x: [f64; 2]) -> [f64; 2] {
        [self.profile(x[1]), 0.0]
    }
    fn divergence(&self, _t: f64, _x: [f64; 2]) -> f64 {
        0.0
    }
    fn is_autonomous(&self) -> bool {
        true
    }
}

/// `b = s (x − c) log(R/r)` for `r = |x − c| < R`, zero outside.
///
/// `div b = s (2 log(R/r) − 1)` splits into the unbounded part
/// `2s log(R/r)`, which has every exponential moment of order below
/// `1/s`, and the bounded part `−s` on the disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSource {
    pub center: [f64; 2],
    pub radius: f64,
    pub strength: f64,
}

impl LogSource {
    fn offset(&self, x: [f64; 2]) -> ([f64; 2], f64) {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        (d, sqrt(d[0] * d[0] + d[1] * d[1]))
    }

    pub fn singular_part(&self) -> Arc<dyn ScalarField> {
        Arc::new(LogSourcePart { source: *self, singular: true })
    }

    pub fn bounded_part(&self) -> Arc<dyn ScalarField> {
        Arc::new(LogSourcePart { source: *self, singular: false })
    }
}

impl VelocityField for LogSource {
    fn velocity(&self, _t: f64, x: [f64; 2]) -> [f64; 2] {
        let (d, r) = self.offset(x);
        if r >= self.radius || r == 0.0 {
            return [0.0, 0.0];
        }
        let l = self.strength * ln(self.radius / r);
        [l * d[0], l * d[1]]
    }
    fn divergence(&self, _t: f64, x: [f64; 2]) -> f64 {
        let (_, r) = self.offset(x);
        if r >= self.radius {
            return 0.0;
        }
        self.strength * (2.0 * ln(self.radius / r.max(f64::MIN_POSITIVE)) - 1.0)
    }
    fn is_autonomous(&self) -> bool {
        true
    }
}

struct LogSourcePart {
    source: LogSource,
    singular: bool,
}

impl ScalarField for LogSourcePart {
    fn value(&self, _t: f64, x: [f64; 2]) -> f64 {
        let (_, r) = self.source.offset(x);
        if r >= self.source.radius {
            return 0.0;
        }
        if self.singular {
            2.0 * self.source.strength * ln(self.source.radius / r.max(f64::MIN_POSITIVE))
        } else {
            -self.source.strength
        }
    }
    fn is_autonomous(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoughOptions {
    pub nodes: usize,
    pub horizon: f64,
    /// Peak of the initial datum; the quantitative bounds need it small.
    pub amplitude: f64,
    /// Range of `s`.
    pub strength: (f64, f64),
}

impl Default for RoughOptions {
    fn default() -> Self {
        RoughOptions { nodes: 64, horizon: 0.1, amplitude: 1e-5, strength: (0.005, 0.02) }
    }
}

/// A [`LogSource`] problem with `c = 0` and the split `(2s log(R/r), −s)`.
/// The singular point sits at a cell centre so grid samples stay finite.
pub fn rough_problem(seed: u64, opts: RoughOptions) -> Result<(TransportProblem, LogSource)> {
    if !(opts.strength.0 > 0.0 && opts.strength.0 < opts.strength.1) {
        return Err(Error::param("strength", format!("need 0 < lo < hi, got {:?}", opts.strength)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = unit_box(opts.nodes)?;
    let h = grid.x.spacing();
    let snap = |v: f64| -1.0 + (floor((v + 1.0) / h) + 0.5) * h;
    let source = LogSource {
        center: [snap(rng.random_range(-0.2..0.2)), snap(rng.random_range(-0.2..0.2))],
        radius: rng.random_range(0.3..0.5),
        strength: rng.random_range(opts.strength.0..opts.strength.1),
    };
    let datum = Bump2D {
        center: [rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)],
        radii: [rng.random_range(0.25..0.4), rng.random_range(0.25..0.4)],
        amplitude: opts.amplitude,
    };
    let u0 = BumpSum(alloc::vec![datum]).sample(&grid)?;
    let problem = TransportProblem::new(Arc::new(source), Arc::new(Zero), u0, opts.horizon)?
        .with_split(DivergenceSplit { b1: source.singular_part(), b2: source.bounded_part() });
    Ok((problem, source))
}

/// `exp(−|x|²/σ²)`-type anisotropic Gaussian, sampled.
pub fn gaussian(grid: &Grid, center: [f64; 2], sigma: [f64; 2]) -> Result<SampledFunction> {
    SampledFunction::from_fn(grid.clone(), |x, y| {
        let a = (x - center[0]) / sigma[0];
        let b = (y - center[1]) / sigma[1];
        exp(-a * a - b * b)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_split_is_exact() {
        let p = smooth_problem(3, SmoothOptions { nodes: 24, ..Default::default() }).unwrap();
        assert!(p.split_defect(&[0.0, 0.5]).unwrap() < 1e-6);
        let q = smooth_problem(3, SmoothOptions { nodes: 24, incompressible: true, ..Default::default() }).unwrap();
        assert!(q.split_defect(&[0.0]).unwrap() < 1e-6);
    }

    #[test]
    fn smooth_field_is_periodic_and_split_matches_differences() {
        for seed in 0..5 {
            let p = smooth_problem(seed, SmoothOptions { nodes: 16, ..Default::default() }).unwrap();
            let s = p.split.as_ref().unwrap();
            for x in [[-0.95, 0.1], [0.3, 0.96], [0.9, -0.9]] {
                let (a, b) = (p.field.velocity(0.0, x), p.field.velocity(0.0, [x[0] - 2.0, x[1] + 2.0]));
                assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
                let d = 1e-5;
                let fd = (p.field.velocity(0.0, [x[0] + d, x[1]])[0] - p.field.velocity(0.0, [x[0] - d, x[1]])[0]
                    + p.field.velocity(0.0, [x[0], x[1] + d])[1]
                    - p.field.velocity(0.0, [x[0], x[1] - d])[1])
                    / (2.0 * d);
                assert!((fd - s.b1.value(0.0, x) - s.b2.value(0.0, x)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn averaged_modes_match_the_stencil() {
        let p = smooth_problem(4, SmoothOptions { nodes: 16, ..Default::default() }).unwrap();
        let spec = crate::solver::MollifierSpec::new(0.15).unwrap();
        let st = spec.stencil();
        let closed = p.field.averaged(&st).unwrap();
        let cr = p.reaction.averaged(&st).unwrap();
        for x in [[0.1, 0.2], [-0.7, 0.4]] {
            let mut v = [0.0, 0.0];
            let mut c = 0.0;
            for &(z, w) in &st {
                let b = p.field.velocity(0.0, [x[0] - z[0], x[1] - z[1]]);
                v[0] += w * b[0];
                v[1] += w * b[1];
                c += w * p.reaction.value(0.0, [x[0] - z[0], x[1] - z[1]]);
            }
            let e = closed.velocity(0.0, x);
            assert!((e[0] - v[0]).abs() < 1e-14 && (e[1] - v[1]).abs() < 1e-14);
            assert!((cr.value(0.0, x) - c).abs() < 1e-14);
        }
    }

    #[test]
    fn log_source_divergence() {
        let s = LogSource { center: [0.1, 0.0], radius: 0.4, strength: 0.3 };
        let x = [0.25, 0.1];
        let d = 1e-6;
        let fd = (s.velocity(0.0, [x[0] + d, x[1]])[0] - s.velocity(0.0, [x[0] - d, x[1]])[0]
            + s.velocity(0.0, [x[0], x[1] + d])[1]
            - s.velocity(0.0, [x[0], x[1] - d])[1])
            / (2.0 * d);
        let exact = s.singular_part().value(0.0, x) + s.bounded_part().value(0.0, x);
        assert!((fd - exact).abs() < 1e-7);
        assert_eq!(s.bounded_part().value(0.0, [0.6, 0.0]), 0.0);
    }

    #[test]
    fn rough_centre_is_a_cell_centre() {
        let (p, s) = rough_problem(1, RoughOptions { nodes: 32, ..Default::default() }).unwrap();
        let g = p.grid();
        let b1 = s.singular_part();
        for k in 0..g.len() {
            let (x, y) = g.point(k);
            assert!(b1.value(0.0, [x, y]).is_finite());
        }
    }

    #[test]
    fn shear_exact_solution_is_transported() {
        let sh = Shear { amplitude: 0.5, kink: Some(0.1) };
        let u0 = Bump2D { center: [0.0, 0.0], radii: [0.3, 0.4], amplitude: 1.0 };
        let x = [0.05, 0.2];
        // u is constant along dX/dt = b(X)
        let t = 0.3;
        let y = [x[0] + t * sh.profile(x[1]), x[1]];
        assert!((sh.exact(&u0, t, y) - u0.value(x)).abs() < 1e-15);
    }
}
