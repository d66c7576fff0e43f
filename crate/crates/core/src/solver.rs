//! Mollified transport `∂_t u + b·∇u + c u = 0` solved by backward
//! characteristics, plus the checks run on its output.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flows::{Box2D, TestFunction2D};
use crate::grid::{Axis, Grid, SampledFunction};
use crate::math::{exp, floor, powf};
use crate::quadrature::GaussLegendre;

pub trait VelocityField: Send + Sync {
    fn velocity(&self, t: f64, x: [f64; 2]) -> [f64; 2];

    /// Centered differences with step `1e-5` unless overridden.
    fn divergence(&self, t: f64, x: [f64; 2]) -> f64 {
        let d = 1e-5;
        let xp = self.velocity(t, [x[0] + d, x[1]]);
        let xm = self.velocity(t, [x[0] - d, x[1]]);
        let yp = self.velocity(t, [x[0], x[1] + d]);
        let ym = self.velocity(t, [x[0], x[1] - d]);
        (xp[0] - xm[0] + yp[1] - ym[1]) / (2.0 * d)
    }

    fn is_autonomous(&self) -> bool {
        false
    }

    /// `Σ w b(· − z)` over a stencil in closed form, when one exists.
    fn averaged(&self, _stencil: &[([f64; 2], f64)]) -> Option<Arc<dyn VelocityField>> {
        None
    }
}

pub trait ScalarField: Send + Sync {
    fn value(&self, t: f64, x: [f64; 2]) -> f64;

    fn is_autonomous(&self) -> bool {
        false
    }

    fn averaged(&self, _stencil: &[([f64; 2], f64)]) -> Option<Arc<dyn ScalarField>> {
        None
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl VelocityField for Zero {
    fn velocity(&self, _t: f64, _x: [f64; 2]) -> [f64; 2] {
        [0.0, 0.0]
    }
    fn divergence(&self, _t: f64, _x: [f64; 2]) -> f64 {
        0.0
    }
    fn is_autonomous(&self) -> bool {
        true
    }
}

impl ScalarField for Zero {
    fn value(&self, _t: f64, _x: [f64; 2]) -> f64 {
        0.0
    }
    fn is_autonomous(&self) -> bool {
        true
    }
    fn averaged(&self, _stencil: &[([f64; 2], f64)]) -> Option<Arc<dyn ScalarField>> {
        Some(Arc::new(Zero))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl ScalarField for Constant {
    fn value(&self, _t: f64, _x: [f64; 2]) -> f64 {
        self.0
    }
    fn is_autonomous(&self) -> bool {
        true
    }
    fn averaged(&self, stencil: &[([f64; 2], f64)]) -> Option<Arc<dyn ScalarField>> {
        Some(Arc::new(Constant(self.0 * stencil.iter().map(|p| p.1).sum::<f64>())))
    }
}

/// `ω (−(y − c₂), x − c₁)`
#[derive(Debug, Clone, Copy)]
pub struct Rotation {
    pub omega: f64,
    pub center: [f64; 2],
}

impl VelocityField for Rotation {
    fn velocity(&self, _t: f64, x: [f64; 2]) -> [f64; 2] {
        [-self.omega * (x[1] - self.center[1]), self.omega * (x[0] - self.center[0])]
    }
    fn divergence(&self, _t: f64, _x: [f64; 2]) -> f64 {
        0.0
    }
    fn is_autonomous(&self) -> bool {
        true
    }
}

/// Rigid rotation with angular speed `ω` inside radius `r₀`, tapering
/// smoothly to rest at `r₁`. Divergence free for any profile.
#[derive(Debug, Clone, Copy)]
pub struct Vortex {
    pub omega: f64,
    pub center: [f64; 2],
    pub inner: f64,
    pub outer: f64,
}

impl Vortex {
    pub fn angular_speed(&self, r: f64) -> f64 {
        if r <= self.inner {
            return self.omega;
        }
        if r >= self.outer {
            return 0.0;
        }
        // smooth step built from exp(−1/s)
        let s = (r - self.inner) / (self.outer - self.inner);
        let a = exp(-1.0 / (1.0 - s));
        let b = exp(-1.0 / s);
        self.omega * a / (a + b)
    }
}

impl VelocityField for Vortex {
    fn velocity(&self, _t: f64, x: [f64; 2]) -> [f64; 2] {
        let (dx, dy) = (x[0] - self.center[0], x[1] - self.center[1]);
        let w = self.angular_speed(crate::math::sqrt(dx * dx + dy * dy));
        [-w * dy, w * dx]
    }
    fn divergence(&self, _t: f64, _x: [f64; 2]) -> f64 {
        0.0
    }
    fn is_autonomous(&self) -> bool {
        true
    }
}

/// A velocity given by a closure.
pub struct FnVelocity<F> {
    pub f: F,
    pub autonomous: bool,
}

impl<F: Fn(f64, [f64; 2]) -> [f64; 2] + Send + Sync> VelocityField for FnVelocity<F> {
    fn velocity(&self, t: f64, x: [f64; 2]) -> [f64; 2] {
        (self.f)(t, x)
    }
    fn is_autonomous(&self) -> bool {
        self.autonomous
    }
}

pub struct FnScalar<F> {
    pub f: F,
    pub autonomous: bool,
}

impl<F: Fn(f64, [f64; 2]) -> f64 + Send + Sync> ScalarField for FnScalar<F> {
    fn value(&self, t: f64, x: [f64; 2]) -> f64 {
        (self.f)(t, x)
    }
    fn is_autonomous(&self) -> bool {
        self.autonomous
    }
}

/// `Σ wᵢ sᵢ`
pub struct Combination(pub Vec<(f64, Arc<dyn ScalarField>)>);

impl ScalarField for Combination {
    fn value(&self, t: f64, x: [f64; 2]) -> f64 {
        self.0.iter().map(|(w, s)| w * s.value(t, x)).sum()
    }
    fn is_autonomous(&self) -> bool {
        self.0.iter().all(|(_, s)| s.is_autonomous())
    }
}

/// `−b(t₀ − t, x)`: the field of a backward problem in reversed time.
pub struct Reversed {
    pub inner: Arc<dyn VelocityField>,
    pub t0: f64,
}

impl VelocityField for Reversed {
    fn velocity(&self, t: f64, x: [f64; 2]) -> [f64; 2] {
        let v = self.inner.velocity(self.t0 - t, x);
        [-v[0], -v[1]]
    }
    fn divergence(&self, t: f64, x: [f64; 2]) -> f64 {
        -self.inner.divergence(self.t0 - t, x)
    }
    fn is_autonomous(&self) -> bool {
        self.inner.is_autonomous()
    }
}

/// `−s(t₀ − t, x)`
pub struct ReversedScalar {
    pub inner: Arc<dyn ScalarField>,
    pub t0: f64,
}

impl ScalarField for ReversedScalar {
    fn value(&self, t: f64, x: [f64; 2]) -> f64 {
        -self.inner.value(self.t0 - t, x)
    }
    fn is_autonomous(&self) -> bool {
        self.inner.is_autonomous()
    }
}

/// Radial kernel `ρ(z) ∝ exp(−1/(1 − |z|²/ε²))` on the disc of radius `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifierSpec {
    pub radius: f64,
    /// Gauss–Legendre points per axis for pointwise convolution.
    pub order: usize,
}

impl MollifierSpec {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::param("radius", format!("must be positive, got {radius}")));
        }
        Ok(MollifierSpec { radius, order: 8 })
    }

    fn profile(&self, r2: f64) -> f64 {
        let q = 1.0 - r2 / (self.radius * self.radius);
        if q <= 0.0 {
            0.0
        } else {
            exp(-1.0 / q)
        }
    }

    /// Offsets and weights summing to one, for pointwise convolution.
    pub fn stencil(&self) -> Vec<([f64; 2], f64)> {
        let rule = GaussLegendre::new(self.order);
        let nodes: Vec<(f64, f64)> = rule.mapped(-self.radius, self.radius).collect();
        let mut out = Vec::new();
        for &(a, wa) in &nodes {
            for &(b, wb) in &nodes {
                let w = wa * wb * self.profile(a * a + b * b);
                if w > 0.0 {
                    out.push(([a, b], w));
                }
            }
        }
        let total: f64 = out.iter().map(|p| p.1).sum();
        for p in &mut out {
            p.1 /= total;
        }
        out
    }

    /// Grid offsets and weights summing to one.
    pub fn discrete_kernel(&self, grid: &Grid) -> Result<Vec<(isize, isize, f64)>> {
        let ay = grid.y.ok_or_else(|| Error::param("grid", "mollification needs a 2D grid"))?;
        let (hx, hy) = (grid.x.spacing(), ay.spacing());
        if self.radius < 2.0 * hx.max(hy) {
            return Err(Error::Resolution(format!(
                "mollifier radius {} below two grid spacings ({})",
                self.radius,
                2.0 * hx.max(hy)
            )));
        }
        let mx = floor(self.radius / hx) as isize;
        let my = floor(self.radius / hy) as isize;
        let mut k = Vec::new();
        for j in -my..=my {
            for i in -mx..=mx {
                let (dx, dy) = (i as f64 * hx, j as f64 * hy);
                let w = self.profile(dx * dx + dy * dy);
                if w > 0.0 {
                    k.push((i, j, w));
                }
            }
        }
        let total: f64 = k.iter().map(|p| p.2).sum();
        for p in &mut k {
            p.2 /= total;
        }
        Ok(k)
    }
}

fn axis_index(a: &Axis, i: isize) -> Option<usize> {
    let n = a.n as isize;
    if a.periodic {
        Some(i.rem_euclid(n) as usize)
    } else if (0..n).contains(&i) {
        Some(i as usize)
    } else {
        None
    }
}

fn convolve_at(f: &SampledFunction, kernel: &[(isize, isize, f64)], i: usize, j: usize) -> f64 {
    let grid = f.grid();
    let ay = grid.y.as_ref().unwrap();
    let vals = f.values();
    let mut acc = 0.0;
    for &(di, dj, w) in kernel {
        let (Some(ii), Some(jj)) = (axis_index(&grid.x, i as isize + di), axis_index(ay, j as isize + dj)) else {
            continue;
        };
        acc += w * vals[grid.index(ii, jj)];
    }
    acc
}

/// Discrete convolution with the renormalized kernel. Periodic axes wrap;
/// otherwise the function is extended by zero.
pub fn mollify(f: &SampledFunction, spec: &MollifierSpec) -> Result<SampledFunction> {
    let grid = f.grid().clone();
    let kernel = spec.discrete_kernel(&grid)?;
    let ny = grid.ny();
    let mut out = Vec::with_capacity(grid.len());
    for j in 0..ny {
        for i in 0..grid.x.n {
            out.push(convolve_at(f, &kernel, i, j));
        }
    }
    SampledFunction::new(grid, out)
}

/// `b ∗ ρ_ε` evaluated pointwise, by a closed form when the field has one.
pub struct MollifiedVelocity {
    pub inner: Arc<dyn VelocityField>,
    stencil: Vec<([f64; 2], f64)>,
    closed: Option<Arc<dyn VelocityField>>,
}

impl MollifiedVelocity {
    pub fn new(inner: Arc<dyn VelocityField>, spec: &MollifierSpec) -> Self {
        let stencil = spec.stencil();
        let closed = inner.averaged(&stencil);
        MollifiedVelocity { inner, stencil, closed }
    }
}

impl VelocityField for MollifiedVelocity {
    fn velocity(&self, t: f64, x: [f64; 2]) -> [f64; 2] {
        if let Some(c) = &self.closed {
            return c.velocity(t, x);
        }
        let mut v = [0.0, 0.0];
        for &(z, w) in &self.stencil {
            let b = self.inner.velocity(t, [x[0] - z[0], x[1] - z[1]]);
            v[0] += w * b[0];
            v[1] += w * b[1];
        }
        v
    }
    fn divergence(&self, t: f64, x: [f64; 2]) -> f64 {
        if let Some(c) = &self.closed {
            return c.divergence(t, x);
        }
        self.stencil.iter().map(|&(z, w)| w * self.inner.divergence(t, [x[0] - z[0], x[1] - z[1]])).sum()
    }
    fn is_autonomous(&self) -> bool {
        self.inner.is_autonomous()
    }
}

pub struct MollifiedScalar {
    pub inner: Arc<dyn ScalarField>,
    stencil: Vec<([f64; 2], f64)>,
    closed: Option<Arc<dyn ScalarField>>,
}

impl MollifiedScalar {
    pub fn new(inner: Arc<dyn ScalarField>, spec: &MollifierSpec) -> Self {
        let stencil = spec.stencil();
        let closed = inner.averaged(&stencil);
        MollifiedScalar { inner, stencil, closed }
    }
}

impl ScalarField for MollifiedScalar {
    fn value(&self, t: f64, x: [f64; 2]) -> f64 {
        if let Some(c) = &self.closed {
            return c.value(t, x);
        }
        self.stencil.iter().map(|&(z, w)| w * self.inner.value(t, [x[0] - z[0], x[1] - z[1]])).sum()
    }
    fn is_autonomous(&self) -> bool {
        self.inner.is_autonomous()
    }
}

/// Six-point tensor Lagrange interpolation of grid data, clipped to the range
/// of the data so that interpolation never breaks the maximum principle.
#[derive(Debug, Clone)]
pub struct Interpolant {
    grid: Grid,
    values: Vec<f64>,
    range: (f64, f64),
}

/// Lagrange weights on the nodes `−2..=3` at offset `t ∈ [0, 1]`.
fn lagrange6(t: f64) -> [f64; 6] {
    let mut w = [0.0; 6];
    for (a, wa) in w.iter_mut().enumerate() {
        let xa = a as f64 - 2.0;
        let mut p = 1.0;
        for b in 0..6 {
            if b != a {
                let xb = b as f64 - 2.0;
                p *= (t - xb) / (xa - xb);
            }
        }
        *wa = p;
    }
    w
}

impl Interpolant {
    pub fn new(f: &SampledFunction) -> Result<Self> {
        if f.grid().y.is_none() {
            return Err(Error::param("grid", "interpolation needs a 2D grid"));
        }
        let range = f.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        Ok(Interpolant { grid: f.grid().clone(), values: f.values().to_vec(), range })
    }

    fn locate(a: &Axis, x: f64) -> Option<(isize, f64)> {
        let h = a.spacing();
        if a.periodic {
            let s = (a.wrap(x) - a.lo) / h;
            let i = floor(s);
            return Some((i as isize, s - i));
        }
        let slack = 1e-9 * h;
        if x < a.lo - slack || x > a.hi + slack {
            return None;
        }
        let s = ((x - a.lo) / h).clamp(0.0, (a.n - 1) as f64);
        let i = floor(s).min((a.n - 2) as f64);
        Some((i as isize, s - i))
    }

    fn node(a: &Axis, i: isize) -> usize {
        if a.periodic {
            i.rem_euclid(a.n as isize) as usize
        } else {
            i.clamp(0, a.n as isize - 1) as usize
        }
    }

    pub fn eval(&self, x: [f64; 2]) -> Result<f64> {
        let ax = &self.grid.x;
        let ay = self.grid.y.as_ref().unwrap();
        let (Some((i0, tx)), Some((j0, ty))) = (Self::locate(ax, x[0]), Self::locate(ay, x[1])) else {
            return Err(Error::LeftBox { x: x[0], y: x[1] });
        };
        let wx = lagrange6(tx);
        let wy = lagrange6(ty);
        let mut acc = 0.0;
        for (b, &wyb) in wy.iter().enumerate() {
            let jj = Self::node(ay, j0 - 2 + b as isize);
            let mut row = 0.0;
            for (a, &wxa) in wx.iter().enumerate() {
                let ii = Self::node(ax, i0 - 2 + a as isize);
                row += wxa * self.values[self.grid.index(ii, jj)];
            }
            acc += wyb * row;
        }
        Ok(acc.clamp(self.range.0, self.range.1))
    }
}

/// Divergence split `div b = B₁ + B₂`.
#[derive(Clone)]
pub struct DivergenceSplit {
    pub b1: Arc<dyn ScalarField>,
    pub b2: Arc<dyn ScalarField>,
}

#[derive(Clone)]
pub struct TransportProblem {
    pub field: Arc<dyn VelocityField>,
    pub reaction: Arc<dyn ScalarField>,
    pub u0: SampledFunction,
    pub horizon: f64,
    pub split: Option<DivergenceSplit>,
}

impl TransportProblem {
    pub fn new(field: Arc<dyn VelocityField>, reaction: Arc<dyn ScalarField>, u0: SampledFunction, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::param("horizon", format!("must be positive, got {horizon}")));
        }
        if u0.grid().y.is_none() {
            return Err(Error::param("u0", "must live on a 2D grid"));
        }
        Ok(TransportProblem { field, reaction, u0, horizon, split: None })
    }

    pub fn with_split(mut self, split: DivergenceSplit) -> Self {
        self.split = Some(split);
        self
    }

    pub fn grid(&self) -> &Grid {
        self.u0.grid()
    }

    /// `max |B₁ + B₂ − div b|` over grid nodes at the given times.
    pub fn split_defect(&self, times: &[f64]) -> Result<f64> {
        let s = self.split.as_ref().ok_or_else(|| Error::Precondition("problem has no divergence split".into()))?;
        let mut worst = 0.0f64;
        for &t in times {
            for k in 0..self.grid().len() {
                let (a, b) = self.grid().point(k);
                let x = [a, b];
                let d = s.b1.value(t, x) + s.b2.value(t, x) - self.field.divergence(t, x);
                worst = worst.max(d.abs());
            }
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Output intervals on `[0, T]`.
    pub steps: usize,
    /// RK4 steps per output interval.
    pub substeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { steps: 64, substeps: 2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeSolution {
    pub times: Vec<f64>,
    pub frames: Vec<SampledFunction>,
}

impl SpaceTimeSolution {
    pub fn grid(&self) -> &Grid {
        self.frames[0].grid()
    }

    pub fn sup_norm(&self) -> f64 {
        self.frames.iter().fold(0.0, |m, f| m.max(f.sup_norm()))
    }

    /// `max_t ‖u(t)‖_p^p`
    pub fn max_lp_norm_pow(&self, p: f64) -> f64 {
        self.frames.iter().fold(0.0, |m, f| m.max(f.lp_norm_pow(p)))
    }

    pub fn zip_with<F: FnMut(f64, f64) -> f64>(&self, other: &Self, mut f: F) -> Result<Self> {
        if self.times != other.times {
            return Err(Error::GridMismatch("time grids differ".into()));
        }
        let frames = self.frames.iter().zip(&other.frames).map(|(a, b)| a.zip_with(b, &mut f)).collect::<Result<_>>()?;
        Ok(SpaceTimeSolution { times: self.times.clone(), frames })
    }

    pub fn map<F: FnMut(f64) -> f64>(&self, mut f: F) -> Result<Self> {
        let frames = self.frames.iter().map(|a| a.map(&mut f)).collect::<Result<_>>()?;
        Ok(SpaceTimeSolution { times: self.times.clone(), frames })
    }

    /// Composite Simpson weights in time when the interval count is even,
    /// trapezoid otherwise.
    pub fn time_weights(&self) -> Vec<f64> {
        time_weights(&self.times)
    }
}

pub fn time_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    if n < 2 {
        return alloc::vec![0.0; n];
    }
    let h = times[1] - times[0];
    if (n - 1).is_multiple_of(2) {
        (0..n)
            .map(|i| {
                let c = if i == 0 || i == n - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * h / 3.0
            })
            .collect()
    } else {
        let mut w = alloc::vec![h; n];
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
        w
    }
}

pub fn output_times(horizon: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|n| horizon * n as f64 / steps as f64).collect()
}

/// Characteristic data ready to be evaluated node by node.
pub struct Characteristics {
    pub field: Arc<dyn VelocityField>,
    pub reaction: Arc<dyn ScalarField>,
    initial: Interpolant,
    grid: Grid,
    pub times: Vec<f64>,
    substeps: usize,
}

impl Characteristics {
    /// `initial` is interpolated as given; no mollification happens here.
    pub fn new(
        field: Arc<dyn VelocityField>,
        reaction: Arc<dyn ScalarField>,
        initial: &SampledFunction,
        horizon: f64,
        opts: SolverOptions,
    ) -> Result<Self> {
        if opts.steps == 0 || opts.substeps == 0 {
            return Err(Error::param("steps", "need at least one step and one substep"));
        }
        Ok(Characteristics {
            field,
            reaction,
            initial: Interpolant::new(initial)?,
            grid: initial.grid().clone(),
            times: output_times(horizon, opts.steps),
            substeps: opts.substeps,
        })
    }

    fn check_inside(&self, x: [f64; 2]) -> Result<()> {
        let ay = self.grid.y.as_ref().unwrap();
        let out = |a: &Axis, v: f64| !a.periodic && (v < a.lo - 1e-9 * a.spacing() || v > a.hi + 1e-9 * a.spacing());
        if out(&self.grid.x, x[0]) || out(ay, x[1]) || !x[0].is_finite() || !x[1].is_finite() {
            return Err(Error::LeftBox { x: x[0], y: x[1] });
        }
        Ok(())
    }

    /// One RK4 step of `dX/dσ = −b(t₀ − σ, X)`, `dJ/dσ = c(t₀ − σ, X)`.
    fn rk4(&self, t0: f64, sigma: f64, d: f64, x: [f64; 2], j: f64) -> ([f64; 2], f64) {
        let rhs = |s: f64, p: [f64; 2]| {
            let t = t0 - s;
            let b = self.field.velocity(t, p);
            ([-b[0], -b[1]], self.reaction.value(t, p))
        };
        let (k1, l1) = rhs(sigma, x);
        let (k2, l2) = rhs(sigma + 0.5 * d, [x[0] + 0.5 * d * k1[0], x[1] + 0.5 * d * k1[1]]);
        let (k3, l3) = rhs(sigma + 0.5 * d, [x[0] + 0.5 * d * k2[0], x[1] + 0.5 * d * k2[1]]);
        let (k4, l4) = rhs(sigma + d, [x[0] + d * k3[0], x[1] + d * k3[1]]);
        (
            [
                x[0] + d / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                x[1] + d / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            ],
            j + d / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4),
        )
    }

    /// `u(tₙ, x)` for every output time.
    pub fn node_history(&self, x: [f64; 2]) -> Result<Vec<f64>> {
        let n = self.times.len() - 1;
        let dt = if n > 0 { self.times[1] - self.times[0] } else { 0.0 };
        let d = dt / self.substeps as f64;
        let mut out = Vec::with_capacity(n + 1);
        out.push(self.initial.eval(x)?);
        if self.field.is_autonomous() && self.reaction.is_autonomous() {
            let (mut p, mut j) = (x, 0.0);
            for step in 0..n * self.substeps {
                let (q, k) = self.rk4(0.0, step as f64 * d, d, p, j);
                p = q;
                j = k;
                if (step + 1) % self.substeps == 0 {
                    self.check_inside(p)?;
                    out.push(self.initial.eval(p)? * exp(-j));
                }
            }
        } else {
            for m in 1..=n {
                let t0 = self.times[m];
                let (mut p, mut j) = (x, 0.0);
                for step in 0..m * self.substeps {
                    let (q, k) = self.rk4(t0, step as f64 * d, d, p, j);
                    p = q;
                    j = k;
                }
                self.check_inside(p)?;
                out.push(self.initial.eval(p)? * exp(-j));
            }
        }
        Ok(out)
    }

    /// Assemble per-node histories (given in grid order) into frames.
    pub fn assemble(&self, histories: Vec<Vec<f64>>) -> Result<SpaceTimeSolution> {
        let nt = self.times.len();
        let mut frames = Vec::with_capacity(nt);
        for n in 0..nt {
            frames.push(SampledFunction::new(self.grid.clone(), histories.iter().map(|h| h[n]).collect())?);
        }
        Ok(SpaceTimeSolution { times: self.times.clone(), frames })
    }

    pub fn solve(&self) -> Result<SpaceTimeSolution> {
        let histories = (0..self.grid.len())
            .map(|k| {
                let (a, b) = self.grid.point(k);
                self.node_history([a, b])
            })
            .collect::<Result<Vec<_>>>()?;
        self.assemble(histories)
    }
}

/// Mollify `b`, `c` and `u₀` and set up the characteristics.
pub fn prepare_regularized(problem: &TransportProblem, spec: &MollifierSpec, opts: SolverOptions) -> Result<Characteristics> {
    let u0 = mollify(&problem.u0, spec)?;
    Characteristics::new(
        Arc::new(MollifiedVelocity::new(problem.field.clone(), spec)),
        Arc::new(MollifiedScalar::new(problem.reaction.clone(), spec)),
        &u0,
        problem.horizon,
        opts,
    )
}

pub fn solve_regularized(problem: &TransportProblem, spec: &MollifierSpec, opts: SolverOptions) -> Result<SpaceTimeSolution> {
    prepare_regularized(problem, spec, opts)?.solve()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margin {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`
    pub margin: f64,
}

impl Margin {
    fn new(lhs: f64, rhs: f64) -> Self {
        Margin { lhs, rhs, margin: rhs - lhs }
    }
}

fn grid_sup(grid: &Grid, t: f64, f: impl Fn(f64, [f64; 2]) -> f64) -> f64 {
    (0..grid.len()).fold(0.0, |m, k| {
        let (a, b) = grid.point(k);
        m.max(f(t, [a, b]).abs())
    })
}

fn time_integral(times: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    // Trapezoid: the integrands here are sup norms, typically only Lipschitz.
    times.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (f(w[0]) + f(w[1]))).sum()
}

/// `‖u‖_{L^∞(L^∞)} ≤ ‖u₀‖_∞ exp(∫₀^T ‖c(t)‖_∞ dt)`
pub fn apriori_linf_check(u: &SpaceTimeSolution, u0: &SampledFunction, c: &dyn ScalarField) -> Result<Margin> {
    u.grid().ensure_same(u0.grid())?;
    let g = u.grid();
    let ic = time_integral(&u.times, |t| grid_sup(g, t, |s, x| c.value(s, x)));
    Ok(Margin::new(u.sup_norm(), u0.sup_norm() * exp(ic)))
}

/// `‖u‖^p_{L^∞(L^p)} ≤ (‖u₀‖_p^p + M^p ∫‖B₁‖_{L¹}) exp(∫‖B₂ − p c‖_∞)` with
/// `M = ‖u₀‖_∞ exp(∫‖c‖_∞)`.
pub fn apriori_lp_check(u: &SpaceTimeSolution, problem: &TransportProblem, p: f64) -> Result<Margin> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param("p", format!("need 1 ≤ p < ∞, got {p}")));
    }
    let split = problem.split.as_ref().ok_or_else(|| Error::Precondition("the Lp bound needs a divergence split".into()))?;
    u.grid().ensure_same(problem.grid())?;
    let g = u.grid();
    let w = g.weights()?;
    let c = &problem.reaction;
    let m = problem.u0.sup_norm() * exp(time_integral(&u.times, |t| grid_sup(g, t, |s, x| c.value(s, x))));
    let b1_l1 = time_integral(&u.times, |t| {
        (0..g.len())
            .map(|k| {
                let (a, b) = g.point(k);
                w[k] * split.b1.value(t, [a, b]).abs()
            })
            .sum()
    });
    let growth = time_integral(&u.times, |t| grid_sup(g, t, |s, x| split.b2.value(s, x) - p * c.value(s, x)));
    let rhs = (problem.u0.lp_norm_pow(p) + powf(m, p) * b1_l1) * exp(growth);
    Ok(Margin::new(u.max_lp_norm_pow(p), rhs))
}

/// `‖∂_t u_ε + b·∇u_ε + c u_ε‖` in `L¹(0,T; L¹(window))`, `u_ε = u(t) ∗ ρ_ε`,
/// with fourth-order centered differences in time and space.
pub fn commutator_residual(
    u: &SpaceTimeSolution,
    field: &dyn VelocityField,
    reaction: &dyn ScalarField,
    spec: &MollifierSpec,
    window: &Box2D,
) -> Result<f64> {
    let g = u.grid().clone();
    let ay = g.y.ok_or_else(|| Error::param("grid", "need a 2D grid"))?;
    let (hx, hy) = (g.x.spacing(), ay.spacing());
    let margin = |a: &Axis, lo: f64, hi: f64, h: f64| a.periodic || (lo - a.lo >= spec.radius + 2.0 * h && a.hi - hi >= spec.radius + 2.0 * h);
    if !margin(&g.x, window.x1.0, window.x1.1, hx) || !margin(&ay, window.x2.0, window.x2.1, hy) {
        return Err(Error::Precondition(format!("window {window:?} within ε + 2h of the boundary")));
    }
    if u.times.len() < 5 {
        return Err(Error::param("times", "need at least five frames"));
    }
    let dt = u.times[1] - u.times[0];
    let nodes_x: Vec<usize> = (2..g.x.n - 2).filter(|&i| (window.x1.0..=window.x1.1).contains(&g.x.node(i))).collect();
    let nodes_y: Vec<usize> = (2..ay.n - 2).filter(|&j| (window.x2.0..=window.x2.1).contains(&ay.node(j))).collect();
    if nodes_x.is_empty() || nodes_y.is_empty() {
        return Err(Error::Precondition(format!("window {window:?} holds no interior nodes")));
    }
    // Mollified frames on the window plus a two-node halo, row-major.
    let kernel = spec.discrete_kernel(&g)?;
    let (i0, i1) = (nodes_x[0] - 2, nodes_x[nodes_x.len() - 1] + 2);
    let (j0, j1) = (nodes_y[0] - 2, nodes_y[nodes_y.len() - 1] + 2);
    let wx = i1 - i0 + 1;
    let at = |i: usize, j: usize| (j - j0) * wx + (i - i0);
    let ue: Vec<Vec<f64>> = u
        .frames
        .iter()
        .map(|f| {
            let mut v = Vec::with_capacity(wx * (j1 - j0 + 1));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    v.push(convolve_at(f, &kernel, i, j));
                }
            }
            v
        })
        .collect();
    let d4 = |m2: f64, m1: f64, p1: f64, p2: f64, h: f64| (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
    let mut total = 0.0;
    for n in 2..u.times.len() - 2 {
        let t = u.times[n];
        let cur = &ue[n];
        let mut acc = 0.0;
        for &j in &nodes_y {
            for &i in &nodes_x {
                let k = at(i, j);
                let x = [g.x.node(i), ay.node(j)];
                let ut = d4(ue[n - 2][k], ue[n - 1][k], ue[n + 1][k], ue[n + 2][k], dt);
                let ux = d4(cur[at(i - 2, j)], cur[at(i - 1, j)], cur[at(i + 1, j)], cur[at(i + 2, j)], hx);
                let uy = d4(cur[at(i, j - 2)], cur[at(i, j - 1)], cur[at(i, j + 1)], cur[at(i, j + 2)], hy);
                let b = field.velocity(t, x);
                acc += (ut + b[0] * ux + b[1] * uy + reaction.value(t, x) * cur[k]).abs();
            }
        }
        total += dt * acc * hx * hy;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridWeakResidual {
    /// `∫ U(0) φ(0)`
    pub initial_term: f64,
    /// `∫∫ U ∂_tφ`
    pub time_term: f64,
    /// `∫∫ U div(bφ)`
    pub divergence_term: f64,
    /// `−∫∫ c U φ`
    pub reaction_term: f64,
    pub residual: f64,
    pub scale: f64,
}

impl GridWeakResidual {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else {
            self.residual / self.scale
        }
    }
}

/// Weak residual of space-time samples `U` for `∂_t U + b·∇U + cU = 0`.
pub fn grid_weak_residual(
    u: &SpaceTimeSolution,
    field: &dyn VelocityField,
    reaction: &dyn ScalarField,
    test: &TestFunction2D,
) -> Result<GridWeakResidual> {
    let g = u.grid();
    let w = g.weights()?;
    let tw = u.time_weights();
    let mut r = GridWeakResidual {
        initial_term: 0.0,
        time_term: 0.0,
        divergence_term: 0.0,
        reaction_term: 0.0,
        residual: 0.0,
        scale: 0.0,
    };
    let [(a1, b1), (a2, b2)] = test.space.support();
    let nodes: Vec<usize> = (0..g.len())
        .filter(|&k| {
            let (a, b) = g.point(k);
            a > a1 && a < b1 && b > a2 && b < b2
        })
        .collect();
    // Spatial factors per node: (w φ, w div(bφ), w c φ).
    let factors = |t: f64| -> Vec<[f64; 3]> {
        nodes
            .iter()
            .map(|&k| {
                let (a, b) = g.point(k);
                let x = [a, b];
                let s = test.space.value(x);
                let gs = test.space.gradient(x);
                let bv = field.velocity(t, x);
                let d = s * field.divergence(t, x) + bv[0] * gs[0] + bv[1] * gs[1];
                [w[k] * s, w[k] * d, w[k] * reaction.value(t, x) * s]
            })
            .collect()
    };
    let frozen = (field.is_autonomous() && reaction.is_autonomous()).then(|| factors(0.0));
    for (n, &t) in u.times.iter().enumerate() {
        let (chi, dchi) = test.time_profile(t);
        if chi == 0.0 && dchi == 0.0 {
            continue;
        }
        let fresh;
        let f = match &frozen {
            Some(f) => f,
            None => {
                fresh = factors(t);
                &fresh
            }
        };
        let vals = u.frames[n].values();
        let mut acc = [0.0; 3];
        for (&k, fk) in nodes.iter().zip(f) {
            let uk = vals[k];
            acc[0] += uk * fk[0];
            acc[1] += uk * fk[1];
            acc[2] += uk * fk[2];
        }
        r.time_term += tw[n] * dchi * acc[0];
        r.divergence_term += tw[n] * chi * acc[1];
        r.reaction_term -= tw[n] * chi * acc[2];
        if n == 0 {
            r.initial_term += chi * acc[0];
        }
    }
    let sum = r.initial_term + r.time_term + r.divergence_term + r.reaction_term;
    r.residual = sum.abs();
    r.scale = r.initial_term.abs() + r.time_term.abs() + r.divergence_term.abs() + r.reaction_term.abs();
    Ok(r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductDefect {
    /// Absolute weak residual per test function.
    pub residuals: Vec<f64>,
    /// Largest `scale` over the battery.
    pub scale: f64,
    /// `max residual / scale`. Normalizing per test would let tests that
    /// barely meet the solution amplify rounding.
    pub max_relative: f64,
}

fn battery_defect(
    w: &SpaceTimeSolution,
    field: &dyn VelocityField,
    reaction: &dyn ScalarField,
    battery: &[TestFunction2D],
) -> Result<ProductDefect> {
    let rs: Vec<GridWeakResidual> = battery.iter().map(|t| grid_weak_residual(w, field, reaction, t)).collect::<Result<_>>()?;
    let scale = rs.iter().fold(0.0f64, |m, r| m.max(r.scale));
    let residuals: Vec<f64> = rs.iter().map(|r| r.residual).collect();
    let worst = residuals.iter().fold(0.0f64, |m, &r| m.max(r));
    Ok(ProductDefect { residuals, scale, max_relative: if scale == 0.0 { 0.0 } else { worst / scale } })
}

/// `u v` against the problem with reaction `c₁ + c₂`; the regularized fields
/// are used, since those are what `u` and `v` solve.
pub fn product_solution_check(
    p1: &TransportProblem,
    p2: &TransportProblem,
    u: &SpaceTimeSolution,
    v: &SpaceTimeSolution,
    spec: &MollifierSpec,
    battery: &[TestFunction2D],
) -> Result<ProductDefect> {
    if !Arc::ptr_eq(&p1.field, &p2.field) {
        return Err(Error::Precondition("product check needs one shared velocity field".into()));
    }
    let uv = u.zip_with(v, |a, b| a * b)?;
    let field = MollifiedVelocity::new(p1.field.clone(), spec);
    let reaction = Combination(alloc::vec![
        (1.0, Arc::new(MollifiedScalar::new(p1.reaction.clone(), spec)) as Arc<dyn ScalarField>),
        (1.0, Arc::new(MollifiedScalar::new(p2.reaction.clone(), spec)) as Arc<dyn ScalarField>),
    ]);
    battery_defect(&uv, &field, &reaction, battery)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Renormalization {
    /// Weak residual of `u²` against the problem with reaction `2c`, per
    /// test function, normalized as in [`ProductDefect`].
    pub defect: ProductDefect,
    /// `max |w − u²|` over all frames, `w` solved directly from `u₀,ε²`.
    pub max_abs_difference: f64,
    /// `max |u|²`
    pub scale: f64,
}

impl Renormalization {
    pub fn relative_difference(&self) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else {
            self.max_abs_difference / self.scale
        }
    }
}

/// `β(u) = u²`: weak residual of `u²` with reaction `2c`, and comparison with
/// a direct solve of the squared problem.
pub fn renormalization_check(
    problem: &TransportProblem,
    spec: &MollifierSpec,
    opts: SolverOptions,
    battery: &[TestFunction2D],
) -> Result<Renormalization> {
    let base = prepare_regularized(problem, spec, opts)?;
    let u = base.solve()?;
    let twice: Arc<dyn ScalarField> = Arc::new(Combination(alloc::vec![(2.0, base.reaction.clone())]));
    let u2 = u.map(|v| v * v)?;
    let defect = battery_defect(&u2, base.field.as_ref(), twice.as_ref(), battery)?;
    let u0e = mollify(&problem.u0, spec)?;
    let squared = Characteristics::new(base.field.clone(), twice, &u0e.map(|v| v * v)?, problem.horizon, opts)?.solve()?;
    let mut worst = 0.0f64;
    for (a, b) in u2.frames.iter().zip(&squared.frames) {
        for (x, y) in a.values().iter().zip(b.values()) {
            worst = worst.max((x - y).abs());
        }
    }
    let s = u.sup_norm();
    Ok(Renormalization { defect, max_abs_difference: worst, scale: s * s })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityPairing {
    /// `∫ u(T₀)² χ_K`
    pub lhs_sharp: f64,
    /// `∫ u(T₀) v(T₀)` with the mollified terminal datum.
    pub lhs: f64,
    /// `∫ u(0) v(0)`
    pub initial_pairing: f64,
    /// `∫∫ (B₁ − c) u v`
    pub source: f64,
    /// `initial_pairing + ∫∫ |(B₁ − c) u v|`
    pub rhs: f64,
    /// `|lhs − initial_pairing − source|`
    pub identity_residual: f64,
}

/// Pair `u` with the backward solution `v` of `∂_t v + b·∇v + B₂ v = 0`,
/// `v(T₀) = (χ_K u(T₀)) ∗ ρ_ε`, using the regularized data throughout.
pub fn duality_pairing_check(
    problem: &TransportProblem,
    spec: &MollifierSpec,
    opts: SolverOptions,
    k_window: &Box2D,
    t0_index: usize,
) -> Result<DualityPairing> {
    let split = problem.split.as_ref().ok_or_else(|| Error::Precondition("duality check needs a divergence split".into()))?;
    let fwd = prepare_regularized(problem, spec, opts)?;
    let u = fwd.solve()?;
    if t0_index == 0 || t0_index >= u.times.len() {
        return Err(Error::param("t0_index", format!("must lie in 1..{}", u.times.len())));
    }
    let t0 = u.times[t0_index];
    let g = u.grid().clone();
    let w = g.weights()?;
    let inside = |k: usize| {
        let (a, b) = g.point(k);
        a >= k_window.x1.0 && a <= k_window.x1.1 && b >= k_window.x2.0 && b <= k_window.x2.1
    };
    let ut0 = &u.frames[t0_index];
    let terminal = SampledFunction::new(
        g.clone(),
        ut0.values().iter().enumerate().map(|(k, &v)| if inside(k) { v } else { 0.0 }).collect(),
    )?;
    let lhs_sharp: f64 = (0..g.len()).filter(|&k| inside(k)).map(|k| w[k] * ut0.values()[k] * ut0.values()[k]).sum();
    let b2e: Arc<dyn ScalarField> = Arc::new(MollifiedScalar::new(split.b2.clone(), spec));
    let back = Characteristics::new(
        Arc::new(Reversed { inner: fwd.field.clone(), t0 }),
        Arc::new(ReversedScalar { inner: b2e, t0 }),
        &mollify(&terminal, spec)?,
        t0,
        SolverOptions { steps: t0_index, substeps: opts.substeps },
    )?
    .solve()?;
    // v(tₙ) = back(t₀ − tₙ)
    let v_at = |n: usize| &back.frames[t0_index - n];
    let pair = |a: &SampledFunction, b: &SampledFunction| -> f64 {
        a.values().iter().zip(b.values()).zip(&w).map(|((x, y), wk)| x * y * wk).sum()
    };
    let lhs = pair(ut0, v_at(t0_index));
    let initial_pairing = pair(&u.frames[0], v_at(0));
    let b1e = MollifiedScalar::new(split.b1.clone(), spec);
    let tw = time_weights(&u.times[..=t0_index]);
    let (mut source, mut abs_source) = (0.0, 0.0);
    for (n, &wn) in tw.iter().enumerate() {
        let t = u.times[n];
        let (uv, vv) = (u.frames[n].values(), v_at(n).values());
        let (mut s, mut sa) = (0.0, 0.0);
        for k in 0..g.len() {
            if uv[k] == 0.0 || vv[k] == 0.0 {
                continue;
            }
            let (a, b) = g.point(k);
            let x = [a, b];
            let q = (b1e.value(t, x) - fwd.reaction.value(t, x)) * uv[k] * vv[k] * w[k];
            s += q;
            sa += q.abs();
        }
        source += wn * s;
        abs_source += wn * sa;
    }
    Ok(DualityPairing {
        lhs_sharp,
        lhs,
        initial_pairing,
        source,
        rhs: initial_pairing + abs_source,
        identity_residual: (lhs - initial_pairing - source).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;

    fn periodic_grid(n: usize) -> Grid {
        Grid::plane(Axis::periodic(-1.0, 1.0, n).unwrap(), Axis::periodic(-1.0, 1.0, n).unwrap())
    }

    fn box_grid(n: usize) -> Grid {
        Grid::plane(Axis::new(-1.0, 1.0, n).unwrap(), Axis::new(-1.0, 1.0, n).unwrap())
    }

    fn gaussian(g: Grid, c: [f64; 2], s: [f64; 2]) -> SampledFunction {
        SampledFunction::from_fn(g, |x, y| exp(-((x - c[0]) / s[0]).powi(2) - ((y - c[1]) / s[1]).powi(2))).unwrap()
    }

    #[test]
    fn mollify_constant_and_mass() {
        let g = periodic_grid(64);
        let spec = MollifierSpec::new(0.1).unwrap();
        let c = SampledFunction::from_fn(g.clone(), |_, _| 2.5).unwrap();
        let m = mollify(&c, &spec).unwrap();
        assert!(m.values().iter().all(|v| (v - 2.5).abs() < 1e-14));
        let ind = SampledFunction::from_fn(g, |x, y| if x.abs() < 0.3 && y.abs() < 0.5 { 1.0 } else { 0.0 }).unwrap();
        let mi = mollify(&ind, &spec).unwrap();
        assert!((mi.integral() - ind.integral()).abs() < 1e-12);
        assert!(mi.sup_norm() <= 1.0 + 1e-15);
    }

    #[test]
    fn mollify_rejects_small_radius() {
        let g = periodic_grid(32);
        let f = SampledFunction::zeros(g).unwrap();
        assert!(matches!(mollify(&f, &MollifierSpec::new(0.05).unwrap()), Err(Error::Resolution(_))));
    }

    #[test]
    fn stencil_has_unit_mass_and_reproduces_linear() {
        let spec = MollifierSpec::new(0.2).unwrap();
        let s: f64 = spec.stencil().iter().map(|p| p.1).sum();
        assert!((s - 1.0).abs() < 1e-14);
        let m = MollifiedVelocity::new(Arc::new(Rotation { omega: 1.3, center: [0.1, 0.0] }), &spec);
        let v = m.velocity(0.0, [0.4, -0.2]);
        let e = Rotation { omega: 1.3, center: [0.1, 0.0] }.velocity(0.0, [0.4, -0.2]);
        assert!((v[0] - e[0]).abs() < 1e-14 && (v[1] - e[1]).abs() < 1e-14);
    }

    #[test]
    fn interpolant_reproduces_nodes_and_limits() {
        let g = box_grid(33);
        let f = gaussian(g.clone(), [0.1, -0.2], [0.4, 0.3]);
        let b = Interpolant::new(&f).unwrap();
        for k in [0, 17, 500, 1088] {
            let (x, y) = g.point(k);
            assert!((b.eval([x, y]).unwrap() - f.values()[k]).abs() < 1e-14);
        }
        assert!(b.eval([0.1, -0.2]).unwrap() <= f.sup_norm());
        assert!(b.eval([1.5, 0.0]).is_err());
        let exact = exp(-((0.23 - 0.1) / 0.4f64).powi(2) - ((0.31 + 0.2) / 0.3f64).powi(2));
        assert!((b.eval([0.23, 0.31]).unwrap() - exact).abs() < 1e-3);
    }

    #[test]
    fn zero_field_returns_mollified_datum() {
        let g = box_grid(41);
        let u0 = gaussian(g, [0.0, 0.0], [0.3, 0.3]);
        let p = TransportProblem::new(Arc::new(Zero), Arc::new(Zero), u0.clone(), 0.5).unwrap();
        let spec = MollifierSpec::new(0.1).unwrap();
        let sol = solve_regularized(&p, &spec, SolverOptions { steps: 4, substeps: 1 }).unwrap();
        let m = mollify(&u0, &spec).unwrap();
        for f in &sol.frames {
            for (a, b) in f.values().iter().zip(m.values()) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn constant_reaction_decays() {
        let g = box_grid(21);
        let u0 = gaussian(g, [0.0, 0.0], [0.3, 0.3]);
        let p = TransportProblem::new(Arc::new(Zero), Arc::new(Constant(1.0)), u0.clone(), 1.0).unwrap();
        let spec = MollifierSpec::new(0.2).unwrap();
        let sol = solve_regularized(&p, &spec, SolverOptions { steps: 5, substeps: 2 }).unwrap();
        let m = mollify(&u0, &spec).unwrap();
        for (n, f) in sol.frames.iter().enumerate() {
            let e = exp(-sol.times[n]);
            for (a, b) in f.values().iter().zip(m.values()) {
                assert!((a - e * b).abs() < 1e-12);
            }
        }
        let lin = apriori_linf_check(&sol, &u0, &Constant(1.0)).unwrap();
        assert!((lin.rhs - u0.sup_norm() * core::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn vortex_conserves_norms() {
        let g = periodic_grid(64);
        let u0 = gaussian(g, [0.0, 0.0], [0.2, 0.12]);
        let vortex = Vortex { omega: 1.0, center: [0.0, 0.0], inner: 0.7, outer: 0.95 };
        let p = TransportProblem::new(Arc::new(vortex), Arc::new(Zero), u0, 1.0).unwrap();
        let spec = MollifierSpec { order: 4, ..MollifierSpec::new(0.1).unwrap() };
        let sol = solve_regularized(&p, &spec, SolverOptions { steps: 10, substeps: 2 }).unwrap();
        let (l1, l2, li) = (sol.frames[0].lp_norm(1.0), sol.frames[0].lp_norm(2.0), sol.frames[0].sup_norm());
        for f in &sol.frames {
            assert!((f.lp_norm(1.0) - l1).abs() / l1 < 1e-5);
            assert!((f.lp_norm(2.0) - l2).abs() / l2 < 1e-5);
            assert!((f.sup_norm() - li).abs() / li < 1e-12);
        }
    }

    #[test]
    fn quarter_turn_swaps_axes() {
        let g = periodic_grid(64);
        let u0 = gaussian(g, [0.0, 0.0], [0.25, 0.15]);
        let p = TransportProblem::new(
            Arc::new(Rotation { omega: 1.0, center: [0.0, 0.0] }),
            Arc::new(Zero),
            u0,
            core::f64::consts::FRAC_PI_2,
        )
        .unwrap();
        let spec = MollifierSpec::new(0.1).unwrap();
        let sol = solve_regularized(&p, &spec, SolverOptions { steps: 2, substeps: 8 }).unwrap();
        let (first, last) = (&sol.frames[0], sol.frames.last().unwrap());
        let gr = first.grid();
        let mut worst = 0.0f64;
        for j in 1..64 {
            for i in 1..64 {
                let (x, y) = gr.point(gr.index(i, j));
                // u(π/2, x, y) = u₀(y, −x)
                let k = gr.index(j, 64 - i);
                assert_eq!(gr.point(k), (y, -x));
                worst = worst.max((last.values()[gr.index(i, j)] - first.values()[k]).abs());
            }
        }
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn leaving_the_box_is_an_error() {
        let g = box_grid(21);
        let u0 = gaussian(g, [0.0, 0.0], [0.3, 0.3]);
        let wind = FnVelocity { f: |_t, _x: [f64; 2]| [1.0, 0.0], autonomous: true };
        let p = TransportProblem::new(Arc::new(wind), Arc::new(Zero), u0, 1.0).unwrap();
        let r = solve_regularized(&p, &MollifierSpec::new(0.2).unwrap(), SolverOptions { steps: 2, substeps: 1 });
        assert!(matches!(r, Err(Error::LeftBox { .. })));
    }

    #[test]
    fn time_dependent_matches_autonomous_path() {
        // The same autonomous field flagged as time dependent takes the slow path.
        let g = periodic_grid(24);
        let u0 = gaussian(g, [0.2, 0.1], [0.2, 0.25]);
        let rot = |_t: f64, x: [f64; 2]| {
            let s = exp(-4.0 * (x[0] * x[0] + x[1] * x[1]));
            [-x[1] * s, x[0] * s]
        };
        let spec = MollifierSpec::new(0.2).unwrap();
        let opts = SolverOptions { steps: 4, substeps: 2 };
        let a = TransportProblem::new(Arc::new(FnVelocity { f: rot, autonomous: true }), Arc::new(Zero), u0.clone(), 0.8).unwrap();
        let b = TransportProblem::new(Arc::new(FnVelocity { f: rot, autonomous: false }), Arc::new(Zero), u0, 0.8).unwrap();
        let sa = solve_regularized(&a, &spec, opts).unwrap();
        let sb = solve_regularized(&b, &spec, opts).unwrap();
        for (x, y) in sa.frames.iter().zip(&sb.frames) {
            for (p, q) in x.values().iter().zip(y.values()) {
                assert!((p - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn commutator_vanishes_for_zero_field() {
        let g = box_grid(41);
        let f = gaussian(g, [0.0, 0.0], [0.3, 0.3]);
        let u = SpaceTimeSolution { times: output_times(1.0, 4), frames: alloc::vec![f; 5] };
        let w = Box2D { x1: (-0.5, 0.5), x2: (-0.5, 0.5) };
        let r = commutator_residual(&u, &Zero, &Zero, &MollifierSpec::new(0.1).unwrap(), &w).unwrap();
        assert!(r < 1e-14);
        let near = Box2D { x1: (-0.95, 0.5), x2: (-0.5, 0.5) };
        assert!(commutator_residual(&u, &Zero, &Zero, &MollifierSpec::new(0.1).unwrap(), &near).is_err());
    }

    #[test]
    fn time_weights_integrate_cubics() {
        let t = output_times(2.0, 8);
        let w = time_weights(&t);
        let s: f64 = t.iter().zip(&w).map(|(x, w)| w * x * x * x).sum();
        assert!((s - 4.0).abs() < 1e-12);
    }
}
