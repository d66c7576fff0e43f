//! The flows `X̃_m(t, x) = (x₁, f_m(t φ(x₁) + f_m⁻¹(x₂)))`, the solutions
//! `u_m = u₀ ∘ X̃_m` of `∂_t u − b̃·∇u = 0`, and their weak-form residuals.
//!
//! Integrals over `x₂` are taken in the coordinate `y` with `x₂ = f_m(y)`.
//! There the divergence term becomes `∂_y[f_m′(y) Φ(f_m(y))]`, which only
//! needs `g` and `g′`, never `g′/g`.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cantor_map::{piece, removed_intervals, FmMap, Location, Piece};
use crate::error::{Error, Result};
use crate::field::RoughField2D;
use crate::math::{ceil, exp};
use crate::monotone::MonotoneMap;
use crate::quadrature::GaussLegendre;

/// `amplitude · exp(1 − 1/(1 − ρ²))` with `ρ² = Σ ((x_i − c_i)/r_i)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump2D {
    pub center: [f64; 2],
    pub radii: [f64; 2],
    pub amplitude: f64,
}

impl Bump2D {
    pub fn new(center: [f64; 2], radii: [f64; 2], amplitude: f64) -> Result<Self> {
        if !(radii[0] > 0.0 && radii[1] > 0.0) {
            return Err(Error::param("radii", "must be positive"));
        }
        Ok(Bump2D { center, radii, amplitude })
    }

    fn rho2(&self, x: [f64; 2]) -> (f64, [f64; 2]) {
        let a = (x[0] - self.center[0]) / self.radii[0];
        let b = (x[1] - self.center[1]) / self.radii[1];
        (a * a + b * b, [a, b])
    }

    pub fn value(&self, x: [f64; 2]) -> f64 {
        let (r2, _) = self.rho2(x);
        if r2 >= 1.0 {
            return 0.0;
        }
        self.amplitude * exp(1.0 - 1.0 / (1.0 - r2))
    }

    pub fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        let (r2, [a, b]) = self.rho2(x);
        if r2 >= 1.0 {
            return [0.0, 0.0];
        }
        let q = 1.0 - r2;
        let v = self.amplitude * exp(1.0 - 1.0 / q);
        // d/dρ² of −1/(1−ρ²) is −1/(1−ρ²)².
        let s = -v / (q * q);
        [s * 2.0 * a / self.radii[0], s * 2.0 * b / self.radii[1]]
    }

    pub fn sup(&self) -> f64 {
        self.amplitude.abs()
    }

    pub fn hessian(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        let (r2, [a, b]) = self.rho2(x);
        if r2 >= 1.0 {
            return [[0.0; 2]; 2];
        }
        let q = 1.0 - r2;
        let v = self.amplitude * exp(1.0 - 1.0 / q);
        let s = -v / (q * q);
        let ds = v * (1.0 - 2.0 * q) / (q * q * q * q);
        let d = [2.0 * a / self.radii[0], 2.0 * b / self.radii[1]];
        let mut h = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                h[i][j] = ds * d[i] * d[j];
            }
            h[i][i] += s * 2.0 / (self.radii[i] * self.radii[i]);
        }
        h
    }

    pub fn laplacian(&self, x: [f64; 2]) -> f64 {
        let h = self.hessian(x);
        h[0][0] + h[1][1]
    }

    /// Bounding box `[lo, hi]` per axis.
    pub fn support(&self) -> [(f64, f64); 2] {
        [
            (self.center[0] - self.radii[0], self.center[0] + self.radii[0]),
            (self.center[1] - self.radii[1], self.center[1] + self.radii[1]),
        ]
    }
}

/// `χ(t) · B(x)` with `χ(t) = exp(1 − 1/(1 − (t/τ)²))` on `[0, τ)`: `χ(0) = 1`,
/// support compact in `[0, τ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction2D {
    pub space: Bump2D,
    pub time_scale: f64,
}

impl TestFunction2D {
    pub fn time_profile(&self, t: f64) -> (f64, f64) {
        let s = t / self.time_scale;
        if !(0.0..1.0).contains(&s) && s >= 0.0 {
            return (0.0, 0.0);
        }
        let q = 1.0 - s * s;
        if q <= 0.0 {
            return (0.0, 0.0);
        }
        let v = exp(1.0 - 1.0 / q);
        (v, v * (-2.0 * s / (q * q)) / self.time_scale)
    }

    pub fn value(&self, t: f64, x: [f64; 2]) -> f64 {
        self.time_profile(t).0 * self.space.value(x)
    }

    pub fn time_derivative(&self, t: f64, x: [f64; 2]) -> f64 {
        self.time_profile(t).1 * self.space.value(x)
    }

    pub fn gradient(&self, t: f64, x: [f64; 2]) -> [f64; 2] {
        let c = self.time_profile(t).0;
        let g = self.space.gradient(x);
        [c * g[0], c * g[1]]
    }
}

/// Axis-aligned computational box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box2D {
    pub x1: (f64, f64),
    pub x2: (f64, f64),
}

impl Box2D {
    /// `[−2, 3] × [f(−2), f(3)]`
    pub fn default_for(family: &FlowFamily) -> Self {
        Box2D { x1: (-2.0, 3.0), x2: (family.f().eval(-2.0), family.f().eval(3.0)) }
    }

    pub fn contains_support(&self, b: &Bump2D) -> bool {
        let [s1, s2] = b.support();
        s1.0 >= self.x1.0 && s1.1 <= self.x1.1 && s2.0 >= self.x2.0 && s2.1 <= self.x2.1
    }
}

#[derive(Debug, Clone)]
pub struct FlowFamily {
    pub field: RoughField2D,
    pub fm: FmMap,
}

impl FlowFamily {
    pub fn new(field: RoughField2D, theta: f64) -> Result<Self> {
        let fm = FmMap::new(field.f.clone(), theta)?;
        Ok(FlowFamily { field, fm })
    }

    pub fn theta(&self) -> f64 {
        self.fm.theta()
    }

    pub fn f(&self) -> &crate::cantor_map::FMap {
        &self.field.f
    }

    pub fn flow_map(&self, t: f64, x: [f64; 2]) -> Result<[f64; 2]> {
        let phi = self.field.cutoff.value(x[0]);
        if phi == 0.0 || t == 0.0 {
            return Ok(x);
        }
        let y = self.fm.inverse(x[1])?;
        Ok([x[0], self.fm.eval(t * phi + y)])
    }

    /// The flow started from `(x₁, f_m(y))`, given `y`.
    pub fn flow_from_lifted(&self, t: f64, x1: f64, y: f64) -> [f64; 2] {
        let phi = self.field.cutoff.value(x1);
        [x1, self.fm.eval(t * phi + y)]
    }

    pub fn solution(&self, u0: &Bump2D, t: f64, x: [f64; 2]) -> Result<f64> {
        Ok(u0.value(self.flow_map(t, x)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOdeReport {
    pub max_residual: f64,
    pub evaluated: usize,
    /// Samples whose stencil touches the Cantor image or a gap deeper than the cut.
    pub skipped: usize,
}

/// `max |∂_t X̃_m − b̃(X̃_m)|` with a centered difference in `t`.
///
/// Samples are skipped when `h⁻¹` of the lifted stencil is not inside a single
/// gap of generation `≤ max_generation` (or a tail).
pub fn flow_ode_residual(
    family: &FlowFamily,
    times: &[f64],
    points: &[[f64; 2]],
    delta: f64,
    max_generation: u32,
) -> Result<FlowOdeReport> {
    let mut rep = FlowOdeReport { max_residual: 0.0, evaluated: 0, skipped: 0 };
    for &x in points {
        let phi = family.field.cutoff.value(x[0]);
        let y = family.fm.inverse(x[1])?;
        for &t in times {
            let z = t * phi + y;
            let (lo, hi) = (z - delta * phi, z + delta * phi);
            if phi > 0.0 && !same_smooth_piece(family, lo, hi, max_generation) {
                rep.skipped += 1;
                continue;
            }
            let dx = (family.flow_map(t + delta, x)?[1] - family.flow_map(t - delta, x)?[1]) / (2.0 * delta);
            let at = family.flow_map(t, x)?;
            let b = family.field.velocity(at)?;
            rep.max_residual = rep.max_residual.max((dx - b[1]).abs()).max(b[0].abs());
            rep.evaluated += 1;
        }
    }
    Ok(rep)
}

fn same_smooth_piece(family: &FlowFamily, lo: f64, hi: f64, max_generation: u32) -> bool {
    let a = family.fm.h.inverse_structural(lo);
    let b = family.fm.h.inverse_structural(hi);
    match (piece(a), piece(b)) {
        (Piece::LeftTail(_), Piece::LeftTail(_)) | (Piece::RightTail(_), Piece::RightTail(_)) => true,
        (Piece::Inner(la @ Location::Gap { .. }), Piece::Inner(lb @ Location::Gap { .. })) => {
            let (Location::Gap { generation: ka, bits: ba, .. }, Location::Gap { generation: kb, bits: bb, .. }) = (la, lb)
            else {
                return false;
            };
            ka == kb && ba == bb && ka <= max_generation
        }
        _ => false,
    }
}

/// Quadrature layout for the weak residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakQuadrature {
    /// Gauss–Legendre points per panel.
    pub order: usize,
    pub time_panels: usize,
    pub x1_panels: usize,
    /// Panels in `y` (and `ξ`) cover the tails and the gaps up to this
    /// generation; deeper gaps are dropped.
    pub break_generation: u32,
    /// Lower bound on the number of lifted-coordinate panels.
    pub y_panels: usize,
}

impl Default for WeakQuadrature {
    fn default() -> Self {
        WeakQuadrature { order: 8, time_panels: 8, x1_panels: 8, break_generation: 6, y_panels: 256 }
    }
}

impl WeakQuadrature {
    pub fn refined(&self) -> Self {
        WeakQuadrature {
            order: self.order,
            time_panels: 2 * self.time_panels,
            x1_panels: 2 * self.x1_panels,
            break_generation: self.break_generation + 1,
            y_panels: 2 * self.y_panels,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakResidual {
    /// `−∫∫ u ∂_tΦ`
    pub time_term: f64,
    /// `−∫ u₀ Φ(0)`
    pub initial_term: f64,
    /// `∫∫ u div(b̃ Φ)`
    pub divergence_term: f64,
    /// `|sum of the three terms|`
    pub residual: f64,
    /// Sum of the absolute terms.
    pub scale: f64,
}

impl WeakResidual {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else {
            self.residual / self.scale
        }
    }
}

/// `f_m(tφ + y)` on the (y, t) node grid, one table per distinct `φ` value.
#[derive(Default)]
struct LiftedCache {
    tables: Vec<(u64, Vec<f64>)>,
}

impl LiftedCache {
    fn get(&mut self, phi: f64, build: impl FnOnce() -> Vec<f64>) -> &[f64] {
        let key = phi.to_bits();
        let pos = match self.tables.iter().position(|(k, _)| *k == key) {
            Some(p) => p,
            None => {
                // Cutoff values off the plateau rarely repeat; keep only the last one.
                if self.tables.len() > 1 {
                    self.tables.truncate(1);
                }
                self.tables.push((key, build()));
                self.tables.len() - 1
            }
        };
        &self.tables[pos].1
    }
}

/// Panels covering the tails and every gap of generation `≤ generation`,
/// mapped through `map` and clipped to `[lo, hi]`.
///
/// The integrands below carry a factor `g` or `∂(gΦ)`, which vanishes on K;
/// a gap of generation `k` left out contributes `O((2p/3)^k)`.
fn gap_panels(map: impl Fn(f64) -> f64, lo: f64, hi: f64, generation: u32, min_panels: usize) -> Result<Vec<(f64, f64)>> {
    let mut segs: Vec<(f64, f64)> = alloc::vec![(f64::NEG_INFINITY, map(0.0)), (map(1.0), f64::INFINITY)];
    for gap in removed_intervals(generation)? {
        segs.push((map(gap.left()), map(gap.right())));
    }
    let max_width = (hi - lo) / min_panels as f64;
    let mut out = Vec::with_capacity(segs.len() * 2);
    for (a, b) in segs {
        let (a, b) = (a.max(lo), b.min(hi));
        if b <= a {
            continue;
        }
        let n = ceil((b - a) / max_width).max(1.0) as usize;
        for i in 0..n {
            out.push((a + (b - a) * i as f64 / n as f64, a + (b - a) * (i + 1) as f64 / n as f64));
        }
    }
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(out)
}

fn panel_nodes(rule: &GaussLegendre, panels: &[(f64, f64)]) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(panels.len() * rule.len());
    let mut ws = Vec::with_capacity(panels.len() * rule.len());
    for &(a, b) in panels {
        for (x, wt) in rule.mapped(a, b) {
            xs.push(x);
            ws.push(wt);
        }
    }
    (xs, ws)
}

fn uniform_panels(lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    (0..n).map(|i| (lo + (hi - lo) * i as f64 / n as f64, lo + (hi - lo) * (i + 1) as f64 / n as f64)).collect()
}

/// Weak-form residual of `u = u₀ ∘ X̃_m` for `∂_t u − b̃·∇u = 0` against `test`.
pub fn weak_residual(
    family: &FlowFamily,
    u0: &Bump2D,
    test: &TestFunction2D,
    horizon: f64,
    domain: &Box2D,
    quad: &WeakQuadrature,
) -> Result<WeakResidual> {
    if !domain.contains_support(&test.space) {
        return Err(Error::Precondition(format!("test support {:?} leaves the box", test.space.support())));
    }
    if test.time_scale > horizon {
        return Err(Error::Precondition("test time support exceeds the horizon".into()));
    }
    let fm = &family.fm;
    let cutoff = &family.field.cutoff;
    let rule = GaussLegendre::new(quad.order);
    let [(a1, b1), (a2, b2)] = test.space.support();
    let (ylo, yhi) = (fm.inverse(a2)?, fm.inverse(b2)?);

    let (ts, wt) = panel_nodes(&rule, &uniform_panels(0.0, test.time_scale, quad.time_panels));
    let (x1s, w1) = panel_nodes(&rule, &uniform_panels(a1, b1, quad.x1_panels));
    let (ys, wy) = panel_nodes(&rule, &gap_panels(|x| fm.h.eval(x), ylo, yhi, quad.break_generation, quad.y_panels)?);

    let fy: Vec<f64> = ys.iter().map(|&y| fm.eval(y)).collect();
    let d1: Vec<f64> = ys.iter().map(|&y| fm.derivative(y)).collect();
    let d2: Vec<f64> = ys.iter().map(|&y| fm.second_derivative(y)).collect();
    let time: Vec<(f64, f64)> = ts.iter().map(|&t| test.time_profile(t)).collect();

    let u0_x1 = u0.support()[0];
    let mut lifted = LiftedCache::default();
    let mut time_term = 0.0;
    let mut initial_term = 0.0;
    let mut divergence_term = 0.0;
    for (i, &x1) in x1s.iter().enumerate() {
        if x1 <= u0_x1.0 || x1 >= u0_x1.1 {
            continue;
        }
        let phi = cutoff.value(x1);
        let fms = lifted.get(phi, || {
            let mut v = Vec::with_capacity(ts.len() * ys.len());
            for &y in &ys {
                v.extend(ts.iter().map(|&t| fm.eval(t * phi + y)));
            }
            v
        });
        for j in 0..ys.len() {
            let x = [x1, fy[j]];
            let b = test.space.value(x);
            let db = test.space.gradient(x)[1];
            if b == 0.0 && db == 0.0 {
                continue;
            }
            let wxy = w1[i] * wy[j];
            initial_term -= wxy * u0.value(x) * b * d1[j];
            let div_part = phi * (d2[j] * b + d1[j] * d1[j] * db);
            let row = &fms[j * ts.len()..(j + 1) * ts.len()];
            let mut acc_t = 0.0;
            let mut acc_d = 0.0;
            for (k, &x2) in row.iter().enumerate() {
                let u = u0.value([x1, x2]);
                if u == 0.0 {
                    continue;
                }
                let (chi, dchi) = time[k];
                acc_t -= wt[k] * u * dchi * b * d1[j];
                acc_d += wt[k] * u * chi * div_part;
            }
            time_term += wxy * acc_t;
            divergence_term += wxy * acc_d;
        }
    }
    let sum = time_term + initial_term + divergence_term;
    Ok(WeakResidual {
        time_term,
        initial_term,
        divergence_term,
        residual: sum.abs(),
        scale: time_term.abs() + initial_term.abs() + divergence_term.abs(),
    })
}

/// A seeded battery of test functions whose supports sit inside `domain`.
pub fn test_battery(seed: u64, count: usize, domain: &Box2D, region: &Box2D, horizon: f64) -> Vec<TestFunction2D> {
    test_battery_with(seed, count, domain, region, horizon, (0.05, 0.3), (0.3, 1.0))
}

/// As [`test_battery`], with radii drawn as fractions `widths` of the domain
/// and time scales as fractions `spans` of the horizon.
pub fn test_battery_with(
    seed: u64,
    count: usize,
    domain: &Box2D,
    region: &Box2D,
    horizon: f64,
    widths: (f64, f64),
    spans: (f64, f64),
) -> Vec<TestFunction2D> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w1 = domain.x1.1 - domain.x1.0;
    let w2 = domain.x2.1 - domain.x2.0;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let c = [rng.random_range(region.x1.0..region.x1.1), rng.random_range(region.x2.0..region.x2.1)];
        let r = [rng.random_range(widths.0..widths.1) * w1, rng.random_range(widths.0..widths.1) * w2];
        let space = Bump2D { center: c, radii: r, amplitude: 1.0 };
        if !domain.contains_support(&space) {
            continue;
        }
        let time_scale = rng.random_range(spans.0..spans.1) * horizon;
        out.push(TestFunction2D { space, time_scale });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Distance {
    pub distance: f64,
    /// `|d_h − d_{h/2}|` between the two quadrature levels.
    pub quadrature_error: f64,
}

/// `‖u_a(t) − u_b(t)‖_{L¹(box)}` for two flows sharing `f` and the cutoff.
///
/// Computed in `ξ = f⁻¹(x₂)`, where `dx₂ = g(ξ) dξ` and each solution reads
/// `u₀(x₁, f_m(tφ(x₁) + h_θ(ξ)))`.
pub fn l1_distance(
    a: &FlowFamily,
    b: &FlowFamily,
    u0: &Bump2D,
    t: f64,
    domain: &Box2D,
    quad: &WeakQuadrature,
) -> Result<L1Distance> {
    let coarse = l1_distance_at(a, b, u0, t, domain, quad)?;
    let fine = l1_distance_at(a, b, u0, t, domain, &quad.refined())?;
    Ok(L1Distance { distance: fine, quadrature_error: (fine - coarse).abs() })
}

fn l1_distance_at(a: &FlowFamily, b: &FlowFamily, u0: &Bump2D, t: f64, domain: &Box2D, quad: &WeakQuadrature) -> Result<f64> {
    let f = a.f();
    let rule = GaussLegendre::new(quad.order);
    let (xi_lo, xi_hi) = (f.inverse(domain.x2.0)?, f.inverse(domain.x2.1)?);
    let (xis, wxi) = panel_nodes(&rule, &gap_panels(|x| x, xi_lo, xi_hi, quad.break_generation, quad.y_panels)?);
    let (x1s, w1) = panel_nodes(&rule, &uniform_panels(domain.x1.0, domain.x1.1, quad.x1_panels * 4));
    let u0_x1 = u0.support()[0];
    let mut total = 0.0;
    for (j, &xi) in xis.iter().enumerate() {
        let g = f.derivative(xi);
        if g == 0.0 {
            continue;
        }
        let (ya, yb) = (a.fm.h.eval(xi), b.fm.h.eval(xi));
        let mut acc = 0.0;
        for (i, &x1) in x1s.iter().enumerate() {
            if x1 <= u0_x1.0 || x1 >= u0_x1.1 {
                continue;
            }
            let ua = u0.value(a.flow_from_lifted(t, x1, ya));
            let ub = u0.value(b.flow_from_lifted(t, x1, yb));
            acc += w1[i] * (ua - ub).abs();
        }
        total += wxi[j] * g * acc;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonUniquenessReport {
    pub thetas: Vec<f64>,
    /// `residual_matrix[i][j]`: relative weak residual of theta `i` against test `j`.
    pub residual_matrix: Vec<Vec<f64>>,
    pub max_residual: Vec<f64>,
    pub distance_matrix: Vec<Vec<f64>>,
    pub distance_error_matrix: Vec<Vec<f64>>,
    /// Smallest off-diagonal distance.
    pub min_distance: f64,
}

/// Sequential report; callers wanting parallelism can call [`weak_residual`]
/// and [`l1_distance`] directly.
pub fn nonuniqueness_report(
    field: &RoughField2D,
    u0: &Bump2D,
    thetas: &[f64],
    t_probe: f64,
    battery: &[TestFunction2D],
    horizon: f64,
    quad: &WeakQuadrature,
) -> Result<NonUniquenessReport> {
    if thetas.is_empty() {
        return Err(Error::param("thetas", "need at least one value"));
    }
    let families: Vec<FlowFamily> =
        thetas.iter().map(|&th| FlowFamily::new(field.clone(), th)).collect::<Result<_>>()?;
    let domain = Box2D::default_for(&families[0]);
    let mut residual_matrix = Vec::new();
    for fam in &families {
        let row: Vec<f64> = battery
            .iter()
            .map(|test| weak_residual(fam, u0, test, horizon, &domain, quad).map(|r| r.relative()))
            .collect::<Result<_>>()?;
        residual_matrix.push(row);
    }
    let n = families.len();
    let mut distance_matrix = alloc::vec![alloc::vec![0.0; n]; n];
    let mut distance_error_matrix = alloc::vec![alloc::vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = l1_distance(&families[i], &families[j], u0, t_probe, &domain, quad)?;
            distance_matrix[i][j] = d.distance;
            distance_matrix[j][i] = d.distance;
            distance_error_matrix[i][j] = d.quadrature_error;
            distance_error_matrix[j][i] = d.quadrature_error;
        }
    }
    Ok(assemble_report(thetas.to_vec(), residual_matrix, distance_matrix, distance_error_matrix))
}

pub fn assemble_report(
    thetas: Vec<f64>,
    residual_matrix: Vec<Vec<f64>>,
    distance_matrix: Vec<Vec<f64>>,
    distance_error_matrix: Vec<Vec<f64>>,
) -> NonUniquenessReport {
    let max_residual = residual_matrix.iter().map(|r| r.iter().fold(0.0f64, |m, &v| m.max(v))).collect();
    let mut min_distance = f64::INFINITY;
    for (i, row) in distance_matrix.iter().enumerate() {
        for (j, &d) in row.iter().enumerate() {
            if i != j {
                min_distance = min_distance.min(d);
            }
        }
    }
    if thetas.len() < 2 {
        min_distance = 0.0;
    }
    NonUniquenessReport { thetas, residual_matrix, max_residual, distance_matrix, distance_error_matrix, min_distance }
}

/// Default datum: a bump centred at `(0.5, f(0.5))`.
pub fn default_initial_datum(family: &FlowFamily) -> Bump2D {
    let f = family.f();
    let c2 = f.eval(0.5);
    let r2 = 0.5 * (f.eval(0.8) - f.eval(0.2));
    Bump2D { center: [0.5, c2], radii: [0.4, r2], amplitude: 1.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor_map::BumpProfile;
    use crate::field::{build_field, Cutoff};

    fn family(theta: f64) -> FlowFamily {
        FlowFamily::new(build_field(BumpProfile::demo(0.25), Cutoff::default()).unwrap(), theta).unwrap()
    }

    #[test]
    fn bump_gradient_matches_differences() {
        let b = Bump2D::new([0.2, -0.1], [0.5, 0.3], 2.0).unwrap();
        let d = 1e-6;
        for &x in &[[0.3, 0.0], [0.0, -0.2], [0.6, 0.05]] {
            let g = b.gradient(x);
            let fx = (b.value([x[0] + d, x[1]]) - b.value([x[0] - d, x[1]])) / (2.0 * d);
            let fy = (b.value([x[0], x[1] + d]) - b.value([x[0], x[1] - d])) / (2.0 * d);
            assert!((g[0] - fx).abs() < 1e-7 && (g[1] - fy).abs() < 1e-7);
        }
        assert_eq!(b.value([5.0, 5.0]), 0.0);
    }

    #[test]
    fn bump_hessian_matches_differences() {
        let b = Bump2D::new([0.1, -0.2], [0.5, 0.3], 1.7).unwrap();
        let d = 1e-6;
        for x in [[0.2, -0.1], [0.4, -0.3], [-0.2, -0.15]] {
            let h = b.hessian(x);
            for j in 0..2 {
                let mut p = x;
                let mut m = x;
                p[j] += d;
                m[j] -= d;
                let (gp, gm) = (b.gradient(p), b.gradient(m));
                for i in 0..2 {
                    assert!((h[i][j] - (gp[i] - gm[i]) / (2.0 * d)).abs() < 1e-6 * (1.0 + h[i][j].abs()));
                }
            }
        }
    }

    #[test]
    fn time_profile_derivative() {
        let t = TestFunction2D { space: Bump2D::new([0.0, 0.0], [1.0, 1.0], 1.0).unwrap(), time_scale: 0.7 };
        assert_eq!(t.time_profile(0.0).0, 1.0);
        assert_eq!(t.time_profile(0.7).0, 0.0);
        let d = 1e-6;
        for &s in &[0.1, 0.4, 0.65] {
            let fd = (t.time_profile(s + d).0 - t.time_profile(s - d).0) / (2.0 * d);
            assert!((fd - t.time_profile(s).1).abs() < 1e-6);
        }
    }

    #[test]
    fn flow_identities() {
        let fam = family(1.0);
        let x = [0.4, fam.f().eval(0.3)];
        assert_eq!(fam.flow_map(0.0, x).unwrap(), x);
        let far = [5.0, 0.01];
        assert_eq!(fam.flow_map(0.8, far).unwrap(), far);
        let z = family(0.0);
        let a = z.flow_map(0.6, x).unwrap();
        let expect = z.f().eval(0.6 + z.f().inverse(x[1]).unwrap());
        assert!((a[1] - expect).abs() < 1e-12);
    }

    #[test]
    fn semigroup_on_plateau() {
        let fam = family(0.5);
        for &(s, t) in &[(0.2, 0.3), (0.5, 0.1), (0.05, 0.7)] {
            for &x1 in &[0.1, 0.5, 0.9] {
                let x = [x1, fam.f().eval(0.35)];
                let ab = fam.flow_map(s, fam.flow_map(t, x).unwrap()).unwrap();
                let direct = fam.flow_map(s + t, x).unwrap();
                assert!((ab[1] - direct[1]).abs() < 1e-10, "s={s} t={t}");
            }
        }
    }

    #[test]
    fn flow_ode_residual_small() {
        for theta in [0.0, 1.0] {
            let fam = family(theta);
            let pts: Vec<[f64; 2]> =
                [(0.5, 0.2), (0.1, 0.45), (1.5, 0.7), (-0.5, -0.2), (0.8, 1.3)].iter().map(|&(a, b)| [a, fam.f().eval(b)]).collect();
            let rep = flow_ode_residual(&fam, &[0.1, 0.35, 0.6, 0.9], &pts, 1e-4, 6).unwrap();
            assert!(rep.evaluated > 0);
            assert!(rep.max_residual < 1e-5, "theta={theta}: {rep:?}");
        }
    }

    #[test]
    fn flow_ode_residual_vanishes_off_cutoff() {
        let fam = family(1.0);
        let rep = flow_ode_residual(&fam, &[0.3], &[[4.0, 0.02]], 1e-4, 6).unwrap();
        assert_eq!(rep.max_residual, 0.0);
    }

    #[test]
    fn zero_datum_has_zero_residual() {
        let fam = family(1.0);
        let u0 = Bump2D::new([0.5, 0.0], [0.1, 0.01], 0.0).unwrap();
        let dom = Box2D::default_for(&fam);
        let tests = test_battery(1, 2, &dom, &dom, 1.0);
        for t in &tests {
            let r = weak_residual(&fam, &u0, t, 1.0, &dom, &WeakQuadrature::default()).unwrap();
            assert_eq!(r.residual, 0.0);
        }
    }

    #[test]
    fn sup_norm_not_increased() {
        let fam = family(1.0);
        let u0 = default_initial_datum(&fam);
        for &t in &[0.0, 0.3, 1.0] {
            for i in 0..20 {
                for j in 0..20 {
                    let x = [-1.0 + 3.0 * i as f64 / 19.0, fam.f().eval(-1.0 + 3.0 * j as f64 / 19.0)];
                    assert!(fam.solution(&u0, t, x).unwrap().abs() <= u0.sup());
                }
            }
        }
    }
}
