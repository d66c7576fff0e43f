//! Uniform grids with quadrature weights and functions sampled on them.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::powf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Trapezoid,
    /// Composite Simpson; needs an odd node count on non-periodic axes.
    Simpson,
}

/// A uniform axis. Periodic axes omit the right endpoint and use equal weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub periodic: bool,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::checked(Axis { lo, hi, n, periodic: false })
    }

    pub fn periodic(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::checked(Axis { lo, hi, n, periodic: true })
    }

    fn checked(a: Axis) -> Result<Self> {
        if !(a.hi > a.lo) || !a.lo.is_finite() || !a.hi.is_finite() {
            return Err(Error::param("axis", format!("need finite lo < hi, got [{}, {}]", a.lo, a.hi)));
        }
        if a.n < 2 {
            return Err(Error::param("axis", "need at least two nodes"));
        }
        Ok(a)
    }

    pub fn spacing(&self) -> f64 {
        if self.periodic {
            (self.hi - self.lo) / self.n as f64
        } else {
            (self.hi - self.lo) / (self.n - 1) as f64
        }
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn node(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    pub fn weights(&self, rule: Rule) -> Result<Vec<f64>> {
        let h = self.spacing();
        let n = self.n;
        if self.periodic {
            // The periodic trapezoid rule; spectrally accurate for smooth data,
            // so the requested rule is ignored.
            return Ok(alloc::vec![h; n]);
        }
        match rule {
            Rule::Trapezoid => {
                let mut w = alloc::vec![h; n];
                w[0] = 0.5 * h;
                w[n - 1] = 0.5 * h;
                Ok(w)
            }
            Rule::Simpson => {
                if n.is_multiple_of(2) {
                    return Err(Error::param("rule", "Simpson weights need an odd number of nodes"));
                }
                Ok((0..n)
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
                    .collect())
            }
        }
    }

    /// Wrap a coordinate into `[lo, hi)` on periodic axes; identity otherwise.
    pub fn wrap(&self, x: f64) -> f64 {
        if !self.periodic {
            return x;
        }
        let l = self.length();
        let mut y = (x - self.lo) % l;
        if y < 0.0 {
            y += l;
        }
        self.lo + y
    }
}

/// A 1D or 2D tensor grid. Values are stored with the x index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub x: Axis,
    pub y: Option<Axis>,
    pub rule: Rule,
}

impl Grid {
    pub fn line(x: Axis) -> Self {
        Grid { x, y: None, rule: Rule::Trapezoid }
    }

    pub fn plane(x: Axis, y: Axis) -> Self {
        Grid { x, y: Some(y), rule: Rule::Trapezoid }
    }

    pub fn with_rule(mut self, rule: Rule) -> Self {
        self.rule = rule;
        self
    }

    pub fn ny(&self) -> usize {
        self.y.map_or(1, |a| a.n)
    }

    pub fn len(&self) -> usize {
        self.x.n * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.x.n + i
    }

    pub fn point(&self, k: usize) -> (f64, f64) {
        let i = k % self.x.n;
        let j = k / self.x.n;
        (self.x.node(i), self.y.map_or(0.0, |a| a.node(j)))
    }

    pub fn cell_area(&self) -> f64 {
        self.x.spacing() * self.y.map_or(1.0, |a| a.spacing())
    }

    pub fn weights(&self) -> Result<Vec<f64>> {
        let wx = self.x.weights(self.rule)?;
        match self.y {
            None => Ok(wx),
            Some(ay) => {
                let wy = ay.weights(self.rule)?;
                let mut w = Vec::with_capacity(self.len());
                for &b in &wy {
                    for &a in &wx {
                        w.push(a * b);
                    }
                }
                Ok(w)
            }
        }
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self, other)));
        }
        Ok(())
    }
}

/// Values on a grid together with the grid's quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite sample {v}")));
        }
        let weights = grid.weights()?;
        Ok(SampledFunction { grid, values, weights })
    }

    pub fn from_fn<F: FnMut(f64, f64) -> f64>(grid: Grid, mut f: F) -> Result<Self> {
        let values = (0..grid.len())
            .map(|k| {
                let (x, y) = grid.point(k);
                f(x, y)
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Grid) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, alloc::vec![0.0; n])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map<F: FnMut(f64) -> f64>(&self, mut f: F) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with<F: FnMut(f64, f64) -> f64>(&self, other: &Self, mut f: F) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Self::new(
            self.grid.clone(),
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        self.map(|v| c * v)
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// Quadrature of `F(|f|)` with the grid weights.
    pub fn integrate_abs_with<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.values.iter().zip(&self.weights).map(|(v, w)| w * f(v.abs())).sum()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `∫|f|^p`; for `p = ∞` the sup norm.
    pub fn lp_norm_pow(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.sup_norm();
        }
        if p == 1.0 {
            return self.integrate_abs_with(|a| a);
        }
        if p == 2.0 {
            return self.integrate_abs_with(|a| a * a);
        }
        self.integrate_abs_with(|a| powf(a, p))
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.sup_norm();
        }
        powf(self.lp_norm_pow(p), 1.0 / p)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Decreasing rearrangement of `|f|` on the same grid.
    ///
    /// Only meaningful when every node carries the same weight, i.e. on
    /// periodic grids.
    pub fn decreasing_rearrangement(&self) -> Result<Self> {
        let w0 = self.weights[0];
        if self.weights.iter().any(|&w| w != w0) {
            return Err(Error::Precondition("rearrangement needs equal quadrature weights".into()));
        }
        let mut v: Vec<f64> = self.values.iter().map(|x| x.abs()).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        Self::new(self.grid.clone(), v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::sin;

    #[test]
    fn zero_function_integrates_to_exact_zero() {
        let g = Grid::plane(Axis::new(0.0, 1.0, 11).unwrap(), Axis::new(-1.0, 2.0, 7).unwrap());
        let z = SampledFunction::zeros(g).unwrap();
        assert_eq!(z.integral(), 0.0);
        assert_eq!(z.lp_norm(2.0), 0.0);
    }

    #[test]
    fn rules_integrate_sine() {
        let ax = Axis::new(0.0, core::f64::consts::PI, 201).unwrap();
        let t = SampledFunction::from_fn(Grid::line(ax), |x, _| sin(x)).unwrap();
        assert!((t.integral() - 2.0).abs() < 1e-4);
        let s = SampledFunction::from_fn(Grid::line(ax).with_rule(Rule::Simpson), |x, _| sin(x)).unwrap();
        assert!((s.integral() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn simpson_rejects_even_counts() {
        let ax = Axis::new(0.0, 1.0, 10).unwrap();
        assert!(ax.weights(Rule::Simpson).is_err());
    }

    #[test]
    fn sup_norm_is_max_abs() {
        let ax = Axis::new(0.0, 1.0, 5).unwrap();
        let f = SampledFunction::new(Grid::line(ax), alloc::vec![0.0, -3.0, 1.0, 2.0, 0.5]).unwrap();
        assert_eq!(f.lp_norm(f64::INFINITY), 3.0);
    }

    #[test]
    fn periodic_wrap() {
        let ax = Axis::periodic(-1.0, 1.0, 8).unwrap();
        assert!((ax.wrap(1.5) - (-0.5)).abs() < 1e-15);
        assert!((ax.wrap(-1.25) - 0.75).abs() < 1e-15);
    }
}
