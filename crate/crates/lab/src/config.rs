use serde::{Deserialize, Serialize};
use transport_lab_core::young::YoungFunction;

use crate::LabError;

pub const SCHEMA_VERSION: u32 = 1;

/// Every block is optional in a config file; missing fields take the
/// defaults, and the fully resolved config is written into each output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Base seed; seeded suites use `seed + i` for run `i`.
    pub seed: u64,
    pub norm: NormConfig,
    pub counterexample: CounterexampleConfig,
    pub solver: SolverConfig,
    pub stability: StabilityConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            norm: NormConfig::default(),
            counterexample: CounterexampleConfig::default(),
            solver: SolverConfig::default(),
            stability: StabilityConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum YoungSpec {
    Zygmund { r: f64, s: f64 },
    SubExp { gamma: f64 },
    IteratedLog { k: u32, gamma: f64 },
}

impl YoungSpec {
    pub const EXP_L: YoungSpec = YoungSpec::SubExp { gamma: 0.0 };
    pub const EXP_L_OVER_LOG_L: YoungSpec = YoungSpec::SubExp { gamma: 1.0 };
    pub const L_LOG_L_LOGLOG_L: YoungSpec = YoungSpec::Zygmund { r: 1.0, s: 1.0 };

    pub fn young(&self) -> YoungFunction {
        match *self {
            YoungSpec::Zygmund { r, s } => YoungFunction::Zygmund { r, s },
            YoungSpec::SubExp { gamma } => YoungFunction::SubExp { gamma },
            YoungSpec::IteratedLog { k, gamma } => YoungFunction::IteratedLog { k, gamma },
        }
    }
}

/// A function on `[0, length)` sampled at equal cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    /// `value · χ_[0, measure)` on `[0, 1)`.
    Indicator { value: f64, measure: f64 },
    Samples { values: Vec<f64>, length: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormRequest {
    pub function: FunctionSpec,
    pub young: YoungSpec,
    /// Checked against the computed norm when present.
    #[serde(default)]
    pub expected: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormConfig {
    pub requests: Vec<NormRequest>,
    /// Random indicators checked against the closed-form modular equation.
    pub indicators: usize,
    /// Cells of the `[0, 1)` grid the indicators live on.
    pub indicator_cells: usize,
    pub oracle_tolerance: f64,
    /// Relative tolerance for user-supplied expected values.
    pub expected_tolerance: f64,
    /// Random bounded functions for the Hölder and interpolation checks.
    pub random_functions: usize,
    pub random_nodes: usize,
    pub quadrature_tolerance: f64,
}

impl Default for NormConfig {
    fn default() -> Self {
        NormConfig {
            requests: vec![NormRequest {
                function: FunctionSpec::Indicator { value: 3.0, measure: 1.0 },
                young: YoungSpec::EXP_L,
                expected: None,
            }],
            indicators: 50,
            indicator_cells: 1000,
            oracle_tolerance: 1e-9,
            expected_tolerance: 1e-6,
            random_functions: 100,
            random_nodes: 257,
            quadrature_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Integrability of the exact counterexample divergence.
    Exact,
    /// Non-uniqueness with the visible demo profile.
    Demo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    pub order: usize,
    pub time_panels: usize,
    pub x1_panels: usize,
    pub break_generation: u32,
    pub y_panels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        let q = transport_lab_core::flows::WeakQuadrature::default();
        QuadratureConfig {
            order: q.order,
            time_panels: q.time_panels,
            x1_panels: q.x1_panels,
            break_generation: q.break_generation,
            y_panels: q.y_panels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CounterexampleConfig {
    /// `None` runs both parts.
    pub profile: Option<Profile>,
    pub gammas: Vec<f64>,
    pub k_max: u32,
    /// `k_max` of the comparison run for the stability check.
    pub k_max_refined: u32,
    pub stability_tolerance: f64,
    pub samples_per_interval: usize,
    pub peak_decay: f64,
    pub thetas: Vec<f64>,
    pub battery_seed: u64,
    pub battery_size: usize,
    pub horizon: f64,
    pub probe_time: f64,
    pub residual_tolerance: f64,
    pub ode_tolerance: f64,
    pub ode_delta: f64,
    pub ode_generation: u32,
    /// Distances must exceed this multiple of their quadrature error.
    pub distance_factor: f64,
    pub quadrature: QuadratureConfig,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        CounterexampleConfig {
            profile: None,
            gammas: vec![1.2, 1.5, 1.9],
            k_max: 8,
            k_max_refined: 10,
            stability_tolerance: 1e-3,
            samples_per_interval: 40,
            peak_decay: 0.25,
            thetas: vec![0.0, 0.5, 1.0],
            battery_seed: 7,
            battery_size: 20,
            horizon: 1.0,
            probe_time: 1.0,
            residual_tolerance: 1e-4,
            ode_tolerance: 1e-5,
            ode_delta: 1e-4,
            ode_generation: 6,
            distance_factor: 10.0,
            quadrature: QuadratureConfig::default(),
        }
    }
}

/// `nx × ny` nodes and `nt` time steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub nt: usize,
}

impl std::str::FromStr for GridSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}")))
            .collect::<Result<_, _>>()?;
        match parts[..] {
            [nx, ny, nt] => Ok(GridSpec { nx, ny, nt }),
            _ => Err(format!("expected nx,ny,nt, got `{s}`")),
        }
    }
}

impl GridSpec {
    /// The seeded problem families are square.
    pub fn square(&self, what: &str) -> Result<usize, LabError> {
        if self.nx != self.ny {
            return Err(LabError::Config(format!("{what}: grid must be square, got {}x{}", self.nx, self.ny)));
        }
        Ok(self.nx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mollifier {
    pub radius: f64,
    /// Gauss–Legendre order of the field stencil.
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AprioriConfig {
    pub seeds: usize,
    pub grid: GridSpec,
    pub substeps: usize,
    pub mollifier: Mollifier,
    pub p: f64,
    pub tolerance: f64,
}

impl Default for AprioriConfig {
    fn default() -> Self {
        AprioriConfig {
            seeds: 20,
            grid: GridSpec { nx: 64, ny: 64, nt: 64 },
            substeps: 2,
            mollifier: Mollifier { radius: 0.1, order: 4 },
            p: 2.0,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConservationConfig {
    pub grid: GridSpec,
    pub substeps: usize,
    pub horizon: f64,
    pub mollifier: Mollifier,
    /// Off the vortex centre, so the datum actually moves.
    pub center: [f64; 2],
    /// Flat top out to the first radius, smooth fall to zero at the second.
    /// The flat top keeps the sampled maximum exact while it moves between nodes.
    pub plateau: [f64; 2],
    pub tolerance: f64,
}

impl Default for ConservationConfig {
    fn default() -> Self {
        ConservationConfig {
            grid: GridSpec { nx: 256, ny: 256, nt: 100 },
            substeps: 1,
            horizon: 1.0,
            mollifier: Mollifier { radius: 0.05, order: 4 },
            center: [0.25, 0.1],
            plateau: [0.1, 0.25],
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderFamily {
    pub name: String,
    pub field: LadderField,
    pub radii: Vec<f64>,
    pub grid: GridSpec,
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LadderField {
    /// Shear `(a(x₂), 0)` with a smooth profile.
    SmoothShear { amplitude: f64 },
    /// Shear whose profile has a kink at `at`.
    KinkedShear { amplitude: f64, at: f64 },
    /// The demo counterexample field on a window around the default datum.
    Counterexample { peak_decay: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CommutatorConfig {
    pub families: Vec<LadderFamily>,
}

impl Default for CommutatorConfig {
    fn default() -> Self {
        let shear_grid = GridSpec { nx: 161, ny: 161, nt: 32 };
        CommutatorConfig {
            families: vec![
                LadderFamily {
                    name: "smooth".into(),
                    field: LadderField::SmoothShear { amplitude: 1.0 },
                    radii: vec![0.1, 0.05, 0.025],
                    grid: shear_grid,
                    horizon: 0.5,
                },
                LadderFamily {
                    name: "kinked".into(),
                    field: LadderField::KinkedShear { amplitude: 1.0, at: 0.05 },
                    radii: vec![0.1, 0.05, 0.025],
                    grid: shear_grid,
                    horizon: 0.5,
                },
                LadderFamily {
                    name: "counterexample".into(),
                    field: LadderField::Counterexample { peak_decay: 0.25 },
                    radii: vec![0.01, 0.005, 0.0025],
                    grid: GridSpec { nx: 321, ny: 97, nt: 32 },
                    horizon: 0.5,
                },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProductConfig {
    pub seeds: usize,
    pub grid: GridSpec,
    pub substeps: usize,
    pub mollifier: Mollifier,
    pub battery_size: usize,
    pub tolerance: f64,
}

impl Default for ProductConfig {
    fn default() -> Self {
        ProductConfig {
            seeds: 10,
            grid: GridSpec { nx: 96, ny: 96, nt: 128 },
            substeps: 1,
            mollifier: Mollifier { radius: 0.1, order: 4 },
            battery_size: 20,
            tolerance: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub apriori: AprioriConfig,
    pub conservation: ConservationConfig,
    pub commutator: CommutatorConfig,
    pub product: ProductConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComparatorConfig {
    pub epsilon: f64,
    pub beta: f64,
    pub horizon: f64,
    pub steps: Vec<usize>,
    pub min_order: f64,
    pub start_tolerance: f64,
}

impl Default for ComparatorConfig {
    fn default() -> Self {
        ComparatorConfig {
            epsilon: 1e-20,
            beta: 1.0,
            horizon: 0.1,
            steps: vec![1000, 2000, 4000],
            min_order: 1.8,
            start_tolerance: 1e-14,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuantConfig {
    pub seeds: usize,
    pub grid: GridSpec,
    pub substeps: usize,
    pub mollifier: Mollifier,
    pub horizon: f64,
    pub amplitude: f64,
    pub strength: [f64; 2],
    pub p: f64,
    pub tolerance: f64,
    /// Divergence-free runs with a nonzero split, where `Δ = 0`.
    pub divergence_free_runs: usize,
    /// Tolerance on `margin − 16e∫β` for those runs.
    pub divergence_free_tolerance: f64,
}

impl Default for QuantConfig {
    fn default() -> Self {
        QuantConfig {
            seeds: 10,
            grid: GridSpec { nx: 64, ny: 64, nt: 32 },
            substeps: 2,
            mollifier: Mollifier { radius: 0.1, order: 8 },
            horizon: 0.1,
            amplitude: 1e-6,
            strength: [0.002, 0.01],
            p: 2.0,
            tolerance: 1e-3,
            divergence_free_runs: 2,
            divergence_free_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LadderConfig {
    pub rungs: u32,
    /// Peak of the perturbation before halving.
    pub amplitude: f64,
    pub radius: f64,
    /// Uniform sup bound on the perturbed data.
    pub sup_bound: f64,
}

impl Default for LadderConfig {
    fn default() -> Self {
        LadderConfig { rungs: 5, amplitude: 1e-6, radius: 0.2, sup_bound: 1e-5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityConfig {
    pub comparator: ComparatorConfig,
    pub quant: QuantConfig,
    pub ladder: LadderConfig,
}

fn positive(name: &str, v: f64) -> Result<(), LabError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(LabError::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, LabError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), LabError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(LabError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let n = &self.norm;
        for r in &n.requests {
            match &r.function {
                FunctionSpec::Indicator { value, measure } => {
                    if !value.is_finite() || !(*measure >= 0.0 && *measure <= 1.0) {
                        return Err(LabError::Config(format!("indicator needs finite value and measure in [0, 1], got {value}, {measure}")));
                    }
                }
                FunctionSpec::Samples { values, length } => {
                    positive("samples length", *length)?;
                    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                        return Err(LabError::Config("samples must be finite and nonempty".into()));
                    }
                }
            }
            r.young.young().validate().map_err(|e| LabError::Config(e.to_string()))?;
        }
        if n.indicator_cells < 2 || n.random_nodes < 3 {
            return Err(LabError::Config("norm grids need at least 2 cells and 3 nodes".into()));
        }
        let c = &self.counterexample;
        for &g in &c.gammas {
            if !(g > 1.0 && g < 2.0) {
                return Err(LabError::Config(format!("gamma must lie in (1, 2), got {g}")));
            }
        }
        if c.k_max == 0 || c.k_max_refined <= c.k_max {
            return Err(LabError::Config("need 0 < k_max < k_max_refined".into()));
        }
        if !(c.peak_decay > 0.0 && c.peak_decay < 1.0) {
            return Err(LabError::Config(format!("peak_decay must lie in (0, 1), got {}", c.peak_decay)));
        }
        if c.profile != Some(Profile::Exact) && c.thetas.len() < 2 {
            return Err(LabError::Config("non-uniqueness needs at least two thetas".into()));
        }
        if c.thetas.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(LabError::Config("thetas must be nonnegative".into()));
        }
        positive("horizon", c.horizon)?;
        let s = &self.solver;
        s.apriori.grid.square("solver.apriori")?;
        s.conservation.grid.square("solver.conservation")?;
        let [r0, r1] = s.conservation.plateau;
        if !(r0 > 0.0 && r0 < r1 && r1.is_finite()) {
            return Err(LabError::Config("solver.conservation.plateau needs 0 < inner < outer".into()));
        }
        s.product.grid.square("solver.product")?;
        for f in &s.commutator.families {
            if f.radii.len() < 2 {
                return Err(LabError::Config(format!("commutator family `{}` needs at least two radii", f.name)));
            }
        }
        let st = &self.stability;
        st.quant.grid.square("stability.quant")?;
        if st.comparator.steps.len() < 2 {
            return Err(LabError::Config("comparator ladder needs at least two step counts".into()));
        }
        positive("comparator epsilon", st.comparator.epsilon)?;
        if st.quant.strength[0] <= 0.0 || st.quant.strength[1] <= st.quant.strength[0] {
            return Err(LabError::Config("quant strength must satisfy 0 < lo < hi".into()));
        }
        Ok(())
    }
}
