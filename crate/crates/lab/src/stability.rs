use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use transport_lab_core::flows::{Box2D, Bump2D};
use transport_lab_core::problems::{gaussian, periodic_box, rough_problem, BumpSum, RoughOptions};
use transport_lab_core::solver::{
    duality_pairing_check, output_times, Constant, DivergenceSplit, SolverOptions, TransportProblem, Vortex, Zero,
};
use transport_lab_core::stability::{
    beta_series, comparator_identity_residual, epsilon_ceiling, quant_bound_check, split_series, stability_experiment,
    stability_report, Comparator, LogDepth, GROWTH,
};

use crate::config::ExperimentConfig;
use crate::parallel;
use crate::report::{num, Check, SuiteReport, Table};
use crate::solver::spec;
use crate::{Context, LabError};

pub fn run(cfg: &ExperimentConfig) -> Result<SuiteReport, LabError> {
    let mut rep = SuiteReport::new("stability");
    comparator(cfg, &mut rep)?;
    quant(cfg, &mut rep)?;
    divergence_free(cfg, &mut rep)?;
    ladder(cfg, &mut rep)?;
    Ok(rep)
}

#[derive(Serialize)]
struct ComparatorRecord {
    epsilon: f64,
    epsilon_ceiling: f64,
    steps: Vec<usize>,
    residuals: Vec<f64>,
    orders: Vec<f64>,
    alpha_star_at_zero: f64,
}

fn comparator(cfg: &ExperimentConfig, rep: &mut SuiteReport) -> Result<(), LabError> {
    let c = &cfg.stability.comparator;
    let ctx = || "comparator identity".to_string();
    let residuals = c
        .steps
        .iter()
        .map(|&n| comparator_identity_residual(c.epsilon, &vec![c.beta; n + 1], &output_times(c.horizon, n)))
        .collect::<transport_lab_core::Result<Vec<_>>>()
        .during(ctx)?;
    let orders: Vec<f64> = c
        .steps
        .windows(2)
        .zip(residuals.windows(2))
        .map(|(s, r)| (r[0] / r[1]).ln() / (s[1] as f64 / s[0] as f64).ln())
        .collect();
    let worst = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    rep.check(Check::new(
        "comparator.order",
        worst >= c.min_order,
        format!(
            "identity residuals {:?} at steps {:?}, observed orders {orders:.3?}",
            residuals.iter().map(|r| format!("{r:.3e}")).collect::<Vec<_>>(),
            c.steps
        ),
    ));
    let a0 = Comparator::new(c.epsilon).during(ctx)?.alpha_star(0.0);
    let rel = (a0 - c.epsilon).abs() / c.epsilon;
    rep.check(Check::new(
        "comparator.start",
        rel <= c.start_tolerance,
        format!("α*(0) = {a0:e} for ε = {:e} (relative {rel:e})", c.epsilon),
    ));
    let mut t = Table::new("comparator", &["steps", "identity_residual"]);
    for (s, r) in c.steps.iter().zip(&residuals) {
        t.push(vec![s.to_string(), num(*r)]);
    }
    rep.tables.push(t);
    rep.set(
        "comparator",
        ComparatorRecord {
            epsilon: c.epsilon,
            epsilon_ceiling: epsilon_ceiling(),
            steps: c.steps.clone(),
            residuals,
            orders,
            alpha_star_at_zero: a0,
        },
    );
    Ok(())
}

#[derive(Serialize)]
struct BoundRecord {
    initial: f64,
    maximum: f64,
    log_change: f64,
    allowance: f64,
    margin: f64,
    sup_bound: f64,
    log_epsilon_threshold: f64,
    smallness_holds: bool,
}

impl From<transport_lab_core::stability::QuantBound> for BoundRecord {
    fn from(b: transport_lab_core::stability::QuantBound) -> Self {
        BoundRecord {
            initial: b.initial,
            maximum: b.maximum,
            log_change: b.log_change,
            allowance: b.allowance,
            margin: b.margin,
            sup_bound: b.sup_bound,
            log_epsilon_threshold: b.log_epsilon_threshold,
            smallness_holds: b.smallness_holds,
        }
    }
}

#[derive(Serialize)]
struct QuantRow {
    seed: u64,
    strength: f64,
    triple: BoundRecord,
    double: BoundRecord,
    domination_in_regime: bool,
    domination_inequality: bool,
    domination_excursions: usize,
    domination_holds: bool,
    #[serde(skip)]
    series: Vec<[f64; 4]>,
}

fn opts(cfg: &ExperimentConfig) -> SolverOptions {
    SolverOptions { steps: cfg.stability.quant.grid.nt, substeps: cfg.stability.quant.substeps }
}

fn rough(cfg: &ExperimentConfig, seed: u64) -> Result<(TransportProblem, f64), LabError> {
    let q = &cfg.stability.quant;
    let o = RoughOptions {
        nodes: q.grid.square("stability.quant")?,
        horizon: q.horizon,
        amplitude: q.amplitude,
        strength: (q.strength[0], q.strength[1]),
    };
    let (p, source) = rough_problem(seed, o).during(|| format!("rough problem seed {seed}"))?;
    Ok((p, source.strength))
}

fn quant(cfg: &ExperimentConfig, rep: &mut SuiteReport) -> Result<(), LabError> {
    let q = &cfg.stability.quant;
    let sp = spec(&q.mollifier)?;
    let rows = (0..q.seeds as u64)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i);
            let ctx = || format!("quantitative run seed {seed}");
            let (p, strength) = rough(cfg, seed)?;
            let u = parallel::solve(&p, &sp, opts(cfg), &ctx())?;
            let (b1, b2) = split_series(&p, &u.times).during(ctx)?;
            let beta3 = beta_series(&b1, &b2, &LogDepth::Triple.young()).during(ctx)?;
            let beta2 = beta_series(&b1, &b2, &LogDepth::Double.young()).during(ctx)?;
            let r = stability_report(&u, &beta3, q.p, LogDepth::Triple).during(ctx)?;
            let d = quant_bound_check(&u, &beta2, q.p, LogDepth::Double).during(ctx)?;
            let series = (0..r.times.len()).map(|n| [r.times[n], r.alpha[n], r.alpha_star[n], r.beta[n]]).collect();
            Ok(QuantRow {
                seed,
                strength,
                triple: r.bound.into(),
                double: d.into(),
                domination_in_regime: r.domination.in_regime,
                domination_inequality: r.domination.inequality_holds,
                domination_excursions: r.domination.excursions,
                domination_holds: r.domination.holds(),
                series,
            })
        })
        .collect::<Result<Vec<_>, LabError>>()?;
    let worst = |f: fn(&QuantRow) -> f64| rows.iter().map(f).fold(f64::INFINITY, f64::min);
    let small = |f: fn(&QuantRow) -> bool| rows.iter().filter(|r| f(r)).count();
    let (w3, w2) = (worst(|r| r.triple.margin), worst(|r| r.double.margin));
    rep.check(Check::new(
        "quant.triple",
        w3 >= -q.tolerance,
        format!(
            "smallest triple-log margin {w3:.4e} over {} runs (smallness holds in {})",
            rows.len(),
            small(|r| r.triple.smallness_holds)
        ),
    ));
    rep.check(Check::new(
        "quant.double",
        w2 >= -q.tolerance,
        format!(
            "smallest double-log margin {w2:.4e} over {} runs (smallness holds in {})",
            rows.len(),
            small(|r| r.double.smallness_holds)
        ),
    ));
    let tested = small(|r| r.domination_in_regime && r.domination_inequality);
    rep.check(Check::new(
        "comparator.domination",
        rows.iter().all(|r| r.domination_holds),
        format!("α ≤ α* on every run where the hypotheses hold ({tested} of {} runs)", rows.len()),
    ));

    // Duality pairing of the first run, reported only.
    let (p, _) = rough(cfg, cfg.seed)?;
    let window = Box2D { x1: (-0.5, 0.5), x2: (-0.5, 0.5) };
    let dp = duality_pairing_check(&p, &sp, opts(cfg), &window, q.grid.nt).during(|| "duality pairing".into())?;
    let rel = dp.identity_residual / dp.lhs.abs().max(f64::MIN_POSITIVE);
    rep.check(Check::diagnostic(
        "duality.identity",
        rel < 1e-4,
        format!(
            "∫u v at T₀ {:e}, ∫u v at 0 plus source {:e}, bound {:e}, relative identity residual {rel:.2e}",
            dp.lhs,
            dp.initial_pairing + dp.source,
            dp.rhs
        ),
    ));

    let mut table = Table::new("quant", &["seed", "strength", "depth", "initial", "maximum", "log_change", "allowance", "margin", "log_epsilon_threshold", "smallness_holds"]);
    let mut series = Table::new("series", &["seed", "t", "alpha", "alpha_star", "beta"]);
    for r in &rows {
        for (name, b) in [("triple", &r.triple), ("double", &r.double)] {
            table.push(vec![
                r.seed.to_string(),
                num(r.strength),
                name.into(),
                num(b.initial),
                num(b.maximum),
                num(b.log_change),
                num(b.allowance),
                num(b.margin),
                num(b.log_epsilon_threshold),
                b.smallness_holds.to_string(),
            ]);
        }
        for s in &r.series {
            series.push(vec![r.seed.to_string(), num(s[0]), num(s[1]), num(s[2]), num(s[3])]);
        }
    }
    rep.tables.push(table);
    rep.tables.push(series);
    rep.set("quant", &rows);
    rep.set(
        "duality",
        serde_json::json!({
            "lhs": dp.lhs, "lhs_sharp": dp.lhs_sharp, "initial_pairing": dp.initial_pairing,
            "source": dp.source, "rhs": dp.rhs, "identity_residual": dp.identity_residual,
        }),
    );
    Ok(())
}

#[derive(Serialize)]
struct DivFreeRow {
    strength: f64,
    allowance: f64,
    margin: f64,
    expected_margin: f64,
}

/// The vortex conserves every norm, so `Δ = 0` and the margin is the whole
/// allowance `16e∫β`; the split `(g, −g)` keeps `β` nonzero.
fn divergence_free(cfg: &ExperimentConfig, rep: &mut SuiteReport) -> Result<(), LabError> {
    let q = &cfg.stability.quant;
    let n = q.grid.square("stability.quant")?;
    let sp = spec(&q.mollifier)?;
    let grid = periodic_box(n).during(|| "divergence-free grid".into())?;
    let u0 = gaussian(&grid, [0.2, -0.1], [0.2, 0.12])
        .and_then(|g| g.scale(q.amplitude))
        .during(|| "divergence-free datum".into())?;
    let runs = q.divergence_free_runs.max(1);
    let rows = (0..runs)
        .into_par_iter()
        .map(|i| {
            let s = q.strength[0] + (q.strength[1] - q.strength[0]) * i as f64 / (runs.max(2) - 1) as f64;
            let ctx = || format!("divergence-free run with g = {s}");
            let vortex = Vortex { omega: 1.0, center: [0.0, 0.0], inner: 0.7, outer: 0.95 };
            let p = TransportProblem::new(Arc::new(vortex), Arc::new(Zero), u0.clone(), q.horizon)
                .during(ctx)?
                .with_split(DivergenceSplit { b1: Arc::new(Constant(s)), b2: Arc::new(Constant(-s)) });
            let u = parallel::solve(&p, &sp, opts(cfg), &ctx())?;
            let (b1, b2) = split_series(&p, &u.times).during(ctx)?;
            let beta = beta_series(&b1, &b2, &LogDepth::Triple.young()).during(ctx)?;
            let b = quant_bound_check(&u, &beta, q.p, LogDepth::Triple).during(ctx)?;
            let ib = transport_lab_core::stability::cumulative_trapezoid(&u.times, &beta);
            Ok(DivFreeRow { strength: s, allowance: b.allowance, margin: b.margin, expected_margin: GROWTH * ib[ib.len() - 1] })
        })
        .collect::<Result<Vec<_>, LabError>>()?;
    let worst = rows.iter().map(|r| (r.margin - r.expected_margin).abs()).fold(0.0f64, f64::max);
    rep.check(Check::new(
        "quant.divergence_free",
        worst <= q.divergence_free_tolerance && rows.iter().all(|r| r.expected_margin > 0.0),
        format!(
            "margins {:?} against 16e∫β, largest gap {worst:e}",
            rows.iter().map(|r| format!("{:.6e}", r.margin)).collect::<Vec<_>>()
        ),
    ));
    rep.set("divergence_free", &rows);
    Ok(())
}

#[derive(Serialize)]
struct RungRow {
    k: u32,
    initial_gap: f64,
    difference: f64,
    alpha_star: f64,
    bound_holds: bool,
}

fn ladder(cfg: &ExperimentConfig, rep: &mut SuiteReport) -> Result<(), LabError> {
    let l = &cfg.stability.ladder;
    let q = &cfg.stability.quant;
    let ctx = || "stability ladder".to_string();
    let (p, _) = rough(cfg, cfg.seed)?;
    let bump = BumpSum(vec![Bump2D { center: [0.1, -0.1], radii: [l.radius, l.radius], amplitude: l.amplitude }])
        .sample(p.grid())
        .during(ctx)?;
    let times = output_times(q.horizon, q.grid.nt);
    let (b1, b2) = split_series(&p, &times).during(ctx)?;
    let beta = beta_series(&b1, &b2, &LogDepth::Triple.young()).during(ctx)?;
    let table = stability_experiment(&p, &bump, l.rungs, q.p, l.sup_bound, &beta, &spec(&q.mollifier)?, opts(cfg))
        .during(ctx)?;
    let rows: Vec<RungRow> = table
        .rungs
        .iter()
        .map(|r| RungRow {
            k: r.k,
            initial_gap: r.initial_gap,
            difference: r.difference,
            alpha_star: r.alpha_star,
            bound_holds: r.bound_holds,
        })
        .collect();
    rep.check(Check::new(
        "ladder.monotone",
        table.monotone,
        format!("differences {:?}", rows.iter().map(|r| format!("{:.4e}", r.difference)).collect::<Vec<_>>()),
    ));
    let worst = rows.iter().map(|r| r.difference.powf(q.p) / r.alpha_star).fold(0.0f64, f64::max);
    rep.check(Check::new(
        "ladder.bound",
        rows.iter().all(|r| r.bound_holds),
        format!("{} rungs, largest ‖u^k − u‖^p / α* = {worst:.3e}", rows.len()),
    ));
    let mut t = Table::new("ladder", &["k", "initial_gap", "difference", "alpha_star", "bound_holds"]);
    for r in &rows {
        t.push(vec![r.k.to_string(), num(r.initial_gap), num(r.difference), num(r.alpha_star), r.bound_holds.to_string()]);
    }
    rep.tables.push(t);
    rep.set("ladder", serde_json::json!({ "p": table.p, "beta_integral": table.beta_integral, "rungs": rows }));
    Ok(())
}
