use rayon::prelude::*;
use serde::Serialize;

use transport_lab_core::cantor_map::BumpProfile;
use transport_lab_core::monotone::MonotoneMap;
use transport_lab_core::field::{
    boundary_integral_check, build_field, orlicz_divergence_integral, pointwise_product_bound_check, Cutoff,
};
use transport_lab_core::flows::{
    assemble_report, default_initial_datum, flow_ode_residual, l1_distance, test_battery, weak_residual, Box2D,
    FlowFamily, WeakQuadrature,
};

use crate::config::{ExperimentConfig, Profile};
use crate::report::{num, Check, SuiteReport, Table};
use crate::{Context, LabError};

/// Pointwise samples required of the product bound.
pub const MIN_PRODUCT_SAMPLES: usize = 10_000;

#[derive(Serialize)]
struct Integrability {
    gamma: f64,
    k_max: u32,
    value: f64,
    tail_bound: f64,
    refined_value: f64,
    refined_tail_bound: f64,
    relative_change: f64,
    max_log_product: f64,
    max_bracket: f64,
    product_bound: f64,
    samples: usize,
    boundary_quadrature: f64,
    log_claim_series: f64,
    series_is_lower_estimate: bool,
}

pub fn run(cfg: &ExperimentConfig) -> Result<SuiteReport, LabError> {
    let mut rep = SuiteReport::new("counterexample");
    let c = &cfg.counterexample;
    if c.profile != Some(Profile::Demo) {
        integrability(cfg, &mut rep)?;
    }
    if c.profile != Some(Profile::Exact) {
        nonuniqueness(cfg, &mut rep)?;
    }
    Ok(rep)
}

fn integrability(cfg: &ExperimentConfig, rep: &mut SuiteReport) -> Result<(), LabError> {
    let c = &cfg.counterexample;
    let rows = c
        .gammas
        .par_iter()
        .map(|&gamma| {
            let ctx = || format!("integrability at gamma = {gamma}");
            let a = orlicz_divergence_integral(gamma, c.k_max).during(ctx)?;
            let b = orlicz_divergence_integral(gamma, c.k_max_refined).during(ctx)?;
            let p = pointwise_product_bound_check(gamma, c.k_max, c.samples_per_interval).during(ctx)?;
            let bd = boundary_integral_check(gamma).during(ctx)?;
            let (s, t) = (a.value + a.tail_bound, b.value + b.tail_bound);
            Ok(Integrability {
                gamma,
                k_max: c.k_max,
                value: a.value,
                tail_bound: a.tail_bound,
                refined_value: b.value,
                refined_tail_bound: b.tail_bound,
                relative_change: (s - t).abs() / s.abs().max(t.abs()),
                max_log_product: p.max_log_product,
                max_bracket: p.max_bracket,
                product_bound: p.bound,
                samples: p.samples,
                boundary_quadrature: bd.quadrature,
                log_claim_series: bd.log_series,
                series_is_lower_estimate: bd.series_is_lower_estimate,
            })
        })
        .collect::<Result<Vec<_>, LabError>>()?;
    let mut table = Table::new(
        "integrability",
        &["gamma", "k_max", "value", "tail_bound", "refined_value", "refined_tail_bound", "max_log_product", "bound"],
    );
    for r in &rows {
        let g = r.gamma;
        let finite = (r.value + r.tail_bound).is_finite() && (r.refined_value + r.refined_tail_bound).is_finite();
        rep.check(Check::new(
            format!("integrability.finite[{g}]"),
            finite,
            format!("value {} + tail_bound {}", r.value, r.tail_bound),
        ));
        rep.check(Check::diagnostic(
            format!("integrability.stable[{g}]"),
            r.relative_change <= c.stability_tolerance,
            format!(
                "value + tail_bound {} at k_max {} vs {} at {} (relative change {:.3e}, value alone {:.3e})",
                r.value + r.tail_bound,
                c.k_max,
                r.refined_value + r.refined_tail_bound,
                c.k_max_refined,
                r.relative_change,
                (r.value - r.refined_value).abs() / r.value.abs().max(f64::MIN_POSITIVE),
            ),
        ));
        rep.check(Check::new(
            format!("pointwise_bound[{g}]"),
            r.max_log_product <= r.product_bound && r.samples >= MIN_PRODUCT_SAMPLES,
            format!(
                "max log product {} vs e·γ^γ = {} over {} samples (largest bracket {:e})",
                r.max_log_product, r.product_bound, r.samples, r.max_bracket
            ),
        ));
        rep.check(Check::new(
            format!("claim_series[{g}]"),
            r.boundary_quadrature.ln() <= r.log_claim_series,
            format!(
                "log quadrature {} vs log series {}{}",
                r.boundary_quadrature.ln(),
                r.log_claim_series,
                if r.series_is_lower_estimate { " (lower estimate)" } else { "" }
            ),
        ));
        table.push(vec![
            num(g),
            r.k_max.to_string(),
            num(r.value),
            num(r.tail_bound),
            num(r.refined_value),
            num(r.refined_tail_bound),
            num(r.max_log_product),
            num(r.product_bound),
        ]);
    }
    rep.set("integrability", &rows);
    rep.tables.push(table);
    Ok(())
}

#[derive(Serialize)]
struct NonUniqueness {
    thetas: Vec<f64>,
    max_residual: Vec<f64>,
    distance_matrix: Vec<Vec<f64>>,
    distance_error_matrix: Vec<Vec<f64>>,
    min_distance: f64,
    flow_ode_residual: Vec<f64>,
    flow_ode_evaluated: Vec<usize>,
}

fn nonuniqueness(cfg: &ExperimentConfig, rep: &mut SuiteReport) -> Result<(), LabError> {
    let c = &cfg.counterexample;
    let q = &c.quadrature;
    let quad = WeakQuadrature {
        order: q.order,
        time_panels: q.time_panels,
        x1_panels: q.x1_panels,
        break_generation: q.break_generation,
        y_panels: q.y_panels,
    };
    let field = build_field(BumpProfile::demo(c.peak_decay), Cutoff::default()).during(|| "demo field".into())?;
    let families = c
        .thetas
        .iter()
        .map(|&t| FlowFamily::new(field.clone(), t).during(|| format!("flow family theta = {t}")))
        .collect::<Result<Vec<_>, _>>()?;
    let f = families[0].f();
    let u0 = default_initial_datum(&families[0]);
    let domain = Box2D::default_for(&families[0]);
    let region = Box2D { x1: (-0.5, 1.5), x2: (f.eval(-1.0), f.eval(1.5)) };
    let battery = test_battery(c.battery_seed, c.battery_size, &domain, &region, c.horizon);

    let n = families.len();
    let jobs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..battery.len()).map(move |j| (i, j))).collect();
    let residuals = jobs
        .par_iter()
        .map(|&(i, j)| {
            weak_residual(&families[i], &u0, &battery[j], c.horizon, &domain, &quad)
                .map(|r| r.relative())
                .during(|| format!("weak residual theta = {}, test {j}", c.thetas[i]))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let residual_matrix: Vec<Vec<f64>> = residuals.chunks(battery.len().max(1)).map(|r| r.to_vec()).collect();

    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let dists = pairs
        .par_iter()
        .map(|&(i, j)| {
            l1_distance(&families[i], &families[j], &u0, c.probe_time, &domain, &quad)
                .during(|| format!("distance theta {} vs {}", c.thetas[i], c.thetas[j]))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut distance_matrix = vec![vec![0.0; n]; n];
    let mut distance_error_matrix = vec![vec![0.0; n]; n];
    for (&(i, j), d) in pairs.iter().zip(&dists) {
        distance_matrix[i][j] = d.distance;
        distance_matrix[j][i] = d.distance;
        distance_error_matrix[i][j] = d.quadrature_error;
        distance_error_matrix[j][i] = d.quadrature_error;
    }
    let report = assemble_report(c.thetas.clone(), residual_matrix, distance_matrix, distance_error_matrix);

    // Lattice of starting points across the plateau, the ramps and the tails.
    let points: Vec<[f64; 2]> = [-0.5, 0.0, 0.5, 1.0, 1.5]
        .iter()
        .flat_map(|&a| [-0.2, 0.2, 0.45, 0.7, 1.3].map(|b| [a, f.eval(b)]))
        .collect();
    let times = [0.1, 0.35, 0.6, 0.9];
    let odes = families
        .par_iter()
        .map(|fam| {
            flow_ode_residual(fam, &times, &points, c.ode_delta, c.ode_generation)
                .during(|| format!("flow ODE residual theta = {}", fam.theta()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut rtable = Table::new("residuals", &["theta", "test", "relative_residual"]);
    for (i, row) in report.residual_matrix.iter().enumerate() {
        let worst = report.max_residual[i];
        let th = c.thetas[i];
        rep.check(Check::new(
            format!("weak_residual[{th}]"),
            worst < c.residual_tolerance,
            format!("worst relative residual {worst:e} over {} tests", row.len()),
        ));
        for (j, r) in row.iter().enumerate() {
            rtable.push(vec![num(th), j.to_string(), num(*r)]);
        }
        let o = &odes[i];
        rep.check(Check::new(
            format!("flow_ode[{th}]"),
            o.evaluated > 0 && o.max_residual < c.ode_tolerance,
            format!("max residual {:e} at {} samples ({} skipped near plateau edges)", o.max_residual, o.evaluated, o.skipped),
        ));
    }
    let mut dtable = Table::new("distances", &["theta_a", "theta_b", "distance", "quadrature_error"]);
    for (&(i, j), d) in pairs.iter().zip(&dists) {
        let (a, b) = (c.thetas[i], c.thetas[j]);
        rep.check(Check::new(
            format!("distance[{a},{b}]"),
            d.distance > 0.0 && d.distance > c.distance_factor * d.quadrature_error,
            format!(
                "L1 distance {:e} at t = {}, quadrature error {:e} (ratio {:.1})",
                d.distance,
                c.probe_time,
                d.quadrature_error,
                d.distance / d.quadrature_error
            ),
        ));
        dtable.push(vec![num(a), num(b), num(d.distance), num(d.quadrature_error)]);
    }
    rep.set(
        "nonuniqueness",
        NonUniqueness {
            thetas: report.thetas.clone(),
            max_residual: report.max_residual.clone(),
            distance_matrix: report.distance_matrix.clone(),
            distance_error_matrix: report.distance_error_matrix.clone(),
            min_distance: report.min_distance,
            flow_ode_residual: odes.iter().map(|o| o.max_residual).collect(),
            flow_ode_evaluated: odes.iter().map(|o| o.evaluated).collect(),
        },
    );
    rep.tables.push(rtable);
    rep.tables.push(dtable);
    Ok(())
}
