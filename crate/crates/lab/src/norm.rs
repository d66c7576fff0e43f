use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use transport_lab_core::grid::{Axis, Grid, SampledFunction};
use transport_lab_core::young::{holder_pairing, luxemburg_norm, zygmund_interpolation_bound, YoungFunction};

use crate::config::{ExperimentConfig, FunctionSpec, YoungSpec};
use crate::oracle::indicator_norm;
use crate::report::{num, Check, SuiteReport, Table};
use crate::{Context, LabError};

const NAMED: [(&str, YoungSpec); 3] = [
    ("exp_l", YoungSpec::EXP_L),
    ("exp_l_over_log_l", YoungSpec::EXP_L_OVER_LOG_L),
    ("l_log_l_loglog_l", YoungSpec::L_LOG_L_LOGLOG_L),
];

fn cells(n: usize, length: f64) -> Result<Grid, LabError> {
    Ok(Grid::line(Axis::periodic(0.0, length, n).during(|| "norm grid".into())?))
}

/// `value · χ_[0, k/n)` on `n` equal cells of `[0, 1)`.
fn indicator(n: usize, value: f64, k: usize) -> Result<SampledFunction, LabError> {
    let v = (0..n).map(|i| if i < k { value } else { 0.0 }).collect();
    SampledFunction::new(cells(n, 1.0)?, v).during(|| "indicator".into())
}

fn cells_for(measure: f64, n: usize) -> Result<usize, LabError> {
    let k = (measure * n as f64).round();
    if (k / n as f64 - measure).abs() > 1e-12 {
        return Err(LabError::Config(format!("indicator measure {measure} is not a multiple of 1/{n}")));
    }
    Ok(k as usize)
}

fn relative(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

#[derive(Serialize)]
struct RequestRecord {
    young: YoungSpec,
    norm: f64,
    closed_form: Option<f64>,
    expected: Option<f64>,
}

#[derive(Serialize)]
struct LemmaRecord {
    holder_worst_ratio: f64,
    interpolation_worst_ratio: f64,
    functions: usize,
}

pub fn run(cfg: &ExperimentConfig) -> Result<SuiteReport, LabError> {
    let nc = &cfg.norm;
    let mut rep = SuiteReport::new("norm");

    // Requested norms.
    let mut records = Vec::new();
    for (i, req) in nc.requests.iter().enumerate() {
        let (f, closed) = match &req.function {
            FunctionSpec::Indicator { value, measure } => {
                let k = cells_for(*measure, nc.indicator_cells)?;
                let m = k as f64 / nc.indicator_cells as f64;
                (indicator(nc.indicator_cells, *value, k)?, indicator_norm(&req.young, *value, m))
            }
            FunctionSpec::Samples { values, length } => {
                (SampledFunction::new(cells(values.len(), *length)?, values.clone()).during(|| format!("request {i}"))?, None)
            }
        };
        let norm = luxemburg_norm(&f, &req.young.young()).during(|| format!("request {i}"))?;
        if let Some(c) = closed {
            let r = relative(norm, c);
            rep.check(Check::new(
                format!("request[{i}].closed_form"),
                r <= nc.oracle_tolerance,
                format!("norm {norm} vs closed form {c} (relative {r:e})"),
            ));
        }
        if let Some(e) = req.expected {
            let r = relative(norm, e);
            rep.check(Check::new(
                format!("request[{i}].expected"),
                r <= nc.expected_tolerance,
                format!("norm {norm} vs expected {e} (relative {r:e})"),
            ));
        }
        records.push(RequestRecord { young: req.young, norm, closed_form: closed, expected: req.expected });
    }
    rep.set("requests", &records);

    // Indicator oracle.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let draws: Vec<(f64, usize)> = (0..nc.indicators)
        .map(|_| {
            let c = rng.random_range(-1.0f64..1.0) * 10f64.powf(rng.random_range(-2.0..2.0));
            (c, rng.random_range(1..=nc.indicator_cells))
        })
        .collect();
    let mut table = Table::new("indicators", &["young", "value", "measure", "norm", "closed_form", "relative"]);
    for (name, spec) in NAMED {
        let rows = draws
            .par_iter()
            .map(|&(c, k)| {
                let m = k as f64 / nc.indicator_cells as f64;
                let f = indicator(nc.indicator_cells, c, k)?;
                let norm = luxemburg_norm(&f, &spec.young()).during(|| format!("indicator {c}·χ, |E| = {m}"))?;
                let closed = indicator_norm(&spec, c, m).expect("named Young function");
                Ok((c, m, norm, closed, relative(norm, closed)))
            })
            .collect::<Result<Vec<_>, LabError>>()?;
        let worst = rows.iter().fold(0.0f64, |w, r| w.max(r.4));
        for (c, m, norm, closed, r) in rows {
            table.push(vec![name.into(), num(c), num(m), num(norm), num(closed), num(r)]);
        }
        rep.check(Check::new(
            format!("indicator_oracle.{name}"),
            worst <= nc.oracle_tolerance,
            format!("{} indicators, worst relative gap {worst:e}", nc.indicators),
        ));
    }
    rep.tables.push(table);

    // Hölder pairing and interpolation bound on random bounded functions.
    let grid = cells(nc.random_nodes, 1.0)?;
    let seeds: Vec<u64> = (0..nc.random_functions as u64).map(|i| cfg.seed.wrapping_add(1000 + i)).collect();
    let rows = seeds
        .par_iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let draw = |rng: &mut ChaCha8Rng| {
                // Powers of uniforms give anything from flat to sharply peaked.
                let amp = 10f64.powf(rng.random_range(-2.0..2.0));
                let power = rng.random_range(0.0..6.0);
                let v: Vec<f64> = (0..nc.random_nodes)
                    .map(|_| {
                        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                        sign * amp * rng.random_range(0.0f64..1.0).powf(power)
                    })
                    .collect();
                SampledFunction::new(grid.clone(), v)
            };
            let f = draw(&mut rng).during(|| format!("random function {s}"))?;
            let g = draw(&mut rng).during(|| format!("random function {s}"))?;
            let h = holder_pairing(&f, &g).during(|| format!("Hölder pairing {s}"))?;
            let zyg = luxemburg_norm(&f, &YoungFunction::L_LOG_L_LOGLOG_L).during(|| format!("Zygmund norm {s}"))?;
            let bound = zygmund_interpolation_bound(&f).during(|| format!("interpolation bound {s}"))?;
            Ok((s, h.lhs, h.rhs, zyg, bound))
        })
        .collect::<Result<Vec<_>, LabError>>()?;
    let tol = nc.quadrature_tolerance;
    let mut lemma = Table::new("lemma", &["seed", "holder_lhs", "holder_rhs", "zygmund_norm", "interpolation_bound"]);
    let (mut hv, mut iv, mut hw, mut iw) = (0, 0, 0.0f64, 0.0f64);
    for &(s, lhs, rhs, zyg, bound) in &rows {
        hv += usize::from(lhs > rhs * (1.0 + tol) + tol);
        iv += usize::from(zyg > bound * (1.0 + tol) + tol);
        hw = hw.max(lhs / rhs);
        iw = iw.max(zyg / bound);
        lemma.push(vec![s.to_string(), num(lhs), num(rhs), num(zyg), num(bound)]);
    }
    rep.check(Check::new(
        "holder_pairing",
        hv == 0,
        format!("{hv} violations in {} pairs, worst lhs/rhs {hw:.4}", rows.len()),
    ));
    rep.check(Check::new(
        "interpolation_bound",
        iv == 0,
        format!("{iv} violations in {} functions, worst norm/bound {iw:.4}", rows.len()),
    ));
    rep.set(
        "lemma",
        LemmaRecord { holder_worst_ratio: hw, interpolation_worst_ratio: iw, functions: rows.len() },
    );
    rep.tables.push(lemma);
    Ok(rep)
}
