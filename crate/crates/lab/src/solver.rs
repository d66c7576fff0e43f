use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use transport_lab_core::cantor_map::BumpProfile;
use transport_lab_core::field::{build_field, Cutoff};
use transport_lab_core::flows::{default_initial_datum, test_battery_with, Box2D, Bump2D, FlowFamily};
use transport_lab_core::grid::{Axis, Grid, SampledFunction};
use transport_lab_core::problems::{gaussian, periodic_box, smooth_problem, Shear, SmoothOptions};
use transport_lab_core::solver::{
    apriori_linf_check, apriori_lp_check, commutator_residual, output_times, product_solution_check,
    renormalization_check, Constant, FnVelocity, MollifierSpec, SolverOptions, SpaceTimeSolution, TransportProblem,
    VelocityField, Vortex, Zero,
};

use crate::config::{ExperimentConfig, LadderFamily, LadderField, Mollifier};
use crate::parallel;
use crate::report::{num, Check, SuiteReport, Table};
use crate::{Context, LabError};

pub(crate) fn spec(m: &Mollifier) -> Result<MollifierSpec, LabError> {
    let s = MollifierSpec::new(m.radius).during(|| "mollifier".into())?;
    Ok(MollifierSpec { order: m.order, ..s })
}

fn unit_square() -> Box2D {
    Box2D { x1: (-1.0, 1.0), x2: (-1.0, 1.0) }
}

/// Wide tests keep the spatial quadrature error below the defects measured.
fn wide_battery(seed: u64, count: usize, horizon: f64) -> Vec<transport_lab_core::flows::TestFunction2D> {
    let region = Box2D { x1: (-0.3, 0.3), x2: (-0.3, 0.3) };
    test_battery_with(seed, count, &unit_square(), &region, horizon, (0.25, 0.35), (0.6, 1.0))
}

pub fn run(cfg: &ExperimentConfig) -> Result<SuiteReport, LabError> {
    let mut rep = SuiteReport::new("solver");
    apriori(cfg, &mut rep)?;
    conservation(cfg, &mut rep)?;
    commutator(cfg, &mut rep)?;
    product(cfg, &mut rep)?;
    Ok(rep)
}

#[derive(Serialize)]
struct AprioriRow {
    seed: u64,
    linf_lhs: f64,
    linf_rhs: f64,
    linf_margin: f64,
    lp_lhs: f64,
    lp_rhs: f64,
    lp_margin: f64,
}

fn apriori(cfg: &ExperimentConfig, rep: &mut SuiteReport) -> Result<(), LabError> {
    let a = &cfg.solver.apriori;
    let n = a.grid.square("solver.apriori")?;
    let sp = spec(&a.mollifier)?;
    let opts = SolverOptions { steps: a.grid.nt, substeps: a.substeps };
    let rows = (0..a.seeds as u64)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i);
            let ctx = || format!("a-priori run seed {seed}");
            let p = smooth_problem(seed, SmoothOptions { nodes: n, ..Default::default() }).during(ctx)?;
            let u = parallel::solve(&p, &sp, opts, &ctx())?;
            let li = apriori_linf_check(&u, &p.u0, p.reaction.as_ref()).during(ctx)?;
            let lp = apriori_lp_check(&u, &p, a.p).during(ctx)?;
            Ok(AprioriRow {
                seed,
                linf_lhs: li.lhs,
                linf_rhs: li.rhs,
                linf_margin: li.margin,
                lp_lhs: lp.lhs,
                lp_rhs: lp.rhs,
                lp_margin: lp.margin,
            })
        })
        .collect::<Result<Vec<_>, LabError>>()?;
    let worst = |f: fn(&AprioriRow) -> f64| rows.iter().map(f).fold(f64::INFINITY, f64::min);
    let (wi, wp) = (worst(|r| r.linf_margin), worst(|r| r.lp_margin));
    rep.check(Check::new(
        "apriori.linf",
        wi >= -a.tolerance,
        format!("smallest L∞ margin {wi:e} over {} seeds", rows.len()),
    ));
    rep.check(Check::new(
        "apriori.lp",
        wp >= -a.tolerance,
        format!("smallest L^{} margin {wp:e} over {} seeds", a.p, rows.len()),
    ));
    let mut t = Table::new("apriori", &["seed", "linf_lhs", "linf_rhs", "linf_margin", "lp_lhs", "lp_rhs", "lp_margin"]);
    for r in &rows {
        t.push(vec![
            r.seed.to_string(),
            num(r.linf_lhs),
            num(r.linf_rhs),
            num(r.linf_margin),
            num(r.lp_lhs),
            num(r.lp_rhs),
            num(r.lp_margin),
        ]);
    }
    rep.tables.push(t);
    rep.set("apriori", &rows);
    Ok(())
}

#[derive(Serialize)]
struct ConservationRecord {
    l1_change: f64,
    l2_change: f64,
    linf_change: f64,
}

/// Equal to 1 within `r[0]` of `center`, C∞ down to 0 at `r[1]`.
fn plateau(grid: Grid, center: [f64; 2], r: [f64; 2]) -> Result<SampledFunction, LabError> {
    let e = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    SampledFunction::from_fn(grid, |x, y| {
        let s = ((x - center[0]).hypot(y - center[1]) - r[0]) / (r[1] - r[0]);
        let (a, b) = (e(1.0 - s), e(s));
        a / (a + b)
    })
    .during(|| "conservation datum".into())
}

fn conservation(cfg: &ExperimentConfig, rep: &mut SuiteReport) -> Result<(), LabError> {
    let c = &cfg.solver.conservation;
    let n = c.grid.square("solver.conservation")?;
    let grid = periodic_box(n).during(|| "conservation grid".into())?;
    let u0 = plateau(grid, c.center, c.plateau)?;
    let vortex = Vortex { omega: 1.0, center: [0.0, 0.0], inner: 0.7, outer: 0.95 };
    let p = TransportProblem::new(Arc::new(vortex), Arc::new(Zero), u0, c.horizon).during(|| "conservation".into())?;
    let u = parallel::solve(&p, &spec(&c.mollifier)?, SolverOptions { steps: c.grid.nt, substeps: c.substeps }, "conservation")?;
    let norms = |f: &SampledFunction| [f.lp_norm(1.0), f.lp_norm(2.0), f.sup_norm()];
    let base = norms(&u.frames[0]);
    let mut change = [0.0f64; 3];
    let mut t = Table::new("conservation", &["t", "l1", "l2", "linf"]);
    for (time, f) in u.times.iter().zip(&u.frames) {
        let v = norms(f);
        for k in 0..3 {
            change[k] = change[k].max((v[k] - base[k]).abs() / base[k]);
        }
        t.push(vec![num(*time), num(v[0]), num(v[1]), num(v[2])]);
    }
    for (k, name) in ["l1", "l2", "linf"].iter().enumerate() {
        rep.check(Check::new(
            format!("conservation.{name}"),
            change[k] <= c.tolerance,
            format!("largest relative change {:e} on {n}² over {} steps", change[k], c.grid.nt),
        ));
    }
    rep.tables.push(t);
    rep.set("conservation", ConservationRecord { l1_change: change[0], l2_change: change[1], linf_change: change[2] });
    Ok(())
}

type Exact = Box<dyn Fn(f64, [f64; 2]) -> f64 + Send + Sync>;

/// Field, exact solution, computational box and commutator window.
fn ladder_setup(f: &LadderFamily) -> Result<(Arc<dyn VelocityField>, Exact, Box2D, Box2D), LabError> {
    match f.field {
        LadderField::SmoothShear { amplitude } | LadderField::KinkedShear { amplitude, .. } => {
            let kink = match f.field {
                LadderField::KinkedShear { at, .. } => Some(at),
                _ => None,
            };
            let shear = Shear { amplitude, kink };
            let bump = Bump2D { center: [0.0, 0.0], radii: [0.4, 0.4], amplitude: 1.0 };
            let window = Box2D { x1: (-0.6, 0.6), x2: (-0.6, 0.6) };
            Ok((Arc::new(shear), Box::new(move |t, x| shear.exact(&bump, t, x)), unit_square(), window))
        }
        LadderField::Counterexample { peak_decay } => {
            let field = build_field(BumpProfile::demo(peak_decay), Cutoff::default()).during(|| "demo field".into())?;
            let fam = FlowFamily::new(field, 0.0).during(|| "demo flow".into())?;
            let u0 = default_initial_datum(&fam);
            let c2 = u0.center[1];
            let rough = fam.field.clone();
            // The flows solve ∂_t u − b̃·∇u = 0, so the solver field is −b̃.
            let b = FnVelocity {
                f: move |_t: f64, x: [f64; 2]| {
                    let v = rough.velocity(x).unwrap_or([0.0, 0.0]);
                    [-v[0], -v[1]]
                },
                autonomous: true,
            };
            let exact: Exact = Box::new(move |t, x| fam.solution(&u0, t, x).unwrap_or(f64::NAN));
            let domain = Box2D { x1: (0.3, 0.7), x2: (c2 - 0.06, c2 + 0.06) };
            let window = Box2D { x1: (0.4, 0.6), x2: (c2 - 0.03, c2 + 0.03) };
            Ok((Arc::new(b), exact, domain, window))
        }
    }
}

fn ladder(f: &LadderFamily) -> Result<Vec<f64>, LabError> {
    let ctx = || format!("commutator ladder `{}`", f.name);
    let (field, exact, domain, window) = ladder_setup(f)?;
    let grid = Grid::plane(
        Axis::new(domain.x1.0, domain.x1.1, f.grid.nx).during(ctx)?,
        Axis::new(domain.x2.0, domain.x2.1, f.grid.ny).during(ctx)?,
    );
    let times = output_times(f.horizon, f.grid.nt);
    let frames = times
        .par_iter()
        .map(|&t| SampledFunction::from_fn(grid.clone(), |a, b| exact(t, [a, b])))
        .collect::<transport_lab_core::Result<Vec<_>>>()
        .during(ctx)?;
    let u = SpaceTimeSolution { times, frames };
    f.radii
        .par_iter()
        .map(|&r| {
            let s = MollifierSpec::new(r).during(ctx)?;
            commutator_residual(&u, field.as_ref(), &Zero, &s, &window).during(ctx)
        })
        .collect()
}

#[derive(Serialize)]
struct LadderRecord {
    family: String,
    radii: Vec<f64>,
    residuals: Vec<f64>,
    strictly_decreasing: bool,
}

fn commutator(cfg: &ExperimentConfig, rep: &mut SuiteReport) -> Result<(), LabError> {
    let mut t = Table::new("commutator", &["family", "epsilon", "residual"]);
    let mut records = Vec::new();
    for f in &cfg.solver.commutator.families {
        let r = ladder(f)?;
        let dec = r.windows(2).all(|w| w[1] < w[0]);
        rep.check(Check::new(
            format!("commutator.{}", f.name),
            dec,
            format!("residuals {:?} at radii {:?}", r.iter().map(|v| format!("{v:.4e}")).collect::<Vec<_>>(), f.radii),
        ));
        for (e, v) in f.radii.iter().zip(&r) {
            t.push(vec![f.name.clone(), num(*e), num(*v)]);
        }
        records.push(LadderRecord { family: f.name.clone(), radii: f.radii.clone(), residuals: r, strictly_decreasing: dec });
    }
    rep.tables.push(t);
    rep.set("commutator", &records);
    Ok(())
}

#[derive(Serialize)]
struct ProductRow {
    seed: u64,
    product_defect: f64,
    renormalization_defect: f64,
    direct_difference: f64,
}

fn product(cfg: &ExperimentConfig, rep: &mut SuiteReport) -> Result<(), LabError> {
    let pc = &cfg.solver.product;
    let n = pc.grid.square("solver.product")?;
    let sp = spec(&pc.mollifier)?;
    let opts = SolverOptions { steps: pc.grid.nt, substeps: pc.substeps };
    let rows = (0..pc.seeds as u64)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i);
            let ctx = || format!("product run seed {seed}");
            let p = smooth_problem(seed, SmoothOptions { nodes: n, ..Default::default() }).during(ctx)?;
            // Same field, different reaction and datum.
            let q = TransportProblem {
                u0: gaussian(p.grid(), [0.1, -0.1], [0.3, 0.2]).during(ctx)?,
                reaction: Arc::new(Constant(0.3)),
                ..p.clone()
            };
            let u = parallel::solve(&p, &sp, opts, &ctx())?;
            let v = parallel::solve(&q, &sp, opts, &ctx())?;
            let battery = wide_battery(seed, pc.battery_size, p.horizon);
            let pd = product_solution_check(&p, &q, &u, &v, &sp, &battery).during(ctx)?;
            let rn = renormalization_check(&p, &sp, opts, &battery).during(ctx)?;
            Ok(ProductRow {
                seed,
                product_defect: pd.max_relative,
                renormalization_defect: rn.defect.max_relative,
                direct_difference: rn.relative_difference(),
            })
        })
        .collect::<Result<Vec<_>, LabError>>()?;
    let worst = |f: fn(&ProductRow) -> f64| rows.iter().map(f).fold(0.0f64, f64::max);
    let (wp, wr, wd) = (worst(|r| r.product_defect), worst(|r| r.renormalization_defect), worst(|r| r.direct_difference));
    rep.check(Check::new(
        "product",
        wp < pc.tolerance,
        format!("worst relative defect of u·v {wp:e} over {} seeds", rows.len()),
    ));
    rep.check(Check::new(
        "renormalization",
        wr < pc.tolerance,
        format!("worst relative defect of u² {wr:e} over {} seeds (direct solve differs by {wd:e})", rows.len()),
    ));
    let mut t = Table::new("product", &["seed", "product_defect", "renormalization_defect", "direct_difference"]);
    for r in &rows {
        t.push(vec![r.seed.to_string(), num(r.product_defect), num(r.renormalization_defect), num(r.direct_difference)]);
    }
    rep.tables.push(t);
    rep.set("product", &rows);
    Ok(())
}
