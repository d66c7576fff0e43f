//! The ten acceptance criteria, one PASS/FAIL line each, on the default
//! config. A criterion whose only failing checks are known limitations is
//! printed as FAIL but does not fail the run.

use std::time::Instant;

use transport_lab::cli::{run_suite, Command};
use transport_lab::{ExperimentConfig, SuiteReport};

struct Criterion {
    id: u32,
    title: &'static str,
    suite: Command,
    /// Check-name prefixes that make up the criterion.
    checks: &'static [&'static str],
}

const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, title: "Orlicz norm oracle equivalence", suite: Command::Norm, checks: &["indicator_oracle."] },
    Criterion {
        id: 2,
        title: "Hölder pairing and interpolation bound",
        suite: Command::Norm,
        checks: &["holder_pairing", "interpolation_bound"],
    },
    Criterion {
        id: 3,
        title: "Comparator identity order and start value",
        suite: Command::Stability,
        checks: &["comparator.order", "comparator.start"],
    },
    Criterion {
        id: 4,
        title: "A-priori bounds and exact conservation",
        suite: Command::Solver,
        checks: &["apriori.", "conservation."],
    },
    Criterion { id: 5, title: "Commutator decay ladders", suite: Command::Solver, checks: &["commutator."] },
    Criterion {
        id: 6,
        title: "Quantitative triple/double-log margins",
        suite: Command::Stability,
        checks: &["quant.triple", "quant.double", "quant.divergence_free"],
    },
    Criterion { id: 7, title: "Stability ladder", suite: Command::Stability, checks: &["ladder."] },
    Criterion {
        id: 8,
        title: "Counterexample integrability",
        suite: Command::Counterexample,
        checks: &["integrability.", "pointwise_bound", "claim_series"],
    },
    Criterion {
        id: 9,
        title: "Non-uniqueness of weak solutions",
        suite: Command::Counterexample,
        checks: &["weak_residual", "flow_ode", "distance"],
    },
    Criterion { id: 10, title: "Product and renormalization", suite: Command::Solver, checks: &["product", "renormalization"] },
];

/// `value + tail_bound` moves with `k_max` because the tail bound dominates
/// the value it bounds; see the decisions ledger.
const KNOWN_LIMITATIONS: &[&str] = &["integrability.stable"];

fn main() {
    let cfg = ExperimentConfig::default();
    let mut reports: Vec<SuiteReport> = Vec::new();
    for cmd in [Command::Norm, Command::Stability, Command::Counterexample, Command::Solver] {
        let t = Instant::now();
        match run_suite(cmd, &cfg) {
            Ok(r) => {
                println!("suite {} ran in {:.1}s", cmd.name(), t.elapsed().as_secs_f64());
                reports.push(r);
            }
            Err(e) => {
                println!("suite {} errored: {e}", cmd.name());
                std::process::exit(1);
            }
        }
    }
    let mut undocumented = 0;
    for c in CRITERIA {
        let rep = reports.iter().find(|r| r.subcommand == c.suite.name()).expect("suite ran");
        let checks: Vec<_> =
            rep.checks.iter().filter(|k| c.checks.iter().any(|p| k.name.starts_with(p))).collect();
        let failed: Vec<_> = checks.iter().filter(|k| !k.passed).collect();
        let pass = !checks.is_empty() && failed.is_empty();
        let known = !pass && !checks.is_empty() && failed.iter().all(|k| KNOWN_LIMITATIONS.iter().any(|p| k.name.starts_with(p)));
        let tag = match (pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known limitation)",
            (false, false) => "FAIL",
        };
        println!("criterion {:>2} {tag}: {} [{} checks]", c.id, c.title, checks.len());
        for k in &checks {
            println!("    {} {}: {}", if k.passed { "ok  " } else { "fail" }, k.name, k.detail);
        }
        if !pass && !known {
            undocumented += 1;
        }
    }
    if undocumented > 0 {
        println!("{undocumented} criteria failed");
        std::process::exit(1);
    }
}
