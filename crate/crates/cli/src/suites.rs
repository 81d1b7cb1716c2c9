//! `verify`: the identity suites as run reports.

use serde_json::json;

use formality::checks::{
    associativity_suite, calibration_suite, chain_suite, probes_suite, symbolic_suite, tangent_suite, SuiteReport,
};

use crate::commands::{book, symbols_json};
use crate::report::RunReport;
use crate::{CliResult, Config, Suite};

/// Absolute bound on the numeric residuals of the associativity and chain suites.
pub const ABS_BOUND: f64 = 5e-2;

fn default_cases(suite: Suite) -> usize {
    match suite {
        Suite::Symbolic => 50,
        Suite::Calibration => 20,
        Suite::Associativity => 6,
        Suite::Chain => 10,
        Suite::Tangent => 10,
        Suite::Probes => 1,
    }
}

pub fn run(suite: Suite, cases: Option<usize>, cfg: &Config) -> CliResult<RunReport> {
    let cases = cases.unwrap_or_else(|| default_cases(suite));
    let book = book(cfg);
    let seed = cfg.seed;
    let report: SuiteReport = match suite {
        Suite::Symbolic => symbolic_suite(seed, cases)?,
        Suite::Calibration => calibration_suite(book.clone(), seed, cases, cfg.k_sigma.max(5.0))?,
        Suite::Associativity => associativity_suite(book.clone(), seed, cases, cfg.k_sigma, ABS_BOUND)?,
        Suite::Chain => chain_suite(book.clone(), seed, cases, cfg.k_sigma, ABS_BOUND)?,
        Suite::Tangent => tangent_suite(book.clone(), seed, cases, cfg.k_sigma)?,
        Suite::Probes => probes_suite(book.clone(), cfg.k_sigma, cfg.degree_bound)?,
    };
    let passed = report.passed();
    let name = format!("{suite:?}").to_lowercase();
    let params = json!({ "suite": name, "cases": cases, "samples": cfg.samples, "k_sigma": cfg.k_sigma });
    let mut results = json!({ "checks": report.checks });
    if suite != Suite::Symbolic {
        results["symbols"] = symbols_json(&book);
    }
    Ok(RunReport::new("verify", params, seed, results).with_passed(passed))
}
