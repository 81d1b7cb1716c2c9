//! Python module `formality_py`. Structured results come back as JSON text.

use clap::Parser;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use formality::graph::{enumerate, AdmissibleGraph, Flavor};
use formality::lie::{duflo_multiplicativity, Enveloping, LieAlgebraData};
use formality::polyvector::{poisson_bracket as bracket, schouten as schouten_bracket, PolyVectorField};
use formality::weights::graph_weight;
use formality::Poly;
use formality_cli::{Cli, CliError};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn cli_err(e: CliError) -> PyErr {
    match e {
        CliError::Validation(m) => PyValueError::new_err(m),
        other => PyRuntimeError::new_err(other.message().to_string()),
    }
}

fn flavor(name: &str) -> PyResult<Flavor> {
    match name {
        "halfplane" => Ok(Flavor::Halfplane),
        "disk" => Ok(Flavor::Disk),
        _ => Err(PyValueError::new_err(format!("unknown flavor {name:?}"))),
    }
}

/// Schouten bracket of two polyvectors written like `"x0*d0^d1"`.
#[pyfunction]
fn schouten(dim: usize, x: &str, y: &str) -> PyResult<String> {
    let x = PolyVectorField::parse(dim, x).map_err(value_err)?;
    let y = PolyVectorField::parse(dim, y).map_err(value_err)?;
    Ok(schouten_bracket(&x, &y).map_err(value_err)?.to_string())
}

/// `{f, g}` for the bivector `pi`.
#[pyfunction]
fn poisson_bracket(dim: usize, pi: &str, f: &str, g: &str) -> PyResult<String> {
    let pi = PolyVectorField::parse(dim, pi).map_err(value_err)?;
    let f = Poly::parse(dim, f).map_err(value_err)?;
    let g = Poly::parse(dim, g).map_err(value_err)?;
    Ok(bracket(&pi, &f, &g).to_string())
}

/// Admissible graphs as a JSON list.
#[pyfunction]
fn graphs(flavor_name: &str, n: usize, m: usize) -> PyResult<String> {
    let list = enumerate(flavor(flavor_name)?, n, m).map_err(value_err)?;
    Ok(serde_json::Value::Array(list.iter().map(AdmissibleGraph::to_json).collect()).to_string())
}

/// `(value, stderr)` of the weight of a graph given as JSON.
#[pyfunction]
#[pyo3(signature = (graph_json, samples = 100_000, seed = 1))]
fn weight(py: Python<'_>, graph_json: &str, samples: u64, seed: u64) -> PyResult<(f64, f64)> {
    let v: serde_json::Value = serde_json::from_str(graph_json).map_err(value_err)?;
    let g = AdmissibleGraph::from_json(&v).map_err(value_err)?;
    let w = py.detach(|| graph_weight(&g, samples, seed)).map_err(value_err)?;
    Ok((w.value, w.stderr))
}

/// Duflo image of a polynomial in PBW normal order.
#[pyfunction]
fn duflo(algebra: &str, a: &str) -> PyResult<String> {
    let g = LieAlgebraData::preset(algebra).map_err(value_err)?;
    let a = Poly::parse(g.dim(), a).map_err(value_err)?;
    Ok(Enveloping::new(&g).phi_d(&a).map_err(value_err)?.to_string())
}

/// Whether the Duflo map is multiplicative on invariants up to `degree`.
#[pyfunction]
fn duflo_multiplicative(algebra: &str, degree: u32) -> PyResult<bool> {
    let g = LieAlgebraData::preset(algebra).map_err(value_err)?;
    Ok(duflo_multiplicativity(&g, degree).map_err(value_err)?.iter().all(|c| c.holds))
}

/// Runs a command-line invocation (without the program name) and returns
/// its JSON report.
#[pyfunction]
fn run(py: Python<'_>, args: Vec<String>) -> PyResult<String> {
    let cli = Cli::try_parse_from(std::iter::once("formality".to_string()).chain(args)).map_err(value_err)?;
    let report = py.detach(|| formality_cli::run(&cli)).map_err(cli_err)?;
    Ok(report.to_json_string())
}

#[pymodule]
fn formality_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(schouten, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_bracket, m)?)?;
    m.add_function(wrap_pyfunction!(graphs, m)?)?;
    m.add_function(wrap_pyfunction!(weight, m)?)?;
    m.add_function(wrap_pyfunction!(duflo, m)?)?;
    m.add_function(wrap_pyfunction!(duflo_multiplicative, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
