//! Python bindings: a thin functional surface over the engine, keyed by
//! the same spec strings as the command line.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use eqport::equilibrium::{OptimalOutcome, Regime, StrategyCurve};
use eqport::statics::{find_crossing, CrossingOutcome, TwoPointLaw};
use eqport::verify::{equilibrium_certificate, mc_objective, CertificateConfig, SimConfig};
use eqport::{
    classify, compare_pointwise, optimal_equilibrium, solve_unique, EqportError, MarketModel,
    PreferenceKernel, RiskAversionDistribution, Tolerances,
};

fn err(e: EqportError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_dist(spec: &str) -> PyResult<RiskAversionDistribution> {
    spec.parse().map_err(err)
}

fn parse_market(spec: &str) -> PyResult<MarketModel> {
    spec.parse().map_err(err)
}

fn make_kernel(spec: &str) -> PyResult<PreferenceKernel> {
    PreferenceKernel::new(parse_dist(spec)?, Tolerances::default()).map_err(err)
}

fn regime_name(regime: &Regime) -> &'static str {
    match regime {
        Regime::UniqueFinite => "unique",
        Regime::FamilyInfinite => "family",
        Regime::TrivialOnly => "trivial",
        Regime::NonexistentDeterministic { .. } => "nonexistent",
        Regime::Undetermined { .. } => "undetermined",
    }
}

fn curve_dict<'py>(py: Python<'py>, curve: &StrategyCurve) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("t", curve.t.clone())?;
    d.set_item("v", curve.v.clone())?;
    d.set_item(
        "a",
        curve
            .a
            .iter()
            .map(|x| x.iter().copied().collect::<Vec<f64>>())
            .collect::<Vec<_>>(),
    )?;
    d.set_item(
        "pi",
        curve
            .pi
            .iter()
            .map(|x| x.iter().copied().collect::<Vec<f64>>())
            .collect::<Vec<_>>(),
    )?;
    d.set_item("j0", curve.j0.clone())?;
    d.set_item("t0", curve.t0)?;
    Ok(d)
}

fn best_curve(
    kernel: &PreferenceKernel,
    market: &MarketModel,
    grid: usize,
) -> PyResult<Option<StrategyCurve>> {
    match classify(kernel, market).regime {
        Regime::UniqueFinite => Ok(Some(solve_unique(kernel, market, grid).map_err(err)?)),
        Regime::FamilyInfinite => match optimal_equilibrium(kernel, market, grid).map_err(err)? {
            OptimalOutcome::Optimal { curve, .. } => Ok(Some(curve)),
            OptimalOutcome::NoOptimal { .. } => Ok(None),
        },
        _ => Ok(None),
    }
}

/// Classify the regime and, where solvable, return the equilibrium curve.
#[pyfunction]
#[pyo3(signature = (dist, market, grid = 2000))]
fn solve<'py>(
    py: Python<'py>,
    dist: &str,
    market: &str,
    grid: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let m = parse_market(market)?;
    let k = make_kernel(dist)?;
    let report = classify(&k, &m);
    let out = PyDict::new(py);
    out.set_item("regime", regime_name(&report.regime))?;
    out.set_item("lambda0", report.lambda0)?;
    if let Some(curve) = best_curve(&k, &m, grid)? {
        out.set_item("curve", curve_dict(py, &curve)?)?;
    }
    Ok(out)
}

/// Optimal member of the T0-indexed family with its optimality flags.
#[pyfunction]
#[pyo3(signature = (dist, market, grid = 2000))]
fn optimal<'py>(
    py: Python<'py>,
    dist: &str,
    market: &str,
    grid: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let m = parse_market(market)?;
    let k = make_kernel(dist)?;
    match optimal_equilibrium(&k, &m, grid).map_err(err)? {
        OptimalOutcome::Optimal {
            curve,
            t0,
            uniformly_optimal,
            uniformly_strictly_optimal,
        } => {
            let out = PyDict::new(py);
            out.set_item("t0", t0)?;
            out.set_item("uniformly_optimal", uniformly_optimal)?;
            out.set_item("uniformly_strictly_optimal", uniformly_strictly_optimal)?;
            out.set_item("curve", curve_dict(py, &curve)?)?;
            Ok(out)
        }
        OptimalOutcome::NoOptimal { .. } => Err(PyValueError::new_err(
            "the family has no optimal member: H(inf) <= Lambda(0)",
        )),
    }
}

/// Pointwise exposure comparison of two investors on a shared grid.
#[pyfunction]
#[pyo3(signature = (dist1, dist2, market, grid = 2000))]
fn compare<'py>(
    py: Python<'py>,
    dist1: &str,
    dist2: &str,
    market: &str,
    grid: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let m = parse_market(market)?;
    let k1 = make_kernel(dist1)?;
    let k2 = make_kernel(dist2)?;
    let report = compare_pointwise(&k1, &k2, &m, grid).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("t", report.t)?;
    out.set_item("a1", report.a1)?;
    out.set_item("a2", report.a2)?;
    out.set_item("rh", format!("{:?}", report.rh))?;
    out.set_item("fsd", format!("{:?}", report.fsd))?;
    out.set_item("violations", report.violations)?;
    out.set_item("crossings", report.crossings)?;
    Ok(out)
}

/// Single-crossing time for two two-point laws sharing r0.
#[pyfunction]
fn crossing<'py>(
    py: Python<'py>,
    r0: f64,
    delta1: f64,
    delta2: f64,
    p1: f64,
    p2: f64,
    market: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let m = parse_market(market)?;
    let tp1 = TwoPointLaw::new(r0, delta1, p1).map_err(err)?;
    let tp2 = TwoPointLaw::new(r0, delta2, p2).map_err(err)?;
    let out = PyDict::new(py);
    match find_crossing(&tp1, &tp2, &m, &Tolerances::default()).map_err(err)? {
        CrossingOutcome::Found(rep) => {
            out.set_item("t_star", rep.t_star)?;
            out.set_item("d_prime", rep.d_prime)?;
        }
        CrossingOutcome::NoCrossing { d_at_zero } => {
            out.set_item("t_star", py.None())?;
            out.set_item("d_at_zero", d_at_zero)?;
        }
    }
    Ok(out)
}

/// Monte Carlo cross-check and perturbation certificate for the solver
/// output.
#[pyfunction]
#[pyo3(signature = (dist, market, grid = 400, paths = 50_000, seed = 0x5eed))]
fn verify<'py>(
    py: Python<'py>,
    dist: &str,
    market: &str,
    grid: usize,
    paths: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let m = parse_market(market)?;
    let d = parse_dist(dist)?;
    let k = PreferenceKernel::new(d.clone(), Tolerances::default()).map_err(err)?;
    let curve = best_curve(&k, &m, grid)?
        .ok_or_else(|| PyValueError::new_err("no solvable equilibrium curve to verify"))?;
    let cfg = CertificateConfig {
        directions: 20,
        times: 5,
        seed,
    };
    let cert =
        equilibrium_certificate(&curve, &m, &d, &cfg, &Tolerances::default()).map_err(err)?;
    let sim = SimConfig {
        paths,
        seed,
        ..SimConfig::default()
    };
    let mc = mc_objective(&curve, &d, 0.0, &sim).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("certificate_pass", cert.pass)?;
    out.set_item("worst_slope", cert.worst_slope)?;
    out.set_item("mc_value", mc.value)?;
    out.set_item("mc_stderr", mc.stderr)?;
    out.set_item("closed_form_j0", curve.j0[0])?;
    Ok(out)
}

/// Laplace transform of a risk-aversion law given by a spec string.
#[pyfunction]
fn laplace(dist: &str, y: f64) -> PyResult<f64> {
    parse_dist(dist)?.laplace(y).map_err(err)
}

/// Preference kernel h evaluated at x.
#[pyfunction]
fn kernel_h(dist: &str, x: f64) -> PyResult<f64> {
    make_kernel(dist)?.h(x).map_err(err)
}

#[pymodule]
fn eqport_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(optimal, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(crossing, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(laplace, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_h, m)?)?;
    Ok(())
}
