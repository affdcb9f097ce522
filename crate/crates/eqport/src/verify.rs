//! Independent oracles: exact lognormal Monte Carlo of the objective and
//! the first-order perturbation slope test behind the equilibrium
//! definition.

use nalgebra::DVector;
use rand::distributions::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Tolerances;
use crate::equilibrium::StrategyCurve;
use crate::error::{EqportError, Result};

use crate::market::MarketModel;
use crate::numeric::gauss_legendre;
use crate::riskdist::RiskAversionDistribution;

#[derive(Debug, Clone, Serialize)]
pub struct SimConfig {
    pub paths: usize,
    pub seed: u64,
    /// Number of chunks for the stderr estimate; also the parallel grain.
    pub chunks: usize,
    /// Gauss-Legendre nodes over the quantile range for continuous laws.
    pub quad_nodes: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            paths: 200_000,
            seed: 0x5eed,
            chunks: 32,
            quad_nodes: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone)]
pub struct PerturbationProbe {
    pub t: f64,
    pub k: DVector<f64>,
    /// Fractions of `T - t`; defaults to the geometric ladder
    /// `2^-3 .. 2^-15`.
    pub eps_fractions: Vec<f64>,
}

impl PerturbationProbe {
    pub fn new(t: f64, k: DVector<f64>) -> Self {
        Self {
            t,
            k,
            eps_fractions: (3..=15).map(|j| 2f64.powi(-j)).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SlopeReport {
    /// `(epsilon, finite-difference slope)` down the ladder.
    pub ladder: Vec<(f64, f64)>,
    /// Richardson-extrapolated limit slope.
    pub extrapolated: f64,
    pub j0: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateConfig {
    pub directions: usize,
    pub times: usize,
    pub seed: u64,
}

impl Default for CertificateConfig {
    fn default() -> Self {
        Self {
            directions: 100,
            times: 10,
            seed: 0xcafe,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub pass: bool,
    pub worst_slope: f64,
    pub worst_time: f64,
    pub worst_direction: Vec<f64>,
    pub probes: usize,
    pub seed: u64,
}

/// One standard normal draw by Box-Muller.
fn standard_normal<R: rand::Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Quadrature representation of the risk-aversion law: weighted gamma
/// nodes.
fn gamma_nodes(dist: &RiskAversionDistribution, quad_nodes: usize) -> Result<Vec<(f64, f64)>> {
    if let Some(atoms) = dist.atom_probs() {
        return Ok(atoms);
    }
    // continuous law with a quantile: integrate CE(Q(u)) du on (0, 1)
    if dist.quantile(0.5).is_none() {
        return Err(EqportError::Precondition(
            "Monte Carlo needs atoms or a closed-form quantile for the risk aversion law".into(),
        ));
    }
    let (x, w) = gauss_legendre(quad_nodes.max(2));
    Ok(x
        .iter()
        .zip(&w)
        .map(|(&xi, &wi)| {
            let u = 0.5 * (xi + 1.0);
            (dist.quantile(u).unwrap(), 0.5 * wi)
        })
        .collect())
}

/// Exact lognormal Monte Carlo estimate of `J0(t, pi)`.
///
/// Segment log-increments are Gaussian with mean and variance read off the
/// curve's exact `y` and `v` columns, so there is no time-discretization
/// error; stderr comes from chunk means.
pub fn mc_objective(
    curve: &StrategyCurve,
    dist: &RiskAversionDistribution,
    t: f64,
    sim: &SimConfig,
) -> Result<McEstimate> {
    if sim.paths < 1_000 {
        return Err(EqportError::Precondition(
            "need at least 1000 paths".into(),
        ));
    }
    let start = curve.nearest_index(t);
    // per-segment exact moments from the curve columns
    let mut segments: Vec<(f64, f64)> = Vec::new();
    for i in start..curve.len() - 1 {
        let var = curve.v[i] - curve.v[i + 1];
        let dy = curve.y[i] - curve.y[i + 1];
        if var < 0.0 {
            return Err(EqportError::Precondition(format!(
                "v must be nonincreasing, violated at t = {}",
                curve.t[i]
            )));
        }
        segments.push((dy - 0.5 * var, var));
    }
    let nodes = gamma_nodes(dist, sim.quad_nodes)?;
    let chunks = sim.chunks.max(2);
    let per_chunk = sim.paths / chunks;
    let chunk_values: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                sim.seed ^ (c as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
            );
            // accumulators of E[e^{(1-gamma) Z}] (log-mean for gamma = 1)
            let mut sums = vec![0.0f64; nodes.len()];
            for _ in 0..per_chunk {
                let mut z = 0.0;
                for &(m, var) in &segments {
                    z += m + var.sqrt() * standard_normal(&mut rng);
                }
                for (s, &(gamma, _)) in sums.iter_mut().zip(&nodes) {
                    if (gamma - 1.0).abs() < 1e-12 {
                        *s += z;
                    } else {
                        *s += ((1.0 - gamma) * z).exp();
                    }
                }
            }
            let inv = 1.0 / per_chunk as f64;
            nodes
                .iter()
                .zip(&sums)
                .map(|(&(gamma, w), &s)| {
                    let ce = if (gamma - 1.0).abs() < 1e-12 {
                        (s * inv).exp()
                    } else {
                        (s * inv).powf(1.0 / (1.0 - gamma))
                    };
                    w * ce
                })
                .sum()
        })
        .collect();
    let mean = chunk_values.iter().sum::<f64>() / chunks as f64;
    let var = chunk_values
        .iter()
        .map(|&v| (v - mean) * (v - mean))
        .sum::<f64>()
        / (chunks as f64 - 1.0);
    Ok(McEstimate {
        value: mean,
        stderr: (var / chunks as f64).sqrt(),
    })
}

/// Trapezoid integral of a scalar function of curve time over
/// `[t, t + eps]`, refining with the curve grid nodes inside the window.
fn window_integral<F: Fn(f64) -> f64>(curve: &StrategyCurve, t: f64, eps: f64, f: F) -> f64 {
    let mut nodes: Vec<f64> = vec![t];
    for &g in &curve.t {
        if g > t && g < t + eps {
            nodes.push(g);
        }
    }
    nodes.push(t + eps);
    let mut acc = 0.0;
    for w in nodes.windows(2) {
        acc += 0.5 * (f(w[0]) + f(w[1])) * (w[1] - w[0]);
    }
    acc
}

/// Finite-difference slope of `J0` under the piecewise perturbation
/// `a -> a + sigma^T k` on `[t, t + eps]`, evaluated in closed form.
pub fn perturbation_slope(
    curve: &StrategyCurve,
    market: &MarketModel,
    dist: &RiskAversionDistribution,
    probe: &PerturbationProbe,
) -> Result<SlopeReport> {
    let idx = curve.nearest_index(probe.t);
    let t = curve.t[idx];
    let horizon = market.horizon();
    if t >= horizon {
        return Err(EqportError::Domain(format!(
            "probe time {t} must lie before the horizon"
        )));
    }
    let (v_t, y_t) = (curve.v[idx], curve.y[idx]);
    let j_old = (y_t + dist.log_laplace(v_t / 2.0)).exp();
    let u_at = |s: f64| market.sigma(s).map(|sg| sg.transpose() * &probe.k);
    let mut ladder = Vec::with_capacity(probe.eps_fractions.len());
    for &frac in &probe.eps_fractions {
        let eps = frac * (horizon - t);
        if eps <= 0.0 || t + eps > horizon {
            return Err(EqportError::Domain(format!(
                "epsilon {eps} outside (0, T - t)"
            )));
        }
        let dv = window_integral(curve, t, eps, |s| {
            let u = u_at(s).expect("market evaluable");
            let a = curve.a_at(s);
            2.0 * a.dot(&u) + u.norm_squared()
        });
        let dy = window_integral(curve, t, eps, |s| {
            let u = u_at(s).expect("market evaluable");
            u.dot(market.lambda(s).expect("market evaluable"))
        });
        let j_new = (y_t + dy + dist.log_laplace((v_t + dv).max(0.0) / 2.0)).exp();
        ladder.push((eps, (j_new - j_old) / eps));
    }
    let extrapolated = richardson(&ladder.iter().map(|&(_, s)| s).collect::<Vec<_>>());
    Ok(SlopeReport {
        ladder,
        extrapolated,
        j0: j_old,
    })
}

/// Order-2 Richardson extrapolation for a geometric (ratio 2) ladder of
/// slope estimates, finest last.
fn richardson(s: &[f64]) -> f64 {
    if s.len() < 3 {
        return *s.last().unwrap_or(&f64::NAN);
    }
    let first: Vec<f64> = s.windows(2).map(|w| 2.0 * w[1] - w[0]).collect();
    let second: Vec<f64> = first
        .windows(2)
        .map(|w| (4.0 * w[1] - w[0]) / 3.0)
        .collect();
    *second.last().unwrap()
}

/// Necessary-condition certificate: no probe direction may produce a
/// positive extrapolated slope beyond tolerance.
pub fn equilibrium_certificate(
    curve: &StrategyCurve,
    market: &MarketModel,
    dist: &RiskAversionDistribution,
    cfg: &CertificateConfig,
    tol: &Tolerances,
) -> Result<CertificateReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let uniform = rand::distributions::Uniform::new(-1.0f64, 1.0);
    let horizon = market.horizon();
    let d = market.dim();
    let mut times = Vec::with_capacity(cfg.times);
    for _ in 0..cfg.times {
        let u: f64 = rand::Rng::gen(&mut rng);
        times.push(0.95 * horizon * u);
    }
    let mut directions = Vec::with_capacity(cfg.directions);
    for _ in 0..cfg.directions {
        let k = DVector::from_fn(d, |_, _| uniform.sample(&mut rng));
        if k.norm() > 1e-6 {
            directions.push(k);
        }
    }
    let mut worst_slope = f64::NEG_INFINITY;
    let mut worst_time = 0.0;
    let mut worst_direction = vec![0.0; d];
    let mut pass = true;
    let mut probes = 0;
    for &t in &times {
        for k in &directions {
            let rep = perturbation_slope(curve, market, dist, &PerturbationProbe::new(t, k.clone()))?;
            probes += 1;
            if rep.extrapolated > worst_slope {
                worst_slope = rep.extrapolated;
                worst_time = t;
                worst_direction = k.iter().copied().collect();
            }
            if rep.extrapolated > tol.slope_tol * rep.j0.max(1.0) {
                pass = false;
            }
        }
    }
    Ok(CertificateReport {
        pass,
        worst_slope,
        worst_time,
        worst_direction,
        probes,
        seed: cfg.seed,
    })
}

/// Rebuilds a curve with every exposure multiplied by `factor`,
/// recomputing `v`, `y`, and `J0` consistently by trapezoid accumulation.
/// Used to produce deliberate non-equilibria for certificate tests.
pub fn rescale_curve(
    curve: &StrategyCurve,
    market: &MarketModel,
    dist: &RiskAversionDistribution,
    factor: f64,
) -> Result<StrategyCurve> {
    let n = curve.len();
    let a: Vec<DVector<f64>> = curve.a.iter().map(|x| x * factor).collect();
    let pi: Vec<DVector<f64>> = curve.pi.iter().map(|x| x * factor).collect();
    let mut v = vec![0.0; n];
    let mut y = vec![0.0; n];
    for i in (0..n - 1).rev() {
        let dt = curve.t[i + 1] - curve.t[i];
        v[i] = v[i + 1] + 0.5 * (a[i].norm_squared() + a[i + 1].norm_squared()) * dt;
        let yl0 = a[i].dot(market.lambda(curve.t[i])?);
        let yl1 = a[i + 1].dot(market.lambda(curve.t[i + 1])?);
        y[i] = y[i + 1] + 0.5 * (yl0 + yl1) * dt;
    }
    let j0 = v
        .iter()
        .zip(&y)
        .map(|(&vi, &yi)| (yi + dist.log_laplace(vi / 2.0)).exp())
        .collect();
    Ok(StrategyCurve {
        t: curve.t.clone(),
        v,
        a,
        pi,
        y,
        j0,
        t0: curve.t0,
    })
}
