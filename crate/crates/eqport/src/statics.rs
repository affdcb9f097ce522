//! Comparative statics: pointwise comparison under stochastic orders,
//! single-crossing detection for two-point laws, long-horizon reversal,
//! crossing-time sensitivity, and aggregation experiments.

use serde::Serialize;

use crate::config::Tolerances;
use crate::equilibrium::{
    build_grid, classify, optimal_equilibrium, solve_unique, OptimalOutcome, Regime, StrategyCurve,
};
use crate::error::{EqportError, Result};
use crate::kernel::PreferenceKernel;
use crate::market::MarketModel;
use crate::numeric::bisect;
use crate::riskdist::{OrderVerdict, RiskAversionDistribution};

/// Two atoms: mass `p` at `r0`, mass `1 - p` at `r0 + gap`. The
/// parametrization used by the crossing analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoPointLaw {
    pub r0: f64,
    pub gap: f64,
    pub p: f64,
}

impl TwoPointLaw {
    pub fn new(r0: f64, gap: f64, p: f64) -> Result<Self> {
        // constructor of the distribution validates the numbers
        RiskAversionDistribution::two_point(r0, gap, p)?;
        Ok(Self { r0, gap, p })
    }

    pub fn dist(&self) -> RiskAversionDistribution {
        RiskAversionDistribution::two_point(self.r0, self.gap, self.p)
            .expect("validated at construction")
    }

    pub fn mean(&self) -> f64 {
        self.r0 + self.gap * (1.0 - self.p)
    }

    /// `Q(x) = delta (1-p) e^{-delta x/2} / (p + (1-p) e^{-delta x/2})`,
    /// so that `1/h(x) = r0 + Q(x)`. Strictly decreasing with
    /// `Q(0) = delta (1-p) = mu - r0`.
    pub fn q(&self, x: f64) -> f64 {
        let e = (-self.gap * x / 2.0).exp();
        self.gap * (1.0 - self.p) * e / (self.p + (1.0 - self.p) * e)
    }
}

/// Pointwise exposure comparison of two investors in one market.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub t: Vec<f64>,
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    pub rh: OrderVerdict,
    pub fsd: OrderVerdict,
    /// Times where `|a1| > |a2| + 1e-10` (violations of the rh-order
    /// prediction that investor 1 is less aggressive).
    pub violations: Vec<f64>,
    /// Grid sign changes of `|a1| - |a2|`.
    pub crossings: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossingReport {
    pub t_star: f64,
    /// Closed-form derivative of the crossing function at `t_star`;
    /// positivity certifies uniqueness.
    pub d_prime: f64,
    pub q_at_star: f64,
}

#[derive(Debug, Clone, Serialize)]
pub enum CrossingOutcome {
    Found(CrossingReport),
    /// `|a1(0)| <= |a2(0)|`: the horizon is below the reversal horizon.
    NoCrossing { d_at_zero: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub enum ReversalOutcome {
    /// Bracket around the smallest horizon with `|a1(0,T)| > |a2(0,T)|`.
    Found { lo: f64, hi: f64 },
    NotFoundUpTo(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SweepParam {
    /// Move `p1 = p2 = p` together.
    BothP,
    P1,
    P2,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvexCombinationReport {
    pub t: Vec<f64>,
    pub mix: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    /// Times where the mixture exposure exceeds every component's.
    pub exceeds_all: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AggregationTrace {
    pub t: Vec<f64>,
    pub n: Vec<u32>,
    /// `|a_n(t)|` per n, outer index matching `n`.
    pub magnitudes: Vec<Vec<f64>>,
    /// The predicted limit `|lambda(t)| / mu`.
    pub limit: Vec<f64>,
}

/// Solves whichever regime applies, preferring the optimal member in the
/// family case.
pub fn solve_best(
    kernel: &PreferenceKernel,
    market: &MarketModel,
    grid_points: usize,
) -> Result<StrategyCurve> {
    match classify(kernel, market).regime {
        Regime::UniqueFinite => solve_unique(kernel, market, grid_points),
        Regime::FamilyInfinite => match optimal_equilibrium(kernel, market, grid_points)? {
            OptimalOutcome::Optimal { curve, .. } => Ok(curve),
            OptimalOutcome::NoOptimal { .. } => Err(EqportError::RegimeMismatch(
                "family has no optimal member to compare".into(),
            )),
        },
        other => Err(EqportError::RegimeMismatch(format!(
            "no solvable strategy in regime {other:?}"
        ))),
    }
}

pub fn compare_pointwise(
    k1: &PreferenceKernel,
    k2: &PreferenceKernel,
    market: &MarketModel,
    grid_points: usize,
) -> Result<ComparisonReport> {
    let c1 = solve_best(k1, market, grid_points)?;
    let c2 = solve_best(k2, market, grid_points)?;
    debug_assert_eq!(c1.t, c2.t);
    let tol = k1.tolerances();
    let rh = k1
        .dist()
        .rhr_dominates(k2.dist(), tol.order_grid, tol.order_quantile_eps);
    let fsd = k1
        .dist()
        .fsd_dominates(k2.dist(), tol.order_grid, tol.order_quantile_eps);
    let a1: Vec<f64> = c1.a.iter().map(|a| a.norm()).collect();
    let a2: Vec<f64> = c2.a.iter().map(|a| a.norm()).collect();
    let mut violations = Vec::new();
    let mut crossings = Vec::new();
    let mut prev_sign = 0.0f64;
    for i in 0..c1.t.len() {
        let diff = a1[i] - a2[i];
        if diff > 1e-10 {
            violations.push(c1.t[i]);
        }
        if i > 0 && diff.signum() != prev_sign && diff != 0.0 && prev_sign != 0.0 {
            crossings.push(c1.t[i]);
        }
        if diff != 0.0 {
            prev_sign = diff.signum();
        }
    }
    Ok(ComparisonReport {
        t: c1.t,
        a1,
        a2,
        rh,
        fsd,
        violations,
        crossings,
    })
}

fn validate_pair(tp1: &TwoPointLaw, tp2: &TwoPointLaw) -> Result<()> {
    if (tp1.r0 - tp2.r0).abs() > 1e-12 {
        return Err(EqportError::Precondition(format!(
            "laws must share the same r0, got {} and {}",
            tp1.r0, tp2.r0
        )));
    }
    if tp1.r0 <= 0.0 {
        return Err(EqportError::Precondition("shared r0 must be positive".into()));
    }
    if tp1.gap <= tp2.gap {
        return Err(EqportError::Precondition(format!(
            "need delta1 > delta2, got {} <= {}",
            tp1.gap, tp2.gap
        )));
    }
    if tp1.mean() <= tp2.mean() {
        return Err(EqportError::Precondition(format!(
            "need mu1 > mu2, got {} <= {}",
            tp1.mean(),
            tp2.mean()
        )));
    }
    Ok(())
}

/// Crossing function `D(t) = Q1(v1(t)) - Q2(v2(t))`. Negative exactly
/// where investor 1 holds the larger exposure.
fn crossing_fn<'a>(
    tp1: &'a TwoPointLaw,
    k1: &'a PreferenceKernel,
    tp2: &'a TwoPointLaw,
    k2: &'a PreferenceKernel,
    market: &'a MarketModel,
) -> impl Fn(f64) -> Result<f64> + 'a {
    let opp = market.opportunity();
    move |t: f64| {
        let lam = opp.at(t)?;
        let v1 = k1.big_h_inverse(lam)?;
        let v2 = k2.big_h_inverse(lam)?;
        Ok(tp1.q(v1) - tp2.q(v2))
    }
}

pub fn find_crossing(
    tp1: &TwoPointLaw,
    tp2: &TwoPointLaw,
    market: &MarketModel,
    tol: &Tolerances,
) -> Result<CrossingOutcome> {
    validate_pair(tp1, tp2)?;
    let k1 = PreferenceKernel::new(tp1.dist(), tol.clone())?;
    let k2 = PreferenceKernel::new(tp2.dist(), tol.clone())?;
    let d = crossing_fn(tp1, &k1, tp2, &k2, market);
    let d0 = d(0.0)?;
    if d0 >= 0.0 {
        return Ok(CrossingOutcome::NoCrossing { d_at_zero: d0 });
    }
    // D(T) = Q1(0) - Q2(0) = mu1 - mu2 > 0, so a sign change exists
    let horizon = market.horizon();
    let f = |t: f64| d(t).expect("opportunity evaluable inside [0, T]");
    let t_star = bisect(&f, 0.0, horizon, tol.crossing_time_tol)?;
    let lam = market.opportunity().at(t_star)?;
    let q = 0.5 * (tp1.q(k1.big_h_inverse(lam)?) + tp2.q(k2.big_h_inverse(lam)?));
    let lam_sq = market.lambda(t_star)?.norm_squared();
    let r0q = tp1.r0 + q;
    let d_prime = lam_sq * q * (tp1.gap - tp2.gap) / (2.0 * r0q * r0q);
    Ok(CrossingOutcome::Found(CrossingReport {
        t_star,
        d_prime,
        q_at_star: q,
    }))
}

/// Smallest horizon at which investor 1's initial exposure overtakes
/// investor 2's, for a constant price of risk extended to `[0, inf)`.
pub fn reversal_horizon(
    tp1: &TwoPointLaw,
    tp2: &TwoPointLaw,
    lambda: f64,
    tol: &Tolerances,
) -> Result<ReversalOutcome> {
    validate_pair(tp1, tp2)?;
    if lambda == 0.0 {
        return Err(EqportError::Precondition(
            "constant lambda must be nonzero".into(),
        ));
    }
    let k1 = PreferenceKernel::new(tp1.dist(), tol.clone())?;
    let k2 = PreferenceKernel::new(tp2.dist(), tol.clone())?;
    let g = |horizon: f64| -> Result<f64> {
        let lam = lambda * lambda * horizon;
        Ok(tp1.q(k1.big_h_inverse(lam)?) - tp2.q(k2.big_h_inverse(lam)?))
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    loop {
        if g(hi)? < 0.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > tol.reversal_t_max {
            return Ok(ReversalOutcome::NotFoundUpTo(tol.reversal_t_max));
        }
    }
    let f = |t: f64| g(t).expect("crossing function evaluable");
    let root = bisect(&f, lo, hi, 1e-8 * hi)?;
    let half = 0.5e-6 * root.max(1.0);
    Ok(ReversalOutcome::Found {
        lo: root - half,
        hi: root + half,
    })
}

/// Sweep of the crossing time as atom masses move, in either or both
/// laws.
pub fn crossing_sensitivity(
    base1: &TwoPointLaw,
    base2: &TwoPointLaw,
    which: SweepParam,
    p_grid: &[f64],
    market: &MarketModel,
    tol: &Tolerances,
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        let (tp1, tp2) = match which {
            SweepParam::BothP => (
                TwoPointLaw::new(base1.r0, base1.gap, p)?,
                TwoPointLaw::new(base2.r0, base2.gap, p)?,
            ),
            SweepParam::P1 => (TwoPointLaw::new(base1.r0, base1.gap, p)?, *base2),
            SweepParam::P2 => (*base1, TwoPointLaw::new(base2.r0, base2.gap, p)?),
        };
        match find_crossing(&tp1, &tp2, market, tol)? {
            CrossingOutcome::Found(rep) => out.push((p, rep.t_star)),
            CrossingOutcome::NoCrossing { .. } => {
                return Err(EqportError::Precondition(format!(
                    "no crossing at p = {p}: horizon below the reversal horizon"
                )))
            }
        }
    }
    Ok(out)
}

/// Solves the mixture law `R = sum w_i R_i` alongside each component.
pub fn convex_combination_compare(
    parts: &[(f64, RiskAversionDistribution)],
    market: &MarketModel,
    grid_points: usize,
    tol: &Tolerances,
) -> Result<ConvexCombinationReport> {
    let mix = RiskAversionDistribution::mix(parts.to_vec())?;
    let k_mix = PreferenceKernel::new(mix, tol.clone())?;
    let c_mix = solve_best(&k_mix, market, grid_points)?;
    let mix_mag: Vec<f64> = c_mix.a.iter().map(|a| a.norm()).collect();
    let mut components = Vec::with_capacity(parts.len());
    for (_, d) in parts {
        let k = PreferenceKernel::new(d.clone(), tol.clone())?;
        let c = solve_best(&k, market, grid_points)?;
        components.push(c.a.iter().map(|a| a.norm()).collect::<Vec<f64>>());
    }
    let mut exceeds_all = Vec::new();
    for i in 0..c_mix.t.len() {
        let max_comp = components
            .iter()
            .map(|c| c[i])
            .fold(f64::NEG_INFINITY, f64::max);
        if mix_mag[i] > max_comp + 1e-12 {
            exceeds_all.push(c_mix.t[i]);
        }
    }
    Ok(ConvexCombinationReport {
        t: c_mix.t,
        mix: mix_mag,
        components,
        exceeds_all,
    })
}

/// Exposure of the sample-mean investor for each pooled group size.
pub fn sample_mean_aggregation(
    base: &RiskAversionDistribution,
    ns: &[u32],
    market: &MarketModel,
    grid_points: usize,
    tol: &Tolerances,
) -> Result<AggregationTrace> {
    let mu = base.mean().finite().ok_or_else(|| {
        EqportError::Precondition("sample-mean aggregation needs a finite mean".into())
    })?;
    let t = build_grid(market, grid_points, None);
    let mut magnitudes = Vec::with_capacity(ns.len());
    for &n in ns {
        let d = RiskAversionDistribution::sample_mean(base.clone(), n)?;
        let k = PreferenceKernel::new(d, tol.clone())?;
        let c = solve_best(&k, market, grid_points)?;
        debug_assert_eq!(c.t, t);
        magnitudes.push(c.a.iter().map(|a| a.norm()).collect::<Vec<f64>>());
    }
    let limit = t
        .iter()
        .map(|&ti| market.lambda(ti).map(|l| l.norm() / mu))
        .collect::<Result<Vec<f64>>>()?;
    Ok(AggregationTrace {
        t,
        n: ns.to_vec(),
        magnitudes,
        limit,
    })
}
