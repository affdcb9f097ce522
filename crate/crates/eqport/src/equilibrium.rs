//! Regime classification, strategy curves, the `T0`-indexed family,
//! optimal-equilibrium selection, and the objective `J0`.
//!
//! Curves are evaluated exactly as `v = H^{-1}(Lambda)` at every node; the
//! ODE is never stepped forward, so grid density only affects reporting
//! resolution.

use nalgebra::DVector;
use serde::Serialize;

use crate::config::Tolerances;
use crate::error::{EqportError, Result};
use crate::kernel::{HInfinity, PreferenceKernel};
use crate::market::MarketModel;

/// Equilibrium structure per the three solvability cases.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Regime {
    /// Finite mean, `H(inf) > Lambda(0)`: exactly one deterministic
    /// equilibrium.
    UniqueFinite,
    /// Infinite mean with integrable singularity: the `T0`-indexed family.
    FamilyInfinite,
    /// Infinite mean, non-integrable singularity: only the zero strategy.
    TrivialOnly,
    /// Finite mean but `H(inf) <= Lambda(0)`: no deterministic equilibrium.
    NonexistentDeterministic { h_infinity: f64, lambda0: f64 },
    /// `H(inf)` probe was inconclusive at the deciding comparison.
    Undetermined { reason: String },
}

/// The admissible index interval `A`; `T0` values are `phi(eta)` for
/// `eta` in `A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TeeSet {
    pub eta_lo: f64,
    pub eta_hi: f64,
    /// Whether `eta_lo` itself is excluded (`Lambda(0) - H(inf) >= 0`).
    pub lo_open: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    pub regime: Regime,
    pub h_infinity: HInfinity,
    pub lambda0: f64,
    pub tee_set: Option<TeeSet>,
}

/// A fully materialized deterministic strategy with its objective.
#[derive(Debug, Clone)]
pub struct StrategyCurve {
    pub t: Vec<f64>,
    /// Remaining squared exposure `v(t) = int_t^T |a|^2`.
    pub v: Vec<f64>,
    /// Risk exposure `a(t) = sigma(t)^T pi(t)`.
    pub a: Vec<DVector<f64>>,
    pub pi: Vec<DVector<f64>>,
    /// `y(t) = int_t^T a^T lambda`.
    pub y: Vec<f64>,
    pub j0: Vec<f64>,
    /// Family index when the curve is a `T0` member.
    pub t0: Option<f64>,
}

#[derive(Debug, Clone)]
pub enum OptimalOutcome {
    Optimal {
        curve: StrategyCurve,
        t0: f64,
        uniformly_optimal: bool,
        uniformly_strictly_optimal: bool,
    },
    /// `H(inf) <= Lambda(0)`: the supremum over the family is not attained.
    NoOptimal { tee_set: TeeSet },
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticsReport {
    pub magnitudes: Vec<f64>,
    pub monotone_increasing: bool,
    pub monotone_decreasing: bool,
    pub predicted_limit: Option<f64>,
    pub empirical_limit: f64,
}

impl StrategyCurve {
    /// All-zero strategy on the standard grid; `J0 = 1` identically.
    pub fn zero(market: &MarketModel, grid_points: usize) -> Self {
        let t = build_grid(market, grid_points, None);
        let d = market.dim();
        let n = t.len();
        Self {
            t,
            v: vec![0.0; n],
            a: vec![DVector::zeros(d); n],
            pi: vec![DVector::zeros(d); n],
            y: vec![0.0; n],
            j0: vec![1.0; n],
            t0: None,
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Index of the grid node nearest to `t`.
    pub fn nearest_index(&self, t: f64) -> usize {
        let idx = self.t.partition_point(|&x| x < t);
        if idx == 0 {
            return 0;
        }
        if idx >= self.t.len() {
            return self.t.len() - 1;
        }
        if (self.t[idx] - t).abs() < (t - self.t[idx - 1]).abs() {
            idx
        } else {
            idx - 1
        }
    }

    fn interp_scalar(&self, col: &[f64], t: f64) -> f64 {
        let idx = self.t.partition_point(|&x| x <= t);
        if idx == 0 {
            return col[0];
        }
        if idx >= self.t.len() {
            return *col.last().unwrap();
        }
        let (t0, t1) = (self.t[idx - 1], self.t[idx]);
        let w = (t - t0) / (t1 - t0);
        col[idx - 1] * (1.0 - w) + col[idx] * w
    }

    pub fn v_at(&self, t: f64) -> f64 {
        self.interp_scalar(&self.v, t)
    }

    pub fn y_at(&self, t: f64) -> f64 {
        self.interp_scalar(&self.y, t)
    }

    /// Linear interpolation of the exposure vector.
    pub fn a_at(&self, t: f64) -> DVector<f64> {
        let idx = self.t.partition_point(|&x| x <= t);
        if idx == 0 {
            return self.a[0].clone();
        }
        if idx >= self.t.len() {
            return self.a.last().unwrap().clone();
        }
        let (t0, t1) = (self.t[idx - 1], self.t[idx]);
        let w = (t - t0) / (t1 - t0);
        &self.a[idx - 1] * (1.0 - w) + &self.a[idx] * w
    }
}

/// Standard time grid: `n` uniform points unioned with the market
/// breakpoints (and an optional extra node such as `T0`).
pub fn build_grid(market: &MarketModel, n: usize, extra: Option<f64>) -> Vec<f64> {
    let horizon = market.horizon();
    let n = n.max(2);
    let mut t: Vec<f64> = (0..n).map(|i| horizon * i as f64 / (n - 1) as f64).collect();
    t.extend(market.breakpoints());
    if let Some(e) = extra {
        if (0.0..=horizon).contains(&e) {
            t.push(e);
        }
    }
    t.sort_by(f64::total_cmp);
    t.dedup_by(|a, b| (*a - *b).abs() < 1e-13 * horizon.max(1.0));
    t
}

/// Regime classification of the (kernel, market) pair.
pub fn classify(kernel: &PreferenceKernel, market: &MarketModel) -> EquilibriumReport {
    let lambda0 = market.opportunity().initial();
    let h_infinity = kernel.h_infinity();
    if kernel.dist().mean().is_finite() {
        let regime = match h_infinity.exceeds(lambda0) {
            Some(true) => Regime::UniqueFinite,
            Some(false) => match h_infinity {
                HInfinity::Finite(v) => Regime::NonexistentDeterministic {
                    h_infinity: v,
                    lambda0,
                },
                _ => unreachable!("only finite H(inf) can fail to exceed"),
            },
            None => Regime::Undetermined {
                reason: format!(
                    "H(inf) lower bound did not reach Lambda(0) = {lambda0} before y_max"
                ),
            },
        };
        return EquilibriumReport {
            regime,
            h_infinity,
            lambda0,
            tee_set: None,
        };
    }
    if !kernel.h_zero_regime().is_integrable() {
        return EquilibriumReport {
            regime: Regime::TrivialOnly,
            h_infinity,
            lambda0,
            tee_set: None,
        };
    }
    // A = [0, Lambda(0)] intersect (Lambda(0) - H(inf), Lambda(0)]
    let tee_set = match h_infinity {
        HInfinity::Infinite => Some(TeeSet {
            eta_lo: 0.0,
            eta_hi: lambda0,
            lo_open: false,
        }),
        HInfinity::Finite(v) => Some(TeeSet {
            eta_lo: (lambda0 - v).max(0.0),
            eta_hi: lambda0,
            lo_open: lambda0 - v >= 0.0,
        }),
        HInfinity::Unresolved { lower_bound } if lower_bound > lambda0 => Some(TeeSet {
            eta_lo: 0.0,
            eta_hi: lambda0,
            lo_open: false,
        }),
        HInfinity::Unresolved { .. } => None,
    };
    match tee_set {
        Some(_) => EquilibriumReport {
            regime: Regime::FamilyInfinite,
            h_infinity,
            lambda0,
            tee_set,
        },
        None => EquilibriumReport {
            regime: Regime::Undetermined {
                reason: "H(inf) unresolved: lower endpoint of the index set unknown".into(),
            },
            h_infinity,
            lambda0,
            tee_set: None,
        },
    }
}

fn build_curve<F>(
    kernel: &PreferenceKernel,
    market: &MarketModel,
    times: Vec<f64>,
    v_fn: F,
    t0: Option<f64>,
) -> Result<StrategyCurve>
where
    F: Fn(f64) -> Result<f64>,
{
    let n = times.len();
    let mut v = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n);
    let mut pi = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut j0 = Vec::with_capacity(n);
    for &t in &times {
        let vt = v_fn(t)?;
        let ht = kernel.h(vt)?;
        let at = market.lambda(t)? * ht;
        let pit = market.portfolio_from_exposure(t, &at)?;
        let lt = kernel.script_l(vt)?;
        // y = L(v) - log l(v/2), the exact v-space change of variables
        y.push(lt - kernel.dist().log_laplace(vt / 2.0));
        j0.push(lt.exp());
        v.push(vt);
        a.push(at);
        pi.push(pit);
    }
    Ok(StrategyCurve {
        t: times,
        v,
        a,
        pi,
        y,
        j0,
        t0,
    })
}

/// The unique equilibrium in the finite-mean solvable regime.
pub fn solve_unique(
    kernel: &PreferenceKernel,
    market: &MarketModel,
    grid_points: usize,
) -> Result<StrategyCurve> {
    let report = classify(kernel, market);
    if report.regime != Regime::UniqueFinite {
        return Err(EqportError::RegimeMismatch(format!(
            "solve_unique needs UniqueFinite, found {:?}",
            report.regime
        )));
    }
    let opp = market.opportunity();
    let times = build_grid(market, grid_points, None);
    build_curve(
        kernel,
        market,
        times,
        |t| kernel.big_h_inverse(opp.at(t)?),
        None,
    )
}

/// Validates `T0` membership in the index set and materializes the member.
pub fn solve_family_member(
    kernel: &PreferenceKernel,
    market: &MarketModel,
    t0: f64,
    grid_points: usize,
) -> Result<StrategyCurve> {
    let report = classify(kernel, market);
    if report.regime != Regime::FamilyInfinite {
        return Err(EqportError::RegimeMismatch(format!(
            "solve_family_member needs FamilyInfinite, found {:?}",
            report.regime
        )));
    }
    let opp = market.opportunity();
    if !(0.0..=market.horizon()).contains(&t0) {
        return Err(EqportError::Membership {
            t0,
            reason: format!("outside [0, {}]", market.horizon()),
        });
    }
    let eta = opp.at(t0)?;
    match kernel.h_infinity().exceeds(report.lambda0 - eta) {
        Some(true) => {}
        Some(false) => {
            return Err(EqportError::Membership {
                t0,
                reason: format!(
                    "H(inf) <= Lambda(0) - Lambda(T0) = {}",
                    report.lambda0 - eta
                ),
            })
        }
        None => {
            return Err(EqportError::Membership {
                t0,
                reason: "H(inf) unresolved at the required level".into(),
            })
        }
    }
    // Lambda(t) > Lambda(T0) on [0, T0) iff T0 is the earliest time
    // attaining its own level
    let phi = opp.phi(eta)?;
    if (phi - t0).abs() > 1e-10 * market.horizon().max(1.0) {
        return Err(EqportError::Membership {
            t0,
            reason: format!("Lambda is flat before T0: Lambda(t) = Lambda(T0) at t = {phi}"),
        });
    }
    let times = build_grid(market, grid_points, Some(t0));
    build_curve(
        kernel,
        market,
        times,
        |t| {
            if t >= t0 {
                Ok(0.0)
            } else {
                kernel.big_h_inverse(opp.at(t)? - eta)
            }
        },
        Some(t0),
    )
}

/// Optimal-equilibrium selection over the family.
pub fn optimal_equilibrium(
    kernel: &PreferenceKernel,
    market: &MarketModel,
    grid_points: usize,
) -> Result<OptimalOutcome> {
    let report = classify(kernel, market);
    if report.regime != Regime::FamilyInfinite {
        return Err(EqportError::RegimeMismatch(format!(
            "optimal_equilibrium needs FamilyInfinite, found {:?}",
            report.regime
        )));
    }
    let exists = match kernel.h_infinity().exceeds(report.lambda0) {
        Some(v) => v,
        None => {
            return Err(EqportError::NonConvergence(
                "H(inf) unresolved at Lambda(0): optimal existence undetermined".into(),
            ))
        }
    };
    if !exists {
        return Ok(OptimalOutcome::NoOptimal {
            tee_set: report.tee_set.expect("FamilyInfinite carries a tee set"),
        });
    }
    let opp = market.opportunity();
    let t0 = opp.phi(0.0)?;
    let curve = solve_family_member(kernel, market, t0, grid_points)?;
    // strict uniform optimality needs Lambda(t) > 0 up to T, i.e. phi(0) = T
    let strictly = (t0 - market.horizon()).abs() < 1e-12 * market.horizon().max(1.0);
    Ok(OptimalOutcome::Optimal {
        curve,
        t0,
        uniformly_optimal: true,
        uniformly_strictly_optimal: strictly,
    })
}

/// `J0` at a grid time, cross-checked against the transform form
/// `e^y l(v/2)`.
pub fn objective_at(kernel: &PreferenceKernel, curve: &StrategyCurve, t: f64) -> Result<f64> {
    let idx = curve.nearest_index(t);
    if (curve.t[idx] - t).abs() > 1e-9 * curve.t.last().unwrap().max(1.0) {
        return Err(EqportError::Domain(format!("t = {t} is not a grid point")));
    }
    let j = curve.j0[idx];
    let alt = (curve.y[idx] + kernel.dist().log_laplace(curve.v[idx] / 2.0)).exp();
    if (j - alt).abs() > 1e-8 * j.max(1.0) {
        return Err(EqportError::NonConvergence(format!(
            "objective cross-check failed at t = {t}: {j} vs {alt}"
        )));
    }
    Ok(j)
}

/// Initial-exposure asymptotics along a monotone total-opportunity sequence
/// (Propositions 3.10 and 4.5).
pub fn exposure_asymptotics(
    kernel: &PreferenceKernel,
    lambda0: f64,
    opportunity_seq: &[f64],
) -> Result<AsymptoticsReport> {
    if opportunity_seq.len() < 2 {
        return Err(EqportError::Precondition(
            "need at least two opportunity levels".into(),
        ));
    }
    let mut magnitudes = Vec::with_capacity(opportunity_seq.len());
    for &lam in opportunity_seq {
        let v = kernel.big_h_inverse(lam)?;
        magnitudes.push(kernel.h(v)? * lambda0);
    }
    let increasing = opportunity_seq.windows(2).all(|w| w[1] > w[0]);
    let decreasing = opportunity_seq.windows(2).all(|w| w[1] < w[0]);
    if !increasing && !decreasing {
        return Err(EqportError::Precondition(
            "opportunity sequence must be monotone".into(),
        ));
    }
    let predicted_limit = if increasing {
        let r0 = kernel.dist().essinf();
        (r0 > 0.0).then(|| lambda0 / r0)
    } else {
        match kernel.dist().mean() {
            crate::riskdist::Mean::Finite(mu) => Some(lambda0 / mu),
            crate::riskdist::Mean::Infinite => Some(0.0),
        }
    };
    let mono_inc = magnitudes.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    let mono_dec = magnitudes.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    Ok(AsymptoticsReport {
        empirical_limit: *magnitudes.last().unwrap(),
        magnitudes,
        monotone_increasing: mono_inc,
        monotone_decreasing: mono_dec,
        predicted_limit,
    })
}

/// Sup-grid exposure distance per approximating distribution.
pub fn kernel_sequence_convergence(
    dists: &[crate::riskdist::RiskAversionDistribution],
    limit: &crate::riskdist::RiskAversionDistribution,
    market: &MarketModel,
    grid_points: usize,
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    let limit_kernel = PreferenceKernel::new(limit.clone(), tol.clone())?;
    let target = solve_unique(&limit_kernel, market, grid_points)?;
    dists
        .iter()
        .map(|d| {
            let k = PreferenceKernel::new(d.clone(), tol.clone())?;
            let c = solve_unique(&k, market, grid_points)?;
            Ok(c.a
                .iter()
                .zip(&target.a)
                .map(|(an, a)| (an - a).norm())
                .fold(0.0, f64::max))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riskdist::RiskAversionDistribution;
    use approx::assert_relative_eq;

    fn kernel(dist: RiskAversionDistribution) -> PreferenceKernel {
        PreferenceKernel::new(dist, Tolerances::default()).unwrap()
    }

    fn market_fig1() -> MarketModel {
        MarketModel::constant(0.4, 0.2, 20.0).unwrap()
    }

    #[test]
    fn classify_matches_theorem_cases() {
        let m = market_fig1();
        let poi = kernel(RiskAversionDistribution::poisson(2.0).unwrap());
        assert_eq!(classify(&poi, &m).regime, Regime::UniqueFinite);

        // Lambda(0) = 3.2 >= H(inf) = theta^2 = 1 for theta = 1
        let poi_small = kernel(RiskAversionDistribution::poisson(1.0).unwrap());
        match classify(&poi_small, &m).regime {
            Regime::NonexistentDeterministic { h_infinity, lambda0 } => {
                assert_relative_eq!(h_infinity, 1.0);
                assert_relative_eq!(lambda0, 3.2);
            }
            other => panic!("expected nonexistent, got {other:?}"),
        }

        let s4 = kernel(RiskAversionDistribution::positive_stable(0.4).unwrap());
        assert_eq!(classify(&s4, &m).regime, Regime::TrivialOnly);

        let s8 = kernel(RiskAversionDistribution::positive_stable(0.8).unwrap());
        let rep = classify(&s8, &m);
        assert_eq!(rep.regime, Regime::FamilyInfinite);
        let tee = rep.tee_set.unwrap();
        assert_eq!(tee.eta_lo, 0.0);
        assert!(!tee.lo_open);
        assert_relative_eq!(tee.eta_hi, 3.2);
    }

    #[test]
    fn merton_reduction_is_exact() {
        let k = kernel(RiskAversionDistribution::point_mass(2.0).unwrap());
        let m = MarketModel::constant(0.3, 0.2, 10.0).unwrap();
        let c = solve_unique(&k, &m, 200).unwrap();
        for i in 0..c.len() {
            assert!((c.a[i][0] - 0.15).abs() <= 1e-12);
            assert!((c.pi[i][0] - 0.75).abs() <= 1e-12);
        }
        assert_eq!(*c.v.last().unwrap(), 0.0);
    }

    #[test]
    fn poisson_matches_closed_form() {
        let k = kernel(RiskAversionDistribution::poisson(2.0).unwrap());
        let m = market_fig1();
        let c = solve_unique(&k, &m, 2000).unwrap();
        let opp = m.opportunity();
        for i in 0..c.len() {
            let lam = opp.at(c.t[i]).unwrap();
            let expected = 0.4 / (4.0 - lam).sqrt();
            assert!((c.a[i][0] - expected).abs() <= 1e-8, "t = {}", c.t[i]);
        }
    }

    #[test]
    fn gamma_matches_closed_form() {
        let k = kernel(RiskAversionDistribution::gamma(2.0, 0.5).unwrap());
        let m = market_fig1();
        let c = solve_unique(&k, &m, 2000).unwrap();
        let opp = m.opportunity();
        for i in 0..c.len() {
            let lam = opp.at(c.t[i]).unwrap();
            let expected = 0.4 / (1.0 - lam / 4.0);
            assert!((c.a[i][0] - expected).abs() <= 1e-8, "t = {}", c.t[i]);
        }
    }

    #[test]
    fn curve_self_consistency() {
        let k = kernel(
            RiskAversionDistribution::finite_discrete(vec![(1.0, 0.9), (3.0, 0.1)]).unwrap(),
        );
        let m = market_fig1();
        let c = solve_unique(&k, &m, 2000).unwrap();
        // v decreasing to 0
        assert!(c.v.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*c.v.last().unwrap(), 0.0);
        // fixed point a = h(v) lambda
        for i in 0..c.len() {
            let h = k.h(c.v[i]).unwrap();
            assert!((c.a[i][0] - h * 0.4).abs() <= 1e-8);
        }
        // v increments match the trapezoid of |a|^2
        for w in 0..c.len() - 1 {
            let dt = c.t[w + 1] - c.t[w];
            let quad = 0.5 * (c.a[w].norm_squared() + c.a[w + 1].norm_squared()) * dt;
            let diff = c.v[w] - c.v[w + 1];
            assert!((quad - diff).abs() <= 1e-5 * diff.max(1e-12) + 1e-9);
        }
        // y decreasing to 0, J0 from both closed forms
        assert_eq!(*c.y.last().unwrap(), 0.0);
        for i in 0..c.len() {
            let alt = (c.y[i] + k.dist().log_laplace(c.v[i] / 2.0)).exp();
            assert!((c.j0[i] - alt).abs() <= 1e-8 * c.j0[i]);
        }
    }

    #[test]
    fn stable_family_member_matches_power_formula() {
        let alpha: f64 = 0.8;
        let k = kernel(RiskAversionDistribution::positive_stable(alpha).unwrap());
        let m = MarketModel::constant(1.0, 1.0, 1.0).unwrap();
        for &t0 in &[0.25, 0.5, 1.0] {
            let c = solve_family_member(&k, &m, t0, 500).unwrap();
            for i in 0..c.len() {
                let t = c.t[i];
                let expected = if t >= t0 {
                    0.0
                } else {
                    (2.0f64.powf(2.0 * alpha - 2.0) * (2.0 * alpha - 1.0) * (t0 - t)
                        / (alpha * alpha))
                        .powf(1.0 / (2.0 * alpha - 1.0))
                };
                assert!(
                    (c.v[i] - expected).abs() <= 1e-8 * expected.max(1.0),
                    "t0 = {t0}, t = {t}: {} vs {expected}",
                    c.v[i]
                );
            }
        }
    }

    #[test]
    fn family_objective_increasing_in_t0() {
        let k = kernel(RiskAversionDistribution::positive_stable(0.8).unwrap());
        let m = MarketModel::constant(1.0, 1.0, 1.0).unwrap();
        let j_at_zero: Vec<f64> = [0.25, 0.5, 1.0]
            .iter()
            .map(|&t0| solve_family_member(&k, &m, t0, 500).unwrap().j0[0])
            .collect();
        assert!(j_at_zero[0] < j_at_zero[1] && j_at_zero[1] < j_at_zero[2]);
    }

    #[test]
    fn family_ordering_in_t0() {
        let k = kernel(RiskAversionDistribution::positive_stable(0.8).unwrap());
        let m = MarketModel::constant(1.0, 1.0, 1.0).unwrap();
        let c1 = solve_family_member(&k, &m, 0.4, 400).unwrap();
        let c2 = solve_family_member(&k, &m, 0.9, 400).unwrap();
        for i in 0..c1.len().min(c2.len()) {
            let (t1, t2) = (c1.t[i], c2.t[i]);
            if t1 == t2 && t1 < 0.9 {
                assert!(c1.v_at(t1) < c2.v_at(t1) + 1e-12);
            }
        }
    }

    #[test]
    fn optimal_selection_stable() {
        let k = kernel(RiskAversionDistribution::positive_stable(0.8).unwrap());
        let m = MarketModel::constant(1.0, 1.0, 1.0).unwrap();
        match optimal_equilibrium(&k, &m, 400).unwrap() {
            OptimalOutcome::Optimal {
                t0,
                uniformly_optimal,
                uniformly_strictly_optimal,
                ..
            } => {
                assert_relative_eq!(t0, 1.0);
                assert!(uniformly_optimal);
                assert!(uniformly_strictly_optimal);
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn optimal_not_strict_with_flat_tail() {
        // lambda = 1 on [0,1), 0 on [1,2]: phi(0) = 1 < T
        let m = MarketModel::piecewise(
            vec![0.0, 1.0],
            vec![
                nalgebra::DVector::from_vec(vec![1.0]),
                nalgebra::DVector::from_vec(vec![0.0]),
            ],
            vec![nalgebra::DMatrix::from_vec(1, 1, vec![1.0]); 2],
            2.0,
        )
        .unwrap();
        let k = kernel(RiskAversionDistribution::positive_stable(0.8).unwrap());
        match optimal_equilibrium(&k, &m, 400).unwrap() {
            OptimalOutcome::Optimal {
                t0,
                uniformly_strictly_optimal,
                ..
            } => {
                assert_relative_eq!(t0, 1.0);
                assert!(!uniformly_strictly_optimal);
            }
            other => panic!("expected optimal, got {other:?}"),
        }
        // any T0 in the flat tail other than its start is not a member
        assert!(matches!(
            solve_family_member(&k, &m, 1.5, 100),
            Err(EqportError::Membership { .. })
        ));
    }

    #[test]
    fn objective_log_investor() {
        let k = kernel(RiskAversionDistribution::point_mass(1.0).unwrap());
        let m = market_fig1();
        let c = solve_unique(&k, &m, 500).unwrap();
        let opp = m.opportunity();
        for i in 0..c.len() {
            let expected = (opp.at(c.t[i]).unwrap() / 2.0).exp();
            assert_relative_eq!(c.j0[i], expected, max_relative = 1e-12);
        }
        let j = objective_at(&k, &c, 0.0).unwrap();
        assert_relative_eq!(j, 1.6f64.exp(), max_relative = 1e-12);
    }

    #[test]
    fn fig1_objective_frozen() {
        let k = kernel(
            RiskAversionDistribution::finite_discrete(vec![(1.0, 0.9), (3.0, 0.1)]).unwrap(),
        );
        let m = market_fig1();
        let c = solve_unique(&k, &m, 2000).unwrap();
        assert_relative_eq!(c.v[0], 2.7845626017518548, max_relative = 1e-9);
        assert_relative_eq!(c.j0[0], 4.440661994154944, max_relative = 1e-8);
        assert_relative_eq!(c.a[0][0], 0.39462129198945006, max_relative = 1e-9);
    }

    #[test]
    fn asymptotics_match_predictions() {
        let k = kernel(
            RiskAversionDistribution::finite_discrete(vec![(1.0, 0.9), (3.0, 0.1)]).unwrap(),
        );
        let up: Vec<f64> = (0..9).map(|i| 2.0f64.powi(i)).collect();
        let rep = exposure_asymptotics(&k, 0.4, &up).unwrap();
        assert!(rep.monotone_increasing);
        assert_relative_eq!(rep.predicted_limit.unwrap(), 0.4);
        assert!((rep.empirical_limit - 0.4).abs() < 0.02);

        let g = kernel(RiskAversionDistribution::gamma(2.0, 0.5).unwrap());
        let down: Vec<f64> = (0..12).map(|i| 2.0f64.powi(-i)).collect();
        let rep = exposure_asymptotics(&g, 0.4, &down).unwrap();
        assert!(rep.monotone_decreasing);
        assert_relative_eq!(rep.predicted_limit.unwrap(), 0.4);
        assert!((rep.empirical_limit - 0.4).abs() < 1e-3);

        let s = kernel(RiskAversionDistribution::positive_stable(0.8).unwrap());
        let rep = exposure_asymptotics(&s, 0.4, &down).unwrap();
        assert!(rep.monotone_decreasing);
        assert_eq!(rep.predicted_limit.unwrap(), 0.0);
        assert!(rep.empirical_limit < 0.05);
    }

    #[test]
    fn quantile_discretizations_converge() {
        let base = RiskAversionDistribution::gamma(2.0, 0.5).unwrap();
        let m = MarketModel::constant(0.2, 0.2, 5.0).unwrap();
        let dists: Vec<_> = [4, 8, 16, 32]
            .iter()
            .map(|&n| base.quantile_discretization(n).unwrap())
            .collect();
        let sup =
            kernel_sequence_convergence(&dists, &base, &m, 500, &Tolerances::default()).unwrap();
        assert!(sup.windows(2).all(|w| w[1] < w[0]), "{sup:?}");
        assert!(sup[3] < 1e-3, "{sup:?}");
    }

    #[test]
    fn identical_sequence_sup_is_zero() {
        let base = RiskAversionDistribution::poisson(2.0).unwrap();
        let m = market_fig1();
        let sup = kernel_sequence_convergence(
            &[base.clone(), base.clone()],
            &base,
            &m,
            200,
            &Tolerances::default(),
        )
        .unwrap();
        assert!(sup.iter().all(|&s| s == 0.0));
    }
}
