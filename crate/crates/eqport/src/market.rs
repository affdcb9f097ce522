//! Deterministic market model with piecewise-constant coefficients and the
//! accumulated-opportunity curve.
//!
//! Piecewise-constant `lambda` makes the opportunity integral exact
//! piecewise-linear arithmetic, so no quadrature error enters from the
//! market side.

use nalgebra::{DMatrix, DVector};

use crate::error::{EqportError, Result};

const MAX_SIGMA_COND: f64 = 1e12;

#[derive(Debug, Clone)]
struct Segment {
    t_start: f64,
    lambda: DVector<f64>,
    sigma: DMatrix<f64>,
}

/// Market on `[0, T]`: right-continuous piecewise-constant price of risk
/// `lambda(t)` and volatility matrix `sigma(t)`.
#[derive(Debug, Clone)]
pub struct MarketModel {
    dim: usize,
    horizon: f64,
    segments: Vec<Segment>,
}

/// Exact piecewise-linear representation of the remaining opportunity
/// `Lambda(t) = int_t^T |lambda(s)|^2 ds`.
#[derive(Debug, Clone)]
pub struct OpportunityCurve {
    /// Segment start times plus the horizon.
    breakpoints: Vec<f64>,
    /// Lambda evaluated at each breakpoint; last entry is 0.
    values: Vec<f64>,
    /// |lambda|^2 on each segment.
    rates: Vec<f64>,
}

impl MarketModel {
    /// Single-asset market with constant coefficients.
    pub fn constant(lambda: f64, sigma: f64, horizon: f64) -> Result<Self> {
        Self::piecewise(
            vec![0.0],
            vec![DVector::from_vec(vec![lambda])],
            vec![DMatrix::from_vec(1, 1, vec![sigma])],
            horizon,
        )
    }

    /// General piecewise-constant market. `t_starts` must begin at 0 and be
    /// strictly increasing; segment `i` covers `[t_starts[i], t_starts[i+1])`.
    pub fn piecewise(
        t_starts: Vec<f64>,
        lambdas: Vec<DVector<f64>>,
        sigmas: Vec<DMatrix<f64>>,
        horizon: f64,
    ) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(EqportError::InvalidMarket(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if t_starts.is_empty() || t_starts.len() != lambdas.len() || t_starts.len() != sigmas.len()
        {
            return Err(EqportError::InvalidMarket(
                "breakpoints, lambdas and sigmas must have equal nonzero length".into(),
            ));
        }
        if t_starts[0] != 0.0 {
            return Err(EqportError::InvalidMarket(
                "first breakpoint must be t = 0".into(),
            ));
        }
        if t_starts.windows(2).any(|w| w[1] <= w[0]) || *t_starts.last().unwrap() >= horizon {
            return Err(EqportError::InvalidMarket(
                "breakpoints must be strictly increasing and below the horizon".into(),
            ));
        }
        let dim = lambdas[0].len();
        if dim == 0 {
            return Err(EqportError::InvalidMarket("dimension must be >= 1".into()));
        }
        let mut segments = Vec::with_capacity(t_starts.len());
        for ((t_start, lambda), sigma) in t_starts.into_iter().zip(lambdas).zip(sigmas) {
            if lambda.len() != dim || sigma.nrows() != dim || sigma.ncols() != dim {
                return Err(EqportError::InvalidMarket(format!(
                    "inconsistent dimensions in segment starting at t = {t_start}"
                )));
            }
            let sv = sigma.clone().singular_values();
            let (smax, smin) = (sv.max(), sv.min());
            if smin <= 0.0 || smax / smin > MAX_SIGMA_COND {
                return Err(EqportError::InvalidMarket(format!(
                    "sigma at t = {t_start} is singular or ill-conditioned (cond = {:.3e})",
                    if smin > 0.0 { smax / smin } else { f64::INFINITY }
                )));
            }
            segments.push(Segment {
                t_start,
                lambda,
                sigma,
            });
        }
        let market = Self {
            dim,
            horizon,
            segments,
        };
        if market.opportunity().initial() <= 0.0 {
            return Err(EqportError::InvalidMarket(
                "total opportunity Lambda(0) is zero: lambda vanishes a.e., so the \
                 unique equilibrium is the trivial strategy pi = 0"
                    .into(),
            ));
        }
        Ok(market)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    fn segment_at(&self, t: f64) -> &Segment {
        let idx = self
            .segments
            .partition_point(|s| s.t_start <= t)
            .saturating_sub(1);
        &self.segments[idx]
    }

    /// Price of risk `lambda(t)` (right-continuous).
    pub fn lambda(&self, t: f64) -> Result<&DVector<f64>> {
        self.check_time(t)?;
        Ok(&self.segment_at(t).lambda)
    }

    pub fn sigma(&self, t: f64) -> Result<&DMatrix<f64>> {
        self.check_time(t)?;
        Ok(&self.segment_at(t).sigma)
    }

    /// Drift `mu(t) = sigma(t) lambda(t)` (interest rate fixed at zero).
    pub fn mu(&self, t: f64) -> Result<DVector<f64>> {
        let seg = self.segment_at(t);
        self.check_time(t)?;
        Ok(&seg.sigma * &seg.lambda)
    }

    /// Remaining opportunity curve.
    pub fn opportunity(&self) -> OpportunityCurve {
        let mut breakpoints: Vec<f64> = self.segments.iter().map(|s| s.t_start).collect();
        breakpoints.push(self.horizon);
        let rates: Vec<f64> = self.segments.iter().map(|s| s.lambda.norm_squared()).collect();
        let mut values = vec![0.0; breakpoints.len()];
        for i in (0..rates.len()).rev() {
            values[i] = values[i + 1] + rates[i] * (breakpoints[i + 1] - breakpoints[i]);
        }
        OpportunityCurve {
            breakpoints,
            values,
            rates,
        }
    }

    /// Solves `sigma(t)^T pi = a` for the portfolio weights by LU with
    /// partial pivoting.
    pub fn portfolio_from_exposure(&self, t: f64, a: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_time(t)?;
        let seg = self.segment_at(t);
        let lu = seg.sigma.transpose().lu();
        let pi = lu.solve(a).ok_or_else(|| {
            EqportError::InvalidMarket(format!("singular sigma at t = {t}"))
        })?;
        let residual = (seg.sigma.transpose() * &pi - a).norm();
        if residual > 1e-10 * a.norm().max(1.0) {
            return Err(EqportError::NonConvergence(format!(
                "portfolio solve residual {residual:.3e} at t = {t}"
            )));
        }
        Ok(pi)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t < 0.0 || t > self.horizon || t.is_nan() {
            return Err(EqportError::Domain(format!(
                "time {t} outside [0, {}]",
                self.horizon
            )));
        }
        Ok(())
    }

    /// Breakpoint times including the horizon.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.segments.iter().map(|s| s.t_start).collect();
        b.push(self.horizon);
        b
    }
}

impl OpportunityCurve {
    /// `Lambda(0)`, the total market opportunity.
    pub fn initial(&self) -> f64 {
        self.values[0]
    }

    /// Exact evaluation of `Lambda(t)`.
    pub fn at(&self, t: f64) -> Result<f64> {
        let horizon = *self.breakpoints.last().unwrap();
        if t < 0.0 || t > horizon || t.is_nan() {
            return Err(EqportError::Domain(format!(
                "time {t} outside [0, {horizon}]"
            )));
        }
        let idx = self
            .breakpoints
            .partition_point(|&b| b <= t)
            .saturating_sub(1)
            .min(self.rates.len() - 1);
        Ok(self.values[idx] - self.rates[idx] * (t - self.breakpoints[idx]))
    }

    /// Generalized inverse `phi(eta) = min { t : Lambda(t) = eta }`.
    ///
    /// On flat segments where `Lambda = eta` the left endpoint is returned.
    pub fn phi(&self, eta: f64) -> Result<f64> {
        if eta < 0.0 || eta > self.initial() || eta.is_nan() {
            return Err(EqportError::Domain(format!(
                "level {eta} outside [0, {}]",
                self.initial()
            )));
        }
        for i in 0..self.rates.len() {
            let (v0, v1) = (self.values[i], self.values[i + 1]);
            if eta <= v0 && eta >= v1 {
                return Ok(if self.rates[i] > 0.0 {
                    self.breakpoints[i] + (v0 - eta) / self.rates[i]
                } else {
                    // flat segment at level eta: earliest time is its start
                    self.breakpoints[i]
                });
            }
        }
        Ok(*self.breakpoints.last().unwrap())
    }
}

impl std::str::FromStr for MarketModel {
    type Err = EqportError;

    /// Parses `const:lambda=0.4,sigma=0.2,T=20,d=1` (d optional, scalar
    /// coefficients replicated on the diagonal) or
    /// `piecewise:file=market.csv`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (family, body) = s.split_once(':').ok_or_else(|| EqportError::Parse {
            pos: 0,
            msg: format!("expected `family:params` in market spec `{s}`"),
        })?;
        match family {
            "const" => {
                let mut lambda = None;
                let mut sigma = None;
                let mut horizon = None;
                let mut dim = 1usize;
                for item in body.split(',') {
                    let (k, v) = item.split_once('=').ok_or_else(|| EqportError::Parse {
                        pos: 0,
                        msg: format!("expected key=value, got `{item}`"),
                    })?;
                    let v: f64 = v.trim().parse().map_err(|_| EqportError::Parse {
                        pos: 0,
                        msg: format!("invalid number `{}`", v.trim()),
                    })?;
                    match k.trim() {
                        "lambda" => lambda = Some(v),
                        "sigma" => sigma = Some(v),
                        "T" => horizon = Some(v),
                        "d" => dim = v as usize,
                        other => {
                            return Err(EqportError::Parse {
                                pos: 0,
                                msg: format!("unknown market key `{other}`"),
                            })
                        }
                    }
                }
                let (lambda, sigma, horizon) = match (lambda, sigma, horizon) {
                    (Some(l), Some(s), Some(t)) => (l, s, t),
                    _ => {
                        return Err(EqportError::Parse {
                            pos: 0,
                            msg: "const market requires lambda, sigma and T".into(),
                        })
                    }
                };
                Self::piecewise(
                    vec![0.0],
                    vec![DVector::from_element(dim, lambda)],
                    vec![DMatrix::from_diagonal_element(dim, dim, sigma)],
                    horizon,
                )
            }
            "piecewise" => {
                let path = body.strip_prefix("file=").ok_or_else(|| EqportError::Parse {
                    pos: 0,
                    msg: "piecewise market requires `file=<path>`".into(),
                })?;
                let text = std::fs::read_to_string(path).map_err(|e| {
                    EqportError::InvalidMarket(format!("cannot read `{path}`: {e}"))
                })?;
                Self::from_csv(&text)
            }
            other => Err(EqportError::Parse {
                pos: 0,
                msg: format!("unknown market family `{other}`"),
            }),
        }
    }
}

impl MarketModel {
    /// CSV with header `t_start,lambda_1..d,sigma_11..dd`; one row per
    /// segment, plus a final row giving the horizon in `t_start` with the
    /// remaining columns ignored-if-empty or repeated.
    ///
    /// The dimension is inferred from the column count:
    /// `1 + d + d^2` columns.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| EqportError::InvalidMarket("empty market CSV".into()))?;
        let ncols = header.split(',').count();
        // ncols = 1 + d + d*d
        let dim = (1..=64)
            .find(|d| 1 + d + d * d == ncols)
            .ok_or_else(|| EqportError::InvalidMarket(format!(
                "cannot infer dimension from {ncols} columns"
            )))?;
        let mut t_starts = Vec::new();
        let mut lambdas = Vec::new();
        let mut sigmas = Vec::new();
        let mut horizon = None;
        for (lineno, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let t: f64 = fields[0].parse().map_err(|_| EqportError::Parse {
                pos: lineno + 2,
                msg: format!("invalid t_start `{}`", fields[0]),
            })?;
            if fields.len() == 1 || fields[1..].iter().all(|f| f.is_empty()) {
                horizon = Some(t);
                continue;
            }
            if fields.len() != ncols {
                return Err(EqportError::Parse {
                    pos: lineno + 2,
                    msg: format!("expected {ncols} columns, got {}", fields.len()),
                });
            }
            let nums: Vec<f64> = fields[1..]
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| EqportError::Parse {
                    pos: lineno + 2,
                    msg: format!("invalid number: {e}"),
                })?;
            t_starts.push(t);
            lambdas.push(DVector::from_vec(nums[..dim].to_vec()));
            sigmas.push(DMatrix::from_row_slice(dim, dim, &nums[dim..]));
            horizon = Some(t); // provisional; overwritten by later rows
        }
        let horizon = horizon
            .ok_or_else(|| EqportError::InvalidMarket("market CSV has no rows".into()))?;
        Self::piecewise(t_starts, lambdas, sigmas, horizon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fig1_market() -> MarketModel {
        MarketModel::constant(0.4, 0.2, 20.0).unwrap()
    }

    #[test]
    fn constant_market_opportunity() {
        let opp = fig1_market().opportunity();
        assert_relative_eq!(opp.at(0.0).unwrap(), 3.2, max_relative = 1e-14);
        assert_eq!(opp.at(20.0).unwrap(), 0.0);
        assert_relative_eq!(opp.at(10.0).unwrap(), 1.6, max_relative = 1e-14);
        assert!(opp.at(-0.1).is_err());
        assert!(opp.at(20.1).is_err());
    }

    fn three_segment() -> MarketModel {
        // lambda = 1 on [0,1), 0 on [1,2), 1 on [2,3]
        MarketModel::piecewise(
            vec![0.0, 1.0, 2.0],
            vec![
                DVector::from_vec(vec![1.0]),
                DVector::from_vec(vec![0.0]),
                DVector::from_vec(vec![1.0]),
            ],
            vec![DMatrix::from_vec(1, 1, vec![0.2]); 3],
            3.0,
        )
        .unwrap()
    }

    #[test]
    fn piecewise_opportunity_and_phi() {
        let opp = three_segment().opportunity();
        assert_relative_eq!(opp.at(0.0).unwrap(), 2.0);
        assert_relative_eq!(opp.at(0.5).unwrap(), 1.5);
        assert_relative_eq!(opp.at(1.5).unwrap(), 1.0);
        // flat segment at level 1: earliest time is the segment start
        assert_relative_eq!(opp.phi(1.0).unwrap(), 1.0);
        assert_relative_eq!(opp.phi(2.0).unwrap(), 0.0);
        assert_relative_eq!(opp.phi(0.0).unwrap(), 3.0);
        assert_relative_eq!(opp.phi(0.5).unwrap(), 2.5);
    }

    #[test]
    fn phi_of_zero_with_flat_tail() {
        // lambda = 1 on [0,1), 0 on [1,2]
        let m = MarketModel::piecewise(
            vec![0.0, 1.0],
            vec![DVector::from_vec(vec![1.0]), DVector::from_vec(vec![0.0])],
            vec![DMatrix::from_vec(1, 1, vec![0.2]); 2],
            2.0,
        )
        .unwrap();
        assert_relative_eq!(m.opportunity().phi(0.0).unwrap(), 1.0);
    }

    #[test]
    fn phi_strictly_decreasing_market_hits_horizon() {
        let opp = fig1_market().opportunity();
        assert_relative_eq!(opp.phi(0.0).unwrap(), 20.0);
        // Lambda(phi(eta)) = eta
        for &eta in &[0.0, 0.3, 1.6, 3.2] {
            let t = opp.phi(eta).unwrap();
            assert_relative_eq!(opp.at(t).unwrap(), eta, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_opportunity_rejected() {
        let err = MarketModel::constant(0.0, 0.2, 5.0).unwrap_err();
        assert!(err.to_string().contains("trivial"));
    }

    #[test]
    fn singular_sigma_rejected() {
        let res = MarketModel::piecewise(
            vec![0.0],
            vec![DVector::from_vec(vec![0.4, 0.4])],
            vec![DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0])],
            1.0,
        );
        assert!(res.is_err());
    }

    #[test]
    fn portfolio_solve() {
        let m = fig1_market();
        let pi = m
            .portfolio_from_exposure(0.0, &DVector::from_vec(vec![0.5]))
            .unwrap();
        assert_relative_eq!(pi[0], 2.5, max_relative = 1e-13);

        // identity sigma returns the exposure unchanged
        let m = MarketModel::piecewise(
            vec![0.0],
            vec![DVector::from_vec(vec![0.1, 0.2, 0.3])],
            vec![DMatrix::identity(3, 3)],
            1.0,
        )
        .unwrap();
        let a = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let pi = m.portfolio_from_exposure(0.5, &a).unwrap();
        assert_relative_eq!((pi - &a).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn portfolio_solve_3x3_residual() {
        let sigma = DMatrix::from_row_slice(
            3,
            3,
            &[0.3, 0.05, 0.01, 0.02, 0.25, 0.04, 0.01, 0.03, 0.2],
        );
        let m = MarketModel::piecewise(
            vec![0.0],
            vec![DVector::from_vec(vec![0.4, 0.3, 0.2])],
            vec![sigma.clone()],
            1.0,
        )
        .unwrap();
        let a = DVector::from_vec(vec![0.7, -0.1, 0.4]);
        let pi = m.portfolio_from_exposure(0.0, &a).unwrap();
        assert!((sigma.transpose() * pi - a).norm() <= 1e-10);
    }

    #[test]
    fn parses_const_spec() {
        let m: MarketModel = "const:lambda=0.4,sigma=0.2,T=20,d=1".parse().unwrap();
        assert_relative_eq!(m.opportunity().initial(), 3.2, max_relative = 1e-14);
        assert!("const:lambda=0.4".parse::<MarketModel>().is_err());
    }

    #[test]
    fn parses_piecewise_csv() {
        let csv = "t_start,lambda_1,sigma_11\n0,1,0.2\n1,0,0.2\n2,1,0.2\n3,,\n";
        let m = MarketModel::from_csv(csv).unwrap();
        assert_eq!(m.horizon(), 3.0);
        assert_relative_eq!(m.opportunity().at(0.0).unwrap(), 2.0);
    }

    #[test]
    fn lambda_monotone_invariant() {
        let opp = three_segment().opportunity();
        let mut prev = f64::INFINITY;
        for i in 0..=300 {
            let t = 3.0 * i as f64 / 300.0;
            let v = opp.at(t).unwrap();
            assert!(v <= prev + 1e-14);
            prev = v;
        }
    }
}
