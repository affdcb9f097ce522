//! The preference kernel `h`, its reciprocal-square integral `H`, the
//! inverse `H^{-1}`, the objective exponent `L(z) = int_0^z 1/h + log l(z/2)`,
//! and regime classification of `H` at 0 and at infinity.
//!
//! Closed-form families (point mass, Poisson, Gamma, positive stable, and
//! sample means of those) evaluate analytically; everything else goes
//! through the transform route `h(x) = l(x/2) / E[R e^{-R x/2}]` with a
//! tabulated `H`.

use serde::Serialize;

use crate::config::Tolerances;
use crate::error::{EqportError, Result};
use crate::numeric::{integrate, newton_bisect};
use crate::riskdist::{Kind, RiskAversionDistribution};

/// Upper end of the singular first chunk of the H table.
const Y_SING: f64 = 1e-3;
/// Default upper end of the H table; queries beyond it integrate live.
const Y_TABLE_TOP: f64 = 64.0;

/// Classification of `H(infinity)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum HInfinity {
    Finite(f64),
    Infinite,
    /// The numeric probe reached `y_max` without a conclusive tail fit;
    /// carries the accumulated lower bound.
    Unresolved { lower_bound: f64 },
}

impl HInfinity {
    /// Is `H(infinity) > z`? `None` when unresolved and the bound does not
    /// already settle it.
    pub fn exceeds(&self, z: f64) -> Option<bool> {
        match *self {
            HInfinity::Finite(v) => Some(v > z),
            HInfinity::Infinite => Some(true),
            HInfinity::Unresolved { lower_bound } => {
                if lower_bound > z {
                    Some(true)
                } else {
                    None
                }
            }
        }
    }
}

/// Behaviour of `1/h^2` at the lower endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum HZeroRegime {
    /// `h(0) > 0` (finite mean): no singularity.
    Regular,
    /// `h(0) = 0` but `H(eps) < infinity`: the T0-indexed family regime.
    IntegrableSingularity { exponent: f64, fit_residual: f64 },
    /// `h(0) = 0` and `H(eps) = infinity`: only the trivial equilibrium.
    NonIntegrableSingularity { exponent: f64, fit_residual: f64 },
}

impl HZeroRegime {
    pub fn is_integrable(&self) -> bool {
        !matches!(self, HZeroRegime::NonIntegrableSingularity { .. })
    }

    /// Local exponent `p` in `h(x) ~ c x^p` near zero (0 for Regular).
    pub fn exponent(&self) -> f64 {
        match *self {
            HZeroRegime::Regular => 0.0,
            HZeroRegime::IntegrableSingularity { exponent, .. }
            | HZeroRegime::NonIntegrableSingularity { exponent, .. } => exponent,
        }
    }
}

#[derive(Debug, Clone)]
enum HForm {
    PointMass { gamma: f64 },
    Poisson { theta: f64 },
    Gamma { shape: f64, scale: f64 },
    Stable { index: f64 },
    /// `h(x) = inner.h(x / n)`; covers sample means of any base law.
    Scaled { inner: Box<PreferenceKernel>, n: f64 },
    Transform,
}

/// Monotone table of `H` on an adaptive knot set; evaluation integrates
/// locally from the nearest knot below, so table error never accumulates.
#[derive(Debug, Clone)]
struct HTable {
    knots: Vec<f64>,
    values: Vec<f64>,
}

/// Immutable bundle of everything derived from one risk-aversion law.
#[derive(Debug, Clone)]
pub struct PreferenceKernel {
    dist: RiskAversionDistribution,
    tol: Tolerances,
    form: HForm,
    h_zero: HZeroRegime,
    h_infinity: HInfinity,
    table: Option<HTable>,
}

impl PreferenceKernel {
    pub fn new(dist: RiskAversionDistribution, tol: Tolerances) -> Result<Self> {
        let form = match dist.kind() {
            Kind::PointMass { gamma } => HForm::PointMass { gamma: *gamma },
            Kind::Poisson { rate } => HForm::Poisson { theta: *rate },
            Kind::Gamma { shape, scale } => HForm::Gamma {
                shape: *shape,
                scale: *scale,
            },
            Kind::PositiveStable { index } => HForm::Stable { index: *index },
            Kind::SampleMean { base, n } => HForm::Scaled {
                inner: Box::new(Self::new((**base).clone(), tol.clone())?),
                n: *n as f64,
            },
            Kind::FiniteDiscrete { .. } | Kind::Mix { .. } => HForm::Transform,
        };
        let mut kernel = Self {
            h_zero: HZeroRegime::Regular,
            h_infinity: HInfinity::Infinite,
            table: None,
            dist,
            tol,
            form,
        };
        kernel.h_zero = kernel.classify_h_zero();
        if matches!(kernel.form, HForm::Transform) && kernel.h_zero.is_integrable() {
            kernel.table = Some(kernel.build_table());
        }
        kernel.h_infinity = kernel.classify_h_infinity();
        Ok(kernel)
    }

    pub fn dist(&self) -> &RiskAversionDistribution {
        &self.dist
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn h_infinity(&self) -> HInfinity {
        self.h_infinity
    }

    pub fn h_zero_regime(&self) -> HZeroRegime {
        self.h_zero
    }

    /// The kernel `h(x)`.
    pub fn h(&self, x: f64) -> Result<f64> {
        check_nonneg(x, "h")?;
        Ok(match &self.form {
            HForm::PointMass { gamma } => 1.0 / gamma,
            HForm::Poisson { theta } => (x / 2.0).exp() / theta,
            HForm::Gamma { shape, scale } => (1.0 + scale * x / 2.0) / (shape * scale),
            HForm::Stable { index } => (x / 2.0).powf(1.0 - index) / index,
            HForm::Scaled { inner, n } => inner.h(x / n)?,
            HForm::Transform => self.h_transform(x),
        })
    }

    /// Generic ratio route, exposed for closed-vs-transform agreement checks.
    pub fn h_transform(&self, x: f64) -> f64 {
        let r = self.dist.wm_ratio(x / 2.0);
        if r.is_infinite() {
            0.0
        } else {
            1.0 / r
        }
    }

    /// `H(y) = int_0^y 1/h(x)^2 dx`; `+inf` under a non-integrable
    /// singularity.
    pub fn big_h(&self, y: f64) -> Result<f64> {
        check_nonneg(y, "H")?;
        if y == 0.0 {
            return Ok(0.0);
        }
        Ok(match &self.form {
            HForm::PointMass { gamma } => gamma * gamma * y,
            HForm::Poisson { theta } => theta * theta * (1.0 - (-y).exp()),
            HForm::Gamma { shape, scale } => {
                2.0 * shape * shape * scale * (1.0 - 1.0 / (1.0 + scale * y / 2.0))
            }
            HForm::Stable { index } => {
                let a = *index;
                if a > 0.5 {
                    a * a * 2.0f64.powf(2.0 - 2.0 * a) * y.powf(2.0 * a - 1.0) / (2.0 * a - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            HForm::Scaled { inner, n } => n * inner.big_h(y / n)?,
            HForm::Transform => {
                if !self.h_zero.is_integrable() {
                    f64::INFINITY
                } else {
                    self.big_h_tabulated(y)
                }
            }
        })
    }

    /// `H^{-1}(z)`, the equilibrium dispersion at remaining opportunity `z`.
    pub fn big_h_inverse(&self, z: f64) -> Result<f64> {
        check_nonneg(z, "H inverse")?;
        if z == 0.0 {
            return Ok(0.0);
        }
        match self.h_infinity.exceeds(z) {
            Some(true) => {}
            Some(false) => {
                let h_infinity = match self.h_infinity {
                    HInfinity::Finite(v) => v,
                    _ => unreachable!(),
                };
                return Err(EqportError::NoSolution {
                    h_infinity,
                    level: z,
                });
            }
            None => {
                return Err(EqportError::NonConvergence(format!(
                    "H(inf) unresolved at level {z}: existence undetermined"
                )))
            }
        }
        match &self.form {
            HForm::PointMass { gamma } => Ok(z / (gamma * gamma)),
            HForm::Poisson { theta } => Ok(-(1.0 - z / (theta * theta)).ln()),
            HForm::Gamma { shape, scale } => {
                let cap = 2.0 * shape * shape * scale;
                Ok((2.0 / scale) * (1.0 / (1.0 - z / cap) - 1.0))
            }
            HForm::Stable { index } => {
                let a = *index;
                Ok((z * (2.0 * a - 1.0) / (a * a * 2.0f64.powf(2.0 - 2.0 * a)))
                    .powf(1.0 / (2.0 * a - 1.0)))
            }
            HForm::Scaled { inner, n } => Ok(n * inner.big_h_inverse(z / n)?),
            HForm::Transform => self.invert_tabulated(z),
        }
    }

    /// The objective exponent `L(z)`; `J0 = exp(L(v))`.
    pub fn script_l(&self, z: f64) -> Result<f64> {
        check_nonneg(z, "L")?;
        if z == 0.0 {
            return Ok(0.0);
        }
        Ok(match &self.form {
            HForm::PointMass { gamma } => gamma * z / 2.0,
            HForm::Poisson { theta } => theta * (1.0 - (-z / 2.0).exp()),
            HForm::Gamma { shape, scale } => shape * (1.0 + scale * z / 2.0).ln(),
            HForm::Stable { index } => (z / 2.0).powf(*index),
            HForm::Scaled { inner, n } => n * inner.script_l(z / n)?,
            HForm::Transform => {
                let recip_h = |y: f64| self.dist.wm_ratio(y / 2.0);
                let p = self.h_zero.exponent();
                let integral = if p > 0.0 {
                    // 1/h ~ c y^{-p} with p < 1: substitute y = u^m
                    let m = 1.0 / (1.0 - p);
                    let cut = z.min(Y_SING);
                    let head = integrate(
                        &|u: f64| recip_h(u.powf(m)) * m * u.powf(m - 1.0),
                        0.0,
                        cut.powf(1.0 - p),
                        self.tol.quad_rel,
                        self.tol.quad_abs_floor,
                    );
                    head + integrate(
                        &recip_h,
                        cut,
                        z.max(cut),
                        self.tol.quad_rel,
                        self.tol.quad_abs_floor,
                    )
                } else {
                    integrate(&recip_h, 0.0, z, self.tol.quad_rel, self.tol.quad_abs_floor)
                };
                integral + self.dist.log_laplace(z / 2.0)
            }
        })
    }

    /// Integrand of `H`.
    fn g(&self, y: f64) -> f64 {
        let r = self.dist.wm_ratio(y / 2.0);
        r * r
    }

    fn classify_h_zero(&self) -> HZeroRegime {
        if self.dist.mean().is_finite() {
            return HZeroRegime::Regular;
        }
        match &self.form {
            HForm::Stable { index } => {
                let exponent = 1.0 - index;
                if *index > 0.5 {
                    HZeroRegime::IntegrableSingularity {
                        exponent,
                        fit_residual: 0.0,
                    }
                } else {
                    HZeroRegime::NonIntegrableSingularity {
                        exponent,
                        fit_residual: 0.0,
                    }
                }
            }
            HForm::Scaled { inner, .. } => inner.h_zero,
            _ => {
                // local exponent fit h(x) ~ c x^p over [1e-8, 1e-4]
                let (x0, x1) = (1e-8, 1e-4);
                let (l0, l1) = (self.h_transform(x0).ln(), self.h_transform(x1).ln());
                let exponent = (l1 - l0) / (x1.ln() - x0.ln());
                let mid = self.h_transform(1e-6).ln();
                let fit_residual = (mid - 0.5 * (l0 + l1)).abs();
                if exponent < 0.5 {
                    HZeroRegime::IntegrableSingularity {
                        exponent,
                        fit_residual,
                    }
                } else {
                    HZeroRegime::NonIntegrableSingularity {
                        exponent,
                        fit_residual,
                    }
                }
            }
        }
    }

    fn classify_h_infinity(&self) -> HInfinity {
        match &self.form {
            HForm::PointMass { .. } => HInfinity::Infinite,
            HForm::Poisson { theta } => HInfinity::Finite(theta * theta),
            HForm::Gamma { shape, scale } => HInfinity::Finite(2.0 * shape * shape * scale),
            HForm::Stable { .. } => HInfinity::Infinite,
            HForm::Scaled { inner, n } => match inner.h_infinity {
                HInfinity::Finite(v) => HInfinity::Finite(n * v),
                HInfinity::Infinite => HInfinity::Infinite,
                HInfinity::Unresolved { lower_bound } => HInfinity::Unresolved {
                    lower_bound: n * lower_bound,
                },
            },
            HForm::Transform => {
                if !self.h_zero.is_integrable() {
                    // H(y) is already infinite for every y > 0
                    return HInfinity::Infinite;
                }
                if self.dist.essinf() > 0.0 {
                    // integrand tends to essinf^2 > 0
                    return HInfinity::Infinite;
                }
                self.probe_h_infinity()
            }
        }
    }

    /// Numeric tail probe: accumulate `H(y_max)` in geometric segments,
    /// then fit a log-log tail slope.
    fn probe_h_infinity(&self) -> HInfinity {
        let y_max = self.tol.y_max;
        let mut total = self.big_h_tabulated(Y_TABLE_TOP.min(y_max));
        let mut lo = Y_TABLE_TOP.min(y_max);
        while lo < y_max {
            let hi = (lo * 2.0).min(y_max);
            total += integrate(
                &|y| self.g(y),
                lo,
                hi,
                self.tol.quad_rel,
                self.tol.quad_abs_floor,
            );
            lo = hi;
        }
        let g3 = self.g(y_max);
        if g3 < 1e-280 {
            // tail already dead (exponential decay)
            return HInfinity::Finite(total);
        }
        let g1 = self.g(y_max / 4.0);
        let g2 = self.g(y_max / 2.0);
        let s12 = (g2 / g1).ln() / 2f64.ln();
        let s23 = (g3 / g2).ln() / 2f64.ln();
        if (s12 - s23).abs() > 0.05 {
            return HInfinity::Unresolved { lower_bound: total };
        }
        let q = s23;
        if q < -1.05 {
            // power tail c y^q with q < -1: add the analytic remainder
            HInfinity::Finite(total + g3 * y_max / (-q - 1.0))
        } else if q > -0.95 {
            HInfinity::Infinite
        } else {
            HInfinity::Unresolved { lower_bound: total }
        }
    }

    /// Singular head `int_0^y g` via the substitution `x = u^m`,
    /// `m = 1/(1 - 2p)`, which flattens the `x^{-2p}` endpoint.
    fn singular_head(&self, y: f64) -> f64 {
        let p = self.h_zero.exponent();
        if p <= 0.0 {
            return integrate(&|x| self.g(x), 0.0, y, self.tol.quad_rel, self.tol.quad_abs_floor);
        }
        let m = 1.0 / (1.0 - 2.0 * p);
        integrate(
            &|u: f64| self.g(u.powf(m)) * m * u.powf(m - 1.0),
            0.0,
            y.powf(1.0 - 2.0 * p),
            self.tol.quad_rel,
            self.tol.quad_abs_floor,
        )
    }

    fn build_table(&self) -> HTable {
        let singular = self.h_zero.exponent() > 0.0;
        let start = if singular { Y_SING } else { 0.0 };
        // collect accepted subintervals of the adaptive pass
        let mut pieces: Vec<(f64, f64, f64)> = Vec::new();
        let span = Y_TABLE_TOP - start;
        let mut stack = vec![(start, Y_TABLE_TOP, 0u32)];
        while let Some((lo, hi, depth)) = stack.pop() {
            let (est, err) = gk15_pair(&|y| self.g(y), lo, hi);
            let budget = self.tol.quad_rel * est.abs().max(1.0) * (hi - lo) / span;
            if err <= budget.max(self.tol.quad_abs_floor) || depth >= 40 {
                pieces.push((lo, hi, est));
            } else {
                let mid = 0.5 * (lo + hi);
                stack.push((lo, mid, depth + 1));
                stack.push((mid, hi, depth + 1));
            }
        }
        pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut knots = vec![0.0];
        let mut values = vec![0.0];
        let mut acc = 0.0;
        if singular {
            acc = self.singular_head(Y_SING);
            knots.push(Y_SING);
            values.push(acc);
        }
        for (_, hi, est) in pieces {
            acc += est;
            knots.push(hi);
            values.push(acc);
        }
        HTable { knots, values }
    }

    /// `H(y)` via the table: value at the nearest knot below plus a short
    /// local quadrature.
    fn big_h_tabulated(&self, y: f64) -> f64 {
        let table = self.table.as_ref().expect("transform kernel has a table");
        let singular = self.h_zero.exponent() > 0.0;
        if singular && y <= Y_SING {
            return self.singular_head(y);
        }
        let idx = table
            .knots
            .partition_point(|&k| k <= y)
            .saturating_sub(1)
            .min(table.knots.len() - 1);
        let (k, v) = (table.knots[idx], table.values[idx]);
        if k == y {
            return v;
        }
        if y <= *table.knots.last().unwrap() {
            return v + integrate(&|x| self.g(x), k, y, self.tol.quad_rel, self.tol.quad_abs_floor);
        }
        // beyond the table: geometric segments keep long decaying tails
        // honest
        let mut acc = *table.values.last().unwrap();
        let mut lo = *table.knots.last().unwrap();
        while lo < y {
            let hi = (lo * 2.0).min(y);
            acc += integrate(&|x| self.g(x), lo, hi, self.tol.quad_rel, self.tol.quad_abs_floor);
            lo = hi;
        }
        acc
    }

    fn invert_tabulated(&self, z: f64) -> Result<f64> {
        let table = self.table.as_ref().expect("transform kernel has a table");
        // bracket by the table first
        let idx = table.values.partition_point(|&v| v < z);
        let (mut lo, mut hi);
        if idx < table.values.len() {
            lo = if idx == 0 { 0.0 } else { table.knots[idx - 1] };
            hi = table.knots[idx];
        } else {
            lo = *table.knots.last().unwrap();
            hi = lo.max(1.0);
            let mut steps = 0;
            while self.big_h_tabulated(hi) < z {
                lo = hi;
                hi *= 2.0;
                steps += 1;
                if steps > 80 {
                    return Err(EqportError::NonConvergence(format!(
                        "H inversion bracket search exhausted at level {z}"
                    )));
                }
            }
        }
        let f_tol = self.tol.inv_rel * z.max(1.0);
        let f = |y: f64| self.big_h_tabulated(y) - z;
        let df = |y: f64| self.g(y);
        newton_bisect(&f, &df, lo, hi, f_tol, 1e-14 * hi.max(1.0))
    }
}

/// One Gauss-Kronrod panel with error estimate (shared with the table
/// builder).
fn gk15_pair<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> (f64, f64) {
    // delegate to the adaptive integrator's building block by integrating
    // non-adaptively: a single fixed panel
    let est = integrate(f, lo, hi, f64::INFINITY, f64::INFINITY);
    // error proxy: compare against two half-panels
    let mid = 0.5 * (lo + hi);
    let refined = integrate(f, lo, mid, f64::INFINITY, f64::INFINITY)
        + integrate(f, mid, hi, f64::INFINITY, f64::INFINITY);
    (refined, (refined - est).abs())
}

fn check_nonneg(x: f64, what: &str) -> Result<()> {
    if x < 0.0 || x.is_nan() {
        return Err(EqportError::Domain(format!(
            "{what} argument must be nonnegative, got {x}"
        )));
    }
    Ok(())
}
