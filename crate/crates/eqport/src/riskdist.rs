//! The law of the random risk aversion `R`.
//!
//! Every downstream quantity is transform-level: the Laplace transform
//! `l(y) = E[exp(-R y)]`, the weighted moment `E[R exp(-R y)] = -l'(y)`,
//! and (for stochastic-order checks) the CDF. Only laws with closed-form
//! transforms are supported; empirical laws enter as `FiniteDiscrete`.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Discrete, DiscreteCDF};

use crate::error::{EqportError, Result};

const PROB_TOL: f64 = 1e-12;

/// Tri-state mean capability flag. Arithmetic never sees a float sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Mean {
    Finite(f64),
    Infinite,
}

impl Mean {
    pub fn is_finite(&self) -> bool {
        matches!(self, Mean::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Mean::Finite(m) => Some(*m),
            Mean::Infinite => None,
        }
    }
}

/// Verdict of a stochastic-order check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum OrderVerdict {
    Dominates,
    FailsAt(f64),
    Inapplicable(String),
}

impl OrderVerdict {
    pub fn dominates(&self) -> bool {
        matches!(self, OrderVerdict::Dominates)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    PointMass {
        gamma: f64,
    },
    /// Sorted atoms `(gamma_i, p_i)`.
    FiniteDiscrete {
        atoms: Vec<(f64, f64)>,
    },
    Gamma {
        shape: f64,
        scale: f64,
    },
    Poisson {
        rate: f64,
    },
    PositiveStable {
        index: f64,
    },
    /// Independent convex combination `R = sum w_i R_i`.
    Mix {
        parts: Vec<(f64, RiskAversionDistribution)>,
    },
    /// Sample mean of `n` i.i.d. copies of `base`.
    SampleMean {
        base: Box<RiskAversionDistribution>,
        n: u32,
    },
}

/// Distribution of the random risk aversion, with cached support metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskAversionDistribution {
    kind: Kind,
    mean: Mean,
    essinf: f64,
    mass_at_essinf: f64,
    support_gap: Option<f64>,
}

impl RiskAversionDistribution {
    pub fn point_mass(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(EqportError::InvalidDistribution(format!(
                "point mass requires gamma > 0, got {gamma}"
            )));
        }
        Ok(Self {
            kind: Kind::PointMass { gamma },
            mean: Mean::Finite(gamma),
            essinf: gamma,
            mass_at_essinf: 1.0,
            support_gap: None,
        })
    }

    pub fn finite_discrete(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(EqportError::InvalidDistribution("no atoms given".into()));
        }
        for &(g, p) in &atoms {
            if !(g >= 0.0) || !g.is_finite() {
                return Err(EqportError::InvalidDistribution(format!(
                    "atom {g} must be a finite nonnegative number"
                )));
            }
            if !(p > 0.0) || p > 1.0 {
                return Err(EqportError::InvalidDistribution(format!(
                    "probability {p} must lie in (0, 1]"
                )));
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        if atoms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(EqportError::InvalidDistribution(
                "duplicate atom values".into(),
            ));
        }
        let total: f64 = atoms.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(EqportError::InvalidDistribution(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        if atoms.last().unwrap().0 == 0.0 {
            return Err(EqportError::InvalidDistribution(
                "all mass at zero: P(R > 0) must be positive".into(),
            ));
        }
        let mean = atoms.iter().map(|&(g, p)| g * p).sum();
        let essinf = atoms[0].0;
        let mass_at_essinf = atoms[0].1;
        let support_gap = atoms.get(1).map(|&(g, _)| g - essinf);
        Ok(Self {
            kind: Kind::FiniteDiscrete { atoms },
            mean: Mean::Finite(mean),
            essinf,
            mass_at_essinf,
            support_gap,
        })
    }

    /// Two-point law with an atom of mass `p` at `r0` and `1 - p` at `r0 + gap`.
    pub fn two_point(r0: f64, gap: f64, p: f64) -> Result<Self> {
        if !(gap > 0.0) {
            return Err(EqportError::InvalidDistribution(format!(
                "two-point gap must be positive, got {gap}"
            )));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(EqportError::InvalidDistribution(format!(
                "two-point mass must lie in (0, 1), got {p}"
            )));
        }
        Self::finite_discrete(vec![(r0, p), (r0 + gap, 1.0 - p)])
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && scale > 0.0) {
            return Err(EqportError::InvalidDistribution(format!(
                "gamma requires shape > 0 and scale > 0, got ({shape}, {scale})"
            )));
        }
        Ok(Self {
            kind: Kind::Gamma { shape, scale },
            mean: Mean::Finite(shape * scale),
            essinf: 0.0,
            mass_at_essinf: 0.0,
            support_gap: None,
        })
    }

    pub fn poisson(rate: f64) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(EqportError::InvalidDistribution(format!(
                "poisson requires rate > 0, got {rate}"
            )));
        }
        Ok(Self {
            kind: Kind::Poisson { rate },
            mean: Mean::Finite(rate),
            essinf: 0.0,
            mass_at_essinf: (-rate).exp(),
            support_gap: None,
        })
    }

    /// Positive alpha-stable law with Laplace transform `exp(-y^alpha)`.
    pub fn positive_stable(index: f64) -> Result<Self> {
        if !(index > 0.0 && index < 1.0) {
            return Err(EqportError::InvalidDistribution(format!(
                "stable index must lie in (0, 1), got {index}"
            )));
        }
        Ok(Self {
            kind: Kind::PositiveStable { index },
            mean: Mean::Infinite,
            essinf: 0.0,
            mass_at_essinf: 0.0,
            support_gap: None,
        })
    }

    pub fn mix(parts: Vec<(f64, RiskAversionDistribution)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(EqportError::InvalidDistribution("empty mixture".into()));
        }
        let total: f64 = parts.iter().map(|&(w, _)| w).sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(EqportError::InvalidDistribution(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        if parts.iter().any(|&(w, _)| !(w > 0.0 && w < 1.0)) && parts.len() > 1 {
            return Err(EqportError::InvalidDistribution(
                "mixture weights must lie in (0, 1)".into(),
            ));
        }
        let mean = parts
            .iter()
            .try_fold(0.0, |acc, (w, d)| d.mean.finite().map(|m| acc + w * m))
            .map(Mean::Finite)
            .unwrap_or(Mean::Infinite);
        let essinf = parts.iter().map(|(w, d)| w * d.essinf).sum();
        let mass_at_essinf = parts.iter().map(|(_, d)| d.mass_at_essinf).product();
        Ok(Self {
            kind: Kind::Mix { parts },
            mean,
            essinf,
            mass_at_essinf,
            support_gap: None,
        })
    }

    /// Equal-weight i.i.d. convex combination, `R = (1/n) sum R_i`.
    pub fn sample_mean(base: RiskAversionDistribution, n: u32) -> Result<Self> {
        if n < 1 {
            return Err(EqportError::InvalidDistribution(
                "sample mean requires n >= 1".into(),
            ));
        }
        let mean = base.mean;
        let essinf = base.essinf;
        let mass_at_essinf = base.mass_at_essinf.powi(n as i32);
        Ok(Self {
            kind: Kind::SampleMean {
                base: Box::new(base),
                n,
            },
            mean,
            essinf,
            mass_at_essinf,
            support_gap: None,
        })
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    /// Mean of `R`.
    pub fn mean(&self) -> Mean {
        self.mean
    }

    /// Essential infimum `r0` of the support.
    pub fn essinf(&self) -> f64 {
        self.essinf
    }

    /// Probability mass at `r0` (zero for continuous laws).
    pub fn mass_at_essinf(&self) -> f64 {
        self.mass_at_essinf
    }

    /// First support gap above `r0`; tracked for `FiniteDiscrete` only.
    pub fn support_gap(&self) -> Option<f64> {
        self.support_gap
    }

    /// Laplace transform `l(y) = E[exp(-R y)]`.
    pub fn laplace(&self, y: f64) -> Result<f64> {
        self.check_nonneg(y)?;
        Ok(self.log_laplace(y).exp())
    }

    /// `log l(y)`, stable for large `y`.
    pub fn log_laplace(&self, y: f64) -> f64 {
        match &self.kind {
            Kind::PointMass { gamma } => -gamma * y,
            Kind::FiniteDiscrete { atoms } => {
                let r0 = atoms[0].0;
                let shifted: f64 = atoms.iter().map(|&(g, p)| p * (-(g - r0) * y).exp()).sum();
                -r0 * y + shifted.ln()
            }
            Kind::Gamma { shape, scale } => -shape * (1.0 + scale * y).ln(),
            Kind::Poisson { rate } => rate * ((-y).exp() - 1.0),
            Kind::PositiveStable { index } => -y.powf(*index),
            Kind::Mix { parts } => parts.iter().map(|(w, d)| d.log_laplace(w * y)).sum(),
            Kind::SampleMean { base, n } => *n as f64 * base.log_laplace(y / *n as f64),
        }
    }

    /// Weighted moment `E[R exp(-R y)] = -l'(y)`.
    ///
    /// Returns `f64::INFINITY` at `y = 0` when the mean is infinite.
    pub fn weighted_moment(&self, y: f64) -> Result<f64> {
        self.check_nonneg(y)?;
        Ok(self.laplace(y)? * self.wm_ratio(y))
    }

    /// The ratio `E[R exp(-R y)] / E[exp(-R y)]`, stable for large `y`.
    ///
    /// This is the reciprocal of the kernel `h` at `x = 2 y`.
    pub fn wm_ratio(&self, y: f64) -> f64 {
        match &self.kind {
            Kind::PointMass { gamma } => *gamma,
            Kind::FiniteDiscrete { atoms } => {
                let r0 = atoms[0].0;
                let mut num = 0.0;
                let mut den = 0.0;
                for &(g, p) in atoms {
                    let e = p * (-(g - r0) * y).exp();
                    num += g * e;
                    den += e;
                }
                num / den
            }
            Kind::Gamma { shape, scale } => shape * scale / (1.0 + scale * y),
            Kind::Poisson { rate } => rate * (-y).exp(),
            Kind::PositiveStable { index } => {
                if y == 0.0 {
                    f64::INFINITY
                } else {
                    index * y.powf(index - 1.0)
                }
            }
            Kind::Mix { parts } => parts.iter().map(|(w, d)| w * d.wm_ratio(w * y)).sum(),
            Kind::SampleMean { base, n } => base.wm_ratio(y / *n as f64),
        }
    }

    /// CDF where a closed form is in scope; `None` for stable laws and
    /// compound laws built from them.
    pub fn cdf(&self, x: f64) -> Option<f64> {
        match &self.kind {
            Kind::PointMass { gamma } => Some(if x >= *gamma { 1.0 } else { 0.0 }),
            Kind::FiniteDiscrete { atoms } => Some(
                atoms
                    .iter()
                    .take_while(|&&(g, _)| g <= x)
                    .map(|&(_, p)| p)
                    .sum(),
            ),
            Kind::Gamma { shape, scale } => {
                let d = statrs::distribution::Gamma::new(*shape, 1.0 / *scale).ok()?;
                Some(if x < 0.0 { 0.0 } else { d.cdf(x) })
            }
            Kind::Poisson { rate } => {
                if x < 0.0 {
                    return Some(0.0);
                }
                let d = statrs::distribution::Poisson::new(*rate).ok()?;
                Some(d.cdf(x.floor() as u64))
            }
            _ => None,
        }
    }

    /// Quantile function where the CDF is in scope.
    pub fn quantile(&self, p: f64) -> Option<f64> {
        match &self.kind {
            Kind::PointMass { gamma } => Some(*gamma),
            Kind::FiniteDiscrete { atoms } => {
                let mut acc = 0.0;
                for &(g, pi) in atoms {
                    acc += pi;
                    if acc >= p {
                        return Some(g);
                    }
                }
                Some(atoms.last().unwrap().0)
            }
            Kind::Gamma { shape, scale } => {
                let d = statrs::distribution::Gamma::new(*shape, 1.0 / *scale).ok()?;
                Some(d.inverse_cdf(p))
            }
            Kind::Poisson { rate } => {
                let d = statrs::distribution::Poisson::new(*rate).ok()?;
                Some(d.inverse_cdf(p) as f64)
            }
            _ => None,
        }
    }

    /// Is the law concentrated on countably many atoms with a closed CDF?
    fn is_discrete(&self) -> bool {
        matches!(
            self.kind,
            Kind::PointMass { .. } | Kind::FiniteDiscrete { .. } | Kind::Poisson { .. }
        )
    }

    /// Atoms for discrete laws. Poisson is truncated at tail mass 1e-12.
    fn atom_values(&self) -> Vec<f64> {
        match &self.kind {
            Kind::PointMass { gamma } => vec![*gamma],
            Kind::FiniteDiscrete { atoms } => atoms.iter().map(|&(g, _)| g).collect(),
            Kind::Poisson { rate } => {
                let d = statrs::distribution::Poisson::new(*rate).unwrap();
                let k_max = d.inverse_cdf(1.0 - 1e-12);
                (0..=k_max).map(|k| k as f64).collect()
            }
            _ => vec![],
        }
    }

    /// Atoms with probabilities for discrete laws, renormalized after
    /// truncating the Poisson tail at mass 1e-12. `None` for continuous or
    /// compound laws.
    pub fn atom_probs(&self) -> Option<Vec<(f64, f64)>> {
        match &self.kind {
            Kind::PointMass { gamma } => Some(vec![(*gamma, 1.0)]),
            Kind::FiniteDiscrete { atoms } => Some(atoms.clone()),
            Kind::Poisson { rate } => {
                let d = statrs::distribution::Poisson::new(*rate).ok()?;
                let k_max = d.inverse_cdf(1.0 - 1e-12);
                let probs: Vec<(f64, f64)> =
                    (0..=k_max).map(|k| (k as f64, d.pmf(k))).collect();
                let total: f64 = probs.iter().map(|&(_, p)| p).sum();
                Some(probs.into_iter().map(|(g, p)| (g, p / total)).collect())
            }
            _ => None,
        }
    }

    /// Reverse hazard rate dominance check: `self >=_rh other` iff
    /// `F_other(x) / F_self(x)` is decreasing wherever `F_self > 0`.
    pub fn rhr_dominates(&self, other: &Self, grid_points: usize, quantile_eps: f64) -> OrderVerdict {
        match self.order_check_points(other, grid_points, quantile_eps) {
            Ok(points) => {
                let mut prev: Option<(f64, f64, f64)> = None;
                for x in points {
                    let f1 = self.cdf(x).unwrap();
                    let f2 = other.cdf(x).unwrap();
                    if f1 <= 0.0 {
                        continue;
                    }
                    if let Some((_, pf1, pf2)) = prev {
                        // ratio f2/f1 must not increase; compare by
                        // cross-multiplication to avoid division noise
                        if f2 * pf1 > pf2 * f1 + 1e-14 {
                            return OrderVerdict::FailsAt(x);
                        }
                    }
                    prev = Some((x, f1, f2));
                }
                OrderVerdict::Dominates
            }
            Err(reason) => OrderVerdict::Inapplicable(reason),
        }
    }

    /// First-order stochastic dominance: `self >=_1 other` iff
    /// `F_self(x) <= F_other(x)` for all `x`.
    pub fn fsd_dominates(&self, other: &Self, grid_points: usize, quantile_eps: f64) -> OrderVerdict {
        match self.order_check_points(other, grid_points, quantile_eps) {
            Ok(points) => {
                for x in points {
                    let f1 = self.cdf(x).unwrap();
                    let f2 = other.cdf(x).unwrap();
                    if f1 > f2 + 1e-14 {
                        return OrderVerdict::FailsAt(x);
                    }
                }
                OrderVerdict::Dominates
            }
            Err(reason) => OrderVerdict::Inapplicable(reason),
        }
    }

    /// Evaluation points for order checks: exact atoms for discrete laws,
    /// a dense quantile-spanning grid for continuous ones.
    fn order_check_points(
        &self,
        other: &Self,
        grid_points: usize,
        quantile_eps: f64,
    ) -> std::result::Result<Vec<f64>, String> {
        for d in [self, other] {
            if d.cdf(0.0).is_none() {
                return Err("no closed-form CDF in scope for this family".into());
            }
        }
        let mut points: Vec<f64> = Vec::new();
        points.extend(self.atom_values());
        points.extend(other.atom_values());
        if !(self.is_discrete() && other.is_discrete()) {
            let lo = [self, other]
                .iter()
                .filter_map(|d| d.quantile(quantile_eps))
                .fold(f64::INFINITY, f64::min);
            let hi = [self, other]
                .iter()
                .filter_map(|d| d.quantile(1.0 - quantile_eps))
                .fold(f64::NEG_INFINITY, f64::max);
            let n = grid_points.max(2);
            for i in 0..n {
                points.push(lo + (hi - lo) * i as f64 / (n - 1) as f64);
            }
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        Ok(points)
    }

    /// n-point midpoint-quantile discretization with the mean rescaled to
    /// match exactly. Needs a closed-form quantile and a finite mean.
    pub fn quantile_discretization(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(EqportError::Domain("need n >= 1 atoms".into()));
        }
        let mean = self.mean.finite().ok_or_else(|| {
            EqportError::Precondition("quantile discretization needs a finite mean".into())
        })?;
        let p = 1.0 / n as f64;
        let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(n);
        for i in 0..n {
            let u = (i as f64 + 0.5) * p;
            let g = self.quantile(u).ok_or_else(|| {
                EqportError::Precondition("no closed-form quantile for this family".into())
            })?;
            match atoms.last_mut() {
                Some(last) if last.0 == g => last.1 += p,
                _ => atoms.push((g, p)),
            }
        }
        let raw_mean: f64 = atoms.iter().map(|&(g, q)| g * q).sum();
        if raw_mean > 0.0 {
            let scale = mean / raw_mean;
            for a in &mut atoms {
                a.0 *= scale;
            }
        }
        Self::finite_discrete(atoms)
    }

    fn check_nonneg(&self, y: f64) -> Result<()> {
        if y < 0.0 || y.is_nan() {
            return Err(EqportError::Domain(format!(
                "transform argument must be nonnegative, got {y}"
            )));
        }
        Ok(())
    }
}

impl std::str::FromStr for RiskAversionDistribution {
    type Err = EqportError;

    /// Parses the CLI spec grammar:
    ///
    /// ```text
    /// point:1.5              point:gamma=1.5
    /// discrete:1=0.9,3=0.1
    /// gamma:alpha=2,beta=0.5
    /// poisson:theta=2
    /// stable:alpha=0.8
    /// mix:0.5*discrete:1=0.9,3=0.1,0.5*point:1.5
    /// mean:n=8,base=discrete:1=0.9,3=0.1
    /// ```
    fn from_str(s: &str) -> Result<Self> {
        parse_dist(s.trim())
    }
}

fn parse_err(spec: &str, msg: impl Into<String>) -> EqportError {
    EqportError::Parse {
        pos: 0,
        msg: format!("{} (in `{spec}`)", msg.into()),
    }
}

fn parse_kv<'a>(spec: &str, body: &'a str, allowed: &[&str]) -> Result<Vec<(&'a str, f64)>> {
    let mut out = Vec::new();
    for item in body.split(',') {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| parse_err(spec, format!("expected key=value, got `{item}`")))?;
        if !allowed.contains(&k.trim()) {
            return Err(parse_err(spec, format!("unknown key `{}`", k.trim())));
        }
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| parse_err(spec, format!("invalid number `{}`", v.trim())))?;
        out.push((k.trim(), v));
    }
    Ok(out)
}

fn require(spec: &str, kv: &[(&str, f64)], key: &str) -> Result<f64> {
    kv.iter()
        .find(|(k, _)| *k == key)
        .map(|&(_, v)| v)
        .ok_or_else(|| parse_err(spec, format!("missing key `{key}`")))
}

fn parse_dist(spec: &str) -> Result<RiskAversionDistribution> {
    let (family, body) = spec
        .split_once(':')
        .ok_or_else(|| parse_err(spec, "expected `family:params`"))?;
    match family {
        "point" => {
            let gamma = if let Ok(v) = body.parse::<f64>() {
                v
            } else {
                require(spec, &parse_kv(spec, body, &["gamma"])?, "gamma")?
            };
            RiskAversionDistribution::point_mass(gamma)
        }
        "discrete" => {
            let mut atoms = Vec::new();
            for item in body.split(',') {
                let (g, p) = item
                    .split_once('=')
                    .ok_or_else(|| parse_err(spec, format!("expected atom=prob, got `{item}`")))?;
                let g: f64 = g
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(spec, format!("invalid atom `{g}`")))?;
                let p: f64 = p
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(spec, format!("invalid probability `{p}`")))?;
                atoms.push((g, p));
            }
            RiskAversionDistribution::finite_discrete(atoms)
        }
        "gamma" => {
            let kv = parse_kv(spec, body, &["alpha", "beta"])?;
            RiskAversionDistribution::gamma(require(spec, &kv, "alpha")?, require(spec, &kv, "beta")?)
        }
        "poisson" => {
            let kv = parse_kv(spec, body, &["theta"])?;
            RiskAversionDistribution::poisson(require(spec, &kv, "theta")?)
        }
        "stable" => {
            let kv = parse_kv(spec, body, &["alpha"])?;
            RiskAversionDistribution::positive_stable(require(spec, &kv, "alpha")?)
        }
        "mix" => {
            // components are comma-separated; a new component starts at a
            // `weight*family:...` token, continuation tokens extend the
            // previous component's parameter list
            let mut parts: Vec<(f64, String)> = Vec::new();
            for token in body.split(',') {
                let starts_new = token
                    .split_once('*')
                    .map(|(w, rest)| w.parse::<f64>().is_ok() && rest.contains(':'))
                    .unwrap_or(false);
                if starts_new {
                    let (w, rest) = token.split_once('*').unwrap();
                    parts.push((w.parse().unwrap(), rest.to_string()));
                } else if let Some(last) = parts.last_mut() {
                    last.1.push(',');
                    last.1.push_str(token);
                } else {
                    return Err(parse_err(spec, "mix component must start with `weight*`"));
                }
            }
            let parsed = parts
                .into_iter()
                .map(|(w, sub)| parse_dist(&sub).map(|d| (w, d)))
                .collect::<Result<Vec<_>>>()?;
            RiskAversionDistribution::mix(parsed)
        }
        "mean" => {
            let (head, base) = body
                .split_once("base=")
                .ok_or_else(|| parse_err(spec, "missing `base=` in mean spec"))?;
            let head = head.trim_end_matches(',');
            let kv = parse_kv(spec, head, &["n"])?;
            let n = require(spec, &kv, "n")? as u32;
            RiskAversionDistribution::sample_mean(parse_dist(base)?, n)
        }
        other => Err(parse_err(spec, format!("unknown family `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_laplace_closed_form() {
        let d = RiskAversionDistribution::gamma(2.0, 0.5).unwrap();
        assert_relative_eq!(d.laplace(2.0).unwrap(), 0.25, max_relative = 1e-14);
        assert_eq!(d.laplace(0.0).unwrap(), 1.0);
    }

    #[test]
    fn poisson_laplace_closed_form() {
        let d = RiskAversionDistribution::poisson(2.0).unwrap();
        let expected = (2.0 * ((-1.0f64).exp() - 1.0)).exp();
        assert_relative_eq!(d.laplace(1.0).unwrap(), expected, max_relative = 1e-14);
    }

    #[test]
    fn weighted_moment_at_zero_equals_mean() {
        let pm = RiskAversionDistribution::point_mass(3.0).unwrap();
        assert_relative_eq!(pm.weighted_moment(0.0).unwrap(), 3.0);
        let g = RiskAversionDistribution::gamma(2.0, 0.5).unwrap();
        assert_relative_eq!(g.weighted_moment(0.0).unwrap(), 1.0, max_relative = 1e-14);
        let fd =
            RiskAversionDistribution::finite_discrete(vec![(1.0, 0.9), (3.0, 0.1)]).unwrap();
        assert_relative_eq!(fd.weighted_moment(0.0).unwrap(), 1.2, max_relative = 1e-14);
    }

    #[test]
    fn infinite_mean_weighted_moment_at_zero_is_infinite() {
        let s = RiskAversionDistribution::positive_stable(0.8).unwrap();
        assert!(s.weighted_moment(0.0).unwrap().is_infinite());
        assert!(matches!(s.mean(), Mean::Infinite));
    }

    #[test]
    fn negative_argument_rejected() {
        let d = RiskAversionDistribution::poisson(2.0).unwrap();
        assert!(d.laplace(-1.0).is_err());
        assert!(d.weighted_moment(-0.5).is_err());
    }

    #[test]
    fn invalid_constructions_rejected() {
        assert!(RiskAversionDistribution::point_mass(0.0).is_err());
        assert!(RiskAversionDistribution::finite_discrete(vec![(1.0, 0.5)]).is_err());
        assert!(RiskAversionDistribution::finite_discrete(vec![(0.0, 1.0)]).is_err());
        assert!(RiskAversionDistribution::finite_discrete(vec![(-1.0, 1.0)]).is_err());
        assert!(RiskAversionDistribution::positive_stable(1.0).is_err());
    }

    #[test]
    fn sample_mean_laplace_identity() {
        let base =
            RiskAversionDistribution::finite_discrete(vec![(1.0, 0.9), (3.0, 0.1)]).unwrap();
        let sm = RiskAversionDistribution::sample_mean(base.clone(), 4).unwrap();
        for &y in &[0.0, 0.3, 1.7, 12.0] {
            let lhs = sm.laplace(y).unwrap();
            let rhs = base.laplace(y / 4.0).unwrap().powi(4);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-14);
        }
    }

    #[test]
    fn equal_weight_iid_mix_equals_sample_mean() {
        let base = RiskAversionDistribution::gamma(2.0, 0.5).unwrap();
        let n = 3;
        let w = 1.0 / n as f64;
        let mix = RiskAversionDistribution::mix(
            (0..n).map(|_| (w, base.clone())).collect(),
        )
        .unwrap();
        let sm = RiskAversionDistribution::sample_mean(base, n).unwrap();
        for &y in &[0.0, 0.5, 2.0, 9.0] {
            assert_relative_eq!(
                mix.laplace(y).unwrap(),
                sm.laplace(y).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn fig1_pair_is_fsd_ordered() {
        let r1 = RiskAversionDistribution::finite_discrete(vec![(1.0, 0.9), (3.0, 0.1)]).unwrap();
        let r2 = RiskAversionDistribution::finite_discrete(vec![(1.0, 0.9), (2.0, 0.1)]).unwrap();
        assert!(r1.fsd_dominates(&r2, 2001, 1e-6).dominates());
        assert!(r1.fsd_dominates(&r1, 2001, 1e-6).dominates());
        let a = RiskAversionDistribution::point_mass(1.0).unwrap();
        let b = RiskAversionDistribution::point_mass(2.0).unwrap();
        assert!(matches!(
            a.fsd_dominates(&b, 2001, 1e-6),
            OrderVerdict::FailsAt(_)
        ));
    }

    #[test]
    fn rhr_degenerate_and_reflexive_cases() {
        let d2 = RiskAversionDistribution::finite_discrete(vec![(2.0, 1.0)]).unwrap();
        let d1 = RiskAversionDistribution::finite_discrete(vec![(1.0, 1.0)]).unwrap();
        assert!(d2.rhr_dominates(&d1, 2001, 1e-6).dominates());
        assert!(d1.rhr_dominates(&d1, 2001, 1e-6).dominates());
    }

    #[test]
    fn rhr_two_point_atomwise() {
        // F1 at {1,2,3}: 0.9, 0.9, 1.0 ; F2: 0.9, 1.0, 1.0
        // ratio F2/F1: 1.0, 1.111.., 1.0 -> increases at 2: fails
        let d1 = RiskAversionDistribution::finite_discrete(vec![(1.0, 0.9), (3.0, 0.1)]).unwrap();
        let d2 = RiskAversionDistribution::finite_discrete(vec![(1.0, 0.9), (2.0, 0.1)]).unwrap();
        assert!(matches!(
            d1.rhr_dominates(&d2, 2001, 1e-6),
            OrderVerdict::FailsAt(_)
        ));
    }

    #[test]
    fn rhr_inapplicable_for_stable() {
        let s = RiskAversionDistribution::positive_stable(0.8).unwrap();
        let p = RiskAversionDistribution::point_mass(1.0).unwrap();
        assert!(matches!(
            s.rhr_dominates(&p, 2001, 1e-6),
            OrderVerdict::Inapplicable(_)
        ));
    }

    #[test]
    fn rhr_implies_fsd_on_gamma_pair() {
        // Gamma(3, b) >=rh Gamma(2, b): CDF ratio F2/F1 is decreasing
        let d1 = RiskAversionDistribution::gamma(3.0, 0.5).unwrap();
        let d2 = RiskAversionDistribution::gamma(2.0, 0.5).unwrap();
        assert!(d1.rhr_dominates(&d2, 2001, 1e-6).dominates());
        assert!(d1.fsd_dominates(&d2, 2001, 1e-6).dominates());
    }

    #[test]
    fn mix_metadata() {
        let a = RiskAversionDistribution::finite_discrete(vec![(0.1, 0.2), (8.0, 0.8)]).unwrap();
        let b = RiskAversionDistribution::point_mass(1.5).unwrap();
        let mix = RiskAversionDistribution::mix(vec![(0.5, a), (0.5, b)]).unwrap();
        assert_relative_eq!(mix.essinf(), 0.05 + 0.75);
        assert_relative_eq!(mix.mean().finite().unwrap(), 0.5 * 6.42 + 0.75);
        assert_relative_eq!(mix.mass_at_essinf(), 0.2);
    }

    #[test]
    fn parses_spec_strings() {
        let d: RiskAversionDistribution = "gamma:alpha=2,beta=0.5".parse().unwrap();
        assert_relative_eq!(d.laplace(2.0).unwrap(), 0.25, max_relative = 1e-14);
        let d: RiskAversionDistribution = "discrete:1=0.9,3=0.1".parse().unwrap();
        assert_relative_eq!(d.mean().finite().unwrap(), 1.2);
        let d: RiskAversionDistribution = "point:1.5".parse().unwrap();
        assert_eq!(d.essinf(), 1.5);
        let d: RiskAversionDistribution =
            "mix:0.5*discrete:0.1=0.2,8=0.8,0.5*point:1.5".parse().unwrap();
        assert_relative_eq!(d.mean().finite().unwrap(), 0.5 * 6.42 + 0.75);
        let d: RiskAversionDistribution = "mean:n=8,base=discrete:1=0.9,3=0.1".parse().unwrap();
        assert_relative_eq!(d.mean().finite().unwrap(), 1.2);
        let d: RiskAversionDistribution = "stable:alpha=0.8".parse().unwrap();
        assert!(!d.mean().is_finite());
        assert!("gamma:alpha=2,gamma=3".parse::<RiskAversionDistribution>().is_err());
        assert!("nope:1".parse::<RiskAversionDistribution>().is_err());
    }

    #[test]
    fn laplace_decreasing_and_convex_on_grid() {
        let dists = [
            RiskAversionDistribution::gamma(2.0, 0.5).unwrap(),
            RiskAversionDistribution::poisson(2.0).unwrap(),
            RiskAversionDistribution::positive_stable(0.7).unwrap(),
            RiskAversionDistribution::finite_discrete(vec![(1.0, 0.9), (3.0, 0.1)]).unwrap(),
        ];
        for d in &dists {
            let ys: Vec<f64> = (0..45).map(|i| 10f64.powf(-3.0 + i as f64 * 0.1)).collect();
            let ls: Vec<f64> = ys.iter().map(|&y| d.laplace(y).unwrap()).collect();
            for w in ls.windows(2) {
                assert!(w[1] < w[0]);
            }
            // convexity via second differences on a uniform grid
            let us: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
            let lu: Vec<f64> = us.iter().map(|&y| d.laplace(y).unwrap()).collect();
            for w in lu.windows(3) {
                assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-12);
            }
        }
    }
}
