use serde::{Deserialize, Serialize};

use crate::error::{EqportError, Result};

/// Central record of every numeric tolerance used by the engine.
///
/// All quadratures, inversions and classification heuristics read from a
/// single instance of this struct so that a CLI config file can override
/// any of them in one place.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Tolerances {
    /// Relative tolerance for adaptive quadrature.
    pub quad_rel: f64,
    /// Absolute floor below which quadrature refinement stops.
    pub quad_abs_floor: f64,
    /// Relative tolerance for H-inversion: |H(v) - z| <= inv_rel * max(1, z).
    pub inv_rel: f64,
    /// Upper integration limit used when probing H at infinity.
    pub y_max: f64,
    /// Grid points for continuous-law stochastic-order checks.
    pub order_grid: usize,
    /// Quantile clipping for continuous-law order checks.
    pub order_quantile_eps: f64,
    /// Default number of time-grid points for strategy curves.
    pub grid_points: usize,
    /// Time tolerance for crossing bisection.
    pub crossing_time_tol: f64,
    /// Largest horizon scanned by the reversal search.
    pub reversal_t_max: f64,
    /// Pass threshold for the equilibrium certificate slope.
    pub slope_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quad_rel: 1e-10,
            quad_abs_floor: 1e-14,
            inv_rel: 1e-12,
            y_max: 1e6,
            order_grid: 2001,
            order_quantile_eps: 1e-6,
            grid_points: 2000,
            crossing_time_tol: 1e-9,
            reversal_t_max: 16384.0,
            slope_tol: 1e-6,
        }
    }
}

impl Tolerances {
    /// Parses a `key = value` text file, one entry per line.
    /// `#` starts a comment. Unknown keys are rejected.
    pub fn from_config_text(text: &str) -> Result<Self> {
        let mut tol = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| EqportError::Parse {
                pos: lineno + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let value: f64 = value.trim().parse().map_err(|_| EqportError::Parse {
                pos: lineno + 1,
                msg: format!("invalid number `{}` for key `{key}`", value.trim()),
            })?;
            match key {
                "quad_rel" => tol.quad_rel = value,
                "quad_abs_floor" => tol.quad_abs_floor = value,
                "inv_rel" => tol.inv_rel = value,
                "y_max" => tol.y_max = value,
                "order_grid" => tol.order_grid = value as usize,
                "order_quantile_eps" => tol.order_quantile_eps = value,
                "grid_points" => tol.grid_points = value as usize,
                "crossing_time_tol" => tol.crossing_time_tol = value,
                "reversal_t_max" => tol.reversal_t_max = value,
                "slope_tol" => tol.slope_tol = value,
                _ => {
                    return Err(EqportError::Parse {
                        pos: lineno + 1,
                        msg: format!("unknown config key `{key}`"),
                    })
                }
            }
        }
        Ok(tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_overrides_and_rejects_unknown_keys() {
        let tol = Tolerances::from_config_text("quad_rel = 1e-8\n# comment\ny_max=100\n").unwrap();
        assert_eq!(tol.quad_rel, 1e-8);
        assert_eq!(tol.y_max, 100.0);
        assert!(Tolerances::from_config_text("bogus = 1\n").is_err());
    }
}
