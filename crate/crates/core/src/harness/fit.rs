use rayon::prelude::*;

use super::ExperimentRow;
use crate::analytic::{asymptotic_beta_plus, beta_plus_rank1, CoreOrder, FixedPointConfig, Rank1PowerLawKernel};
use crate::{Error, Result};

/// Least-squares fit of `log β⁺ = log C + s log ε` for the rank-1 kernel at
/// `c = (1 + ε)(k - 2)/2`, using solver values.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    pub k: CoreOrder,
    /// `(ε, β⁺, leading-order asymptote)` per grid point.
    pub points: Vec<(f64, f64, f64)>,
    pub slope: f64,
    /// `exp(intercept)`.
    pub coefficient: f64,
    /// `log β⁺ - fitted` per point.
    pub residuals: Vec<f64>,
    pub target_slope: f64,
    pub target_coefficient: f64,
}

pub fn fit_exponent(k: CoreOrder, eps: &[f64], solver: &FixedPointConfig) -> Result<ExponentFit> {
    k.require_at_least_3()?;
    let mut eps = eps.to_vec();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    if eps.len() < 3 {
        return Err(Error::DegenerateGrid("need at least 3 distinct ε values".into()));
    }
    if let Some(e) = eps.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(Error::DegenerateGrid(format!("ε = {e} is not positive")));
    }
    if eps[eps.len() - 1] / eps[0] < 100.0 {
        return Err(Error::DegenerateGrid("ε grid must span at least two decades".into()));
    }
    let c0 = (k.get() as f64 - 2.0) / 2.0;
    let points: Vec<(f64, f64, f64)> = eps
        .par_iter()
        .map(|&e| -> Result<(f64, f64, f64)> {
            let kernel = Rank1PowerLawKernel::new(c0 * (1.0 + e))?;
            let b = beta_plus_rank1(&kernel, k, solver)?.value;
            Ok((e, b, asymptotic_beta_plus(k, e)?))
        })
        .collect::<Result<_>>()?;
    if let Some(&(e, _, _)) = points.iter().find(|p| !(p.1 > 0.0)) {
        return Err(Error::DegenerateGrid(format!("β⁺ vanishes at ε = {e}")));
    }

    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - (intercept + slope * x))
        .collect();

    let kf = k.get() as f64;
    let target_slope = 2.0 / (kf - 2.0);
    let factorial: f64 = (1..k.get()).map(|i| i as f64).product();
    let target_coefficient = factorial.powf(target_slope) / ((kf - 1.0) * (kf - 2.0));
    Ok(ExponentFit {
        k,
        points,
        slope,
        coefficient: intercept.exp(),
        residuals,
        target_slope,
        target_coefficient,
    })
}

impl ExponentFit {
    /// Relative error of the fitted slope against `2/(k-2)`.
    pub fn slope_error(&self) -> f64 {
        (self.slope - self.target_slope).abs() / self.target_slope
    }

    /// Relative error of the fitted coefficient against the leading-order one.
    pub fn coefficient_error(&self) -> f64 {
        (self.coefficient - self.target_coefficient).abs() / self.target_coefficient
    }

    /// Per-point rows, then `slope` and `coefficient` rows judged at the
    /// given relative tolerances.
    pub fn rows(&self, name: &str, k: CoreOrder, slope_tol: f64, coef_tol: f64) -> Vec<ExperimentRow> {
        let base = {
            let mut row = ExperimentRow::new(name, "rank1");
            row.k = Some(k.get());
            row
        };
        let mut rows: Vec<ExperimentRow> = self
            .points
            .iter()
            .zip(&self.residuals)
            .map(|(&(e, b, asym), r)| {
                let mut row = base.clone();
                row.param = e.to_string();
                row.analytic = Some(asym);
                row.empirical = Some(b);
                row.note = format!("log-residual={r}");
                row
            })
            .collect();
        for (label, target, value, tol) in [
            ("slope", self.target_slope, self.slope, slope_tol),
            ("coefficient", self.target_coefficient, self.coefficient, coef_tol),
        ] {
            let mut row = base.clone();
            row.param = label.into();
            row.analytic = Some(target);
            row.empirical = Some(value);
            row.tolerance = Some(tol * target);
            rows.push(row.judge());
        }
        rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_grids() {
        let cfg = FixedPointConfig::default();
        let k = CoreOrder::new(3).unwrap();
        assert!(matches!(fit_exponent(k, &[0.01, 0.02], &cfg), Err(Error::DegenerateGrid(_))));
        assert!(matches!(
            fit_exponent(k, &[0.01, 0.02, 0.05], &cfg),
            Err(Error::DegenerateGrid(_))
        ));
        assert!(matches!(
            fit_exponent(k, &[-1e-4, 1e-3, 1e-2], &cfg),
            Err(Error::DegenerateGrid(_))
        ));
        assert!(fit_exponent(CoreOrder::new(2).unwrap(), &[1e-4, 1e-3, 1e-2], &cfg).is_err());
    }

    #[test]
    fn k3_targets() {
        let cfg = FixedPointConfig::default();
        let fit = fit_exponent(CoreOrder::new(3).unwrap(), &[1e-4, 1e-3, 1e-2], &cfg).unwrap();
        assert_eq!(fit.target_slope, 2.0);
        assert_eq!(fit.target_coefficient, 2.0);
        assert!(fit.slope_error() < 0.05);
    }
}
