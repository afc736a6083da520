use rayon::prelude::*;

use super::ExperimentRow;
use crate::analytic::{
    a_rank1, asymptotic_a_k2, asymptotic_beta_plus_k2, beta_plus_rank1, CoreOrder,
    FixedPointConfig, Rank1PowerLawKernel,
};
use crate::{Error, Result};

/// Below this `c` the 2-core is so small that double precision is no longer
/// trustworthy; such points are flagged and left out of the trend checks.
pub const K2_C_FLOOR: f64 = 0.04;

#[derive(Debug, Clone, PartialEq)]
pub struct K2Point {
    pub c: f64,
    pub a: f64,
    pub a_asymptote: f64,
    pub beta_plus: f64,
    pub beta_plus_asymptote: f64,
    pub flagged: bool,
}

impl K2Point {
    pub fn a_ratio(&self) -> f64 {
        self.a / self.a_asymptote
    }

    pub fn beta_plus_ratio(&self) -> f64 {
        self.beta_plus / self.beta_plus_asymptote
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct K2Trend {
    pub points: Vec<K2Point>,
    /// `|A_2/asymptote - 1|` is nonincreasing along the unflagged grid.
    pub a_monotone: bool,
    pub beta_plus_monotone: bool,
    /// `β⁺_2(c) > 0` at every unflagged point.
    pub all_positive: bool,
}

fn toward_one(ratios: &[f64]) -> bool {
    ratios
        .windows(2)
        .all(|w| (w[1] - 1.0).abs() <= (w[0] - 1.0).abs())
}

/// Rank-1 2-core `A_2(c)` and `β⁺_2(c)` against their small-`c` asymptotes
/// along a decreasing grid of `c`.
pub fn k2_trend(c: &[f64], solver: &FixedPointConfig) -> Result<K2Trend> {
    if c.is_empty() {
        return Err(Error::DegenerateGrid("c grid is empty".into()));
    }
    if c.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::DegenerateGrid("c grid must be strictly decreasing".into()));
    }
    let k = CoreOrder::new(2)?;
    let points: Vec<K2Point> = c
        .par_iter()
        .map(|&c| -> Result<K2Point> {
            let kernel = Rank1PowerLawKernel::new(c)?;
            Ok(K2Point {
                c,
                a: a_rank1(&kernel, k, solver)?.value,
                a_asymptote: asymptotic_a_k2(c)?,
                beta_plus: beta_plus_rank1(&kernel, k, solver)?.value,
                beta_plus_asymptote: asymptotic_beta_plus_k2(c)?,
                flagged: c < K2_C_FLOOR,
            })
        })
        .collect::<Result<_>>()?;
    let kept: Vec<&K2Point> = points.iter().filter(|p| !p.flagged).collect();
    let a_ratios: Vec<f64> = kept.iter().map(|p| p.a_ratio()).collect();
    let b_ratios: Vec<f64> = kept.iter().map(|p| p.beta_plus_ratio()).collect();
    Ok(K2Trend {
        a_monotone: toward_one(&a_ratios),
        beta_plus_monotone: toward_one(&b_ratios),
        all_positive: kept.iter().all(|p| p.beta_plus > 0.0),
        points,
    })
}

impl K2Trend {
    /// Two rows per grid point (`A_2`, then `β⁺_2`), then the trend checks.
    /// The band row requires the `A_2` ratio at the smallest unflagged `c` to
    /// lie in `[0.5, 1.5]`.
    pub fn rows(&self, name: &str) -> Vec<ExperimentRow> {
        let base = {
            let mut row = ExperimentRow::new(name, "rank1");
            row.k = Some(2);
            row
        };
        let mut rows = Vec::new();
        for p in &self.points {
            let flag = if p.flagged { ";flagged=below-floor" } else { "" };
            for (what, value, asym, ratio) in [
                ("A2", p.a, p.a_asymptote, p.a_ratio()),
                ("beta+", p.beta_plus, p.beta_plus_asymptote, p.beta_plus_ratio()),
            ] {
                let mut row = base.clone();
                row.param = p.c.to_string();
                row.analytic = Some(asym);
                row.empirical = Some(value);
                row.note = format!("quantity={what};ratio={ratio}{flag}");
                rows.push(row);
            }
        }
        for (label, ok) in [
            ("A2-ratio-monotone", self.a_monotone),
            ("beta+-ratio-monotone", self.beta_plus_monotone),
            ("beta+-positive", self.all_positive),
        ] {
            let mut row = base.clone();
            row.param = label.into();
            row.pass = Some(ok);
            rows.push(row);
        }
        if let Some(p) = self.points.iter().filter(|p| !p.flagged).last() {
            let mut row = base.clone();
            row.param = "A2-ratio-band".into();
            row.analytic = Some(1.0);
            row.empirical = Some(p.a_ratio());
            row.tolerance = Some(0.5);
            row.note = format!("c={}", p.c);
            rows.push(row.judge());
        }
        rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_increasing_grid() {
        let cfg = FixedPointConfig::default();
        assert!(k2_trend(&[0.05, 0.1], &cfg).is_err());
        assert!(k2_trend(&[], &cfg).is_err());
    }

    #[test]
    fn flags_below_floor() {
        let cfg = FixedPointConfig::default();
        let t = k2_trend(&[0.1, 0.035], &cfg).unwrap();
        assert!(!t.points[0].flagged);
        assert!(t.points[1].flagged);
    }
}
