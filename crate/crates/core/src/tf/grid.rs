use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sorted positive frequencies (rad/s) plus flags for the `omega = 0` and `omega = inf` limits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    points: Vec<f64>,
    pub include_zero: bool,
    pub include_infinity: bool,
}

impl FrequencyGrid {
    pub fn new(mut points: Vec<f64>, include_zero: bool, include_infinity: bool) -> Result<Self> {
        if points.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidParameter("grid frequencies must be finite and positive".into()));
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        Ok(Self {
            points,
            include_zero,
            include_infinity,
        })
    }

    /// `n` log-spaced points on `[lo, hi]`, both limits included.
    pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && n >= 2) {
            return Err(Error::InvalidParameter(format!(
                "log grid needs 0 < lo < hi and n >= 2 (got lo={lo}, hi={hi}, n={n})"
            )));
        }
        let (a, b) = (lo.log10(), hi.log10());
        let pts = (0..n)
            .map(|k| 10f64.powf(a + (b - a) * k as f64 / (n - 1) as f64))
            .collect();
        Self::new(pts, true, true)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.points.first().copied().unwrap_or(f64::NAN)
    }

    pub fn hi(&self) -> f64 {
        self.points.last().copied().unwrap_or(f64::NAN)
    }

    /// Extends the grid with log-spaced points of the same density so it covers `[lo, hi]`.
    pub fn widened(&self, lo: f64, hi: f64) -> Self {
        if self.points.len() < 2 {
            return self.clone();
        }
        let step = (self.hi() / self.lo()).ln() / (self.points.len() - 1) as f64;
        let mut pts = self.points.clone();
        let mut w = self.lo();
        while w > lo {
            w *= (-step).exp();
            pts.push(w);
        }
        let mut w = self.hi();
        while w < hi {
            w *= step.exp();
            pts.push(w);
        }
        Self::new(pts, self.include_zero, self.include_infinity).expect("widened points stay positive")
    }
}

impl Default for FrequencyGrid {
    /// 400 points on `[1e-4, 1e4]` with both limits.
    fn default() -> Self {
        Self::log_spaced(1e-4, 1e4, 400).expect("default grid is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let g = FrequencyGrid::default();
        assert_eq!(g.len(), 400);
        assert!((g.lo() - 1e-4).abs() < 1e-16);
        assert!((g.hi() - 1e4).abs() < 1e-9);
        assert!(g.points().windows(2).all(|w| w[0] < w[1]));
        assert!(g.include_zero && g.include_infinity);
    }

    #[test]
    fn widening_covers_requested_band() {
        let g = FrequencyGrid::log_spaced(1.0, 10.0, 11).unwrap().widened(0.05, 300.0);
        assert!(g.lo() <= 0.05 && g.hi() >= 300.0);
        assert!(g.points().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_bad_points() {
        assert!(FrequencyGrid::new(vec![1.0, -1.0], false, false).is_err());
        assert!(FrequencyGrid::log_spaced(1.0, 1.0, 5).is_err());
    }
}
