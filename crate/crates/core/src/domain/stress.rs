use crate::domain::{MonthIndex, Zip3};
use crate::error::{Error, Result};

/// Per-region load and capacity over a shared monthly axis.
///
/// Storage is month-major: value for month `t` and region `i` sits at
/// `t * regions.len() + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct StressProfile {
    regions: Vec<Zip3>,
    months: Vec<MonthIndex>,
    load: Vec<f64>,
    capacity: Vec<f64>,
}

impl StressProfile {
    pub fn new(regions: Vec<Zip3>, months: Vec<MonthIndex>, load: Vec<f64>, capacity: Vec<f64>) -> Result<Self> {
        let cells = regions.len() * months.len();
        if regions.is_empty() || months.is_empty() {
            return Err(Error::Validation("stress profile needs regions and months".into()));
        }
        if load.len() != cells || capacity.len() != cells {
            return Err(Error::Structural(format!(
                "stress profile expects {cells} cells, got load {} and capacity {}",
                load.len(),
                capacity.len()
            )));
        }
        if months.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("stress profile months must be strictly increasing".into()));
        }
        for (what, values) in [("load", &load), ("capacity", &capacity)] {
            if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::Validation(format!("{what} must be finite and non-negative, got {v}")));
            }
        }
        Ok(StressProfile {
            regions,
            months,
            load,
            capacity,
        })
    }

    /// Single-timestep profile.
    pub fn single(regions: Vec<Zip3>, month: MonthIndex, load: Vec<f64>, capacity: Vec<f64>) -> Result<Self> {
        Self::new(regions, vec![month], load, capacity)
    }

    pub fn regions(&self) -> &[Zip3] {
        &self.regions
    }

    pub fn months(&self) -> &[MonthIndex] {
        &self.months
    }

    pub fn month_position(&self, month: MonthIndex) -> Option<usize> {
        self.months.binary_search(&month).ok()
    }

    pub fn load(&self, t: usize, i: usize) -> f64 {
        self.load[t * self.regions.len() + i]
    }

    pub fn capacity(&self, t: usize, i: usize) -> f64 {
        self.capacity[t * self.regions.len() + i]
    }

    /// `λ_i(t) = load − capacity`; positive means overloaded.
    pub fn residual(&self, t: usize, i: usize) -> f64 {
        self.load(t, i) - self.capacity(t, i)
    }

    pub fn residuals(&self, t: usize) -> Vec<f64> {
        (0..self.regions.len()).map(|i| self.residual(t, i)).collect()
    }
}

/// Baseline and networked stress per timestep plus the derived absorptivity.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptivityResult {
    pub months: Vec<MonthIndex>,
    pub lambda_o: Vec<f64>,
    pub lambda_w: Vec<f64>,
    /// `None` where the baseline stress is zero.
    pub r: Vec<Option<f64>>,
}

impl AbsorptivityResult {
    pub fn skipped(&self) -> usize {
        self.r.iter().filter(|r| r.is_none()).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_identity() {
        let regions = vec![Zip3::new("100").unwrap(), Zip3::new("101").unwrap()];
        let m = MonthIndex::new(2020, 1).unwrap();
        let p = StressProfile::single(regions, m, vec![5.0, 10.0], vec![8.0, 7.5]).unwrap();
        assert_eq!(p.residuals(0), vec![-3.0, 2.5]);
    }

    #[test]
    fn rejects_bad_profiles() {
        let regions = vec![Zip3::new("100").unwrap()];
        let m = MonthIndex::new(2020, 1).unwrap();
        assert!(StressProfile::single(regions.clone(), m, vec![-1.0], vec![1.0]).is_err());
        assert!(StressProfile::single(regions.clone(), m, vec![1.0, 2.0], vec![1.0]).is_err());
        assert!(StressProfile::new(regions, vec![m, m], vec![1.0; 2], vec![1.0; 2]).is_err());
    }
}
