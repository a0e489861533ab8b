//! Noise schedules: strictly decreasing levels ending at exactly zero.

use crate::error::{invalid, Result};

/// How the levels between `t_max` and zero are spaced.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum ScheduleKind {
    /// `t_n = t_max * (1 - n/N)`.
    #[default]
    Linear,
    /// `t_n = t_max * (1 - n/N)^rho`, the Karras rule with a zero floor.
    /// Larger `rho` concentrates steps near zero.
    Power { rho: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSchedule {
    levels: Vec<f64>,
}

impl NoiseSchedule {
    pub const DEFAULT_T_MAX: f64 = 1.0;
    pub const DEFAULT_STEPS: usize = 50;

    pub fn new(kind: ScheduleKind, t_max: f64, steps: usize) -> Result<Self> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(invalid(format!("t_max must be positive, got {t_max}")));
        }
        if steps == 0 {
            return Err(invalid("schedule needs at least one step"));
        }
        let n = steps as f64;
        let levels = (0..=steps)
            .map(|i| {
                let frac = (steps - i) as f64 / n;
                match kind {
                    ScheduleKind::Linear => t_max * frac,
                    ScheduleKind::Power { rho } => t_max * frac.powf(rho),
                }
            })
            .collect();
        if let ScheduleKind::Power { rho } = kind {
            if !(rho > 0.0) {
                return Err(invalid(format!("power schedule needs rho > 0, got {rho}")));
            }
        }
        Self::from_levels(levels)
    }

    pub fn linear(t_max: f64, steps: usize) -> Result<Self> {
        Self::new(ScheduleKind::Linear, t_max, steps)
    }

    /// Validates an explicit level list.
    pub fn from_levels(levels: Vec<f64>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(invalid("schedule needs at least two levels"));
        }
        if *levels.last().unwrap() != 0.0 {
            return Err(invalid("last level must be exactly 0"));
        }
        if levels.iter().any(|l| !l.is_finite()) {
            return Err(invalid("levels must be finite"));
        }
        if levels.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(invalid("levels must be strictly decreasing"));
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn steps(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn t_max(&self) -> f64 {
        self.levels[0]
    }

    /// `(t_n, t_n - t_{n+1})` for every step.
    pub fn gaps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.levels.windows(2).map(|w| (w[0], w[0] - w[1]))
    }
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        Self::linear(Self::DEFAULT_T_MAX, Self::DEFAULT_STEPS).expect("valid defaults")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_four_steps() {
        let s = NoiseSchedule::linear(1.0, 4).unwrap();
        assert_eq!(s.levels(), &[1.0, 0.75, 0.5, 0.25, 0.0]);
    }

    #[test]
    fn linear_single_step() {
        let s = NoiseSchedule::linear(2.0, 1).unwrap();
        assert_eq!(s.levels(), &[2.0, 0.0]);
        assert_eq!(s.gaps().collect::<Vec<_>>(), vec![(2.0, 2.0)]);
    }

    #[test]
    fn power_rule_matches_brute_evaluation() {
        let s = NoiseSchedule::new(ScheduleKind::Power { rho: 3.0 }, 1.0, 4).unwrap();
        let expected = [1.0, 0.75f64.powi(3), 0.5f64.powi(3), 0.25f64.powi(3), 0.0];
        for (a, b) in s.levels().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        for w in s.levels().windows(2) {
            assert!(w[0] > w[1]);
        }
    }

    #[test]
    fn bad_arguments() {
        assert!(NoiseSchedule::linear(0.0, 4).is_err());
        assert!(NoiseSchedule::linear(-1.0, 4).is_err());
        assert!(NoiseSchedule::linear(1.0, 0).is_err());
        assert!(NoiseSchedule::from_levels(vec![1.0, 1.0, 0.0]).is_err());
        assert!(NoiseSchedule::from_levels(vec![1.0, 0.1]).is_err());
    }
}
