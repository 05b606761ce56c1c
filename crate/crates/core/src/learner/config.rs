#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct LearnerConfig {
    pub n_tilings: u32,
    pub tiles_per_dim: u32,
    /// Base step size; each active weight moves by `step_size / n_tilings`.
    pub step_size: f64,
    pub discount: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of `training_episodes` over which ε decays linearly.
    pub epsilon_decay_fraction: f64,
    pub training_episodes: u32,
    /// Hard cap on simulated training steps across all episodes.
    pub total_step_budget: Option<u64>,
    pub eval_episodes: u32,
    pub seed: u64,
    /// Reward magnitude bound passed to the reward program.
    pub r_max: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            n_tilings: 8,
            tiles_per_dim: 12,
            step_size: 0.1,
            discount: 0.95,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.8,
            training_episodes: 600,
            total_step_budget: None,
            eval_episodes: 100,
            seed: 0,
            r_max: crate::dsl::DEFAULT_R_MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("discount must lie strictly between 0 and 1, got {0}")]
    Discount(f64),
    #[error("epsilon values must lie in [0, 1]")]
    Epsilon,
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("tile grid too large: {0} features per tiling")]
    TooManyFeatures(u128),
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(ConfigError::Discount(self.discount));
        }
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.epsilon_start) || !unit(self.epsilon_end) || !unit(self.epsilon_decay_fraction) {
            return Err(ConfigError::Epsilon);
        }
        if self.n_tilings == 0 {
            return Err(ConfigError::NotPositive("n_tilings"));
        }
        if self.tiles_per_dim == 0 {
            return Err(ConfigError::NotPositive("tiles_per_dim"));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(ConfigError::NotPositive("step_size"));
        }
        if self.training_episodes == 0 {
            return Err(ConfigError::NotPositive("training_episodes"));
        }
        if self.total_step_budget == Some(0) {
            return Err(ConfigError::NotPositive("total_step_budget"));
        }
        if self.eval_episodes == 0 {
            return Err(ConfigError::NotPositive("eval_episodes"));
        }
        if !(self.r_max > 0.0 && self.r_max.is_finite()) {
            return Err(ConfigError::NotPositive("r_max"));
        }
        Ok(())
    }

    /// ε for a given training episode: linear from `epsilon_start` to
    /// `epsilon_end` over the first `epsilon_decay_fraction` of episodes.
    pub fn epsilon(&self, episode: u32) -> f64 {
        let decay_episodes = self.epsilon_decay_fraction * self.training_episodes as f64;
        if decay_episodes <= 0.0 {
            return self.epsilon_end;
        }
        let progress = (episode as f64 / decay_episodes).min(1.0);
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * progress
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        assert_eq!(LearnerConfig::default().validate(), Ok(()));
    }

    #[test]
    fn rejects_bad_values() {
        let bad = |f: fn(&mut LearnerConfig)| {
            let mut c = LearnerConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.discount = 1.0));
        assert!(bad(|c| c.discount = 0.0));
        assert!(bad(|c| c.epsilon_end = 1.5));
        assert!(bad(|c| c.training_episodes = 0));
        assert!(bad(|c| c.total_step_budget = Some(0)));
        assert!(bad(|c| c.n_tilings = 0));
        assert!(bad(|c| c.r_max = f64::INFINITY));
    }

    #[test]
    fn epsilon_schedule() {
        let c = LearnerConfig { training_episodes: 100, ..LearnerConfig::default() };
        assert_eq!(c.epsilon(0), 1.0);
        assert!((c.epsilon(40) - 0.525).abs() < 1e-12);
        assert!((c.epsilon(80) - 0.05).abs() < 1e-12);
        assert!((c.epsilon(99) - 0.05).abs() < 1e-12);
    }
}
