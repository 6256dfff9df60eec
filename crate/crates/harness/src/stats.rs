//! Cross-trial statistics of final cumulative regret.

use rbmle::ConfigError;

pub const DEFAULT_QUANTILES: [f64; 6] = [0.10, 0.25, 0.50, 0.75, 0.90, 0.95];

#[derive(Debug, Clone, PartialEq)]
pub struct RegretSummary {
    pub policy: String,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    /// `(level, value)` pairs in the order requested.
    pub quantiles: Vec<(f64, f64)>,
    pub mean_decision_time_ns: f64,
}

impl RegretSummary {
    pub fn quantile(&self, level: f64) -> Option<f64> {
        self.quantiles
            .iter()
            .find(|(l, _)| (l - level).abs() < 1e-12)
            .map(|(_, v)| *v)
    }

    pub fn with_policy(mut self, policy: impl Into<String>) -> Self {
        self.policy = policy.into();
        self
    }

    pub fn with_decision_time(mut self, ns: f64) -> Self {
        self.mean_decision_time_ns = ns;
        self
    }
}

/// Linear interpolation between the closest order statistics ("type 7"):
/// `h = (n − 1)·p`, `Q = x[⌊h⌋] + (h − ⌊h⌋)·(x[⌊h⌋+1] − x[⌊h⌋])`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty() && (0.0..=1.0).contains(&p));
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn summarize(final_regrets: &[f64]) -> Result<RegretSummary, ConfigError> {
    summarize_levels(final_regrets, &DEFAULT_QUANTILES)
}

pub fn summarize_levels(
    final_regrets: &[f64],
    levels: &[f64],
) -> Result<RegretSummary, ConfigError> {
    if final_regrets.is_empty() {
        return Err(ConfigError::new(
            "final_regrets",
            "cannot summarize an empty list",
        ));
    }
    if let Some(l) = levels.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(ConfigError::new(
            "quantiles",
            format!("level {l} is outside [0, 1]"),
        ));
    }
    let mut sorted = final_regrets.to_vec();
    sorted.sort_by(f64::total_cmp);
    // Summing in sorted order makes the mean independent of trial order.
    let (mean, std) = mean_std(&sorted);
    Ok(RegretSummary {
        policy: String::new(),
        mean,
        std,
        quantiles: levels
            .iter()
            .map(|&l| (l, quantile_sorted(&sorted, l)))
            .collect(),
        mean_decision_time_ns: 0.0,
    })
}

/// Column name for a quantile level: `0.1 → "q10"`, `0.025 → "q2.5"`.
pub fn quantile_label(level: f64) -> String {
    format!("q{}", (level * 1e6).round() / 1e4)
}

/// Parses `"0.10,0.25,0.5"`.
pub fn parse_levels(text: &str) -> Result<Vec<f64>, ConfigError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|l| (0.0..=1.0).contains(l))
                .ok_or_else(|| ConfigError::new("quantiles", format!("bad level `{s}`")))
        })
        .collect()
}

/// Running mean and population variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.m2 / self.n as f64).sqrt()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_count_median() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.quantile(0.5), Some(2.5));
        assert_eq!(s.mean, 2.5);
        assert!((s.std - 1.25f64.sqrt()).abs() < 1e-15);
        // h = 0.3 between 1 and 2
        assert!((s.quantile(0.1).unwrap() - 1.3).abs() < 1e-12);
    }

    #[test]
    fn constant_input() {
        let s = summarize(&[5.0; 50]).unwrap();
        assert_eq!(s.std, 0.0);
        assert!(s.quantiles.iter().all(|(_, v)| *v == 5.0));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn labels_and_parsing() {
        assert_eq!(quantile_label(0.10), "q10");
        assert_eq!(quantile_label(0.95), "q95");
        assert_eq!(quantile_label(0.025), "q2.5");
        assert_eq!(parse_levels("0.1, 0.5").unwrap(), vec![0.1, 0.5]);
        assert!(parse_levels("0.1,1.5").is_err());
        assert!(parse_levels("x").is_err());
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let mut w = Welford::default();
        xs.iter().for_each(|&x| w.push(x));
        let (m, s) = mean_std(&xs);
        assert!((w.mean() - m).abs() < 1e-12 && (w.std() - s).abs() < 1e-12);
        assert_eq!(w.count(), 8);
    }
}
