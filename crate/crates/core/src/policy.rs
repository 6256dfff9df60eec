use crate::environment::ContextSet;
use crate::error::SolverError;

/// An online arm-selection rule driven round by round.
///
/// The driver reveals the round's contexts to [`select`](Policy::select),
/// looks up the chosen arm's reward, and reports it back through
/// [`update`](Policy::update) together with the chosen context.
pub trait Policy: Send {
    fn name(&self) -> &str;

    fn select(&mut self, contexts: &ContextSet) -> Result<usize, SolverError>;

    fn update(&mut self, x: &[f64], reward: f64);
}

/// Index of the largest score, lowest index on ties. NaN scores never win.
pub fn argmax_lowest<I: IntoIterator<Item = f64>>(scores: I) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, s) in scores.into_iter().enumerate() {
        if s > best_val {
            best = i;
            best_val = s;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_go_to_lowest_index() {
        assert_eq!(argmax_lowest([1.0, 1.0, 1.0]), 0);
        assert_eq!(argmax_lowest([0.0, 2.0, 2.0]), 1);
        assert_eq!(argmax_lowest([f64::NAN, 0.5]), 1);
    }
}
