use super::config::SolverConfig;
use super::state::{DualState, Multipliers};

/// Projected subgradient step `lambda <- max(0, lambda + delta0/sqrt(k) * g)`.
pub fn dual_update(duals: &DualState, subgradients: &Multipliers, _cfg: &SolverConfig) -> DualState {
    let mut next = duals.clone();
    let steps = duals.clone();
    next.lambda.zip_mut(subgradients, |fam, l, g| {
        *l = (*l + steps.step(fam) * g).max(0.0);
    });
    next.k += 1;
    next
}

/// Largest `|lambda * g|` over all families.
pub fn complementary_slackness(duals: &Multipliers, residuals: &Multipliers) -> f64 {
    duals.values().iter().zip(residuals.values()).map(|(l, g)| (l * g).abs()).fold(0.0, f64::max)
}
