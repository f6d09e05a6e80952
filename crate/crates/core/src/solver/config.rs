use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Base dual step sizes per constraint family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DualSteps {
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    pub c9: f64,
    pub c10: f64,
    pub c11: f64,
}

impl Default for DualSteps {
    fn default() -> Self {
        Self { c2: 1.0, c3: 1.0, c4: 1.0, c5: 1.0, c6: 1.0, c7: 1.0, c8: 1.0, c9: 1.0, c10: 1.0, c11: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub outer_max_iters: usize,
    pub outer_rel_tol: f64,
    /// Iteration cap for every inner search (dual ascent and root brackets).
    pub dual_max_iters: usize,
    pub dual_base_steps: DualSteps,
    /// Relative bracket width at which scalar searches stop.
    pub bisection_tol: f64,
    pub floor_bandwidth: f64,
    pub floor_power: f64,
    pub kkt_tol: f64,
    /// Relative headroom kept below every budget by the block solvers.
    pub budget_margin: f64,
    /// Iteration cap of the inner location update.
    pub location_max_iters: usize,
    pub seed: u64,
    /// Half-width (m) of the uniform initial UAV position jitter; 0 disables it.
    pub init_jitter: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            outer_max_iters: 200,
            outer_rel_tol: 1e-6,
            dual_max_iters: 200,
            dual_base_steps: DualSteps::default(),
            bisection_tol: 1e-13,
            floor_bandwidth: 1e-3,
            floor_power: 1e-9,
            kkt_tol: 1e-4,
            budget_margin: 1e-12,
            location_max_iters: 50,
            seed: 0,
            init_jitter: 0.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.outer_max_iters < 1 {
            return Err(Error::config("solver.outer_max_iters", "must be >= 1"));
        }
        if self.dual_max_iters < 1 {
            return Err(Error::config("solver.dual_max_iters", "must be >= 1"));
        }
        if self.location_max_iters < 1 {
            return Err(Error::config("solver.location_max_iters", "must be >= 1"));
        }
        for (name, v) in [
            ("outer_rel_tol", self.outer_rel_tol),
            ("bisection_tol", self.bisection_tol),
            ("floor_bandwidth", self.floor_bandwidth),
            ("floor_power", self.floor_power),
            ("kkt_tol", self.kkt_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("solver.{name}"), "must be > 0"));
            }
        }
        if !(self.budget_margin >= 0.0 && self.budget_margin < 1e-3) {
            return Err(Error::config("solver.budget_margin", "must be in [0, 1e-3)"));
        }
        if !(self.init_jitter >= 0.0 && self.init_jitter.is_finite()) {
            return Err(Error::config("solver.init_jitter", "must be >= 0"));
        }
        let s = &self.dual_base_steps;
        for v in [s.c2, s.c3, s.c4, s.c5, s.c6, s.c7, s.c8, s.c9, s.c10, s.c11] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config("solver.dual_base_steps", "all steps must be > 0"));
            }
        }
        Ok(())
    }
}
