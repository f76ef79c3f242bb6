use serde::Serialize;
use serde_json::{json, Value};

use crate::density::SobolevWeights;
use crate::error::{param, Result};
use crate::grid::SpaceTimeGrid;
use crate::real::Real;
use crate::response::{hypothesis_audit, Potential, ReferenceState};

/// Radial nodes handed to the `ε_g` part of the hypothesis audit.
const AUDIT_S_NODES: usize = 24;

#[derive(Debug, Clone)]
pub struct SolverConfig<T: Real> {
    pub state: ReferenceState<T>,
    pub potential: Potential,
    pub weights: SobolevWeights,
    pub grid: SpaceTimeGrid<T>,
    /// `M`: the `A_{m,n}` sum keeps `2 ≤ m+n ≤ M`.
    pub series_order: usize,
    /// `N_max`: wave-series order used for `B` and for reconstructing `Q`.
    pub wave_order: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Data size `‖Q0‖_{H^α}` above which `picard_solve` warns.
    pub smallness: f64,
    /// Run even when the hypothesis audit fails; recorded in the output.
    pub override_audit: bool,
}

impl<T: Real> SolverConfig<T> {
    pub fn new(state: ReferenceState<T>, potential: Potential, weights: SobolevWeights, grid: SpaceTimeGrid<T>) -> Self {
        Self {
            state,
            potential,
            weights,
            grid,
            series_order: 4,
            wave_order: 6,
            tol: 1e-8,
            max_iter: 50,
            smallness: 0.1,
            override_audit: false,
        }
    }

    pub fn with_grid(&self, grid: SpaceTimeGrid<T>) -> Self {
        Self { grid, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.series_order < 2 {
            return param("series order M must be at least 2");
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return param("need tol > 0 and max_iter ≥ 1");
        }
        Ok(())
    }

    /// Runs the hypothesis audit; a failure is an error unless overridden.
    pub fn audit(&self) -> Result<AuditOutcome> {
        let d = self.grid.spatial().dim();
        let report = hypothesis_audit(&self.state, &self.potential, &self.weights, d, AUDIT_S_NODES)?;
        let failing: Vec<String> = report.items.iter().filter(|i| !i.pass).map(|i| i.item.clone()).collect();
        if !report.pass && !self.override_audit {
            return param(format!("hypothesis audit failed: {}", failing.join("; ")));
        }
        Ok(AuditOutcome { pass: report.pass, overridden: !report.pass && self.override_audit, failing })
    }

    /// Fully resolved configuration, for echoing into artifacts.
    pub fn echo(&self) -> Value {
        let sp = self.grid.spatial();
        json!({
            "state": self.state.kind(),
            "potential": self.potential,
            "weights": self.weights,
            "grid": {
                "dim": sp.dim(),
                "n": sp.n(),
                "length": sp.length().to_f(),
                "horizon": self.grid.horizon().to_f(),
                "nt": self.grid.nt(),
            },
            "series_order": self.series_order,
            "wave_order": self.wave_order,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "smallness": self.smallness,
            "override_audit": self.override_audit,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditOutcome {
    pub pass: bool,
    pub overridden: bool,
    pub failing: Vec<String>,
}
