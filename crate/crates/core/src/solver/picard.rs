use serde::Serialize;
use serde_json::Value;

use crate::density::{sobolev_hs_norm, DensityMatrix, OperatorTrajectory};
use crate::dynamics::{convolve, reconstruct_q, scattering_diagnostic, PotentialTrajectory, ScatteringTable};
use crate::error::{Error, Result};
use crate::grid::SpaceTimeField;
use crate::real::Real;
use crate::response::radial_lp;

use super::config::{AuditOutcome, SolverConfig};
use super::nonlinear::{trajectory_density, GammaMap};

/// Consecutive ratios above one that count as divergence.
const DIVERGENCE_RUN: usize = 3;
/// Allowed growth of the global density bound under `T → 2T`.
pub const PLATEAU_TOLERANCE: f64 = 0.05;
/// Residual target for a converged run.
pub const RESIDUAL_TARGET: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Iterate {
    pub k: usize,
    /// `‖φ_k − φ_{k−1}‖_{L²_{t,x}}`
    pub delta: f64,
    /// `delta_k / delta_{k−1}`; absent for the first step.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SolutionRecord<T: Real> {
    pub phi: SpaceTimeField<T>,
    pub q0: DensityMatrix<T>,
    pub iterates: Vec<Iterate>,
    pub converged: bool,
    pub q_traj: OperatorTrajectory<T>,
    /// `‖Q0‖_{H^α}`
    pub data_size: f64,
    /// Largest `‖φ_k‖` met along the iteration.
    pub measured_r: f64,
    /// Largest relative imaginary part discarded from a density source.
    pub imag_residual: f64,
    pub audit: AuditOutcome,
    pub warnings: Vec<String>,
}

impl<T: Real> SolutionRecord<T> {
    pub fn max_ratio(&self) -> Option<f64> {
        self.iterates.iter().filter_map(|i| i.ratio).reduce(f64::max)
    }
}

/// Iterates `φ_{k+1} = Γ(φ_k)` from `φ₀ = 0` and reconstructs `Q(t)`.
pub fn picard_solve<T: Real>(q0: &DensityMatrix<T>, config: &SolverConfig<T>) -> Result<SolutionRecord<T>> {
    let audit = config.audit()?;
    let map = GammaMap::new(q0, config)?;
    let mut warnings = Vec::new();
    if audit.overridden {
        warnings.push(format!("hypothesis audit overridden; failing items: {}", audit.failing.join("; ")));
    }
    let data_size = sobolev_hs_norm(q0, config.weights.alpha, config.weights.alpha).to_f();
    if data_size > config.smallness {
        warnings.push(format!("‖Q0‖_H^α = {data_size:e} exceeds the smallness threshold {:e}", config.smallness));
    }

    let mut phi = SpaceTimeField::zeros(config.grid);
    let mut iterates: Vec<Iterate> = Vec::new();
    let (mut measured_r, mut imag_residual) = (0.0f64, 0.0f64);
    let mut above = 0;
    let mut converged = false;
    for k in 1..=config.max_iter {
        let next = map.eval(&phi)?;
        imag_residual = imag_residual.max(next.imag_residual);
        let delta = next.value.axpy(-crate::real::C::new(T::one(), T::zero()), &phi)?.l2_norm().to_f();
        let ratio = iterates.last().map(|p| if p.delta > 0.0 { delta / p.delta } else { 0.0 });
        phi = next.value;
        measured_r = measured_r.max(phi.l2_norm().to_f());
        iterates.push(Iterate { k, delta, ratio });
        match ratio {
            Some(r) if r > 1.0 || !r.is_finite() => above += 1,
            _ => above = 0,
        }
        if !delta.is_finite() {
            return Err(Error::Divergence { consecutive: above.max(1), last_ratio: f64::INFINITY });
        }
        if above >= DIVERGENCE_RUN {
            return Err(Error::Divergence { consecutive: above, last_ratio: ratio.unwrap_or(f64::NAN) });
        }
        if delta < config.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        warnings.push(format!("no convergence within {} iterations", config.max_iter));
    }

    let v = PotentialTrajectory::from_phi(&phi, &config.potential.w1)?;
    let gamma_f = DensityMatrix::fourier_multiplier(*config.grid.spatial(), |e| config.state.f(e));
    let rec = reconstruct_q(&v, q0, &gamma_f, config.wave_order)?;
    warnings.extend(rec.warnings);
    Ok(SolutionRecord {
        phi,
        q0: q0.clone(),
        iterates,
        converged,
        q_traj: rec.trajectory,
        data_size,
        measured_r,
        imag_residual,
        audit,
        warnings,
    })
}

/// `‖w ∗ ρ_Q‖_{L²_t L^d_x} ≤ κ ‖w₂ ∗ ρ_Q‖_{L²_{t,x}}` with `κ` from the
/// lattice (exact Hausdorff–Young on the grid) and from continuum quadrature.
#[derive(Debug, Clone, Serialize)]
pub struct ChainCheck {
    pub lhs: f64,
    pub lattice_bound: f64,
    pub quadrature_bound: f64,
    pub consistent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub residual: f64,
    pub global_bound: f64,
    pub extended_bound: Option<f64>,
    pub plateau_growth: Option<f64>,
    pub scattering: ScatteringTable,
    pub chain: Option<ChainCheck>,
    /// `R^{M+1}`: nominal size of the dropped `A_{m,n}` terms.
    pub truncation_budget: f64,
    pub verdict: bool,
    pub warnings: Vec<String>,
}

struct Densities {
    residual: f64,
    global_bound: f64,
    w2_norm: f64,
}

fn densities<T: Real>(record: &SolutionRecord<T>, config: &SolverConfig<T>) -> Result<Densities> {
    let d = config.grid.spatial().dim() as f64;
    let rho = trajectory_density(&record.q_traj)?;
    let w2rho = convolve(&rho, &config.potential.w2)?;
    let wrho = convolve(&w2rho, &config.potential.w1)?;
    let phi_norm = record.phi.l2_norm().to_f();
    let diff = w2rho.axpy(-crate::real::C::new(T::one(), T::zero()), &record.phi)?.l2_norm().to_f();
    Ok(Densities {
        residual: if phi_norm > 0.0 { diff / phi_norm } else { diff },
        global_bound: wrho.mixed_norm(d).to_f(),
        w2_norm: w2rho.l2_norm().to_f(),
    })
}

fn chain<T: Real>(config: &SolverConfig<T>, lhs: f64, w2_norm: f64) -> Option<ChainCheck> {
    let sp = config.grid.spatial();
    let d = sp.dim();
    if d < 3 {
        return None;
    }
    let df = d as f64;
    let r = 2.0 * df / (df - 2.0);
    let lattice_norm = (0..sp.len())
        .map(|k| config.potential.w1_hat(sp.k_abs(k)).to_f().abs().powf(r))
        .sum::<f64>()
        .powf(1.0 / r);
    let length = sp.length().to_f();
    let lattice_bound = length.powf(1.0 - df / 2.0) * lattice_norm * w2_norm;
    let w1 = &config.potential.w1;
    let continuum = radial_lp(|k: f64| w1.eval(k), d, r, w1.extent().min(1e3));
    let quadrature_bound = (2.0 * std::f64::consts::PI).powf(1.0 - df / 2.0) * continuum * w2_norm;
    let slack = 1.0 + 1e-9;
    Some(ChainCheck { lhs, lattice_bound, quadrature_bound, consistent: lhs <= lattice_bound * slack && lhs <= quadrature_bound * slack })
}

/// Residual, global density bound (optionally rerun on `[0, 2T]`), scattering
/// table in `S^{2d}` and the chained-norm check for a solved record.
pub fn postsolve_verify<T: Real>(record: &SolutionRecord<T>, config: &SolverConfig<T>, extend: bool) -> Result<VerificationReport> {
    let d = config.grid.spatial().dim();
    let base = densities(record, config)?;
    let mut warnings = Vec::new();
    let (mut extended_bound, mut plateau_growth) = (None, None);
    if extend {
        let longer = config.with_grid(config.grid.extended(2));
        match picard_solve(&record.q0, &longer) {
            Ok(rec2) => {
                let b2 = densities(&rec2, &longer)?.global_bound;
                extended_bound = Some(b2);
                plateau_growth = Some(if base.global_bound > 0.0 { b2 / base.global_bound - 1.0 } else { 0.0 });
            }
            Err(e) => warnings.push(format!("T-extension rerun failed: {e}")),
        }
    }
    let scattering = scattering_diagnostic(&record.q_traj, 2.0 * d as f64)?;
    let chain = chain(config, base.global_bound, base.w2_norm);
    let trivial = record.phi.l2_norm() == T::zero() && base.global_bound == 0.0;
    let decaying = trivial || scattering.decreasing;
    let bounded = base.global_bound.is_finite() && plateau_growth.is_none_or(|g| g < PLATEAU_TOLERANCE);
    let verdict = record.converged
        && base.residual < RESIDUAL_TARGET
        && bounded
        && decaying
        && chain.as_ref().is_none_or(|c| c.consistent);
    Ok(VerificationReport {
        residual: base.residual,
        global_bound: base.global_bound,
        extended_bound,
        plateau_growth,
        scattering,
        chain,
        truncation_budget: record.measured_r.powi(config.series_order as i32 + 1),
        verdict,
        warnings,
    })
}

/// Summary in the artifact layout: iterates, residual, global bound,
/// scattering rows and the configuration echo.
#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub iterates: Vec<Iterate>,
    pub residual: f64,
    pub global_bound: f64,
    pub scattering: Vec<crate::dynamics::CauchyRow>,
    pub config_echo: Value,
    pub converged: bool,
    pub data_size: f64,
    pub measured_r: f64,
    pub imag_residual: f64,
    pub audit: AuditOutcome,
    pub verification: VerificationReport,
    pub warnings: Vec<String>,
}

impl SolveSummary {
    pub fn new<T: Real>(record: &SolutionRecord<T>, report: &VerificationReport, config: &SolverConfig<T>) -> Self {
        Self {
            iterates: record.iterates.clone(),
            residual: report.residual,
            global_bound: report.global_bound,
            scattering: report.scattering.rows.clone(),
            config_echo: config.echo(),
            converged: record.converged,
            data_size: record.data_size,
            measured_r: record.measured_r,
            imag_residual: record.imag_residual,
            audit: record.audit.clone(),
            verification: report.clone(),
            warnings: record.warnings.iter().chain(&report.warnings).cloned().collect(),
        }
    }
}
