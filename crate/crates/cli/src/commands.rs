//! One function per command. Each returns an [`Outcome`] (pass flag, report
//! body, CSV tables, binary fields) or an error, which the runner maps to
//! exit code 1.

use serde::Serialize;
use serde_json::{json, Value};

use fermi_scatter::density::{random_packets, sobolev_hs_norm, DensityMatrix};
use fermi_scatter::dynamics::{factorial_decay_report, scattering_diagnostic, PotentialTrajectory, ScatteringTable};
use fermi_scatter::grid::{SpaceTimeGrid, SpatialGrid};
use fermi_scatter::response::{
    gcheck_table, hypothesis_audit, invertibility_scan, mf_timedomain, MultiplierTable, ReferenceState,
};
use fermi_scatter::rng::seed_stream;
use fermi_scatter::solver::{picard_solve, postsolve_verify, SolveSummary, SolverConfig};
use fermi_scatter::strichartz::{probe_highfreq, probe_lowfreq, uniform_bound_scan, StrichartzParams};
use fermi_scatter::{Error, ReferenceStateF64, SolutionRecordF64, SolverConfigF64, SpaceTimeGridF64};

use crate::artifacts::{float, BinaryField, Table};
use crate::config::{self, Family, GridSpec, InitialData};

#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub result: Value,
    pub tables: Vec<Table>,
    pub fields: Vec<BinaryField>,
}

impl Outcome {
    fn new(pass: bool, result: Value) -> Self {
        Self { pass, result, tables: Vec::new(), fields: Vec::new() }
    }

    fn table(mut self, t: Table) -> Self {
        self.tables.push(t);
        self
    }
}

/// Settings that come from the command line rather than the parameter block.
#[derive(Debug, Clone, Copy)]
pub struct Context {
    pub seed: u64,
    pub override_audit: bool,
}

type Res = Result<Outcome, Error>;

fn to_value<S: Serialize>(s: &S) -> Value {
    serde_json::to_value(s).expect("report types serialise")
}

fn state(kind: &fermi_scatter::response::StateKind) -> Result<ReferenceStateF64, Error> {
    ReferenceState::new(kind.clone())
}

pub fn grid(spec: &GridSpec) -> Result<SpaceTimeGridF64, Error> {
    SpaceTimeGrid::new(SpatialGrid::new(spec.dim, spec.n, spec.length)?, spec.horizon, spec.nt)
}

fn rel_err((ar, ai): (f64, f64), (br, bi): (f64, f64)) -> f64 {
    let d = (ar - br).hypot(ai - bi);
    let a = ar.hypot(ai);
    if a > 0.0 {
        d / a
    } else {
        d
    }
}

pub fn multiplier_scan(p: &config::MultiplierScan) -> Res {
    let s = state(&p.state)?;
    let table = MultiplierTable::build(&s, p.dim, &p.taus, &p.xis, p.s_nodes)?;
    let mut csv = Table::new("multiplier", &["tau", "xi", "re", "im", "re_time", "im_time", "rel_err"]);
    let mut worst: Option<f64> = None;
    let gt = if p.cross_check {
        Some(gcheck_table(&s, p.dim, p.table_radius, (100.0 * p.table_radius).ceil() as usize)?)
    } else {
        None
    };
    for (i, &tau) in p.taus.iter().enumerate() {
        for (k, &xi) in p.xis.iter().enumerate() {
            let (re, im) = table.get(i, k);
            let mut row = vec![float(tau), float(xi), float(re), float(im)];
            match &gt {
                Some(gt) if xi > 0.0 => {
                    let b = mf_timedomain(gt, tau, &[xi], p.table_radius / (2.0 * xi), 16)?;
                    let e = rel_err((re, im), (b.re, b.im));
                    worst = Some(worst.map_or(e, |w| w.max(e)));
                    row.extend([float(b.re), float(b.im), float(e)]);
                }
                _ => row.extend([String::new(), String::new(), String::new()]),
            }
            csv.push(row);
        }
    }
    let pass = table.re.iter().chain(&table.im).all(|v| v.is_finite()) && worst.is_none_or(|w| w < p.tolerance);
    let result = json!({
        "table": table,
        "antisymmetry_defect": table.antisymmetry_defect(),
        "cross_check": worst.map(|w| json!({"max_rel_err": w, "tolerance": p.tolerance, "table_radius": p.table_radius})),
    });
    Ok(Outcome::new(pass, result).table(csv))
}

pub fn invertibility_check(p: &config::InvertibilityCheck) -> Res {
    let s = state(&p.state)?;
    let r = invertibility_scan(&s, &p.potential, p.dim, &p.taus, &p.xis, p.delta, p.s_nodes)?;
    let mut csv = Table::new("cases", &["item", "value", "bound", "pass"]);
    for c in &r.cases {
        csv.push(vec![c.item.clone(), float(c.value), c.bound.map(float).unwrap_or_default(), c.pass.to_string()]);
    }
    Ok(Outcome::new(r.pass, to_value(&r)).table(csv))
}

pub fn hypothesis(p: &config::HypothesisAudit) -> Res {
    let s = state(&p.state)?;
    let r = hypothesis_audit(&s, &p.potential, &p.weights, p.dim, p.s_nodes)?;
    let failing: Vec<&str> = r.items.iter().filter(|i| !i.pass).map(|i| i.item.as_str()).collect();
    let mut csv = Table::new("audit", &["item", "value", "bound", "margin", "pass"]);
    for i in &r.items {
        csv.push(vec![
            i.item.clone(),
            float(i.value),
            i.bound.map(float).unwrap_or_default(),
            i.margin.map(float).unwrap_or_default(),
            i.pass.to_string(),
        ]);
    }
    let result = json!({"audit": r, "failing": failing});
    Ok(Outcome::new(r.pass, result).table(csv))
}

/// Pass means the tail behaviour matches the regime prediction: flat inside,
/// growing outside.
pub fn strichartz_scan(p: &config::StrichartzScan) -> Res {
    let params = StrichartzParams::new(p.dim, p.alpha_tilde, p.alpha0, p.alpha1, p.alpha2);
    let (taus, xis) = if p.taus.is_empty() || p.xis.is_empty() {
        (vec![-4.0, 0.0, 0.5, 2.0, 10.0], vec![0.1, 0.5, 1.0, 3.0])
    } else {
        (p.taus.clone(), p.xis.clone())
    };
    let r = uniform_bound_scan::<f64>(&params, &taus, &xis)?;
    let pass = r.in_regime != r.growth;
    let mut csv = Table::new("profile", &["tau", "xi", "value"]);
    for q in &r.profile {
        csv.push(vec![float(q.tau), float(q.xi_abs), float(q.value)]);
    }
    let result = json!({"scan": r, "params": params, "regime_violations": params.regime_violations()});
    Ok(Outcome::new(pass, result).table(csv))
}

pub fn optimality_probe(p: &config::OptimalityProbe) -> Res {
    let r = match p.family {
        Family::Low => probe_lowfreq::<f64>(p.dim, p.alpha_tilde, &p.n_list)?,
        Family::High => {
            let (Some(a0), Some(a1), Some(a2)) = (p.alpha0, p.alpha1, p.alpha2) else {
                return Err(Error::Parameter("high-frequency family needs alpha0, alpha1 and alpha2".into()));
            };
            probe_highfreq::<f64>(&StrichartzParams::new(p.dim, p.alpha_tilde, a0, a1, a2), &p.n_list)?
        }
    };
    let mut csv = Table::new("slope", &["n", "value"]);
    for (n, v) in r.n.iter().zip(&r.value) {
        csv.push(vec![n.to_string(), float(*v)]);
    }
    Ok(Outcome::new(r.pass, to_value(&r)).table(csv))
}

/// Factorial decay for each ensemble member, plus the exact `2ⁿ` law under `V → 2V`.
pub fn wave_series(p: &config::WaveSeries, ctx: Context) -> Res {
    let g = grid(&p.grid)?;
    let mut csv = Table::new("series", &["member", "n", "norm", "bound", "ratio", "doubled_ratio_defect"]);
    let mut members = Vec::new();
    let (mut pass, mut worst_scaling) = (true, 0.0f64);
    for e in 0..p.ensemble {
        let v = PotentialTrajectory::random_bumps(g, &mut seed_stream(ctx.seed, e as u64), p.bumps, p.v_norm);
        let r = factorial_decay_report(&v, p.n_max, p.epsilon)?;
        let r2 = factorial_decay_report(&v.scaled(2.0), p.n_max, p.epsilon)?;
        let defects: Vec<f64> = r
            .rows
            .iter()
            .zip(&r2.rows)
            .map(|(a, b)| {
                let expect = a.norm * 2f64.powi(a.n as i32);
                if expect > 0.0 {
                    (b.norm - expect).abs() / expect
                } else {
                    b.norm
                }
            })
            .collect();
        for (row, d) in r.rows.iter().zip(&defects) {
            csv.push(vec![e.to_string(), row.n.to_string(), float(row.norm), float(row.bound), float(row.ratio), float(*d)]);
        }
        let scaling = defects.iter().cloned().fold(0.0, f64::max);
        worst_scaling = worst_scaling.max(scaling);
        pass &= r.pass && scaling < 1e-8;
        members.push(json!({"member": e, "report": r, "scaling_defect": scaling}));
    }
    let result = json!({"members": members, "max_scaling_defect": worst_scaling, "scaling_tolerance": 1e-8});
    Ok(Outcome::new(pass, result).table(csv))
}

fn solver_config(p: &config::Solve, ctx: Context) -> Result<SolverConfigF64, Error> {
    let mut cfg = SolverConfig::new(state(&p.state)?, p.potential.clone(), p.weights, grid(&p.grid)?);
    cfg.series_order = p.series_order;
    cfg.wave_order = p.wave_order;
    cfg.tol = p.tol;
    cfg.max_iter = p.max_iter;
    cfg.override_audit = p.override_audit || ctx.override_audit;
    cfg.validate()?;
    Ok(cfg)
}

/// `Q0` from the data preset; packets draw from stream 0 of the master seed.
pub fn initial_data(p: &config::Solve, sp: SpatialGrid<f64>, seed: u64) -> Result<DensityMatrix<f64>, Error> {
    match &p.data {
        InitialData::Zero => Ok(DensityMatrix::zeros(sp)),
        InitialData::Packets { rank, width, size } => {
            let q = random_packets(sp, &mut seed_stream(seed, 0), *rank, *width);
            let s = sobolev_hs_norm(&q, p.weights.alpha, p.weights.alpha);
            if s.is_nan() || s <= 0.0 {
                return Err(Error::Parameter("packet preset produced Q0 = 0".into()));
            }
            Ok(q.scaled(size / s))
        }
    }
}

enum Solved {
    Done(Box<SolutionRecordF64>),
    Stopped(Outcome),
}

fn solve_record(p: &config::Solve, ctx: Context) -> Result<(SolverConfigF64, Solved), Error> {
    let cfg = solver_config(p, ctx)?;
    let audit = hypothesis_audit(&cfg.state, &cfg.potential, &cfg.weights, cfg.grid.spatial().dim(), 24)?;
    if !audit.pass && !cfg.override_audit {
        let failing: Vec<&str> = audit.items.iter().filter(|i| !i.pass).map(|i| i.item.as_str()).collect();
        let result = json!({"stage": "hypothesis audit", "audit": audit, "failing": failing, "config_echo": cfg.echo()});
        return Ok((cfg, Solved::Stopped(Outcome::new(false, result))));
    }
    let q0 = initial_data(p, *cfg.grid.spatial(), ctx.seed)?;
    match picard_solve(&q0, &cfg) {
        Ok(rec) => Ok((cfg, Solved::Done(Box::new(rec)))),
        Err(e @ Error::Divergence { .. }) => {
            let data_size = sobolev_hs_norm(&q0, cfg.weights.alpha, cfg.weights.alpha);
            let result = json!({
                "stage": "picard iteration",
                "error": e.to_string(),
                "data_size": data_size,
                "smallness": cfg.smallness,
                "diagnosis": if data_size > cfg.smallness {
                    "data above the smallness threshold: outside the contraction regime"
                } else {
                    "divergence below the nominal smallness threshold: the empirical contraction radius is smaller"
                },
                "config_echo": cfg.echo(),
            });
            Ok((cfg, Solved::Stopped(Outcome::new(false, result))))
        }
        Err(e) => Err(e),
    }
}

fn iterate_table(rec: &SolutionRecordF64) -> Table {
    let mut t = Table::new("iterates", &["k", "delta", "ratio"]);
    for i in &rec.iterates {
        t.push(vec![i.k.to_string(), float(i.delta), i.ratio.map(float).unwrap_or_default()]);
    }
    t
}

fn scattering_table(tables: &[&ScatteringTable]) -> Table {
    let mut t = Table::new("scattering", &["p", "t1", "t2", "s"]);
    for s in tables {
        for r in &s.rows {
            t.push(vec![float(s.p), float(r.t1), float(r.t2), float(r.s)]);
        }
    }
    t
}

fn phi_field(rec: &SolutionRecordF64, g: &SpaceTimeGridF64) -> BinaryField {
    let sp = g.spatial();
    BinaryField {
        name: "phi".into(),
        values: rec.phi.values.iter().map(|z| (z.re, z.im)).collect(),
        sidecar: json!({
            "name": "phi",
            "dtype": "f64",
            "endianness": "little",
            "complex": "interleaved (re, im)",
            "shape": [g.nodes(), sp.len()],
            "layout": "row-major [time node j][spatial index]; spatial index is row-major over axes with axis 0 slowest",
            "grid": {"dim": sp.dim(), "n": sp.n(), "length": sp.length(), "horizon": g.horizon(), "nt": g.nt(), "dt": g.dt()},
        }),
    }
}

pub fn solve(p: &config::Solve, ctx: Context) -> Res {
    let (cfg, solved) = solve_record(p, ctx)?;
    let rec = match solved {
        Solved::Done(r) => r,
        Solved::Stopped(o) => return Ok(o),
    };
    let report = postsolve_verify(&rec, &cfg, p.extend)?;
    let summary = SolveSummary::new(&rec, &report, &cfg);
    let pass = report.verdict;
    let mut out = Outcome::new(pass, to_value(&summary))
        .table(iterate_table(&rec))
        .table(scattering_table(&[&report.scattering]));
    if p.write_field {
        out.fields.push(phi_field(&rec, &cfg.grid));
    }
    Ok(out)
}

/// Solves, then tabulates Cauchy differences of the pulled-back `Q(t)` in each
/// requested Schatten class.
pub fn scatter_check(p: &config::Solve, ctx: Context) -> Res {
    let (cfg, solved) = solve_record(p, ctx)?;
    let rec = match solved {
        Solved::Done(r) => r,
        Solved::Stopped(o) => return Ok(o),
    };
    let d = cfg.grid.spatial().dim() as f64;
    let ps = if p.schatten.is_empty() { vec![2.0 * d] } else { p.schatten.clone() };
    let tables = ps.iter().map(|&q| scattering_diagnostic(&rec.q_traj, q)).collect::<Result<Vec<_>, _>>()?;
    let trivial = rec.phi.values.iter().all(|z| z.norm() == 0.0) && tables.iter().all(|t| t.rows.iter().all(|r| r.s == 0.0));
    let pass = rec.converged && (trivial || tables.iter().all(|t| t.decreasing));
    let result = json!({
        "converged": rec.converged,
        "iterates": rec.iterates,
        "data_size": rec.data_size,
        "tables": tables,
        "trivial": trivial,
        "warnings": rec.warnings,
        "config_echo": cfg.echo(),
    });
    let mut out = Outcome::new(pass, result).table(iterate_table(&rec)).table(scattering_table(&tables.iter().collect::<Vec<_>>()));
    if p.write_field {
        out.fields.push(phi_field(&rec, &cfg.grid));
    }
    Ok(out)
}
