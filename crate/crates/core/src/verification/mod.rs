//! Error indicators against a fine-mesh reference, observed rates, and the
//! decoupled-versus-monolithic comparison.

use std::sync::Arc;

use crate::assembly::{Assembler, ProblemSetup};
use crate::error::{Error, Result};
use crate::fem::{shape_functions, AffineTriangle, DofMap};
use crate::format::g17;
use crate::mesh::{EdgeTag, Region, TriangleMesh};
use crate::parallel;
use crate::timestepping::{Integrator, SolutionState, Stepper, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorIndicators {
    /// L²(0,T; H¹(Ω_f)) error of v.
    pub eps_f: f64,
    /// L∞(0,T; H¹(Ω_p)) error of U.
    pub eps_p: f64,
    /// L²(0,T; L²(Ω_f)) error of p_f.
    pub eps_fp: f64,
    /// L²(0,T; L²(Ω_p)) error of p_p.
    pub eps_pp: f64,
}

impl ErrorIndicators {
    pub fn as_array(&self) -> [f64; 4] {
        [self.eps_f, self.eps_p, self.eps_fp, self.eps_pp]
    }
}

pub const INDICATOR_NAMES: [&str; 4] = ["eps_f", "eps_p", "eps_fp", "eps_pp"];

/// Value and physical gradient of a scalar or vector finite-element field.
fn eval_with_grad(map: &DofMap, coeffs: &[f64], geom: &AffineTriangle, t: usize, bary: [f64; 3]) -> ([f64; 2], [[f64; 2]; 2]) {
    let (phi, rg) = shape_functions(map.kind(), bary);
    let cell = map.cell(t).expect("triangle in field region");
    let nc = map.components();
    let mut val = [0.0; 2];
    let mut grad = [[0.0; 2]; 2];
    for (a, &d) in cell.iter().enumerate() {
        let g = geom.grad(rg[a]);
        for c in 0..nc {
            let x = coeffs[nc * d + c];
            val[c] += phi[a] * x;
            grad[c][0] += g[0] * x;
            grad[c][1] += g[1] * x;
        }
    }
    (val, grad)
}

/// One reference quadrature point with its location on the coarse mesh.
#[derive(Clone, Copy)]
struct Sample {
    weight: f64,
    fine: (usize, [f64; 3]),
    coarse: (usize, [f64; 3]),
}

fn transfer_table(coarse: &TriangleMesh, fine: &Assembler, region: Region) -> Result<Vec<Sample>> {
    let mesh = fine.mesh();
    let rule = fine.triangle_rule();
    let same = coarse == mesh;
    let tris: Vec<usize> = (0..mesh.triangles().len())
        .filter(|&t| mesh.triangles()[t].region == region)
        .collect();
    let per_tri = parallel::map_slice(&tris, |&t| {
        let geom = AffineTriangle::of(mesh, t);
        let mut out = Vec::with_capacity(rule.len());
        for (b, &w) in rule.points.iter().zip(&rule.weights) {
            let coarse_loc = if same {
                (t, *b)
            } else {
                let x = geom.point(*b);
                let loc = coarse
                    .locate(x, region, None)
                    .ok_or_else(|| Error::Geometry(format!("point ({}, {}) lies outside the coarse {} region", x[0], x[1], region.as_str())))?;
                (loc.triangle, loc.bary)
            };
            out.push(Sample {
                weight: w * 2.0 * geom.area,
                fine: (t, *b),
                coarse: coarse_loc,
            });
        }
        Ok::<_, Error>(out)
    });
    let mut all = Vec::new();
    for r in per_tri {
        all.extend(r?);
    }
    Ok(all)
}

/// Squared L² norm of the difference and squared L² norm of its gradient.
fn diff_sq(
    samples: &[Sample],
    coarse: (&Assembler, &DofMap, &[f64]),
    fine: (&Assembler, &DofMap, &[f64]),
) -> (f64, f64) {
    let (ca, cm, cx) = coarse;
    let (fa, fm, fx) = fine;
    let (mut l2, mut h1) = (0.0, 0.0);
    for s in samples {
        let gc = AffineTriangle::of(ca.mesh(), s.coarse.0);
        let gf = AffineTriangle::of(fa.mesh(), s.fine.0);
        let (vc, dc) = eval_with_grad(cm, cx, &gc, s.coarse.0, s.coarse.1);
        let (vf, df) = eval_with_grad(fm, fx, &gf, s.fine.0, s.fine.1);
        for c in 0..cm.components() {
            l2 += s.weight * (vc[c] - vf[c]).powi(2);
            h1 += s.weight * ((dc[c][0] - df[c][0]).powi(2) + (dc[c][1] - df[c][1]).powi(2));
        }
    }
    (l2, h1)
}

/// Compares a coarse trajectory with a reference one on the same time grid,
/// integrating over the reference mesh.
pub fn error_norms(
    coarse: (&Assembler, &Trajectory),
    reference: (&Assembler, &Trajectory),
) -> Result<ErrorIndicators> {
    let (ca, ct) = coarse;
    let (ra, rt) = reference;
    if ct.states.len() != rt.states.len() || ct.dt != rt.dt {
        return Err(Error::Usage(format!(
            "time grids differ: {} levels at dt={} against {} levels at dt={}",
            ct.states.len(),
            ct.dt,
            rt.states.len(),
            rt.dt
        )));
    }
    let fluid = transfer_table(ca.mesh(), ra, Region::Fluid)?;
    let porous = transfer_table(ca.mesh(), ra, Region::Porous)?;
    let (cs, rs) = (ca.spaces(), ra.spaces());
    let dt = ct.dt;
    let mut out = ErrorIndicators::default();
    let (mut sf, mut sfp, mut spp) = (0.0, 0.0, 0.0);
    for (c, r) in ct.states.iter().zip(&rt.states).skip(1) {
        let (l2, h1) = diff_sq(&fluid, (ca, &cs.velocity, &c.v), (ra, &rs.velocity, &r.v));
        sf += dt * (l2 + h1);
        let (l2, h1) = diff_sq(&porous, (ca, &cs.displacement, &c.u), (ra, &rs.displacement, &r.u));
        out.eps_p = out.eps_p.max((l2 + h1).sqrt());
        let (l2, _) = diff_sq(&fluid, (ca, &cs.fluid_pressure, &c.p_f), (ra, &rs.fluid_pressure, &r.p_f));
        sfp += dt * l2;
        let (l2, _) = diff_sq(&porous, (ca, &cs.pseudo, &c.p_p), (ra, &rs.pseudo, &r.p_p));
        spp += dt * l2;
    }
    out.eps_f = sf.sqrt();
    out.eps_fp = sfp.sqrt();
    out.eps_pp = spp.sqrt();
    Ok(out)
}

/// log₂(e_{i−1}/e_i) for consecutive entries.
pub fn convergence_rate(errors: &[f64]) -> Result<Vec<f64>> {
    if let Some(e) = errors.iter().find(|&&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::Usage(format!("rates need positive finite errors, got {e}")));
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

/// Rates where defined; `None` where either error is not positive.
fn rates_or_none(errors: &[f64]) -> Vec<Option<f64>> {
    errors
        .windows(2)
        .map(|w| convergence_rate(w).ok().map(|r| r[0]))
        .collect()
}

/// Mesh of a given refinement factor.
pub type MeshFamily = Arc<dyn Fn(usize) -> Result<TriangleMesh> + Send + Sync>;

#[derive(Clone)]
pub struct StudyConfig {
    pub setup: ProblemSetup,
    /// Refinement factor of each level, coarsest first.
    pub levels: Vec<usize>,
    pub reference: usize,
    pub dt: f64,
    pub t_final: f64,
    pub mesh: MeshFamily,
    pub integrator: Integrator,
}

impl std::fmt::Debug for StudyConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StudyConfig")
            .field("setup", &self.setup)
            .field("levels", &self.levels)
            .field("reference", &self.reference)
            .field("dt", &self.dt)
            .field("t_final", &self.t_final)
            .field("integrator", &self.integrator)
            .finish_non_exhaustive()
    }
}

impl StudyConfig {
    /// Levels h = √2/5 ≈ 0.28 halved three times, reference at n = 120 (h ≈ 0.012).
    pub fn table1() -> Self {
        StudyConfig {
            setup: crate::scenario::test1_setup(),
            levels: vec![5, 10, 20, 40],
            reference: 120,
            dt: crate::scenario::TEST1_DT,
            t_final: crate::scenario::TEST1_T,
            mesh: Arc::new(crate::scenario::test1_mesh),
            integrator: Integrator::Decoupled,
        }
    }

    pub fn steps(&self) -> Result<usize> {
        steps_for(self.t_final, self.dt)
    }
}

/// Number of steps of size `dt` reaching `t_final`.
pub fn steps_for(t_final: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(t_final >= dt) {
        return Err(Error::Parameter(format!("need 0 < dt <= T, got dt={dt}, T={t_final}")));
    }
    let n = (t_final / dt).round();
    if ((n * dt - t_final) / t_final).abs() > 1e-9 {
        return Err(Error::Parameter(format!("T={t_final} is not a multiple of dt={dt}")));
    }
    Ok(n as usize)
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub h: Vec<f64>,
    pub errors: Vec<ErrorIndicators>,
    /// `rates[i]` compares level i with level i−1; empty on the first level.
    pub rates: Vec<[Option<f64>; 4]>,
}

impl ConvergenceReport {
    fn new(h: Vec<f64>, errors: Vec<ErrorIndicators>) -> Self {
        let cols: Vec<Vec<Option<f64>>> = (0..4)
            .map(|k| rates_or_none(&errors.iter().map(|e| e.as_array()[k]).collect::<Vec<_>>()))
            .collect();
        let rates = (0..errors.len())
            .map(|i| {
                if i == 0 {
                    [None; 4]
                } else {
                    [cols[0][i - 1], cols[1][i - 1], cols[2][i - 1], cols[3][i - 1]]
                }
            })
            .collect();
        ConvergenceReport { h, errors, rates }
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.errors.iter().map(|e| e.as_array()[k]).collect()
    }

    pub fn rate_column(&self, k: usize) -> Vec<Option<f64>> {
        self.rates.iter().skip(1).map(|r| r[k]).collect()
    }

    pub const CSV_HEADER: &'static str = "h,eps_f,rate_f,eps_p,rate_p,eps_fp,rate_fp,eps_pp,rate_pp";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for i in 0..self.h.len() {
            s.push_str(&g17(self.h[i]));
            let e = self.errors[i].as_array();
            for k in 0..4 {
                s.push(',');
                s.push_str(&g17(e[k]));
                s.push(',');
                if let Some(r) = self.rates[i][k] {
                    s.push_str(&g17(r));
                }
            }
            s.push('\n');
        }
        s
    }
}

fn run_level(cfg: &StudyConfig, n: usize, steps: usize) -> Result<(Assembler, Trajectory)> {
    let asm = Assembler::new((cfg.mesh)(n)?, cfg.setup.clone())?;
    let mut st = Stepper::new(asm);
    let traj = st.run(cfg.integrator, st.initial_state(), cfg.dt, steps)?;
    Ok((st.into_assembler(), traj))
}

pub fn run_convergence_study(cfg: &StudyConfig) -> Result<ConvergenceReport> {
    let steps = cfg.steps()?;
    if cfg.levels.is_empty() {
        return Err(Error::Usage("convergence study needs at least one level".into()));
    }
    let finest = *cfg.levels.iter().max().unwrap();
    if cfg.reference < finest {
        return Err(Error::Parameter(format!(
            "reference resolution {} is coarser than the finest level {}",
            cfg.reference, finest
        )));
    }
    let (ra, rt) = run_level(cfg, cfg.reference, steps)
        .map_err(|e| e.context(format!("reference level n={}", cfg.reference)))?;
    log::info!("reference n={} done", cfg.reference);
    let mut h = Vec::new();
    let mut errors = Vec::new();
    for &n in &cfg.levels {
        let level = || -> Result<(f64, ErrorIndicators)> {
            let (ca, ct) = run_level(cfg, n, steps)?;
            Ok((ca.mesh().h_max(), error_norms((&ca, &ct), (&ra, &rt))?))
        };
        let (hl, e) = level().map_err(|e| e.context(format!("level n={n}")))?;
        log::info!("level n={n}: {e:?}");
        h.push(hl);
        errors.push(e);
    }
    Ok(ConvergenceReport::new(h, errors))
}

/// L² norm of one field on its region.
pub fn field_l2(asm: &Assembler, map: &DofMap, coeffs: &[f64]) -> f64 {
    let mesh = asm.mesh();
    let rule = asm.triangle_rule();
    let mut s = 0.0;
    for t in 0..mesh.triangles().len() {
        if map.cell(t).is_none() {
            continue;
        }
        let geom = AffineTriangle::of(mesh, t);
        for (b, &w) in rule.points.iter().zip(&rule.weights) {
            let (v, _) = eval_with_grad(map, coeffs, &geom, t, *b);
            s += w * 2.0 * geom.area * (v[0] * v[0] + v[1] * v[1]);
        }
    }
    s.sqrt()
}

/// Largest relative L² difference over the six unknowns.
pub fn state_discrepancy(asm: &Assembler, a: &SolutionState, b: &SolutionState) -> f64 {
    let sp = asm.spaces();
    let pairs: [(&DofMap, &[f64], &[f64]); 6] = [
        (&sp.velocity, &a.v, &b.v),
        (&sp.fluid_pressure, &a.p_f, &b.p_f),
        (&sp.displacement, &a.u, &b.u),
        (&sp.pseudo, &a.xi, &b.xi),
        (&sp.flux, &a.q, &b.q),
        (&sp.pseudo, &a.eta, &b.eta),
    ];
    pairs
        .iter()
        .map(|(m, x, y)| {
            let d: Vec<f64> = x.iter().zip(y.iter()).map(|(p, q)| p - q).collect();
            let dn = field_l2(asm, m, &d);
            let yn = field_l2(asm, m, y);
            if dn == 0.0 {
                0.0
            } else if yn > 0.0 {
                dn / yn
            } else {
                dn
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub dt: Vec<f64>,
    pub discrepancy: Vec<f64>,
    /// Least-squares slope of log(discrepancy) against log(dt).
    pub order: Option<f64>,
}

impl OracleReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("dt,discrepancy,fitted_order\n");
        for (i, (dt, d)) in self.dt.iter().zip(&self.discrepancy).enumerate() {
            let order = if i == 0 { self.order.map(g17).unwrap_or_default() } else { String::new() };
            s.push_str(&format!("{},{},{}\n", g17(*dt), g17(*d), order));
        }
        s
    }
}

/// Slope of the least-squares line through (ln x, ln y).
pub fn fit_order(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() || x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Runs both integrators to `t_final` for each Δt and compares the final states.
pub fn oracle_compare(setup: &ProblemSetup, mesh: &TriangleMesh, dt_sweep: &[f64], t_final: f64) -> Result<OracleReport> {
    if dt_sweep.is_empty() {
        return Err(Error::Usage("empty time-step sweep".into()));
    }
    if dt_sweep.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Usage("time-step sweep must be strictly decreasing".into()));
    }
    let asm = Assembler::new(mesh.clone(), setup.clone())?;
    let mut discrepancy = Vec::with_capacity(dt_sweep.len());
    for &dt in dt_sweep {
        let steps = steps_for(t_final, dt)?;
        let mut st = Stepper::new(asm.clone());
        let init = st.initial_state();
        let a = st.run(Integrator::Decoupled, init.clone(), dt, steps)?;
        let b = st.run(Integrator::Monolithic, init, dt, steps)?;
        let d = state_discrepancy(&asm, a.states.last().unwrap(), b.states.last().unwrap());
        log::info!("dt={dt}: discrepancy {d:e}");
        discrepancy.push(d);
    }
    Ok(OracleReport {
        dt: dt_sweep.to_vec(),
        order: fit_order(dt_sweep, &discrepancy),
        discrepancy,
    })
}

/// Σ_e h_e ‖D(v)n‖²_e over Γ divided by ‖D(v)‖²_{Ω_f}.
pub fn inverse_inequality_ratio(asm: &Assembler, v: &[f64]) -> f64 {
    let mesh = asm.mesh();
    let map = &asm.spaces().velocity;
    let sym = |g: [[f64; 2]; 2]| {
        let off = 0.5 * (g[0][1] + g[1][0]);
        [[g[0][0], off], [off, g[1][1]]]
    };
    let mut bulk = 0.0;
    let rule = asm.triangle_rule();
    for t in 0..mesh.triangles().len() {
        if map.cell(t).is_none() {
            continue;
        }
        let geom = AffineTriangle::of(mesh, t);
        for (b, &w) in rule.points.iter().zip(&rule.weights) {
            let d = sym(eval_with_grad(map, v, &geom, t, *b).1);
            bulk += w * 2.0 * geom.area * (d[0][0].powi(2) + 2.0 * d[0][1].powi(2) + d[1][1].powi(2));
        }
    }
    let er = asm.edge_rule();
    let mut edge = 0.0;
    for e in mesh.edges_with_tag(EdgeTag::Interface) {
        let t = e.primary.triangle;
        let geom = AffineTriangle::of(mesh, t);
        for (p, &w) in er.points.iter().zip(&er.weights) {
            let b = crate::assembly::interface::bary_on(mesh, t, e.primary.local_edge, e.vertices, p[1]);
            let d = sym(eval_with_grad(map, v, &geom, t, b).1);
            let dn = [d[0][0] * e.normal[0] + d[0][1] * e.normal[1], d[1][0] * e.normal[0] + d[1][1] * e.normal[1]];
            edge += e.length * w * e.length * (dn[0].powi(2) + dn[1].powi(2));
        }
    }
    edge / bulk
}
