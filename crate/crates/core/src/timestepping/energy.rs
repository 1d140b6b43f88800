//! Discrete energy and the per-step stability ledger.

use crate::assembly::Assembler;
use crate::mesh::EdgeTag;

use super::{SolutionState, StepReport, Trajectory};

/// Steps above this multiple of the first nonzero energy count as blow-up.
pub const BLOW_UP_FACTOR: f64 = 1e6;
/// Constant C in the step-size condition Δt < C h.
pub const STEP_SIZE_CONSTANT: f64 = 1.0;

/// ½(2μ_p‖D(U)‖² + k3‖ξ‖² + k2‖η‖²) over the porous region.
pub fn discrete_energy(asm: &Assembler, s: &SolutionState) -> f64 {
    let (o, c) = (asm.volume(), asm.coeffs());
    0.5 * (o.a_p.quadratic_form(&s.u) + c.k3 * o.m_s.quadratic_form(&s.xi) + c.k2 * o.m_s.quadratic_form(&s.eta))
}

/// L²(Γ) norms of (v − d_tU − q)·n and (v − d_tU)·τ.
pub fn interface_mismatch(asm: &Assembler, s: &SolutionState) -> (f64, f64) {
    let mesh = asm.mesh();
    let sp = asm.spaces();
    let rule = asm.edge_rule();
    let (mut nn, mut tt) = (0.0, 0.0);
    for e in mesh.edges_with_tag(EdgeTag::Interface) {
        let Some(por) = e.secondary else { continue };
        let fl = e.primary;
        for (p, &w) in rule.points.iter().zip(&rule.weights) {
            let bf = crate::assembly::interface::bary_on(mesh, fl.triangle, fl.local_edge, e.vertices, p[1]);
            let bp = crate::assembly::interface::bary_on(mesh, por.triangle, por.local_edge, e.vertices, p[1]);
            let v = sp.velocity.eval_vector(&s.v, fl.triangle, bf);
            let du = sp.displacement.eval_vector(&s.u_rate, por.triangle, bp);
            let q = sp.flux.eval_vector(&s.q, por.triangle, bp);
            let dn = (0..2).map(|c| (v[c] - du[c] - q[c]) * e.normal[c]).sum::<f64>();
            let dt = (0..2).map(|c| (v[c] - du[c]) * e.tangent[c]).sum::<f64>();
            nn += w * e.length * dn * dn;
            tt += w * e.length * dt * dt;
        }
    }
    (nn.sqrt(), tt.sqrt())
}

/// Side conditions of the unconditional stability result, reported only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityConditions {
    pub k2_gt_k1: bool,
    pub k3_gt_k1: bool,
    pub dt_lt_ch: bool,
    pub h: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRow {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    /// 2μ_f‖D(v)‖².
    pub dissipation_v: f64,
    /// (k⁻¹q, q).
    pub dissipation_q: f64,
    pub mismatch_n: f64,
    pub mismatch_t: f64,
    /// (f,v) + ⟨p_in n, v⟩ + (g,p_f) + (s,p_p) at t_n.
    pub load: f64,
    /// Euclidean norm² of the assembled load vectors at t_n.
    pub load_norm_sq: f64,
    /// E^n + Δt Σ [dissipation + μ_f/h (mismatch_n² + mismatch_t²)].
    pub lhs: f64,
    /// E^0 + Δt Σ load_norm_sq.
    pub rhs: f64,
    /// Largest relative sub-solve residual of the step (0 for the initial level).
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger {
    pub rows: Vec<LedgerRow>,
    pub conditions: StabilityConditions,
    pub first_nonzero_energy: Option<f64>,
    /// Some step exceeded [`BLOW_UP_FACTOR`] times the first nonzero energy.
    pub blow_up: bool,
    /// Steps whose energy grew while every load vanished.
    pub unforced_growth: Vec<usize>,
}

impl EnergyLedger {
    pub fn all_finite(&self) -> bool {
        self.rows.iter().all(|r| {
            [
                r.time,
                r.energy,
                r.dissipation_v,
                r.dissipation_q,
                r.mismatch_n,
                r.mismatch_t,
                r.load,
                r.load_norm_sq,
                r.lhs,
                r.rhs,
                r.residual,
            ]
            .iter()
            .all(|x| x.is_finite())
        })
    }

    pub fn max_energy(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.energy))
    }
}

/// One ledger row for `s`, without the cumulative columns.
fn ledger_row(asm: &Assembler, s: &SolutionState, residual: f64) -> crate::Result<LedgerRow> {
    let o = asm.volume();
    let (mn, mt) = interface_mismatch(asm, s);
    let loads = asm.loads(s.time);
    let inflow = asm.inflow_load(s.time)?;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let sq = |a: &[f64]| dot(a, a);
    Ok(LedgerRow {
        step: s.step,
        time: s.time,
        energy: discrete_energy(asm, s),
        dissipation_v: o.a_f.quadratic_form(&s.v),
        dissipation_q: o.m_q.quadratic_form(&s.q),
        mismatch_n: mn,
        mismatch_t: mt,
        load: dot(&loads.f, &s.v) - dot(&inflow, &s.v) + dot(&loads.g, &s.p_f) + dot(&loads.s, &s.p_p),
        load_norm_sq: sq(&loads.f) + sq(&inflow) + sq(&loads.g) + sq(&loads.h) + sq(&loads.s),
        lhs: 0.0,
        rhs: 0.0,
        residual,
    })
}

/// Builds an [`EnergyLedger`] one level at a time, filling the cumulative columns.
#[derive(Debug)]
pub struct LedgerBuilder<'a> {
    asm: &'a Assembler,
    dt: f64,
    rows: Vec<LedgerRow>,
    dissipated: f64,
    supplied: f64,
}

impl<'a> LedgerBuilder<'a> {
    pub fn new(asm: &'a Assembler, dt: f64, initial: &SolutionState) -> crate::Result<Self> {
        let mut first = ledger_row(asm, initial, 0.0)?;
        first.lhs = first.energy;
        first.rhs = first.energy;
        Ok(LedgerBuilder { asm, dt, rows: vec![first], dissipated: 0.0, supplied: 0.0 })
    }

    /// Appends the row of a new level and returns it.
    pub fn push(&mut self, s: &SolutionState, report: &StepReport) -> crate::Result<&LedgerRow> {
        let mut r = ledger_row(self.asm, s, report.max_residual())?;
        let penalty = self.asm.params().mu_f / self.asm.mesh().h_max();
        self.dissipated += self.dt * (r.dissipation_v + r.dissipation_q + penalty * (r.mismatch_n.powi(2) + r.mismatch_t.powi(2)));
        self.supplied += self.dt * r.load_norm_sq;
        r.lhs = r.energy + self.dissipated;
        r.rhs = self.rows[0].energy + self.supplied;
        self.rows.push(r);
        Ok(self.rows.last().unwrap())
    }

    pub fn finish(self) -> EnergyLedger {
        let c = self.asm.coeffs();
        let h = self.asm.mesh().h_max();
        let rows = self.rows;
        let first_nonzero_energy = rows.iter().map(|r| r.energy).find(|&e| e > 0.0);
        let blow_up = match first_nonzero_energy {
            Some(e1) => rows.iter().any(|r| !(r.energy <= BLOW_UP_FACTOR * e1)),
            None => rows.iter().any(|r| !r.energy.is_finite()),
        };
        let unforced_growth = rows
            .windows(2)
            .filter(|w| w[1].load_norm_sq == 0.0 && w[1].energy > w[0].energy)
            .map(|w| w[1].step)
            .collect();
        EnergyLedger {
            rows,
            conditions: StabilityConditions {
                k2_gt_k1: c.k2 > c.k1,
                k3_gt_k1: c.k3 > c.k1,
                dt_lt_ch: self.dt < STEP_SIZE_CONSTANT * h,
                h,
                dt: self.dt,
            },
            first_nonzero_energy,
            blow_up,
            unforced_growth,
        }
    }
}

pub fn energy_ledger(asm: &Assembler, traj: &Trajectory) -> crate::Result<EnergyLedger> {
    let Some(first) = traj.states.first() else {
        return Err(crate::Error::Usage("empty trajectory".into()));
    };
    let mut b = LedgerBuilder::new(asm, traj.dt, first)?;
    for (s, r) in traj.states[1..].iter().zip(&traj.reports) {
        b.push(s, r)?;
    }
    Ok(b.finish())
}
