//! Time integrators: the three-step splitting and the monolithic scheme.

mod energy;

use std::collections::HashMap;

use crate::assembly::{Assembler, FieldSpaces, SubProblem, SubProblemSystem};
use crate::error::{Error, Result, SolverError};
use crate::fem::LuSolver;
use crate::model::{reconstruct_pressure, Field, PseudoPressureCoefficients};

pub use energy::{
    discrete_energy, energy_ledger, interface_mismatch, EnergyLedger, LedgerBuilder, LedgerRow, StabilityConditions,
    BLOW_UP_FACTOR, STEP_SIZE_CONSTANT,
};

/// Coefficient vectors of all unknowns at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionState {
    pub step: usize,
    pub time: f64,
    pub v: Vec<f64>,
    pub p_f: Vec<f64>,
    pub u: Vec<f64>,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub q: Vec<f64>,
    /// k1 ξ + k2 η on the pseudo-pressure dofs.
    pub p_p: Vec<f64>,
    /// (U^n − U^{n−1}) / Δt; zero at the initial level.
    pub u_rate: Vec<f64>,
}

impl SolutionState {
    pub fn zeros(spaces: &FieldSpaces, time: f64) -> Self {
        let z = |f| vec![0.0; spaces.len(f)];
        SolutionState {
            step: 0,
            time,
            v: z(Field::Velocity),
            p_f: z(Field::FluidPressure),
            u: z(Field::Displacement),
            xi: z(Field::Xi),
            eta: z(Field::Eta),
            q: z(Field::Flux),
            p_p: z(Field::Eta),
            u_rate: z(Field::Displacement),
        }
    }

    pub fn field(&self, f: Field) -> &[f64] {
        match f {
            Field::Velocity => &self.v,
            Field::FluidPressure => &self.p_f,
            Field::Displacement => &self.u,
            Field::Xi => &self.xi,
            Field::Flux => &self.q,
            Field::Eta => &self.eta,
        }
    }

    pub fn refresh_pressure(&mut self, c: &PseudoPressureCoefficients) {
        self.p_p = reconstruct_pressure(&self.xi, &self.eta, c);
    }

    pub fn is_finite(&self) -> bool {
        [&self.v, &self.p_f, &self.u, &self.xi, &self.eta, &self.q, &self.p_p, &self.u_rate]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }

    /// Largest absolute coefficient over every field.
    pub fn max_abs(&self) -> f64 {
        [&self.v, &self.p_f, &self.u, &self.xi, &self.eta, &self.q]
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Decoupled,
    Monolithic,
}

impl std::str::FromStr for Integrator {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "decoupled" => Ok(Integrator::Decoupled),
            "monolithic" => Ok(Integrator::Monolithic),
            other => Err(format!("unknown integrator `{other}` (decoupled, monolithic)")),
        }
    }
}

/// Relative residuals of the sub-solves of one step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    pub residuals: Vec<(SubProblem, f64)>,
}

impl StepReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.1))
    }
}

/// States from the initial level onwards with the report of every step.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<SolutionState>,
    /// `reports[i]` produced `states[i + 1]`.
    pub reports: Vec<StepReport>,
}

/// Owns the assembler and one cached factorization pattern per sub-problem.
#[derive(Debug)]
pub struct Stepper {
    assembler: Assembler,
    solvers: HashMap<SubProblem, LuSolver>,
}

impl Stepper {
    pub fn new(assembler: Assembler) -> Self {
        Stepper {
            assembler,
            solvers: HashMap::new(),
        }
    }

    pub fn assembler(&self) -> &Assembler {
        &self.assembler
    }

    pub fn into_assembler(self) -> Assembler {
        self.assembler
    }

    pub fn initial_state(&self) -> SolutionState {
        SolutionState::zeros(self.assembler.spaces(), 0.0)
    }

    fn solve(&mut self, sys: &SubProblemSystem, report: &mut StepReport) -> Result<Vec<f64>> {
        let solver = self.solvers.entry(sys.which).or_default();
        let sol = solver
            .solve(&sys.system)
            .map_err(|e| Error::from(e).context(format!("{} failed", sys.which.as_str())))?;
        report.residuals.push((sys.which, sol.residual));
        Ok(sol.x)
    }

    fn finish(&self, prev: &SolutionState, mut next: SolutionState, dt: f64) -> Result<SolutionState> {
        next.step = prev.step + 1;
        next.time = prev.time + dt;
        next.u_rate = next.u.iter().zip(&prev.u).map(|(a, b)| (a - b) / dt).collect();
        next.refresh_pressure(self.assembler.coeffs());
        if next.is_finite() {
            Ok(next)
        } else {
            Err(Error::from(SolverError::NonFinite).context(format!("step {}", next.step)))
        }
    }

    /// Steps 1, 2 and 3 in sequence.
    pub fn advance_decoupled(&mut self, prev: &SolutionState, dt: f64) -> Result<(SolutionState, StepReport)> {
        let mut report = StepReport::default();
        let s1 = self.assembler.assemble_step1(prev, dt)?;
        let x1 = self.solve(&s1, &mut report)?;
        let u = s1.part(&x1, Field::Displacement).to_vec();
        let xi = s1.part(&x1, Field::Xi).to_vec();

        let s2 = self.assembler.assemble_step2(prev, &xi, dt)?;
        let x2 = self.solve(&s2, &mut report)?;
        let q = s2.part(&x2, Field::Flux).to_vec();
        let eta = s2.part(&x2, Field::Eta).to_vec();

        let s3 = self.assembler.assemble_step3(prev, &u, &q, dt)?;
        let x3 = self.solve(&s3, &mut report)?;
        let next = SolutionState {
            v: s3.part(&x3, Field::Velocity).to_vec(),
            p_f: s3.part(&x3, Field::FluidPressure).to_vec(),
            u,
            xi,
            eta,
            q,
            ..prev.clone()
        };
        Ok((self.finish(prev, next, dt)?, report))
    }

    pub fn advance_monolithic(&mut self, prev: &SolutionState, dt: f64) -> Result<(SolutionState, StepReport)> {
        let mut report = StepReport::default();
        let sys = self.assembler.assemble_monolithic(prev, dt)?;
        let x = self.solve(&sys, &mut report)?;
        let part = |f| sys.part(&x, f).to_vec();
        let next = SolutionState {
            v: part(Field::Velocity),
            p_f: part(Field::FluidPressure),
            u: part(Field::Displacement),
            xi: part(Field::Xi),
            eta: part(Field::Eta),
            q: part(Field::Flux),
            ..prev.clone()
        };
        Ok((self.finish(prev, next, dt)?, report))
    }

    pub fn advance(&mut self, integrator: Integrator, prev: &SolutionState, dt: f64) -> Result<(SolutionState, StepReport)> {
        match integrator {
            Integrator::Decoupled => self.advance_decoupled(prev, dt),
            Integrator::Monolithic => self.advance_monolithic(prev, dt),
        }
    }

    /// `steps` steps from `initial`, keeping every level.
    pub fn run(&mut self, integrator: Integrator, initial: SolutionState, dt: f64, steps: usize) -> Result<Trajectory> {
        self.run_with(integrator, initial, dt, steps, |_, _| Ok(()))
    }

    /// Like [`Stepper::run`], calling `observe` after each step.
    pub fn run_with<F>(
        &mut self,
        integrator: Integrator,
        initial: SolutionState,
        dt: f64,
        steps: usize,
        mut observe: F,
    ) -> Result<Trajectory>
    where
        F: FnMut(&SolutionState, &StepReport) -> Result<()>,
    {
        let mut states = Vec::with_capacity(steps + 1);
        let mut reports = Vec::with_capacity(steps);
        states.push(initial);
        for _ in 0..steps {
            let (next, report) = self.advance(integrator, states.last().unwrap(), dt)?;
            observe(&next, &report)?;
            states.push(next);
            reports.push(report);
        }
        Ok(Trajectory { dt, states, reports })
    }
}
