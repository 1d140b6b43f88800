//! Physical constants, the pseudo-pressure change of variables, sources and
//! boundary conditions.

pub mod bc;
pub mod sources;

use crate::error::{Error, Result};

pub use bc::{boundary_set_test1, boundary_set_test2, BoundaryConditionSet, Component, Field, FluidWall, InflowPressure};
pub use sources::{test1_sources, SourceKind, SourceValues};

/// Material constants. `conductivity` is the symmetric tensor k = K / μ_f.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParameters {
    pub mu_f: f64,
    pub mu_p: f64,
    pub lambda_p: f64,
    pub s0: f64,
    pub alpha: f64,
    pub conductivity: [[f64; 2]; 2],
    pub beta: f64,
}

impl PhysicalParameters {
    /// Parameters of the manufactured-source benchmark.
    pub fn table2() -> Self {
        PhysicalParameters {
            mu_f: 0.01,
            mu_p: 1e8,
            lambda_p: 4.28e6,
            s0: 5e-6,
            alpha: 1.0,
            conductivity: scalar_tensor(1.0),
            beta: 0.0,
        }
    }

    /// Parameters of the injection scenario.
    pub fn table3() -> Self {
        PhysicalParameters {
            mu_f: 1e-3,
            mu_p: 2.92e8,
            lambda_p: 1.94e10,
            s0: 6.9e-5,
            alpha: 1.0,
            conductivity: scalar_tensor(1e-8),
            beta: 3.47e3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::Parameter(msg.into())) };
        let all = [self.mu_f, self.mu_p, self.lambda_p, self.s0, self.alpha, self.beta];
        check(all.iter().all(|v| v.is_finite()), "parameters must be finite")?;
        check(self.mu_f > 0.0, "mu_f must be positive")?;
        check(self.mu_p > 0.0, "mu_p must be positive")?;
        check(self.lambda_p >= 0.0, "lambda_p must be nonnegative")?;
        check(self.s0 > 0.0, "s0 must be positive")?;
        check(self.alpha > 0.0, "alpha must be positive")?;
        check(self.beta >= 0.0, "beta must be nonnegative")?;
        let [[a, b], [c, d]] = self.conductivity;
        check(b == c, "conductivity must be symmetric")?;
        // Both eigenvalues positive iff trace and determinant are.
        check(a + d > 0.0 && a * d - b * c > 0.0, "conductivity must be positive definite")?;
        Ok(())
    }

    /// Inverse of the conductivity tensor.
    pub fn resistivity(&self) -> Result<[[f64; 2]; 2]> {
        let [[a, b], [c, d]] = self.conductivity;
        let det = a * d - b * c;
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::Parameter("conductivity tensor is singular".into()));
        }
        Ok([[d / det, -b / det], [-c / det, a / det]])
    }
}

pub fn scalar_tensor(k: f64) -> [[f64; 2]; 2] {
    [[k, 0.0], [0.0, k]]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoPressureCoefficients {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

/// k1 = α/D, k2 = λ_p/D, k3 = s0/D with D = α² + λ_p s0.
pub fn pseudo_coefficients(params: &PhysicalParameters) -> Result<PseudoPressureCoefficients> {
    let d = params.alpha * params.alpha + params.lambda_p * params.s0;
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Parameter(format!(
            "degenerate parameters: alpha^2 + lambda_p*s0 = {d}"
        )));
    }
    Ok(PseudoPressureCoefficients {
        k1: params.alpha / d,
        k2: params.lambda_p / d,
        k3: params.s0 / d,
    })
}

/// (p, φ) to (ξ, η) with ξ = αp − λ_p φ and η = s0 p + α φ.
pub fn pseudo_from_physical(p: f64, phi: f64, params: &PhysicalParameters) -> (f64, f64) {
    (
        params.alpha * p - params.lambda_p * phi,
        params.s0 * p + params.alpha * phi,
    )
}

/// Pore pressure p_p = k1 ξ + k2 η, pointwise on coefficient vectors.
pub fn reconstruct_pressure(xi: &[f64], eta: &[f64], c: &PseudoPressureCoefficients) -> Vec<f64> {
    assert_eq!(xi.len(), eta.len(), "ξ and η must share a dof map");
    xi.iter().zip(eta).map(|(x, e)| c.k1 * x + c.k2 * e).collect()
}

/// Volumetric strain φ = k1 η − k3 ξ.
pub fn divergence_from_pseudo(xi: &[f64], eta: &[f64], c: &PseudoPressureCoefficients) -> Vec<f64> {
    assert_eq!(xi.len(), eta.len(), "ξ and η must share a dof map");
    xi.iter().zip(eta).map(|(x, e)| c.k1 * e - c.k3 * x).collect()
}

/// β = α μ_f √3 / √tr(K) with permeability K = μ_f k.
pub fn bjs_beta(params: &PhysicalParameters) -> Result<f64> {
    let k = params.conductivity;
    let trace = params.mu_f * (k[0][0] + k[1][1]);
    if !(trace > 0.0) {
        return Err(Error::Parameter(format!("permeability trace must be positive, got {trace}")));
    }
    Ok(params.alpha * params.mu_f * 3f64.sqrt() / trace.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingMode {
    /// Weak no-slip coupling on Γ.
    NitscheStar,
    /// Normal Nitsche coupling with a Beavers–Joseph–Saffman tangential law.
    BjsPlus,
    /// Every interface term dropped; the regions evolve independently.
    Uncoupled,
}

impl std::str::FromStr for CouplingMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "nitsche_star" => Ok(CouplingMode::NitscheStar),
            "bjs_plus" => Ok(CouplingMode::BjsPlus),
            "uncoupled" => Ok(CouplingMode::Uncoupled),
            other => Err(format!("unknown coupling mode `{other}` (nitsche_star, bjs_plus, uncoupled)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NitscheParameters {
    pub gamma_f: f64,
    /// Adjoint-consistency sign, one of −1, 0, 1.
    pub varsigma: f64,
    pub gamma_stab: f64,
    pub gamma_stab_prime: f64,
    pub gamma_q: f64,
    /// Interior fluid-pressure stabilization for equal-order pairs.
    pub gamma_p: f64,
    pub mode: CouplingMode,
}

impl Default for NitscheParameters {
    fn default() -> Self {
        NitscheParameters {
            gamma_f: 1500.0,
            varsigma: 1.0,
            gamma_stab: 1.0,
            gamma_stab_prime: 0.0,
            gamma_q: 1e-3,
            gamma_p: 0.0,
            mode: CouplingMode::NitscheStar,
        }
    }
}

impl NitscheParameters {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_f > 0.0) {
            return Err(Error::Parameter(format!("gamma_f must be positive, got {}", self.gamma_f)));
        }
        if ![-1.0, 0.0, 1.0].contains(&self.varsigma) {
            return Err(Error::Parameter(format!("varsigma must be -1, 0 or 1, got {}", self.varsigma)));
        }
        for (name, v) in [
            ("gamma_stab", self.gamma_stab),
            ("gamma_stab_prime", self.gamma_stab_prime),
            ("gamma_q", self.gamma_q),
            ("gamma_p", self.gamma_p),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!("{name} must be nonnegative, got {v}")));
            }
        }
        Ok(())
    }
}
