//! The two benchmark configurations.

use crate::assembly::{ElementPairing, ProblemSetup};
use crate::error::Result;
use crate::mesh::{apply_mapping, build_channel_mesh, test2_mapping, Region, TriangleMesh};
use crate::model::{
    boundary_set_test1, boundary_set_test2, CouplingMode, FluidWall, NitscheParameters, PhysicalParameters,
    SourceKind,
};

pub const TEST1_DT: f64 = 1e-4;
pub const TEST1_T: f64 = 1e-3;
pub const TEST2_DT: f64 = 0.1;
pub const TEST2_T: f64 = 10.0;
/// Total injection rate into the fluid region.
pub const TEST2_INJECTION: f64 = 25.0;
/// Interior fluid-pressure stabilization weight used with P1–P1.
pub const TEST2_GAMMA_P: f64 = 1e-2;

/// [0,1]×[−1,1] split at y = 0 with `n` cells per unit length.
pub fn test1_mesh(n: usize) -> Result<TriangleMesh> {
    build_channel_mesh(n, n, (0.0, 1.0), 0.0, -1.0, 1.0)
}

pub fn test1_setup() -> ProblemSetup {
    ProblemSetup {
        params: PhysicalParameters::table2(),
        nitsche: NitscheParameters::default(),
        pairing: ElementPairing::TaylorHood,
        bc: boundary_set_test1(FluidWall::NoSlip),
        sources: SourceKind::Test1,
    }
}

/// Reference rectangle [−100,100]×[−100,28] with a fluid layer above ŷ = 0,
/// pushed through the wavy-layer map.
pub fn test2_mesh(nx: usize, ny_half: usize) -> Result<TriangleMesh> {
    let reference = build_channel_mesh(nx, ny_half, (-100.0, 100.0), 0.0, -100.0, 28.0)?;
    apply_mapping(&reference, test2_mapping)
}

pub fn test2_setup(mesh: &TriangleMesh) -> ProblemSetup {
    ProblemSetup {
        params: PhysicalParameters::table3(),
        nitsche: NitscheParameters {
            gamma_f: 1500.0,
            varsigma: 1.0,
            gamma_stab: 1.0,
            gamma_stab_prime: 0.0,
            gamma_q: 1e-3,
            gamma_p: TEST2_GAMMA_P,
            mode: CouplingMode::BjsPlus,
        },
        pairing: ElementPairing::P1P1,
        bc: boundary_set_test2(),
        sources: SourceKind::Injection {
            g: TEST2_INJECTION / mesh.region_area(Region::Fluid),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn injection_integrates_to_the_total_rate() {
        let mesh = test2_mesh(8, 4).unwrap();
        let setup = test2_setup(&mesh);
        let SourceKind::Injection { g } = setup.sources else { panic!() };
        assert!((g * mesh.region_area(Region::Fluid) - TEST2_INJECTION).abs() < 1e-12);
        assert!(mesh.min_signed_area() > 0.0);
    }
}
