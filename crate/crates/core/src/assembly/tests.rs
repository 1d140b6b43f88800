use super::*;
use crate::mesh::build_channel_mesh;
use crate::model::{boundary_set_test1, CouplingMode, FluidWall};
use crate::scenario::{test1_mesh, test1_setup};

fn setup_with(f: impl FnOnce(&mut ProblemSetup)) -> ProblemSetup {
    let mut s = test1_setup();
    f(&mut s);
    s
}

fn free(s: &mut ProblemSetup) {
    s.bc = BoundaryConditionSet::new();
}

fn asm(n: usize, setup: ProblemSetup) -> Assembler {
    Assembler::new(test1_mesh(n).unwrap(), setup).unwrap()
}

fn block(sys: &SubProblemSystem, row: Field, col: Field) -> Vec<Vec<f64>> {
    let (r, c) = (sys.layout.range(row).unwrap(), sys.layout.range(col).unwrap());
    sys.system.matrix.to_dense()[r].iter().map(|row| row[c.clone()].to_vec()).collect()
}

fn max_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Closed-form P1 mass, summed triangle by triangle.
fn p1_mass_oracle(mesh: &TriangleMesh, map: &DofMap) -> Vec<Vec<f64>> {
    let n = map.n_dofs();
    let mut m = vec![vec![0.0; n]; n];
    for t in 0..mesh.triangles().len() {
        let Some(cell) = map.cell(t) else { continue };
        let a = mesh.triangle_area(t);
        for i in 0..3 {
            for j in 0..3 {
                m[cell[i]][cell[j]] += a / 12.0 * if i == j { 2.0 } else { 1.0 };
            }
        }
    }
    m
}

/// Closed-form P1 stiffness (b_i b_j + c_i c_j)/(4A), weighted by diam².
fn p1_weighted_stiffness_oracle(mesh: &TriangleMesh, map: &DofMap) -> Vec<Vec<f64>> {
    let n = map.n_dofs();
    let mut k = vec![vec![0.0; n]; n];
    for t in 0..mesh.triangles().len() {
        let Some(cell) = map.cell(t) else { continue };
        let v = mesh.vertex_coords(t);
        let a = mesh.triangle_area(t);
        let h2 = mesh.triangle_diameter(t).powi(2);
        let b: Vec<f64> = (0..3).map(|i| v[(i + 1) % 3][1] - v[(i + 2) % 3][1]).collect();
        let c: Vec<f64> = (0..3).map(|i| v[(i + 2) % 3][0] - v[(i + 1) % 3][0]).collect();
        for i in 0..3 {
            for j in 0..3 {
                k[cell[i]][cell[j]] += h2 * (b[i] * b[j] + c[i] * c[j]) / (4.0 * a);
            }
        }
    }
    k
}

/// Closed-form P2 mass (vertices, then midpoints of edges 01, 12, 20).
fn p2_vector_mass_oracle(mesh: &TriangleMesh, map: &DofMap) -> Vec<Vec<f64>> {
    const M: [[f64; 6]; 6] = [
        [6.0, -1.0, -1.0, 0.0, -4.0, 0.0],
        [-1.0, 6.0, -1.0, 0.0, 0.0, -4.0],
        [-1.0, -1.0, 6.0, -4.0, 0.0, 0.0],
        [0.0, 0.0, -4.0, 32.0, 16.0, 16.0],
        [-4.0, 0.0, 0.0, 16.0, 32.0, 16.0],
        [0.0, -4.0, 0.0, 16.0, 16.0, 32.0],
    ];
    let n = map.n_dofs();
    let mut m = vec![vec![0.0; n]; n];
    for t in 0..mesh.triangles().len() {
        let Some(cell) = map.cell(t) else { continue };
        let a = mesh.triangle_area(t);
        for i in 0..6 {
            for j in 0..6 {
                for c in 0..2 {
                    m[2 * cell[i] + c][2 * cell[j] + c] += a / 180.0 * M[i][j];
                }
            }
        }
    }
    m
}

fn scaled(m: &[Vec<f64>], s: f64) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.iter().map(|v| v * s).collect()).collect()
}

fn pattern(m: &CsrMatrix) -> std::collections::BTreeSet<(usize, usize)> {
    (0..m.n_rows).flat_map(|i| m.row(i).map(move |(j, _)| (i, j))).collect()
}

#[test]
fn layout_offsets_tile_the_system() {
    let a = asm(2, test1_setup());
    let s = a.assemble_monolithic(&SolutionState::zeros(a.spaces(), 0.0), 0.1).unwrap();
    let mut next = 0;
    for (_, r) in s.layout.blocks() {
        assert_eq!(r.start, next);
        next = r.end;
    }
    assert_eq!(next, s.system.dim());
    assert_eq!(s.layout.blocks().len(), 6);
}

#[test]
fn xi_block_is_k3_times_p1_mass() {
    let a = asm(3, setup_with(|s| {
        free(s);
        s.nitsche.gamma_q = 0.0;
    }));
    let s = a.assemble_step1(&SolutionState::zeros(a.spaces(), 0.0), 0.1).unwrap();
    let oracle = scaled(&p1_mass_oracle(a.mesh(), &a.spaces().pseudo), a.coeffs().k3);
    let got = block(&s, Field::Xi, Field::Xi);
    assert!(max_diff(&got, &oracle) < 1e-14 * a.coeffs().k3);
}

#[test]
fn darcy_blocks_match_mass_oracles() {
    let dt = 0.25;
    let a = asm(2, setup_with(|s| {
        free(s);
        s.params.conductivity = [[2.0, 0.0], [0.0, 2.0]];
        s.nitsche.gamma_q = 0.0;
        s.nitsche.mode = CouplingMode::Uncoupled;
    }));
    let s = a.assemble_step2(&SolutionState::zeros(a.spaces(), 0.0), &vec![0.0; a.spaces().len(Field::Xi)], dt).unwrap();
    let mq = scaled(&p2_vector_mass_oracle(a.mesh(), &a.spaces().flux), 0.5);
    assert!(max_diff(&block(&s, Field::Flux, Field::Flux), &mq) < 1e-14);
    let ms = scaled(&p1_mass_oracle(a.mesh(), &a.spaces().pseudo), 1.0 / dt);
    assert!(max_diff(&block(&s, Field::Eta, Field::Eta), &ms) < 1e-13);
}

#[test]
fn pseudo_pressure_stabilization_is_weighted_stiffness() {
    let a = asm(3, setup_with(|s| s.nitsche.gamma_q = 0.7));
    let k = p1_weighted_stiffness_oracle(a.mesh(), &a.spaces().pseudo);
    let c = *a.coeffs();
    let got = a.stabilization(StabilizationKind::Xi).to_dense();
    let scale = 0.7 * c.k1;
    assert!(max_diff(&got, &scaled(&k, scale)) < 1e-13 * scale);
    let got = a.stabilization(StabilizationKind::Eta).to_dense();
    let scale = 0.7 * c.k2;
    assert!(max_diff(&got, &scaled(&k, scale)) < 1e-13 * scale);
}

#[test]
fn interface_velocity_stabilization_vanishes_without_weight() {
    let a = asm(2, test1_setup());
    assert_eq!(a.nitsche().gamma_stab_prime, 0.0);
    for kind in [StabilizationKind::FluidVelocity, StabilizationKind::Flux] {
        assert_eq!(a.stabilization(kind).max_abs(), 0.0);
    }
    assert!(a.stabilization(StabilizationKind::FluidPressure).max_abs() > 0.0);
}

#[test]
fn consistency_and_adjoint_are_transposes() {
    let mesh = build_channel_mesh(1, 1, (0.0, 1.0), 0.0, -1.0, 1.0).unwrap();
    for mode in [CouplingMode::NitscheStar, CouplingMode::BjsPlus] {
        let setup = setup_with(|s| s.nitsche.mode = mode);
        let a = Assembler::new(mesh.clone(), setup).unwrap();
        for e in a.mesh().edges_with_tag(EdgeTag::Interface) {
            let t = a.interface_terms(&e, Field::Velocity, Field::Velocity).unwrap();
            let n = t.rows.len();
            assert_eq!(t.rows, t.cols);
            for i in 0..n {
                for j in 0..n {
                    assert!((t.adjoint[i * n + j] - t.consistency[j * n + i]).abs() < 1e-12);
                }
            }
            // pressure pairing: ψ-row adjoint against the p-column consistency
            let vp = a.interface_terms(&e, Field::FluidPressure, Field::Displacement).unwrap();
            let pv = a.interface_terms(&e, Field::Displacement, Field::FluidPressure).unwrap();
            let (r, c) = (vp.rows.len(), vp.cols.len());
            for i in 0..r {
                for j in 0..c {
                    assert!((vp.consistency[i * c + j] - pv.adjoint[j * r + i]).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn zero_varsigma_removes_adjoint_consistency() {
    let a = asm(2, setup_with(|s| s.nitsche.varsigma = 0.0));
    for e in a.mesh().edges_with_tag(EdgeTag::Interface) {
        for unknown in [Field::Velocity, Field::Displacement, Field::Flux] {
            let t = a.interface_terms(&e, unknown, Field::Velocity).unwrap();
            assert!(t.adjoint.iter().all(|&v| v == 0.0));
        }
    }
}

#[test]
fn interface_terms_reject_boundary_edges_and_bulk_fields() {
    let a = asm(1, test1_setup());
    let wall = a.mesh().edges_with_tag(EdgeTag::FluidExt)[0];
    assert!(matches!(a.interface_terms(&wall, Field::Velocity, Field::Velocity), Err(Error::Usage(_))));
    let g = a.mesh().edges_with_tag(EdgeTag::Interface)[0];
    assert!(matches!(a.interface_terms(&g, Field::Eta, Field::Velocity), Err(Error::Usage(_))));
}

#[test]
fn unit_normal_mismatch_penalty_integrates_to_weight_times_length() {
    for n in [1, 2, 5] {
        let a = asm(n, test1_setup());
        let gm = a.nitsche().gamma_f * a.params().mu_f;
        // v·n = 1 with n = (0, −1)
        let v = a.spaces().velocity.interpolate_vector(|_| [0.0, -1.0]);
        let got = a.interface().pen_n[0][0].quadratic_form(&v);
        let want: f64 = a.mesh().edges_with_tag(EdgeTag::Interface).iter().map(|e| gm / e.length * e.length).sum();
        assert!((got - want).abs() < 1e-12 * want, "n={n}: {got} vs {want}");
        // per-edge weight doubles under refinement
        let e = a.mesh().edges_with_tag(EdgeTag::Interface)[0];
        let fine = asm(2 * n, test1_setup());
        let ef = fine.mesh().edges_with_tag(EdgeTag::Interface)[0];
        assert_eq!(gm / ef.length, 2.0 * (gm / e.length));
    }
}

#[test]
fn bjs_tangential_penalty_for_unit_slip_is_beta() {
    let a = asm(4, setup_with(|s| {
        s.nitsche.mode = CouplingMode::BjsPlus;
        s.params.beta = 3.25;
    }));
    let v = a.spaces().velocity.interpolate_vector(|_| [1.0, 0.0]);
    let got = a.interface().pen_t[0][0].quadratic_form(&v);
    assert!((got - 3.25).abs() < 1e-12);
}

#[test]
fn matching_traces_give_no_penalty_contribution() {
    let a = asm(2, test1_setup());
    let f = |p: [f64; 2]| [1.0 + p[0], 2.0 - 3.0 * p[0]];
    let v = a.spaces().velocity.interpolate_vector(f);
    let u = a.spaces().displacement.interpolate_vector(f);
    for e in a.mesh().edges_with_tag(EdgeTag::Interface) {
        let tv = a.interface_terms(&e, Field::Velocity, Field::Velocity).unwrap();
        let tu = a.interface_terms(&e, Field::Displacement, Field::Velocity).unwrap();
        let nc_v = tv.cols.len();
        let nc_u = tu.cols.len();
        for i in 0..tv.rows.len() {
            let r: f64 = (0..nc_v).map(|j| tv.penalty[i * nc_v + j] * v[tv.cols[j]]).sum::<f64>()
                - (0..nc_u).map(|j| tu.penalty[i * nc_u + j] * u[tu.cols[j]]).sum::<f64>();
            assert!(r.abs() < 1e-10, "{r}");
        }
    }
}

#[test]
fn step3_divergence_blocks_are_dual() {
    let a = asm(2, setup_with(|s| {
        free(s);
        s.nitsche.mode = CouplingMode::Uncoupled;
        s.nitsche.gamma_stab = 0.0;
    }));
    let st = SolutionState::zeros(a.spaces(), 0.0);
    let s = a
        .assemble_step3(&st, &st.u, &st.q, 0.1)
        .unwrap();
    let bt = block(&s, Field::Velocity, Field::FluidPressure);
    let b = block(&s, Field::FluidPressure, Field::Velocity);
    for i in 0..b.len() {
        for j in 0..bt.len() {
            assert_eq!(b[i][j], -bt[j][i]);
        }
    }
}

#[test]
fn assembly_is_deterministic() {
    let a = asm(3, test1_setup());
    let b = asm(3, test1_setup());
    let st = SolutionState::zeros(a.spaces(), 0.0);
    let x = a.assemble_monolithic(&st, 1e-3).unwrap();
    let y = b.assemble_monolithic(&st, 1e-3).unwrap();
    assert_eq!(x.system, y.system);
    let x = a.assemble_step1(&st, 1e-3).unwrap();
    let y = a.assemble_step1(&st, 1e-3).unwrap();
    assert_eq!(x.system, y.system);
}

#[test]
fn step_patterns_are_symmetric_and_rows_nonempty() {
    let a = asm(3, test1_setup());
    let st = SolutionState::zeros(a.spaces(), 0.0);
    let xi = vec![0.0; a.spaces().len(Field::Xi)];
    for s in [a.assemble_step1(&st, 1e-3).unwrap(), a.assemble_step2(&st, &xi, 1e-3).unwrap()] {
        let p = pattern(&s.system.matrix);
        assert!(p.iter().all(|&(i, j)| p.contains(&(j, i))), "{:?}", s.which);
    }
    let all = [
        a.assemble_step1(&st, 1e-3).unwrap(),
        a.assemble_step2(&st, &xi, 1e-3).unwrap(),
        a.assemble_step3(&st, &st.u, &st.q, 1e-3).unwrap(),
        a.assemble_monolithic(&st, 1e-3).unwrap(),
    ];
    for s in &all {
        assert!(s.system.matrix.empty_rows().is_empty(), "{:?}", s.which);
    }
}

#[test]
fn strong_rows_are_unit_rows_with_zero_rhs() {
    let a = asm(2, test1_setup());
    let mut st = SolutionState::zeros(a.spaces(), 0.0);
    st.time = 0.3;
    let s = a.assemble_step1(&st, 1e-3).unwrap();
    let mask = a.fixed().mask(Field::Displacement);
    assert!(mask.iter().any(|&b| b));
    let off = s.layout.range(Field::Displacement).unwrap().start;
    for (k, &fixed) in mask.iter().enumerate() {
        if fixed {
            let row: Vec<_> = s.system.matrix.row(off + k).collect();
            assert_eq!(row, vec![(off + k, 1.0)]);
            assert_eq!(s.system.rhs[off + k], 0.0);
        }
    }
}

#[test]
fn monolithic_pattern_contains_every_step_block() {
    let mesh = build_channel_mesh(1, 1, (0.0, 1.0), 0.0, -1.0, 1.0).unwrap();
    let a = Assembler::new(mesh, test1_setup()).unwrap();
    let st = SolutionState::zeros(a.spaces(), 0.0);
    let mono = a.assemble_monolithic(&st, 1e-2).unwrap();
    let pm = pattern(&mono.system.matrix);
    let xi = vec![0.0; a.spaces().len(Field::Xi)];
    for s in [
        a.assemble_step1(&st, 1e-2).unwrap(),
        a.assemble_step2(&st, &xi, 1e-2).unwrap(),
        a.assemble_step3(&st, &st.u, &st.q, 1e-2).unwrap(),
    ] {
        let to_mono = |k: usize| {
            let (f, r) = s.layout.blocks().iter().find(|(_, r)| r.contains(&k)).unwrap();
            mono.layout.range(*f).unwrap().start + (k - r.start)
        };
        for (i, j) in pattern(&s.system.matrix) {
            assert!(pm.contains(&(to_mono(i), to_mono(j))), "{:?} ({i},{j})", s.which);
        }
    }
}

#[test]
fn uncoupled_monolithic_has_no_cross_region_entries() {
    let a = asm(2, setup_with(|s| s.nitsche.mode = CouplingMode::Uncoupled));
    let st = SolutionState::zeros(a.spaces(), 0.0);
    let s = a.assemble_monolithic(&st, 1e-3).unwrap();
    let fluid = |k: usize| {
        s.layout.range(Field::Velocity).unwrap().contains(&k) || s.layout.range(Field::FluidPressure).unwrap().contains(&k)
    };
    for (i, j) in pattern(&s.system.matrix) {
        assert_eq!(fluid(i), fluid(j), "({i},{j})");
    }
}

#[test]
fn zero_data_gives_zero_systems() {
    let a = asm(2, setup_with(|s| s.sources = SourceKind::Zero));
    let st = SolutionState::zeros(a.spaces(), 0.0);
    let xi = vec![0.0; a.spaces().len(Field::Xi)];
    for s in [
        a.assemble_step1(&st, 1e-3).unwrap(),
        a.assemble_step2(&st, &xi, 1e-3).unwrap(),
        a.assemble_step3(&st, &st.u, &st.q, 1e-3).unwrap(),
        a.assemble_monolithic(&st, 1e-3).unwrap(),
    ] {
        assert!(s.system.rhs.iter().all(|&v| v == 0.0));
        let x = crate::fem::solve_sparse(&s.system).unwrap().x;
        assert!(x.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn mismatched_history_is_a_sequencing_error() {
    let a = asm(2, test1_setup());
    let st = SolutionState::zeros(a.spaces(), 0.0);
    assert!(matches!(a.assemble_step2(&st, &[1.0], 1e-3), Err(Error::Sequencing(_))));
    assert!(matches!(a.assemble_step3(&st, &st.u, &[], 1e-3), Err(Error::Sequencing(_))));
    let other = asm(3, test1_setup());
    assert!(matches!(
        other.assemble_step1(&st, 1e-3),
        Err(Error::Sequencing(_))
    ));
    assert!(matches!(a.assemble_step1(&st, 0.0), Err(Error::Parameter(_))));
}

#[test]
fn gauge_pin_only_for_enclosed_fluid_without_pressure_data() {
    let a = asm(2, test1_setup());
    assert_eq!(a.fixed().gauge, None);
    let mut bc = boundary_set_test1(FluidWall::NoSlip);
    bc.release(EdgeTag::FluidOut, Field::FluidPressure);
    let a = asm(2, setup_with(|s| s.bc = bc.clone()));
    assert!(a.fixed().gauge.is_some());
    let mut open = boundary_set_test1(FluidWall::TractionFree);
    open.release(EdgeTag::FluidOut, Field::FluidPressure);
    let a = asm(2, setup_with(|s| s.bc = open));
    assert_eq!(a.fixed().gauge, None);
}

#[test]
fn inflow_load_matches_hand_integral() {
    // p_in = 2 + y on x = 0 (normal (−1, 0)), summed against v = (1, 0): −∫_0^1 (2+y)(−1) dy = 2.5
    let mut setup = test1_setup();
    free(&mut setup);
    setup.bc.p_in = crate::model::InflowPressure::parse("2 + y").unwrap();
    let a = asm(3, setup);
    let l = a.inflow_load(0.0).unwrap();
    let v = a.spaces().velocity.interpolate_vector(|_| [1.0, 0.0]);
    let got: f64 = l.iter().zip(&v).map(|(a, b)| a * b).sum();
    assert!((got - 2.5).abs() < 1e-12, "{got}");
}
