//! C interface to the coupled flow solver.
//!
//! Every function returns an [`SbnStatus`]; on failure the message is kept per
//! thread and can be copied out with [`sbn_last_error_message`]. Simulations
//! are opaque handles created by `sbn_simulation_*` constructors and released
//! with [`sbn_simulation_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use sbn_core::assembly::Assembler;
use sbn_core::cli::RunConfig;
use sbn_core::model::{pseudo_coefficients, Field, PhysicalParameters};
use sbn_core::scenario::{test1_mesh, test1_setup};
use sbn_core::timestepping::{discrete_energy, Integrator, SolutionState, Stepper};
use sbn_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Geometry = 3,
    Parse = 4,
    Sequencing = 5,
    Usage = 6,
    Solver = 7,
    Io = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbnIntegrator {
    Decoupled = 0,
    Monolithic = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbnField {
    Velocity = 0,
    FluidPressure = 1,
    Displacement = 2,
    Xi = 3,
    Flux = 4,
    Eta = 5,
    PorePressure = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SbnPseudoCoefficients {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

/// Opaque simulation handle.
pub struct SbnSimulation {
    stepper: Stepper,
    state: SolutionState,
    integrator: Integrator,
    dt: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn status_of(e: &Error) -> SbnStatus {
    match e.root() {
        Error::Parameter(_) => SbnStatus::InvalidArgument,
        Error::Geometry(_) => SbnStatus::Geometry,
        Error::Parse { .. } => SbnStatus::Parse,
        Error::Sequencing(_) => SbnStatus::Sequencing,
        Error::Usage(_) => SbnStatus::Usage,
        Error::Solver(_) => SbnStatus::Solver,
        Error::Io(_) => SbnStatus::Io,
        Error::Context { .. } => unreachable!("root strips context"),
    }
}

fn fail(status: SbnStatus, message: impl Into<String>) -> SbnStatus {
    LAST_ERROR.with(|m| *m.borrow_mut() = message.into());
    status
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), SbnStatus>) -> SbnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SbnStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(SbnStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: sbn_core::Result<T>) -> Result<T, SbnStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn sim_ref<'a>(sim: *const SbnSimulation) -> Result<&'a SbnSimulation, SbnStatus> {
    sim.as_ref().ok_or_else(|| fail(SbnStatus::NullPointer, "simulation handle is null"))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), SbnStatus> {
    if p.is_null() {
        Err(fail(SbnStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn values(sim: &SbnSimulation, field: SbnField) -> &[f64] {
    let s = &sim.state;
    match field {
        SbnField::Velocity => s.field(Field::Velocity),
        SbnField::FluidPressure => s.field(Field::FluidPressure),
        SbnField::Displacement => s.field(Field::Displacement),
        SbnField::Xi => s.field(Field::Xi),
        SbnField::Flux => s.field(Field::Flux),
        SbnField::Eta => s.field(Field::Eta),
        SbnField::PorePressure => &s.p_p,
    }
}

fn boxed(asm: Assembler, integrator: Integrator, dt: f64, out: *mut *mut SbnSimulation) {
    let stepper = Stepper::new(asm);
    let state = stepper.initial_state();
    let sim = Box::new(SbnSimulation { stepper, state, integrator, dt });
    // SAFETY: callers check `out` before building
    unsafe { *out = Box::into_raw(sim) };
}

/// Pseudo-pressure coefficients for the given Lamé parameter, storage and Biot-Willis constants.
///
/// # Safety
/// `out` must be null or point to writable memory for one struct.
#[no_mangle]
pub unsafe extern "C" fn sbn_pseudo_coefficients(
    lambda_p: f64,
    s0: f64,
    alpha: f64,
    out: *mut SbnPseudoCoefficients,
) -> SbnStatus {
    guard(|| {
        non_null(out, "out")?;
        let p = PhysicalParameters { lambda_p, s0, alpha, ..PhysicalParameters::table2() };
        let c = lift(pseudo_coefficients(&p))?;
        *out = SbnPseudoCoefficients { k1: c.k1, k2: c.k2, k3: c.k3 };
        Ok(())
    })
}

/// The manufactured-source benchmark on an `n`×`n` per-region channel.
///
/// # Safety
/// `out` must be null or point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn sbn_simulation_new_test1(
    n: u32,
    integrator: SbnIntegrator,
    dt: f64,
    out: *mut *mut SbnSimulation,
) -> SbnStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = std::ptr::null_mut();
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(fail(SbnStatus::InvalidArgument, format!("dt must be positive, got {dt}")));
        }
        let asm = lift(test1_mesh(n as usize).and_then(|m| Assembler::new(m, test1_setup())))?;
        let integrator = match integrator {
            SbnIntegrator::Decoupled => Integrator::Decoupled,
            SbnIntegrator::Monolithic => Integrator::Monolithic,
        };
        boxed(asm, integrator, dt, out);
        Ok(())
    })
}

/// Builds a simulation from an INI run configuration.
///
/// # Safety
/// `path` must be null or a NUL-terminated string; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn sbn_simulation_from_config(path: *const c_char, out: *mut *mut SbnSimulation) -> SbnStatus {
    guard(|| {
        non_null(path, "path")?;
        non_null(out, "out")?;
        *out = std::ptr::null_mut();
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| fail(SbnStatus::InvalidArgument, "path is not valid UTF-8"))?;
        let build = || -> sbn_core::Result<(Assembler, RunConfig)> {
            let cfg = RunConfig::load(Path::new(path))?;
            let mesh = cfg.mesh.build()?;
            let setup = cfg.setup_for(&mesh)?;
            Ok((Assembler::new(mesh, setup)?, cfg))
        };
        let (asm, cfg) = lift(build())?;
        boxed(asm, cfg.integrator, cfg.dt, out);
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `sim` must be null or a handle from a constructor, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sbn_simulation_free(sim: *mut SbnSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances `steps` time steps. On failure the handle keeps the last good state.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sbn_simulation_step(sim: *mut SbnSimulation, steps: u32) -> SbnStatus {
    guard(|| {
        let sim = sim.as_mut().ok_or_else(|| fail(SbnStatus::NullPointer, "simulation handle is null"))?;
        for _ in 0..steps {
            let (next, _) = lift(sim.stepper.advance(sim.integrator, &sim.state, sim.dt))?;
            sim.state = next;
        }
        Ok(())
    })
}

/// Current time and step index.
///
/// # Safety
/// `sim` must be null or a live handle; the outputs must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn sbn_simulation_time(sim: *const SbnSimulation, time: *mut f64, step: *mut u64) -> SbnStatus {
    guard(|| {
        let sim = sim_ref(sim)?;
        non_null(time, "time")?;
        non_null(step, "step")?;
        *time = sim.state.time;
        *step = sim.state.step as u64;
        Ok(())
    })
}

/// Discrete poroelastic energy of the current state.
///
/// # Safety
/// `sim` must be null or a live handle; `energy` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn sbn_simulation_energy(sim: *const SbnSimulation, energy: *mut f64) -> SbnStatus {
    guard(|| {
        let sim = sim_ref(sim)?;
        non_null(energy, "energy")?;
        *energy = discrete_energy(sim.stepper.assembler(), &sim.state);
        Ok(())
    })
}

/// Number of coefficients of `field`; vector fields interleave their components.
///
/// # Safety
/// `sim` must be null or a live handle; `len` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn sbn_simulation_field_len(sim: *const SbnSimulation, field: SbnField, len: *mut usize) -> SbnStatus {
    guard(|| {
        let sim = sim_ref(sim)?;
        non_null(len, "len")?;
        *len = values(sim, field).len();
        Ok(())
    })
}

/// Copies the coefficients of `field` into `buf`, which must hold exactly the field length.
///
/// # Safety
/// `sim` must be null or a live handle; `buf` must be null or valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sbn_simulation_field_copy(
    sim: *const SbnSimulation,
    field: SbnField,
    buf: *mut f64,
    len: usize,
) -> SbnStatus {
    guard(|| {
        let sim = sim_ref(sim)?;
        non_null(buf, "buf")?;
        let v = values(sim, field);
        if v.len() != len {
            return Err(fail(SbnStatus::InvalidArgument, format!("field has {} values, buffer holds {len}", v.len())));
        }
        std::ptr::copy_nonoverlapping(v.as_ptr(), buf, len);
        Ok(())
    })
}

/// Copies the calling thread's last error message, NUL-terminated and truncated to fit.
/// Returns the full message length excluding the terminator.
///
/// # Safety
/// `buf` must be null or valid for `cap` writes.
#[no_mangle]
pub unsafe extern "C" fn sbn_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|m| {
        let m = m.borrow();
        if !buf.is_null() && cap > 0 {
            let n = m.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(m.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        m.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sbn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
