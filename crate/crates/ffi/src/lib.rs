//! C interface to discrete Dirichlet forms: assembly of Brownian forms with a
//! chosen interface at the origin, resolvent solves and heat evolution.
//!
//! Every fallible function returns a [`StlStatus`]; on failure a message is
//! available from [`stl_last_error`] until the next failing call on the same
//! thread. Forms are opaque handles released with [`stl_form_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stifflab::assembly::FormKind;
use stifflab::evolve::{resolvent, step_heat, HeatOptions, Scheme};
use stifflab::lab::Scenario;
use stifflab::{DiscreteForm, Error, Grid, Interface};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StlStatus {
    Ok = 0,
    NullPointer = 1,
    /// Parameters or array lengths rejected by validation.
    InvalidArgument = 2,
    /// Assembly or solver breakdown.
    Numerical = 3,
    /// A Rust panic was caught at the boundary.
    Panic = 4,
}

/// Interface condition at the origin.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StlPhase {
    /// Two reflected half-lines.
    Separate = 0,
    /// Snapping-out coupling with rate `kappa`.
    Snapping = 1,
    /// No interface.
    Continuous = 2,
}

/// Opaque discrete form.
pub struct StlForm {
    inner: DiscreteForm,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> StlStatus {
    match e.exit_code() {
        2 => StlStatus::InvalidArgument,
        _ => StlStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (StlStatus, String)>) -> StlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StlStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside stifflab".into());
            StlStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (StlStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (StlStatus, String) {
    (StlStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], (StlStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn form_ref<'a>(form: *const StlForm) -> Result<&'a DiscreteForm, (StlStatus, String)> {
    form.as_ref().map(|f| &f.inner).ok_or_else(|| null("form"))
}

fn check_len(form: &DiscreteForm, n: usize) -> Result<(), (StlStatus, String)> {
    if n != form.len() {
        return Err((
            StlStatus::InvalidArgument,
            format!("array length {n} does not match the form size {}", form.len()),
        ));
    }
    Ok(())
}

fn publish(form: DiscreteForm, out: *mut *mut StlForm) {
    let boxed = Box::new(StlForm { inner: form });
    // SAFETY: callers check `out` for null before assembling.
    unsafe { *out = Box::into_raw(boxed) };
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn stl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn stl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Assemble the Brownian form on `[-half_width, half_width]` with spacing `h`.
///
/// `kappa` is used only for [`StlPhase::Snapping`].
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn stl_form_brownian(
    half_width: f64,
    h: f64,
    phase: StlPhase,
    kappa: f64,
    out: *mut *mut StlForm,
) -> StlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let interface = match phase {
            StlPhase::Separate => Interface::Separate,
            StlPhase::Snapping => Interface::Snapping { kappa },
            StlPhase::Continuous => Interface::Continuous,
        };
        if interface != Interface::Continuous {
            interface.coupling().map_err(lib_err)?;
        }
        let scenario = Scenario::brownian(half_width, h).map_err(lib_err)?;
        publish(scenario.form(interface).map_err(lib_err)?, out);
        Ok(())
    })
}

/// Build a form from nodes, dual-cell masses, `n - 1` edge conductances and
/// killing weights. A repeated `0.0` node pair marks a doubled origin.
///
/// # Safety
/// `nodes`, `mass` and `killing` must point to `n` values, `edges` to `n - 1`
/// values, and `out` to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn stl_form_from_parts(
    n: usize,
    nodes: *const f64,
    mass: *const f64,
    edges: *const f64,
    killing: *const f64,
    out: *mut *mut StlForm,
) -> StlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if n < 2 {
            return Err((StlStatus::InvalidArgument, format!("need at least 2 nodes, got {n}")));
        }
        let grid = Grid::new(slice(nodes, n, "nodes")?.to_vec()).map_err(lib_err)?;
        let form = DiscreteForm::from_parts(
            grid,
            slice(mass, n, "mass")?.to_vec(),
            slice(edges, n - 1, "edges")?.to_vec(),
            slice(killing, n, "killing")?.to_vec(),
            FormKind::Custom,
        )
        .map_err(lib_err)?;
        form.check_markov().map_err(lib_err)?;
        publish(form, out);
        Ok(())
    })
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `form` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn stl_form_len(form: *const StlForm) -> usize {
    form.as_ref().map_or(0, |f| f.inner.len())
}

/// Copy the node coordinates into `x_out` (length `n`).
///
/// # Safety
/// `form` must be a live handle and `x_out` must point to `n` writable values.
#[no_mangle]
pub unsafe extern "C" fn stl_form_nodes(form: *const StlForm, x_out: *mut f64, n: usize) -> StlStatus {
    guard(|| {
        let form = form_ref(form)?;
        check_len(form, n)?;
        if x_out.is_null() {
            return Err(null("x_out"));
        }
        std::slice::from_raw_parts_mut(x_out, n).copy_from_slice(form.grid().nodes());
        Ok(())
    })
}

/// Energy `E(u, v)`.
///
/// # Safety
/// `form` must be a live handle; `u` and `v` must point to `n` values and
/// `out` to one writable value.
#[no_mangle]
pub unsafe extern "C" fn stl_form_energy(
    form: *const StlForm,
    u: *const f64,
    v: *const f64,
    n: usize,
    out: *mut f64,
) -> StlStatus {
    guard(|| {
        let form = form_ref(form)?;
        check_len(form, n)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = form.energy(slice(u, n, "u")?, slice(v, n, "v")?);
        Ok(())
    })
}

/// Solve `(alpha M + A) u = M f` into `u_out`.
///
/// # Safety
/// `form` must be a live handle; `f` and `u_out` must point to `n` values.
#[no_mangle]
pub unsafe extern "C" fn stl_form_resolvent(
    form: *const StlForm,
    alpha: f64,
    f: *const f64,
    n: usize,
    u_out: *mut f64,
) -> StlStatus {
    guard(|| {
        let form = form_ref(form)?;
        check_len(form, n)?;
        if u_out.is_null() {
            return Err(null("u_out"));
        }
        let sol = resolvent(form, alpha, slice(f, n, "f")?).map_err(lib_err)?;
        std::slice::from_raw_parts_mut(u_out, n).copy_from_slice(&sol.solution);
        Ok(())
    })
}

/// Evolve the heat equation from `u0` to `t_end` with Crank–Nicolson steps
/// of size `dt` and write the final state to `u_out`.
///
/// # Safety
/// `form` must be a live handle; `u0` and `u_out` must point to `n` values.
#[no_mangle]
pub unsafe extern "C" fn stl_form_heat(
    form: *const StlForm,
    u0: *const f64,
    n: usize,
    dt: f64,
    t_end: f64,
    u_out: *mut f64,
) -> StlStatus {
    guard(|| {
        let form = form_ref(form)?;
        check_len(form, n)?;
        if u_out.is_null() {
            return Err(null("u_out"));
        }
        let opts = HeatOptions::new(dt, t_end, Scheme::CrankNicolson);
        let run = step_heat(form, slice(u0, n, "u0")?, &opts).map_err(lib_err)?;
        std::slice::from_raw_parts_mut(u_out, n).copy_from_slice(run.final_state());
        Ok(())
    })
}

/// Release a handle; null is ignored.
///
/// # Safety
/// `form` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stl_form_free(form: *mut StlForm) {
    if !form.is_null() {
        drop(Box::from_raw(form));
    }
}
