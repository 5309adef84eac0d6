//! C ABI over `latdisp`.
//!
//! Grids and fields cross the boundary as opaque handles created by
//! `ld_*_new` functions and released with the matching `ld_*_free`. Every
//! call returns an [`LdStatus`]; on failure `ld_last_error_message` describes
//! the most recent error on the calling thread. Complex arrays are
//! interleaved `(re, im)` doubles in row-major site order.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use latdisp::continuum::{discretize, ContinuumFunction};
use latdisp::lattice::{lp_norm, sobolev_norm, ComplexField, LatticeGrid, SobolevKind};
use latdisp::littlewood_paley::{project, DyadicScale};
use latdisp::oscillatory::{eval_k_unit, QuadratureSpec};
use latdisp::solvers::{linear_propagate, solve_final, FlowKind, NonlinearityParams};
use latdisp::Error;
use num_complex::Complex64;

/// Result codes; `LD_STATUS_OK` is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidGrid = 3,
    SizeMismatch = 4,
    GridMismatch = 5,
    NonFinite = 6,
    QuadratureUnconverged = 7,
    QuadratureBudget = 8,
    NanDetected = 9,
    ReferenceUnconverged = 10,
    Format = 11,
    Io = 12,
    Json = 13,
    Panic = 14,
}

/// Which bilaplacian drives a flow.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LdFlowKind {
    Discrete = 0,
    Continuum = 1,
}

impl From<LdFlowKind> for FlowKind {
    fn from(k: LdFlowKind) -> Self {
        match k {
            LdFlowKind::Discrete => FlowKind::Discrete,
            LdFlowKind::Continuum => FlowKind::Continuum,
        }
    }
}

/// Opaque lattice grid.
pub struct LdGrid(LatticeGrid);

/// Opaque complex field on a grid.
pub struct LdField(ComplexField);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> LdStatus {
    match e {
        Error::InvalidGrid(_) => LdStatus::InvalidGrid,
        Error::InvalidArgument(_) => LdStatus::InvalidArgument,
        Error::SizeMismatch { .. } => LdStatus::SizeMismatch,
        Error::GridMismatch(_) => LdStatus::GridMismatch,
        Error::NonFinite(_) => LdStatus::NonFinite,
        Error::QuadratureUnconverged { .. } => LdStatus::QuadratureUnconverged,
        Error::QuadratureBudget { .. } => LdStatus::QuadratureBudget,
        Error::NanDetected { .. } => LdStatus::NanDetected,
        Error::ReferenceUnconverged { .. } => LdStatus::ReferenceUnconverged,
        Error::Format(_) => LdStatus::Format,
        Error::Io(_) => LdStatus::Io,
        Error::Json(_) => LdStatus::Json,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LdStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer passed for `{what}`"));
            LdStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            LdStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn write_out<T>(out: *mut T, what: &'static str, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(value);
    Ok(())
}

fn boxed_field(f: ComplexField) -> *mut LdField {
    Box::into_raw(Box::new(LdField(f)))
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ld_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn ld_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(c) => c,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Grid with `points^dim` sites of spacing `mesh`.
#[no_mangle]
pub unsafe extern "C" fn ld_grid_new(dim: usize, points: usize, mesh: f64, out: *mut *mut LdGrid) -> LdStatus {
    guard(|| {
        let g = LatticeGrid::new(dim, points, mesh)?;
        write_out(out, "out", Box::into_raw(Box::new(LdGrid(g))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn ld_grid_free(grid: *mut LdGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of sites.
#[no_mangle]
pub unsafe extern "C" fn ld_grid_len(grid: *const LdGrid, out: *mut usize) -> LdStatus {
    guard(|| write_out(out, "out", deref(grid, "grid")?.0.len()))
}

/// Field from `2 * len` interleaved doubles, `len` equal to the site count.
#[no_mangle]
pub unsafe extern "C" fn ld_field_new(
    grid: *const LdGrid,
    values: *const f64,
    len: usize,
    out: *mut *mut LdField,
) -> LdStatus {
    guard(|| {
        let g = deref(grid, "grid")?.0;
        if values.is_null() {
            return Err(Failure::Null("values"));
        }
        if len != g.len() {
            return Err(Error::SizeMismatch {
                expected: g.len(),
                actual: len,
            }
            .into());
        }
        let raw = std::slice::from_raw_parts(values, 2 * len);
        let v = raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
        write_out(out, "out", boxed_field(ComplexField::new(g, v)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn ld_field_free(field: *mut LdField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Copies the values into `2 * len` interleaved doubles.
#[no_mangle]
pub unsafe extern "C" fn ld_field_values(field: *const LdField, out: *mut f64, len: usize) -> LdStatus {
    guard(|| {
        let f = &deref(field, "field")?.0;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        if len != f.grid().len() {
            return Err(Error::SizeMismatch {
                expected: f.grid().len(),
                actual: len,
            }
            .into());
        }
        let dst = std::slice::from_raw_parts_mut(out, 2 * len);
        for (d, v) in dst.chunks_exact_mut(2).zip(f.values()) {
            d[0] = v.re;
            d[1] = v.im;
        }
        Ok(())
    })
}

/// Cell averages of `amplitude * exp(-|z - center|^2 / width^2)` (periodized)
/// on a 2D grid.
#[no_mangle]
pub unsafe extern "C" fn ld_field_gaussian(
    grid: *const LdGrid,
    center_x: f64,
    center_y: f64,
    width: f64,
    amplitude_re: f64,
    amplitude_im: f64,
    out: *mut *mut LdField,
) -> LdStatus {
    guard(|| {
        let g = deref(grid, "grid")?.0;
        let f = ContinuumFunction::gaussian(vec![center_x, center_y], width, Complex64::new(amplitude_re, amplitude_im));
        write_out(out, "out", boxed_field(discretize(&f, &g)?))
    })
}

/// Lattice `L^p` norm; `p` may be `INFINITY`.
#[no_mangle]
pub unsafe extern "C" fn ld_lp_norm(field: *const LdField, p: f64, out: *mut f64) -> LdStatus {
    guard(|| write_out(out, "out", lp_norm(&deref(field, "field")?.0, p)?))
}

/// Inhomogeneous Sobolev norm of order `s` with the continuum multiplier
/// (`discrete_op = 0`) or the lattice one (`discrete_op != 0`).
#[no_mangle]
pub unsafe extern "C" fn ld_sobolev_norm(field: *const LdField, s: f64, discrete_op: i32, out: *mut f64) -> LdStatus {
    guard(|| {
        let kind = if discrete_op != 0 { SobolevKind::H_DISCRETE } else { SobolevKind::H };
        write_out(out, "out", sobolev_norm(&deref(field, "field")?.0, s, kind)?)
    })
}

/// Littlewood-Paley piece at scale `N = 2^-k`.
#[no_mangle]
pub unsafe extern "C" fn ld_project(field: *const LdField, k: u32, out: *mut *mut LdField) -> LdStatus {
    guard(|| {
        let f = &deref(field, "field")?.0;
        write_out(out, "out", boxed_field(project(f, DyadicScale::from_exponent(k))))
    })
}

/// Exact linear flow to time `t`.
#[no_mangle]
pub unsafe extern "C" fn ld_linear_propagate(
    field: *const LdField,
    t: f64,
    kind: LdFlowKind,
    out: *mut *mut LdField,
) -> LdStatus {
    guard(|| {
        let f = &deref(field, "field")?.0;
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("time must be finite, got {t}")).into());
        }
        write_out(out, "out", boxed_field(linear_propagate(f, t, kind.into())))
    })
}

/// Strang-split nonlinear flow to `final_time` with step `step`.
#[no_mangle]
pub unsafe extern "C" fn ld_solve(
    field: *const LdField,
    final_time: f64,
    step: f64,
    lambda: f64,
    p: f64,
    kind: LdFlowKind,
    out: *mut *mut LdField,
) -> LdStatus {
    guard(|| {
        let f = &deref(field, "field")?.0;
        let params = NonlinearityParams::new(lambda, p)?;
        write_out(out, "out", boxed_field(solve_final(f, final_time, step, &params, kind.into())?))
    })
}

/// `sup_y |K_{N,1}(y, s)|` for `N = 2^-k`, with the accepted quadrature size.
#[no_mangle]
pub unsafe extern "C" fn ld_kernel_sup(
    k: u32,
    s: f64,
    tol: f64,
    max_points: usize,
    out_sup: *mut f64,
    out_points: *mut usize,
) -> LdStatus {
    guard(|| {
        let spec = QuadratureSpec {
            tol,
            max_points,
            ..QuadratureSpec::default()
        };
        let kernel = eval_k_unit(DyadicScale::from_exponent(k), s, &spec)?;
        write_out(out_sup, "out_sup", kernel.sup_abs())?;
        if !out_points.is_null() {
            out_points.write(kernel.points());
        }
        Ok(())
    })
}

/// Writes `field` as a binary snapshot at `path`.
#[no_mangle]
pub unsafe extern "C" fn ld_snapshot_write(field: *const LdField, time: f64, path: *const c_char) -> LdStatus {
    guard(|| {
        let f = &deref(field, "field")?.0;
        if path.is_null() {
            return Err(Failure::Null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Error::InvalidArgument("path is not UTF-8".into()))?;
        let file = std::fs::File::create(path).map_err(Error::from)?;
        latdisp::lattice::snapshot::write_snapshot(std::io::BufWriter::new(file), f, time)?;
        Ok(())
    })
}
