//! C interface to the edgelab simulator.
//!
//! Objects are opaque handles created by `*_new` functions and released with
//! the matching `*_free`. Every fallible call returns an [`EdgelabStatus`];
//! the message of the last failure on the calling thread is available from
//! [`edgelab_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use edgelab::dirac::{evolve, Control, DiracOperator, EvolutionConfig, SpinorField};
use edgelab::grid::Grid2D;
use edgelab::profile::Profile;
use edgelab::snapshot::{write_heatmap, write_snapshot};
use edgelab::straight::{ballistic_on_grid, StraightWall};
use edgelab::transport::{Hierarchy, HierarchySettings};
use edgelab::{DomainWall, EdgeError};
use num_complex::Complex64;

/// Result codes of the C interface.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgelabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Resolution = 4,
    Geometry = 5,
    Solver = 6,
    Io = 7,
    Format = 8,
    Panic = 9,
}

pub struct EdgelabGrid {
    inner: Grid2D,
}

pub struct EdgelabWall {
    inner: DomainWall,
}

pub struct EdgelabField {
    inner: SpinorField,
}

pub struct EdgelabOperator {
    inner: DiracOperator,
}

pub struct EdgelabHierarchy {
    inner: Hierarchy,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &EdgeError) -> EdgelabStatus {
    match e {
        EdgeError::InvalidParameter(_) | EdgeError::EmptySamples => EdgelabStatus::InvalidArgument,
        EdgeError::Config(_) => EdgelabStatus::Config,
        EdgeError::Resolution(_) => EdgelabStatus::Resolution,
        EdgeError::SingularPoint { .. }
        | EdgeError::Transversality { .. }
        | EdgeError::ProjectionFailed { .. }
        | EdgeError::OutsideTrajectory { .. } => EdgelabStatus::Geometry,
        EdgeError::KrylovDivergence { .. }
        | EdgeError::NormDrift { .. }
        | EdgeError::Solvability { .. }
        | EdgeError::Truncation { .. }
        | EdgeError::FitDegenerate { .. } => EdgelabStatus::Solver,
        EdgeError::Io(_) => EdgelabStatus::Io,
        EdgeError::Format(_) => EdgelabStatus::Format,
    }
}

fn fail(status: EdgelabStatus, msg: impl Into<String>) -> EdgelabStatus {
    set_error(msg.into());
    status
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), EdgelabStatus>) -> EdgelabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EdgelabStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(EdgelabStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: edgelab::Result<T>) -> Result<T, EdgelabStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, EdgelabStatus> {
    p.as_ref()
        .ok_or_else(|| fail(EdgelabStatus::NullPointer, "null handle"))
}

unsafe fn deref_mut<'a, T>(p: *mut T) -> Result<&'a mut T, EdgelabStatus> {
    p.as_mut()
        .ok_or_else(|| fail(EdgelabStatus::NullPointer, "null handle"))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), EdgelabStatus> {
    if out.is_null() {
        return Err(fail(EdgelabStatus::NullPointer, "null output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, EdgelabStatus> {
    if p.is_null() {
        return Err(fail(EdgelabStatus::NullPointer, "null path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| fail(EdgelabStatus::InvalidArgument, "path is not UTF-8"))
}

unsafe fn free_box<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn edgelab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn edgelab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Periodic grid on `[-l1, l1) x [-l2, l2)`; sizes must be powers of two.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn edgelab_grid_new(
    n1: usize,
    n2: usize,
    l1: f64,
    l2: f64,
    out: *mut *mut EdgelabGrid,
) -> EdgelabStatus {
    guard(|| {
        let inner = lift(Grid2D::new(n1, n2, l1, l2))?;
        store(out, EdgelabGrid { inner })
    })
}

/// # Safety
/// `grid` must be NULL or a handle from [`edgelab_grid_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn edgelab_grid_free(grid: *mut EdgelabGrid) {
    free_box(grid)
}

/// Number of grid points, 0 for a NULL handle.
///
/// # Safety
/// `grid` must be NULL or a live grid handle.
#[no_mangle]
pub unsafe extern "C" fn edgelab_grid_len(grid: *const EdgelabGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.inner.len())
}

/// Domain wall by family name (`linear`, `tanh`, `circle`, ...) and
/// parameter list, as in config files.
///
/// # Safety
/// `family` must be a NUL-terminated string, `params` must point to
/// `n_params` doubles (or be NULL when `n_params` is 0), `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edgelab_wall_new(
    family: *const c_char,
    params: *const f64,
    n_params: usize,
    out: *mut *mut EdgelabWall,
) -> EdgelabStatus {
    guard(|| {
        if family.is_null() || (params.is_null() && n_params > 0) {
            return Err(fail(EdgelabStatus::NullPointer, "null argument"));
        }
        let name = CStr::from_ptr(family)
            .to_str()
            .map_err(|_| fail(EdgelabStatus::InvalidArgument, "family is not UTF-8"))?;
        let p = if n_params == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(params, n_params)
        };
        let inner = lift(DomainWall::from_spec(name, p))?;
        store(out, EdgelabWall { inner })
    })
}

/// # Safety
/// `wall` must be NULL or a live wall handle.
#[no_mangle]
pub unsafe extern "C" fn edgelab_wall_free(wall: *mut EdgelabWall) {
    free_box(wall)
}

/// Evaluate `kappa` at `(x1, x2)`.
///
/// # Safety
/// `wall` must be a live wall handle and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn edgelab_wall_value(
    wall: *const EdgelabWall,
    x1: f64,
    x2: f64,
    value: *mut f64,
) -> EdgelabStatus {
    guard(|| {
        let w = deref(wall)?;
        let v = deref_mut(value)?;
        *v = lift(w.inner.value([x1, x2]))?;
        Ok(())
    })
}

/// Zero field on `grid` at time 0.
///
/// # Safety
/// `grid` must be a live grid handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn edgelab_field_zeros(grid: *const EdgelabGrid, out: *mut *mut EdgelabField) -> EdgelabStatus {
    guard(|| {
        let g = deref(grid)?;
        store(
            out,
            EdgelabField {
                inner: SpinorField::zeros(&g.inner),
            },
        )
    })
}

/// Ballistic edge wave of the straight wall with angle `theta` and slope `r`,
/// Gaussian profile, at time `t`.
///
/// # Safety
/// `grid` must be a live grid handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn edgelab_field_ballistic(
    grid: *const EdgelabGrid,
    theta: f64,
    r: f64,
    epsilon: f64,
    t: f64,
    out: *mut *mut EdgelabField,
) -> EdgelabStatus {
    guard(|| {
        let g = deref(grid)?;
        let w = lift(StraightWall::new(theta, r, epsilon))?;
        let psi = ballistic_on_grid(&w, &Profile::gaussian(), t, &g.inner);
        let inner = lift(SpinorField::from_components(&g.inner, psi, t))?;
        store(out, EdgelabField { inner })
    })
}

/// # Safety
/// `field` must be NULL or a live field handle.
#[no_mangle]
pub unsafe extern "C" fn edgelab_field_free(field: *mut EdgelabField) {
    free_box(field)
}

/// Copy one component (`0` or `1`) into `out` as interleaved `re, im`
/// pairs; `out` must hold `2 * len` doubles where `len` is the grid size.
///
/// # Safety
/// `field` must be a live field handle and `out` must point to `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn edgelab_field_get(
    field: *const EdgelabField,
    component: u32,
    out: *mut f64,
    out_len: usize,
) -> EdgelabStatus {
    guard(|| {
        let f = deref(field)?;
        let comp = f
            .inner
            .psi
            .get(component as usize)
            .ok_or_else(|| fail(EdgelabStatus::InvalidArgument, "component must be 0 or 1"))?;
        if out.is_null() {
            return Err(fail(EdgelabStatus::NullPointer, "null buffer"));
        }
        if out_len != 2 * comp.len() {
            return Err(fail(
                EdgelabStatus::InvalidArgument,
                format!("buffer must hold {} doubles", 2 * comp.len()),
            ));
        }
        let dst = std::slice::from_raw_parts_mut(out, out_len);
        for (d, v) in dst.chunks_exact_mut(2).zip(comp) {
            d[0] = v.re;
            d[1] = v.im;
        }
        Ok(())
    })
}

/// Overwrite one component from interleaved `re, im` pairs.
///
/// # Safety
/// `field` must be a live field handle and `data` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn edgelab_field_set(
    field: *mut EdgelabField,
    component: u32,
    data: *const f64,
    len: usize,
) -> EdgelabStatus {
    guard(|| {
        let f = deref_mut(field)?;
        let comp = f
            .inner
            .psi
            .get_mut(component as usize)
            .ok_or_else(|| fail(EdgelabStatus::InvalidArgument, "component must be 0 or 1"))?;
        if data.is_null() {
            return Err(fail(EdgelabStatus::NullPointer, "null buffer"));
        }
        if len != 2 * comp.len() {
            return Err(fail(
                EdgelabStatus::InvalidArgument,
                format!("buffer must hold {} doubles", 2 * comp.len()),
            ));
        }
        let src = std::slice::from_raw_parts(data, len);
        if src.iter().any(|x| !x.is_finite()) {
            return Err(fail(EdgelabStatus::InvalidArgument, "data must be finite"));
        }
        for (v, s) in comp.iter_mut().zip(src.chunks_exact(2)) {
            *v = Complex64::new(s[0], s[1]);
        }
        Ok(())
    })
}

/// L2 norm of the field, NaN for a NULL handle.
///
/// # Safety
/// `field` must be NULL or a live field handle.
#[no_mangle]
pub unsafe extern "C" fn edgelab_field_norm(field: *const EdgelabField) -> f64 {
    field.as_ref().map_or(f64::NAN, |f| f.inner.norm())
}

/// Time stamp of the field, NaN for a NULL handle.
///
/// # Safety
/// `field` must be NULL or a live field handle.
#[no_mangle]
pub unsafe extern "C" fn edgelab_field_time(field: *const EdgelabField) -> f64 {
    field.as_ref().map_or(f64::NAN, |f| f.inner.time)
}

/// L2 distance between two fields on the same grid.
///
/// # Safety
/// `a`, `b` must be live field handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn edgelab_field_distance(
    a: *const EdgelabField,
    b: *const EdgelabField,
    out: *mut f64,
) -> EdgelabStatus {
    guard(|| {
        let (a, b, o) = (deref(a)?, deref(b)?, deref_mut(out)?);
        if a.inner.grid.len() != b.inner.grid.len() {
            return Err(fail(EdgelabStatus::InvalidArgument, "fields live on different grids"));
        }
        *o = a.inner.distance(&b.inner);
        Ok(())
    })
}

/// Write the field as a binary snapshot.
///
/// # Safety
/// `field` must be a live field handle, `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn edgelab_field_write_snapshot(
    field: *const EdgelabField,
    epsilon: f64,
    path: *const c_char,
) -> EdgelabStatus {
    guard(|| {
        let f = deref(field)?;
        lift(write_snapshot(path_arg(path)?, &f.inner, epsilon))
    })
}

/// Write the density as a 16-bit PGM heatmap.
///
/// # Safety
/// `field` must be a live field handle, `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn edgelab_field_write_heatmap(field: *const EdgelabField, path: *const c_char) -> EdgelabStatus {
    guard(|| {
        let f = deref(field)?;
        lift(write_heatmap(path_arg(path)?, &f.inner).map(|_| ()))
    })
}

/// Dirac operator with mass `kappa` sampled from `wall` on `grid`.
///
/// # Safety
/// `grid`, `wall` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn edgelab_operator_new(
    grid: *const EdgelabGrid,
    wall: *const EdgelabWall,
    epsilon: f64,
    out: *mut *mut EdgelabOperator,
) -> EdgelabStatus {
    guard(|| {
        let (g, w) = (deref(grid)?, deref(wall)?);
        let inner = lift(DiracOperator::new(&g.inner, &w.inner, epsilon))?;
        store(out, EdgelabOperator { inner })
    })
}

/// # Safety
/// `op` must be NULL or a live operator handle.
#[no_mangle]
pub unsafe extern "C" fn edgelab_operator_free(op: *mut EdgelabOperator) {
    free_box(op)
}

/// `out = H input`; `out` must be a field on the same grid.
///
/// # Safety
/// All handles must be live; `input` and `out` may not alias.
#[no_mangle]
pub unsafe extern "C" fn edgelab_operator_apply(
    op: *const EdgelabOperator,
    input: *const EdgelabField,
    out: *mut EdgelabField,
) -> EdgelabStatus {
    guard(|| {
        let (o, i, dst) = (deref(op)?, deref(input)?, deref_mut(out)?);
        if i.inner.grid.len() != o.inner.grid.len() || dst.inner.grid.len() != o.inner.grid.len() {
            return Err(fail(EdgelabStatus::InvalidArgument, "field and operator grids differ"));
        }
        dst.inner = o.inner.apply(&i.inner);
        Ok(())
    })
}

/// Advance `field` in place by Crank-Nicolson over `duration` with step
/// `dt` (`dt <= 0` selects `epsilon / 20`). The largest relative norm drift
/// is stored in `max_drift` when non-NULL.
///
/// # Safety
/// `op`, `field` must be live handles; `max_drift` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn edgelab_evolve(
    op: *const EdgelabOperator,
    field: *mut EdgelabField,
    dt: f64,
    duration: f64,
    max_drift: *mut f64,
) -> EdgelabStatus {
    guard(|| {
        let (o, f) = (deref(op)?, deref_mut(field)?);
        if f.inner.grid.len() != o.inner.grid.len() {
            return Err(fail(EdgelabStatus::InvalidArgument, "field and operator grids differ"));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(fail(EdgelabStatus::InvalidArgument, "duration must be positive"));
        }
        let mut cfg = EvolutionConfig::new(o.inner.epsilon);
        if dt > 0.0 {
            cfg.dt = dt;
        }
        let t0 = f.inner.time;
        let mut summary = lift(evolve(&f.inner, &o.inner, &cfg, duration, 0, |_, _| {
            Ok(Control::Continue)
        }))?;
        summary.final_field.time += t0;
        f.inner = summary.final_field;
        if let Some(d) = max_drift.as_mut() {
            *d = summary.max_drift;
        }
        Ok(())
    })
}

/// Amplitude hierarchy along the interface trajectory from `(y1, y2)` with
/// Gaussian leading profile, valid for `t` in `[0, t_max]`.
///
/// # Safety
/// `wall` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn edgelab_hierarchy_new(
    wall: *const EdgelabWall,
    y1: f64,
    y2: f64,
    t_max: f64,
    max_order: u32,
    out: *mut *mut EdgelabHierarchy,
) -> EdgelabStatus {
    guard(|| {
        let w = deref(wall)?;
        let inner = lift(Hierarchy::new(
            &w.inner,
            [y1, y2],
            &Profile::gaussian(),
            t_max,
            max_order as usize,
            HierarchySettings::default(),
        ))?;
        store(out, EdgelabHierarchy { inner })
    })
}

/// # Safety
/// `h` must be NULL or a live hierarchy handle.
#[no_mangle]
pub unsafe extern "C" fn edgelab_hierarchy_free(h: *mut EdgelabHierarchy) {
    free_box(h)
}

/// Ansatz of the given order at time `t`, sampled on `grid`.
///
/// # Safety
/// `h`, `grid` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn edgelab_hierarchy_sample(
    h: *const EdgelabHierarchy,
    t: f64,
    order: u32,
    epsilon: f64,
    grid: *const EdgelabGrid,
    out: *mut *mut EdgelabField,
) -> EdgelabStatus {
    guard(|| {
        let (h, g) = (deref(h)?, deref(grid)?);
        let psi = lift(h.inner.sample(t, order as usize, epsilon, &g.inner))?;
        let inner = lift(SpinorField::from_components(&g.inner, psi, t))?;
        store(out, EdgelabField { inner })
    })
}
