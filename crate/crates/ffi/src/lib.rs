//! C ABI over `formlab`.
//!
//! Objects cross the boundary as opaque handles created by `formlab_*_new`
//! style constructors and released with the matching `_free`. Every fallible
//! call returns a [`FormlabStatus`]; on failure the message is available
//! from [`formlab_last_error`] on the same thread. Strings returned to the
//! caller are owned by it and must go back through [`formlab_string_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use formlab::forms::{assemble, form_bounds, EllipticCoeff};
use formlab::potential::parse_example;
use formlab::scenario::{run_scenario, Scenario, ScenarioError};
use formlab::solver::{solve_gauge, GaugeMethod};
use formlab::{Error, Mesh, Potential, Weight};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormlabStatus {
    Ok = 0,
    /// At least one scenario operation failed; the record is still returned.
    OperationFailed = 1,
    /// Malformed scenario, example id or JSON.
    InvalidConfig = 2,
    Io = 3,
    NullPointer = 4,
    InvalidArgument = 5,
    InvalidMesh = 6,
    Unsupported = 7,
    CoercivityLost = 8,
    SeriesDivergence = 9,
    SolveFailed = 10,
    NonConvergence = 11,
    /// Output buffer too short.
    BufferTooSmall = 12,
    Panic = 13,
    Other = 14,
}

/// Mesh handle.
pub struct FormlabMesh {
    inner: Arc<Mesh>,
}

/// Potential handle.
pub struct FormlabPotential {
    inner: Potential,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let text = CString::new(message.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

fn status_of(error: &Error) -> FormlabStatus {
    match error {
        Error::InvalidArgument(_) | Error::NonFinite { .. } | Error::NonzeroBoundary { .. } => {
            FormlabStatus::InvalidArgument
        }
        Error::InvalidMesh(_) | Error::InvalidField(_) => FormlabStatus::InvalidMesh,
        Error::UnknownExample(_) => FormlabStatus::InvalidConfig,
        Error::UnsupportedPotential(_) | Error::NegativePotential { .. } | Error::MollifierTooWide { .. } => {
            FormlabStatus::Unsupported
        }
        Error::CoercivityLost { .. } => FormlabStatus::CoercivityLost,
        Error::SeriesDivergence { .. } => FormlabStatus::SeriesDivergence,
        Error::Singular | Error::SolveFailed(_) | Error::EigenNonConvergence { .. } => FormlabStatus::SolveFailed,
        Error::NonConvergence { .. } => FormlabStatus::NonConvergence,
        _ => FormlabStatus::Other,
    }
}

/// Runs `body`, translating errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<FormlabStatus, (FormlabStatus, String)>) -> FormlabStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(status)) => status,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("panic inside formlab".into());
            FormlabStatus::Panic
        }
    }
}

fn fail(error: Error) -> (FormlabStatus, String) {
    (status_of(&error), error.to_string())
}

fn null(what: &str) -> (FormlabStatus, String) {
    (FormlabStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn read_str<'a>(text: *const c_char, what: &str) -> Result<&'a str, (FormlabStatus, String)> {
    if text.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(text)
        .to_str()
        .map_err(|_| (FormlabStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

fn weight(dimension: u32) -> Weight {
    if dimension <= 1 {
        Weight::Flat
    } else {
        Weight::Radial { n: dimension }
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn formlab_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn formlab_version() -> *const c_char {
    static VERSION: &str = concat!("formlab/", env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Uniform mesh of `elements` elements on `(a, b)`. `dimension` 0 or 1 gives
/// the flat measure, `n >= 2` the radial measure of `R^n`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn formlab_mesh_uniform(
    a: f64,
    b: f64,
    elements: usize,
    dimension: u32,
    out: *mut *mut FormlabMesh,
) -> FormlabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mesh = Mesh::uniform(a, b, elements, weight(dimension)).map_err(fail)?;
        *out = Box::into_raw(Box::new(FormlabMesh { inner: Arc::new(mesh) }));
        Ok(FormlabStatus::Ok)
    })
}

/// Geometrically graded mesh on `(a, b)`, `0 < a`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn formlab_mesh_geometric(
    a: f64,
    b: f64,
    elements: usize,
    dimension: u32,
    out: *mut *mut FormlabMesh,
) -> FormlabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mesh = Mesh::geometric(a, b, elements, weight(dimension)).map_err(fail)?;
        *out = Box::into_raw(Box::new(FormlabMesh { inner: Arc::new(mesh) }));
        Ok(FormlabStatus::Ok)
    })
}

/// Number of nodes, 0 for a null handle.
///
/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn formlab_mesh_node_count(mesh: *const FormlabMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.inner.node_count())
}

/// # Safety
/// `mesh` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn formlab_mesh_free(mesh: *mut FormlabMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Potential of a catalog entry, e.g. `"hardy(n=3, c=0.16)"`.
///
/// # Safety
/// `id` must be a nul-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn formlab_potential_from_example(
    id: *const c_char,
    out: *mut *mut FormlabPotential,
) -> FormlabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let example = parse_example(read_str(id, "id")?).map_err(fail)?;
        let inner = example.potential.ok_or_else(|| {
            (
                FormlabStatus::Unsupported,
                format!("`{}` has no scalar potential", example.id),
            )
        })?;
        *out = Box::into_raw(Box::new(FormlabPotential { inner }));
        Ok(FormlabStatus::Ok)
    })
}

/// Potential from its JSON record, e.g.
/// `{"kind":"atomic","atoms":[{"location":0.5,"mass":2.0}]}`.
///
/// # Safety
/// `json` must be a nul-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn formlab_potential_from_json(
    json: *const c_char,
    out: *mut *mut FormlabPotential,
) -> FormlabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner: Potential = serde_json::from_str(read_str(json, "json")?)
            .map_err(|e| (FormlabStatus::InvalidConfig, format!("potential json: {e}")))?;
        *out = Box::into_raw(Box::new(FormlabPotential { inner }));
        Ok(FormlabStatus::Ok)
    })
}

/// # Safety
/// `potential` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn formlab_potential_free(potential: *mut FormlabPotential) {
    if !potential.is_null() {
        drop(Box::from_raw(potential));
    }
}

/// Upper and lower form bounds of `potential` on `mesh` (with `A = I`).
///
/// # Safety
/// Handles must be live; `upper` and `lower` writable.
#[no_mangle]
pub unsafe extern "C" fn formlab_form_bounds(
    mesh: *const FormlabMesh,
    potential: *const FormlabPotential,
    upper: *mut f64,
    lower: *mut f64,
) -> FormlabStatus {
    guard(|| {
        let mesh = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        let potential = potential.as_ref().ok_or_else(|| null("potential"))?;
        if upper.is_null() || lower.is_null() {
            return Err(null("upper/lower"));
        }
        let mats = assemble(&mesh.inner, &EllipticCoeff::identity(), &potential.inner).map_err(fail)?;
        let bounds = form_bounds(&mats).map_err(fail)?;
        *upper = bounds.lambda_upper;
        *lower = bounds.lambda_lower;
        Ok(FormlabStatus::Ok)
    })
}

/// Gauge method selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormlabGaugeMethod {
    Fem = 0,
    NeumannSeries = 1,
    FixedPoint = 2,
}

/// Gauge `u = 1 + G(sigma u)` on the flat unit interval. Writes the nodal
/// values into `values` (length `capacity`, at least the node count) and
/// `u(1/2)` into `center`.
///
/// # Safety
/// Handles must be live; `values` must hold `capacity` doubles; `center`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn formlab_gauge(
    mesh: *const FormlabMesh,
    potential: *const FormlabPotential,
    method: FormlabGaugeMethod,
    values: *mut f64,
    capacity: usize,
    center: *mut f64,
) -> FormlabStatus {
    guard(|| {
        let mesh = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        let potential = potential.as_ref().ok_or_else(|| null("potential"))?;
        if values.is_null() || center.is_null() {
            return Err(null("values/center"));
        }
        let n = mesh.inner.node_count();
        if capacity < n {
            return Err((
                FormlabStatus::BufferTooSmall,
                format!("need {n} values, buffer holds {capacity}"),
            ));
        }
        let method = match method {
            FormlabGaugeMethod::Fem => GaugeMethod::Fem,
            FormlabGaugeMethod::NeumannSeries => GaugeMethod::NeumannSeries,
            FormlabGaugeMethod::FixedPoint => GaugeMethod::FixedPoint,
        };
        let report = solve_gauge(&potential.inner, &mesh.inner, method).map_err(fail)?;
        std::slice::from_raw_parts_mut(values, n).copy_from_slice(report.u.values());
        *center = report.center_value();
        Ok(FormlabStatus::Ok)
    })
}

/// Runs a scenario given as TOML or JSON text and hands back the run record
/// as JSON. Returns `OperationFailed` (with the record) if any operation
/// failed.
///
/// # Safety
/// `config` must be a nul-terminated string, `record` writable. Free the
/// record with [`formlab_string_free`].
#[no_mangle]
pub unsafe extern "C" fn formlab_run_scenario(config: *const c_char, record: *mut *mut c_char) -> FormlabStatus {
    guard(|| {
        if record.is_null() {
            return Err(null("record"));
        }
        let scenario_error = |e: ScenarioError| {
            let status = match e.exit_code() {
                2 => FormlabStatus::InvalidConfig,
                3 => FormlabStatus::Io,
                _ => FormlabStatus::OperationFailed,
            };
            (status, e.to_string())
        };
        let scenario = Scenario::parse(read_str(config, "config")?).map_err(scenario_error)?;
        let run = run_scenario(&scenario).map_err(scenario_error)?;
        let text = CString::new(run.to_json()).expect("json has no nul bytes");
        *record = text.into_raw();
        if run.passed() {
            Ok(FormlabStatus::Ok)
        } else {
            set_error(format!("scenario `{}` has failed operations", run.scenario));
            Ok(FormlabStatus::OperationFailed)
        }
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `text` must be null or a string from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn formlab_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}
