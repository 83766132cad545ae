//! C ABI over the `isumap` library.
//!
//! Every function returns an [`IsumapStatus`]; results go through out
//! pointers. Objects are opaque handles owned by the caller and released
//! with the matching `*_free` function. After a failure,
//! [`isumap_last_error_message`] describes it; the message belongs to the
//! calling thread and stays valid until that thread's next call.
//!
//! Infinite dissimilarities cross the boundary as IEEE `+inf`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use isumap::cli::{self, PipelineConfig, PipelineOutput};
use isumap::embed::{self, MdsConfig};
use isumap::{DissimilarityMatrix, Error, ExtendedValue, MScheme, PointCloud};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IsumapStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Disconnected = 4,
    NonFinite = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// A parsed m-scheme.
pub struct IsumapScheme(MScheme);

/// A square dissimilarity matrix.
pub struct IsumapMatrix(DissimilarityMatrix);

/// Pipeline settings.
pub struct IsumapConfig(PipelineConfig);

/// The result of a pipeline run or of embedding a matrix.
pub struct IsumapEmbedding {
    coords: Vec<[f64; 2]>,
    indices: Vec<usize>,
    stress: f64,
    iterations: usize,
    report_json: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> IsumapStatus {
    match e {
        Error::Parse(_) | Error::Csv { .. } | Error::Json(_) => IsumapStatus::Parse,
        Error::Disconnected { .. } => IsumapStatus::Disconnected,
        Error::NonFinite(_) => IsumapStatus::NonFinite,
        Error::Io(_) => IsumapStatus::Io,
        _ => IsumapStatus::InvalidArgument,
    }
}

/// Runs `f`, turning errors and panics into status codes.
fn guard<F>(f: F) -> IsumapStatus
where
    F: FnOnce() -> Result<(), (IsumapStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            IsumapStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            IsumapStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (IsumapStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (IsumapStatus, String) {
    (IsumapStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (IsumapStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (IsumapStatus::Parse, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (IsumapStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), (IsumapStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn ev(x: f64) -> Result<ExtendedValue, (IsumapStatus, String)> {
    ExtendedValue::new(x).map_err(lib_err)
}

/// Message for the last failed call on this thread; empty after a success.
#[no_mangle]
pub extern "C" fn isumap_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a scheme code (`min`, `ext`, `mv:<a>`, `mw:<c>`, `mpi:<c>`, `h`).
///
/// # Safety
/// `code` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn isumap_scheme_parse(code: *const c_char, out: *mut *mut IsumapScheme) -> IsumapStatus {
    guard(|| {
        let scheme: MScheme = str_arg(code, "code")?.parse().map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(IsumapScheme(scheme))))
    })
}

/// `M(a, b)`; arguments must lie in `[0, +inf]`.
///
/// # Safety
/// `scheme` must come from [`isumap_scheme_parse`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isumap_scheme_apply(scheme: *const IsumapScheme, a: f64, b: f64, out: *mut f64) -> IsumapStatus {
    guard(|| {
        let s = handle(scheme, "scheme")?;
        write_out(out, s.0.apply(ev(a)?, ev(b)?).get())
    })
}

/// Folds `len` values; fails on an empty input.
///
/// # Safety
/// `values` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn isumap_scheme_fold(
    scheme: *const IsumapScheme,
    values: *const f64,
    len: usize,
    out: *mut f64,
) -> IsumapStatus {
    guard(|| {
        let s = handle(scheme, "scheme")?;
        if values.is_null() && len > 0 {
            return Err(null("values"));
        }
        let slice = if len == 0 { &[][..] } else { std::slice::from_raw_parts(values, len) };
        let vals = slice.iter().map(|&x| ev(x)).collect::<Result<Vec<_>, _>>()?;
        write_out(out, s.0.fold(vals).map_err(lib_err)?.get())
    })
}

/// # Safety
/// `scheme` must be null or come from [`isumap_scheme_parse`], and not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn isumap_scheme_free(scheme: *mut IsumapScheme) {
    if !scheme.is_null() {
        drop(Box::from_raw(scheme));
    }
}

/// Copies an `n x n` row-major matrix (`+inf` allowed off the diagonal).
///
/// # Safety
/// `entries` must point to `n * n` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn isumap_matrix_new(n: usize, entries: *const f64, out: *mut *mut IsumapMatrix) -> IsumapStatus {
    guard(|| {
        let len = n.checked_mul(n).ok_or((IsumapStatus::InvalidArgument, "n too large".into()))?;
        if entries.is_null() && len > 0 {
            return Err(null("entries"));
        }
        let slice = if len == 0 { &[][..] } else { std::slice::from_raw_parts(entries, len) };
        let vals = slice.iter().map(|&x| ev(x)).collect::<Result<Vec<_>, _>>()?;
        let m = DissimilarityMatrix::new(n, vals).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(IsumapMatrix(m))))
    })
}

/// # Safety
/// `matrix` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isumap_matrix_size(matrix: *const IsumapMatrix, out: *mut usize) -> IsumapStatus {
    guard(|| write_out(out, handle(matrix, "matrix")?.0.n()))
}

/// # Safety
/// `matrix` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isumap_matrix_get(matrix: *const IsumapMatrix, i: usize, j: usize, out: *mut f64) -> IsumapStatus {
    guard(|| {
        let m = &handle(matrix, "matrix")?.0;
        let n = m.n();
        if let Some(&bad) = [i, j].iter().find(|&&x| x >= n) {
            return Err(lib_err(Error::IndexOutOfRange { index: bad, n }));
        }
        write_out(out, m.get(i, j).get())
    })
}

/// Shortest-path completion of a symmetric matrix into a new handle.
///
/// # Safety
/// `matrix` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isumap_matrix_metric_completion(
    matrix: *const IsumapMatrix,
    out: *mut *mut IsumapMatrix,
) -> IsumapStatus {
    guard(|| {
        let done = handle(matrix, "matrix")?.0.metric_completion().map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(IsumapMatrix(done))))
    })
}

/// Number of triangle violations (capped at 100) plus asymmetric pairs.
///
/// # Safety
/// `matrix` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isumap_matrix_violation_count(matrix: *const IsumapMatrix, out: *mut usize) -> IsumapStatus {
    guard(|| {
        let r = handle(matrix, "matrix")?.0.validate();
        write_out(out, r.violations.len() + r.asymmetric_pairs)
    })
}

/// # Safety
/// `matrix` must be null or come from this library, and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn isumap_matrix_free(matrix: *mut IsumapMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// Default pipeline settings.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isumap_config_default(out: *mut *mut IsumapConfig) -> IsumapStatus {
    guard(|| write_out(out, Box::into_raw(Box::new(IsumapConfig(PipelineConfig::default())))))
}

/// Settings from TOML text in the same format as the CLI config file.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isumap_config_from_toml(toml: *const c_char, out: *mut *mut IsumapConfig) -> IsumapStatus {
    guard(|| {
        let text = str_arg(toml, "toml")?;
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| (IsumapStatus::Parse, e.to_string()))?;
        cfg.validate().map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(IsumapConfig(cfg))))
    })
}

/// # Safety
/// `config` must come from this library and `scheme` be a NUL-terminated
/// scheme code.
#[no_mangle]
pub unsafe extern "C" fn isumap_config_set_scheme(config: *mut IsumapConfig, scheme: *const c_char) -> IsumapStatus {
    guard(|| {
        let cfg = config.as_mut().ok_or_else(|| null("config"))?;
        cfg.0.scheme = str_arg(scheme, "scheme")?.parse().map_err(lib_err)?;
        Ok(())
    })
}

/// # Safety
/// `config` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn isumap_config_set_k(config: *mut IsumapConfig, k: usize) -> IsumapStatus {
    guard(|| {
        let cfg = config.as_mut().ok_or_else(|| null("config"))?;
        if k == 0 {
            return Err((IsumapStatus::InvalidArgument, "k must be at least 1".into()));
        }
        cfg.0.k = k;
        Ok(())
    })
}

/// # Safety
/// `config` must be null or come from this library, and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn isumap_config_free(config: *mut IsumapConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

fn from_output(out: PipelineOutput) -> Result<IsumapEmbedding, (IsumapStatus, String)> {
    let json = serde_json::to_string(&out.report).map_err(|e| lib_err(e.into()))?;
    Ok(IsumapEmbedding {
        coords: out.embedding.coords,
        indices: out.vertices,
        stress: out.embedding.stress,
        iterations: out.embedding.iterations_used,
        report_json: CString::new(json).unwrap_or_default(),
    })
}

/// Runs the pipeline on the configured generated dataset, in memory.
///
/// # Safety
/// `config` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isumap_run(config: *const IsumapConfig, out: *mut *mut IsumapEmbedding) -> IsumapStatus {
    guard(|| {
        let cfg = &handle(config, "config")?.0;
        let result = from_output(cli::execute(cfg).map_err(lib_err)?)?;
        write_out(out, Box::into_raw(Box::new(result)))
    })
}

/// Runs the pipeline on `n` points of dimension `dim`, row-major.
///
/// # Safety
/// `coords` must point to `n * dim` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn isumap_run_points(
    config: *const IsumapConfig,
    coords: *const f64,
    n: usize,
    dim: usize,
    out: *mut *mut IsumapEmbedding,
) -> IsumapStatus {
    guard(|| {
        let cfg = &handle(config, "config")?.0;
        let len = n.checked_mul(dim).ok_or((IsumapStatus::InvalidArgument, "size overflow".into()))?;
        if coords.is_null() && len > 0 {
            return Err(null("coords"));
        }
        let slice = if len == 0 { &[][..] } else { std::slice::from_raw_parts(coords, len) };
        let points = PointCloud::new(dim, slice.to_vec(), None).map_err(lib_err)?;
        let result = from_output(cli::execute_on(cfg, points).map_err(lib_err)?)?;
        write_out(out, Box::into_raw(Box::new(result)))
    })
}

/// Classical MDS followed by SMACOF on a finite symmetric matrix.
///
/// # Safety
/// `matrix` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isumap_embed_matrix(
    matrix: *const IsumapMatrix,
    seed: u64,
    out: *mut *mut IsumapEmbedding,
) -> IsumapStatus {
    guard(|| {
        let m = &handle(matrix, "matrix")?.0;
        let cfg = MdsConfig {
            seed,
            ..MdsConfig::default()
        };
        let e = embed::embed(m, &cfg).map_err(lib_err)?;
        let result = IsumapEmbedding {
            indices: (0..m.n()).collect(),
            stress: e.stress,
            iterations: e.iterations_used,
            report_json: CString::default(),
            coords: e.coords,
        };
        write_out(out, Box::into_raw(Box::new(result)))
    })
}

/// Number of embedded points.
///
/// # Safety
/// `embedding` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isumap_embedding_len(embedding: *const IsumapEmbedding, out: *mut usize) -> IsumapStatus {
    guard(|| write_out(out, handle(embedding, "embedding")?.coords.len()))
}

/// Copies `x0, y0, x1, y1, ...` into `xy`, which holds `capacity` doubles.
///
/// # Safety
/// `xy` must point to `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn isumap_embedding_coords(
    embedding: *const IsumapEmbedding,
    xy: *mut f64,
    capacity: usize,
) -> IsumapStatus {
    guard(|| {
        let e = handle(embedding, "embedding")?;
        let need = 2 * e.coords.len();
        if capacity < need {
            return Err((IsumapStatus::BufferTooSmall, format!("need {need} doubles, got {capacity}")));
        }
        if xy.is_null() && need > 0 {
            return Err(null("xy"));
        }
        for (i, p) in e.coords.iter().enumerate() {
            *xy.add(2 * i) = p[0];
            *xy.add(2 * i + 1) = p[1];
        }
        Ok(())
    })
}

/// Copies the input index of every embedded point into `indices`.
///
/// # Safety
/// `indices` must point to `capacity` writable `size_t`s.
#[no_mangle]
pub unsafe extern "C" fn isumap_embedding_indices(
    embedding: *const IsumapEmbedding,
    indices: *mut usize,
    capacity: usize,
) -> IsumapStatus {
    guard(|| {
        let e = handle(embedding, "embedding")?;
        if capacity < e.indices.len() {
            return Err((
                IsumapStatus::BufferTooSmall,
                format!("need {} entries, got {capacity}", e.indices.len()),
            ));
        }
        if indices.is_null() && !e.indices.is_empty() {
            return Err(null("indices"));
        }
        ptr::copy_nonoverlapping(e.indices.as_ptr(), indices, e.indices.len());
        Ok(())
    })
}

/// Final raw stress and the number of SMACOF iterations.
///
/// # Safety
/// `embedding` must come from this library; out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn isumap_embedding_stress(
    embedding: *const IsumapEmbedding,
    stress: *mut f64,
    iterations: *mut usize,
) -> IsumapStatus {
    guard(|| {
        let e = handle(embedding, "embedding")?;
        write_out(stress, e.stress)?;
        write_out(iterations, e.iterations)
    })
}

/// The run report as JSON (empty for [`isumap_embed_matrix`] results).
/// Owned by the embedding; null for a null handle.
///
/// # Safety
/// `embedding` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn isumap_embedding_report_json(embedding: *const IsumapEmbedding) -> *const c_char {
    match embedding.as_ref() {
        Some(e) => e.report_json.as_ptr(),
        None => ptr::null(),
    }
}

/// # Safety
/// `embedding` must be null or come from this library, and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn isumap_embedding_free(embedding: *mut IsumapEmbedding) {
    if !embedding.is_null() {
        drop(Box::from_raw(embedding));
    }
}
