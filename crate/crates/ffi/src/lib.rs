//! C ABI over `rfwater`.
//!
//! Every fallible call returns an [`RfwStatus`]; on failure a message is kept
//! per thread and can be read with [`rfw_last_error_message`]. Objects cross
//! the boundary as opaque handles that the caller releases with the matching
//! `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use rfwater::dielectric::{debye_saline, saline_params_from_concentration};
use rfwater::io::config::load_scenario;
use rfwater::microstrip::{synthesize_stub_length, MicrostripLine};
use rfwater::pipeline::{Action, EventClass, EventReport, Pipeline, PipelineConfig};
use rfwater::response::{
    default_calibration, fit_exponential, invert_concentration, steady_shift, CalibrationCurve,
    ExpFit,
};
use rfwater::simulate::{simulate_scenario, FrequencyTrace};
use rfwater::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RfwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    Validity = 4,
    Synthesis = 5,
    Fit = 6,
    NoEvent = 7,
    EdgeMinimum = 8,
    Ingest = 9,
    Io = 10,
    Parse = 11,
    Panic = 12,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> RfwStatus {
    match e {
        Error::Domain(_) | Error::Config(_) => RfwStatus::InvalidArgument,
        Error::Range { .. } => RfwStatus::OutOfRange,
        Error::Validity { .. } => RfwStatus::Validity,
        Error::Synthesis { .. } => RfwStatus::Synthesis,
        Error::Fit(_) => RfwStatus::Fit,
        Error::NoEvent => RfwStatus::NoEvent,
        Error::EdgeMinimum { .. } => RfwStatus::EdgeMinimum,
        Error::Ingest(_) => RfwStatus::Ingest,
        Error::Io { .. } => RfwStatus::Io,
        Error::Parse { .. } => RfwStatus::Parse,
    }
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RfwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RfwStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("{what} is NULL"));
            RfwStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic".into());
            RfwStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure::Null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::Config("path is not valid UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rfw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rfw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Complex permittivity of NaCl solution (`eps = real - j loss`).
///
/// # Safety
/// `real` and `loss` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rfw_saline_permittivity(
    frequency_hz: f64,
    concentration_mol_per_l: f64,
    temperature_c: f64,
    real: *mut f64,
    loss: *mut f64,
) -> RfwStatus {
    guard(|| {
        let (real, loss) = (out(real, "real")?, out(loss, "loss")?);
        let p = saline_params_from_concentration(concentration_mol_per_l, temperature_c)?;
        let e = debye_saline(frequency_hz, &p)?;
        *real = e.real_part;
        *loss = e.loss_part;
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RfwLine {
    pub eps_eff: f64,
    pub z0_ohm: f64,
    pub beta_rad_per_m: f64,
    pub guided_wavelength_m: f64,
}

/// Microstrip parameters at `frequency_hz`. Lengths in metres.
///
/// # Safety
/// `line` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rfw_microstrip_line(
    width_m: f64,
    height_m: f64,
    eps_r: f64,
    frequency_hz: f64,
    line: *mut RfwLine,
) -> RfwStatus {
    guard(|| {
        let line = out(line, "line")?;
        let l = MicrostripLine::new(width_m, height_m, eps_r)?;
        *line = RfwLine {
            eps_eff: l.eps_eff,
            z0_ohm: l.z0,
            beta_rad_per_m: l.beta(frequency_hz)?,
            guided_wavelength_m: l.guided_wavelength(frequency_hz)?,
        };
        Ok(())
    })
}

/// Open-stub length presenting `capacitance_f` at `frequency_hz`.
///
/// # Safety
/// `length_m` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rfw_synthesize_stub_length(
    capacitance_f: f64,
    frequency_hz: f64,
    width_m: f64,
    height_m: f64,
    eps_r: f64,
    length_m: *mut f64,
) -> RfwStatus {
    guard(|| {
        let length_m = out(length_m, "length_m")?;
        let line = MicrostripLine::new(width_m, height_m, eps_r)?;
        *length_m = synthesize_stub_length(capacitance_f, frequency_hz, &line)?;
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RfwExpFit {
    pub a: f64,
    pub b: f64,
    pub residual_rms: f64,
    pub rate_identifiable: bool,
}

impl From<ExpFit> for RfwExpFit {
    fn from(f: ExpFit) -> Self {
        Self {
            a: f.a,
            b: f.b,
            residual_rms: f.residual_rms,
            rate_identifiable: f.rate_identifiable,
        }
    }
}

/// Fits `y = a (1 - exp(-b v))` to `n` samples.
///
/// # Safety
/// `volume` and `shift` must point to `n` readable doubles; `fit` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rfw_fit_exponential(
    volume: *const f64,
    shift: *const f64,
    n: usize,
    fit: *mut RfwExpFit,
) -> RfwStatus {
    guard(|| {
        let fit = out(fit, "fit")?;
        if volume.is_null() || shift.is_null() {
            return Err(Failure::Null("volume/shift"));
        }
        let v = std::slice::from_raw_parts(volume, n);
        let y = std::slice::from_raw_parts(shift, n);
        let samples: Vec<(f64, f64)> = v.iter().copied().zip(y.iter().copied()).collect();
        *fit = fit_exponential(&samples)?.into();
        Ok(())
    })
}

/// Concentration ↔ shift calibration curve.
pub struct RfwCalibration(CalibrationCurve);

/// Built-in model-derived curve.
///
/// # Safety
/// `cal` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rfw_calibration_default(cal: *mut *mut RfwCalibration) -> RfwStatus {
    guard(|| {
        *out(cal, "cal")? = Box::into_raw(Box::new(RfwCalibration(default_calibration())));
        Ok(())
    })
}

/// Reads a `concentration_mol_per_l,shift_hz` CSV.
///
/// # Safety
/// `path` must be a NUL-terminated string; `cal` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rfw_calibration_read_csv(
    path: *const c_char,
    cal: *mut *mut RfwCalibration,
) -> RfwStatus {
    guard(|| {
        let cal = out(cal, "cal")?;
        let curve = CalibrationCurve::read_csv(&path_arg(path)?)?;
        *cal = Box::into_raw(Box::new(RfwCalibration(curve)));
        Ok(())
    })
}

/// # Safety
/// `cal` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rfw_calibration_free(cal: *mut RfwCalibration) {
    if !cal.is_null() {
        drop(Box::from_raw(cal));
    }
}

/// # Safety
/// `cal` must be a live handle; `shift_hz` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rfw_steady_shift(
    cal: *const RfwCalibration,
    concentration_mol_per_l: f64,
    shift_hz: *mut f64,
) -> RfwStatus {
    guard(|| {
        let cal = cal.as_ref().ok_or(Failure::Null("cal"))?;
        *out(shift_hz, "shift_hz")? = steady_shift(concentration_mol_per_l, &cal.0)?;
        Ok(())
    })
}

/// # Safety
/// `cal` must be a live handle; `concentration_mol_per_l` must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn rfw_invert_concentration(
    cal: *const RfwCalibration,
    shift_hz: f64,
    concentration_mol_per_l: *mut f64,
) -> RfwStatus {
    guard(|| {
        let cal = cal.as_ref().ok_or(Failure::Null("cal"))?;
        *out(concentration_mol_per_l, "concentration_mol_per_l")? =
            invert_concentration(shift_hz, &cal.0)?;
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RfwEventClass {
    Solid = 0,
    Liquid = 1,
    None = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RfwAction {
    Flush = 0,
    Analyze = 1,
    Idle = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RfwReport {
    pub time_s: f64,
    pub event_class: RfwEventClass,
    pub band_peak_hz_per_s: f64,
    /// NaN unless `has_concentration`.
    pub concentration_mol_per_l: f64,
    pub has_concentration: bool,
    /// Meaningful only when `has_fit`.
    pub fit: RfwExpFit,
    pub has_fit: bool,
    pub action: RfwAction,
}

impl From<EventReport> for RfwReport {
    fn from(r: EventReport) -> Self {
        Self {
            time_s: r.time,
            event_class: match r.class {
                EventClass::Solid => RfwEventClass::Solid,
                EventClass::Liquid => RfwEventClass::Liquid,
                EventClass::None => RfwEventClass::None,
            },
            band_peak_hz_per_s: r.band_peak_magnitude,
            concentration_mol_per_l: r.concentration.unwrap_or(f64::NAN),
            has_concentration: r.concentration.is_some(),
            fit: r.fit.map(Into::into).unwrap_or_default(),
            has_fit: r.fit.is_some(),
            action: match r.action {
                Action::Flush => RfwAction::Flush,
                Action::Analyze => RfwAction::Analyze,
                Action::Idle => RfwAction::Idle,
            },
        }
    }
}

/// Streaming detector. Feed samples from one thread at a time.
pub struct RfwPipeline(Pipeline);

/// Detector with default settings for the given sample period. `cal` may be
/// NULL for the built-in calibration; it is copied, not retained.
///
/// # Safety
/// `cal` must be NULL or a live handle; `pipeline` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rfw_pipeline_new(
    cal: *const RfwCalibration,
    sample_period_s: f64,
    pipeline: *mut *mut RfwPipeline,
) -> RfwStatus {
    guard(|| {
        let pipeline = out(pipeline, "pipeline")?;
        let mut cfg = PipelineConfig {
            sample_period: sample_period_s,
            ..Default::default()
        };
        if let Some(c) = cal.as_ref() {
            cfg.calibration = c.0.clone();
        }
        *pipeline = Box::into_raw(Box::new(RfwPipeline(Pipeline::new(cfg)?)));
        Ok(())
    })
}

/// Feeds one sample. `*has_report` tells whether `*report` was filled.
///
/// # Safety
/// `pipeline` must be a live handle; `report` and `has_report` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn rfw_pipeline_push(
    pipeline: *mut RfwPipeline,
    time_s: f64,
    frequency_hz: f64,
    report: *mut RfwReport,
    has_report: *mut bool,
) -> RfwStatus {
    guard(|| {
        let p = out(pipeline, "pipeline")?;
        let (report, has_report) = (out(report, "report")?, out(has_report, "has_report")?);
        *has_report = false;
        if let Some(r) = p.0.push(time_s, frequency_hz)? {
            *report = r.into();
            *has_report = true;
        }
        Ok(())
    })
}

/// Ends the stream; may yield a final report.
///
/// # Safety
/// As for [`rfw_pipeline_push`].
#[no_mangle]
pub unsafe extern "C" fn rfw_pipeline_finish(
    pipeline: *mut RfwPipeline,
    report: *mut RfwReport,
    has_report: *mut bool,
) -> RfwStatus {
    guard(|| {
        let p = out(pipeline, "pipeline")?;
        let (report, has_report) = (out(report, "report")?, out(has_report, "has_report")?);
        *has_report = false;
        if let Some(r) = p.0.finish() {
            *report = r.into();
            *has_report = true;
        }
        Ok(())
    })
}

/// # Safety
/// `pipeline` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rfw_pipeline_free(pipeline: *mut RfwPipeline) {
    if !pipeline.is_null() {
        drop(Box::from_raw(pipeline));
    }
}

/// Uniformly sampled resonance trace.
pub struct RfwTrace(FrequencyTrace);

/// Simulates a TOML scenario file. When `override_seed` is true, `seed`
/// replaces the file's seed.
///
/// # Safety
/// `path` must be a NUL-terminated string; `trace` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rfw_simulate_file(
    path: *const c_char,
    seed: u64,
    override_seed: bool,
    trace: *mut *mut RfwTrace,
) -> RfwStatus {
    guard(|| {
        let trace = out(trace, "trace")?;
        let mut sc = load_scenario(&path_arg(path)?)?;
        if override_seed {
            sc.config.seed = seed;
        }
        *trace = Box::into_raw(Box::new(RfwTrace(simulate_scenario(&sc.config)?)));
        Ok(())
    })
}

/// Number of samples; 0 for NULL.
///
/// # Safety
/// `trace` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rfw_trace_len(trace: *const RfwTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.len())
}

/// # Safety
/// `trace` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rfw_trace_sample_period(trace: *const RfwTrace) -> f64 {
    trace.as_ref().map_or(f64::NAN, |t| t.0.sample_period)
}

/// # Safety
/// `trace` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rfw_trace_start_time(trace: *const RfwTrace) -> f64 {
    trace.as_ref().map_or(f64::NAN, |t| t.0.start_time)
}

/// Borrowed pointer to `rfw_trace_len` samples in Hz, valid until the trace
/// is freed.
///
/// # Safety
/// `trace` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rfw_trace_data(trace: *const RfwTrace) -> *const f64 {
    trace.as_ref().map_or(ptr::null(), |t| t.0.samples.as_ptr())
}

/// # Safety
/// `trace` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rfw_trace_free(trace: *mut RfwTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}
