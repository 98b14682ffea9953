//! C ABI for chainavail.
//!
//! Every function returns a [`CaStatus`]; results go through out-pointers.
//! Objects are opaque handles released with the matching `*_free`. After a
//! failure, [`ca_last_error_message`] describes it on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use chainavail::arch::{
    build_multi_server_rbd_from, build_node_rbd, build_server_rbd, build_service_spn,
    evaluate_service, FailRepair, ServiceSpnParams,
};
use chainavail::coa::{coa_closed_form, cts_probability, CoaParams};
use chainavail::cost::{annual_energy_cost, PoweredComponent};
use chainavail::rbd::{eval_availability, AvailabilityResult, ComponentSpec};
use chainavail::scenario::Scenario;
use chainavail::sim::{simulate, SimConfig};
use chainavail::spn::{eval_metric, reachability, steady_state, Ctmc, MetricExpr, SpnModel};
use chainavail::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Structural = 4,
    Domain = 5,
    Numerical = 6,
    Overflow = 7,
    Livelock = 8,
    Reducible = 9,
    NotEnabled = 10,
    UndefinedIndex = 11,
    Io = 12,
    Panic = 13,
}

impl From<&Error> for CaStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Structural { .. } => CaStatus::Structural,
            Error::Domain(_) => CaStatus::Domain,
            Error::StateOverflow { .. } => CaStatus::Overflow,
            Error::Livelock { .. } => CaStatus::Livelock,
            Error::Reducible { .. } => CaStatus::Reducible,
            Error::Numerical { .. } => CaStatus::Numerical,
            Error::NotEnabled(_) => CaStatus::NotEnabled,
            Error::UndefinedIndex(_) => CaStatus::UndefinedIndex,
            Error::Parse { .. } => CaStatus::Parse,
            Error::Io(_) => CaStatus::Io,
        }
    }
}

/// Steady-state measures of one model layer.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CaAvailability {
    pub availability: f64,
    pub unavailability: f64,
    /// Hours per year.
    pub downtime: f64,
    pub mttf: f64,
    pub mttr: f64,
    pub nines: f64,
}

impl From<&AvailabilityResult> for CaAvailability {
    fn from(r: &AvailabilityResult) -> Self {
        CaAvailability {
            availability: r.availability,
            unavailability: r.unavailability,
            downtime: r.downtime,
            mttf: r.mttf,
            mttr: r.mttr,
            nines: r.nines,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CaStackResult {
    pub server: CaAvailability,
    pub node: CaAvailability,
    pub service: CaAvailability,
    pub multi_server: CaAvailability,
}

/// Parsed scenario file.
pub struct CaScenario {
    inner: Scenario,
}

/// Stochastic Petri net.
pub struct CaSpn {
    inner: SpnModel,
}

/// Solved steady state of a net.
pub struct CaSolution {
    model: SpnModel,
    ctmc: Ctmc,
    pi: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(CaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(CaStatus::from(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            CaStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            CaStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CaStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or a valid NUL-terminated string.
unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CaStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

/// # Safety
/// `p` must be null or valid for writes.
unsafe fn put<T>(p: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

/// # Safety
/// `p` must be null or point to a live `T`.
unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message describing the last failure on this thread; empty after a
/// success. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ca_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ca_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Steady-state availability `mttf / (mttf + mttr)` of one component.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ca_component_availability(mttf: f64, mttr: f64, out: *mut f64) -> CaStatus {
    guard(|| {
        let a = ComponentSpec::new("component", mttf, mttr)?.availability();
        put(out, a, "out")
    })
}

/// Parses scenario text into a new handle.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ca_scenario_parse(text: *const c_char, out: *mut *mut CaScenario) -> CaStatus {
    guard(|| {
        let s = Scenario::parse(str_arg(text, "text")?)?;
        put(out, Box::into_raw(Box::new(CaScenario { inner: s })), "out")
    })
}

/// Reads and parses a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ca_scenario_load(path: *const c_char, out: *mut *mut CaScenario) -> CaStatus {
    guard(|| {
        let (s, _) = Scenario::load(Path::new(str_arg(path, "path")?))?;
        put(out, Box::into_raw(Box::new(CaScenario { inner: s })), "out")
    })
}

/// Number of validation diagnostics; the first one, if any, becomes the
/// last error message.
///
/// # Safety
/// `scenario` must be a live handle and `count` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ca_scenario_validate(scenario: *const CaScenario, count: *mut usize) -> CaStatus {
    let mut first = None;
    let status = guard(|| {
        let d = get(scenario, "scenario")?.inner.validate();
        first = d.first().map(|e| e.to_string());
        put(count, d.len(), "count")
    });
    if let Some(msg) = first {
        set_last_error(&msg);
    }
    status
}

/// Evaluates the server, node, service and multi-server layers.
///
/// # Safety
/// `scenario` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ca_scenario_stack_eval(scenario: *const CaScenario, out: *mut CaStackResult) -> CaStatus {
    guard(|| {
        let sc = &get(scenario, "scenario")?.inner;
        let p = sc.stack_params()?;
        let server = eval_availability(&build_server_rbd(&p))?;
        let node = eval_availability(&build_node_rbd(&p))?;
        let service = evaluate_service(&ServiceSpnParams {
            boot_node_dependency: p.boot_node_dependency,
            ..ServiceSpnParams::new(FailRepair::from(&server), FailRepair::from(&node), p.n_miners)
        })?;
        let per_server = ComponentSpec {
            name: "server".into(),
            mttf: service.mttf,
            mttr: service.mttr,
        };
        let multi = eval_availability(&build_multi_server_rbd_from(&per_server, p.n_servers)?)?;
        let r = CaStackResult {
            server: (&server).into(),
            node: (&node).into(),
            service: (&service).into(),
            multi_server: (&multi).into(),
        };
        put(out, r, "out")
    })
}

/// # Safety
/// `scenario` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ca_scenario_free(scenario: *mut CaScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Service net with the given server and node timing, in hours.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ca_service_spn_new(
    server_mttf: f64,
    server_mttr: f64,
    node_mttf: f64,
    node_mttr: f64,
    n_miners: u32,
    out: *mut *mut CaSpn,
) -> CaStatus {
    guard(|| {
        let params = ServiceSpnParams::new(
            FailRepair::new(server_mttf, server_mttr),
            FailRepair::new(node_mttf, node_mttr),
            n_miners,
        );
        let net = build_service_spn(&params)?;
        put(out, Box::into_raw(Box::new(CaSpn { inner: net })), "out")
    })
}

/// Net declared under `[spn.<name>]` in the scenario.
///
/// # Safety
/// `scenario` must be a live handle, `name` a NUL-terminated string and
/// `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ca_scenario_net(
    scenario: *const CaScenario,
    name: *const c_char,
    out: *mut *mut CaSpn,
) -> CaStatus {
    guard(|| {
        let (net, _) = get(scenario, "scenario")?.inner.net(str_arg(name, "name")?)?;
        put(out, Box::into_raw(Box::new(CaSpn { inner: net })), "out")
    })
}

/// # Safety
/// `spn` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ca_spn_place_count(spn: *const CaSpn, out: *mut usize) -> CaStatus {
    guard(|| put(out, get(spn, "spn")?.inner.places().len(), "out"))
}

/// Builds the tangible state space (at most `max_states` states) and
/// solves for the steady state.
///
/// # Safety
/// `spn` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ca_spn_solve(spn: *const CaSpn, max_states: usize, out: *mut *mut CaSolution) -> CaStatus {
    guard(|| {
        let model = get(spn, "spn")?.inner.clone();
        let ctmc = reachability(&model, max_states)?;
        let pi = steady_state(&ctmc)?;
        put(out, Box::into_raw(Box::new(CaSolution { model, ctmc, pi })), "out")
    })
}

/// Monte Carlo estimate of `metric` with a 95% confidence half-width.
///
/// # Safety
/// `spn` must be a live handle, `metric` a NUL-terminated string and
/// `mean`, `halfwidth` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ca_spn_simulate(
    spn: *const CaSpn,
    metric: *const c_char,
    horizon: f64,
    replications: u32,
    seed: u64,
    mean: *mut f64,
    halfwidth: *mut f64,
) -> CaStatus {
    guard(|| {
        let net = &get(spn, "spn")?.inner;
        let m = MetricExpr::parse(str_arg(metric, "metric")?)?;
        let est = simulate(net, &m, &SimConfig::new(horizon, replications, seed))?;
        put(mean, est.mean, "mean")?;
        put(halfwidth, est.ci_halfwidth, "halfwidth")
    })
}

/// # Safety
/// `spn` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ca_spn_free(spn: *mut CaSpn) {
    if !spn.is_null() {
        drop(Box::from_raw(spn));
    }
}

/// # Safety
/// `solution` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ca_solution_state_count(solution: *const CaSolution, out: *mut usize) -> CaStatus {
    guard(|| put(out, get(solution, "solution")?.ctmc.len(), "out"))
}

/// Evaluates a `P{...}` or `E{...}` metric on the steady state.
///
/// # Safety
/// `solution` must be a live handle, `metric` a NUL-terminated string and
/// `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ca_solution_metric(
    solution: *const CaSolution,
    metric: *const c_char,
    out: *mut f64,
) -> CaStatus {
    guard(|| {
        let s = get(solution, "solution")?;
        let m = MetricExpr::parse(str_arg(metric, "metric")?)?;
        put(out, eval_metric(&s.model, &s.ctmc, &s.pi, &m)?, "out")
    })
}

/// # Safety
/// `solution` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ca_solution_free(solution: *mut CaSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Probability that `k` of `n` pooled containers are failed.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ca_cts_probability(k: usize, n: usize, lambda: f64, mu: f64, out: *mut f64) -> CaStatus {
    guard(|| put(out, cts_probability(k, n, lambda, mu)?, "out"))
}

/// Closed-form capacity-oriented availability.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ca_coa_closed_form(
    n_servers: u32,
    containers_per_server: u32,
    server_availability: f64,
    container_failure_rate: f64,
    container_repair_rate: f64,
    out: *mut f64,
) -> CaStatus {
    guard(|| {
        let params = CoaParams {
            n_servers,
            containers_per_server,
            server_availability,
            container_failure_rate,
            container_repair_rate,
        };
        put(out, coa_closed_form(&params)?, "out")
    })
}

/// Yearly energy expense in USD of `quantity` devices drawing `power_w`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ca_annual_energy_cost(
    power_w: f64,
    tariff: f64,
    hours_per_day: f64,
    days_per_year: f64,
    quantity: u32,
    out: *mut f64,
) -> CaStatus {
    guard(|| {
        let c = PoweredComponent::new("component", power_w, 0.0, quantity);
        c.check()?;
        put(out, annual_energy_cost(&c, tariff, hours_per_day, days_per_year), "out")
    })
}
