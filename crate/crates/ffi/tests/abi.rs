use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use chainavail_ffi::*;

const SCENARIO: &str = include_str!("../../core/scenarios/baseline.scenario");

fn last_error() -> String {
    unsafe { CStr::from_ptr(ca_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn component_availability_and_errors() {
    let mut a = 0.0;
    assert_eq!(unsafe { ca_component_availability(1000.0, 2.0, &mut a) }, CaStatus::Ok);
    assert!((a - 1000.0 / 1002.0).abs() < 1e-15);
    assert_eq!(last_error(), "");

    assert_eq!(unsafe { ca_component_availability(-1.0, 2.0, &mut a) }, CaStatus::Structural);
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { ca_component_availability(1.0, 2.0, ptr::null_mut()) },
        CaStatus::NullPointer
    );
}

#[test]
fn scenario_round_trip() {
    let text = CString::new(SCENARIO).unwrap();
    let mut sc = ptr::null_mut();
    assert_eq!(unsafe { ca_scenario_parse(text.as_ptr(), &mut sc) }, CaStatus::Ok);
    let mut n = usize::MAX;
    assert_eq!(unsafe { ca_scenario_validate(sc, &mut n) }, CaStatus::Ok);
    assert_eq!(n, 0);

    let mut r = CaStackResult::default();
    assert_eq!(unsafe { ca_scenario_stack_eval(sc, &mut r) }, CaStatus::Ok);
    assert!((r.server.availability - 0.999625).abs() < 1e-5);
    assert!((0.9977..=0.9987).contains(&r.service.availability));
    assert!(r.multi_server.availability > r.service.availability);

    let name = CString::new("onoff").unwrap();
    let mut net = ptr::null_mut();
    assert_eq!(unsafe { ca_scenario_net(sc, name.as_ptr(), &mut net) }, CaStatus::Ok);
    let mut places = 0;
    assert_eq!(unsafe { ca_spn_place_count(net, &mut places) }, CaStatus::Ok);
    assert_eq!(places, 2);
    unsafe {
        ca_spn_free(net);
        ca_scenario_free(sc);
    }
}

#[test]
fn parse_error_status() {
    let text = CString::new("[components\n").unwrap();
    let mut sc = ptr::null_mut();
    assert_eq!(unsafe { ca_scenario_parse(text.as_ptr(), &mut sc) }, CaStatus::Parse);
    assert!(sc.is_null());
    assert!(last_error().contains("line 1"));
}

#[test]
fn solve_and_simulate_service_net() {
    let mut net = ptr::null_mut();
    let st = unsafe { ca_service_spn_new(1166.49, 0.4378, 217.39, 0.25, 1, &mut net) };
    assert_eq!(st, CaStatus::Ok);
    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { ca_spn_solve(net, 1000, &mut sol) }, CaStatus::Ok);
    let mut states = 0;
    assert_eq!(unsafe { ca_solution_state_count(sol, &mut states) }, CaStatus::Ok);
    assert_eq!(states, 5);

    let metric = CString::new("P{#MN_ON >= 1}").unwrap();
    let mut a = 0.0;
    assert_eq!(unsafe { ca_solution_metric(sol, metric.as_ptr(), &mut a) }, CaStatus::Ok);
    assert!((0.9977..=0.9987).contains(&a));

    let bad = CString::new("P{#NOPE >= 1}").unwrap();
    assert_ne!(unsafe { ca_solution_metric(sol, bad.as_ptr(), &mut a) }, CaStatus::Ok);

    let (mut mean, mut hw) = (0.0, 0.0);
    let st = unsafe { ca_spn_simulate(net, metric.as_ptr(), 2e6, 10, 42, &mut mean, &mut hw) };
    assert_eq!(st, CaStatus::Ok);
    let mut exact = 0.0;
    unsafe { ca_solution_metric(sol, metric.as_ptr(), &mut exact) };
    assert!((mean - exact).abs() <= hw, "{mean} +- {hw} vs {exact}");

    let mut overflow = ptr::null_mut();
    assert_eq!(unsafe { ca_spn_solve(net, 2, &mut overflow) }, CaStatus::Overflow);
    unsafe {
        ca_solution_free(sol);
        ca_spn_free(net);
        ca_solution_free(ptr::null_mut());
    }
}

#[test]
fn coa_and_energy() {
    let mut v = 0.0;
    assert_eq!(unsafe { ca_coa_closed_form(1, 1, 1.0, 0.02, 3.0, &mut v) }, CaStatus::Ok);
    assert!((v - 3.0 / 3.02).abs() < 1e-15);
    assert_eq!(unsafe { ca_coa_closed_form(0, 8, 0.99, 0.02, 3.0, &mut v) }, CaStatus::Domain);
    assert_eq!(unsafe { ca_cts_probability(0, 1, 0.02, 3.0, &mut v) }, CaStatus::Ok);
    assert!((v - 3.0 / 3.02).abs() < 1e-15);
    assert_eq!(unsafe { ca_cts_probability(2, 1, 0.02, 3.0, &mut v) }, CaStatus::Domain);
    assert_eq!(unsafe { ca_annual_energy_cost(65.0, 0.16, 24.0, 365.0, 1, &mut v) }, CaStatus::Ok);
    assert!((v - 91.104).abs() < 1e-9);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(ca_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/chainavail.h")).unwrap();
    for f in [
        "ca_last_error_message",
        "ca_scenario_parse",
        "ca_scenario_stack_eval",
        "ca_service_spn_new",
        "ca_spn_solve",
        "ca_solution_metric",
        "ca_coa_closed_form",
        "ca_annual_energy_cost",
        "typedef struct CaSpn CaSpn;",
        "CA_STATUS_OK = 0",
    ] {
        assert!(header.contains(f), "header lacks {f}");
    }
}

/// Compiles and runs a small C program against the header and the static
/// library, when a C compiler is on the path.
#[test]
fn c_program_links_and_runs() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; C link check not run");
        return;
    };
    let exe = std::env::current_exe().unwrap();
    let target_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = target_dir.join("libchainavail_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "chainavail.h"
int main(void) {
    CaSpn *net = NULL;
    CaSolution *sol = NULL;
    double a = 0.0;
    if (ca_service_spn_new(1166.49, 0.4378, 217.39, 0.25, 1, &net) != CA_STATUS_OK) return 1;
    if (ca_spn_solve(net, 1000, &sol) != CA_STATUS_OK) return 2;
    if (ca_solution_metric(sol, "P{#MN_ON >= 1}", &a) != CA_STATUS_OK) return 3;
    if (ca_component_availability(-1.0, 1.0, &a) != CA_STATUS_STRUCTURAL) return 4;
    if (ca_last_error_message()[0] == '\0') return 5;
    ca_solution_free(sol);
    ca_spn_free(net);
    printf("ok\n");
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}

fn which_cc() -> Result<PathBuf, ()> {
    let path = std::env::var_os("PATH").ok_or(())?;
    std::env::split_paths(&path)
        .map(|d| d.join("cc"))
        .find(|p| p.is_file())
        .ok_or(())
}
