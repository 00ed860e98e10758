use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "opfgap.h"

int main(void) {
    OpfgapNetwork *net = NULL;
    if (opfgap_network_bundled("case9", &net) != OPFGAP_ERROR_OK) return 1;
    if (opfgap_network_bus_count(net) != 9) return 2;
    OpfgapOutcome *out = NULL;
    if (opfgap_solve(net, "socp", 1.0, 0.0, 0, &out) != OPFGAP_ERROR_OK) return 3;
    if (opfgap_outcome_status(out) != OPFGAP_SOLVE_STATUS_OPTIMAL) return 4;
    printf("%.6f\n", opfgap_outcome_objective(out));
    opfgap_outcome_free(out);
    if (opfgap_solve(net, "nope", 1.0, 0.0, 0, &out) != OPFGAP_ERROR_INVALID_INPUT) return 5;
    if (strlen(opfgap_last_error()) == 0) return 6;
    double gap = 0.0;
    if (opfgap_compute_gap(3366.49, 2356.95, &gap) != OPFGAP_ERROR_OK) return 7;
    printf("%.2f\n", gap);
    opfgap_network_free(net);
    return 0;
}
"#;

fn include_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

fn cc() -> Option<String> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
        .map(String::from)
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(include_dir().join("opfgap.h")).unwrap();
    for f in [
        "opfgap_network_parse",
        "opfgap_network_free",
        "opfgap_solve",
        "opfgap_outcome_status",
        "opfgap_outcome_objective",
        "opfgap_compute_gap",
        "opfgap_last_error",
    ] {
        assert!(h.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(h.contains("typedef struct OpfgapNetwork OpfgapNetwork;"));
}

#[test]
fn c_program_links_and_runs() {
    let cc = cc().expect("a C compiler is required for this test");
    let lib_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = lib_dir.join("libopfgap_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(include_dir())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C build failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let obj: f64 = lines[0].parse().unwrap();
    assert!((obj - 5296.6659).abs() < 1e-2);
    assert_eq!(lines[1], "29.99");
}
