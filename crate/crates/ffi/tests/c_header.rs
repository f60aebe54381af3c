//! Compiles and runs a small C client against the generated header and the
//! static library.

use std::path::{Path, PathBuf};
use std::process::Command;

const CLIENT: &str = r#"
#include <stdio.h>
#include <string.h>
#include "flowlat.h"

int main(void) {
    FlowlatLattice *lat = NULL;
    FlowlatEnv *env = NULL;
    FlowlatProgram *prog = NULL, *fixed = NULL;
    char *text = NULL;
    if (flowlat_lattice_builtin("two-point", &lat) != FLOWLAT_STATUS_OK) return 10;
    if (flowlat_env_parse(lat, "l:L,h:H", &env) != FLOWLAT_STATUS_OK) return 11;
    if (flowlat_program_parse("l := h ; l := 0 ; h := 0 ; l := h", false, &prog) != FLOWLAT_STATUS_OK) return 12;
    if (flowlat_check(prog, env, env, NULL) != FLOWLAT_STATUS_OK) return 13;
    if (flowlat_transform(prog, env, NULL, &fixed, NULL, NULL) != FLOWLAT_STATUS_OK) return 14;
    if (flowlat_program_to_string(fixed, &text) != FLOWLAT_STATUS_OK) return 15;
    puts(text);
    flowlat_string_free(text);
    if (flowlat_program_parse("l := > h", false, &prog) != FLOWLAT_STATUS_PARSE_ERROR) return 16;
    puts(flowlat_last_error());
    flowlat_program_free(fixed);
    flowlat_program_free(prog);
    flowlat_env_free(env);
    flowlat_lattice_free(lat);
    return 0;
}
"#;

fn profile_dir() -> PathBuf {
    // Test binaries live in <target>/<profile>/deps.
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok_and(|o| o.status.success())
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/flowlat.h")).unwrap();
    for name in [
        "FLOWLAT_STATUS_OK",
        "typedef struct FlowlatLattice FlowlatLattice;",
        "flowlat_last_error(void)",
        "flowlat_check(",
        "flowlat_transform(",
        "flowlat_test_ni(",
        "flowlat_string_free(",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

#[test]
fn c_client_links_and_runs() {
    if !have_cc() {
        eprintln!("no C compiler on PATH; skipping");
        return;
    }
    let lib = profile_dir().join("libflowlat_ffi.a");
    assert!(lib.exists(), "static library not built at {}", lib.display());
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("capi");
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("client.c");
    std::fs::write(&src, CLIENT).unwrap();
    let exe = dir.join("client");
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C client failed to compile");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "client exited with {:?}", out.status.code());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("l@H := h@H ; l@L := 0 ; h@L := 0 ; l@L := h@L"));
    assert!(lines.next().unwrap().contains("unknown operator"));
}
