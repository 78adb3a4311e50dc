//! The generated header must compile as C, and a small C client must link
//! against the static library and run.

use std::path::{Path, PathBuf};
use std::process::Command;

const CLIENT: &str = r#"
#include <stdio.h>
#include <string.h>
#include "levels_lab.h"

int main(void) {
    LlModel *m = NULL;
    if (ll_model_new(0.5, 4, LL_SCHEDULE_POWERS_OF_TWO, &m) != LL_STATUS_OK) return 10;
    double u = 0, v = 0, y = 0, d = 0;
    if (ll_point(m, LL_POINT_KIND_U, 2, &u) != LL_STATUS_OK) return 11;
    if (ll_point(m, LL_POINT_KIND_V, 2, &v) != LL_STATUS_OK) return 12;
    if (ll_eval(m, LL_MAP_G, false, u, &y, &d) != LL_STATUS_OK) return 13;
    if (y - v > 1e-15 || v - y > 1e-15) return 14;
    if (ll_apply_word(m, "F^-99999", u, &y, &d) != LL_STATUS_ESCAPE) return 15;
    char buf[256];
    if (ll_last_error(buf, sizeof buf) == 0 || strstr(buf, "prefix") == NULL) return 16;
    LlCertificate c;
    if (ll_descent_certificate(m, 1, 100, &c) != LL_STATUS_OK || c.word_length != 2) return 17;
    ll_model_free(m);
    printf("ok\n");
    return 0;
}
"#;

fn compiler() -> Option<String> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    Command::new(&cc).arg("--version").output().ok().filter(|o| o.status.success()).map(|_| cc)
}

fn include_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(include_dir().join("levels_lab.h")).unwrap();
    for name in [
        "ll_model_new",
        "ll_model_new_explicit",
        "ll_model_free",
        "ll_eval",
        "ll_apply_word",
        "ll_descent_certificate",
        "ll_table_json",
        "ll_string_free",
        "ll_last_error",
        "typedef struct LlModel LlModel",
        "LL_STATUS_OK = 0",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("ffi-header");
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("client.c");
    std::fs::write(&src, CLIENT).unwrap();
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(include_dir())
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

/// Looks for the static library next to the test binary's profile directory.
fn static_lib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let profile_dir = exe.parent()?.parent()?;
    let lib = profile_dir.join("liblevels_lab_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn c_client_links_and_runs() {
    let (Some(cc), Some(lib)) = (compiler(), static_lib()) else {
        eprintln!("compiler or static library unavailable; skipping");
        return;
    };
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("ffi-link");
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("client.c");
    let exe = dir.join("client");
    std::fs::write(&src, CLIENT).unwrap();
    let status = Command::new(&cc)
        .args(["-std=c99", "-O1", "-I"])
        .arg(include_dir())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
