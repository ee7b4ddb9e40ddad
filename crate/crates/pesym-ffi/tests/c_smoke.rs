//! Compiles and runs a small C program against the generated header and
//! the static library, proving the ABI surface is usable from C.

use std::path::PathBuf;
use std::process::Command;

const C_PROGRAM: &str = r#"
#include "pesym.h"
#include <stdio.h>
#include <math.h>

int main(void) {
    PesymModelParams p = {1.0, 0.5, 2.0, 1.0, 0.5, 0, 1.0};
    double alpha, c, front;
    if (pesym_exact_fields(p, 4.0, 0.0, &alpha, &c, &front) != PESYM_STATUS_OK) return 1;
    if (fabs(front - 2.0) > 1e-12) return 2;
    if (fabs(alpha - 0.75) > 1e-12) return 3;

    PesymSim *sim = pesym_sim_new(p, 64, 0.4, 1.0);
    if (!sim) return 4;
    if (pesym_sim_advance(sim, 1.05) != PESYM_STATUS_OK) return 5;
    double t = pesym_sim_time(sim);
    double s = pesym_sim_front(sim);
    pesym_sim_free(sim);
    if (fabs(t - 1.05) > 1e-10) return 6;
    if (s <= 1.0) return 7;

    printf("version %s\n", pesym_version());
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include = manifest.join("include");
    let target_dir = manifest.join("../../target");
    // Make sure the static library artifact exists (tests link the rlib, so
    // a plain `cargo test` does not produce it on its own).
    let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".to_string());
    let build = Command::new(cargo)
        .args(["build", "-p", "pesym-ffi"])
        .current_dir(&manifest)
        .output()
        .expect("cargo not available");
    assert!(
        build.status.success(),
        "cargo build failed: {}",
        String::from_utf8_lossy(&build.stderr)
    );
    let lib_dir = ["debug", "release"]
        .iter()
        .map(|p| target_dir.join(p))
        .find(|d| d.join("libpesym_ffi.a").exists())
        .expect("libpesym_ffi.a not found after build");
    let work = std::env::temp_dir().join(format!("pesym_c_smoke_{}", std::process::id()));
    std::fs::create_dir_all(&work).unwrap();
    let src = work.join("smoke.c");
    let bin = work.join("smoke");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let compile = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lpesym_ffi")
        .arg("-lpthread")
        .arg("-ldl")
        .arg("-lm")
        .arg("-o")
        .arg(&bin)
        .output()
        .expect("cc not available");
    assert!(
        compile.status.success(),
        "compile failed: {}",
        String::from_utf8_lossy(&compile.stderr)
    );
    let run = Command::new(&bin).output().unwrap();
    assert!(
        run.status.success(),
        "C smoke test exited with {:?}: {}",
        run.status.code(),
        String::from_utf8_lossy(&run.stdout)
    );
    let _ = std::fs::remove_dir_all(&work);
}
