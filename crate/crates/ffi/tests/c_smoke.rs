//! Compiles a small C program against the generated header and the static library.

use std::path::PathBuf;
use std::process::Command;

use tailcond::{CopulaModel, Generator};

fn static_lib() -> Option<PathBuf> {
    // target/<profile>/deps/c_smoke-<hash> -> target/<profile>/libtailcond_ffi.a
    let exe = std::env::current_exe().ok()?;
    let lib = exe.parent()?.parent()?.join("libtailcond_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn c_program_links_and_matches_rust() {
    let Some(lib) = static_lib() else {
        eprintln!("skipped: libtailcond_ffi.a was not built for this profile");
        return;
    };
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("tailcond_smoke");
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(dir.join("include"))
        .arg(dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status();
    let Ok(status) = status else {
        eprintln!("skipped: no C compiler ({cc})");
        return;
    };
    assert!(status.success(), "C compilation failed");
    let run = Command::new(&out).output().unwrap();
    assert!(run.status.success(), "smoke program exited with {:?}", run.status);
    let printed: f64 = String::from_utf8(run.stdout).unwrap().trim().parse().unwrap();
    let want = CopulaModel::archimedean(Generator::gumbel(6.0).unwrap(), 3).unwrap().cdf(&[0.9, 0.95, 0.8]).unwrap();
    assert!((printed - want).abs() < 1e-12, "{printed} vs {want}");
}
