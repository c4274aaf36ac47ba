use std::path::PathBuf;
use std::process::Command;

// Builds a C program against the generated header and the shared library
// produced alongside this test binary.
#[test]
fn c_program_links_and_runs() {
    let Some(cc) = ["cc", "gcc", "clang"].into_iter().find(|c| Command::new(c).arg("--version").output().is_ok())
    else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    assert!(lib_dir.join("libinfreg_ffi.so").exists() || lib_dir.join("libinfreg_ffi.dylib").exists());
    let out = tempfile::tempdir().unwrap();
    let bin = out.path().join("smoke");
    let status = Command::new(cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-L")
        .arg(&lib_dir)
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .arg("-linfreg_ffi")
        .arg("-o")
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}: {}", run.status.code(), String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("pehe="));
}
