//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Criteria 1 to 9 run in-process; criterion 10 drives the built binary.

use std::path::Path;
use std::process::{Command, ExitCode};

use liesys::verify::{run_one, CRITERION_COUNT};

const SEED: u64 = 0;
const BIN: &str = env!("CARGO_BIN_EXE_liesys");

fn verify_into(dir: &Path) -> Result<(), String> {
    let out = Command::new(BIN)
        .args(["verify", "--seed", &SEED.to_string(), "--out"])
        .arg(dir)
        .env_remove("LIESYS_OUT_DIR")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.code() != Some(0) {
        return Err(format!(
            "verify exited with {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stdout)
        ));
    }
    Ok(())
}

fn run_into(dir: &Path, scenario: &Path) -> Result<(), String> {
    let out = Command::new(BIN)
        .arg("run")
        .arg(scenario)
        .arg("--out")
        .arg(dir)
        .output()
        .map_err(|e| e.to_string())?;
    match out.status.code() {
        Some(0) => Ok(()),
        code => Err(format!("{} exited with {code:?}", scenario.display())),
    }
}

/// Every CSV in `a` exists in `b` with identical bytes.
fn same_csvs(a: &Path, b: &Path) -> Result<usize, String> {
    let mut count = 0;
    for entry in std::fs::read_dir(a).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            let name = path.file_name().unwrap();
            let left = std::fs::read(&path).map_err(|e| e.to_string())?;
            let right = std::fs::read(b.join(name)).map_err(|e| format!("{}: {e}", name.to_string_lossy()))?;
            if left != right {
                return Err(format!("{} differs between runs", name.to_string_lossy()));
            }
            count += 1;
        }
    }
    Ok(count)
}

fn criterion_10() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    verify_into(&a)?;
    verify_into(&b)?;
    let scenarios = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for name in ["drift_ermakov.toml", "minimal_m_oscillator.toml", "superpose_pinney.toml"] {
        run_into(&a, &scenarios.join(name))?;
        run_into(&b, &scenarios.join(name))?;
    }
    let n = same_csvs(&a, &b)?;
    Ok(format!("verify exit 0, {n} CSVs byte-identical across reruns"))
}

fn main() -> ExitCode {
    let mut failed = 0;
    for id in 1..=CRITERION_COUNT {
        let report = run_one(id, SEED).expect("criterion is registered");
        if !report.passed() {
            failed += 1;
        }
        println!("{report}");
    }
    match criterion_10() {
        Ok(detail) => println!("[PASS] 10. CLI determinism ({detail})"),
        Err(e) => {
            failed += 1;
            println!("[FAIL] 10. CLI determinism ({e})");
        }
    }
    println!("{} of {} criteria passed", CRITERION_COUNT + 1 - failed, CRITERION_COUNT + 1);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
