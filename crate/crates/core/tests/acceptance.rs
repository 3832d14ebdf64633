//! End-to-end verification suite: runs every reference scenario and prints
//! one pass/fail line per check.

use phaselab::scenarios::all_checks;

#[test]
fn acceptance() {
    let mut failures = Vec::new();
    for (name, check) in all_checks() {
        match check() {
            Ok(res) => {
                let status = if res.passed { "PASS" } else { "FAIL" };
                println!("[{status}] {name}: {}", res.detail);
                if !res.passed {
                    failures.push(format!("{name}: {}", res.detail));
                }
            }
            Err(e) => {
                println!("[FAIL] {name}: error: {e}");
                failures.push(format!("{name}: error: {e}"));
            }
        }
    }
    assert!(failures.is_empty(), "failed checks:\n{}", failures.join("\n"));
}
