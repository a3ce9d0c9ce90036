//! One test per acceptance criterion; each prints a single PASS/FAIL line
//! that bypasses output capture.

use std::io::Write;
use std::process::Command;
use std::time::Instant;

use extphase_cli::verify;

fn report(id: u8, title: &str, passed: bool, detail: &str) {
    let line = format!(
        "acceptance criterion {id:>2}: {} {title}: {detail}\n",
        if passed { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn criterion(id: u8) {
    let c = verify::run(id);
    report(id, c.title, c.passed, &c.detail);
    assert!(c.passed, "criterion {id} ({}) failed: {}", c.title, c.detail);
}

macro_rules! criteria {
    ($($name:ident = $id:expr;)*) => {
        $(#[test] fn $name() { criterion($id); })*
    };
}

criteria! {
    criterion_01_canonical_boosts = 1;
    criterion_02_invariant_hamiltonian = 2;
    criterion_03_inertial_parameters = 3;
    criterion_04_linear_time_law = 4;
    criterion_05_characteristics = 5;
    criterion_06_mass_conservation = 6;
    criterion_07_uncertainty = 7;
    criterion_08_overlap_identity = 8;
    criterion_09_coherence_limit = 9;
    criterion_10_klein_gordon = 10;
    criterion_11_nonrelativistic_limit = 11;
    criterion_12_hydrogen = 12;
    criterion_13_velocity_cutoff = 13;
    criterion_14_gas_maximum = 14;
    criterion_15_fokker_planck = 15;
    criterion_16_fit_recovery = 16;
}

#[test]
fn criterion_17_verify_command() {
    let run = || {
        let start = Instant::now();
        let out = Command::new(env!("CARGO_BIN_EXE_extphase"))
            .arg("verify")
            .output()
            .expect("binary runs");
        (out, start.elapsed().as_secs_f64())
    };
    let (first, t1) = run();
    let (second, t2) = run();
    let table = String::from_utf8(first.stdout.clone()).unwrap();
    let rows = table.lines().filter(|l| l.contains(" PASS ") || l.contains(" FAIL ")).count();
    let exit_ok = first.status.success() && second.status.success();
    let identical = first.stdout == second.stdout;
    let runtime = t1.max(t2);
    let passed = exit_ok && identical && rows == 16 && runtime < 300.0;
    report(
        17,
        "verify command",
        passed,
        &format!("exit ok {exit_ok}, {rows} rows, identical output {identical}, runtime {runtime:.1} s"),
    );
    assert!(passed, "{table}");
}

/// Informational: OLS coverage when the noise sits on the ratio instead of the width.
#[test]
fn ratio_noise_coverage_is_reported() {
    let (inside, worst) = verify::ratio_noise_coverage(1222.0).unwrap();
    let line = format!("info: ratio-noise fit, {inside}/100 seeds within 3 SE, worst z {worst:.1}\n");
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(inside <= 100);
}
