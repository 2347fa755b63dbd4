//! End-to-end tests of the `mbar0` binary: output bytes, exit codes, and
//! determinism.

use std::process::{Command, Output};

fn mbar0(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mbar0"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = mbar0(args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf8 output")
}

#[test]
fn integrate_psi_product() {
    assert_eq!(stdout(&["integrate", "psi(1)*psi(2)", "--n", "5"]), "2\n");
    assert_eq!(
        stdout(&["--json", "integrate", "psi(1)*psi(1)", "--n", "5"]),
        "{\"value\":\"1\"}\n"
    );
}

#[test]
fn eval_prints_normal_form() {
    let text = stdout(&["eval", "D(12|3456)*D(34|1256)", "--n", "6"]);
    assert_eq!(text, "n=6 codim=2 terms=1\n1\t(12|56|34)\n");
}

#[test]
fn express_in_the_invariant_basis() {
    // kappa_1 on six markings; the row pairs to 1 against every
    // codimension-2 stratum, which pins (3/5, 4/5).
    let text = stdout(&["express", "kappa(1)", "--n", "6", "--basis", "invariant"]);
    assert_eq!(text, "d_{2,4} = 3/5\nd_{3,3} = 4/5\n");
}

#[test]
fn orbits_table() {
    let text = stdout(&["orbits", "--n", "6", "--codim", "1"]);
    assert_eq!(text, "d_{2,4}: 15\nd_{3,3}: 10\n");
}

#[test]
fn symmetrize_uses_the_standard_involution_by_default() {
    let text = stdout(&[
        "symmetrize",
        "D(15|2346)+D(25|1346)+D(36|1245)+D(46|1235)-D(56|1234)+2*S(125|346)",
        "--n",
        "6",
        "--basis",
        "invariant",
    ]);
    assert_eq!(text, "d_{2,4} = 3\nd_{3,3} = 3\n");
}

#[test]
fn symmetrize_accepts_an_explicit_base_involution() {
    let text = stdout(&[
        "symmetrize",
        "D(12|3456)+D(34|1256)+D(56|1234)",
        "--n",
        "6",
        "--base-involution",
        "(12)(34)(56)",
        "--basis",
        "invariant",
    ]);
    // Each pair divisor appears in 3 of the 15 involutions.
    assert_eq!(text, "d_{2,4} = 3\nd_{3,3} = 0\n");
}

#[test]
fn pipeline_genus_two_text_and_json() {
    let text = stdout(&["pipeline", "--genus", "2"]);
    assert!(text.contains("lambda form: 15*lambda + 3*delta_1"));
    assert!(text.contains("delta form:  3/2*delta_0 + 6*delta_1"));
    assert!(text.contains("invariant locus: 3*d_{2,4} + 3*d_{3,3}"));

    let json = stdout(&["--json", "pipeline", "--genus", "2"]);
    let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(doc["lambda_form"][0], "15");
    assert_eq!(doc["i6_inv"]["d_{2,4}"], "3");
}

#[test]
fn pipeline_genus_three_report() {
    let json = stdout(&["--json", "pipeline", "--genus", "3"]);
    let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(doc["genus3"]["epsilon"], "1");
    assert_eq!(doc["genus3"]["coords"][0], "2673/2");
    assert_eq!(doc["genus3"]["coords"][6], "-9/2");
    assert_eq!(doc["phi_matrix"]["rank"], 6);
    assert_eq!(doc["i8inv"]["d_{5,1,2}"], "5/2");
    assert_eq!(doc["parametric_family"]["kernel"][0], "280/3");
    assert_eq!(doc["surface_checks"][0]["consistent"], true);
    assert!(doc["external_surfaces"].is_null());
    assert_eq!(doc["sigma2_kernel_value"], "0");
}

#[test]
fn pipeline_reads_a_surfaces_file() {
    let dir = std::env::temp_dir().join("mbar0-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("surfaces.json");
    std::fs::write(
        &path,
        r#"[
            {"name":"sigma8","numbers":["0","-2","0","-48","2","0","0"],"expected_count":"24"},
            {"name":"sigma1","numbers":["0","0","0","16","0","-2","2"],"expected_count":"30"},
            {"name":"sigma5","numbers":["1","0","0","0","0","0","0"],"expected_count":"9"}
        ]"#,
    )
    .unwrap();
    let json = stdout(&[
        "--json",
        "pipeline",
        "--genus",
        "3",
        "--surfaces",
        path.to_str().unwrap(),
    ]);
    let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(doc["genus3"]["coords"][3], "27/2");
    let ext = &doc["external_surfaces"][0];
    assert_eq!(ext["name"], "sigma5");
    assert_eq!(ext["predicted"], "2673/2");
    assert_eq!(ext["reference_expectation"], "9");
    assert_eq!(ext["note"], "external data required");
}

#[test]
fn parse_errors_exit_two_domain_errors_exit_one() {
    let bad_expr = mbar0(&["eval", "frob(1)", "--n", "6"]);
    assert_eq!(bad_expr.status.code(), Some(2));
    let bad_grade = mbar0(&["integrate", "psi(1)", "--n", "6"]);
    assert_eq!(bad_grade.status.code(), Some(1));
    let bad_n = mbar0(&["eval", "psi(1)", "--n", "42"]);
    assert_eq!(bad_n.status.code(), Some(2));
    let odd_symmetrize = mbar0(&["symmetrize", "psi(1)", "--n", "5"]);
    assert_eq!(odd_symmetrize.status.code(), Some(1));
    let bad_suite = mbar0(&["selftest", "nonsense"]);
    assert_eq!(bad_suite.status.code(), Some(2));
    let bad_involution = mbar0(&[
        "symmetrize",
        "psi(1)",
        "--n",
        "6",
        "--base-involution",
        "(123)",
    ]);
    assert_eq!(bad_involution.status.code(), Some(1));
}

#[test]
fn selftest_quick_suite_passes() {
    let text = stdout(&["selftest", "quick"]);
    assert!(text.contains("[PASS] c01-genus2-class"));
    assert!(text.contains("[PASS] c09-combinatorics"));
    assert!(text.ends_with("selftest: 2 passed, 0 failed\n"));
}

#[test]
fn identical_invocations_are_byte_identical() {
    let args = ["orbits", "--n", "7", "--codim", "2"];
    assert_eq!(stdout(&args), stdout(&args));
    let expr = ["eval", "psi(3)*psi(3)", "--n", "6"];
    assert_eq!(stdout(&expr), stdout(&expr));
    let selftest = ["selftest", "quick"];
    assert_eq!(stdout(&selftest), stdout(&selftest));
}

#[test]
fn thread_cap_does_not_change_output() {
    let baseline = stdout(&["express", "kappa(1)", "--n", "6", "--basis", "invariant"]);
    let capped = Command::new(env!("CARGO_BIN_EXE_mbar0"))
        .args(["express", "kappa(1)", "--n", "6", "--basis", "invariant"])
        .env("CHOW_THREADS", "1")
        .output()
        .expect("binary runs");
    assert!(capped.status.success());
    assert_eq!(String::from_utf8(capped.stdout).unwrap(), baseline);
}
