use std::path::PathBuf;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn at(rel: &str) -> String {
    root().join(rel).to_string_lossy().into_owned()
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = gvlam_cli::run(std::iter::once("gvlam").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn check_reports_the_type() {
    let (code, out, _) = run(&["check", &at("theories/timed.thy"), &at("terms/delay.term")]);
    assert_eq!((code, out.as_str()), (0, "X -o X\n"));
}

#[test]
fn check_rejects_duplicate_use() {
    let (code, out, err) = run(&["check", &at("theories/timed.thy"), "--inline", "--context", "x : X", "wait_1(wait_2(x)) "]);
    assert_eq!((code, out.as_str()), (0, "X\n"), "{}", err);
    let (code, _, err) = run(&["check", &at("theories/timed.thy"), "--inline", "fn x : X => x (*) x"]);
    assert_eq!(code, 1);
    assert!(err.contains("variable used twice"), "{}", err);
}

#[test]
fn derivation_matches_golden_file() {
    let (code, out, _) = run(&["check", &at("theories/timed.thy"), &at("terms/delay.term"), "--emit-derivation"]);
    assert_eq!(code, 0);
    let golden = std::fs::read_to_string(fixture("delay.sexp")).unwrap();
    assert_eq!(out, format!("X -o X\n{}", golden));
}

#[test]
fn prove_prints_equation_and_bound() {
    let (code, out, _) = run(&["prove", &at("theories/timed.thy"), &at("proofs/promotion.proof")]);
    assert_eq!(code, 0);
    assert_eq!(out, "|- !2(fn x : X => wait_1(x)) =[2] !2(fn x : X => wait_2(x)) : !2 (X -o X)\nbound 2\n");
}

#[test]
fn symmetry_fails_in_a_directed_theory() {
    let (code, _, err) = run(&["prove", &fixture("directed.thy"), &fixture("sym.proof")]);
    assert_eq!(code, 2, "{}", err);
    assert!(err.contains("symmetry"));
}

#[test]
fn bound_cases() {
    let thy = at("theories/timed.thy");
    let (code, out, _) = run(&["bound", &thy, "--inline", "fn x : X => wait_3(x)", "fn y : X => wait_3(y)"]);
    assert_eq!((code, out.as_str()), (0, "0\n"));
    let (code, out, _) = run(&["bound", &fixture("directed.thy"), "--inline", "--context", "x : X", "wait_1(x)", "skip(x)"]);
    assert_eq!((code, out.as_str()), (3, "FAIL\n"));
    let (code, _, _) = run(&["bound", &thy, "--inline", "--context", "x : X", "x", "fn y : X => y"]);
    assert_eq!(code, 1);
}

#[test]
fn emitted_proofs_are_accepted_by_prove() {
    let thy = at("theories/timed.thy");
    let (code, out, _) = run(&[
        "bound",
        &thy,
        "--inline",
        "--context",
        "x : X, y : X",
        "wait_1(x) (*) wait_4(y)",
        "wait_2(x) (*) wait_1(y)",
        "--emit-proof",
    ]);
    assert_eq!(code, 0);
    let (bound, script) = out.split_once('\n').unwrap();
    assert_eq!(bound, "4");
    let path = std::env::temp_dir().join(format!("gvlam-emitted-{}.proof", std::process::id()));
    std::fs::write(&path, script).unwrap();
    let (code, proved, err) = run(&["prove", &thy, path.to_str().unwrap()]);
    std::fs::remove_file(&path).ok();
    assert_eq!(code, 0, "{}", err);
    assert!(proved.ends_with("bound 4\n"), "{}", proved);
}

#[test]
fn exit_codes_for_bad_input() {
    assert_eq!(run(&[]).0, 64);
    assert_eq!(run(&["frobnicate"]).0, 64);
    assert_eq!(run(&["check", "/nonexistent/theory.thy", "x"]).0, 65);
    assert_eq!(run(&["check", &at("theories/timed.thy"), "--inline", "fn x : => x"]).0, 65);
    assert_eq!(run(&["model", "verify-axioms", &at("theories/timed.thy"), "--model", "clock(3)"]).0, 64);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn model_reports() {
    let (code, out, _) = run(&["model", "verify-axioms", &at("theories/timed.thy"), "--max-index", "2"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("axiom,params,distance,bound,ok\nwait-zero,,0,0,true\n"), "{}", out);
    let (code, out, _) = run(&["model", "eval", &at("theories/timed.thy"), "--inline", "--context", "x : X", "--model", "timed(2)", "wait_1(x)"]);
    assert_eq!((code, out.as_str()), (0, "x,value\n0,1\n1,2\n2,2\n"));
    let (code, out, _) = run(&["model", "prob-sweep", "--max", "2"]);
    assert_eq!(code, 0);
    assert!(out.contains("2,1,1,1/2,4,true\n"));
    let (code, out, _) = run(&["--format", "text", "model", "verify-laws", "--grades", "0..2", "--max-space", "2"]);
    assert_eq!(code, 0);
    assert!(out.ends_with("# failures: 0\n"));
    assert_eq!(run(&["model", "verify-laws", "--grades", "3..1"]).0, 64);
}

#[test]
fn oracle_commands_agree() {
    for args in [
        vec!["oracle", "perms", "--n", "4"],
        vec!["oracle", "nonexpansive", "--from", "0 1; 1 0", "--to", "0 1 2; 1 0 1; 2 1 0"],
        vec!["oracle", "interleavings", "ab", "cd", "e"],
        vec!["oracle", "tv", "--max", "4"],
    ] {
        let (code, out, err) = run(&args);
        assert_eq!(code, 0, "{:?}: {}{}", args, out, err);
        assert!(!out.contains("MISMATCH"));
    }
}

#[test]
fn output_is_deterministic() {
    let args = ["model", "verify-axioms", &at("theories/timed.thy"), "--max-index", "3"];
    assert_eq!(run(&args), run(&args));
    let args = ["bound", &at("theories/prob.thy"), "--inline", "replace[2,1,1](unit)", "no_replace[2,1,1](unit)", "--emit-proof"];
    let first = run(&args);
    assert_eq!(first.0, 0, "{}", first.2);
    assert_eq!(first, run(&args));
}

#[test]
fn model_files_define_spaces_and_tables() {
    let thy = fixture("swap.thy");
    let (code, out, err) = run(&["model", "verify-axioms", &thy, "--model", &fixture("swap.model")]);
    assert_eq!(code, 0, "{}", err);
    assert_eq!(out, "axiom,params,distance,bound,ok\nflip-flip,,0,0,true\nflip-near,,1,1,true\n");
    // Stretching the space breaks the second axiom.
    let (code, out, _) = run(&["model", "verify-axioms", &thy, "--model", &fixture("far.model")]);
    assert_eq!(code, 4);
    assert!(out.contains("flip-near,,2,1,false"), "{}", out);
    let (code, out, _) = run(&["model", "eval", &thy, "--inline", "--context", "x : B", "--model", &fixture("swap.model"), "flip(x)"]);
    assert_eq!((code, out.as_str()), (0, "x,value\n0,1\n1,0\n"));
    assert_eq!(run(&["model", "eval", &thy, "--inline", "--model", "/nonexistent.model", "unit"]).0, 65);
}
