use std::path::Path;
use std::process::Command;

fn pirc(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_pirc")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn corpus() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn programs() -> Vec<std::path::PathBuf> {
    let mut v: Vec<_> = std::fs::read_dir(corpus())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "mr"))
        .collect();
    v.sort();
    v
}

#[test]
fn run_prints_expected_output() {
    for f in programs() {
        let expected = std::fs::read_to_string(f.with_extension("expect")).unwrap();
        let (code, out) = pirc(&["run", f.to_str().unwrap()]);
        assert_eq!(out.trim(), expected.trim(), "{}", f.display());
        let want = if expected.starts_with("Error:") { 1 } else { 0 };
        assert_eq!(code, want, "{}", f.display());
    }
}

#[test]
fn diff_agrees_everywhere() {
    for f in programs() {
        let (code, out) = pirc(&["diff", f.to_str().unwrap()]);
        assert_eq!(code, 0, "{}\n{}", f.display(), out);
    }
}

#[test]
fn answer_and_twister_examples() {
    let (code, out) = pirc(&["run", corpus().join("answer.mr").to_str().unwrap()]);
    assert_eq!((code, out.trim()), (0, "[42]"));
    let (code, out) = pirc(&["diff", corpus().join("twister_c.mr").to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("[4,5]"), "{out}");
}

#[test]
fn stats_lines_are_key_value() {
    let (code, out) = pirc(&["stats", corpus().to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), programs().len());
    let answer = out.lines().find(|l| l.starts_with("program=answer ")).unwrap();
    assert!(answer.contains("pct_no_env=100.0"), "{answer}");
    for key in ["closures_compiled", "pct_full_env", "pct_stub_env", "baseline_envs_created", "reduction_pct", "stubbed_share_pct"] {
        assert!(answer.contains(&format!(" {key}=")), "{key} missing: {answer}");
    }
}

#[test]
fn exit_codes() {
    let dir = std::env::temp_dir().join(format!("pirc-exit-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.mr");
    std::fs::write(&bad, "f <- function( {").unwrap();
    assert_eq!(pirc(&["run", bad.to_str().unwrap()]).0, 1);
    let (code, _) = pirc(&["run", "--passes=nonsense", corpus().join("answer.mr").to_str().unwrap()]);
    assert_eq!(code, 1);
    let (code, out) = pirc(&["fuzz", "--n=20", "--seed=3"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("20 programs, 0 mismatches"), "{out}");
}

#[test]
fn single_pass_and_ablation_flags() {
    let f = corpus().join("mandelbrot_like.mr");
    for flags in [&["--no-scope"][..], &["--no-promise-inline"], &["--passes=cleanup,inline"]] {
        let mut args = vec!["diff"];
        args.extend_from_slice(flags);
        args.push(f.to_str().unwrap());
        let (code, out) = pirc(&args);
        assert_eq!(code, 0, "{flags:?}\n{out}");
        assert_eq!(out.lines().count(), 2, "{out}");
    }
}

#[test]
fn dump_shows_each_stage() {
    let (code, out) = pirc(&["dump", corpus().join("answer.mr").to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("## baseline"), "{out}");
    assert!(out.contains("## after cleanup"), "{out}");
    assert!(out.contains("## optimized"), "{out}");
    let (_, out) = pirc(&["run", "--trace", corpus().join("deopt_write.mr").to_str().unwrap()]);
    assert!(out.contains("deopts_taken=1"), "{out}");
}
