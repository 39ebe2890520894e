use std::path::PathBuf;
use std::process::{Command, Output};

fn pcat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcat")).args(args).output().expect("run pcat")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pcat-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn compare_decr_ls_defaults() {
    let o = pcat(&["compare", "decr", "-c", "ls"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("machine: (1,0)") && out.contains("system: (1,0)"), "{out}");
    assert!(out.trim_end().ends_with("EQUAL"));
}

#[test]
fn compare_even_tv_120() {
    let o = pcat(&["compare", "even", "-c", "tv", "--max-steps", "120"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn corrupted_system_is_reported() {
    // A two-membrane system whose output grows without any check.
    let p = scratch("bad.psys", "@objects a o\n@membrane 1\n  @init a\n  @rule a -> (o,out)\n@end\n@output env o\n");
    let o = pcat(&["explore", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("results (1): (1)"), "{}", stdout(&o));
}

#[test]
fn compile_writes_a_valid_system() {
    let dir = std::env::temp_dir().join(format!("pcat-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    for c in ["ls", "ts", "tv", "mcre", "mobile"] {
        let out = dir.join(format!("two_out.{c}.psys"));
        let o = pcat(&["compile", "two_out", "-c", c, "-o", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        let v = pcat(&["validate", out.to_str().unwrap()]);
        assert_eq!(v.status.code(), Some(0), "{c}: {}", stdout(&v));
        let e = pcat(&["explore", out.to_str().unwrap(), "--max-steps", "80"]);
        assert!(stdout(&e).contains("(1,1) (2,0)"), "{c}: {}", stdout(&e));
    }
}

#[test]
fn machine_files() {
    let ok = scratch("add.rm", "l0: ADD(3) lh lh\nlh: HALT\n");
    let o = pcat(&["describe", ok.to_str().unwrap()]);
    assert!(stdout(&o).contains("1 ADD, 0 SUB"), "{}", stdout(&o));
    let o = pcat(&["compare", ok.to_str().unwrap(), "-c", "mcre"]);
    assert_eq!(o.status.code(), Some(0));

    let bad = scratch("bad.rm", "l0: ADD(3) l1 l1\nl1: SUB(3) lh lh\nlh: HALT\n");
    let o = pcat(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("line 2"), "{}", stdout(&o));
    let o = pcat(&["compile", bad.to_str().unwrap(), "-c", "ls"]);
    assert_eq!(o.status.code(), Some(2));

    let dup = scratch("dup.rm", "l0: ADD(3) lh lh\nl0: ADD(3) lh lh\nlh: HALT\n");
    let o = pcat(&["validate", dup.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(pcat(&["compare", "decr", "-c", "nope"]).status.code(), Some(2));
    assert_eq!(pcat(&["compare", "no_such_machine", "-c", "ls"]).status.code(), Some(2));
    assert_eq!(pcat(&["frobnicate"]).status.code(), Some(2));
    let p = scratch("undeclared.psys", "@objects a\n@membrane 1\n  @rule a -> b\n@end\n");
    let o = pcat(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains('b'));
}

#[test]
fn run_is_reproducible() {
    let a = pcat(&["run", "two_out", "-c", "ts", "--seed", "11", "--trace"]);
    let b = pcat(&["run", "two_out", "-c", "ts", "--seed", "11", "--trace"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).lines().count() > 1);
}

#[test]
fn json_reports_parse() {
    let o = pcat(&["explore", "decr", "-c", "mobile", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["summary"]["results"][0], "(1,0)");
    let o = pcat(&["compare", "decr", "-c", "ts", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["pass"], true);
}
