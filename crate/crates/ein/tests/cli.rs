use std::path::PathBuf;
use std::process::{Command, Output};

fn write(name: &str, text: &str) -> PathBuf {
    let p = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn ein(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ein")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn normalize_prints_the_normal_form() {
    let env = write("cli_env_a.txt", "T : TEN[3]; index i : 3");
    let o = ein(&["normalize", "-e", "delta(i,j) * T[j]", "--env", env.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "T[i]");
    let o = ein(&["normalize", "--trace", "-e", "delta(i,j) * T[j]", "--env", env.to_str().unwrap()]);
    assert!(stdout(&o).contains("A5"), "{}", stdout(&o));
}

#[test]
fn check_reports_types_and_user_errors() {
    let env = write("cli_env_b.txt", "M : TEN[3,3]\nindex i : 3\nindex j : 3\n");
    let o = ein(&["check", "-e", "M[j,i]", "--env", env.to_str().unwrap()]);
    assert!(o.status.success());
    let o = ein(&["check", "-e", "M[k,i]", "--env", env.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("UnboundIndex"));
}

#[test]
fn eval_and_size_read_files() {
    let env = write("cli_env_c.txt", "T : TEN[3]");
    let data = write("cli_data_c.json", r#"{"tensors": {"T": {"shape": [3], "data": [1, 2, 3]}}}"#);
    let expr = write("cli_expr_c.txt", "sum(i,1,3, T[i] * T[i])");
    let o = ein(&["eval", expr.to_str().unwrap(), "--env", env.to_str().unwrap(), "--data", data.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).trim(), "14");
    let o = ein(&["size", "-e", "T[1]", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["size"], "1");
}

#[test]
fn fuzz_runs_a_small_corpus() {
    let o = ein(&["fuzz", "--cases", "50", "--seed", "3"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let o = ein(&["fuzz", "no-such-property"]);
    assert_eq!(o.status.code(), Some(1));
}
