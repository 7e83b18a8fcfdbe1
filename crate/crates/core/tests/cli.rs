use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rrfuzz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rrfuzz")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const DIAMOND: &str = "inputs 1..5; var a = 0; step(in) { if (in == 3) { a = 2; emit 20; } else { a = 1; } }";

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.rrp", DIAMOND);
    assert_eq!(rrfuzz(&["check", &good]).status.code(), Some(0));

    let bad = write(dir.path(), "bad.rrp", "inputs 1..5; step(in) { a = 1; }");
    let o = rrfuzz(&["check", &bad]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("bad.rrp:1:") && err.contains("undeclared identifier a"), "{err}");

    let syntax = write(dir.path(), "syntax.rrp", "inputs 1..5 step(in) {}");
    assert_eq!(rrfuzz(&["check", &syntax]).status.code(), Some(1));
    assert_eq!(rrfuzz(&["check", "/nonexistent/x.rrp"]).status.code(), Some(2));
}

#[test]
fn analyze_plan_on_diamond() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "d.rrp", DIAMOND);
    let o = rrfuzz(&["analyze", "--plan", &file]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("|S|=2 |V|=4"), "{}", stdout(&o));

    let text = stdout(&rrfuzz(&["analyze", "--cfg", &file]));
    assert!(text.starts_with("blocks=4 edges=4 paths=2\n"), "{text}");
    assert!(text.contains("edge 0 1"));

    let text = stdout(&rrfuzz(&["analyze", "--intervals", "--const-weight", "9", &file]));
    assert!(text.contains("a in [0, 2]"), "{text}");
    assert!(text.contains("value pool: 1:1 2:9 3:9 4:9 5:1"), "{text}");
}

#[test]
fn fuzz_report_replay_round() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(
        dir.path(),
        "p.rrp",
        "inputs 1..4; var a = 0;
         step(in) { if (in == 2) { a = a + 1; } if (a > 3) { a = 0; } if (a == 3 && in == 4) { error 1; }
                    if (a == 9) { error 2; } }",
    );
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();
    let o = rrfuzz(&["fuzz", &file, "--seed", "42", "--max-execs", "20000", "--out", out_s]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("found 1/2 errors in 20000 execs"), "{}", stdout(&o));
    assert!(out.join("errors/error_1.txt").exists());
    assert!(out.join("queue/id_0.txt").exists());

    let report = rrfuzz(&["report", out_s, &file]);
    assert_eq!(report.status.code(), Some(0));
    assert_eq!(stdout(&report), "1,error_reachable\n2,UNKNOWN\n");

    let witness = out.join("errors/error_1.txt");
    let replay = rrfuzz(&["replay", &file, witness.to_str().unwrap(), "--corpus", out_s]);
    let text = stdout(&replay);
    assert!(text.starts_with("status: error(1)\n"), "{text}");
    assert!(text.contains("novelty: branch=false state=false"), "{text}");

    // A tampered witness is downgraded, not trusted.
    fs::write(&witness, "1\n").unwrap();
    assert_eq!(stdout(&rrfuzz(&["report", out_s, &file])), "1,UNKNOWN\n2,UNKNOWN\n");

    assert_eq!(rrfuzz(&["report", dir.path().join("missing").to_str().unwrap(), &file]).status.code(), Some(2));
}

#[test]
fn zero_budget_keeps_seed_results() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "p.rrp", "inputs 1..5; step(in) { if (in == 2) { error 7; } if (in == 9) { error 8; } }");
    let out = dir.path().join("o");
    let o = rrfuzz(&["fuzz", &file, "--max-execs", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(stdout(&o), "found 1/2 errors in 0 execs\n");
    assert_eq!(fs::read_to_string(out.join("errors/error_7.txt")).unwrap(), "2\n");
}

#[test]
fn fuzz_into_unwritable_dir_fails_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "p.rrp", DIAMOND);
    let blocker = write(dir.path(), "blocker", "");
    let o = rrfuzz(&["fuzz", &file, "--max-execs", "10", "--out", &format!("{blocker}/sub")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn repeated_seed_gives_identical_stats() {
    let dir = tempfile::tempdir().unwrap();
    let prog = dir.path().join("g.rrp");
    assert_eq!(rrfuzz(&["gen", "--seed", "5", "-o", prog.to_str().unwrap()]).status.code(), Some(0));
    let file = prog.to_str().unwrap();
    let stats: Vec<String> = ["a", "b"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            rrfuzz(&["fuzz", file, "--seed", "3", "--max-execs", "5000", "--out", out.to_str().unwrap()]);
            fs::read_to_string(out.join("stats.json")).unwrap()
        })
        .collect();
    assert_eq!(stats[0], stats[1]);
}

#[test]
fn gen_and_oracle() {
    let a = stdout(&rrfuzz(&["gen", "--seed", "11"]));
    assert_eq!(a, stdout(&rrfuzz(&["gen", "--seed", "11"])));
    assert_ne!(a, stdout(&rrfuzz(&["gen", "--seed", "12"])));
    assert_eq!(rrfuzz(&["gen", "--vars", "0"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let file = write(
        dir.path(),
        "t.rrp",
        "inputs 1..3; var a = 0; step(in) { if (a == 1 && in == 3) { error 7; } if (in == 2) { a = 1 - a; } }",
    );
    assert_eq!(
        stdout(&rrfuzz(&["oracle", &file])),
        "error 7: reachable, witness=2 3, len=2\ncomplete: true, states: 2\n"
    );
    let capped = stdout(&rrfuzz(&["oracle", &file, "--state-cap", "1"]));
    assert!(capped.ends_with("complete: false, states: 1\n"), "{capped}");
}
