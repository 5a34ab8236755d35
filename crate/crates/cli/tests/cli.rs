use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn dualbin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualbin"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dualbin-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn gen_is_deterministic() {
    let args = [
        "gen", "--family", "uniform", "--n", "8", "--m", "2", "--s", "4", "--seed", "1",
    ];
    let a = dualbin(&args);
    let b = dualbin(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("8 2\n"));
    assert_eq!(text.lines().count(), 9);
}

#[test]
fn solve_reports_every_algorithm() {
    let path = scratch("solve.txt");
    fs::write(&path, "# three items\n3 2\n3/2^2\n1/2^1\n1/2^1\n").unwrap();
    let o = dualbin(&[
        "solve",
        path.to_str().unwrap(),
        "--algos",
        "ff,ffi,rsff,ptas,advice",
        "--eps",
        "1/2^1",
        "--oracle",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("opt 3"));
    assert!(text.contains("ff packed 3\n  1 2 2\n"));
    for alg in ["ffi", "rsff", "ptas", "advice"] {
        assert!(text.contains(&format!("{alg} packed")), "{text}");
    }
}

#[test]
fn simulate_writes_a_transcript() {
    let inst = scratch("sim.txt");
    let log = scratch("sim.log");
    fs::write(&inst, "3 1\n1/2^1\n1/2^1\n1/2^1\n").unwrap();
    let o = dualbin(&[
        "simulate",
        inst.to_str().unwrap(),
        "--eps",
        "1/2^1",
        "--oracle",
        "--out",
        log.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("online_count 2"));
    assert_eq!(
        fs::read_to_string(&log).unwrap(),
        "1 1 SMALL\n2 1 SMALL\n3 REJECT NONE\n"
    );
}

#[test]
fn reduce_reads_separation_files() {
    let path = scratch("bsp.txt");
    fs::write(&path, "2 1\n5 2\n").unwrap();
    let o = dualbin(&["reduce", path.to_str().unwrap(), "--algos", "ff,optimal"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "algorithm,n,n1,mistakes,p1,l2,s2,p3,g1,g2,bound_tight,bound_loose,entropy_bits"
    );
    assert_eq!(lines.next().unwrap(), "ff,2,1,0,0,0,0,0,1,1,2,2,2.0000");
    assert_eq!(
        lines.next().unwrap(),
        "optimal,2,1,0,0,0,0,0,1,1,2,2,2.0000"
    );
}

#[test]
fn bench_is_reproducible_and_clean() {
    let args = [
        "bench",
        "--n",
        "8",
        "--m",
        "4",
        "--count",
        "6",
        "--oracle",
        "--eps",
        "1/2^2,1/2^1",
    ];
    let a = dualbin(&args);
    let b = dualbin(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 1 + 6 * 5 * 2);
}

#[test]
fn bad_input_fails_with_line_number() {
    let path = scratch("bad.txt");
    fs::write(&path, "2 1\n1/2^1\n3/4\n").unwrap();
    let o = dualbin(&["solve", path.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    let o = dualbin(&["gen", "--family", "nope"]);
    assert!(!o.status.success());
}
