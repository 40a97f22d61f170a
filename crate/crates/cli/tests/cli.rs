use std::process::{Command, Output};

fn tracegap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tracegap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON")
}

fn table_path() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/../core/data/volumes.json").to_string()
}

#[test]
fn length_check_passes_for_three_bars() {
    let o = tracegap(&["length-check", "--r", "3", "--samples", "500", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["reports"][0]["diagram_id"], "three-bar");
    assert_eq!(v["reports"][0]["seed"], 7);
    assert!(v["max_rel_err"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn impossible_tolerance_is_a_verification_failure() {
    let o = tracegap(&["length-check", "--r", "1", "--samples", "50", "--tol=-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["pass"], false);
}

#[test]
fn vsimple_writes_a_csv_curve() {
    let table = table_path();
    let o = tracegap(&["vsimple", "--table", &table, "--g", "2", "--ell", "1.0..10.0:0.1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "ell,value,err_estimate,g,type");
    assert_eq!(lines.len(), 92);
    assert!(lines[1].starts_with("1,"));
    assert!(lines[91].starts_with("10,"));
    assert!(lines[2].ends_with(",2,simple"));
}

#[test]
fn vsimple_paths_print_the_same_curve() {
    let a = stdout(&tracegap(&["vsimple", "--g", "4", "--ell", "0.5..3:0.5"]));
    let b = stdout(&tracegap(&["vsimple", "--g", "4", "--ell", "0.5..3:0.5", "--via-phi"]));
    let parse = |s: &str| -> Vec<f64> {
        s.lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect()
    };
    for (x, y) in parse(&a).iter().zip(parse(&b)) {
        assert!(((x - y) / x).abs() < 1e-12);
    }
}

#[test]
fn graph_bound_holds_in_all_trials() {
    let o = tracegap(&[
        "graph", "bound", "--n", "50", "--d", "3", "--lmax", "10", "--trials", "100",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["trials"], 100);
    assert_eq!(v["holds"], true);
}

#[test]
fn graph_dump_round_trips_through_walks() {
    let dir = std::env::temp_dir().join(format!("tracegap-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let dump = dir.join("g.txt");
    let dump_s = dump.to_str().unwrap();
    let a = tracegap(&[
        "graph", "walks", "--n", "8", "--d", "3", "--lmax", "5", "--seed", "4", "--dump", dump_s,
    ]);
    let b = tracegap(&["graph", "walks", "--graph", dump_s, "--lmax", "5", "--oracle"]);
    assert_eq!(b.status.code(), Some(0));
    let counts = |s: &str| -> Vec<String> {
        s.lines()
            .map(|l| l.split(',').take(2).collect::<Vec<_>>().join(","))
            .collect()
    };
    assert_eq!(counts(&stdout(&a)), counts(&stdout(&b)));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn out_flag_writes_the_file() {
    let dir = std::env::temp_dir().join(format!("tracegap-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("mc.csv");
    let o = tracegap(&[
        "graph",
        "mc",
        "--n",
        "100",
        "--d",
        "3",
        "--lmax",
        "6",
        "--trials",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("ell,mean_count,stderr,n,d,trials,seed\n"));
    assert_eq!(text.lines().count(), 7);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn usage_and_input_errors_exit_with_two() {
    for args in [
        &["frobnicate"][..],
        &["length-check", "--samples", "many"],
        &[
            "vsimple",
            "--table",
            "/definitely/not/here.json",
            "--g",
            "2",
            "--ell",
            "1..2",
        ],
        &["length-check", "--r", "1", "--out", "/definitely/not/here/out.json"],
        &["length-check", "--diagram", "no-such-diagram"],
        &["length-check", "--r", "1", "--format", "csv"],
        &["fr", "norm", "--fn", "1;x3"],
        &["fr", "convolve", "--fn", "1;0"],
        &["graph", "spectrum", "--graph", "/definitely/not/here.txt"],
        &["vsimple", "--g", "2", "--ell", "5..1"],
    ] {
        let o = tracegap(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"), "{args:?}");
    }
}

#[test]
fn fr_commands() {
    let o = tracegap(&[
        "fr", "apply-op", "--op", "l", "--fn", "1;0", "--grid", "0.01:12", "--every", "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    for line in stdout(&o).lines().skip(1) {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((v - 1.0).abs() < 1e-9, "{line}");
    }

    let o = tracegap(&["fr", "norm", "--fn", "1;exp(0.5*x);1;1", "--grid", "0.01:20"]);
    let v = json(&o);
    assert!((v["norm"].as_f64().unwrap() - 2.0).abs() < 1e-9);

    let o = tracegap(&["fr", "charfr", "--fn", "2,-1;0", "--grid", "0.01:20"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["member"], true);
    let o = tracegap(&["fr", "charfr", "--fn", ";exp(0.8*x);0;1", "--grid", "0.01:20"]);
    assert_eq!(o.status.code(), Some(1));

    let o = tracegap(&[
        "fr",
        "pseudo",
        "--fn",
        "1;0",
        "--fn",
        "1;exp(0.3*x)",
        "--ell",
        "1..10:3",
        "--grid",
        "0.01:12",
        "--compare",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("ell,value,err,convolution\n"));

    let o = tracegap(&[
        "fr",
        "class-e",
        "--phi",
        "1 + exp(-x1-x2)",
        "--n",
        "2",
        "--bound",
        "1.5",
        "--samples",
        "50",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = tracegap(&[
        "fr",
        "class-e",
        "--phi",
        "exp(x1*x2/100)",
        "--n",
        "2",
        "--bound",
        "1",
        "--samples",
        "50",
    ]);
    assert_eq!(o.status.code(), Some(1));

    let o = tracegap(&["fr", "l0", "--level", "x1 + x2 + exp(-x1)", "--n", "2"]);
    assert_eq!(json(&o)["l0"], 0.0);
}

#[test]
fn volume_commands() {
    let o = tracegap(&["volumes", "validate"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["lints"].as_array().unwrap().len(), 0);

    let o = tracegap(&["volumes", "inspect", "--g", "1", "--n", "1"]);
    assert_eq!(json(&o)["degree"], 2);

    let o = tracegap(&["volumes", "realizations", "--sig", "0,3", "--g", "2"]);
    assert_eq!(json(&o)["terms"].as_array().unwrap().len(), 4);

    // export is canonical, so re-exporting the export is a fixed point
    let dir = std::env::temp_dir().join(format!("tracegap-vol-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let first = dir.join("a.json");
    tracegap(&["volumes", "export", "--out", first.to_str().unwrap()]);
    let again = tracegap(&["volumes", "export", "--table", first.to_str().unwrap()]);
    assert_eq!(std::fs::read(&first).unwrap(), again.stdout);
    std::fs::remove_dir_all(&dir).unwrap();

    let o = tracegap(&["vtype", "--g", "3", "--ell", "5", "--n-t", "2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v[0]["type"], "figure-eight");
    assert!(v[0]["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn geometry_checks_pass() {
    let o = tracegap(&["jacobian-check", "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0));
    let o = tracegap(&["density-check", "--samples", "20"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["report"]["log2_constant"], 2);
}

#[test]
fn ramanujan_fit_reads_counts() {
    let dir = std::env::temp_dir().join(format!("tracegap-fit-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let exact = dir.join("exact.csv");
    let fast = dir.join("fast.csv");
    let mut a = String::from("ell,count\n");
    let mut b = a.clone();
    for ell in 1..=16 {
        a.push_str(&format!("{ell},{}\n", 2f64.powi(ell) * (1.0 + 0.5 * ell as f64)));
        b.push_str(&format!("{ell},{}\n", 2f64.powi(ell) + 2f64.powf(0.75 * ell as f64)));
    }
    std::fs::write(&exact, a).unwrap();
    std::fs::write(&fast, b).unwrap();
    let o = tracegap(&["graph", "fit", "--d", "3", "--counts", exact.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let o = tracegap(&[
        "graph",
        "fit",
        "--d",
        "3",
        "--counts",
        fast.to_str().unwrap(),
        "--degree",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(1));
    std::fs::remove_dir_all(&dir).unwrap();
}
