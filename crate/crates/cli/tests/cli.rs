use std::path::PathBuf;
use std::process::{Command, Output};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use rlcap::capacity::{solve_capacity, DEFAULT_TOL};
use rlcap::maxent::build_maxent;
use rlcap::ConstrainedSystem;

fn fixture(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("tests/fixtures");
    p.push(name);
    p.to_string_lossy().into_owned()
}

fn rlcap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rlcap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json output")
}

#[test]
fn capacity_of_rll_preset() {
    let o = rlcap(&["capacity", "--preset", "rll", "--kmax", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(
        stdout(&o).starts_with("capacity: 0.4812118251 nats\n"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn capacity_json_matches_library() {
    let o = rlcap(&[
        "--json", "capacity", "--preset", "async", "--xi", "2", "--labels", "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let lib = solve_capacity(
        &ConstrainedSystem::asynchronous(rlcap::Weight::integer(2), 2).unwrap(),
        DEFAULT_TOL,
    )
    .unwrap();
    assert_eq!(v["command"], "capacity");
    assert_eq!(v["result"]["capacity"].as_f64().unwrap(), lib.capacity);
    assert!(
        v["result"]["residual"].as_f64().unwrap()
            <= v["tolerances"]["residual_tolerance"].as_f64().unwrap()
    );
    assert_eq!(v["inputs"]["preset"], "async");
    assert!(v["seed"].is_null());
}

#[test]
fn degenerate_capacity_exits_two() {
    let o = rlcap(&["capacity", &fixture("degenerate.json")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).starts_with("capacity: 0.0000000000 nats"));
}

#[test]
fn genfun_values() {
    let o = rlcap(&[
        "--json",
        "genfun",
        &fixture("naturals.json"),
        "--at",
        &std::f64::consts::LN_2.to_string(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert!((v["result"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(v["result"]["tail_bound"].as_f64().unwrap(), 0.0);

    let o = rlcap(&[
        "--json",
        "genfun",
        &fixture("rll2.json"),
        "--at",
        "C",
        "--which",
        "support",
    ]);
    let v = json(&o);
    assert!((v["result"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn genfun_divergence_is_an_error() {
    let o = rlcap(&["genfun", &fixture("naturals.json"), "--at", "-0.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("diverges"));
}

#[test]
fn enumerate_counts() {
    let o = rlcap(&["enumerate", &fixture("rll2.json"), "--max-weight", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let counts: Vec<String> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().to_string())
        .collect();
    assert_eq!(counts, ["2", "4", "6", "10", "16"]);

    let o = rlcap(&[
        "enumerate",
        &fixture("degenerate.json"),
        "--max-weight",
        "4",
    ]);
    assert!(stdout(&o)
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(1) == Some("2")));
}

#[test]
fn enumerate_writes_csv_file() {
    let path = std::env::temp_dir().join(format!("rlcap-cli-{}.csv", std::process::id()));
    let o = rlcap(&[
        "enumerate",
        &fixture("rll2.json"),
        "--max-weight",
        "3",
        "--csv",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert!(text.starts_with("weight,count,cumulative,estimate\n1,2,2,"));
}

#[test]
fn enumerate_refuses_pi() {
    let o = rlcap(&[
        "enumerate",
        &fixture("one_two_pi.json"),
        "--max-weight",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("pi"));
}

#[test]
fn sampling_is_deterministic_and_matches_library() {
    let args = [
        "sample", "--preset", "rll", "--kmax", "3", "--blocks", "200", "--seed", "99",
    ];
    let a = rlcap(&args);
    let b = rlcap(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);

    let proc = build_maxent(&ConstrainedSystem::rll(3).unwrap(), "0").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let expected: String = (0..200)
        .map(|_| format!("{}\n", proc.sample_block(&mut rng)))
        .collect();
    assert_eq!(stdout(&a), expected);

    let c = rlcap(&[
        "sample", "--preset", "rll", "--kmax", "3", "--blocks", "200", "--seed", "100",
    ]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn default_seed_is_reported() {
    let o = rlcap(&["--json", "sample", &fixture("rll2.json"), "--blocks", "3"]);
    assert_eq!(json(&o)["seed"].as_u64(), Some(20_240_601));
}

#[test]
fn validate_reports_ambiguity() {
    let o = rlcap(&[
        "validate",
        &fixture("one_two_pi.json"),
        "--support",
        &fixture("ambiguous.txt"),
        "--depth",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stdout(&o).contains("ambiguous [1] and [0, 0] -> red:2"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn validate_accepts_support_truncation() {
    let o = rlcap(&[
        "validate",
        &fixture("rll2.json"),
        "--support",
        &fixture("rll2_support.txt"),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("valid"));
}

#[test]
fn rate_agrees_with_capacity() {
    let o = rlcap(&[
        "--json", "rate", "--preset", "rll", "--kmax", "2", "--blocks", "1000",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let c = v["result"]["capacity"].as_f64().unwrap();
    assert!((v["result"]["iid"]["rate"].as_f64().unwrap() - c).abs() < 1e-6);
    assert!((v["result"]["markov"]["rate"].as_f64().unwrap() - c).abs() < 1e-9);
}

#[test]
fn several_specs_in_parallel() {
    let specs = [
        fixture("rll2.json"),
        fixture("naturals.json"),
        fixture("degenerate.json"),
    ];
    let mut args = vec!["--jobs", "3", "capacity"];
    args.extend(specs.iter().map(String::as_str));
    let o = rlcap(&args);
    assert_eq!(o.status.code(), Some(2));
    let text = stdout(&o);
    let headers: Vec<&str> = text.lines().filter(|l| l.starts_with("==")).collect();
    assert_eq!(headers.len(), 3);
    assert!(headers[0].contains("rll2.json") && headers[2].contains("degenerate.json"));

    let serial = rlcap(
        &[
            &["capacity"][..],
            &specs.iter().map(String::as_str).collect::<Vec<_>>()[..],
        ]
        .concat(),
    );
    assert_eq!(serial.stdout, o.stdout);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(rlcap(&["capacity"]).status.code(), Some(1));
    assert_eq!(
        rlcap(&["capacity", "--preset", "rll"]).status.code(),
        Some(1)
    );
    assert_eq!(rlcap(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        rlcap(&["capacity", "/no/such/file.json"]).status.code(),
        Some(1)
    );
}
