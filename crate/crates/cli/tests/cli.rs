use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn shorcert(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shorcert"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn prime_and_prime_power_moduli_are_rejected() {
    let dir = TempDir::new().unwrap();
    let out = shorcert(dir.path(), &["factor", "13"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("prime"));

    let out = shorcert(dir.path(), &["factor", "16"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("even"));

    let out = shorcert(dir.path(), &["factor", "27"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("prime power"), "{}", stderr(&out));

    let out = shorcert(dir.path(), &["simulate", "--modulus", "13"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn bad_flags_exit_with_config_code() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&shorcert(dir.path(), &["bogus"])), 1);
    assert_eq!(code(&shorcert(dir.path(), &["factor", "15", "--noise", "loud"])), 1);
    assert_eq!(code(&shorcert(dir.path(), &["--help"])), 0);
}

#[test]
fn oversized_circuits_exit_with_capacity_code() {
    let dir = TempDir::new().unwrap();
    let out = shorcert(
        dir.path(),
        &["simulate", "--modulus", "35", "--base", "4", "--backend", "arith", "--phase-bits", "10"],
    );
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("capacity"));
}

#[test]
fn missing_files_exit_with_io_code() {
    let dir = TempDir::new().unwrap();
    let out = shorcert(dir.path(), &["certify", "absent.csv", "--modulus", "15", "--base", "7"]);
    assert_eq!(code(&out), 3);
    let out = shorcert(dir.path(), &["simulate", "--config", "absent.toml"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn exhausted_attempt_cap_exits_with_code_four() {
    // fully depolarized outcomes rarely decode to the order; seed 1 is a known miss
    let dir = TempDir::new().unwrap();
    let out = shorcert(
        dir.path(),
        &["factor", "21", "--base", "2", "--noise", "uniform:1", "--attempt-cap", "1", "--seed", "1", "--out", "o"],
    );
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    let trace = read_json(&dir.path().join("o/factor_21.json"));
    assert_eq!(trace["attempts"].as_array().unwrap().len(), 1);
    assert!(trace["factors"].is_null());
}

#[test]
fn factor_prints_the_split_and_writes_a_trace() {
    let dir = TempDir::new().unwrap();
    let out = shorcert(dir.path(), &["factor", "15", "--seed", "1", "--out", "o"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).starts_with("15 = 3 × 5"));
    let trace = read_json(&dir.path().join("o/factor_15.json"));
    assert_eq!(trace["meta"]["seed"], 1);
    assert_eq!(trace["meta"]["command"], "factor");
}

#[test]
fn same_seed_gives_byte_identical_histograms() {
    let dir = TempDir::new().unwrap();
    for out in ["a", "b"] {
        let res = shorcert(
            dir.path(),
            &["simulate", "--modulus", "21", "--base", "2", "--seed", "77", "--out", out],
        );
        assert_eq!(code(&res), 0, "{}", stderr(&res));
    }
    let a = fs::read(dir.path().join("a/N21_a2_t10_histogram.csv")).unwrap();
    let b = fs::read(dir.path().join("b/N21_a2_t10_histogram.csv")).unwrap();
    assert_eq!(a, b);

    let other = shorcert(
        dir.path(),
        &["simulate", "--modulus", "21", "--base", "2", "--seed", "78", "--out", "c"],
    );
    assert_eq!(code(&other), 0);
    let c = fs::read(dir.path().join("c/N21_a2_t10_histogram.csv")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn simulate_from_manifest_writes_every_artifact() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "schema = 1\nname = \"small\"\nmodulus = 15\nbase = 7\nphase_bits = 9\nshots = 2048\nseed = 5\nplot = true\nout = \"m\"\n",
    )
    .unwrap();
    let out = shorcert(dir.path(), &["simulate", "--config", "run.toml"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).starts_with("N=15 a=7: PASS"));
    for file in ["small_histogram.csv", "small_histogram.json", "small_report.json", "small_histogram.svg"] {
        assert!(dir.path().join("m").join(file).is_file(), "missing {file}");
    }
    let report = read_json(&dir.path().join("m/small_report.json"));
    assert_eq!(report["meta"]["seed"], 5);
    assert_eq!(report["meta"]["config"]["phase_bits"], 9);
    assert_eq!(report["grid_size"], 512);
    assert_eq!(report["verdict"], "PASS");

    // unknown keys are configuration errors
    fs::write(dir.path().join("bad.toml"), "schema = 1\nmodulus = 15\nshotz = 1\n").unwrap();
    assert_eq!(code(&shorcert(dir.path(), &["simulate", "--config", "bad.toml"])), 1);
}

#[test]
fn certify_reads_back_simulated_histograms() {
    let dir = TempDir::new().unwrap();
    let sim = shorcert(
        dir.path(),
        &["simulate", "--modulus", "15", "--base", "7", "--phase-bits", "9", "--seed", "11", "--out", "s"],
    );
    assert_eq!(code(&sim), 0);
    let simulated = read_json(&dir.path().join("s/N15_a7_t9_report.json"));

    for input in ["s/N15_a7_t9_histogram.csv", "s/N15_a7_t9_histogram.json"] {
        let out = shorcert(
            dir.path(),
            &["certify", input, "--modulus", "15", "--base", "7", "--out", "c"],
        );
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let report = read_json(&dir.path().join("c/N15_a7_t9_report.json"));
        for key in ["hits", "shots", "verdict", "accepted_bins", "log10_p_value"] {
            assert_eq!(report[key], simulated[key], "{key} via {input}");
        }
        assert_eq!(report["meta"]["seed"], 11);
    }

    let out = shorcert(dir.path(), &["certify", "s/N15_a7_t9_histogram.csv", "--modulus", "15", "--order", "3"]);
    assert_eq!(code(&out), 0);
    let out = shorcert(
        dir.path(),
        &["certify", "s/N15_a7_t9_histogram.csv", "--modulus", "15", "--base", "7", "--order", "3"],
    );
    assert_eq!(code(&out), 1);
}

#[test]
fn certify_hand_written_counts() {
    // 741 of 2048 shots spread over the four windows of r = 4, t = 9
    let dir = TempDir::new().unwrap();
    let mut csv = String::from("y,bitstring,count\n");
    let rest = 2048 - 741;
    for y in 0..512u32 {
        let count = match y {
            0 => 186,
            128 => 185,
            256 => 185,
            384 => 185,
            64 | 192 | 320 | 448 => {
                let c = rest / 4;
                c + if y == 64 { rest % 4 } else { 0 }
            }
            _ => 0,
        };
        csv.push_str(&format!("{y},{y:09b},{count}\n"));
    }
    fs::write(dir.path().join("counts.csv"), csv).unwrap();
    let out = shorcert(
        dir.path(),
        &["certify", "counts.csv", "--modulus", "15", "--base", "7", "--format", "csv", "--out", "c"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).starts_with("N=15 a=7: PASS (p=2.02e-25"), "{}", stdout(&out));
    let table = fs::read_to_string(dir.path().join("c/counts_report.csv")).unwrap();
    assert!(table.lines().any(|l| l.starts_with("# seed=none")));
}

#[test]
fn all_zero_histogram_is_rejected() {
    let dir = TempDir::new().unwrap();
    let mut csv = String::from("y,bitstring,count\n");
    for y in 0..16u32 {
        csv.push_str(&format!("{y},{y:04b},0\n"));
    }
    fs::write(dir.path().join("zero.csv"), csv).unwrap();
    let out = shorcert(dir.path(), &["certify", "zero.csv", "--modulus", "15", "--base", "7"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn replicate_recorded_counts() {
    let dir = TempDir::new().unwrap();
    let out = shorcert(dir.path(), &["replicate", "all", "--out", "r"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let verdicts: Vec<&str> = text
        .lines()
        .map(|l| if l.contains(": PASS") { "PASS" } else { "FAIL" })
        .collect();
    assert_eq!(verdicts, ["PASS", "PASS", "FAIL", "PASS"]);
    let n35 = read_json(&dir.path().join("r/N35_a4_paper-counts_report.json"));
    assert_eq!(n35["hits"], 751);
    assert_eq!(n35["shots"], 4096);
    assert_eq!(n35["meta"]["config"]["experiment"], "N35_a4");
}

#[test]
fn replicate_by_simulation_passes_n21() {
    let dir = TempDir::new().unwrap();
    let out = shorcert(dir.path(), &["replicate", "N21", "--source", "simulate", "--seed", "4", "--out", "r"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("PASS"));
    assert!(dir.path().join("r/N21_simulate_histogram.csv").is_file());
    assert_eq!(code(&shorcert(dir.path(), &["replicate", "N99"])), 1);
}

#[test]
fn sweep_covers_every_coprime_base() {
    let dir = TempDir::new().unwrap();
    let run = |threads: &str, out: &str| {
        shorcert(
            dir.path(),
            &["sweep", "15", "--shots", "256", "--seed", "3", "--threads", threads, "--out", out],
        )
    };
    let one = run("1", "one");
    assert_eq!(code(&one), 0, "{}", stderr(&one));
    assert_eq!(code(&run("4", "four")), 0);
    let summary = read_json(&dir.path().join("one/sweep_N15.json"));
    let bases: Vec<u64> = summary["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["base"].as_u64().unwrap())
        .collect();
    assert_eq!(bases, [2, 4, 7, 8, 11, 13, 14]);
    assert!((summary["nu_exact"].as_f64().unwrap() - 6.0 / 7.0).abs() < 1e-12);
    assert_eq!(
        fs::read(dir.path().join("one/sweep_N15.csv")).unwrap(),
        fs::read(dir.path().join("four/sweep_N15.csv")).unwrap(),
        "thread count must not change results"
    );
}
