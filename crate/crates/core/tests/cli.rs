use std::path::PathBuf;
use std::process::{Command, Output};

use fiberwalk::cli::{observed_statistic, Dataset, ExactTest};
use fiberwalk::movesets::{poisson_moves, segre_markov_basis};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn fiberwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fiberwalk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

#[test]
fn shipped_tables_have_expected_orientation() {
    let t1 = Dataset::parse_grid(&std::fs::read_to_string(data("table1_chd.grid")).unwrap()).unwrap();
    assert_eq!((t1.j_levels, t1.k_levels), (7, 8));
    assert_eq!((t1.successes[0][0], t1.trials[0][0]), (2, 53));
    let t2 = Dataset::parse_grid(&std::fs::read_to_string(data("table2_esophageal.grid")).unwrap()).unwrap();
    assert_eq!((t2.j_levels, t2.k_levels), (6, 2));
    let gof = observed_statistic(&t2, ExactTest::GoodnessOfFit).unwrap();
    assert_eq!(gof.df, 4);
    assert!((gof.value - 20.89).abs() < 0.01);
}

#[test]
fn fit_reports_all_models() {
    let out = fiberwalk(&["fit", data("table1_chd.grid").to_str().unwrap()]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["j_levels"], 7);
    assert_eq!(v["fits"].as_array().unwrap().len(), 5);
    let l0 = v["statistics"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["statistic"] == "L_0")
        .unwrap();
    assert!((l0["value"].as_f64().unwrap() - 13.07587).abs() < 5e-4);
    assert_eq!(l0["df"], 11);
}

#[test]
fn fit_single_model_from_long_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    std::fs::write(&path, "j,k,successes,trials\n1,1,1,2\n2,1,2,4\n1,2,3,6\n2,2,1,2\n").unwrap();
    let out = fiberwalk(&["fit", path.to_str().unwrap(), "--format", "csv", "--model", "linear"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["converged"], true);
    for c in v["coefficients"].as_array().unwrap() {
        assert!(c.as_f64().unwrap().abs() < 1e-9);
    }
}

#[test]
fn move_counts() {
    let segre = segre_markov_basis(&poisson_moves(3).unwrap(), &poisson_moves(3).unwrap(), 3, 3)
        .unwrap()
        .len()
        .to_string();
    for (set, sizes, count) in [("poisson", "5", "7"), ("adjacent", "5", "6"), ("segre", "3,3", segre.as_str())] {
        let out = fiberwalk(&["moves", "--set", set, "--sizes", sizes, "--count-only"]);
        assert!(out.status.success());
        assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), count);
    }
    let out = fiberwalk(&["moves", "--set", "poisson", "--sizes", "4"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("move,axis1,delta\n"), "{text}");
}

#[test]
fn verify_holds_and_exits_zero() {
    let out = fiberwalk(&["verify", "--theorem", "thm1", "--sizes", "4", "--cap", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["holds"], true);
    assert!(v["fibers_checked"].as_u64().unwrap() > 0);
}

#[test]
fn usage_and_parse_errors_exit_one() {
    assert_eq!(fiberwalk(&["bogus"]).status.code(), Some(1));
    assert_eq!(fiberwalk(&["verify", "--theorem", "thm1", "--sizes", "4,4"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.grid");
    std::fs::write(&path, "1/2 3/4\n5/4 1/1\n").unwrap();
    let out = fiberwalk(&["fit", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn test_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("small.grid");
    std::fs::write(&grid, "1/3 2/4 0/5\n3/3 1/6 2/2\n").unwrap();
    let run = |tag: &str| {
        let report = dir.path().join(format!("{tag}.json"));
        let hist = dir.path().join(format!("{tag}.csv"));
        let out = fiberwalk(&[
            "test",
            grid.to_str().unwrap(),
            "--burn-in",
            "200",
            "--samples",
            "2000",
            "--seed",
            "5",
            "--out",
            report.to_str().unwrap(),
            "--histogram",
            hist.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (std::fs::read(report).unwrap(), std::fs::read_to_string(hist).unwrap())
    };
    let (a, ha) = run("a");
    let (b, hb) = run("b");
    assert_eq!(a, b);
    assert_eq!(ha, hb);
    assert!(ha.starts_with("bin_left,count\n"));
    let total: u64 = ha.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 2000);
}
