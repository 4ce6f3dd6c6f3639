use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const START: i64 = 1_651_363_200;

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn synthetic_config() -> PathBuf {
    manifest_dir().join("../../configs/synthetic.toml")
}

fn crashnet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crashnet")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "exit {:?}\nstdout:\n{}\nstderr:\n{}", out.status.code(), String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n != ".lock") {
                out.insert(p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// Writes `<SYM>.csv` candle files for the given close paths.
fn write_panel(dir: &Path, closes: &[(&str, Vec<f64>)]) {
    std::fs::create_dir_all(dir).unwrap();
    for (sym, path) in closes {
        let mut s = String::from("ts,open,high,low,close,volume\n");
        for (h, p) in path.iter().enumerate() {
            writeln!(s, "{},{p},{p},{p},{p},1", START + 3600 * h as i64).unwrap();
        }
        std::fs::write(dir.join(format!("{sym}.csv")), s).unwrap();
    }
}

fn csv_config(dir: &Path, assets: &[&str], hours: i64, extra: &str) -> PathBuf {
    let list = assets.iter().map(|a| format!("\"{a}\"")).collect::<Vec<_>>().join(", ");
    let text = format!(
        "[data]\nexchange = \"csv\"\nstore = \"store\"\nstart = {START}\nend = {}\nassets = [{list}]\n\n[corr]\nfocus = []\n\n[events]\na = {}\nb = {}\n\n[stats]\naverage_from = \"a\"\naverage_to = \"b\"\n{extra}",
        START + hours * 3600,
        START + 5 * 3600,
        START + 20 * 3600
    );
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn stats_stage_matches_golden_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = csv_config(dir.path(), &["AAA", "BBB", "CCC", "DDD"], 40, "");
    let cfg = cfg.to_str().unwrap();
    let import = manifest_dir().join("tests/fixtures/panel");
    ok(&crashnet(dir.path(), &["--config", cfg, "fetch", "--source", "csv", "--import", import.to_str().unwrap()]));
    ok(&crashnet(dir.path(), &["--config", cfg, "stats"]));
    let got = std::fs::read_to_string(dir.path().join("out/stats/descriptive.csv")).unwrap();
    let want = std::fs::read_to_string(manifest_dir().join("tests/fixtures/golden/descriptive.csv")).unwrap();
    assert_eq!(got, want);
}

#[test]
fn synthetic_pipeline_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synthetic_config();
    let cfg = cfg.to_str().unwrap();
    ok(&crashnet(dir.path(), &["--config", cfg, "fetch"]));
    for stage in ["stats", "corr", "tmfg", "herd", "imbalance", "report"] {
        ok(&crashnet(dir.path(), &["--config", cfg, stage]));
    }
    let out = dir.path().join("out");

    let descriptive = std::fs::read_to_string(out.join("stats/descriptive.csv")).unwrap();
    assert_eq!(descriptive.lines().count(), 1 + 10 + 1);
    assert!(descriptive.lines().last().unwrap().starts_with("MARKET,"));

    // 10 assets: 3 (10 - 2) = 24 edges in every window
    let edges: Vec<_> = std::fs::read_dir(out.join("tmfg/edges")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(edges.len(), 399 - 24 + 1);
    for e in &edges {
        assert_eq!(std::fs::read_to_string(e).unwrap().lines().count(), 1 + 24, "{}", e.display());
    }

    let index = std::fs::read_to_string(out.join("report/index.md")).unwrap();
    assert!(index.matches("![").count() >= 5);
    for line in index.lines().filter(|l| l.starts_with("![")) {
        let target = line.split('(').nth(1).unwrap().trim_end_matches(')');
        assert!(out.join("report").join(target).is_file(), "{target}");
    }

    let regression = std::fs::read_to_string(out.join("herd/regression.csv")).unwrap();
    assert!(regression.starts_with("form,coef_name,estimate,nw_se,t,p,stars\n"));
    assert!(regression.contains("symmetric,lag,5,,,,"));

    let luna = std::fs::read_to_string(out.join("imbalance/LUNA.csv")).unwrap();
    assert!(luna.starts_with("hour,buy_notional,sell_notional,imbalance\n"));
    assert_eq!(luna.lines().count(), 1 + 400);
}

#[test]
fn refetch_adds_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synthetic_config();
    let cfg = cfg.to_str().unwrap();
    ok(&crashnet(dir.path(), &["--config", cfg, "fetch"]));
    let before = files(&dir.path().join("store"));
    let second = ok(&crashnet(dir.path(), &["--config", cfg, "fetch"]));
    assert!(second.contains("fetched 0 symbol-days (0 rows)"), "{second}");
    assert_eq!(files(&dir.path().join("store")), before);
}

#[test]
fn usage_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synthetic_config();
    let cfg = cfg.to_str().unwrap();
    let out = crashnet(dir.path(), &["--config", cfg, "--set", "data.assets=[\"BTC\", \"luna\"]", "fetch"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("luna"));

    let out = crashnet(dir.path(), &["--config", cfg, "fetch", "--source", "nowhere"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere"));

    assert_eq!(crashnet(dir.path(), &["stats", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(crashnet(dir.path(), &["--config", cfg, "--set", "corr.window=1", "corr"]).status.code(), Some(2));

    ok(&crashnet(dir.path(), &["--config", cfg, "fetch"]));
    let out = crashnet(dir.path(), &["--config", cfg, "--set", "corr.focus=[\"XRP\"]", "corr"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("XRP"));
}

#[test]
fn runtime_errors_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synthetic_config();
    let cfg = cfg.to_str().unwrap();
    // nothing fetched yet
    let out = crashnet(dir.path(), &["--config", cfg, "stats"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fetch"));

    ok(&crashnet(dir.path(), &["--config", cfg, "fetch"]));
    for stage in ["stats", "corr", "tmfg", "imbalance"] {
        ok(&crashnet(dir.path(), &["--config", cfg, stage]));
    }
    let out = crashnet(dir.path(), &["--config", cfg, "report"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage `herd`"));
}

/// Two assets whose spread is a chosen function of the market return, so
/// CSAD = alpha + b1 |rm| + b2 rm^2 + noise by construction.
fn dispersion_panel(b2: f64, seed: u64) -> Vec<(&'static str, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let market = Normal::new(0.0, 0.03).unwrap();
    let noise = Normal::new(0.0, 0.0005).unwrap();
    let (mut a, mut b) = (vec![100.0], vec![100.0]);
    for _ in 1..300 {
        let rm: f64 = market.sample(&mut rng);
        let d = 0.005 + 0.5 * rm.abs() + b2 * rm * rm + noise.sample(&mut rng);
        a.push(a.last().unwrap() * (rm + d).exp());
        b.push(b.last().unwrap() * (rm - d).exp());
    }
    vec![("UP", a), ("DOWN", b)]
}

fn herd_summary(b2: f64) -> String {
    let dir = tempfile::tempdir().unwrap();
    write_panel(&dir.path().join("csv"), &dispersion_panel(b2, 11));
    let cfg = csv_config(dir.path(), &["DOWN", "UP"], 300, "\n[herd]\nwindow = 120\nstep = 10\n");
    let cfg = cfg.to_str().unwrap();
    ok(&crashnet(dir.path(), &["--config", cfg, "fetch", "--source", "csv", "--import", "csv"]));
    ok(&crashnet(dir.path(), &["--config", cfg, "herd"]));
    std::fs::read_to_string(dir.path().join("out/herd/summary.txt")).unwrap()
}

#[test]
fn herd_verdicts_on_simulated_dispersion() {
    let none = herd_summary(0.0);
    assert!(none.contains("no significant herding"), "{none}");
    let some = herd_summary(-3.0);
    assert!(some.contains("herding detected: symmetric rm_sq"), "{some}");
}

#[test]
fn show_config_reflects_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&crashnet(dir.path(), &["--theta", "0.5", "--lag", "4", "--exclude-sector", "Stablecoins", "--seed", "7", "show-config"]));
    assert!(out.contains("theta = 0.5"));
    assert!(out.contains("lag = 4"));
    assert!(out.contains("exclude_sectors = [\"Stablecoins\"]"));
    assert!(out.contains("seed = 7"));
}
