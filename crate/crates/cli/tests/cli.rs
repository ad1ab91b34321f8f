use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use skewcast_cli::run;

fn china() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/ecdc_china_snapshot.csv")
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(snapshot(&path));
        } else {
            out.insert(
                path.strip_prefix(dir).unwrap_or(&path).to_path_buf(),
                fs::read(&path).unwrap(),
            );
        }
    }
    out
}

fn fit(out: &Path, extra: &[&str]) -> i32 {
    let mut args = vec![
        "skewcast".to_string(),
        "fit".into(),
        "--data".into(),
        china().display().to_string(),
        "--country".into(),
        "China".into(),
        "--warmup".into(),
        "300".into(),
        "--samples".into(),
        "300".into(),
        "--allow-unconverged".into(),
        "--out".into(),
        out.display().to_string(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    run(args)
}

#[test]
fn fit_writes_every_artifact_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(fit(&a, &["--seed", "5"]), 0);
    assert_eq!(fit(&b, &["--seed", "5"]), 0);
    let files = snapshot(&a);
    for name in [
        "draws.csv",
        "summary.csv",
        "bands_daily.csv",
        "bands_cumulative.csv",
        "quantities.csv",
        "diagnostics.csv",
        "observed.csv",
        "daily.svg",
        "cumulative.svg",
    ] {
        assert!(files.contains_key(Path::new(name)), "{name} missing");
    }
    assert_eq!(files, snapshot(&b));

    let summary = fs::read_to_string(a.join("summary.csv")).unwrap();
    let params: Vec<&str> = summary
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(params, ["beta", "log_alpha", "eta", "log_p"]);
    // 81 observed days exceed the default horizon of 70
    assert_eq!(
        fs::read_to_string(a.join("bands_daily.csv"))
            .unwrap()
            .lines()
            .count(),
        82
    );
}

#[test]
fn single_chain_reports_na_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(fit(tmp.path(), &["--chains", "1"]), 0);
    let diag = fs::read_to_string(tmp.path().join("diagnostics.csv")).unwrap();
    assert!(diag.lines().skip(1).all(|l| l.ends_with(",NA,NA,NA")));
}

#[test]
fn report_regenerates_identical_plots() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(fit(tmp.path(), &["--horizon", "90"]), 0);
    let daily = fs::read(tmp.path().join("daily.svg")).unwrap();
    let cumulative = fs::read(tmp.path().join("cumulative.svg")).unwrap();
    fs::remove_file(tmp.path().join("daily.svg")).unwrap();
    fs::remove_file(tmp.path().join("cumulative.svg")).unwrap();
    assert_eq!(
        run(["skewcast", "report", "--out", tmp.path().to_str().unwrap()]),
        0
    );
    assert_eq!(fs::read(tmp.path().join("daily.svg")).unwrap(), daily);
    assert_eq!(
        fs::read(tmp.path().join("cumulative.svg")).unwrap(),
        cumulative
    );
    let svg = String::from_utf8(daily).unwrap();
    assert!(svg.contains(">90</text>") && !svg.contains(">91</text>"));
    assert_eq!(svg.matches("<circle").count(), 81);
}

#[test]
fn report_without_artifacts_fails() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(
        run(["skewcast", "report", "--out", tmp.path().to_str().unwrap()]),
        1
    );
}

#[test]
fn usage_and_data_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().display().to_string();
    assert_eq!(
        run(["skewcast", "fit", "--country", "China", "--out", &out]),
        1
    );
    let data = china().display().to_string();
    assert_eq!(
        run([
            "skewcast",
            "fit",
            "--data",
            &data,
            "--country",
            "Atlantis",
            "--out",
            &out
        ]),
        1
    );
    assert_eq!(
        run([
            "skewcast",
            "fit",
            "--data",
            "/nonexistent.csv",
            "--country",
            "China",
            "--out",
            &out
        ]),
        1
    );
}

#[test]
fn forecast_rejects_bad_prior_file() {
    let tmp = tempfile::tempdir().unwrap();
    let prior = tmp.path().join("summary.csv");
    fs::write(&prior, "parameter,mean\nbeta,1\n").unwrap();
    let code = run([
        "skewcast",
        "forecast",
        "--data",
        china().to_str().unwrap(),
        "--country",
        "China",
        "--prior",
        prior.to_str().unwrap(),
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
}

#[test]
fn inputs_are_not_modified() {
    let before = fs::read(china()).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(fit(tmp.path(), &["--chains", "2"]), 0);
    assert_eq!(fs::read(china()).unwrap(), before);
}
