//! End-to-end tests of the `lrtk` binary: each test invokes the compiled
//! executable the way a user would and checks its files, streams, and exit
//! status.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lrtk::corpus::parse_tagged_corpus;

fn lrtk(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrtk"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Generate a small corpus file and return its parsed sentence count.
fn synth_small(dir: &Path, seed: &str, tokens: &str, name: &str) -> usize {
    let out = lrtk(
        dir,
        &[
            "synth",
            "--seed",
            seed,
            "--vocab-size",
            "300",
            "--token-count",
            tokens,
            "--out",
            name,
        ],
    );
    assert_success(&out);
    let text = fs::read(dir.join(name)).unwrap();
    parse_tagged_corpus(&text[..]).unwrap().len()
}

#[test]
fn synth_writes_identical_bytes_for_identical_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = lrtk(
        dir.path(),
        &["synth", "--seed", "7", "--token-count", "4000", "--out", "a.tsv"],
    );
    assert_success(&out);
    let out = lrtk(
        dir.path(),
        &["synth", "--seed", "7", "--token-count", "4000", "--out", "b.tsv"],
    );
    assert_success(&out);
    let a = fs::read(dir.path().join("a.tsv")).unwrap();
    let b = fs::read(dir.path().join("b.tsv")).unwrap();
    assert_eq!(a, b, "same seed must give identical corpora");

    let out = lrtk(
        dir.path(),
        &["synth", "--seed", "8", "--token-count", "4000", "--out", "c.tsv"],
    );
    assert_success(&out);
    let c = fs::read(dir.path().join("c.tsv")).unwrap();
    assert_ne!(a, c, "a different seed must change the corpus");

    // The output is well-formed: it parses, and every sentence is tagged
    // tokens only.
    let sentences = parse_tagged_corpus(&a[..]).unwrap();
    assert!(!sentences.is_empty());
    assert!(sentences.iter().all(|s| !s.tokens.is_empty()));
}

#[test]
fn count_produces_the_hand_computed_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    // Sentence 1: the span starts at token 1, too close to the sentence
    // start to have a left-context bigram. Sentence 2: the LOC span at
    // tokens 2-3 is preceded by the bigram (in, new).
    let corpus = "new\tO\nyork\tLOC\n\nin\tO\nnew\tO\nyork\tLOC\ncity\tLOC\n";
    fs::write(dir.path().join("tiny.tsv"), corpus).unwrap();
    let out = lrtk(
        dir.path(),
        &["count", "--corpus", "tiny.tsv", "--out", "tiny.snap"],
    );
    assert_success(&out);
    let snapshot = fs::read_to_string(dir.path().join("tiny.snap")).unwrap();
    let expected = "#n_de=4 n_nu=1 theta=none\n\
                    in\tnew\t1\t1\n\
                    new\tyork\t2\t0\n\
                    york\tcity\t1\t0\n";
    assert_eq!(snapshot, expected);
}

#[test]
fn count_with_zero_theta_prunes_nothing_but_stamps_the_header() {
    let dir = tempfile::tempdir().unwrap();
    synth_small(dir.path(), "11", "4000", "c.tsv");
    assert_success(&lrtk(
        dir.path(),
        &["count", "--corpus", "c.tsv", "--out", "plain.snap"],
    ));
    assert_success(&lrtk(
        dir.path(),
        &["count", "--corpus", "c.tsv", "--theta", "0", "--out", "zero.snap"],
    ));
    let plain = fs::read_to_string(dir.path().join("plain.snap")).unwrap();
    let zero = fs::read_to_string(dir.path().join("zero.snap")).unwrap();
    let (plain_head, plain_rows) = plain.split_once('\n').unwrap();
    let (zero_head, zero_rows) = zero.split_once('\n').unwrap();
    assert!(plain_head.ends_with("theta=none"));
    assert!(zero_head.ends_with("theta=0"));
    assert_eq!(plain_rows, zero_rows, "theta 0 must not drop any entry");
}

#[test]
fn count_with_positive_theta_shrinks_the_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    synth_small(dir.path(), "11", "8000", "c.tsv");
    assert_success(&lrtk(
        dir.path(),
        &["count", "--corpus", "c.tsv", "--out", "plain.snap"],
    ));
    assert_success(&lrtk(
        dir.path(),
        &["count", "--corpus", "c.tsv", "--theta", "2", "--out", "pruned.snap"],
    ));
    let plain = fs::read_to_string(dir.path().join("plain.snap")).unwrap();
    let pruned = fs::read_to_string(dir.path().join("pruned.snap")).unwrap();
    assert!(pruned.lines().count() < plain.lines().count());
    // Totals in the header are those of the full sample, pruned or not.
    let totals = |text: &str| {
        text.lines()
            .next()
            .unwrap()
            .trim_start_matches('#')
            .split(' ')
            .take(2)
            .map(str::to_owned)
            .collect::<Vec<_>>()
    };
    assert_eq!(totals(&plain), totals(&pruned));
}

#[test]
fn missing_inputs_fail_with_the_offending_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = lrtk(
        dir.path(),
        &["count", "--corpus", "no-such-corpus.tsv", "--out", "x.snap"],
    );
    assert!(!out.status.success());
    assert!(
        stderr_of(&out).contains("no-such-corpus.tsv"),
        "stderr must name the missing file: {}",
        stderr_of(&out)
    );

    let out = lrtk(
        dir.path(),
        &[
            "run",
            "--table",
            "no-such-table.snap",
            "--eval",
            "also-missing.tsv",
            "--estimator",
            "mle",
            "--out",
            "r",
        ],
    );
    assert!(!out.status.success());
    assert!(stderr_of(&out).contains("no-such-table.snap"));
}

#[test]
fn run_writes_a_ranked_list_and_a_recall_curve() {
    let dir = tempfile::tempdir().unwrap();
    synth_small(dir.path(), "1", "20000", "train.tsv");
    synth_small(dir.path(), "2", "8000", "eval.tsv");
    assert_success(&lrtk(
        dir.path(),
        &["count", "--corpus", "train.tsv", "--out", "train.snap"],
    ));
    let out = lrtk(
        dir.path(),
        &[
            "run",
            "--table",
            "train.snap",
            "--eval",
            "eval.tsv",
            "--estimator",
            "mle",
            "--top-k",
            "80",
            "--out",
            "mle",
        ],
    );
    assert_success(&out);

    let ranked = fs::read_to_string(dir.path().join("mle.ranked.csv")).unwrap();
    let mut lines = ranked.lines();
    assert_eq!(lines.next(), Some("first,second,estimate"));
    let mut previous = f64::INFINITY;
    let mut depth = 0;
    for line in lines {
        let estimate: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(estimate <= previous, "estimates must be non-increasing");
        previous = estimate;
        depth += 1;
    }
    assert_eq!(depth, 80);

    let curve = fs::read_to_string(dir.path().join("mle.curve.csv")).unwrap();
    let mut lines = curve.lines();
    assert_eq!(lines.next(), Some("rank,recall,precision"));
    let mut previous = 0.0;
    let mut rank = 0;
    for line in lines {
        rank += 1;
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0].parse::<usize>().unwrap(), rank);
        let recall: f64 = fields[1].parse().unwrap();
        assert!((0.0..=1.0).contains(&recall));
        assert!(recall >= previous, "recall must be non-decreasing");
        previous = recall;
    }
    assert_eq!(rank, 80);
}

#[test]
fn run_treats_a_zero_threshold_l1_like_the_plain_ratio() {
    // With threshold 0 nothing is subtracted from the numerator counts, so
    // the ranking must be byte-identical to the plain ratio estimator's.
    let dir = tempfile::tempdir().unwrap();
    synth_small(dir.path(), "3", "15000", "train.tsv");
    synth_small(dir.path(), "4", "6000", "eval.tsv");
    assert_success(&lrtk(
        dir.path(),
        &["count", "--corpus", "train.tsv", "--out", "train.snap"],
    ));
    for (estimator, theta, prefix) in
        [("mle", None, "mle"), ("l1", Some("0"), "l1zero")]
    {
        let mut args = vec![
            "run", "--table", "train.snap", "--eval", "eval.tsv", "--estimator", estimator,
            "--top-k", "60", "--out", prefix,
        ];
        if let Some(theta) = theta {
            args.extend_from_slice(&["--theta", theta]);
        }
        assert_success(&lrtk(dir.path(), &args));
    }
    let mle = fs::read(dir.path().join("mle.ranked.csv")).unwrap();
    let l1 = fs::read(dir.path().join("l1zero.ranked.csv")).unwrap();
    assert_eq!(mle, l1);
}

#[test]
fn tune_with_an_explicit_hyperparameter_reports_one_candidate() {
    let dir = tempfile::tempdir().unwrap();
    synth_small(dir.path(), "5", "15000", "train.tsv");
    synth_small(dir.path(), "6", "6000", "valid.tsv");
    assert_success(&lrtk(
        dir.path(),
        &["count", "--corpus", "train.tsv", "--out", "train.snap"],
    ));
    let out = lrtk(
        dir.path(),
        &[
            "tune",
            "--table",
            "train.snap",
            "--valid",
            "valid.tsv",
            "--estimator",
            "threshold",
            "--theta",
            "3",
            "--top-k",
            "200",
            "--out",
            "tune.json",
        ],
    );
    assert_success(&out);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("tune.json")).unwrap()).unwrap();
    assert_eq!(report["winner"]["kind"], "threshold");
    assert_eq!(report["winner"]["theta"], 3);
    let results = report["results"].as_array().unwrap();
    assert_eq!(results.len(), 1);
    assert!(results[0]["auc"].as_f64().unwrap() >= 0.0);
}

#[test]
fn tune_without_a_hyperparameter_searches_the_default_grid() {
    let dir = tempfile::tempdir().unwrap();
    synth_small(dir.path(), "5", "15000", "train.tsv");
    synth_small(dir.path(), "6", "6000", "valid.tsv");
    assert_success(&lrtk(
        dir.path(),
        &["count", "--corpus", "train.tsv", "--out", "train.snap"],
    ));
    let out = lrtk(
        dir.path(),
        &[
            "tune",
            "--table",
            "train.snap",
            "--valid",
            "valid.tsv",
            "--estimator",
            "l1",
            "--top-k",
            "200",
            "--out",
            "tune.json",
        ],
    );
    assert_success(&out);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("tune.json")).unwrap()).unwrap();
    assert_eq!(report["results"].as_array().unwrap().len(), 9);
    assert_eq!(report["winner"]["kind"], "l1");
    let best = report["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["auc"].as_f64().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    let winner_theta = report["winner"]["theta"].as_u64().unwrap();
    let winner_auc = report["results"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["candidate"]["theta"].as_u64() == Some(winner_theta))
        .unwrap()["auc"]
        .as_f64()
        .unwrap();
    assert_eq!(winner_auc, best, "the winner must achieve the best area");
}

#[test]
fn bench_prints_a_table_and_writes_a_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = lrtk(
        dir.path(),
        &[
            "bench",
            "--estimator",
            "threshold",
            "--theta",
            "2",
            "--repeats",
            "3",
            "--seed",
            "9",
            "--vocab-size",
            "300",
            "--token-count",
            "6000",
            "--out",
            "bench.json",
        ],
    );
    assert_success(&out);
    let table = String::from_utf8_lossy(&out.stdout).into_owned();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 3, "header, rule, one row:\n{table}");
    assert!(lines[0].contains("Estimator") && lines[0].contains("Time"));
    assert!(lines[2].contains("threshold"));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("bench.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["spec"]["kind"], "threshold");
    assert_eq!(report["config"]["repeats"], 3);
    let runs = report["per_run_times"].as_array().unwrap();
    assert_eq!(runs.len(), 3);
    let mean = report["mean_time_seconds"].as_f64().unwrap();
    let avg = runs.iter().map(|t| t.as_f64().unwrap()).sum::<f64>() / 3.0;
    assert!((mean - avg).abs() <= 1e-12);
    assert!(report["footprint"]["entry_count_nu"].as_u64().unwrap() > 0);
    assert!(
        report.get("rss_kilobytes").is_none(),
        "rss must be absent unless --rss is passed"
    );
}

#[test]
fn plot_renders_curve_files_into_one_svg() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("a.curve.csv"),
        "rank,recall,precision\n1,0.5,1\n2,0.5,0.5\n3,1,0.6666666666666666\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("b.curve.csv"),
        "rank,recall,precision\n1,0,0\n2,0.5,0.25\n3,0.5,0.2\n",
    )
    .unwrap();
    let out = lrtk(
        dir.path(),
        &[
            "plot",
            "a.curve.csv",
            "b.curve.csv",
            "--labels",
            "sharp, gentle",
            "--out",
            "curves.svg",
        ],
    );
    assert_success(&out);
    let svg = fs::read_to_string(dir.path().join("curves.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert!(svg.contains(">sharp<") && svg.contains(">gentle<"));

    // A label count that does not match the file count is rejected.
    let out = lrtk(
        dir.path(),
        &["plot", "a.curve.csv", "--labels", "x, y", "--out", "bad.svg"],
    );
    assert!(!out.status.success());
    assert!(stderr_of(&out).contains("labels"));
}

#[test]
fn hyperparameter_flags_are_checked_against_the_estimator() {
    let dir = tempfile::tempdir().unwrap();
    let out = lrtk(
        dir.path(),
        &[
            "run",
            "--table",
            "unused.snap",
            "--eval",
            "unused.tsv",
            "--estimator",
            "mle",
            "--theta",
            "2",
            "--out",
            "r",
        ],
    );
    assert!(!out.status.success());
    assert!(stderr_of(&out).contains("--theta"));

    let out = lrtk(
        dir.path(),
        &[
            "bench",
            "--estimator",
            "l1",
            "--theta",
            "2",
            "--lambda",
            "0.5",
        ],
    );
    assert!(!out.status.success());
    assert!(stderr_of(&out).contains("--lambda"));

    let out = lrtk(
        dir.path(),
        &[
            "bench",
            "--estimator",
            "cubic",
        ],
    );
    assert!(!out.status.success());
    assert!(stderr_of(&out).contains("cubic"));
}

#[test]
fn config_file_supplies_defaults_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("settings.json"),
        r#"{"seed": 21, "vocab_size": 300, "token_count": 5000, "estimator": "threshold", "theta": 2}"#,
    )
    .unwrap();
    // Config-driven synth equals the flag-driven corpus with the same values.
    assert_success(&lrtk(
        dir.path(),
        &["--config", "settings.json", "synth", "--out", "from-config.tsv"],
    ));
    synth_small(dir.path(), "21", "5000", "from-flags.tsv");
    assert_eq!(
        fs::read(dir.path().join("from-config.tsv")).unwrap(),
        fs::read(dir.path().join("from-flags.tsv")).unwrap()
    );

    // An explicit flag beats the config value.
    assert_success(&lrtk(
        dir.path(),
        &[
            "--config",
            "settings.json",
            "synth",
            "--seed",
            "22",
            "--out",
            "overridden.tsv",
        ],
    ));
    assert_ne!(
        fs::read(dir.path().join("overridden.tsv")).unwrap(),
        fs::read(dir.path().join("from-config.tsv")).unwrap()
    );

    // The config's estimator drives `count`-free subcommands too: tune uses
    // threshold theta=2 from the file, reporting exactly one candidate.
    assert_success(&lrtk(
        dir.path(),
        &["count", "--corpus", "from-config.tsv", "--out", "t.snap"],
    ));
    assert_success(&lrtk(
        dir.path(),
        &["--config", "settings.json", "synth", "--seed", "23", "--out", "v.tsv"],
    ));
    let out = lrtk(
        dir.path(),
        &[
            "--config",
            "settings.json",
            "tune",
            "--table",
            "t.snap",
            "--valid",
            "v.tsv",
            "--out",
            "tune.json",
        ],
    );
    assert_success(&out);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("tune.json")).unwrap()).unwrap();
    assert_eq!(report["winner"]["kind"], "threshold");
    assert_eq!(report["results"].as_array().unwrap().len(), 1);

    // Unknown config keys are typos and fail loudly.
    fs::write(dir.path().join("typo.json"), r#"{"sede": 21}"#).unwrap();
    let out = lrtk(
        dir.path(),
        &["--config", "typo.json", "synth", "--out", "x.tsv"],
    );
    assert!(!out.status.success());
    assert!(stderr_of(&out).contains("sede"));
}
