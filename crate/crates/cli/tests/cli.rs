mod common;

use std::fs;

use common::{fixture_dir, lexaug, run_ok, snapshot, ToyWorld};

#[test]
fn guitar_fixture_build() {
    let out = tempfile::tempdir().unwrap();
    let config = fixture_dir("guitar").join("config.toml");
    run_ok(&["build", "--config", config.to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    let tgt = fs::read_to_string(out.path().join("1/train.tgt")).unwrap();
    assert_eq!(tgt, "<clean> Ew gîtarê pir baş lê dide\n<noisy> Ew gulê pir baş lê dide\n");
    let base = fs::read_to_string(out.path().join("0K/train.tgt")).unwrap();
    assert_eq!(base, "Ew gîtarê pir baş lê dide\n");
    let manifest = fs::read_to_string(out.path().join("manifest")).unwrap();
    assert!(manifest.starts_with("# rng_seed=0\n"));
    assert_eq!(manifest.lines().count(), 5);
}

#[test]
fn naive_strategy_flag() {
    let out = tempfile::tempdir().unwrap();
    let config = fixture_dir("guitar").join("config.toml");
    run_ok(&[
        "build",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
        "--strategy",
        "naive",
    ]);
    let tgt = fs::read_to_string(out.path().join("1/train.tgt")).unwrap();
    assert!(tgt.ends_with("<noisy> Ew gul pir baş lê dide\n"), "{tgt}");
}

#[test]
fn stages_match_build() {
    let dir = tempfile::tempdir().unwrap();
    let config = ToyWorld::with_lexicon_size(80).write(dir.path(), 30, 3, 1, "tiers = [20, 60]\nlm_side = \"sum\"\n");
    let c = config.to_str().unwrap();
    let whole = dir.path().join("whole");
    let staged = dir.path().join("staged");
    run_ok(&["build", "--config", c, "--out", whole.to_str().unwrap()]);
    for stage in ["align", "train-lm", "augment", "filter", "emit"] {
        run_ok(&[stage, "--config", c, "--out", staged.to_str().unwrap()]);
    }
    assert_eq!(snapshot(&whole), snapshot(&staged));
}

#[test]
fn seeds_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = ToyWorld::with_lexicon_size(80).write(dir.path(), 30, 0, 2, "tiers = [40]\nselection = \"random\"\n");
    let c = config.to_str().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_ok(&["build", "--config", c, "--out", a.to_str().unwrap(), "--seed", "1"]);
    run_ok(&["build", "--config", c, "--out", b.to_str().unwrap(), "--seed", "2"]);
    assert_ne!(
        fs::read(a.join("40/train.tgt")).unwrap(),
        fs::read(b.join("40/train.tgt")).unwrap()
    );
}

#[test]
fn five_seed_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = ToyWorld::with_lexicon_size(300).write(dir.path(), 5, 0, 3, "tiers = [5000]\nalignment = \"seed.pharaoh\"\n");
    let c = config.to_str().unwrap();
    run_ok(&["build", "--config", c]);
    let text = run_ok(&["stats", "--config", c]);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("tier=0K\tsize=0\tseeds=0\t"), "{}", rows[0]);
    assert!(rows[1].starts_with("tier=5K\tsize=5000\tseeds=5\t"), "{}", rows[1]);
    assert!(rows[1].contains("mean_ppl="));
}

#[test]
fn stage_out_of_order_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let config = ToyWorld::with_lexicon_size(40).write(dir.path(), 5, 0, 4, "");
    let out = lexaug().args(["filter", "--config", config.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("lexaug: error[config]: "), "{err}");
    assert!(err.contains("run `lexaug train-lm` first"), "{err}");
}

#[test]
fn too_many_tiers_is_a_capacity_error() {
    let out_dir = tempfile::tempdir().unwrap();
    let config = fixture_dir("guitar").join("config.toml");
    let out = lexaug()
        .args(["build", "--config", config.to_str().unwrap(), "--out", out_dir.path().to_str().unwrap()])
        .args(["--tiers", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("error[capacity]"), "{err}");
}

#[test]
fn validate_reports_problems() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "source = \"nope.en\"\nlm_order = 0\nunknown_key = 1\n").unwrap();
    let out = lexaug().args(["validate", "--config", config.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("unknown_key"), "{err}");

    let good = ToyWorld::with_lexicon_size(40).write(dir.path(), 5, 0, 5, "");
    let text = run_ok(&["validate", "--config", good.to_str().unwrap()]);
    assert!(text.trim_end().ends_with("ok"));
    let keys = run_ok(&["validate", "--keys"]);
    assert!(keys.lines().any(|l| l.starts_with("rng_seed")));
}

#[test]
fn env_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = ToyWorld::with_lexicon_size(40).write(dir.path(), 5, 0, 6, "");
    let out = lexaug()
        .args(["validate"])
        .env("LEXAUG_CONFIG", &config)
        .env("LEXAUG_SEED", "77")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("77"));
}

#[test]
fn bleu_command() {
    let dir = tempfile::tempdir().unwrap();
    let r = dir.path().join("ref.txt");
    fs::write(&r, "the cat sat on the mat\n").unwrap();
    let text = run_ok(&["bleu", "--hyp", r.to_str().unwrap(), "--ref", r.to_str().unwrap()]);
    assert!(text.starts_with("BLEU = 100.00"), "{text}");
}
