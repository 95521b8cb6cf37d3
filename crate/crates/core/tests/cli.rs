use rbp::run_cli;

fn run(args: &[&str]) -> i32 {
    run_cli(std::iter::once("rbp").chain(args.iter().copied()))
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert_eq!(run(&["gen", "--task", "1a", "--seed", "3", "--out", a.to_str().unwrap()]), 0);
    assert_eq!(run(&["gen", "--task", "1a", "--seed", "3", "--out", b.to_str().unwrap()]), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn train_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.json");
    let ck = dir.path().join("m.json");
    let (d, c) = (data.to_str().unwrap(), ck.to_str().unwrap());
    assert_eq!(run(&["gen", "--task", "pred-abb", "--seed", "1", "--out", d]), 0);
    assert_eq!(run(&["train", "--data", d, "--model", "lstm", "--rbp", "3", "--fast", "--out", c]), 0);
    assert_eq!(run(&["eval", "--checkpoint", c, "--data", d]), 0);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["frobnicate"]), 2);
    assert_eq!(run(&["gen", "--task", "1a"]), 2);
    assert_eq!(run(&["gen", "--task", "9z", "--out", "x"]), 2);
    assert_eq!(run(&["reproduce", "--table", "7", "--out", "x.csv"]), 2);
    assert_eq!(run(&["gen", "--task", "1a", "--out", "x", "--unknown"]), 2);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.json");
    // late fusion needs a prediction task
    assert_eq!(
        run(&["train", "--task", "2", "--model", "gru", "--rbp", "3", "--fast", "--out", out.to_str().unwrap()]),
        2
    );
}

#[test]
fn run_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.json");
    assert_eq!(run(&["eval", "--checkpoint", missing.to_str().unwrap(), "--task", "1a"]), 1);
    assert_eq!(run(&["corpus-predict", "--input", missing.to_str().unwrap()]), 1);
}

#[test]
fn reproduce_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t6.csv");
    assert_eq!(
        run(&["reproduce", "--table", "6", "--sims", "2", "--seed", "7", "--fast", "--out", out.to_str().unwrap()]),
        0
    );
    let rows = rbp::harness::read_report_csv(&out).unwrap();
    assert_eq!(rows.len(), 6);
}

#[test]
fn config_file_overrides_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[model]\nepochs = 3\nhidden_size = 5\n").unwrap();
    let ck = dir.path().join("m.json");
    let c = ck.to_str().unwrap();
    assert_eq!(run(&["train", "--task", "1b", "--fast", "--config", cfg.to_str().unwrap(), "--out", c]), 0);
    let m = rbp::model::Model::load(&ck).unwrap();
    assert_eq!((m.config.epochs, m.config.hidden_size), (3, 5));
    std::fs::write(&cfg, "[model]\nepochz = 3\n").unwrap();
    assert_ne!(run(&["train", "--task", "1b", "--fast", "--config", cfg.to_str().unwrap(), "--out", c]), 0);
}

#[test]
fn corpus_file_prediction() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("s.sym");
    std::fs::write(&src, "1 2 3 1 2 3 1 2 3 1 2 3 1 2 3\n4 5 4 5 4 5 4 5 4 5 4 5\n").unwrap();
    let ck = dir.path().join("m.json");
    let args = [
        "corpus-predict",
        "--input",
        src.to_str().unwrap(),
        "--mode",
        "symbols",
        "--model",
        "gru",
        "--rbp",
        "3",
        "--context",
        "3",
        "--out",
        ck.to_str().unwrap(),
    ];
    assert_eq!(run(&args), 0);
    assert!(ck.exists());
}

#[test]
fn gradcheck_passes() {
    assert_eq!(run(&["gradcheck"]), 0);
}
