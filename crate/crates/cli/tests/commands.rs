use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mirnet_core::blocks::{Mirnet, NetworkConfig, ParamStore};
use mirnet_core::data::{load_ppm, procedural_texture, save_ppm};
use mirnet_core::tensor::write_checkpoint;
use mirnet_forge::gradcheck::BLOCKS;
use tempfile::TempDir;

fn forge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mirnet-forge")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Two 48x48 training and two 40x36 test textures plus a short config.
fn toy(extra: &str) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    for i in 0..2 {
        save_ppm(&procedural_texture(48, 48, i), dir.path().join(format!("a{i}.ppm"))).unwrap();
        save_ppm(&procedural_texture(40, 36, 10 + i), dir.path().join(format!("b{i}.ppm"))).unwrap();
    }
    fs::write(dir.path().join("train.txt"), "a0.ppm\n# comment\na1.ppm\n").unwrap();
    fs::write(dir.path().join("test.txt"), "b0.ppm\nb1.ppm\n").unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, format!("data.manifest = train.txt\neval.manifest = test.txt\ntrain.steps = 2\ntrain.patch_size = 16\n{extra}")).unwrap();
    (dir, cfg)
}

/// Checkpoint of a freshly built desk network with its output conv zeroed.
fn zero_residual_checkpoint(dir: &Path) -> PathBuf {
    let (net, mut store): (_, ParamStore<f32>) = Mirnet::build(&NetworkConfig::desk(), 3).unwrap();
    for id in net.tail.ids() {
        store.zero(id);
    }
    let path = dir.join("zero.ckpt");
    write_checkpoint(fs::File::create(&path).unwrap(), &store.to_checkpoint()).unwrap();
    path
}

#[test]
fn train_writes_log_checkpoint_and_echo() {
    let (dir, cfg) = toy("");
    let out = dir.path().join("run");
    let r = forge(&["train", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let log = fs::read_to_string(out.join("loss.csv")).unwrap();
    let lines: Vec<_> = log.lines().collect();
    assert_eq!(lines[0], "step,lr,loss");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,0.0002,"));
    assert!(out.join("model.ckpt").exists());
    let echoed = fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(echoed.contains("train.steps = 2\n") && echoed.contains("network.n_streams = 2\n"));

    // Rerunning from the echoed config reproduces the checkpoint.
    let again = dir.path().join("again");
    let r = forge(&["train", "--config", s(&out.join("config.txt")), "--out", s(&again)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    assert_eq!(fs::read(out.join("model.ckpt")).unwrap(), fs::read(again.join("model.ckpt")).unwrap());
    assert_eq!(fs::read(out.join("config.txt")).unwrap(), fs::read(again.join("config.txt")).unwrap());
}

#[test]
fn seeds_control_the_checkpoint() {
    let (dir, cfg) = toy("train.checkpoint_every = 1\n");
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let r = forge(&["train", "--config", s(&cfg), "--out", s(&out), "--seed", seed]);
        assert_eq!(code(&r), 0, "{}", stderr(&r));
        out
    };
    let (a, b, c) = (run("a", "5"), run("b", "5"), run("c", "6"));
    let bytes = |p: &Path| fs::read(p.join("model.ckpt")).unwrap();
    assert_eq!(bytes(&a), bytes(&b));
    assert_ne!(bytes(&a), bytes(&c));
    assert!(a.join("checkpoint_0000001.ckpt").exists());
    assert!(fs::read_to_string(a.join("config.txt")).unwrap().contains("train.seed = 5\n"));
}

#[test]
fn exit_codes_follow_the_failure_class() {
    let (dir, cfg) = toy("");
    let out = dir.path().join("x");

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "train.stpes = 3\n").unwrap();
    let r = forge(&["train", "--config", s(&bad), "--out", s(&out)]);
    assert_eq!(code(&r), 2);
    assert!(stderr(&r).contains("train.stpes"));

    let missing = dir.path().join("missing.cfg");
    fs::write(&missing, "data.manifest = nowhere.txt\n").unwrap();
    assert_eq!(code(&forge(&["train", "--config", s(&missing), "--out", s(&out)])), 3);

    let r = forge(&["train", "--config", s(&cfg), "--out", s(&out), "--inject-fault", "nan-loss@2"]);
    assert_eq!(code(&r), 4);
    assert!(stderr(&r).contains("step 2"), "{}", stderr(&r));

    assert_eq!(code(&forge(&["ablate", "pyramid", "--config", s(&cfg)])), 2);
}

fn parse_section(report: &str, title: &str) -> Vec<(String, f64, f64)> {
    let mut lines = report.lines().skip_while(|l| *l != format!("[{title}]")).skip(2);
    let mut rows = Vec::new();
    for l in lines.by_ref() {
        let f: Vec<_> = l.split('\t').collect();
        let psnr = if f[1] == "inf" { f64::INFINITY } else { f[1].parse().unwrap() };
        rows.push((f[0].to_string(), psnr, f[2].parse().unwrap()));
        if f[0] == "mean" {
            break;
        }
    }
    rows
}

#[test]
fn eval_of_zero_residual_matches_baseline() {
    let (dir, cfg) = toy("");
    let ckpt = zero_residual_checkpoint(dir.path());
    let out = dir.path().join("eval");
    let r = forge(&["eval", "--config", s(&cfg), "--checkpoint", s(&ckpt), "--out", s(&out)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let report = stdout(&r);
    assert_eq!(fs::read_to_string(out.join("report.tsv")).unwrap(), report);
    assert!(report.starts_with("# channel_mode\trgb\n"));
    let restored = parse_section(&report, "restored");
    let baseline = parse_section(&report, "baseline");
    assert_eq!(restored.len(), 3);
    assert_eq!(restored, baseline);
    let (n, total_psnr, total_ssim) = restored[..2].iter().fold((0.0, 0.0, 0.0), |a, r| (a.0 + 1.0, a.1 + r.1, a.2 + r.2));
    assert!((restored[2].1 - total_psnr / n).abs() < 1e-9);
    assert!((restored[2].2 - total_ssim / n).abs() < 1e-9);
}

#[test]
fn eval_without_degradation_reports_identity() {
    let (dir, cfg) = toy("data.noise_sigma = 0\neval.channel_mode = y_channel\n");
    let ckpt = zero_residual_checkpoint(dir.path());
    let r = forge(&["eval", "--config", s(&cfg), "--checkpoint", s(&ckpt)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let report = stdout(&r);
    assert!(report.contains("y_channel"));
    for (name, psnr, ssim) in parse_section(&report, "restored") {
        assert!(psnr.is_infinite(), "{name}");
        assert_eq!(ssim, 1.0, "{name}");
    }
}

#[test]
fn eval_rejects_mismatched_checkpoint() {
    let (dir, cfg) = toy("network.base_channels = 16\n");
    let ckpt = zero_residual_checkpoint(dir.path());
    let r = forge(&["eval", "--config", s(&cfg), "--checkpoint", s(&ckpt)]);
    assert_eq!(code(&r), 2);
    assert!(stderr(&r).contains("head.weight"), "{}", stderr(&r));
}

#[test]
fn infer_pads_crops_and_is_deterministic() {
    let (dir, cfg) = toy("");
    let zero = zero_residual_checkpoint(dir.path());
    let input = dir.path().join("in.ppm");
    let img = procedural_texture(30, 30, 4);
    save_ppm(&img, &input).unwrap();

    let out = dir.path().join("out.ppm");
    let r = forge(&["infer", "--config", s(&cfg), "--checkpoint", s(&zero), "--input", s(&input), "--out", s(&out)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    assert_eq!(load_ppm(&out).unwrap(), img);

    let run = dir.path().join("run");
    assert_eq!(code(&forge(&["train", "--config", s(&cfg), "--out", s(&run)])), 0);
    let trained = run.join("model.ckpt");
    let outs: Vec<_> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("t{i}.ppm"));
            let r = forge(&["infer", "--config", s(&cfg), "--checkpoint", s(&trained), "--input", s(&input), "--out", s(&out)]);
            assert_eq!(code(&r), 0, "{}", stderr(&r));
            fs::read(out).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    let restored = load_ppm(dir.path().join("t0.ppm")).unwrap();
    assert_eq!((restored.width(), restored.height()), (30, 30));

    let junk = dir.path().join("junk.ppm");
    fs::write(&junk, b"P3 not binary").unwrap();
    let r = forge(&["infer", "--config", s(&cfg), "--checkpoint", s(&zero), "--input", s(&junk), "--out", s(&out)]);
    assert_eq!(code(&r), 3);
}

#[test]
fn gradcheck_lists_every_block_once() {
    let r = forge(&["gradcheck"]);
    assert_eq!(code(&r), 0, "{}", stdout(&r));
    let text = stdout(&r);
    let names: Vec<&str> = text.lines().skip(1).map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(names, BLOCKS);
    for line in text.lines().skip(1) {
        let err: f64 = line.split('\t').nth(1).unwrap().parse().unwrap();
        assert!(err <= 1e-4, "{line}");
    }
}

#[test]
fn gradcheck_catches_broken_dau_backward() {
    let r = forge(&["gradcheck", "--inject-fault", "dau"]);
    assert_eq!(code(&r), 1);
    assert!(stderr(&r).contains("dau"));
    let failing: Vec<_> = stdout(&r).lines().filter(|l| l.ends_with("FAIL")).map(|l| l.split('\t').next().unwrap().to_string()).collect();
    assert_eq!(failing, ["dau"]);
}

#[test]
fn ablations_report_counts_and_grid() {
    let (dir, cfg) = toy("");
    let r = forge(&["ablate", "aggregation", "--config", s(&cfg)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let text = stdout(&r);
    let count = |kind: &str| -> usize {
        let line = text.lines().find(|l| l.starts_with(&format!("{kind}\t"))).unwrap();
        line.split('\t').nth(1).unwrap().parse().unwrap()
    };
    assert_eq!((count("sum"), count("concat"), count("skff")), (0, 12_288, 2_049));

    let out = dir.path().join("layout");
    let r = forge(&["ablate", "layout", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let table = fs::read_to_string(out.join("layout.tsv")).unwrap();
    assert_eq!(table, stdout(&r));
    let rows: Vec<Vec<&str>> = table.lines().skip(1).map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 9);
    let params = |r: &str, c: &str| -> usize { rows.iter().find(|x| x[0] == r && x[1] == c).unwrap()[2].parse().unwrap() };
    assert!(params("2", "2") > params("1", "1"));
    assert!(out.join("config.txt").exists());
}
