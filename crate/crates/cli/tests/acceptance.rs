//! Acceptance suite: one PASS/FAIL line per criterion. Tolerances are pinned
//! here. Exits non-zero if any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use mirnet_core::blocks::{
    count_parameters, Bound, Conv, Dau, FusionKind, Mirnet, Mrb, NetworkConfig, ParamBuilder, ParamStore, Rrg, Skff,
};
use mirnet_core::data::{procedural_texture, save_ppm, ImageBuffer};
use mirnet_core::metrics::{psnr, ssim, ChannelMode, MetricConfig, Psnr};
use mirnet_core::optim::{charbonnier_loss, cosine_lr, CharbonnierConfig, CosineSchedule};
use mirnet_core::tensor::{Shape, Tape, Tensor, Var};
use mirnet_forge::gradcheck::BLOCKS;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRAD_TOLERANCE: f64 = 1e-4;
const GRAD_BUDGET: Duration = Duration::from_secs(300);
const COUNT_BUDGET: Duration = Duration::from_secs(1);
const SOFTMAX_SUM_TOL: f64 = 1e-6;
const ENVELOPE_TOL: f64 = 1e-6;
const MIDPOINT_TOL: f64 = 1e-12;
const PSNR_CASE_TOL: f64 = 1e-3;
const SSIM_CASE_TOL: f64 = 1e-3;
const PSNR_ORACLE_TOL: f64 = 1e-9;
const SSIM_ORACLE_TOL: f64 = 1e-6;
const DENOISE_GAIN_DB: f64 = 3.0;
const TRAIN_BUDGET: Duration = Duration::from_secs(30 * 60);
const LAYOUT_SLACK_DB: f64 = 0.1;

type Verdict = Result<String, String>;

fn forge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mirnet-forge")).args(args).output().expect("binary runs")
}

fn ok_run(args: &[&str]) -> Result<String, String> {
    let out = forge(args);
    if out.status.success() {
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    } else {
        Err(format!("{args:?} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn shape(n: usize, c: usize, h: usize, w: usize) -> Shape {
    Shape::new(n, c, h, w).unwrap()
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let text = ok_run(&["gradcheck"])?;
    let elapsed = start.elapsed();
    let rows: Vec<(String, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<_> = l.split('\t').collect();
            (f[0].to_string(), f[1].parse().unwrap_or(f64::INFINITY))
        })
        .collect();
    let names: Vec<&str> = rows.iter().map(|r| r.0.as_str()).collect();
    check(names == BLOCKS, || format!("blocks listed {names:?}"))?;
    let worst = rows.iter().cloned().fold((String::new(), 0.0), |a, r| if r.1 > a.1 { r } else { a });
    check(worst.1 <= GRAD_TOLERANCE, || format!("{} has relative error {:.3e}", worst.0, worst.1))?;
    check(elapsed <= GRAD_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("{} blocks, worst {} at {:.2e}, {:.1}s", rows.len(), worst.0, worst.1, elapsed.as_secs_f64()))
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let text = ok_run(&["ablate", "aggregation"])?;
    let elapsed = start.elapsed();
    let field = |key: &str| -> Result<String, String> {
        text.lines()
            .find(|l| l.starts_with(&format!("{key}\t")))
            .and_then(|l| l.split('\t').nth(1))
            .map(str::to_string)
            .ok_or_else(|| format!("no {key} row in {text:?}"))
    };
    let n = |key: &str| -> Result<usize, String> { field(key)?.parse().map_err(|e| format!("{key}: {e}")) };
    let (sum, concat, skff) = (n("sum")?, n("concat")?, n("skff")?);
    let mut store = ParamStore::<f32>::new();
    let _ = Skff::new(&mut ParamBuilder::new(&mut store, 0), "skff", 64, 3);
    let oracle = count_parameters(&store).total;
    let ratio = concat as f64 / skff as f64;
    check(sum == 0 && concat == 12_288, || format!("sum {sum}, concat {concat}"))?;
    check(skff.abs_diff(2_048) <= 1 && skff == oracle, || format!("skff {skff}, count_parameters {oracle}"))?;
    check((5.5..=6.5).contains(&ratio), || format!("ratio {ratio}"))?;
    check(elapsed < COUNT_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("{sum} / {concat} / {skff}, ratio {ratio:.3}, {:.0} ms", elapsed.as_secs_f64() * 1e3))
}

fn zero(store: &mut ParamStore<f32>, conv: &Conv) {
    for id in conv.ids() {
        store.zero(id);
    }
}

fn bit_identity(
    name: &str,
    seeds: u64,
    make: impl Fn(&mut ParamBuilder<'_, f32>) -> (Box<dyn Fn(&mut Tape<f32>, &Bound, Var) -> mirnet_core::Result<Var>>, Conv),
    input: Shape,
) -> Result<(), String> {
    for seed in 0..seeds {
        let mut store = ParamStore::new();
        let (forward, last) = make(&mut ParamBuilder::new(&mut store, seed));
        zero(&mut store, &last);
        let x: Tensor<f32> = Tensor::uniform(input, -1.0, 1.0, 1000 + seed);
        let mut tape = Tape::new();
        let p = store.bind(&mut tape, false);
        let v = tape.constant(x.clone());
        let y = forward(&mut tape, &p, v).map_err(|e| format!("{name}: {e}"))?;
        let same = tape.value(y).data().iter().zip(x.data()).all(|(a, b)| a.to_bits() == b.to_bits());
        check(same, || format!("{name} seed {seed}: output differs from input"))?;
    }
    Ok(())
}

fn criterion_3() -> Verdict {
    bit_identity("dau", 10, |b| {
        let dau = Dau::new(b, "dau", 8);
        let merge = dau.merge.clone();
        (Box::new(move |t, p, x| dau.forward(t, p, x)), merge)
    }, shape(2, 8, 8, 8))?;
    bit_identity("mrb", 10, |b| {
        let mrb = Mrb::new(b, "mrb", 8, 3, 2, FusionKind::Skff);
        let last = mrb.final_conv.clone();
        (Box::new(move |t, p, x| mrb.forward(t, p, x)), last)
    }, shape(1, 8, 8, 8))?;
    let cfg = NetworkConfig::desk();
    bit_identity("rrg", 10, |b| {
        let rrg = Rrg::new(b, "rrg", &cfg);
        let last = rrg.conv_out.clone();
        (Box::new(move |t, p, x| rrg.forward(t, p, x)), last)
    }, shape(1, 8, 8, 8))?;
    bit_identity("network", 10, |b| {
        let net = Mirnet::new(b, &cfg).unwrap();
        let last = net.tail.clone();
        (Box::new(move |t, p, x| net.forward(t, p, x)), last)
    }, shape(2, 3, 16, 16))?;
    Ok("dau, mrb, rrg, network bit-equal over 10 seeds each".into())
}

fn criterion_4() -> Verdict {
    let mut worst_sum = 0.0f64;
    let mut worst_envelope = 0.0f64;
    for seed in 0..10 {
        let mut store = ParamStore::<f64>::new();
        let skff = Skff::new(&mut ParamBuilder::new(&mut store, seed), "skff", 16, 3);
        let xs: Vec<Tensor<f64>> = (0..3).map(|i| Tensor::uniform(shape(2, 16, 6, 6), -1.0, 1.0, seed * 7 + i)).collect();
        let mut tape = Tape::new();
        let p = store.bind(&mut tape, false);
        let vs: Vec<_> = xs.iter().map(|x| tape.constant(x.clone())).collect();
        let w = skff.weights(&mut tape, &p, &vs).map_err(|e| e.to_string())?;
        for n in 0..2 {
            for c in 0..16 {
                let total: f64 = w.iter().map(|&v| tape.value(v).at(n, c, 0, 0)).sum();
                worst_sum = worst_sum.max((total - 1.0).abs());
            }
        }
        let y = skff.forward(&mut tape, &p, &vs).map_err(|e| e.to_string())?;
        for (i, &v) in tape.value(y).data().iter().enumerate() {
            let lo = xs.iter().map(|x| x.data()[i]).fold(f64::INFINITY, f64::min);
            let hi = xs.iter().map(|x| x.data()[i]).fold(f64::NEG_INFINITY, f64::max);
            worst_envelope = worst_envelope.max(lo - v).max(v - hi);
        }
        let same = skff.forward(&mut tape, &p, &[vs[0], vs[0], vs[0]]).map_err(|e| e.to_string())?;
        check(tape.value(same) == &xs[0], || format!("seed {seed}: identical-input fusion changed the input"))?;
    }
    check(worst_sum <= SOFTMAX_SUM_TOL, || format!("weight sum off by {worst_sum:.2e}"))?;
    check(worst_envelope <= ENVELOPE_TOL, || format!("envelope exceeded by {worst_envelope:.2e}"))?;
    Ok(format!("sum error {worst_sum:.1e}, envelope excess {:.1e}, identity exact", worst_envelope.max(0.0)))
}

fn criterion_5() -> Verdict {
    let (h, w) = (16, 16);
    let blur = |x: &Tensor<f64>| {
        let mut tape = Tape::new();
        let v = tape.constant(x.clone());
        let y = tape.blur_pool(v).unwrap();
        tape.value(y).clone()
    };
    let mut compared = 0;
    for seed in 0..10 {
        let big: Tensor<f64> = Tensor::uniform(shape(1, 3, h + 2, w + 2), -1.0, 1.0, seed);
        let view = |oy: usize, ox: usize| Tensor::from_fn(shape(1, 3, h, w), |n, c, y, x| big.at(n, c, y + oy, x + ox));
        let base = blur(&view(2, 2));
        for (sy, sx) in [(0, 2), (2, 0), (2, 2)] {
            let out = blur(&view(2 - sy, 2 - sx));
            for c in 0..3 {
                for y in 2..h / 2 - 1 {
                    for x in 2..w / 2 - 1 {
                        let (a, b) = (out.at(0, c, y, x), base.at(0, c, y - sy / 2, x - sx / 2));
                        check(a.to_bits() == b.to_bits(), || format!("seed {seed} shift ({sy},{sx}) at ({c},{y},{x}): {a} vs {b}"))?;
                        compared += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{compared} interior values exactly equal over 10 images"))
}

fn criterion_6() -> Verdict {
    let sched = CosineSchedule::default();
    let (start, end) = (cosine_lr(0, &sched), cosine_lr(sched.total_steps, &sched));
    let mid = cosine_lr(sched.total_steps / 2, &sched);
    check(sched.total_steps == 700_000, || format!("T = {}", sched.total_steps))?;
    check(start == 2e-4 && end == 1e-6, || format!("endpoints {start:e}, {end:e}"))?;
    check((mid - 1.005e-4).abs() <= MIDPOINT_TOL, || format!("midpoint {mid:e}"))?;
    Ok(format!("{start:e} / {mid:e} / {end:e}"))
}

fn criterion_7() -> Verdict {
    let x: Tensor<f64> = Tensor::uniform(shape(2, 3, 8, 8), 0.0, 1.0, 1);
    let mut tape = Tape::new();
    let (p, t) = (tape.variable(x.clone()), tape.constant(x.clone()));
    let loss = charbonnier_loss(&mut tape, p, t, &CharbonnierConfig::default()).map_err(|e| e.to_string())?;
    let value = tape.value(loss).data()[0];
    let g = tape.backward(loss).map_err(|e| e.to_string())?.get(p);
    check(value == 1e-3, || format!("loss {value:e}"))?;
    check(g.data().iter().all(|&v| v.is_finite() && v == 0.0), || "nonzero gradient at zero difference".into())?;

    let x32: Tensor<f32> = x.cast();
    let mut tape = Tape::new();
    let (p, t) = (tape.variable(x32.clone()), tape.constant(x32));
    let loss = charbonnier_loss(&mut tape, p, t, &CharbonnierConfig::default()).map_err(|e| e.to_string())?;
    let v32 = tape.value(loss).data()[0];
    check(v32 == 1e-3f32, || format!("f32 loss {v32:e}"))?;
    Ok(format!("loss {value:e} (f64), {v32:e} (f32), zero gradient"))
}

fn random_pair(rng: &mut ChaCha8Rng) -> (ImageBuffer, ImageBuffer) {
    let (w, h) = (rng.random_range(11..28), rng.random_range(11..28));
    let a = ImageBuffer::from_fn(w, h, |_, _| [rng.random(), rng.random(), rng.random()]).unwrap();
    let amp = rng.random_range(1..100);
    let b = ImageBuffer::from_fn(w, h, |x, y| {
        let mut p = [0u8; 3];
        for (c, v) in p.iter_mut().enumerate() {
            *v = (a.get(x, y, c) as i32 + rng.random_range(-amp..=amp)).clamp(0, 255) as u8;
        }
        p
    })
    .unwrap();
    (a, b)
}

fn values(img: &ImageBuffer, mode: ChannelMode) -> Vec<Vec<f64>> {
    let mut planes = vec![];
    let px = |x, y, c| img.get(x, y, c) as f64;
    let n = if mode == ChannelMode::Rgb { 3 } else { 1 };
    for c in 0..n {
        let mut p = vec![];
        for y in 0..img.height() {
            for x in 0..img.width() {
                p.push(match mode {
                    ChannelMode::Rgb => px(x, y, c),
                    ChannelMode::Y => 0.299 * px(x, y, 0) + 0.587 * px(x, y, 1) + 0.114 * px(x, y, 2),
                });
            }
        }
        planes.push(p);
    }
    planes
}

fn oracle_psnr(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let (mut sq, mut n) = (0.0, 0.0);
    for (p, q) in a.iter().zip(b) {
        for (u, v) in p.iter().zip(q) {
            sq += (u - v) * (u - v);
            n += 1.0;
        }
    }
    10.0 * (65025.0 / (sq / n)).log10()
}

fn oracle_ssim(a: &[Vec<f64>], b: &[Vec<f64>], w: usize, h: usize) -> f64 {
    let mut g = [[0.0; 11]; 11];
    let mut total = 0.0;
    for i in 0..11 {
        for j in 0..11 {
            let r2 = ((i as f64 - 5.0).powi(2) + (j as f64 - 5.0).powi(2)) / (2.0 * 2.25);
            g[i][j] = (-r2).exp();
            total += g[i][j];
        }
    }
    let (c1, c2) = (6.5025, 58.5225);
    let mut acc = 0.0;
    for (p, q) in a.iter().zip(b) {
        let (mut sum, mut count) = (0.0, 0.0);
        for y0 in 0..=h - 11 {
            for x0 in 0..=w - 11 {
                let at = |v: &[f64], i: usize, j: usize| v[(y0 + i) * w + x0 + j];
                let (mut ma, mut mb) = (0.0, 0.0);
                for i in 0..11 {
                    for j in 0..11 {
                        ma += g[i][j] / total * at(p, i, j);
                        mb += g[i][j] / total * at(q, i, j);
                    }
                }
                let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
                for i in 0..11 {
                    for j in 0..11 {
                        let k = g[i][j] / total;
                        let (da, db) = (at(p, i, j) - ma, at(q, i, j) - mb);
                        va += k * da * da;
                        vb += k * db * db;
                        cov += k * da * db;
                    }
                }
                sum += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                count += 1.0;
            }
        }
        acc += sum / count;
    }
    acc / a.len() as f64
}

fn criterion_8() -> Verdict {
    let cfg = MetricConfig::default();
    let a = ImageBuffer::filled(16, 16, [100, 60, 200]).unwrap();
    let b = ImageBuffer::filled(16, 16, [116, 76, 216]).unwrap();
    let offset = psnr(&a, &b, &cfg).map_err(|e| e.to_string())?.db();
    check((offset - 24.049).abs() <= PSNR_CASE_TOL, || format!("offset-16 PSNR {offset}"))?;
    let tex = procedural_texture(32, 32, 1);
    check(ssim(&tex, &tex, &cfg).unwrap() == 1.0, || "SSIM(a, a) != 1".into())?;
    check(psnr(&tex, &tex, &cfg).unwrap() == Psnr::Infinite, || "PSNR(a, a) not infinite".into())?;
    let c100 = ImageBuffer::filled(16, 16, [100; 3]).unwrap();
    let c50 = ImageBuffer::filled(16, 16, [50; 3]).unwrap();
    let pair = ssim(&c100, &c50, &cfg).unwrap();
    check((pair - 0.8002).abs() <= SSIM_CASE_TOL, || format!("constant-pair SSIM {pair}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut dp, mut ds) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let (a, b) = random_pair(&mut rng);
        for mode in [ChannelMode::Rgb, ChannelMode::Y] {
            let m = MetricConfig { channel_mode: mode, ..cfg };
            let (va, vb) = (values(&a, mode), values(&b, mode));
            dp = dp.max((psnr(&a, &b, &m).unwrap().db() - oracle_psnr(&va, &vb)).abs());
            ds = ds.max((ssim(&a, &b, &m).unwrap() - oracle_ssim(&va, &vb, a.width(), a.height())).abs());
        }
    }
    check(dp <= PSNR_ORACLE_TOL, || format!("PSNR oracle gap {dp:e}"))?;
    check(ds <= SSIM_ORACLE_TOL, || format!("SSIM oracle gap {ds:e}"))?;
    Ok(format!("offset {offset:.4} dB, pair {pair:.4}, oracle gaps {dp:.1e} dB / {ds:.1e}"))
}

/// The toy denoising dataset and base config on disk.
struct Toy {
    dir: tempfile::TempDir,
    config: PathBuf,
}

impl Toy {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let (mut train, mut test) = (String::new(), String::new());
        for i in 0..16u64 {
            let name = format!("tex{i:02}.ppm");
            save_ppm(&procedural_texture(128, 128, i), dir.path().join(&name)).unwrap();
            let list = if i < 12 { &mut train } else { &mut test };
            list.push_str(&name);
            list.push('\n');
        }
        fs::write(dir.path().join("train.txt"), train).unwrap();
        fs::write(dir.path().join("test.txt"), test).unwrap();
        let config = dir.path().join("toy.cfg");
        fs::write(
            &config,
            "network.n_rrg = 1\nnetwork.mrb_per_rrg = 1\nnetwork.n_streams = 2\nnetwork.n_columns = 1\nnetwork.base_channels = 8\n\
             train.steps = 2000\ntrain.batch = 4\ntrain.patch_size = 32\ntrain.seed = 0\n\
             data.manifest = train.txt\ndata.task = denoise\ndata.noise_sigma = 25\n\
             eval.manifest = test.txt\n",
        )
        .unwrap();
        Toy { dir, config }
    }

    fn variant(&self, name: &str, extra: &str) -> PathBuf {
        let base = fs::read_to_string(&self.config).unwrap();
        let path = self.dir.path().join(format!("{name}.cfg"));
        let kept: String = base
            .lines()
            .filter(|l| !extra.lines().any(|e| e.split('=').next().map(str::trim) == l.split('=').next().map(str::trim)))
            .map(|l| format!("{l}\n"))
            .collect();
        fs::write(&path, format!("{kept}{extra}")).unwrap();
        path
    }

    /// Trains into `out` and returns the evaluation report text.
    fn train_eval(&self, config: &Path, out: &str) -> Result<(PathBuf, String), String> {
        let out = self.dir.path().join(out);
        ok_run(&["train", "--config", s(config), "--out", s(&out)])?;
        let ckpt = out.join("model.ckpt");
        let report = ok_run(&["eval", "--config", s(config), "--checkpoint", s(&ckpt)])?;
        Ok((ckpt, report))
    }
}

fn mean_psnr(report: &str, section: &str) -> Result<f64, String> {
    report
        .lines()
        .skip_while(|l| *l != format!("[{section}]"))
        .find(|l| l.starts_with("mean\t"))
        .and_then(|l| l.split('\t').nth(1))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| format!("no {section} mean in report"))
}

fn criteria_9_and_11(toy: &Toy) -> (Verdict, Verdict) {
    let start = Instant::now();
    let first = toy.train_eval(&toy.config, "run_a");
    let elapsed = start.elapsed();
    let c9 = first.as_ref().map_err(Clone::clone).and_then(|(_, report)| {
        let (restored, noisy) = (mean_psnr(report, "restored")?, mean_psnr(report, "baseline")?);
        check(restored >= noisy + DENOISE_GAIN_DB, || format!("restored {restored:.3} dB vs noisy {noisy:.3} dB"))?;
        check(elapsed <= TRAIN_BUDGET, || format!("took {elapsed:?}"))?;
        Ok(format!("held-out {restored:.2} dB vs noisy {noisy:.2} dB (+{:.2} dB), {:.0}s", restored - noisy, elapsed.as_secs_f64()))
    });
    let c11 = first.map_err(|e| format!("first run failed: {e}")).and_then(|(ckpt_a, report_a)| {
        let (ckpt_b, report_b) = toy.train_eval(&toy.config, "run_b")?;
        let (a, b) = (fs::read(&ckpt_a).map_err(|e| e.to_string())?, fs::read(&ckpt_b).map_err(|e| e.to_string())?);
        check(a == b, || "checkpoints differ".into())?;
        check(report_a == report_b, || "reports differ".into())?;
        Ok(format!("{} checkpoint bytes and {} report bytes identical", a.len(), report_a.len()))
    });
    (c9, c11)
}

fn criterion_10(toy: &Toy) -> Verdict {
    let measure = |rows: usize| -> Result<(f64, usize), String> {
        let cfg = toy.variant(&format!("rows{rows}"), &format!("train.steps = 1000\nnetwork.n_streams = {rows}\nnetwork.n_columns = 1\n"));
        let (_, report) = toy.train_eval(&cfg, &format!("layout_{rows}"))?;
        let net = NetworkConfig { n_streams: rows, n_columns: 1, ..NetworkConfig::desk() };
        let (_, store) = Mirnet::build::<f32>(&net, 0).map_err(|e| e.to_string())?;
        Ok((mean_psnr(&report, "restored")?, count_parameters(&store).total))
    };
    let (p1, n1) = measure(1)?;
    let (p2, n2) = measure(2)?;
    check(p2 >= p1 - LAYOUT_SLACK_DB, || format!("rows=2 {p2:.3} dB < rows=1 {p1:.3} dB - {LAYOUT_SLACK_DB}"))?;
    check(n2 > n1, || format!("rows=2 has {n2} parameters, rows=1 has {n1}"))?;
    Ok(format!("rows=2 {p2:.2} dB ({n2} params) vs rows=1 {p1:.2} dB ({n1} params)"))
}

fn main() {
    let toy = Toy::new();
    let mut results: Vec<(u32, &str, Verdict)> = vec![
        (1, "gradient correctness", criterion_1()),
        (2, "aggregation parameter counts", criterion_2()),
        (3, "residual identities", criterion_3()),
        (4, "SKFF algebra", criterion_4()),
        (5, "blur-pool shift equivariance", criterion_5()),
        (6, "schedule endpoints", criterion_6()),
        (7, "loss anchor", criterion_7()),
        (8, "metric oracles", criterion_8()),
    ];
    let (c9, c11) = criteria_9_and_11(&toy);
    results.push((9, "toy denoising gain", c9));
    results.push((10, "layout monotonicity", criterion_10(&toy)));
    results.push((11, "determinism", c11));

    let mut failed = 0;
    for (n, name, verdict) in &results {
        match verdict {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
