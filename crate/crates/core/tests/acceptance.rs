//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use seta_core::experiment::{
    metrics_path, read_metrics, run_experiment, run_seed, DatasetSource, MetricsLine, ModelConfig, PreparedData,
    RunFooter,
};
use seta_core::rng::{stream, Purpose};
use seta_core::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(elapsed: Duration, budget_secs: f64) -> bool {
    elapsed.as_secs_f64() < budget_secs
}

// 1 ------------------------------------------------------------------------

fn window_schedule() -> Outcome {
    let started = Instant::now();
    let mut cases = 0;
    let mut mismatches = Vec::new();
    for k in 1..=12usize {
        for tenths in 1..=10usize {
            let alpha = tenths as f64 / 10.0;
            // w = ceil(alpha * k) in integer arithmetic
            let w = (tenths * k).div_ceil(10);
            match compute_window_size(k, alpha) {
                Ok(got) if got == w => {}
                other => mismatches.push(format!("w(k={k}, alpha={alpha}) = {other:?}, expected {w}")),
            }
            for n in 0..3 * k {
                cases += 1;
                let s = n % (k - w + 1);
                let e = s + w - 1;
                let b = window_bounds(n, k, w, WindowPolicy::Cyclic).unwrap();
                if (b.start, b.end) != (s, e) || b.clusters != (s..=e).collect::<Vec<_>>() {
                    mismatches.push(format!("k={k} alpha={alpha} n={n}: ({}, {}) vs ({s}, {e})", b.start, b.end));
                }
                if tenths == 10 && (b.start, b.end) != (0, k - 1) {
                    mismatches.push(format!("alpha=1 k={k} n={n} is not the full window"));
                }
            }
        }
    }
    let elapsed = started.elapsed();
    let pass = mismatches.is_empty() && within(elapsed, 1.0);
    let first = mismatches.first().cloned().unwrap_or_default();
    outcome(pass, format!("{cases} cases, {} mismatches {first} in {elapsed:.2?}", mismatches.len()))
}

// 2 ------------------------------------------------------------------------

fn random_losses(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    match rng.random_range(0..4) {
        0 => (0..n).map(|_| rng.random_range(0.0..5.0)).collect(),
        1 => (0..n).map(|_| f64::from(rng.random_range(0u8..6))).collect(),
        2 => (0..n).map(|_| -rng.random::<f64>().max(1e-12).ln()).collect(),
        _ => (0..n)
            .map(|_| if rng.random_bool(0.1) { rng.random_range(4.0..9.0) } else { rng.random_range(0.0..0.5) })
            .collect(),
    }
}

fn clustering_optimality() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut oracle_failures = 0;
    for _ in 0..500 {
        let n = rng.random_range(1..=16);
        let k = rng.random_range(1..=4);
        let losses = random_losses(&mut rng, n);
        let dp = cluster_losses(&ClusterRequest::new(&losses, k)).unwrap();
        let best = oracle_best_partition(&losses, k).unwrap();
        if sse(&losses, &dp).unwrap() != sse(&losses, &best).unwrap() {
            oracle_failures += 1;
        }
    }
    let mut lloyd_failures = 0;
    for i in 0..100 {
        let k = [5, 10, 15][i % 3];
        let losses = random_losses(&mut rng, 1000);
        let dp = cluster_losses(&ClusterRequest::new(&losses, k)).unwrap();
        let lloyd = cluster_losses(&ClusterRequest::new(&losses, k).method(ClusterMethod::Lloyd)).unwrap();
        if sse(&losses, &dp).unwrap() > sse(&losses, &lloyd).unwrap() {
            lloyd_failures += 1;
        }
    }
    let elapsed = started.elapsed();
    outcome(
        oracle_failures == 0 && lloyd_failures == 0 && within(elapsed, 10.0),
        format!("dp != oracle on {oracle_failures}/500, dp > lloyd on {lloyd_failures}/100, {elapsed:.2?}"),
    )
}

// 3 ------------------------------------------------------------------------

fn tiny_dataset(seed: u64) -> SynthSpec {
    SynthSpec {
        classes: 3,
        dim: 4,
        base_per_class: 20,
        duplication_factor: 2,
        validation_per_class: 5,
        separation: 1.0,
        seed,
        ..Default::default()
    }
}

fn accounting() -> Outcome {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let methods = [
        MethodName::Seta,
        MethodName::Full,
        MethodName::StaticRandom,
        MethodName::DynamicRandom,
        MethodName::MeanLossPrune,
    ];
    let mut failures = Vec::new();
    for run in 0..100u64 {
        let mut cfg = ExperimentConfig {
            dataset: DatasetSource::Synthetic(tiny_dataset(run)),
            model: ModelConfig { kind: ModelKind::Mlp1Hidden, hidden: 4 },
            method: methods[rng.random_range(0..methods.len())],
            epochs: rng.random_range(1..=10),
            ..Default::default()
        };
        cfg.seta.r = rng.random_range(0.05..=1.0);
        cfg.seta.k = rng.random_range(1..=8);
        cfg.seta.alpha = rng.random_range(1..=10) as f64 / 10.0;
        cfg.seta.anneal_fraction = rng.random_range(0.0..0.5);
        cfg.baseline.r = rng.random_range(0.05..=1.0);
        let data = PreparedData::new(&cfg.load_dataset().unwrap()).unwrap();
        let seed = rng.random();
        let out = dir.path().join(run.to_string());
        fs::create_dir_all(&out).unwrap();
        let metrics = run_seed(&cfg, &data, seed, Some(&out)).unwrap();

        let lines = read_metrics(metrics_path(&out, seed)).unwrap();
        let mut total = 0usize;
        let mut epochs = 0usize;
        let mut footer: Option<RunFooter> = None;
        for line in lines {
            match line {
                MetricsLine::Epoch(rec) => {
                    total += rec.selected;
                    epochs += 1;
                }
                MetricsLine::Footer(f) => footer = Some(f),
                MetricsLine::Aborted { .. } => failures.push(format!("run {run} aborted")),
            }
        }
        let footer = footer.expect("footer");
        let recomputed = 1.0 - total as f64 / (epochs * footer.dataset_size) as f64;
        if footer.rho_bar != recomputed || metrics.footer.rho_bar != recomputed || epochs != cfg.epochs {
            failures.push(format!("run {run}: footer {} vs recomputed {recomputed}", footer.rho_bar));
        }
    }
    for _ in 0..100 {
        let rho = rng.random_range(0.0..1.0);
        let (od, om) = (rng.random_range(0.0..1e-3), rng.random_range(1e-6..1e-2));
        if estimate_time_saving(rho, od, om).unwrap() != rho + od / om {
            failures.push(format!("time saving mismatch at ({rho}, {od}, {om})"));
        }
    }
    let elapsed = started.elapsed();
    outcome(
        failures.is_empty() && within(elapsed, 5.0),
        format!(
            "100 runs + 100 time-saving checks, {} failures {} in {elapsed:.2?}",
            failures.len(),
            failures.first().cloned().unwrap_or_default()
        ),
    )
}

// 4 ------------------------------------------------------------------------

fn annealing_statistics() -> Outcome {
    let started = Instant::now();
    let inside = (0..200u64)
        .filter(|&t| {
            let picked = anneal_select(10_000, 0.3, &mut stream(4, Purpose::Anneal, t)).unwrap();
            (2850..=3150).contains(&picked.len())
        })
        .count();
    let elapsed = started.elapsed();
    outcome(inside >= 198 && within(elapsed, 5.0), format!("{inside}/200 trials within 3000 ± 150, {elapsed:.2?}"))
}

// 5 ------------------------------------------------------------------------

fn gradient_checks() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for instance in 0..20u64 {
        let dim = rng.random_range(1..=6);
        let classes = rng.random_range(2..=5);
        let hidden = rng.random_range(1..=6);
        let rows = rng.random_range(1..=6);
        let x = Array2::from_shape_fn((rows, dim), |_| rng.random_range(-2.0..2.0));
        let labels: Vec<usize> = (0..rows).map(|_| rng.random_range(0..classes)).collect();
        for kind in [ModelKind::SoftmaxLinear, ModelKind::Mlp1Hidden] {
            let mut model = ModelState::new(kind, dim, classes, hidden, instance).unwrap();
            let (_, grad) = model.loss_and_gradient(x.view(), &labels, None).unwrap();
            let analytic = grad.flatten();
            let params = model.params();
            let h = 1e-5;
            let objective = |m: &ModelState| {
                let l = per_sample_loss(m, x.view(), &labels).unwrap();
                l.iter().sum::<f64>() / l.len() as f64
            };
            let mut numeric = Vec::with_capacity(params.len());
            for i in 0..params.len() {
                let mut p = params.clone();
                p[i] += h;
                model.set_params(&p).unwrap();
                let up = objective(&model);
                p[i] -= 2.0 * h;
                model.set_params(&p).unwrap();
                let down = objective(&model);
                numeric.push((up - down) / (2.0 * h));
            }
            let diff = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let scale = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
            let rel = diff / scale(&analytic).max(scale(&numeric)).max(1e-12);
            worst = worst.max(rel);
        }
    }
    let elapsed = started.elapsed();
    outcome(
        worst < 1e-4 && within(elapsed, 10.0),
        format!("worst relative error {worst:.2e} over 40 checks, {elapsed:.2?}"),
    )
}

// 6 ------------------------------------------------------------------------

fn curriculum_monotonicity() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut violations = 0;
    let mut sweeps = 0;
    for trial in 0..100u64 {
        let size = rng.random_range(50..400);
        let losses = random_losses(&mut rng, size);
        let mut ledger = LossLedger::new(size);
        let obs: Vec<(usize, f64)> = losses.iter().copied().enumerate().collect();
        ledger.record_losses(0, &obs).unwrap();

        let k = rng.random_range(2..=12);
        let alpha = rng.random_range(1..=9) as f64 / 10.0;
        let config = SchedulerConfig {
            r: 1.0,
            k,
            alpha,
            ordering: CurriculumOrder::EasyToHard,
            window_policy: WindowPolicy::Cyclic,
            anneal_fraction: 0.0,
            epochs: 40,
            seed: trial,
            ..Default::default()
        };
        let mut scheduler = SetaScheduler::new(config).unwrap();
        scheduler.plan(&ledger, 0).unwrap();
        let mut previous: Option<(usize, f64)> = None;
        for epoch in 1..40 {
            let plan = scheduler.plan(&ledger, epoch).unwrap();
            let window = plan.window.expect("curriculum epoch has a window");
            let mean = plan.selected.iter().map(|&i| losses[i]).sum::<f64>() / plan.selected.len() as f64;
            match previous {
                Some((_, prev)) if window.s > 0 && mean < prev => violations += 1,
                _ => {}
            }
            if window.s == 0 {
                sweeps += 1;
            }
            previous = Some((window.s, mean));
        }
    }
    let elapsed = started.elapsed();
    outcome(
        violations == 0 && within(elapsed, 5.0),
        format!("{violations} decreases across {sweeps} sweeps of 100 frozen partitions, {elapsed:.2?}"),
    )
}

// 7, 8, 9 ------------------------------------------------------------------

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

fn benchmark_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        dataset: DatasetSource::Synthetic(SynthSpec {
            classes: 10,
            dim: 20,
            base_per_class: 500,
            duplication_factor: 4,
            label_noise: 0.1,
            validation_per_class: 200,
            ..Default::default()
        }),
        model: ModelConfig { kind: ModelKind::Mlp1Hidden, hidden: 64 },
        method: MethodName::Seta,
        epochs: 30,
        seeds: SEEDS.to_vec(),
        ..Default::default()
    };
    cfg.seta.r = 0.6;
    cfg.seta.k = 10;
    cfg.seta.alpha = 0.5;
    cfg
}

struct Study {
    full: Vec<RunFooter>,
    seta: Vec<RunFooter>,
    matched: Vec<RunFooter>,
    k_sweep: Vec<(usize, Vec<RunFooter>)>,
    train_size: usize,
    validation_size: usize,
    elapsed: Duration,
}

fn mean(runs: &[RunFooter], f: impl Fn(&RunFooter) -> f64) -> f64 {
    runs.iter().map(f).sum::<f64>() / runs.len() as f64
}

fn run_study() -> Study {
    let started = Instant::now();
    let base = benchmark_config();
    let data = PreparedData::new(&base.load_dataset().unwrap()).unwrap();
    let run = |cfg: &ExperimentConfig, seed: u64| run_seed(cfg, &data, seed, None).unwrap().footer;
    let runs = |cfg: &ExperimentConfig, seeds: &[u64]| seeds.par_iter().map(|&s| run(cfg, s)).collect::<Vec<_>>();

    let full = runs(&ExperimentConfig { method: MethodName::Full, ..base.clone() }, &SEEDS);
    let seta = runs(&base, &SEEDS);
    // dynamic_random at the same pruning ratio: no anneal, r = 1 - SeTa's ratio
    let matched = SEEDS
        .par_iter()
        .zip(&seta)
        .map(|(&seed, s)| {
            let mut cfg = ExperimentConfig { method: MethodName::DynamicRandom, ..base.clone() };
            cfg.baseline.r = 1.0 - s.rho_bar;
            cfg.baseline.anneal_fraction = 0.0;
            run(&cfg, seed)
        })
        .collect();
    let k_sweep = [5usize, 10, 15]
        .iter()
        .map(|&k| {
            let footers = if k == base.seta.k {
                seta[..3].to_vec()
            } else {
                let mut cfg = base.clone();
                cfg.seta.k = k;
                runs(&cfg, &SEEDS[..3])
            };
            (k, footers)
        })
        .collect();
    Study {
        full,
        seta,
        matched,
        k_sweep,
        train_size: data.train.len(),
        validation_size: data.eval.len(),
        elapsed: started.elapsed(),
    }
}

fn desk_scale_ratio(study: &Study) -> Outcome {
    let rho = mean(&study.seta, |f| f.rho_bar);
    let per_seed: Vec<String> = study.seta.iter().map(|f| format!("{:.3}", f.rho_bar)).collect();
    outcome(
        (0.30..=0.55).contains(&rho),
        format!("SeTa mean rho_bar {rho:.4} (per seed {}), required [0.30, 0.55]", per_seed.join(" ")),
    )
}

fn desk_scale_accuracy(study: &Study) -> Outcome {
    let seta = mean(&study.seta, |f| f.final_acc);
    let full = mean(&study.full, |f| f.final_acc);
    let cpu_bound = study.elapsed.as_secs_f64() * rayon::current_num_threads() as f64;
    outcome(
        seta >= full - 0.01 && study.train_size == 20_000 && study.validation_size == 2_000 && cpu_bound <= 600.0,
        format!(
            "SeTa acc {seta:.4} vs full {full:.4} (needs >= {:.4}), N={} val={}, study {:.1?} (<= {cpu_bound:.0} CPU-s)",
            full - 0.01,
            study.train_size,
            study.validation_size,
            study.elapsed
        ),
    )
}

fn desk_scale_matched(study: &Study) -> Outcome {
    let seta_acc = mean(&study.seta, |f| f.final_acc);
    let dyn_acc = mean(&study.matched, |f| f.final_acc);
    let gap = study.seta.iter().zip(&study.matched).map(|(s, d)| (s.rho_bar - d.rho_bar).abs()).fold(0.0, f64::max);
    outcome(
        seta_acc >= dyn_acc && gap <= 0.03,
        format!("SeTa acc {seta_acc:.4} vs dynamic_random {dyn_acc:.4}, max rho_bar gap {gap:.4}"),
    )
}

fn group_count_robustness(study: &Study) -> Outcome {
    let accs: Vec<(usize, f64)> = study.k_sweep.iter().map(|(k, runs)| (*k, mean(runs, |f| f.final_acc))).collect();
    let hi = accs.iter().map(|a| a.1).fold(f64::MIN, f64::max);
    let lo = accs.iter().map(|a| a.1).fold(f64::MAX, f64::min);
    let shown: Vec<String> = accs.iter().map(|(k, a)| format!("k={k}: {a:.4}")).collect();
    outcome(hi - lo < 0.02, format!("spread {:.4} ({})", hi - lo, shown.join(", ")))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut identical = true;
    let mut checked = Vec::new();
    for method in [MethodName::Seta, MethodName::Full, MethodName::DynamicRandom] {
        let base = ExperimentConfig { method, seeds: vec![1], ..benchmark_config() };
        let bytes = |sub: &str| {
            let out = dir.path().join(format!("{}_{sub}", method.as_str()));
            run_experiment(&ExperimentConfig { output_dir: out.clone(), ..base.clone() }).unwrap();
            fs::read(metrics_path(Path::new(&out), 1)).unwrap()
        };
        let (a, b) = (bytes("a"), bytes("b"));
        identical &= a == b;
        checked.push(format!("{} {} bytes", method.as_str(), a.len()));
    }
    outcome(identical, format!("byte-identical metrics for {}", checked.join(", ")))
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(o) => o,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        }
    }
}

fn main() {
    let mut results: Vec<(&str, &str, Outcome)> = vec![
        ("1", "window-schedule exactness", guarded(window_schedule)),
        ("2", "clustering optimality", guarded(clustering_optimality)),
        ("3", "pruning-ratio accounting", guarded(accounting)),
        ("4", "annealing statistics", guarded(annealing_statistics)),
        ("5", "gradient checks", guarded(gradient_checks)),
        ("6", "curriculum monotonicity", guarded(curriculum_monotonicity)),
    ];
    match panic::catch_unwind(run_study) {
        Ok(study) => {
            results.push(("7a", "desk-scale pruning ratio", desk_scale_ratio(&study)));
            results.push(("7a", "desk-scale accuracy vs full", desk_scale_accuracy(&study)));
            results.push(("7b", "accuracy vs matched dynamic_random", desk_scale_matched(&study)));
            results.push(("8", "group-count robustness", group_count_robustness(&study)));
        }
        Err(_) => {
            for (id, name) in [("7", "desk-scale trend"), ("8", "group-count robustness")] {
                results.push((id, name, outcome(false, "benchmark runs panicked")));
            }
        }
    }
    results.push(("9", "determinism", guarded(determinism)));

    println!();
    let mut failed = 0;
    for (id, name, o) in &results {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("criterion {id:<3} {name:<38} {verdict}  {}", o.detail);
    }
    println!("\nacceptance: {} passed, {failed} failed\n", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
