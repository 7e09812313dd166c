use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use seta_core::data::Split;
use seta_core::{
    generate_synthetic, LossLedger, ModelKind, ModelState, SchedulerConfig, SetaScheduler, SynthSpec, TrainConfig,
    Trainer,
};

fn epoch(c: &mut Criterion) {
    let full = generate_synthetic(&SynthSpec::default()).unwrap();
    let train = full.subset(&full.rows(Split::Train));
    let n = train.len();

    let mut ledger = LossLedger::new(n);
    let obs: Vec<(usize, f64)> = (0..n).map(|i| (i, ((i * 7919) % 1000) as f64 / 250.0)).collect();
    ledger.record_losses(0, &obs).unwrap();
    let config = SchedulerConfig { epochs: 1_000_000, ..Default::default() };
    let mut scheduler = SetaScheduler::new(config).unwrap();
    scheduler.plan(&ledger, 0).unwrap();
    let mut next = 1;
    c.bench_function("plan_curriculum_epoch_20k", |b| {
        b.iter(|| {
            let plan = scheduler.plan(black_box(&ledger), next).unwrap();
            next += 1;
            plan
        })
    });

    let model = ModelState::new(ModelKind::Mlp1Hidden, train.dim(), train.num_classes, 64, 1).unwrap();
    let all: Vec<usize> = (0..n).collect();
    let mut group = c.benchmark_group("sgd_epoch");
    group.sample_size(10);
    group.bench_function("mlp64_20k", |b| {
        b.iter_batched(
            || (model.clone(), Trainer::new(TrainConfig::default(), &model).unwrap()),
            |(mut m, mut t)| t.sgd_epoch(&mut m, &train, &all, None, 0).unwrap(),
            criterion::BatchSize::LargeInput,
        )
    });
    group.finish();
}

criterion_group!(benches, epoch);
criterion_main!(benches);
