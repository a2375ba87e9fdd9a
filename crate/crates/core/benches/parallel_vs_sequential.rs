use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use qcap_core::channels::{standard_channel, ChannelKind, CqWiretapEnsemble};
use qcap_core::exec::Exec;
use qcap_core::protosim::{privacy_error_with, CodeSizes, SimOptions};
use qcap_core::qmat::DensityOperator;
use qcap_core::rates::{evaluate_grid, EncoderGrid, SlackParams, SweepOptions};

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn ensemble() -> CqWiretapEnsemble {
    let sig = |r| DensityOperator::from_bloch("A", r).unwrap();
    CqWiretapEnsemble::indexed(
        vec![vec![0.3, 0.2], vec![0.2, 0.3]],
        vec![
            vec![sig([0.0, 0.0, 1.0]), sig([0.0, 0.0, -1.0])],
            vec![sig([1.0, 0.0, 0.0]), sig([-1.0, 0.0, 0.0])],
        ],
    )
    .unwrap()
}

fn region_grid(c: &mut Criterion) {
    let ch = standard_channel(ChannelKind::AmplitudeDamping, 0.3).unwrap();
    let slacks = SlackParams::default();
    let mut group = c.benchmark_group("region_grid");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        let opts = SweepOptions {
            exec,
            ..SweepOptions::default()
        };
        group.bench_with_input(BenchmarkId::new(name, 2), &opts, |b, opts| {
            b.iter(|| evaluate_grid(black_box(&ch), EncoderGrid::new(2).unwrap(), &slacks, *opts).unwrap())
        });
    }
    group.finish();
}

fn protocol(c: &mut Criterion) {
    let ch = standard_channel(ChannelKind::Dephasing, 0.5).unwrap();
    let ens = ensemble();
    let slacks = SlackParams::default();
    let sizes = CodeSizes::new(2, 2, 2).unwrap();
    let mut group = c.benchmark_group("protocol_2_2_2");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        let opts = SimOptions {
            exec,
            ..SimOptions::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| privacy_error_with(black_box(&ens), &ch, sizes, &slacks, opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, region_grid, protocol);
criterion_main!(benches);
