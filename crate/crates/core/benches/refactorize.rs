use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stcar::precision::{factorize, refactorize_after_edge_change, PrecisionBuilder};
use stcar::{AreaGraph, EdgeSet};

fn refactorize(c: &mut Criterion) {
    let g = AreaGraph::lattice(20, 20).unwrap();
    let es = EdgeSet::from_graph(&g);
    let builder = PrecisionBuilder::for_graph(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let w: Vec<f64> = (0..es.len()).map(|_| rng.random::<f64>()).collect();
    let factor = factorize(&builder.adaptive(&w, 1e-7).unwrap()).unwrap();

    for block in [1usize, 10] {
        let mut group = c.benchmark_group(format!("refactorize/{block}-edge"));
        let perturb = |rng: &mut ChaCha8Rng| {
            let changed: Vec<usize> = (0..block).map(|_| rng.random_range(0..es.len())).collect();
            let mut w2 = w.clone();
            for &e in &changed {
                w2[e] = rng.random::<f64>();
            }
            (builder.adaptive(&w2, 1e-7).unwrap(), changed)
        };
        group.bench_function("partial", |b| {
            b.iter_batched(
                || perturb(&mut rng),
                |(q, changed)| refactorize_after_edge_change(&factor, &q, &es, &changed).unwrap(),
                BatchSize::SmallInput,
            )
        });
        group.bench_function("full", |b| {
            b.iter_batched(|| perturb(&mut rng).0, |q| factor.refactorize(&q).unwrap(), BatchSize::SmallInput)
        });
        group.finish();
    }
}

criterion_group!(benches, refactorize);
criterion_main!(benches);
