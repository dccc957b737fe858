//! End-to-end pipeline benchmarks over the bundled molecule generator.
//!
//! Group names carry the compiled backend ("rayon" or "sequential", from
//! the `parallel` feature), so the two builds can be benchmarked
//! back-to-back and compared by name:
//!
//! ```text
//! cargo bench -p hiersample
//! cargo bench -p hiersample --no-default-features
//! ```
//!
//! Under the rayon backend each benchmark additionally runs inside
//! explicit 1- and 8-thread pools; the 1-thread pool isolates rayon's
//! scheduling overhead from the parallel speedup.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hiersample::augment::{similarity_sweep, Augmentation, ValenceTable};
use hiersample::corpus;
use hiersample::graph::{GraphDataset, MassTable};
use hiersample::hier::{CandidatePolicy, SimilarityHierarchy};
use hiersample::masking::{plan_masks, ReferencePredictor};
use hiersample::sampler::{sample_pairs, NegativePolicy, SamplerConfig, Strategy};
use hiersample::similarity::{MorganTanimoto, SimilarityMeasure, WlKernel};

const BACKEND: &str = if cfg!(feature = "parallel") {
    "rayon"
} else {
    "sequential"
};

/// Run `work` once per measured iteration under each backend
/// configuration: per pool size on rayon, directly on the sequential
/// build.
fn bench_backend(c: &mut Criterion, name: &str, work: &(dyn Fn() + Sync)) {
    let mut group = c.benchmark_group(format!("{name}/{BACKEND}"));
    #[cfg(feature = "parallel")]
    {
        for threads in [1usize, 8] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("pool builds");
            group.bench_function(BenchmarkId::from_parameter(threads), |b| {
                b.iter(|| pool.install(|| work()));
            });
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        group.bench_function(BenchmarkId::from_parameter(1usize), |b| {
            b.iter(work);
        });
    }
    group.finish();
}

fn corpus_and_hierarchy() -> (GraphDataset, SimilarityHierarchy) {
    let ds = corpus::desk_molecules(120, 0).expect("corpus generates");
    let h = SimilarityHierarchy::build(
        &ds,
        &MorganTanimoto::default(),
        0.2,
        &CandidatePolicy::molecular(),
        &MassTable::standard(),
    )
    .expect("hierarchy builds");
    (ds, h)
}

fn hierarchy_build(c: &mut Criterion) {
    let ds = corpus::desk_molecules(120, 0).expect("corpus generates");
    let masses = MassTable::standard();
    let policy = CandidatePolicy::molecular();
    let wl = WlKernel::default();
    let fp = MorganTanimoto::default();
    let measures: [(&str, &dyn SimilarityMeasure); 2] = [("wl", &wl), ("fingerprint", &fp)];
    for (label, sim) in measures {
        bench_backend(c, &format!("hierarchy-build/{label}"), &|| {
            let h = SimilarityHierarchy::build(&ds, sim, 0.2, &policy, &masses)
                .expect("hierarchy builds");
            criterion::black_box(h.edge_count());
        });
    }
}

fn pair_sampling(c: &mut Criterion) {
    let (ds, h) = corpus_and_hierarchy();
    let sim = MorganTanimoto::default();
    let targets: Vec<String> = h.ids().to_vec();
    for (label, strategy) in [
        ("first-order", Strategy::FirstOrder),
        ("high-order", Strategy::HighOrder),
    ] {
        let cfg = SamplerConfig {
            strategy,
            pos_count: 3,
            walk_len: 2,
            walk_count: 20,
            neg_policy: NegativePolicy::DegreeWeighted,
            neg_count: 63,
            batch_size: 64,
            seed: 0,
        };
        bench_backend(c, &format!("sample-pairs/{label}"), &|| {
            let samples = sample_pairs(&h, &ds, &sim, &cfg, &targets).expect("sampling runs");
            criterion::black_box(samples.len());
        });
    }
}

fn adaptive_masking(c: &mut Criterion) {
    let ds = corpus::desk_molecules(120, 0).expect("corpus generates");
    let vocab = ds.node_vocab()[0];
    let predictor = ReferencePredictor::new(vocab, 7);
    bench_backend(c, "mask-plans/adaptive-t5", &|| {
        let plans = plan_masks(&ds, &predictor, 5, 0.15, 0).expect("plans build");
        criterion::black_box(plans.len());
    });
}

fn augmentation_sweep(c: &mut Criterion) {
    let ds = corpus::desk_molecules(120, 0).expect("corpus generates");
    let sim = MorganTanimoto::default();
    let valences = ValenceTable::standard();
    bench_backend(c, "augmentation-sweep/drop", &|| {
        let rows = similarity_sweep(
            &ds,
            &sim,
            &valences,
            &[Augmentation::DropNode, Augmentation::DropEdge],
            &[0.1, 0.2, 0.3],
            &[0],
            60,
        )
        .expect("sweep runs");
        criterion::black_box(rows.len());
    });
}

criterion_group! {
    name = pipeline;
    config = Criterion::default().sample_size(10);
    targets = hierarchy_build, pair_sampling, adaptive_masking, augmentation_sweep
}
criterion_main!(pipeline);
