use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use spot_core::design::lhs_points;
use spot_core::model::{fit_forest, fit_gp, fit_tree, propose_candidates, ForestParams};
use spot_core::param::parse_roi;
use spot_core::rng::stream;
use spot_core::targets::branin;
use spot_core::{Dataset, RegionOfInterest};

fn roi() -> RegionOfInterest {
    parse_roi("X1 -5 10 FLOAT\nX2 0 15 FLOAT").unwrap()
}

fn branin_data(n: usize) -> Dataset {
    let x = lhs_points(&roi(), n, &mut stream(1, 0)).unwrap();
    let y = x.iter().map(|p| branin(p).unwrap()).collect();
    Dataset::new(x, y).unwrap()
}

fn fits(c: &mut Criterion) {
    let mut g = c.benchmark_group("fit");
    for n in [50, 200] {
        let data = branin_data(n);
        g.bench_with_input(BenchmarkId::new("tree", n), &data, |b, d| b.iter(|| fit_tree(d, 5, 30).unwrap()));
        let params = ForestParams { n_trees: 100, ..ForestParams::default() };
        g.bench_with_input(BenchmarkId::new("forest100", n), &data, |b, d| {
            b.iter(|| fit_forest(d, &params, &mut stream(2, 0)).unwrap())
        });
    }
    for n in [20, 50] {
        let data = branin_data(n);
        g.bench_with_input(BenchmarkId::new("gp", n), &data, |b, d| b.iter(|| fit_gp(d, 1e-8, &roi()).unwrap()));
    }
    g.finish();
}

fn proposals(c: &mut Criterion) {
    let data = branin_data(100);
    let forest = fit_forest(&data, &ForestParams::default(), &mut stream(3, 0)).unwrap();
    let gp = fit_gp(&branin_data(40), 1e-8, &roi()).unwrap();
    let probe: Vec<f64> = vec![2.5, 7.5];
    let mut g = c.benchmark_group("predict");
    g.bench_function("forest500", |b| b.iter(|| forest.predict(black_box(&probe))));
    g.bench_function("gp40", |b| b.iter(|| gp.predict(black_box(&probe))));
    g.finish();
    c.bench_function("propose/forest500_l400", |b| {
        b.iter(|| propose_candidates(&forest, &roi(), 400, 1, &[], &mut stream(4, 0)).unwrap())
    });
}

criterion_group!(benches, fits, proposals);
criterion_main!(benches);
