use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use kemplab::group::make_cyclic;
use kemplab::sumset::{fast_product_set, product_set};
use kemplab_bench::{kernel_zoo, random_pair};

fn cyclic_2_16(c: &mut Criterion) {
    let g = make_cyclic(1 << 16);
    let (a, b) = random_pair(&g, 10_000, 2024);
    g.warm();
    let mut grp = c.benchmark_group("z65536_size10000");
    grp.sample_size(10);
    grp.bench_function("naive", |bch| bch.iter(|| product_set(black_box(&g), &a, &b).unwrap()));
    grp.bench_function("fast", |bch| bch.iter(|| fast_product_set(black_box(&g), &a, &b).unwrap()));
    grp.finish();
}

fn kernels(c: &mut Criterion) {
    let mut grp = c.benchmark_group("kernels");
    grp.sample_size(20);
    for (name, g) in kernel_zoo() {
        let (a, b) = random_pair(&g, g.order() / 8, 1);
        g.warm();
        grp.bench_with_input(BenchmarkId::new("fast", name), &g, |bch, g| bch.iter(|| fast_product_set(g, &a, &b).unwrap()));
    }
    grp.finish();
}

criterion_group!(benches, cyclic_2_16, kernels);
criterion_main!(benches);
