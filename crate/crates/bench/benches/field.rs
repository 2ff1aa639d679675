use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use trirank::Field;

fn mul_all_pairs(c: &mut Criterion) {
    let mut group = c.benchmark_group("field_mul");
    for (p, k) in [(3, 1), (3, 3), (5, 2), (2, 6)] {
        let f = Field::new(p, k).unwrap();
        let elems: Vec<_> = f.elements().collect();
        group.bench_with_input(BenchmarkId::from_parameter(format!("{p}^{k}")), &elems, |b, elems| {
            b.iter(|| {
                let mut acc = f.elem(0);
                for &x in elems {
                    for &y in elems {
                        acc = f.mul_add(acc, x, y);
                    }
                }
                black_box(acc)
            })
        });
    }
    group.finish();
}

fn inverses(c: &mut Criterion) {
    let f = Field::new(3, 6).unwrap();
    let elems: Vec<_> = f.elements().skip(1).collect();
    c.bench_function("field_inv_3^6", |b| {
        b.iter(|| elems.iter().map(|&x| f.inv(x).unwrap()).fold(f.elem(0), |a, x| f.add(a, x)))
    });
}

criterion_group!(benches, mul_all_pairs, inverses);
criterion_main!(benches);
