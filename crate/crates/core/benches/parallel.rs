use std::f64::consts::PI;
use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use singfol::bisubmersion::{make_phb, verify_bisubmersion, PhbBox};
use singfol::catalog;
use singfol::exec::Exec;
use singfol::flowengine::CoeffCurve;
use singfol::fpath::make_fpath;
use singfol::holonomy::{default_slices, holonomy_jet, DEFAULT_EXTENT};

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn flows(c: &mut Criterion) {
    let p = make_fpath(Arc::new(catalog::rotz3()), CoeffCurve::constant(&[2.0 * PI]), &[0.0, 0.0, 0.0], 1e-10).unwrap();
    let grid: Vec<Vec<f64>> = (0..256)
        .map(|k| {
            let (i, j, l) = (k % 8, (k / 8) % 8, k / 64);
            vec![-0.5 + i as f64 / 7.0, -0.5 + j as f64 / 7.0, 0.1 * l as f64]
        })
        .collect();
    let mut group = c.benchmark_group("rotz3_loop_flow_256_points");
    for (name, exec) in POLICIES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| exec.try_map(&grid, |x| p.flow(black_box(x))).unwrap())
        });
    }
    group.finish();
}

fn bisubmersion_samples(c: &mut Criterion) {
    let b = make_phb(Arc::new(catalog::rot2()), &[1.0, 0.0], PhbBox { c_radius: 2.0 * PI, y_radius: 0.3 }, 1e-10).unwrap();
    let samples = b.sample_points(32);
    let mut group = c.benchmark_group("phb_verify_32_samples");
    for (name, exec) in POLICIES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |bch, &exec| {
            bch.iter(|| exec.try_map(&samples, |s| verify_bisubmersion(&b, std::slice::from_ref(s)).map(|r| r.ok)).unwrap())
        });
    }
    group.finish();
}

fn holonomy_jets(c: &mut Criterion) {
    let rot = Arc::new(catalog::rot2());
    let paths: Vec<_> = (1..=16)
        .map(|k| make_fpath(rot.clone(), CoeffCurve::constant(&[0.4 * k as f64]), &[1.0, 0.2], 1e-10).unwrap())
        .collect();
    let mut group = c.benchmark_group("rot2_order2_jets_16_paths");
    group.sample_size(20);
    for (name, exec) in POLICIES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                exec.try_map(&paths, |p| {
                    let (s0, s1) = default_slices(p, DEFAULT_EXTENT)?;
                    holonomy_jet(p, &s0, &s1, 2, 1e-10)
                })
                .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, flows, bisubmersion_samples, holonomy_jets);
criterion_main!(benches);
