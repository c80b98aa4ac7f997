use criterion::{black_box, criterion_group, criterion_main, Criterion};

use retromark::fmcw::{process_frame, range_fft, synthesize_frame, ChirpConfig, NoiseSpec, PointTarget, VirtualArray};
use retromark::propagation::{focal_scan, PropagationPlan};
use retromark::scatter::{monostatic_amplitude, PatchPlaneSpec, TagAssembly};
use retromark::synthesis::{build_quantized_lens, lens_to_mask, table1_library, LensSpec, MaskMode};

fn synthesis(c: &mut Criterion) {
    let lib = table1_library();
    let spec = LensSpec::reference();
    c.bench_function("build_quantized_lens_21", |b| {
        b.iter(|| build_quantized_lens(black_box(&spec), &lib).unwrap())
    });
}

fn focusing(c: &mut Criterion) {
    let lens = build_quantized_lens(&LensSpec::reference(), &table1_library()).unwrap();
    let mask = lens_to_mask(&lens, 4, MaskMode::Ideal).unwrap();
    let plan = PropagationPlan::for_grid(mask.grid(), PropagationPlan::DEFAULT_PADDING).unwrap();
    let mut g = c.benchmark_group("focal_scan");
    g.sample_size(10);
    g.bench_function("36_planes", |b| {
        b.iter(|| focal_scan(&mask, 5.0, 40.0, 36, &plan).unwrap())
    });
    g.finish();
}

fn scattering(c: &mut Criterion) {
    let lens = build_quantized_lens(&LensSpec::reference(), &table1_library()).unwrap();
    let mask = lens_to_mask(&lens, 4, MaskMode::Quantized).unwrap();
    let tag = TagAssembly::new(mask, PatchPlaneSpec::default(), 20.0);
    let mut g = c.benchmark_group("monostatic_amplitude");
    g.sample_size(10);
    g.bench_function("tag_20deg", |b| {
        b.iter(|| monostatic_amplitude(&tag, black_box(20.0)).unwrap())
    });
    g.finish();
}

fn fmcw(c: &mut Criterion) {
    let cfg = ChirpConfig {
        chirps_per_tx: 8,
        ..ChirpConfig::default()
    };
    let arr = VirtualArray::for_config(&cfg).unwrap();
    let frame = synthesize_frame(&cfg, &arr, &[PointTarget::new(20.0, 10.0, 0.0)], NoiseSpec::off()).unwrap();
    let mut g = c.benchmark_group("fmcw_8_chirps");
    g.sample_size(10);
    g.bench_function("range_fft", |b| b.iter(|| range_fft(&frame).unwrap()));
    g.bench_function("process_frame", |b| b.iter(|| process_frame(&frame).unwrap()));
    g.finish();
}

criterion_group!(benches, synthesis, focusing, scattering, fmcw);
criterion_main!(benches);
