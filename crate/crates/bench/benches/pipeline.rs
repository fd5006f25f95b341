//! Throughput of the hot paths: framing, filterbanks, the full extractor
//! stack, and a batched network forward pass.

use criterion::{criterion_group, criterion_main, Criterion};
use midlevel_bench::bench_clip;
use midlevel_core::{
    chroma, extract_all, mel_spectrogram, sensory_dissonance, stft_magnitude, Head, Network,
    NetworkSpec, Tensor, DEFAULT_FMAX, DEFAULT_HOP, DEFAULT_N_MELS, DEFAULT_WINDOW,
};
use std::hint::black_box;

fn signal_stages(c: &mut Criterion) {
    let clip = bench_clip(15.0);
    let spec = stft_magnitude(&clip, DEFAULT_WINDOW, DEFAULT_HOP).unwrap();

    let mut g = c.benchmark_group("signal");
    g.sample_size(20);
    g.bench_function("stft_15s", |b| {
        b.iter(|| stft_magnitude(black_box(&clip), DEFAULT_WINDOW, DEFAULT_HOP).unwrap())
    });
    g.bench_function("mel_15s", |b| {
        b.iter(|| mel_spectrogram(black_box(&spec), DEFAULT_N_MELS, DEFAULT_FMAX).unwrap())
    });
    g.bench_function("chroma_15s", |b| b.iter(|| chroma(black_box(&spec))));
    g.finish();
}

fn extractors(c: &mut Criterion) {
    let clip = bench_clip(15.0);
    let mut g = c.benchmark_group("features");
    g.sample_size(10);
    g.bench_function("extract_all_15s", |b| {
        b.iter(|| extract_all(black_box(&clip)).unwrap())
    });
    g.bench_function("sensory_dissonance_15s", |b| {
        b.iter(|| sensory_dissonance(black_box(&clip)).unwrap())
    });
    g.finish();
}

fn network_forward(c: &mut Criterion) {
    let net = Network::new(NetworkSpec::tiny(4), 7).unwrap();
    let items: Vec<Tensor> = (0..8)
        .map(|i| {
            let data: Vec<f64> = (0..256).map(|j| ((i * 256 + j) as f64 * 0.37).sin()).collect();
            Tensor::from_vec(&[1, 16, 16], data).unwrap()
        })
        .collect();
    let refs: Vec<&Tensor> = items.iter().collect();
    let x = Tensor::stack(&refs).unwrap();
    c.bench_function("forward_tiny_batch8", |b| {
        b.iter(|| net.predict(black_box(&x), Head::MidLevel).unwrap())
    });
}

criterion_group!(benches, signal_stages, extractors, network_forward);
criterion_main!(benches);
