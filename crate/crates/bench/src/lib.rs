//! Criterion benchmarks for the noise, RB and network kernels; see `benches/`.
