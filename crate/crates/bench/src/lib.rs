//! Criterion benchmarks for the daubloc kernels; see `benches/`.
