//! Criterion benchmarks for the pzero kernels; see `benches/kernels.rs`.
