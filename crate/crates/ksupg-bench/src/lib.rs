//! Criterion benchmarks for the ksupg kernels live in `benches/`.
