//! Criterion benchmarks for the `curved-dirac` kernels live in `benches/`.
