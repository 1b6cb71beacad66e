//! Criterion benchmarks for `crps-core`; see `benches/`.
