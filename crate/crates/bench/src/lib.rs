//! Criterion benchmarks for `soc-dpt-core`; see `benches/`.
