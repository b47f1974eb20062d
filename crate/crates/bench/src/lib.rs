//! Criterion benchmarks for the scrambler and metrics; see `benches/`.
