//! Criterion benchmarks for `jewel-core`; see `benches/solver.rs`.
