//! Criterion benchmarks for the core operators; see `benches/ops.rs`.
