//! Criterion benchmarks for the solver hot paths; see `benches/solvers.rs`.
