//! Benchmarks for the inference engine; see `benches/inference.rs`.
