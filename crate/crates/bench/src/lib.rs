//! Benchmarks for the endochain engine; see `benches/engine.rs`.
