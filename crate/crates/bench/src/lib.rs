//! Benchmark-only crate; see `benches/loss.rs`.
