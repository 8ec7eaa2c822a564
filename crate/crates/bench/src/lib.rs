//! Benchmarks for the detection pipeline; see the `benches` directory.
