//! Benchmarks for the simulation and certification kernels; see `benches/`.
