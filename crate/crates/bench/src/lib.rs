//! Benchmark-only crate; the measurable surface lives in `mixprec` and the
//! criterion targets under `benches/`.
