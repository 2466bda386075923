//! Thread-local flop and allocation accounting.
//!
//! Kernels report their arithmetic in bulk (one call per matvec, solve, or
//! factorization) tagged by precision. The refinement driver snapshots these
//! counters around the phases that must run in high precision, so a test can
//! prove that no low-precision arithmetic leaked into them. The same
//! mechanism tracks the peak number of live basis vectors inside the Krylov
//! solvers, backing the memory-contract checks.

use std::cell::Cell;

thread_local! {
    static LOW_FLOPS: Cell<u64> = const { Cell::new(0) };
    static HIGH_FLOPS: Cell<u64> = const { Cell::new(0) };
    static LOW_BASIS: Cell<(i64, i64)> = const { Cell::new((0, 0)) };
    static HIGH_BASIS: Cell<(i64, i64)> = const { Cell::new((0, 0)) };
}

#[inline]
pub fn add_low(n: u64) {
    LOW_FLOPS.with(|c| c.set(c.get().wrapping_add(n)));
}

#[inline]
pub fn add_high(n: u64) {
    HIGH_FLOPS.with(|c| c.set(c.get().wrapping_add(n)));
}

/// Counter values at a point in time, for differential accounting.
#[derive(Debug, Clone, Copy)]
pub struct FlopSnapshot {
    low: u64,
    high: u64,
}

pub fn snapshot() -> FlopSnapshot {
    FlopSnapshot {
        low: LOW_FLOPS.with(Cell::get),
        high: HIGH_FLOPS.with(Cell::get),
    }
}

/// Low-precision flops recorded on this thread since `since`.
pub fn low_since(since: FlopSnapshot) -> u64 {
    LOW_FLOPS.with(Cell::get).wrapping_sub(since.low)
}

/// High-precision flops recorded on this thread since `since`.
pub fn high_since(since: FlopSnapshot) -> u64 {
    HIGH_FLOPS.with(Cell::get).wrapping_sub(since.high)
}

fn tally(cell: &'static std::thread::LocalKey<Cell<(i64, i64)>>, delta: i64) {
    cell.with(|c| {
        let (current, peak) = c.get();
        let current = current + delta;
        c.set((current, peak.max(current)));
    });
}

/// Register `delta` retained low-precision basis vectors (negative to release).
pub fn tally_low_basis(delta: i64) {
    tally(&LOW_BASIS, delta);
}

/// Register `delta` retained high-precision basis vectors.
pub fn tally_high_basis(delta: i64) {
    tally(&HIGH_BASIS, delta);
}

/// Reset both basis peaks to the current live counts, starting a new
/// measurement window.
pub fn reset_basis_peaks() {
    LOW_BASIS.with(|c| {
        let (current, _) = c.get();
        c.set((current, current));
    });
    HIGH_BASIS.with(|c| {
        let (current, _) = c.get();
        c.set((current, current));
    });
}

/// Peak (low, high) basis-vector counts since the last reset.
pub fn basis_peaks() -> (usize, usize) {
    let low = LOW_BASIS.with(|c| c.get().1).max(0) as usize;
    let high = HIGH_BASIS.with(|c| c.get().1).max(0) as usize;
    (low, high)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_tally_tracks_peak() {
        reset_basis_peaks();
        tally_high_basis(3);
        tally_high_basis(-1);
        tally_high_basis(1);
        let (_, high) = basis_peaks();
        assert_eq!(high, 3);
        tally_high_basis(-3);
        reset_basis_peaks();
        assert_eq!(basis_peaks().1, 0);
    }

    #[test]
    fn counters_are_differential() {
        let s = snapshot();
        add_low(3);
        add_high(5);
        assert_eq!(low_since(s), 3);
        assert_eq!(high_since(s), 5);
        let s2 = snapshot();
        add_low(1);
        assert_eq!(low_since(s2), 1);
    }
}
