//! Elementary-operation accounting.
//!
//! Every inner loop on the maintenance and query paths bumps a thread-local
//! counter. Tests and the bench harness snapshot the counter around a call to
//! assert that its cost is bounded by the structural parameters (degree,
//! radius, arity) rather than by the size of the database.

use std::cell::Cell;

thread_local! {
    static OPS: Cell<u64> = const { Cell::new(0) };
}

/// Record one elementary operation.
#[inline]
pub fn tick() {
    OPS.with(|c| c.set(c.get().wrapping_add(1)));
}

/// Record `n` elementary operations at once.
#[inline]
pub fn tick_n(n: u64) {
    OPS.with(|c| c.set(c.get().wrapping_add(n)));
}

/// Current value of this thread's operation counter.
#[inline]
pub fn current() -> u64 {
    OPS.with(|c| c.get())
}

/// Operations performed since `mark` (a previous [`current`] value).
#[inline]
pub fn since(mark: u64) -> u64 {
    current().wrapping_sub(mark)
}
