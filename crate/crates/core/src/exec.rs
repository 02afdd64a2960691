/// Scheduling policy for the data-parallel kernels.
///
/// `Parallel` runs on the global rayon pool when the crate is built with the
/// `parallel` feature and silently degrades to `Sequential` otherwise. Both
/// policies produce identical results: reductions are either integer sums,
/// set unions, maxima, or order-preserving collects followed by a
/// sequential fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when work will actually be distributed over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}
