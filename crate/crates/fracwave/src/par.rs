//! Execution-mode plumbing.
//!
//! Independent work items (per-stencil weight solves, per-contour-node
//! collocation solves, per-time inversions) are mapped either sequentially or
//! through rayon. Results are always collected in index order and every
//! reduction downstream runs sequentially over that order, so outputs are
//! bit-identical regardless of mode or worker count.
//!
//! The `parallel` cargo feature (on by default) pulls in rayon; without it the
//! crate compiles with the sequential path only and [`Exec::parallel`] is
//! ignored. The sequential path stays compiled in either build so benchmarks
//! can compare both on equal footing.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution mode carried through the solver entry points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Exec {
    pub parallel: bool,
}

impl Default for Exec {
    fn default() -> Self {
        Exec {
            parallel: cfg!(feature = "parallel"),
        }
    }
}

impl Exec {
    pub fn sequential() -> Self {
        Exec { parallel: false }
    }
}

/// Maps `f` over `0..n`, returning results in index order.
pub fn map_indexed<U, F>(n: usize, exec: Exec, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec.parallel {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_in_both_modes() {
        let seq = map_indexed(100, Exec::sequential(), |i| 3 * i + 1);
        let par = map_indexed(100, Exec::default(), |i| 3 * i + 1);
        assert_eq!(seq, par);
        assert_eq!(seq[17], 52);
    }
}
