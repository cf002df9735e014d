//! Tolerance policy: one struct threaded through every verdict.

/// Numerical thresholds. `base` is an absolute tolerance for scalar
/// comparisons; norm bounds on operators scale it by the dimension involved.
/// `null_rel` is the relative cutoff deciding rank (an eigenvalue or singular
/// value below `null_rel * max` counts as zero).
#[derive(Debug, Clone, Copy)]
pub struct Tol {
    pub base: f64,
    pub null_rel: f64,
}

impl Default for Tol {
    fn default() -> Self {
        Tol { base: 1e-10, null_rel: 1e-10 }
    }
}

impl Tol {
    pub fn with_base(base: f64) -> Self {
        Tol { base, ..Tol::default() }
    }

    /// Tolerance for an operator norm bound on a space of dimension `dim`.
    pub fn op(&self, dim: usize) -> f64 {
        self.base * (dim.max(1) as f64)
    }
}
