//! Replicate-parallel Monte Carlo.
//!
//! Replicate `i` always draws from `stream.child(i)` and results are
//! collected in replicate order, so the output does not depend on the
//! number of workers.

use rayon::prelude::*;

use crate::kernels::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McPlan {
    pub n: usize,
    pub stream: RngStream,
    /// Worker threads; `0` uses rayon's global pool.
    pub workers: usize,
}

impl McPlan {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            stream: RngStream::new(seed, 0),
            workers: 1,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    /// Same replicate count and workers on an independent family of streams.
    pub fn lane(&self, tag: u64) -> Self {
        Self {
            stream: self.stream.child(tag ^ 0x6c61_6e65_0000_0000),
            ..*self
        }
    }

    pub fn map<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, RngStream) -> T + Sync + Send,
    {
        let run = |i: usize| f(i, self.stream.child(i as u64));
        match self.workers {
            1 => (0..self.n).map(run).collect(),
            0 => (0..self.n).into_par_iter().map(run).collect(),
            w => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(w)
                    .build()
                    .expect("thread pool");
                pool.install(|| (0..self.n).into_par_iter().map(run).collect())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn output_independent_of_workers() {
        let plan = McPlan::new(200, 17);
        let f = |_: usize, s: RngStream| s.rng().random::<u64>();
        let a = plan.map(f);
        let b = plan.with_workers(3).map(f);
        let c = plan.with_workers(0).map(f);
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_ne!(plan.lane(1).map(f), a);
    }
}
