//! Wall-clock comparisons of the closed-form estimators against the
//! brute-force baselines.

use std::hint::black_box;
use std::time::{Duration, Instant};

use bmcurve_core::oracle::{naive_global_cost, naive_local_cost};
use bmcurve_core::{BmcSpec, GlobalCostAccumulator, PatternTableSet, Workload};
use serde::Serialize;

use crate::error::Result;

/// Smallest repetition count used for a median.
pub const MIN_REPS: usize = 5;

/// Shortest sample [`median_time`] aims for; faster closures are repeated
/// within a sample.
pub const MIN_SAMPLE: Duration = Duration::from_micros(200);

/// Median wall time of one call of `f` over `reps` samples (at least
/// [`MIN_REPS`]). Each sample repeats `f` until it lasts [`MIN_SAMPLE`].
pub fn median_time(reps: usize, mut f: impl FnMut()) -> Duration {
    let mut iters: u32 = 1;
    loop {
        let t = Instant::now();
        for _ in 0..iters {
            f();
        }
        if t.elapsed() >= MIN_SAMPLE || iters >= 1 << 20 {
            break;
        }
        iters *= 2;
    }
    let mut times: Vec<Duration> = (0..reps.max(MIN_REPS))
        .map(|_| {
            let t = Instant::now();
            for _ in 0..iters {
                f();
            }
            t.elapsed() / iters
        })
        .collect();
    times.sort_unstable();
    times[times.len() / 2]
}

/// Timings for one workload size. Evaluation times are per curve;
/// initialization times are for one pass over the workload.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    /// Number of queries.
    pub n: usize,
    /// Building the bit-difference matrix.
    pub init_global: Duration,
    /// Building the pattern tables.
    pub init_local: Duration,
    /// Closed-form global cost.
    pub global: Duration,
    /// Table-lookup local cost.
    pub local: Duration,
    /// Naive global cost.
    pub naive_global: Duration,
    /// Naive local cost by section enumeration.
    pub naive_local: Duration,
}

impl SweepRow {
    /// Naive over closed-form local cost time.
    pub fn local_speedup(&self) -> f64 {
        ratio(self.naive_local, self.local)
    }

    /// Naive over closed-form global cost time.
    pub fn global_speedup(&self) -> f64 {
        ratio(self.naive_global, self.global)
    }
}

/// `a / b`, guarding against a zero denominator.
pub fn ratio(a: Duration, b: Duration) -> f64 {
    a.as_secs_f64() / b.as_secs_f64().max(1e-12)
}

/// Settings of [`cost_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepConfig {
    /// Repetitions per median.
    pub reps: usize,
    /// Curves evaluated per closed-form timing.
    pub fast_curves: usize,
    /// Curves evaluated per naive timing.
    pub naive_curves: usize,
    /// Cell budget of the naive local cost.
    pub cell_budget: u128,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            reps: MIN_REPS,
            fast_curves: 2000,
            naive_curves: 2,
            cell_budget: bmcurve_core::oracle::DEFAULT_CELL_BUDGET,
        }
    }
}

/// Times every estimator on each workload, cycling through `curves`.
pub fn cost_sweep(workloads: &[Workload], curves: &[BmcSpec], config: SweepConfig) -> Result<Vec<SweepRow>> {
    assert!(!curves.is_empty(), "at least one curve");
    let pick = |count: usize| -> Vec<&BmcSpec> { curves.iter().cycle().take(count.max(1)).collect() };
    let fast = pick(config.fast_curves);
    let slow = pick(config.naive_curves);
    let mut rows = Vec::with_capacity(workloads.len());
    for w in workloads {
        let acc = GlobalCostAccumulator::from_workload(w);
        let tables = PatternTableSet::from_workload(w)?;
        // Surface errors once, outside the timed loops.
        for c in fast.iter().chain(&slow) {
            acc.cost(c)?;
            tables.local_cost(c)?;
        }
        naive_local_cost(slow[0], w, config.cell_budget)?;

        let init_global = median_time(config.reps, || {
            black_box(GlobalCostAccumulator::from_workload(black_box(w)));
        });
        let init_local = median_time(config.reps, || {
            black_box(PatternTableSet::from_workload(black_box(w)).expect("checked above"));
        });
        let per = |d: Duration, count: usize| d / count as u32;
        let global = per(
            median_time(config.reps, || {
                for c in &fast {
                    black_box(acc.cost(black_box(c)).expect("checked above"));
                }
            }),
            fast.len(),
        );
        let local = per(
            median_time(config.reps, || {
                for c in &fast {
                    black_box(tables.local_cost(black_box(c)).expect("checked above"));
                }
            }),
            fast.len(),
        );
        let naive_global = per(
            median_time(config.reps, || {
                for c in &slow {
                    black_box(naive_global_cost(black_box(c), w));
                }
            }),
            slow.len(),
        );
        let naive_local = per(
            median_time(config.reps, || {
                for c in &slow {
                    black_box(naive_local_cost(black_box(c), w, config.cell_budget).expect("checked above"));
                }
            }),
            slow.len(),
        );
        rows.push(SweepRow {
            n: w.len(),
            init_global,
            init_local,
            global,
            local,
            naive_global,
            naive_local,
        });
    }
    Ok(rows)
}

/// Ratio of the slowest to the fastest of `times`.
pub fn spread(times: impl IntoIterator<Item = Duration>) -> f64 {
    let (lo, hi) = times
        .into_iter()
        .fold((Duration::MAX, Duration::ZERO), |(lo, hi), t| (lo.min(t), hi.max(t)));
    ratio(hi, lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bmcurve_core::workload::{gen_dataset, gen_queries, DataKind, QueryShape};
    use bmcurve_core::Grid;

    #[test]
    fn median_takes_at_least_five_samples() {
        let mut calls = 0;
        median_time(1, || {
            calls += 1;
            std::thread::sleep(MIN_SAMPLE);
        });
        // One calibration call plus five samples.
        assert_eq!(calls, 6);
    }

    #[test]
    fn spread_of_equal_times_is_one() {
        let t = Duration::from_micros(7);
        assert_eq!(spread([t, t, t]), 1.0);
        assert_eq!(spread([t, t * 3]), 3.0);
    }

    #[test]
    fn sweep_reports_each_workload() {
        let g = Grid::new(2, 6).unwrap();
        let data = gen_dataset(DataKind::Uniform, 200, g, 0).unwrap();
        let workloads: Vec<Workload> = [1, 4]
            .iter()
            .map(|&n| gen_queries(&data, n, &QueryShape::Edges(vec![4, 4]), 1).unwrap())
            .collect();
        let curves = vec![BmcSpec::z_order(g), BmcSpec::lexicographic(g, 1)];
        let config = SweepConfig {
            fast_curves: 10,
            ..SweepConfig::default()
        };
        let rows = cost_sweep(&workloads, &curves, config).unwrap();
        assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), [1, 4]);
    }
}
