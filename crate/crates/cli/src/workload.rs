//! Synthetic update streams and the cost-measurement harness.
//!
//! The bench harness builds a line graph of a requested size, then measures
//! elementary operations (via the engine's thread-local counter) for a churn
//! phase of deletes and re-inserts and for each answering entry point. Runs
//! at growing sizes make the point of the design: the numbers stay flat.

use std::ops::ControlFlow;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hanfq_core::db::NeighborhoodDb;
use hanfq_core::engine::{Engine, EngineError};
use hanfq_core::logic::{HnfQuery, HnfTree, SphereAtom};
use hanfq_core::ops;
use hanfq_core::types::NeighborhoodType;
use hanfq_core::{RelId, Schema, Tuple, UpdateCmd};

/// The schema every generated workload uses: one binary relation.
pub fn edge_schema() -> Schema {
    Schema::new(vec![("E".into(), 2)]).unwrap()
}

/// Inserts building the line 1 - 2 - ... - n.
pub fn path_build(n: u32) -> Vec<UpdateCmd> {
    (1..n)
        .map(|i| UpdateCmd::insert(RelId(0), vec![i, i + 1]))
        .collect()
}

/// Delete-and-reinsert pairs at random interior edges of the line.
pub fn path_churn(n: u32, steps: usize, seed: u64) -> Vec<UpdateCmd> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(steps);
    while out.len() + 2 <= steps {
        let i = rng.gen_range(1..n);
        out.push(UpdateCmd::delete(RelId(0), vec![i, i + 1]));
        out.push(UpdateCmd::insert(RelId(0), vec![i, i + 1]));
    }
    out
}

/// Random inserts and deletes over constants `1..=n`.
pub fn random_stream(n: u32, steps: usize, seed: u64, insert_bias: f64) -> Vec<UpdateCmd> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..steps)
        .map(|_| {
            let tuple: Tuple = vec![rng.gen_range(1..=n), rng.gen_range(1..=n)];
            if rng.gen_bool(insert_bias) {
                UpdateCmd::insert(RelId(0), tuple)
            } else {
                UpdateCmd::delete(RelId(0), tuple)
            }
        })
        .collect()
}

/// Inserts building a w-by-h grid (degree up to 4).
pub fn grid_build(w: u32, h: u32) -> Vec<UpdateCmd> {
    let at = |x: u32, y: u32| y * w + x + 1;
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if x + 1 < w {
                out.push(UpdateCmd::insert(RelId(0), vec![at(x, y), at(x + 1, y)]));
            }
            if y + 1 < h {
                out.push(UpdateCmd::insert(RelId(0), vec![at(x, y), at(x, y + 1)]));
            }
        }
    }
    out
}

/// The measurement query: pairs of elements that do not touch (distinct and
/// non-adjacent). Its answer set is quadratic in the database, which is
/// exactly what makes flat per-operation costs worth demonstrating.
pub fn bench_query() -> HnfQuery {
    let two_apart = NeighborhoodType {
        structure: NeighborhoodDb::new([1, 2].into(), [].into()),
        centres: vec![1, 2],
        radius: 0,
    };
    HnfQuery {
        k: 2,
        tree: HnfTree::Atom(0),
        atoms: vec![SphereAtom {
            ty: two_apart,
            positions: vec![0, 1],
        }],
        sentences: vec![],
    }
}

/// Cost measurements at one size, all in elementary operations.
#[derive(Debug, Clone)]
pub struct BenchReport {
    pub size: u32,
    pub build_seconds: f64,
    pub churn_steps: usize,
    pub churn_ops_mean: f64,
    pub churn_ops_max: u64,
    pub answer_ops: u64,
    pub count_ops: u64,
    pub test_ops: u64,
    pub enum_first_ops: u64,
    pub enum_gap_max: u64,
    pub count_value: i128,
}

impl BenchReport {
    pub fn render(&self) -> String {
        format!(
            "size {:>7}: build {:>6.1}s | update ops mean {:>8.1} max {:>8} | \
             answer {:>4} count {:>4} test {:>6} | enum first {:>6} gap<= {:>6} | answers {}",
            self.size,
            self.build_seconds,
            self.churn_ops_mean,
            self.churn_ops_max,
            self.answer_ops,
            self.count_ops,
            self.test_ops,
            self.enum_first_ops,
            self.enum_gap_max,
            self.count_value,
        )
    }
}

/// Build a line of `size` elements, churn it, and measure every entry point.
pub fn bench_at_size(size: u32, churn_steps: usize, seed: u64) -> Result<BenchReport, EngineError> {
    let mut engine = Engine::new(edge_schema(), 2, bench_query())?;
    let started = Instant::now();
    for cmd in path_build(size) {
        engine.update(&cmd)?;
    }
    let build_seconds = started.elapsed().as_secs_f64();

    let churn = path_churn(size, churn_steps, seed);
    let mut total: u64 = 0;
    let mut max: u64 = 0;
    for cmd in &churn {
        let mark = ops::current();
        engine.update(cmd)?;
        let cost = ops::since(mark);
        total += cost;
        max = max.max(cost);
    }

    let mark = ops::current();
    let _ = engine.answer();
    let answer_ops = ops::since(mark);

    let mark = ops::current();
    let count_value = engine.count();
    let count_ops = ops::since(mark);

    let mark = ops::current();
    let _ = engine.test(&[1, size.max(2)])?;
    let test_ops = ops::since(mark);

    // Delay profile: operations before the first emission, then the largest
    // gap between consecutive emissions over a fixed-length prefix.
    let mut enum_first_ops = 0;
    let mut enum_gap_max = 0;
    let mut emitted = 0usize;
    let mut last_mark = ops::current();
    engine.enumerate(&mut |_| {
        let gap = ops::since(last_mark);
        if emitted == 0 {
            enum_first_ops = gap;
        } else {
            enum_gap_max = enum_gap_max.max(gap);
        }
        emitted += 1;
        last_mark = ops::current();
        if emitted >= 50 {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });

    Ok(BenchReport {
        size,
        build_seconds,
        churn_steps: churn.len(),
        churn_ops_mean: total as f64 / churn.len().max(1) as f64,
        churn_ops_max: max,
        answer_ops,
        count_ops,
        test_ops,
        enum_first_ops,
        enum_gap_max,
        count_value,
    })
}

/// Run the bench at each size with the same churn length and seed.
pub fn run_bench(
    sizes: &[u32],
    churn_steps: usize,
    seed: u64,
) -> Result<Vec<BenchReport>, EngineError> {
    sizes
        .iter()
        .map(|&size| bench_at_size(size, churn_steps, seed))
        .collect()
}
