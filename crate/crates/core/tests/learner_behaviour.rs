use std::collections::{HashMap, VecDeque};

use bmcurve_core::curve::all_curves;
use bmcurve_core::learner::{
    action_mask, apply_swap, decode_state, reward, train_step, ActionValue, Learner, LearnerConfig,
    QNetwork, ReplayMemory, SwapAction, Transition,
};
use bmcurve_core::oracle::{exhaustive_best_bmc, DEFAULT_CELL_BUDGET, DEFAULT_CURVE_BUDGET};
use bmcurve_core::workload::{gen_dataset, gen_queries, DataKind, QueryShape};
use bmcurve_core::{BmcSpec, CostModel, Grid, Workload};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn thin_workload(grid: Grid, seed: u64) -> Workload {
    let data = gen_dataset(DataKind::Skewed, 500, grid, seed).unwrap();
    let side = grid.max_coord() + 1;
    gen_queries(&data, 30, &QueryShape::Edges(vec![side, 1]), seed + 1).unwrap()
}

fn small_config(seed: u64) -> LearnerConfig {
    LearnerConfig {
        episodes: 10,
        steps: 12,
        batch_size: 16,
        hidden: vec![32, 32],
        seed,
        ..LearnerConfig::default()
    }
}

#[test]
fn fixed_seed_is_reproducible() {
    let g = Grid::new(2, 3).unwrap();
    let model = CostModel::build(&thin_workload(g, 3)).unwrap();
    let start = BmcSpec::z_order(g);
    let run = || {
        let mut l = Learner::new(g, small_config(9)).unwrap();
        let out = l.run(&start, &model).unwrap();
        (out, l.action_value().params().to_vec())
    };
    let (a, wa) = run();
    let (b, wb) = run();
    assert_eq!(a, b);
    assert_eq!(wa, wb);
}

#[test]
fn best_cost_is_running_minimum_and_rescores() {
    let g = Grid::new(2, 3).unwrap();
    let w = thin_workload(g, 4);
    let model = CostModel::build(&w).unwrap();
    let start = BmcSpec::z_order(g);
    let out = Learner::new(g, small_config(2)).unwrap().run(&start, &model).unwrap();
    assert_eq!(out.trace.len(), 120);
    let mut running = 1.0f64;
    for e in &out.trace {
        assert!(e.ratio.is_finite() && e.ratio > 0.0);
        let next = running.min(e.ratio);
        assert!(next <= running);
        running = next;
    }
    assert_eq!(out.best_cost.product() / out.initial_cost.product(), running);
    assert_eq!(model.cost(&out.best).unwrap(), out.best_cost);
    // Long-thin queries along x favour x bits on the low side.
    assert!(out.best_cost.product() <= out.initial_cost.product());
}

#[test]
fn learned_curve_beats_z_order_on_thin_queries() {
    let g = Grid::new(2, 3).unwrap();
    let w = thin_workload(g, 8);
    let model = CostModel::build(&w).unwrap();
    let zc = BmcSpec::z_order(g);
    let out = Learner::new(g, small_config(1)).unwrap().run(&zc, &model).unwrap();
    let (_, opt) = exhaustive_best_bmc(&w, DEFAULT_CURVE_BUDGET, DEFAULT_CELL_BUDGET).unwrap();
    assert!(out.best_cost.product() <= model.cost(&zc).unwrap().product());
    assert!(out.best_cost.product() >= opt.product());
}

/// Scores each action by minus the swap distance to a target curve.
struct DistanceOracle {
    grid: Grid,
    distance: HashMap<Vec<u8>, usize>,
}

impl DistanceOracle {
    fn new(target: &BmcSpec) -> Self {
        let mut distance = HashMap::new();
        let mut queue = VecDeque::new();
        distance.insert(target.slots_lsb().to_vec(), 0);
        queue.push_back(target.clone());
        while let Some(c) = queue.pop_front() {
            let d = distance[c.slots_lsb()];
            for (i, ok) in action_mask(&c).into_iter().enumerate() {
                if ok {
                    let n = apply_swap(&c, SwapAction::from_index(i)).unwrap();
                    distance.entry(n.slots_lsb().to_vec()).or_insert_with(|| {
                        queue.push_back(n.clone());
                        d + 1
                    });
                }
            }
        }
        DistanceOracle {
            grid: target.grid(),
            distance,
        }
    }
}

impl ActionValue for DistanceOracle {
    fn action_values(&self, encoded: &[f64]) -> Vec<f64> {
        let c = decode_state(self.grid, encoded).unwrap();
        action_mask(&c)
            .into_iter()
            .enumerate()
            .map(|(i, ok)| {
                if ok {
                    let n = apply_swap(&c, SwapAction::from_index(i)).unwrap();
                    -(self.distance[n.slots_lsb()] as f64)
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect()
    }

    fn train(&mut self, _: &[&Transition], _: usize, _: &LearnerConfig) -> f64 {
        0.0
    }
}

#[test]
fn greedy_oracle_policy_reaches_optimum_within_swap_bound() {
    let g = Grid::new(2, 2).unwrap();
    let bound = (g.dims() - 1) * g.dims() * (g.bits() as usize).pow(2);
    for seed in 0..5 {
        let w = thin_workload(g, seed);
        let (best, best_cost) = exhaustive_best_bmc(&w, DEFAULT_CURVE_BUDGET, DEFAULT_CELL_BUDGET).unwrap();
        let model = CostModel::build(&w).unwrap();
        let config = LearnerConfig {
            episodes: 1,
            steps: bound,
            epsilon_start: 0.0,
            epsilon_end: 0.0,
            seed,
            ..LearnerConfig::default()
        };
        for start in all_curves(g) {
            let mut l = Learner::with_action_value(config.clone(), DistanceOracle::new(&best)).unwrap();
            let out = l.run(&start, &model).unwrap();
            assert_eq!(out.best_cost.product(), best_cost.product(), "start {start}");
        }
    }
}

#[test]
fn loss_decreases_on_frozen_memory() {
    let g = Grid::new(2, 3).unwrap();
    let model = CostModel::build(&thin_workload(g, 6)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut memory = ReplayMemory::new(32);
    let mut curve = BmcSpec::z_order(g);
    let initial = model.cost(&curve).unwrap().product();
    while memory.len() < 32 {
        let mask = action_mask(&curve);
        let valid: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
        let a = valid[rng.random_range(0..valid.len())];
        let next = apply_swap(&curve, SwapAction::from_index(a)).unwrap();
        let r = reward(
            model.cost(&curve).unwrap().product(),
            model.cost(&next).unwrap().product(),
            initial,
        )
        .unwrap();
        memory.push(Transition {
            state: bmcurve_core::learner::encode_state(&curve),
            action: a,
            reward: r,
            next_state: bmcurve_core::learner::encode_state(&next),
        });
        curve = next;
    }
    let config = LearnerConfig {
        batch_size: 32,
        discount: 0.0,
        ..LearnerConfig::default()
    };
    let mut net = QNetwork::random(&[12, 32, 32, 5], &mut rng).unwrap();
    let first = train_step(&memory, &mut net, 2, &config, &mut rng).unwrap();
    let mut last = first;
    for _ in 0..100 {
        last = train_step(&memory, &mut net, 2, &config, &mut rng).unwrap();
    }
    assert!(last.is_finite());
    assert!(last < first, "{last} >= {first}");
}

#[test]
fn empty_memory_is_an_error() {
    let mut net = QNetwork::zeros(&[4, 2, 3]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let r = train_step(&ReplayMemory::new(4), &mut net, 2, &LearnerConfig::default(), &mut rng);
    assert!(r.is_err());
}
