use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relaxed_walras::demand::relaxed_demand_face;
use relaxed_walras::io::{parse_json, EconomyFile};
use relaxed_walras::*;

fn economy(seed: u64, n: usize, set_size: usize, agents: usize) -> Economy64 {
    let params = GeneratorParams { seed, n, set_size, agent_count: agents, ..GeneratorParams::default() };
    random_economy::<f64>(&params).unwrap().economy
}

fn random_price(rng: &mut ChaCha8Rng, n: usize) -> Price64 {
    let raw: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    Price::normalize(raw).unwrap().0
}

fn random_lottery(rng: &mut ChaCha8Rng, m: usize) -> Lottery64 {
    let w: Vec<f64> = (0..m).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen::<f64>() }).collect();
    if w.iter().sum::<f64>() > 0.0 {
        Lottery::from_weights(w).unwrap()
    } else {
        Lottery::dirac(m, rng.gen_range(0..m))
    }
}

/// Best expected utility over affordable lotteries with probabilities in
/// multiples of 1/200, by full enumeration over three bundles.
fn grid_value_three(costs: &[f64; 3], u: &[f64; 3], wealth: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for a in 0..=200u32 {
        for b in 0..=(200 - a) {
            let c = 200 - a - b;
            let p = [a as f64 / 200.0, b as f64 / 200.0, c as f64 / 200.0];
            let cost: f64 = p.iter().zip(costs).map(|(p, c)| p * c).sum();
            if cost <= wealth {
                best = best.max(p.iter().zip(u).map(|(p, u)| p * u).sum());
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn two_point_support_beats_the_full_grid(seed in any::<u64>(), n in 1usize..=3) {
        let e = economy(seed, n, 3, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let price = random_price(&mut rng, n);
        let xs = e.consumption_set();
        let agent = e.agent(0);
        let c = xs.costs(&price);
        let costs = [c[0], c[1], c[2]];
        let u = [agent.utility[0], agent.utility[1], agent.utility[2]];
        let grid = grid_value_three(&costs, &u, c[agent.endowment]);
        let v = relaxed_value(xs, agent, &price);
        let span = agent.max_utility() - agent.min_utility();
        prop_assert!(v >= grid - 1e-12, "V* {v} below grid {grid}");
        prop_assert!(v - grid <= span / 200.0 + 1e-12, "V* {v} too far above grid {grid}");
    }

    #[test]
    fn cost_is_linear_in_the_lottery(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=8) {
        let e = economy(seed, n, m, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let price = random_price(&mut rng, n);
        let l = random_lottery(&mut rng, m);
        let xs = e.consumption_set();
        let direct: f64 = price.iter().zip(barycenter(&l, xs).iter()).map(|(p, b)| p * b).sum();
        let mixed: f64 = l.probs().iter().zip(xs.costs(&price)).map(|(p, c)| p * c).sum();
        prop_assert!((direct - mixed).abs() <= 1e-12 * (1.0 + xs.max_norm()));
    }

    #[test]
    fn relaxed_value_is_monotone_in_wealth(seed in any::<u64>(), n in 1usize..=4, m in 2usize..=8) {
        let e = economy(seed, n, m, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let price = random_price(&mut rng, n);
        let xs = e.consumption_set();
        let costs = xs.costs(&price);
        let base = e.agent(0);
        let values: Vec<(f64, f64)> = (0..m)
            .map(|j| {
                let a = Agent::new("probe", base.weight, base.utility.clone(), j);
                (costs[j], relaxed_value(xs, &a, &price))
            })
            .collect();
        for &(w1, v1) in &values {
            for &(w2, v2) in &values {
                if w1 < w2 {
                    prop_assert!(v1 <= v2 + base.utility_tolerance());
                }
            }
        }
    }

    #[test]
    fn demand_face_is_invariant_under_affine_utility(
        seed in any::<u64>(), n in 1usize..=4, m in 1usize..=8, a in 0.1f64..10.0, b in -5.0f64..5.0,
    ) {
        let e = economy(seed, n, m, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let price = random_price(&mut rng, n);
        let xs = e.consumption_set();
        let agent = e.agent(0);
        let moved = Agent::new("moved", agent.weight, agent.utility.iter().map(|u| a * u + b).collect(), agent.endowment);
        let f1 = relaxed_demand_face(xs, agent, &price);
        let f2 = relaxed_demand_face(xs, &moved, &price);
        prop_assert_eq!(f1.vertices.len(), f2.vertices.len());
        for (v1, v2) in f1.vertices.iter().zip(&f2.vertices) {
            for (p1, p2) in v1.probs().iter().zip(v2.probs()) {
                prop_assert!((p1 - p2).abs() <= 1e-12);
            }
        }
        prop_assert!((a * f1.value + b - f2.value).abs() <= 1e-9 * (1.0 + f2.value.abs()));
    }

    #[test]
    fn demand_is_invariant_under_price_scaling(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=8, scale in 0.01f64..100.0) {
        let e = economy(seed, n, m, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 4);
        let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 0.01).collect();
        let p1 = Price::normalize(raw.clone()).unwrap().0;
        let p2 = Price::normalize(raw.iter().map(|r| r * scale).collect()).unwrap().0;
        let xs = e.consumption_set();
        let agent = e.agent(0);
        prop_assert_eq!(budget_set(xs, agent, &p1), budget_set(xs, agent, &p2));
        let f1 = relaxed_demand_face(xs, agent, &p1);
        let f2 = relaxed_demand_face(xs, agent, &p2);
        prop_assert_eq!(f1.vertices.len(), f2.vertices.len());
        for (v1, v2) in f1.vertices.iter().zip(&f2.vertices) {
            prop_assert_eq!(v1.support(), v2.support());
            for (a, b) in v1.probs().iter().zip(v2.probs()) {
                prop_assert!((a - b).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn mean_endowment_ignores_order_and_splitting(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=8, k in 1usize..=6) {
        let e = economy(seed, n, m, k);
        let mean = mean_endowment(&e);
        let xs = e.consumption_set().clone();
        let mut reversed: Vec<Agent<f64>> = e.agents().to_vec();
        reversed.reverse();
        let r = Economy::new(xs.clone(), reversed, e.mode()).unwrap();
        let mut split = Vec::new();
        for a in e.agents() {
            for _ in 0..2 {
                split.push(Agent::new(a.id.clone(), a.weight / 2.0, a.utility.clone(), a.endowment));
            }
        }
        let s = Economy::new(xs, split, e.mode()).unwrap();
        for (x, (y, z)) in mean.iter().zip(mean_endowment(&r).iter().zip(mean_endowment(&s).iter())) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            prop_assert!((x - z).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn interior_endowment_leaves_something_strictly_affordable(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=8, k in 1usize..=6) {
        let params = GeneratorParams { seed, n, set_size: m, agent_count: k, ..GeneratorParams::default() };
        let g = random_economy::<f64>(&params).unwrap();
        prop_assume!(g.assumption3_holds);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 5);
        let xs = g.economy.consumption_set();
        for _ in 0..5 {
            let price = random_price(&mut rng, n);
            let costs = xs.costs(&price);
            for a in g.economy.agents() {
                prop_assert!(costs.iter().any(|&c| c < costs[a.endowment]));
            }
        }
    }

    #[test]
    fn splitting_is_exact_and_idempotent(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=8, k in 1usize..=6) {
        let e = economy(seed, n, m, k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 6);
        let selection: Vec<Lottery64> = (0..k).map(|_| random_lottery(&mut rng, m)).collect();
        let (alloc, report) = split_purify(&e, &selection).unwrap();
        prop_assert!(report.deviation <= 1e-12);
        prop_assert!(report.utility_gap.iter().all(|g| g.abs() <= 1e-12));
        for (i, a) in e.agents().iter().enumerate() {
            prop_assert!((alloc.mass_of(i) - a.weight).abs() <= 1e-12);
        }
        prop_assert!(alloc.slices.iter().all(|s| s.bundle < m && s.mass > 0.0));

        let pure: Vec<Lottery64> = (0..k).map(|i| Lottery::dirac(m, alloc.slices.iter().find(|s| s.agent == i).unwrap().bundle)).collect();
        let (again, report) = split_purify(&e, &pure).unwrap();
        prop_assert_eq!(report.deviation, 0.0);
        prop_assert_eq!(again.slices.len(), k);
        for (i, s) in again.slices.iter().enumerate() {
            prop_assert_eq!(s.agent, i);
            prop_assert_eq!(s.mass, e.agent(i).weight);
            prop_assert_eq!(Some(s.bundle), pure[i].is_dirac());
        }
    }

    #[test]
    fn economy_files_round_trip_bit_exactly(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=8, k in 1usize..=6) {
        let e = economy(seed, n, m, k);
        let text = EconomyFile::from_economy(&e).to_canonical_json().unwrap();
        let back = parse_json::<EconomyFile>(&text).unwrap();
        let e2 = back.to_economy().unwrap();
        prop_assert_eq!(&e2, &e);
        prop_assert_eq!(back.to_canonical_json().unwrap(), text);
    }
}

fn deviation_of(e: &Economy64, choice: &[usize], target: &[f64]) -> f64 {
    let xs = e.consumption_set();
    let mut agg = vec![0.0; e.dimension()];
    for (a, &j) in e.agents().iter().zip(choice) {
        for (g, x) in agg.iter_mut().zip(xs.point(j).iter()) {
            *g += a.weight * x;
        }
    }
    agg.iter().zip(target).map(|(a, t)| (a - t).powi(2)).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rounding_against_exhaustive_assignment(seed in any::<u64>(), n in 1usize..=3, k in 1usize..=12, round_seed in any::<u64>()) {
        let m = 6;
        let e = economy(seed, n, m, k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
        let selection: Vec<Lottery64> = (0..k)
            .map(|_| {
                let support: Vec<usize> = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0..m)).collect();
                let mut w = vec![0.0; m];
                for j in support {
                    w[j] += rng.gen::<f64>() + 0.05;
                }
                Lottery::from_weights(w).unwrap()
            })
            .collect();
        let (choice, report) = round_purify(&e, &selection, round_seed).unwrap();
        let target = report.aggregate_before.to_vec();
        prop_assert!((deviation_of(&e, &choice, &target) - report.deviation).abs() <= 1e-12);

        // Exhaustive search over all support assignments.
        let supports: Vec<Vec<usize>> = selection.iter().map(|l| l.support()).collect();
        let mut idx = vec![0usize; k];
        let mut best = f64::INFINITY;
        loop {
            let assignment: Vec<usize> = idx.iter().zip(&supports).map(|(&i, s)| s[i]).collect();
            best = best.min(deviation_of(&e, &assignment, &target));
            let mut pos = 0;
            while pos < k {
                idx[pos] += 1;
                if idx[pos] < supports[pos].len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == k {
                break;
            }
        }
        prop_assert!(report.deviation >= best - 1e-12);
        if report.deviation > best + 1e-12 {
            let bound = (n as f64).sqrt() * e.consumption_set().max_norm() * e.agents().iter().map(|a| a.weight).fold(0.0, f64::max);
            prop_assert!(report.deviation <= bound, "greedy {} exceeds bound {bound}", report.deviation);
        }
    }
}
