//! Turning lottery allocations into pure ones.
//!
//! [`split_purify`] treats each agent as a slab of a continuum and cuts its
//! mass in proportion to its lottery, so every integral of the allocation is
//! preserved. [`round_purify`] handles agents that cannot be split and is only
//! approximate.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::demand::{barycenter, budget_set, expected_utility, relaxed_value, Lottery};
use crate::economy::{CommodityVector, Economy, Price};
use crate::scalar::{norm2, Scalar};

/// Lottery entries below this are dropped before splitting.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

/// Largest number of test functionals accepted by [`density_refine`].
pub const MAX_TEST_FUNCTIONALS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PurificationError {
    #[error("{found} test utilities supplied, at most {max} supported")]
    TooManyFunctionals { found: usize, max: usize },
    #[error("test utility {index} does not have one vector of length |X| per agent")]
    FunctionalShape { index: usize },
    #[error("test utility {index} has a non-finite entry")]
    FunctionalValue { index: usize },
    #[error("selection has {found} lotteries for {expected} agents")]
    SelectionLength { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Slice<S> {
    pub agent: usize,
    pub mass: S,
    pub bundle: usize,
}

/// Pure allocation over a refined agent space: each agent's mass is cut into
/// slices, each consuming one bundle. Ordered by (agent, bundle).
#[derive(Debug, Clone, PartialEq)]
pub struct SliceAllocation<S> {
    pub slices: Vec<Slice<S>>,
}

impl<S: Scalar> SliceAllocation<S> {
    pub fn mass_of(&self, agent: usize) -> S {
        self.slices.iter().filter(|s| s.agent == agent).map(|s| s.mass).sum()
    }

    pub fn aggregate(&self, economy: &Economy<S>) -> CommodityVector<S> {
        let xs = economy.consumption_set();
        let mut out = vec![S::zero(); xs.dimension()];
        for s in &self.slices {
            for (o, &c) in out.iter_mut().zip(xs.point(s.bundle).iter()) {
                *o += s.mass * c;
            }
        }
        CommodityVector::new(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PurificationReport<S> {
    pub aggregate_before: CommodityVector<S>,
    pub aggregate_after: CommodityVector<S>,
    /// Per agent, `mu_i * EU_i(lambda_i)` minus the mass-weighted utility of
    /// the agent's pure consumption.
    pub utility_gap: Vec<S>,
    /// `|| aggregate_after - aggregate_before ||_2`.
    pub deviation: S,
}

fn check_selection<S: Scalar>(economy: &Economy<S>, selection: &[Lottery<S>]) -> Result<(), PurificationError> {
    if selection.len() != economy.agents().len() {
        return Err(PurificationError::SelectionLength { expected: economy.agents().len(), found: selection.len() });
    }
    Ok(())
}

fn relaxed_aggregate<S: Scalar>(economy: &Economy<S>, selection: &[Lottery<S>]) -> CommodityVector<S> {
    let xs = economy.consumption_set();
    let mut out = vec![S::zero(); xs.dimension()];
    for (agent, lottery) in economy.agents().iter().zip(selection) {
        let b = barycenter(lottery, xs);
        for (o, &c) in out.iter_mut().zip(b.iter()) {
            *o += agent.weight * c;
        }
    }
    CommodityVector::new(out)
}

fn deviation<S: Scalar>(a: &[S], b: &[S]) -> S {
    let d: Vec<S> = a.iter().zip(b).map(|(&x, &y)| x - y).collect();
    norm2(&d)
}

/// Splits agent `i` into slices of mass `mu_i * lambda_i[j]` consuming bundle
/// `j`. Aggregate bundle and every agent's total utility are preserved.
pub fn split_purify<S: Scalar>(
    economy: &Economy<S>,
    selection: &[Lottery<S>],
) -> Result<(SliceAllocation<S>, PurificationReport<S>), PurificationError> {
    check_selection(economy, selection)?;
    let threshold = S::from_f64_lossy(SUPPORT_THRESHOLD);
    let mut slices = Vec::new();
    let mut utility_gap = Vec::with_capacity(selection.len());
    for (i, (agent, lottery)) in economy.agents().iter().zip(selection).enumerate() {
        let kept: Vec<(usize, S)> = lottery
            .probs()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p >= threshold)
            .map(|(j, &p)| (j, p))
            .collect();
        let total: S = kept.iter().map(|&(_, p)| p).sum();
        let mut assigned = S::zero();
        let mut pure_utility = S::zero();
        for (pos, &(j, p)) in kept.iter().enumerate() {
            // The last slice takes the remainder so masses add up to mu_i.
            let mass = if pos + 1 == kept.len() { agent.weight - assigned } else { agent.weight * (p / total) };
            assigned += mass;
            pure_utility += mass * agent.utility[j];
            slices.push(Slice { agent: i, mass, bundle: j });
        }
        utility_gap.push(agent.weight * expected_utility(agent, lottery) - pure_utility);
    }
    let alloc = SliceAllocation { slices };
    let aggregate_before = relaxed_aggregate(economy, selection);
    let aggregate_after = alloc.aggregate(economy);
    let report = PurificationReport {
        deviation: deviation(&aggregate_after, &aggregate_before),
        aggregate_before,
        aggregate_after,
        utility_gap,
    };
    Ok((alloc, report))
}

/// Slices that are not a pure demand at `price`: the bundle must be affordable
/// for the slice's agent and attain the agent's relaxed optimum. Returns the
/// offending slice indices.
pub fn slices_outside_demand<S: Scalar>(economy: &Economy<S>, price: &Price<S>, alloc: &SliceAllocation<S>) -> Vec<usize> {
    let xs = economy.consumption_set();
    let per_agent: Vec<(Vec<usize>, S)> = economy
        .agents()
        .iter()
        .map(|a| (budget_set(xs, a, price), relaxed_value(xs, a, price)))
        .collect();
    alloc
        .slices
        .iter()
        .enumerate()
        .filter(|(_, s)| {
            let agent = economy.agent(s.agent);
            let (budget, value) = &per_agent[s.agent];
            !(budget.contains(&s.bundle) && agent.utility[s.bundle] >= *value - agent.utility_tolerance())
        })
        .map(|(k, _)| k)
        .collect()
}

/// One bundle per agent from its lottery's support, chosen greedily to keep
/// the running aggregate close to the relaxed aggregate. Agents are processed
/// by descending weight; `seed` shuffles agents of equal weight.
pub fn round_purify<S: Scalar>(
    economy: &Economy<S>,
    selection: &[Lottery<S>],
    seed: u64,
) -> Result<(Vec<usize>, PurificationReport<S>), PurificationError> {
    check_selection(economy, selection)?;
    let xs = economy.consumption_set();
    let agents = economy.agents();
    let threshold = S::from_f64_lossy(SUPPORT_THRESHOLD);

    let mut order: Vec<usize> = (0..agents.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    order.sort_by(|&a, &b| agents[b].weight.partial_cmp(&agents[a].weight).expect("finite weights"));

    let mut running = vec![S::zero(); xs.dimension()];
    let mut choice = vec![0usize; agents.len()];
    for &i in &order {
        let agent = &agents[i];
        let bary = barycenter(&selection[i], xs);
        let mut best: Option<(usize, S)> = None;
        for (j, &p) in selection[i].probs().iter().enumerate() {
            if p < threshold {
                continue;
            }
            let trial: Vec<S> = running
                .iter()
                .zip(xs.point(j).iter().zip(bary.iter()))
                .map(|(&r, (&x, &b))| r + agent.weight * (x - b))
                .collect();
            let d = norm2(&trial);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        let (j, _) = best.expect("lottery has support");
        for (r, (&x, &b)) in running.iter_mut().zip(xs.point(j).iter().zip(bary.iter())) {
            *r += agent.weight * (x - b);
        }
        choice[i] = j;
    }

    let aggregate_before = relaxed_aggregate(economy, selection);
    let mut after = vec![S::zero(); xs.dimension()];
    let mut utility_gap = Vec::with_capacity(agents.len());
    for (i, agent) in agents.iter().enumerate() {
        for (o, &c) in after.iter_mut().zip(xs.point(choice[i]).iter()) {
            *o += agent.weight * c;
        }
        utility_gap.push(agent.weight * (expected_utility(agent, &selection[i]) - agent.utility[choice[i]]));
    }
    let aggregate_after = CommodityVector::new(after);
    let report = PurificationReport {
        deviation: deviation(&aggregate_after, &aggregate_before),
        aggregate_before,
        aggregate_after,
        utility_gap,
    };
    Ok((choice, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralReport<S> {
    /// `I_u(lambda) = sum_i mu_i sum_j lambda_i[j] u(i, j)` per test utility.
    pub relaxed: Vec<S>,
    /// The same functional evaluated on the pure slice allocation.
    pub pure: Vec<S>,
    pub max_abs_diff: S,
    /// Aggregate-bundle deviation, as in [`PurificationReport`].
    pub deviation: S,
}

impl<S: Scalar> IntegralReport<S> {
    pub fn matched(&self, tol: S) -> bool {
        self.max_abs_diff <= tol && self.deviation <= tol
    }
}

/// Pure allocation matching the relaxed allocation on the aggregate bundle and
/// on every supplied integral functional. `test_utilities[k][i][j]` is the
/// k-th test utility of agent `i` at bundle `j`.
pub fn density_refine<S: Scalar>(
    economy: &Economy<S>,
    selection: &[Lottery<S>],
    test_utilities: &[Vec<Vec<S>>],
) -> Result<(SliceAllocation<S>, IntegralReport<S>), PurificationError> {
    if test_utilities.len() > MAX_TEST_FUNCTIONALS {
        return Err(PurificationError::TooManyFunctionals { found: test_utilities.len(), max: MAX_TEST_FUNCTIONALS });
    }
    let m = economy.consumption_set().len();
    for (index, u) in test_utilities.iter().enumerate() {
        if u.len() != economy.agents().len() || u.iter().any(|row| row.len() != m) {
            return Err(PurificationError::FunctionalShape { index });
        }
        if u.iter().flatten().any(|v| !v.is_finite()) {
            return Err(PurificationError::FunctionalValue { index });
        }
    }
    let (alloc, report) = split_purify(economy, selection)?;
    let mut relaxed = Vec::with_capacity(test_utilities.len());
    let mut pure = Vec::with_capacity(test_utilities.len());
    for u in test_utilities {
        let r: S = economy
            .agents()
            .iter()
            .zip(selection)
            .enumerate()
            .map(|(i, (a, l))| a.weight * l.probs().iter().zip(&u[i]).map(|(&p, &v)| p * v).sum::<S>())
            .sum();
        let p: S = alloc.slices.iter().map(|s| s.mass * u[s.agent][s.bundle]).sum();
        relaxed.push(r);
        pure.push(p);
    }
    let max_abs_diff = relaxed.iter().zip(&pure).map(|(&a, &b)| (a - b).abs()).fold(S::zero(), S::max);
    Ok((alloc, IntegralReport { relaxed, pure, max_abs_diff, deviation: report.deviation }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economy::{Agent, ConsumptionSet, ConstraintMode};

    fn unit_pair_economy(rows: Vec<Vec<f64>>, agents: usize) -> Economy<f64> {
        let m = rows.len();
        let xs = ConsumptionSet::from_rows(2, rows).unwrap();
        let agents = (0..agents).map(|i| Agent::new(format!("a{i}"), 1.0, vec![0.0; m], 0)).collect();
        Economy::new(xs, agents, ConstraintMode::FreeDisposal).unwrap()
    }

    #[test]
    fn split_single_agent() {
        let e = unit_pair_economy(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1);
        let (alloc, report) = split_purify(&e, &[Lottery::uniform_on(2, &[0, 1])]).unwrap();
        assert_eq!(alloc.slices, vec![Slice { agent: 0, mass: 0.5, bundle: 0 }, Slice { agent: 0, mass: 0.5, bundle: 1 }]);
        assert_eq!(&*report.aggregate_after, &[0.5, 0.5]);
        assert_eq!(report.deviation, 0.0);
    }

    #[test]
    fn split_of_pure_selection_is_identity() {
        let e = unit_pair_economy(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 2);
        let sel = vec![Lottery::dirac(2, 1), Lottery::dirac(2, 0)];
        let (alloc, report) = split_purify(&e, &sel).unwrap();
        assert_eq!(alloc.slices, vec![Slice { agent: 0, mass: 1.0, bundle: 1 }, Slice { agent: 1, mass: 1.0, bundle: 0 }]);
        assert_eq!(report.deviation, 0.0);
        assert_eq!(report.utility_gap, vec![0.0, 0.0]);
    }

    #[test]
    fn split_drops_negligible_entries() {
        let e = unit_pair_economy(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1);
        let sel = vec![Lottery::new(vec![1.0 - 1e-13, 1e-13]).unwrap()];
        let (alloc, report) = split_purify(&e, &sel).unwrap();
        assert_eq!(alloc.slices.len(), 1);
        assert!(report.deviation < 1e-12);
    }

    #[test]
    fn round_two_agents_complementary() {
        let e = unit_pair_economy(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 2);
        let sel = vec![Lottery::uniform_on(2, &[0, 1]); 2];
        for seed in 0..5 {
            let (choice, report) = round_purify(&e, &sel, seed).unwrap();
            assert_ne!(choice[0], choice[1]);
            assert_eq!(report.deviation, 0.0);
        }
    }

    #[test]
    fn round_single_agent_best_possible() {
        let e = unit_pair_economy(vec![vec![2.0, 0.0], vec![0.0, 2.0]], 1);
        let (_, report) = round_purify(&e, &[Lottery::uniform_on(2, &[0, 1])], 0).unwrap();
        assert!((report.deviation - 2f64.sqrt()).abs() < 1e-15);
        assert!(report.deviation <= 2f64.sqrt() * 2.0);
    }

    #[test]
    fn density_rejects_bad_functionals() {
        let e = unit_pair_economy(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1);
        let sel = [Lottery::dirac(2, 0)];
        assert!(matches!(
            density_refine(&e, &sel, &[vec![vec![1.0]]]),
            Err(PurificationError::FunctionalShape { index: 0 })
        ));
        let many = vec![vec![vec![0.0, 0.0]]; 65];
        assert!(matches!(density_refine(&e, &sel, &many), Err(PurificationError::TooManyFunctionals { .. })));
        let (_, r) = density_refine(&e, &sel, &[]).unwrap();
        assert!(r.relaxed.is_empty() && r.matched(1e-10));
    }
}
