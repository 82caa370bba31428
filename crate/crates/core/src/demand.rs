//! Budget sets, pure and relaxed demand for a single agent at a fixed price.
//!
//! The relaxed demand problem is the linear program
//!
//! ```text
//! maximize   sum_j P_j u_j
//! subject to sum_j P_j c_j <= w,   P in the probability simplex,
//! ```
//!
//! with `c_j = <p, x_j>` and `w = <p, omega>`. Its feasible region has one
//! inequality on top of the simplex, so every basic solution is either a
//! Dirac mass on an affordable bundle or a two-point mixture of a cheap and an
//! expensive bundle with the budget binding. Enumerating those `O(|X|^2)`
//! candidates solves the program exactly and yields the whole optimal face.

use std::fmt;

use thiserror::Error;

use crate::economy::{Agent, CommodityVector, ConsumptionSet, Price};
use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DemandError {
    #[error("lottery entry {0} is negative or not finite")]
    LotteryEntry(usize),
    #[error("lottery sums to {0}, expected 1")]
    LotterySum(f64),
    #[error("satiation tests disagree: support test says {support}, utility test says {utility}")]
    InconsistentSatiation { support: bool, utility: bool },
}

/// A probability vector over the consumption set.
#[derive(Debug, Clone, PartialEq)]
pub struct Lottery<S>(Vec<S>);

impl<S: Scalar> Lottery<S> {
    pub fn new(probs: Vec<S>) -> Result<Self, DemandError> {
        for (j, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < S::zero() {
                return Err(DemandError::LotteryEntry(j));
            }
        }
        let sum: S = probs.iter().copied().sum();
        if (sum - S::one()).abs() > S::exact_eps() {
            return Err(DemandError::LotterySum(sum.to_f64_lossy()));
        }
        Ok(Self(probs))
    }

    /// Rescale nonnegative weights to sum to one. Used after mixing vertices,
    /// where rounding can drift the total by a few ulps.
    pub fn from_weights(mut weights: Vec<S>) -> Result<Self, DemandError> {
        let sum: S = weights.iter().copied().sum();
        if !(sum > S::zero()) {
            return Err(DemandError::LotterySum(sum.to_f64_lossy()));
        }
        for w in &mut weights {
            *w /= sum;
        }
        Self::new(weights)
    }

    /// Unchecked wrapper for lotteries read back from files.
    pub(crate) fn from_raw(probs: Vec<S>) -> Self {
        Self(probs)
    }

    pub fn dirac(len: usize, j: usize) -> Self {
        let mut probs = vec![S::zero(); len];
        probs[j] = S::one();
        Self(probs)
    }

    pub fn uniform_on(len: usize, support: &[usize]) -> Self {
        let mut probs = vec![S::zero(); len];
        let w = S::one() / S::from_usize_lossy(support.len());
        for &j in support {
            probs[j] = w;
        }
        Self(probs)
    }

    fn pair(len: usize, cheap: usize, expensive: usize, alpha: S) -> Self {
        let mut probs = vec![S::zero(); len];
        probs[cheap] = S::one() - alpha;
        probs[expensive] = alpha;
        Self(probs)
    }

    pub fn probs(&self) -> &[S] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &p)| p > S::zero()).map(|(j, _)| j).collect()
    }

    pub fn is_dirac(&self) -> Option<usize> {
        match self.support().as_slice() {
            [j] => Some(*j),
            _ => None,
        }
    }

    /// Probability of the index set `set`.
    pub fn mass_on(&self, set: &[usize]) -> S {
        set.iter().map(|&j| self.0[j]).sum()
    }

    pub fn into_inner(self) -> Vec<S> {
        self.0
    }
}

/// Vertex description of the relaxed demand set together with the optimal
/// expected utility.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandFace<S> {
    pub vertices: Vec<Lottery<S>>,
    pub value: S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PureDemandVariant {
    /// Utility maximizers within the budget set.
    ArgmaxOverBudget,
    /// All bundles of X whose utility equals the best affordable utility,
    /// affordable or not.
    LevelSet,
}

/// Costs and wealth of one agent at one price.
#[derive(Debug, Clone)]
pub(crate) struct Pricing<S> {
    pub costs: Vec<S>,
    pub wealth: S,
}

impl<S: Scalar> Pricing<S> {
    pub fn new(xs: &ConsumptionSet<S>, agent: &Agent<S>, price: &Price<S>) -> Self {
        let costs = xs.costs(price);
        let wealth = costs[agent.endowment];
        Self { costs, wealth }
    }

    #[inline]
    pub fn affordable(&self, j: usize) -> bool {
        self.costs[j] <= self.wealth + S::budget_eps()
    }
}

/// A basic feasible solution of the relaxed demand program.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Basic<S> {
    Dirac(usize),
    /// `(1 - alpha)` on `cheap`, `alpha` on `expensive`, budget binding.
    Pair { cheap: usize, expensive: usize, alpha: S },
}

impl<S: Scalar> Basic<S> {
    pub fn lottery(&self, len: usize) -> Lottery<S> {
        match *self {
            Basic::Dirac(j) => Lottery::dirac(len, j),
            Basic::Pair { cheap, expensive, alpha } => Lottery::pair(len, cheap, expensive, alpha),
        }
    }

    pub fn value(&self, utility: &[S]) -> S {
        match *self {
            Basic::Dirac(j) => utility[j],
            Basic::Pair { cheap, expensive, alpha } => {
                (S::one() - alpha) * utility[cheap] + alpha * utility[expensive]
            }
        }
    }
}

/// Every basic feasible solution with its expected utility, Diracs first
/// (by index) then pairs (by cheap, expensive).
pub(crate) fn basic_solutions<S: Scalar>(agent: &Agent<S>, pricing: &Pricing<S>) -> Vec<(Basic<S>, S)> {
    let m = pricing.costs.len();
    let w = pricing.wealth;
    let mut out = Vec::new();
    for j in 0..m {
        if pricing.affordable(j) {
            let b = Basic::Dirac(j);
            out.push((b, b.value(&agent.utility)));
        }
    }
    for i in 0..m {
        let ci = pricing.costs[i];
        if ci >= w {
            continue;
        }
        for k in 0..m {
            let ck = pricing.costs[k];
            if pricing.affordable(k) {
                continue;
            }
            let alpha = (w - ci) / (ck - ci);
            let b = Basic::Pair { cheap: i, expensive: k, alpha };
            out.push((b, b.value(&agent.utility)));
        }
    }
    out
}

/// Optimal value and the basic solutions within `slack` of it.
pub(crate) fn near_optimal_basics<S: Scalar>(
    agent: &Agent<S>,
    pricing: &Pricing<S>,
    slack: S,
) -> (S, Vec<Basic<S>>) {
    let all = basic_solutions(agent, pricing);
    let value = all.iter().map(|&(_, v)| v).fold(S::neg_infinity(), S::max);
    let keep = all.into_iter().filter(|&(_, v)| v >= value - slack).map(|(b, _)| b).collect();
    (value, keep)
}

/// Optimal expected utility over the relaxed budget set.
pub fn relaxed_value<S: Scalar>(xs: &ConsumptionSet<S>, agent: &Agent<S>, price: &Price<S>) -> S {
    let pricing = Pricing::new(xs, agent, price);
    basic_solutions(agent, &pricing)
        .into_iter()
        .map(|(_, v)| v)
        .fold(S::neg_infinity(), S::max)
}

/// Bundles whose cost does not exceed the endowment's (up to `budget_eps`).
pub fn budget_set<S: Scalar>(xs: &ConsumptionSet<S>, agent: &Agent<S>, price: &Price<S>) -> Vec<usize> {
    let pricing = Pricing::new(xs, agent, price);
    (0..xs.len()).filter(|&j| pricing.affordable(j)).collect()
}

fn best_affordable<S: Scalar>(agent: &Agent<S>, budget: &[usize]) -> S {
    budget.iter().map(|&j| agent.utility[j]).fold(S::neg_infinity(), S::max)
}

pub fn pure_demand<S: Scalar>(
    xs: &ConsumptionSet<S>,
    agent: &Agent<S>,
    price: &Price<S>,
    variant: PureDemandVariant,
) -> Vec<usize> {
    let budget = budget_set(xs, agent, price);
    let best = best_affordable(agent, &budget);
    let tol = agent.utility_tolerance();
    match variant {
        PureDemandVariant::ArgmaxOverBudget => {
            budget.into_iter().filter(|&j| agent.utility[j] >= best - tol).collect()
        }
        PureDemandVariant::LevelSet => (0..xs.len())
            .filter(|&j| (agent.utility[j] - best).abs() <= tol)
            .collect(),
    }
}

pub fn expected_utility<S: Scalar>(agent: &Agent<S>, lottery: &Lottery<S>) -> S {
    dot(lottery.probs(), &agent.utility)
}

/// Mean bundle `sum_j P_j x_j`.
pub fn barycenter<S: Scalar>(lottery: &Lottery<S>, xs: &ConsumptionSet<S>) -> CommodityVector<S> {
    let mut out = vec![S::zero(); xs.dimension()];
    for (&p, x) in lottery.probs().iter().zip(xs.points()) {
        if p == S::zero() {
            continue;
        }
        for (o, &c) in out.iter_mut().zip(x.iter()) {
            *o += p * c;
        }
    }
    CommodityVector::new(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetCheck<S> {
    pub affordable: bool,
    /// `<p, omega> - <p, barycenter>`.
    pub slack: S,
}

pub fn relaxed_budget_check<S: Scalar>(
    xs: &ConsumptionSet<S>,
    agent: &Agent<S>,
    price: &Price<S>,
    lottery: &Lottery<S>,
) -> BudgetCheck<S> {
    let wealth = dot(price, xs.point(agent.endowment));
    let spent = dot(price, &barycenter(lottery, xs));
    let slack = wealth - spent;
    BudgetCheck { affordable: slack >= -S::budget_eps(), slack }
}

/// The relaxed demand set as the convex hull of its optimal basic solutions.
pub fn relaxed_demand_face<S: Scalar>(xs: &ConsumptionSet<S>, agent: &Agent<S>, price: &Price<S>) -> DemandFace<S> {
    let pricing = Pricing::new(xs, agent, price);
    let (value, basics) = near_optimal_basics(agent, &pricing, agent.utility_tolerance());
    DemandFace { vertices: basics.iter().map(|b| b.lottery(xs.len())).collect(), value }
}

/// Whether `lottery` lies in the relaxed demand set: affordable and optimal.
pub fn in_relaxed_demand<S: Scalar>(
    xs: &ConsumptionSet<S>,
    agent: &Agent<S>,
    price: &Price<S>,
    lottery: &Lottery<S>,
) -> bool {
    let value = relaxed_value(xs, agent, price);
    relaxed_budget_check(xs, agent, price, lottery).affordable
        && expected_utility(agent, lottery) >= value - agent.utility_tolerance()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacterizationReport<S> {
    /// Every demand-face vertex puts full mass on the (level-set) pure demand.
    pub forward_holds: bool,
    /// Every probed lottery supported on the pure demand is in the face.
    pub converse_holds: bool,
    /// First counterexample found, if any.
    pub witness: Option<Lottery<S>>,
    /// Pure-demand mass of the witness.
    pub witness_demand_mass: Option<S>,
    /// `max_X u = max_B u`: no unaffordable bundle beats the best affordable one.
    pub max_utility_affordable: bool,
    /// Every bundle of the level-set demand is affordable.
    pub level_set_affordable: bool,
    pub level_set: Vec<usize>,
}

impl<S: Scalar> CharacterizationReport<S> {
    pub fn holds(&self) -> bool {
        self.forward_holds && self.converse_holds
    }
}

impl<S: Scalar> fmt::Display for CharacterizationReport<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "characterization: {} (forward {}, converse {})",
            if self.holds() { "holds" } else { "fails" },
            self.forward_holds,
            self.converse_holds
        )?;
        writeln!(f, "  level-set demand: {:?}", self.level_set)?;
        writeln!(f, "  max_X u = max_B u: {}", self.max_utility_affordable)?;
        writeln!(f, "  level set affordable: {}", self.level_set_affordable)?;
        if let (Some(w), Some(m)) = (&self.witness, self.witness_demand_mass) {
            writeln!(f, "  witness: {:?} with P(D) = {}", w.probs(), m)?;
        }
        Ok(())
    }
}

/// Tests the equivalence "P is relaxed-optimal iff P(D) = 1" at one
/// `(agent, price)`, where D is the level-set pure demand.
///
/// The forward direction is checked on every face vertex, which suffices since
/// `P(D)` is affine in P. The converse is probed on Diracs and pairwise
/// midpoints over D.
pub fn characterization_check<S: Scalar>(
    xs: &ConsumptionSet<S>,
    agent: &Agent<S>,
    price: &Price<S>,
) -> CharacterizationReport<S> {
    let face = relaxed_demand_face(xs, agent, price);
    let level_set = pure_demand(xs, agent, price, PureDemandVariant::LevelSet);
    let budget = budget_set(xs, agent, price);
    let tol = agent.utility_tolerance();
    let mass_tol = S::util_eps();

    let mut witness = None;
    let mut forward_holds = true;
    for v in &face.vertices {
        let mass = v.mass_on(&level_set);
        if (mass - S::one()).abs() > mass_tol {
            forward_holds = false;
            witness = Some((v.clone(), mass));
            break;
        }
    }

    let mut converse_holds = true;
    let m = xs.len();
    let mut probes: Vec<Lottery<S>> = level_set.iter().map(|&j| Lottery::dirac(m, j)).collect();
    for (a, &j) in level_set.iter().enumerate() {
        for &k in &level_set[a + 1..] {
            probes.push(Lottery::uniform_on(m, &[j, k]));
        }
    }
    for probe in probes {
        let affordable = relaxed_budget_check(xs, agent, price, &probe).affordable;
        let optimal = expected_utility(agent, &probe) >= face.value - tol;
        if !(affordable && optimal) {
            converse_holds = false;
            if witness.is_none() {
                let mass = probe.mass_on(&level_set);
                witness = Some((probe, mass));
            }
            break;
        }
    }

    let best_affordable = best_affordable(agent, &budget);
    let max_utility_affordable = agent.max_utility() <= best_affordable + tol;
    let level_set_affordable = level_set.iter().all(|j| budget.contains(j));
    let (witness, witness_demand_mass) = match witness {
        Some((w, m)) => (Some(w), Some(m)),
        None => (None, None),
    };
    CharacterizationReport {
        forward_holds,
        converse_holds,
        witness,
        witness_demand_mass,
        max_utility_affordable,
        level_set_affordable,
        level_set,
    }
}

/// Membership in the enlarged demand set: weakly preferred to every
/// affordable lottery. Affordability of `lottery` itself is not required.
pub fn gamma_check<S: Scalar>(
    xs: &ConsumptionSet<S>,
    agent: &Agent<S>,
    price: &Price<S>,
    lottery: &Lottery<S>,
) -> bool {
    expected_utility(agent, lottery) >= relaxed_value(xs, agent, price) - agent.utility_tolerance()
}

/// Whether the lottery is concentrated on satiation points. Runs the support
/// test and the expected-utility test and fails loudly if they disagree.
pub fn satiation_lottery_check<S: Scalar>(agent: &Agent<S>, lottery: &Lottery<S>) -> Result<bool, DemandError> {
    let sat = crate::economy::satiation_set(agent);
    let support = (lottery.mass_on(&sat) - S::one()).abs() <= S::exact_eps();
    let utility = expected_utility(agent, lottery) >= agent.max_utility() - agent.utility_tolerance();
    if support != utility {
        return Err(DemandError::InconsistentSatiation { support, utility });
    }
    Ok(support)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xs2(rows: Vec<Vec<f64>>) -> ConsumptionSet<f64> {
        ConsumptionSet::from_rows(2, rows).unwrap()
    }

    fn scalar_counterexample() -> (ConsumptionSet<f64>, Agent<f64>, Price<f64>) {
        let xs = ConsumptionSet::from_rows(1, vec![vec![0.0], vec![2.0], vec![1.0]]).unwrap();
        let agent = Agent::new("t", 1.0, vec![0.0, 10.0, 0.0], 2);
        (xs, agent, Price::new(vec![1.0]).unwrap())
    }

    /// Independent oracle: best Dirac or budget-binding pair, by brute force
    /// over all ordered pairs and a fine scan of mixing weights.
    fn scan_value(costs: &[f64], u: &[f64], w: f64) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for j in 0..u.len() {
            if costs[j] <= w {
                best = best.max(u[j]);
            }
            for k in 0..u.len() {
                for s in 0..=1000 {
                    let a = s as f64 / 1000.0;
                    if (1.0 - a) * costs[j] + a * costs[k] <= w {
                        best = best.max((1.0 - a) * u[j] + a * u[k]);
                    }
                }
            }
        }
        best
    }

    #[test]
    fn budget_set_examples() {
        let xs = xs2(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![2.0, 2.0]]);
        let a = Agent::new("a", 1.0, vec![0.0; 3], 0);
        let p = Price::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(budget_set(&xs, &a, &p), vec![0, 1]);

        let xs = xs2(vec![vec![0.0, 1.0], vec![0.0, 3.0], vec![0.0, 0.0]]);
        let a = Agent::new("a", 1.0, vec![0.0; 3], 2);
        let p = Price::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(budget_set(&xs, &a, &p), vec![0, 1, 2]);

        let xs = xs2(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![2.0, 2.0]]);
        let a = Agent::new("a", 1.0, vec![0.0; 3], 2);
        assert_eq!(budget_set(&xs, &a, &Price::uniform(2)), vec![0, 1, 2]);
    }

    #[test]
    fn pure_demand_variants() {
        let xs = xs2(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let a = Agent::new("a", 1.0, vec![1.0, 2.0], 0);
        let p = Price::uniform(2);
        assert_eq!(pure_demand(&xs, &a, &p, PureDemandVariant::ArgmaxOverBudget), vec![1]);
        assert_eq!(pure_demand(&xs, &a, &p, PureDemandVariant::LevelSet), vec![1]);

        let xs = xs2(vec![vec![1.0, 0.0], vec![3.0, 3.0], vec![0.0, 5.0]]);
        let a = Agent::new("a", 1.0, vec![3.0, 3.0, 0.0], 0);
        assert_eq!(pure_demand(&xs, &a, &p, PureDemandVariant::ArgmaxOverBudget), vec![0]);
        assert_eq!(pure_demand(&xs, &a, &p, PureDemandVariant::LevelSet), vec![0, 1]);

        let a = Agent::new("a", 1.0, vec![4.0; 3], 0);
        assert_eq!(pure_demand(&xs, &a, &p, PureDemandVariant::ArgmaxOverBudget), budget_set(&xs, &a, &p));
        assert_eq!(pure_demand(&xs, &a, &p, PureDemandVariant::LevelSet), vec![0, 1, 2]);
    }

    #[test]
    fn expected_utility_and_barycenter() {
        let a = Agent::new("a", 1.0, vec![0.0, 2.0], 0);
        assert_eq!(expected_utility(&a, &Lottery::new(vec![0.5, 0.5]).unwrap()), 1.0);
        let a = Agent::new("a", 1.0, vec![1.0, 2.0, 3.0], 0);
        let l = Lottery::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!((expected_utility(&a, &l) - 2.3f64).abs() < 1e-15);
        assert_eq!(expected_utility(&a, &Lottery::dirac(3, 1)), 2.0);

        let xs = xs2(vec![vec![2.0, 0.0], vec![0.0, 2.0]]);
        assert_eq!(&*barycenter(&Lottery::new(vec![0.5, 0.5]).unwrap(), &xs), &[1.0, 1.0]);
        assert_eq!(&*barycenter(&Lottery::dirac(2, 1), &xs), &[0.0, 2.0]);
        let xs = xs2(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
        let b = barycenter(&Lottery::uniform_on(3, &[0, 1, 2]), &xs);
        assert!((b[0] - 2.0 / 3.0).abs() < 1e-15 && (b[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn lottery_validation() {
        assert!(Lottery::new(vec![0.5, 0.6]).is_err());
        assert!(Lottery::new(vec![-0.5, 1.5]).is_err());
        assert_eq!(Lottery::new(vec![0.0, 1.0]).unwrap().is_dirac(), Some(1));
    }

    #[test]
    fn relaxed_budget_examples() {
        let xs = ConsumptionSet::from_rows(1, vec![vec![0.0], vec![2.0], vec![1.0], vec![2.0 + 1.0]]).unwrap();
        let a = Agent::new("a", 1.0, vec![0.0; 4], 2);
        let p = Price::new(vec![1.0]).unwrap();
        let c = relaxed_budget_check(&xs, &a, &p, &Lottery::dirac(4, 2));
        assert!(c.affordable);
        assert_eq!(c.slack, 0.0);
        let c = relaxed_budget_check(&xs, &a, &p, &Lottery::new(vec![0.5, 0.5, 0.0, 0.0]).unwrap());
        assert!(c.affordable);
        let c = relaxed_budget_check(&xs, &a, &p, &Lottery::dirac(4, 1));
        assert!(!c.affordable);
        assert_eq!(c.slack, -1.0);
    }

    #[test]
    fn face_of_scalar_counterexample() {
        let (xs, a, p) = scalar_counterexample();
        let face = relaxed_demand_face(&xs, &a, &p);
        let oracle = scan_value(&[0.0, 2.0, 1.0], &a.utility, 1.0);
        assert_eq!(oracle, 5.0);
        assert_eq!(face.value, 5.0);
        assert_eq!(face.vertices.len(), 1);
        assert_eq!(face.vertices[0].probs(), &[0.5, 0.5, 0.0]);
    }

    #[test]
    fn face_interior_budget_unique_max() {
        let xs = xs2(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]]);
        let a = Agent::new("a", 1.0, vec![1.0, 4.0, 2.0], 0);
        let face = relaxed_demand_face(&xs, &a, &Price::uniform(2));
        assert_eq!(face.value, 4.0);
        assert_eq!(face.vertices, vec![Lottery::dirac(3, 1)]);
    }

    #[test]
    fn face_constant_utility_lists_every_basic_solution() {
        let xs = ConsumptionSet::from_rows(1, vec![vec![0.0], vec![2.0], vec![1.0], vec![3.0]]).unwrap();
        let a = Agent::new("a", 1.0, vec![7.0; 4], 2);
        let face = relaxed_demand_face(&xs, &a, &Price::new(vec![1.0]).unwrap());
        assert_eq!(face.value, 7.0);
        // Diracs at 0 and 2, pairs (0,1) and (0,3).
        assert_eq!(face.vertices.len(), 4);
        for v in &face.vertices {
            assert!(v.support().len() <= 2);
            assert!(relaxed_budget_check(&xs, &a, &Price::new(vec![1.0]).unwrap(), v).affordable);
        }
    }

    #[test]
    fn characterization_examples() {
        let (xs, a, p) = scalar_counterexample();
        let r = characterization_check(&xs, &a, &p);
        assert!(!r.holds());
        assert!(!r.max_utility_affordable);
        assert!((r.witness_demand_mass.unwrap() - 0.5).abs() < 1e-9);

        let xs = xs2(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![2.0, 2.0]]);
        let a = Agent::new("a", 1.0, vec![1.0, 4.0, 2.0], 0);
        let r = characterization_check(&xs, &a, &Price::uniform(2));
        assert!(r.max_utility_affordable);
        assert!(r.holds());

        // Budget set = X.
        let a = Agent::new("a", 1.0, vec![1.0, 4.0, 4.0], 2);
        let r = characterization_check(&xs, &a, &Price::uniform(2));
        assert!(r.holds());
    }

    #[test]
    fn gamma_examples() {
        let (xs, a, p) = scalar_counterexample();
        let face = relaxed_demand_face(&xs, &a, &p);
        assert!(face.vertices.iter().all(|v| gamma_check(&xs, &a, &p, v)));
        assert!(gamma_check(&xs, &a, &p, &Lottery::dirac(3, 1)));
        assert!(!gamma_check(&xs, &a, &p, &Lottery::dirac(3, 0)));
    }

    #[test]
    fn satiation_lottery_examples() {
        let a = Agent::new("a", 1.0, vec![1.0, 5.0, 5.0], 0);
        assert!(satiation_lottery_check(&a, &Lottery::dirac(3, 1)).unwrap());
        assert!(satiation_lottery_check(&a, &Lottery::uniform_on(3, &[1, 2])).unwrap());
        assert!(!satiation_lottery_check(&a, &Lottery::new(vec![0.1, 0.9, 0.0]).unwrap()).unwrap());
    }

    #[test]
    fn zero_wealth_agent_keeps_endowment() {
        let xs = xs2(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]);
        let a = Agent::new("a", 1.0, vec![0.0, 1.0, 2.0], 1);
        let p = Price::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(budget_set(&xs, &a, &p), vec![0, 1]);
        let face = relaxed_demand_face(&xs, &a, &p);
        assert_eq!(face.value, 1.0);
        assert_eq!(face.vertices, vec![Lottery::dirac(3, 1)]);
    }
}
