//! Scenario builders: common-endowment (envy-free) economies, indivisible
//! goods, and seeded random economies for property suites.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::demand::{barycenter, expected_utility, Lottery};
use crate::economy::{
    mean_endowment, validate_assumption2iii, validate_assumption3, Agent, CommodityVector, ConstraintMode,
    ConsumptionSet, Economy,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error("invalid generator parameters: {0}")]
    Params(String),
    #[error("indivisible economies need integer bundles")]
    NotInteger,
    #[error("endowment {0:?} has a coordinate that is not a positive integer")]
    EndowmentNotPositive(Vec<u32>),
    #[error("cannot place {needed} distinct bundles in a consumption set of size {set_size}")]
    Capacity { needed: usize, set_size: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("mean endowment {mean:?} is not a bundle of the consumption set")]
pub struct Rejection {
    pub mean: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub seed: u64,
    /// Commodity dimension.
    pub n: usize,
    /// Size of the consumption set.
    pub set_size: usize,
    pub agent_count: usize,
    pub weight_range: (f64, f64),
    pub utility_range: (f64, f64),
    pub integer_bundles: bool,
    /// Bundle coordinates are drawn from `[0, coord_max]`.
    pub coord_max: u32,
    /// Put the zero bundle in X and draw endowments among strictly positive
    /// bundles, so every endowment strictly dominates some bundle.
    pub include_zero: bool,
    /// Explicit integer bundles (indivisible economies only).
    pub fixed_bundles: Option<Vec<Vec<u32>>>,
    /// Explicit per-agent integer endowments (indivisible economies only).
    pub fixed_endowments: Option<Vec<Vec<u32>>>,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            seed: 0,
            n: 2,
            set_size: 4,
            agent_count: 2,
            weight_range: (0.5, 2.0),
            utility_range: (0.0, 1.0),
            integer_bundles: false,
            coord_max: 3,
            include_zero: true,
            fixed_bundles: None,
            fixed_endowments: None,
        }
    }
}

impl GeneratorParams {
    fn check(&self) -> Result<(), GeneratorError> {
        let bad = |m: &str| Err(GeneratorError::Params(m.to_string()));
        if self.n == 0 || self.set_size == 0 || self.agent_count == 0 {
            return bad("counts must be at least 1");
        }
        let (wl, wh) = self.weight_range;
        if !(wl > 0.0 && wl <= wh && wh.is_finite()) {
            return bad("weight range must be a nonempty range of positive reals");
        }
        let (ul, uh) = self.utility_range;
        if !(ul <= uh && ul.is_finite() && uh.is_finite()) {
            return bad("utility range must be nonempty and finite");
        }
        if self.coord_max == 0 && self.set_size > 1 {
            return bad("coord_max must be positive when |X| > 1");
        }
        if self.integer_bundles {
            let capacity = (self.coord_max as f64 + 1.0).powi(self.n as i32);
            if (self.set_size as f64) > capacity {
                return Err(GeneratorError::Capacity { needed: self.set_size, set_size: capacity as usize });
            }
        }
        Ok(())
    }
}

/// A generated economy with the assumption checks recorded for test gating.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedEconomy<S> {
    pub economy: Economy<S>,
    pub assumption3_holds: bool,
    pub assumption2iii_holds: bool,
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

fn random_agents<S: Scalar>(
    rng: &mut ChaCha8Rng,
    params: &GeneratorParams,
    set_size: usize,
    endowments: &[usize],
) -> Vec<Agent<S>> {
    endowments
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let weight = S::from_f64_lossy(uniform(rng, params.weight_range));
            let utility = (0..set_size).map(|_| S::from_f64_lossy(uniform(rng, params.utility_range))).collect();
            Agent::new(format!("a{i}"), weight, utility, e)
        })
        .collect()
}

/// Seeded random economy. Always passes the well-formedness check.
pub fn random_economy<S: Scalar>(params: &GeneratorParams) -> Result<GeneratedEconomy<S>, GeneratorError> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.n;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(params.set_size);
    if params.include_zero {
        rows.push(vec![0.0; n]);
    }
    while rows.len() < params.set_size {
        let row: Vec<f64> = (0..n)
            .map(|_| {
                if params.integer_bundles {
                    rng.gen_range(0..=params.coord_max) as f64
                } else {
                    rng.gen_range(0.0..params.coord_max as f64)
                }
            })
            .collect();
        if !rows.contains(&row) {
            rows.push(row);
        }
    }
    let interior: Vec<usize> = (0..rows.len()).filter(|&j| rows[j].iter().all(|&c| c > 0.0)).collect();
    let pool: Vec<usize> = if params.include_zero && !interior.is_empty() {
        interior
    } else {
        (0..rows.len()).collect()
    };
    let endowments: Vec<usize> = (0..params.agent_count).map(|_| pool[rng.gen_range(0..pool.len())]).collect();
    let agents = random_agents(&mut rng, params, rows.len(), &endowments);
    let rows = rows.into_iter().map(|r| r.into_iter().map(S::from_f64_lossy).collect()).collect();
    let xs = ConsumptionSet::from_rows(n, rows).expect("generated bundles have the right dimension");
    let economy = Economy::new(xs, agents, ConstraintMode::FreeDisposal).expect("generated economy is well-shaped");
    Ok(GeneratedEconomy {
        assumption3_holds: validate_assumption3(&economy).passed(),
        assumption2iii_holds: validate_assumption2iii(&economy).passed(),
        economy,
    })
}

/// Economy with integer bundles, the zero bundle, and endowments whose
/// coordinates are all positive integers.
pub fn make_indivisible_economy<S: Scalar>(params: &GeneratorParams) -> Result<Economy<S>, GeneratorError> {
    if !params.integer_bundles {
        return Err(GeneratorError::NotInteger);
    }
    if params.fixed_bundles.is_none() {
        params.check()?;
    }
    let n = params.n;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let positive = |b: &[u32]| b.len() == n && b.iter().all(|&c| c > 0);

    let mut rows: Vec<Vec<u32>> = vec![vec![0; n]];
    if let Some(fixed) = &params.fixed_bundles {
        for b in fixed {
            if b.len() != n {
                return Err(GeneratorError::Params(format!("bundle {b:?} is not {n}-dimensional")));
            }
            if !rows.contains(b) {
                rows.push(b.clone());
            }
        }
    }

    let endowment_bundles: Vec<Vec<u32>> = match (&params.fixed_endowments, &params.fixed_bundles) {
        (Some(fixed), _) => {
            if fixed.len() != params.agent_count {
                return Err(GeneratorError::Params("one fixed endowment per agent required".into()));
            }
            if let Some(bad) = fixed.iter().find(|b| !positive(b)) {
                return Err(GeneratorError::EndowmentNotPositive(bad.clone()));
            }
            fixed.clone()
        }
        (None, Some(_)) => {
            let pool: Vec<Vec<u32>> = rows.iter().filter(|b| positive(b)).cloned().collect();
            if pool.is_empty() {
                return Err(GeneratorError::Params("no strictly positive bundle to use as endowment".into()));
            }
            (0..params.agent_count).map(|_| pool[rng.gen_range(0..pool.len())].clone()).collect()
        }
        (None, None) => {
            if params.coord_max == 0 {
                return Err(GeneratorError::Params("coord_max must be positive".into()));
            }
            (0..params.agent_count)
                .map(|_| (0..n).map(|_| rng.gen_range(1..=params.coord_max)).collect())
                .collect()
        }
    };
    for b in &endowment_bundles {
        if !rows.contains(b) {
            rows.push(b.clone());
        }
    }
    if params.fixed_bundles.is_none() {
        if rows.len() > params.set_size {
            return Err(GeneratorError::Capacity { needed: rows.len(), set_size: params.set_size });
        }
        while rows.len() < params.set_size {
            let b: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=params.coord_max)).collect();
            if !rows.contains(&b) {
                rows.push(b);
            }
        }
    }
    let endowments: Vec<usize> = endowment_bundles
        .iter()
        .map(|b| rows.iter().position(|r| r == b).expect("endowment inserted"))
        .collect();
    let agents = random_agents(&mut rng, params, rows.len(), &endowments);
    let rows = rows
        .into_iter()
        .map(|r| r.into_iter().map(|c| S::from_u32(c).expect("small integer")).collect())
        .collect();
    let xs = ConsumptionSet::from_rows(n, rows).map_err(|e| GeneratorError::Params(e.to_string()))?;
    Economy::new(xs, agents, ConstraintMode::FreeDisposal).map_err(|e| GeneratorError::Params(e.to_string()))
}

/// Give every agent the mass-weighted mean endowment. The mean must itself
/// be a bundle of X (exact coordinate match).
pub fn make_envy_free_economy<S: Scalar>(base: &Economy<S>) -> Result<Economy<S>, Rejection> {
    let mean = mean_endowment(base);
    match base.consumption_set().position(&mean) {
        Some(j) => Ok(base.with_common_endowment(j)),
        None => Err(Rejection { mean: mean.iter().map(|c| c.to_f64_lossy()).collect() }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvyReport<S> {
    /// `(i, k, excess)`: agent `i` values agent `k`'s lottery `excess` above
    /// its own.
    pub envious_pairs: Vec<(usize, usize, S)>,
}

impl<S: Scalar> EnvyReport<S> {
    pub fn envy_free(&self) -> bool {
        self.envious_pairs.is_empty()
    }

    /// Envy-freeness read as truthful type revelation when agents are types.
    pub fn incentive_compatible(&self) -> bool {
        self.envy_free()
    }
}

impl<S: Scalar> fmt::Display for EnvyReport<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.envy_free() {
            return writeln!(f, "envy-free: yes");
        }
        writeln!(f, "envy-free: no ({} envious pairs)", self.envious_pairs.len())?;
        for (i, k, e) in &self.envious_pairs {
            writeln!(f, "  agent {i} envies agent {k} by {:e}", e.to_f64_lossy())?;
        }
        Ok(())
    }
}

/// Each agent compares its own lottery with every other agent's, using its own
/// utility.
pub fn envy_check<S: Scalar>(economy: &Economy<S>, selection: &[Lottery<S>]) -> EnvyReport<S> {
    let mut envious_pairs = Vec::new();
    for (i, agent) in economy.agents().iter().enumerate() {
        let own = expected_utility(agent, &selection[i]);
        let tol = agent.utility_tolerance();
        for (k, other) in selection.iter().enumerate() {
            if k == i {
                continue;
            }
            let theirs = expected_utility(agent, other);
            if theirs > own + tol {
                envious_pairs.push((i, k, theirs - own));
            }
        }
    }
    EnvyReport { envious_pairs }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParetoReport<S> {
    /// Instance too large for the exhaustive grid.
    NotChecked,
    NoImprovementFound { grid: usize },
    Improvement { selection: Vec<Lottery<S>>, gains: Vec<S> },
}

/// Grid search for a feasible relaxed allocation that makes nobody worse off
/// and someone strictly better off. Exhaustive over lotteries with
/// probabilities in multiples of `1 / grid`; limited to 3 agents and |X| <= 4.
pub fn pareto_check<S: Scalar>(economy: &Economy<S>, selection: &[Lottery<S>], grid: usize) -> ParetoReport<S> {
    let xs = economy.consumption_set();
    let agents = economy.agents();
    if agents.len() > 3 || xs.len() > 4 || grid == 0 {
        return ParetoReport::NotChecked;
    }
    let m = xs.len();
    let lotteries: Vec<Lottery<S>> = crate::solver::lattice_points(m, grid as u64)
        .into_iter()
        .map(|q| Lottery::from_weights(q.into_iter().map(|k| S::from_u64(k).expect("small")).collect()).expect("grid lottery"))
        .collect();
    let barys: Vec<CommodityVector<S>> = lotteries.iter().map(|l| barycenter(l, xs)).collect();
    let current: Vec<S> = agents.iter().zip(selection).map(|(a, l)| expected_utility(a, l)).collect();
    let target = economy.aggregate_endowment();
    let feasible = |z: &[S]| match economy.mode() {
        ConstraintMode::FreeDisposal => z.iter().all(|&c| c <= S::budget_eps()),
        ConstraintMode::Exact => z.iter().all(|c| c.abs() <= S::budget_eps()),
    };
    let mut choice = vec![0usize; agents.len()];
    loop {
        let mut z: Vec<S> = target.iter().map(|&w| -w).collect();
        for (a, &c) in agents.iter().zip(&choice) {
            for (zk, bk) in z.iter_mut().zip(barys[c].iter()) {
                *zk += a.weight * *bk;
            }
        }
        if feasible(&z) {
            let gains: Vec<S> = agents
                .iter()
                .zip(&choice)
                .zip(&current)
                .map(|((a, &c), &u)| expected_utility(a, &lotteries[c]) - u)
                .collect();
            let weakly = agents.iter().zip(&gains).all(|(a, &g)| g >= -a.utility_tolerance());
            let strictly = agents.iter().zip(&gains).any(|(a, &g)| g > a.utility_tolerance());
            if weakly && strictly {
                return ParetoReport::Improvement {
                    selection: choice.iter().map(|&c| lotteries[c].clone()).collect(),
                    gains,
                };
            }
        }
        let mut k = 0;
        loop {
            if k == choice.len() {
                return ParetoReport::NoImprovementFound { grid };
            }
            choice[k] += 1;
            if choice[k] < lotteries.len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}
