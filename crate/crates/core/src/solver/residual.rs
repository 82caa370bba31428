use crate::demand::{near_optimal_basics, Basic, Lottery, Pricing};
use crate::economy::{ConstraintMode, Economy, Price};
use crate::scalar::{dot, Scalar};

use super::ExcessResidual;

/// Outcome of minimizing the aggregate excess over the demand faces at one
/// price.
#[derive(Debug, Clone, PartialEq)]
pub struct MinResidual<S> {
    pub residual: ExcessResidual<S>,
    pub selection: Vec<Lottery<S>>,
    /// Frank-Wolfe gap reached the tolerance before the sweep cap.
    pub converged: bool,
    pub iterations: usize,
    pub gap: S,
}

/// Minimizes the distance of the aggregate excess to the market-constraint
/// set over the exact relaxed demand faces.
pub fn min_residual<S: Scalar>(economy: &Economy<S>, price: &Price<S>) -> MinResidual<S> {
    min_residual_with_slack(
        economy,
        price,
        economy.mode(),
        None,
        S::from_f64_lossy(1e-10),
        10_000,
    )
}

/// As [`min_residual`], with explicit mode and Frank-Wolfe controls.
///
/// `face_slack` widens each agent's face to every basic solution within that
/// much expected utility of the optimum (defaults to the agent's utility
/// tolerance, i.e. the exact face). Selections drawn from a widened face have
/// optimality gaps bounded by the slack.
pub fn min_residual_with_slack<S: Scalar>(
    economy: &Economy<S>,
    price: &Price<S>,
    mode: ConstraintMode,
    face_slack: Option<S>,
    fw_tol: S,
    fw_max_iters: usize,
) -> MinResidual<S> {
    let xs = economy.consumption_set();
    let n = economy.dimension();
    let m = xs.len();

    let blocks: Vec<Block<S>> = economy
        .agents()
        .iter()
        .map(|agent| {
            let pricing = Pricing::new(xs, agent, price);
            let slack = face_slack.unwrap_or_else(|| agent.utility_tolerance());
            let (_, basics) = near_optimal_basics(agent, &pricing, slack);
            let barys = basics.iter().map(|b| basic_barycenter(b, economy)).collect();
            let mut weights = vec![S::zero(); basics.len()];
            weights[0] = S::one();
            Block { mass: agent.weight, basics, barys, weights }
        })
        .collect();

    let target = economy.aggregate_endowment();
    let mut blocks = blocks;
    let mut z: Vec<S> = (0..n)
        .map(|k| {
            blocks.iter().map(|b| b.mass * b.barys[0][k]).sum::<S>() - target[k]
        })
        .collect();

    let mut converged = false;
    let mut gap = S::zero();
    let mut iterations = 0;
    while iterations < fw_max_iters {
        let g = gradient(&z, mode);
        gap = blocks.iter().map(|b| b.fw_gap(&g)).sum();
        let distance = distance(&z, mode);
        if gap <= fw_tol * distance.min(S::one()) {
            converged = true;
            break;
        }
        iterations += 1;
        let mut moved = false;
        for block in &mut blocks {
            let g = gradient(&z, mode);
            if let Some(step) = block.pairwise_step(&g, &z, mode) {
                for (zk, dk) in z.iter_mut().zip(&step) {
                    *zk += *dk;
                }
                moved = true;
            }
        }
        if !moved {
            // No descent pair exists in any block: stationary.
            converged = true;
            break;
        }
    }

    let selection: Vec<Lottery<S>> = blocks.iter().map(|b| b.lottery(m)).collect();
    let residual = excess_of(economy, &selection);
    MinResidual { residual, selection, converged, iterations, gap }
}

/// Aggregate excess recomputed from the lotteries themselves.
pub(crate) fn excess_of<S: Scalar>(economy: &Economy<S>, selection: &[Lottery<S>]) -> ExcessResidual<S> {
    let xs = economy.consumption_set();
    let target = economy.aggregate_endowment();
    let mut z: Vec<S> = target.iter().map(|&w| -w).collect();
    for (agent, lottery) in economy.agents().iter().zip(selection) {
        let b = crate::demand::barycenter(lottery, xs);
        for (zk, bk) in z.iter_mut().zip(b.iter()) {
            *zk += agent.weight * *bk;
        }
    }
    ExcessResidual::from_excess(z)
}

struct Block<S> {
    mass: S,
    basics: Vec<Basic<S>>,
    barys: Vec<Vec<S>>,
    weights: Vec<S>,
}

impl<S: Scalar> Block<S> {
    /// `mass * (<g, current barycenter> - min_v <g, b_v>)`.
    fn fw_gap(&self, g: &[S]) -> S {
        let scores: Vec<S> = self.barys.iter().map(|b| dot(g, b)).collect();
        let current: S = self.weights.iter().zip(&scores).map(|(&w, &s)| w * s).sum();
        let best = scores.iter().copied().fold(S::infinity(), S::min);
        (self.mass * (current - best)).max(S::zero())
    }

    /// Moves weight from the worst active vertex to the best vertex with an
    /// exact line search. Returns the change in aggregate excess.
    fn pairwise_step(&mut self, g: &[S], z: &[S], mode: ConstraintMode) -> Option<Vec<S>> {
        let scores: Vec<S> = self.barys.iter().map(|b| dot(g, b)).collect();
        // Lowest index wins ties on both sides.
        let mut to = 0;
        for v in 1..scores.len() {
            if scores[v] < scores[to] {
                to = v;
            }
        }
        let mut from = None;
        for v in 0..scores.len() {
            if self.weights[v] > S::zero() && from.is_none_or(|f: usize| scores[v] > scores[f]) {
                from = Some(v);
            }
        }
        let from = from?;
        if !(scores[from] > scores[to]) {
            return None;
        }
        let dir: Vec<S> = self.barys[to]
            .iter()
            .zip(&self.barys[from])
            .map(|(&a, &b)| self.mass * (a - b))
            .collect();
        let cap = self.weights[from];
        let gamma = line_search(z, &dir, cap, mode);
        if !(gamma > S::zero()) {
            return None;
        }
        if gamma >= cap {
            self.weights[to] += cap;
            self.weights[from] = S::zero();
        } else {
            self.weights[to] += gamma;
            self.weights[from] -= gamma;
        }
        Some(dir.into_iter().map(|d| gamma.min(cap) * d).collect())
    }

    fn lottery(&self, len: usize) -> Lottery<S> {
        let mut probs = vec![S::zero(); len];
        for (b, &w) in self.basics.iter().zip(&self.weights) {
            if w == S::zero() {
                continue;
            }
            for (j, p) in b.lottery(len).probs().iter().enumerate() {
                probs[j] += w * *p;
            }
        }
        Lottery::from_weights(probs).expect("convex combination of lotteries")
    }
}

fn basic_barycenter<S: Scalar>(basic: &Basic<S>, economy: &Economy<S>) -> Vec<S> {
    let xs = economy.consumption_set();
    match *basic {
        Basic::Dirac(j) => xs.point(j).to_vec(),
        Basic::Pair { cheap, expensive, alpha } => xs
            .point(cheap)
            .iter()
            .zip(xs.point(expensive).iter())
            .map(|(&a, &b)| (S::one() - alpha) * a + alpha * b)
            .collect(),
    }
}

fn gradient<S: Scalar>(z: &[S], mode: ConstraintMode) -> Vec<S> {
    let two = S::one() + S::one();
    z.iter()
        .map(|&zk| match mode {
            ConstraintMode::FreeDisposal => two * zk.max(S::zero()),
            ConstraintMode::Exact => two * zk,
        })
        .collect()
}

fn distance<S: Scalar>(z: &[S], mode: ConstraintMode) -> S {
    match mode {
        ConstraintMode::FreeDisposal => crate::scalar::positive_part_norm(z),
        ConstraintMode::Exact => crate::scalar::norm2(z),
    }
}

/// Exact minimizer over `gamma in [0, cap]` of `sum_k phi(z_k + gamma d_k)`,
/// with `phi(t) = max(t, 0)^2` (free disposal) or `t^2` (exact clearing).
/// The objective is convex and piecewise quadratic, so its derivative is
/// piecewise linear and nondecreasing.
pub(crate) fn line_search<S: Scalar>(z: &[S], d: &[S], cap: S, mode: ConstraintMode) -> S {
    let zero = S::zero();
    match mode {
        ConstraintMode::Exact => {
            let dd = dot(d, d);
            if dd == zero {
                return zero;
            }
            (-dot(z, d) / dd).max(zero).min(cap)
        }
        ConstraintMode::FreeDisposal => {
            let slope = |gamma: S| -> S {
                z.iter()
                    .zip(d)
                    .map(|(&zk, &dk)| (zk + gamma * dk).max(zero) * dk)
                    .sum()
            };
            if slope(zero) >= zero {
                return zero;
            }
            if slope(cap) <= zero {
                return cap;
            }
            let mut knots: Vec<S> = z
                .iter()
                .zip(d)
                .filter(|(_, &dk)| dk != zero)
                .map(|(&zk, &dk)| -zk / dk)
                .filter(|&t| t > zero && t < cap)
                .collect();
            knots.push(zero);
            knots.push(cap);
            knots.sort_by(|a, b| a.partial_cmp(b).expect("finite knots"));
            for w in knots.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                if slope(hi) < zero {
                    continue;
                }
                let mid = (lo + hi) / (S::one() + S::one());
                let (mut num, mut den) = (zero, zero);
                for (&zk, &dk) in z.iter().zip(d) {
                    if zk + mid * dk > zero {
                        num += zk * dk;
                        den += dk * dk;
                    }
                }
                if den == zero {
                    return lo;
                }
                return (-num / den).max(lo).min(hi);
            }
            cap
        }
    }
}
