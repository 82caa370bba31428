use std::cmp::Ordering;
use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::economy::{Economy, Price};
use crate::scalar::Scalar;

use super::{
    certify, check_config, effective_mode, gaps_within_utility_tolerance, max_gap, min_residual_with_slack,
    tightest_certificate, EquilibriumCertificate, Method, SolveError, SolverConfig, SolverTrace,
};

/// Lattice offset (in units of the refined mesh) explored around each
/// retained point when the mesh is halved.
const REFINE_RADIUS: u64 = 2;

/// All `q` in `Z_+^n` with `sum q = denom`, in lexicographic order.
pub(crate) fn lattice_points(dimension: usize, denom: u64) -> Vec<Vec<u64>> {
    fn rec(prefix: &mut Vec<u64>, left: u64, remaining: usize, out: &mut Vec<Vec<u64>>) {
        if remaining == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(prefix, left - k, remaining - 1, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(dimension), denom, dimension, &mut out);
    out
}

/// Lattice points at denominator `2 * denom` within `REFINE_RADIUS` of `2q`
/// in every coordinate.
fn refine_neighbourhood(q: &[u64], out: &mut BTreeSet<Vec<u64>>) {
    let n = q.len();
    let target: u64 = q.iter().sum::<u64>() * 2;
    fn rec(q: &[u64], k: usize, acc: &mut Vec<u64>, sum: u64, target: u64, out: &mut BTreeSet<Vec<u64>>) {
        let n = q.len();
        if k == n - 1 {
            if sum > target {
                return;
            }
            let last = target - sum;
            let centre = 2 * q[k];
            if last + REFINE_RADIUS >= centre && last <= centre + REFINE_RADIUS {
                acc.push(last);
                out.insert(acc.clone());
                acc.pop();
            }
            return;
        }
        let centre = 2 * q[k];
        for v in centre.saturating_sub(REFINE_RADIUS)..=centre + REFINE_RADIUS {
            acc.push(v);
            rec(q, k + 1, acc, sum + v, target, out);
            acc.pop();
        }
    }
    rec(q, 0, &mut Vec::with_capacity(n), 0, target, out);
}

#[derive(Clone)]
struct Scored<S> {
    lattice: Vec<u64>,
    smoothed: S,
    distance: S,
}

fn rank<S: Scalar>(a: &Scored<S>, b: &Scored<S>) -> Ordering {
    a.smoothed
        .partial_cmp(&b.smoothed)
        .unwrap_or(Ordering::Equal)
        .then(a.distance.partial_cmp(&b.distance).unwrap_or(Ordering::Equal))
        .then_with(|| a.lattice.cmp(&b.lattice))
}

/// Deterministic coarse-to-fine beam search over lattice prices.
///
/// Level `l` evaluates lattice prices of mesh `1 / (N0 * 2^l)`. Each price is
/// scored twice: once with demand faces widened by a slack proportional to the
/// mesh (which keeps the basin of an equilibrium visible at coarse levels), and
/// once with the certificate slack. The best `beam` points seed the next level.
/// Certificates are built with the least face slack that still clears the
/// market. The search stops at the first one whose optimality gaps are within
/// each agent's utility tolerance. A certificate that only verifies with
/// strictly suboptimal lotteries is kept, and the search refines for up to
/// `polish_levels` more levels looking for a tighter one. Without any
/// verified point the search stops after the level of mesh `2^-finest_mesh_exp`.
pub fn simplicial_solve<S: Scalar>(
    economy: &Economy<S>,
    config: &SolverConfig,
) -> Result<EquilibriumCertificate<S>, SolveError<S>> {
    check_config(config).map_err(SolveError::Config)?;
    let n = economy.dimension();
    if n > config.max_dim {
        return Err(SolveError::DimensionTooLarge { dimension: n, max_dim: config.max_dim });
    }
    let mode = effective_mode(economy, config);
    let tol = S::from_f64_lossy(config.tol_cert);
    let cert_slack = tol / (S::one() + S::one());
    let fw_tol = S::from_f64_lossy(config.fw_tol);
    let span = economy
        .agents()
        .iter()
        .map(|a| a.max_utility() - a.min_utility())
        .fold(S::zero(), S::max);

    let mut trace = SolverTrace { method: Some(Method::Simplicial), ..SolverTrace::default() };
    let mut best: Option<EquilibriumCertificate<S>> = None;
    let mut running = f64::INFINITY;
    // Verified certificate whose gaps exceed some agent's utility tolerance,
    // with the level it was found at and its largest gap.
    let mut fallback: Option<(EquilibriumCertificate<S>, usize, S)> = None;
    let mut polish_until = None;

    let mut denom = config.initial_denominator;
    let mut candidates = lattice_points(n, denom);
    let finest = 1u64 << config.finest_mesh_exp;
    let ceiling = 1u64 << super::MAX_MESH_EXP;
    for level in 0.. {
        let mesh = S::one() / S::from_u64(denom).expect("denominator representable");
        let mut smoothing = cert_slack.max(span * mesh);
        if let Some((_, _, gap)) = &fallback {
            smoothing = (*gap / (S::one() + S::one())).max(span * mesh);
        }
        let mut scored: Vec<Scored<S>> = candidates
            .par_iter()
            .map(|q| {
                let price = Price::from_lattice(q, denom);
                let smoothed = min_residual_with_slack(economy, &price, mode, Some(smoothing), fw_tol, config.fw_max_iters)
                    .residual
                    .distance(mode);
                let distance = min_residual_with_slack(economy, &price, mode, Some(cert_slack), fw_tol, config.fw_max_iters)
                    .residual
                    .distance(mode);
                Scored { lattice: q.clone(), smoothed, distance }
            })
            .collect();
        trace.evaluations += 2 * scored.len();
        trace.iterations = level + 1;
        scored.sort_by(rank);

        // Certificate attempts in ascending distance.
        let mut by_distance = scored.clone();
        by_distance.sort_by(|a, b| {
            a.distance.partial_cmp(&b.distance).unwrap_or(Ordering::Equal).then_with(|| a.lattice.cmp(&b.lattice))
        });
        for s in by_distance.iter().take(config.beam) {
            let price = Price::from_lattice(&s.lattice, denom);
            if s.distance <= tol {
                let (cert, evaluations) = tightest_certificate(economy, &price, mode, tol, config);
                trace.evaluations += evaluations;
                if let Some(cert) = cert {
                    running = running.min(cert.residual.distance(mode).to_f64_lossy());
                    if gaps_within_utility_tolerance(economy, &cert) {
                        trace.best_violation.push(running);
                        trace.accepted_at = Some(level);
                        return Ok(finish(cert, trace));
                    }
                    let gap = max_gap(&cert);
                    if fallback.as_ref().is_none_or(|(_, _, g)| gap < *g) {
                        polish_until.get_or_insert(level + config.polish_levels as usize);
                        fallback = Some((cert, level, gap));
                    }
                    continue;
                }
            }
            let improves = best.as_ref().is_none_or(|b| s.distance < b.residual.distance(mode));
            if improves {
                let r = min_residual_with_slack(economy, &price, mode, Some(cert_slack), fw_tol, config.fw_max_iters);
                trace.evaluations += 1;
                let trace = SolverTrace { residual_converged: r.converged, ..SolverTrace::default() };
                best = Some(certify(economy, price, r.selection, mode, trace));
            }
        }
        if let Some(b) = &best {
            running = running.min(b.residual.distance(mode).to_f64_lossy());
        }
        trace.best_violation.push(running);

        let done = match polish_until {
            Some(last) => level >= last || denom >= ceiling,
            None => denom >= finest,
        };
        if n == 1 || done {
            break;
        }
        let mut next = BTreeSet::new();
        for s in scored.iter().take(config.beam) {
            refine_neighbourhood(&s.lattice, &mut next);
        }
        candidates = next.into_iter().collect();
        denom *= 2;
    }

    if let Some((cert, level, _)) = fallback {
        trace.accepted_at = Some(level);
        return Ok(finish(cert, trace));
    }
    let best = best.expect("at least one level evaluated");
    Err(SolveError::NotFound { best: Box::new(finish(best, trace)) })
}

fn finish<S: Scalar>(mut cert: EquilibriumCertificate<S>, mut trace: SolverTrace) -> EquilibriumCertificate<S> {
    trace.residual_converged = cert.solver_trace.residual_converged;
    cert.solver_trace = trace;
    cert
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_enumeration_counts() {
        assert_eq!(lattice_points(1, 8), vec![vec![8]]);
        assert_eq!(lattice_points(2, 4).len(), 5);
        // C(8 + 3, 3)
        assert_eq!(lattice_points(4, 8).len(), 165);
        assert!(lattice_points(3, 6).iter().all(|q| q.iter().sum::<u64>() == 6));
    }

    #[test]
    fn refinement_stays_on_the_simplex() {
        let mut out = BTreeSet::new();
        refine_neighbourhood(&[0, 3, 1], &mut out);
        assert!(out.contains(&vec![0, 6, 2]));
        for q in &out {
            assert_eq!(q.iter().sum::<u64>(), 8);
            assert!(q[0] <= REFINE_RADIUS);
        }
    }
}
