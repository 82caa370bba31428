use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::economy::{Economy, Price};
use crate::scalar::Scalar;

use super::{
    certify, check_config, effective_mode, min_residual_with_slack, tightest_certificate, EquilibriumCertificate,
    Method, SolveError, SolverConfig, SolverTrace,
};

/// Barycenter, then simplex vertices, then seeded uniform draws.
pub(crate) fn starting_prices<S: Scalar>(dimension: usize, count: usize, seed: u64) -> Vec<Price<S>> {
    let mut out = vec![Price::uniform(dimension)];
    for k in 0..dimension {
        if out.len() >= count || dimension == 1 {
            break;
        }
        let mut e = vec![S::zero(); dimension];
        e[k] = S::one();
        out.push(Price::new(e).expect("simplex vertex"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < count {
        // Exponential spacings give a uniform point on the simplex.
        let raw: Vec<S> = (0..dimension)
            .map(|_| S::from_f64_lossy(-(1.0 - rng.gen::<f64>()).ln()))
            .collect();
        out.push(Price::normalize(raw).expect("positive draw").0);
    }
    out.truncate(count);
    out
}

struct Run<S: Scalar> {
    certificate: EquilibriumCertificate<S>,
    verified: bool,
    steps: usize,
    evaluations: usize,
}

/// Multi-start projected price adjustment `p <- normalize(max(p + eta_k z, 0))`
/// with `eta_k = eta0 / sqrt(k + 1)`. Starts run in parallel; the first start
/// (in start order) that produces a verified certificate wins; it is built with
/// the least face slack that still clears the market.
pub fn tatonnement_solve<S: Scalar>(
    economy: &Economy<S>,
    config: &SolverConfig,
) -> Result<EquilibriumCertificate<S>, SolveError<S>> {
    check_config(config).map_err(SolveError::Config)?;
    let mode = effective_mode(economy, config);
    let tol = S::from_f64_lossy(config.tol_cert);
    let slack = tol / (S::one() + S::one());
    let fw_tol = S::from_f64_lossy(config.fw_tol);
    let eta0 = S::from_f64_lossy(config.eta0);

    let starts = starting_prices::<S>(economy.dimension(), config.starts, config.seed);
    let runs: Vec<Run<S>> = starts
        .into_par_iter()
        .map(|start| {
            let mut price = start;
            let mut best: Option<(S, EquilibriumCertificate<S>)> = None;
            let mut evaluations = 0;
            for k in 0..=config.max_iters {
                let r = min_residual_with_slack(economy, &price, mode, Some(slack), fw_tol, config.fw_max_iters);
                evaluations += 1;
                let distance = r.residual.distance(mode);
                if best.as_ref().is_none_or(|(d, _)| distance < *d) {
                    if distance <= tol {
                        let (cert, spent) = tightest_certificate(economy, &price, mode, tol, config);
                        evaluations += spent;
                        if let Some(cert) = cert {
                            return Run { certificate: cert, verified: true, steps: k, evaluations };
                        }
                    }
                    let trace = SolverTrace { residual_converged: r.converged, ..SolverTrace::default() };
                    best = Some((distance, certify(economy, price.clone(), r.selection.clone(), mode, trace)));
                }
                if k == config.max_iters {
                    break;
                }
                let eta = eta0 / S::from_usize_lossy(k + 1).sqrt();
                let raw: Vec<S> = price
                    .iter()
                    .zip(&r.residual.excess)
                    .map(|(&p, &z)| (p + eta * z).max(S::zero()))
                    .collect();
                if let Ok((next, _)) = Price::normalize(raw) {
                    price = next;
                }
            }
            let (_, certificate) = best.expect("at least one evaluation");
            Run { certificate, verified: false, steps: config.max_iters, evaluations }
        })
        .collect();

    let mut trace = SolverTrace { method: Some(Method::Tatonnement), ..SolverTrace::default() };
    let mut running = f64::INFINITY;
    for run in &runs {
        running = running.min(run.certificate.residual.distance(mode).to_f64_lossy());
        trace.best_violation.push(running);
    }
    let winner = runs.iter().position(|r| r.verified);
    let upto = winner.map_or(runs.len(), |w| w + 1);
    trace.iterations = runs[..upto].iter().map(|r| r.steps).sum();
    trace.evaluations = runs[..upto].iter().map(|r| r.evaluations).sum();
    trace.best_violation.truncate(upto);
    trace.accepted_at = winner;

    match winner {
        Some(w) => {
            let mut cert = runs.into_iter().nth(w).expect("winner index").certificate;
            trace.residual_converged = cert.solver_trace.residual_converged;
            cert.solver_trace = trace;
            Ok(cert)
        }
        None => {
            let mut best = runs
                .into_iter()
                .min_by(|a, b| {
                    let da = a.certificate.residual.distance(mode);
                    let db = b.certificate.residual.distance(mode);
                    da.partial_cmp(&db).expect("finite distances")
                })
                .expect("at least one start")
                .certificate;
            trace.residual_converged = best.solver_trace.residual_converged;
            best.solver_trace = trace;
            Err(SolveError::NotFound { best: Box::new(best) })
        }
    }
}
