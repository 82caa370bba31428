use std::fmt;

use crate::demand::{expected_utility, relaxed_budget_check, relaxed_value, Lottery};
use crate::economy::{ConstraintMode, Economy, Price};
use crate::scalar::{dot, Scalar};

use super::residual::excess_of;
use super::{EquilibriumCertificate, SolverTrace};

/// Assembles a certificate for `(price, selection)`, filling in residual,
/// gaps and slacks. Does not judge it.
pub fn certify<S: Scalar>(
    economy: &Economy<S>,
    price: Price<S>,
    selection: Vec<Lottery<S>>,
    mode: ConstraintMode,
    solver_trace: SolverTrace,
) -> EquilibriumCertificate<S> {
    let xs = economy.consumption_set();
    let residual = excess_of(economy, &selection);
    let mut gaps = Vec::with_capacity(selection.len());
    let mut slacks = Vec::with_capacity(selection.len());
    for (agent, lottery) in economy.agents().iter().zip(&selection) {
        gaps.push(relaxed_value(xs, agent, &price) - expected_utility(agent, lottery));
        slacks.push(relaxed_budget_check(xs, agent, &price, lottery).slack);
    }
    EquilibriumCertificate {
        price,
        selection,
        residual,
        per_agent_optimality_gap: gaps,
        per_agent_budget_slack: slacks,
        mode,
        solver_trace,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport<S> {
    pub tol: S,
    /// (d) price is finite, nonnegative and normalized.
    pub price_ok: bool,
    /// Selection has one valid lottery over X per agent.
    pub selection_ok: bool,
    /// (a) every lottery is within `tol` of the best affordable expected utility.
    pub optimality_ok: bool,
    /// (b) every lottery satisfies the relaxed budget up to `tol`.
    pub budget_ok: bool,
    /// (c) aggregate excess lies in the constraint set up to `tol`.
    pub market_ok: bool,
    pub optimality_gaps: Vec<S>,
    pub budget_slacks: Vec<S>,
    pub excess: Vec<S>,
    pub distance: S,
    pub issues: Vec<String>,
}

impl<S: Scalar> VerificationReport<S> {
    pub fn passed(&self) -> bool {
        self.price_ok && self.selection_ok && self.optimality_ok && self.budget_ok && self.market_ok
    }
}

impl<S: Scalar> fmt::Display for VerificationReport<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "verification: {}", if self.passed() { "PASS" } else { "FAIL" })?;
        writeln!(f, "  (a) optimality: {}", self.optimality_ok)?;
        writeln!(f, "  (b) budget:     {}", self.budget_ok)?;
        writeln!(f, "  (c) market:     {} (distance {:e})", self.market_ok, self.distance.to_f64_lossy())?;
        writeln!(f, "  (d) price:      {}", self.price_ok)?;
        for issue in &self.issues {
            writeln!(f, "  - {issue}")?;
        }
        Ok(())
    }
}

/// Re-derives every equilibrium clause from the economy and the certificate's
/// price, selection and mode. Stored residuals, gaps and traces are ignored.
pub fn verify_certificate<S: Scalar>(
    economy: &Economy<S>,
    cert: &EquilibriumCertificate<S>,
    tol: S,
) -> VerificationReport<S> {
    let xs = economy.consumption_set();
    let mut report = VerificationReport {
        tol,
        price_ok: true,
        selection_ok: true,
        optimality_ok: true,
        budget_ok: true,
        market_ok: true,
        optimality_gaps: Vec::new(),
        budget_slacks: Vec::new(),
        excess: Vec::new(),
        distance: S::zero(),
        issues: Vec::new(),
    };

    let p: &[S] = &cert.price;
    if p.len() != economy.dimension() || p.iter().any(|c| !c.is_finite() || *c < S::zero()) {
        report.price_ok = false;
        report.issues.push("price has wrong dimension or a negative/non-finite coordinate".into());
    } else {
        let sum: S = p.iter().copied().sum();
        if (sum - S::one()).abs() > tol {
            report.price_ok = false;
            report.issues.push(format!("price sums to {}", sum));
        }
    }
    if cert.selection.len() != economy.agents().len()
        || cert.selection.iter().any(|l| l.len() != xs.len() || Lottery::new(l.probs().to_vec()).is_err())
    {
        report.selection_ok = false;
        report.issues.push("selection is not one lottery over X per agent".into());
    }
    if !(report.price_ok && report.selection_ok) {
        report.optimality_ok = false;
        report.budget_ok = false;
        report.market_ok = false;
        return report;
    }

    // Re-normalize exactly; `price_ok` already bounds the correction by `tol`.
    let sum: S = p.iter().copied().sum();
    let price = Price::new(p.iter().map(|&c| c / sum).collect()).unwrap_or_else(|_| cert.price.clone());
    for (i, (agent, lottery)) in economy.agents().iter().zip(&cert.selection).enumerate() {
        let gap = relaxed_value(xs, agent, &price) - expected_utility(agent, lottery);
        let slack = relaxed_budget_check(xs, agent, &price, lottery).slack;
        if gap > tol {
            report.optimality_ok = false;
            report.issues.push(format!("agent {i} ({}): optimality gap {:e}", agent.id, gap.to_f64_lossy()));
        }
        if slack < -tol {
            report.budget_ok = false;
            report.issues.push(format!("agent {i} ({}): budget exceeded by {:e}", agent.id, (-slack).to_f64_lossy()));
        }
        report.optimality_gaps.push(gap);
        report.budget_slacks.push(slack);
    }
    let residual = excess_of(economy, &cert.selection);
    report.distance = residual.distance(cert.mode);
    if report.distance > tol {
        report.market_ok = false;
        report.issues.push(format!("aggregate excess off the constraint set by {:e}", report.distance.to_f64_lossy()));
    }
    report.excess = residual.excess;
    report
}

/// Value of the aggregate excess `<p, z>`. Nonpositive (up to rounding) when
/// every lottery meets its relaxed budget.
pub fn walras_value_check<S: Scalar>(economy: &Economy<S>, price: &Price<S>, selection: &[Lottery<S>]) -> S {
    dot(price, &excess_of(economy, selection).excess)
}
