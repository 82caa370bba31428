//! Exchange economies over a finite consumption set.
//!
//! Construction only rejects shape errors (mismatched lengths, out-of-range
//! indices, nonpositive masses). Value-level problems such as negative
//! coordinates, non-finite utilities or duplicated bundles are reported by the
//! assumption validators instead, so that a malformed-but-parseable economy can
//! still be inspected.

use std::fmt;
use std::ops::Deref;

use thiserror::Error;

use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EconomyError {
    #[error("commodity dimension must be at least 1")]
    ZeroDimension,
    #[error("consumption set is empty")]
    EmptyConsumptionSet,
    #[error("bundle {index} has {found} coordinates, expected {expected}")]
    BundleDimension { index: usize, expected: usize, found: usize },
    #[error("economy has no agents")]
    NoAgents,
    #[error("agent {agent}: utility has {found} entries, consumption set has {expected} points")]
    UtilityLength { agent: usize, expected: usize, found: usize },
    #[error("agent {agent}: endowment index {index} out of range (|X| = {len})")]
    EndowmentIndex { agent: usize, index: usize, len: usize },
    #[error("agent {agent}: weight must be positive and finite")]
    Weight { agent: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PriceError {
    #[error("price has {found} coordinates, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("price coordinate {0} is negative or not finite")]
    Coordinate(usize),
    #[error("price coordinates sum to zero")]
    Zero,
    #[error("price is not normalized (sum = {0})")]
    NotNormalized(f64),
}

/// A point of the nonnegative orthant.
#[derive(Debug, Clone, PartialEq)]
pub struct CommodityVector<S>(Vec<S>);

impl<S: Scalar> CommodityVector<S> {
    pub fn new(coords: Vec<S>) -> Self {
        Self(coords)
    }

    pub fn zeros(dimension: usize) -> Self {
        Self(vec![S::zero(); dimension])
    }

    pub fn into_inner(self) -> Vec<S> {
        self.0
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&c| c >= S::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// Componentwise `self >= other`.
    pub fn dominates(&self, other: &[S]) -> bool {
        self.0.iter().zip(other).all(|(&a, &b)| a >= b)
    }

    /// Componentwise `self > other`.
    pub fn strictly_dominates(&self, other: &[S]) -> bool {
        self.0.iter().zip(other).all(|(&a, &b)| a > b)
    }
}

impl<S> Deref for CommodityVector<S> {
    type Target = [S];
    fn deref(&self) -> &[S] {
        &self.0
    }
}

impl<S: Scalar> From<Vec<S>> for CommodityVector<S> {
    fn from(v: Vec<S>) -> Self {
        Self(v)
    }
}

/// The finite common consumption set. Indices are stable: bundle `j` always
/// refers to `points()[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsumptionSet<S> {
    dimension: usize,
    points: Vec<CommodityVector<S>>,
}

impl<S: Scalar> ConsumptionSet<S> {
    pub fn new(dimension: usize, points: Vec<CommodityVector<S>>) -> Result<Self, EconomyError> {
        if dimension == 0 {
            return Err(EconomyError::ZeroDimension);
        }
        if points.is_empty() {
            return Err(EconomyError::EmptyConsumptionSet);
        }
        for (index, p) in points.iter().enumerate() {
            if p.len() != dimension {
                return Err(EconomyError::BundleDimension { index, expected: dimension, found: p.len() });
            }
        }
        Ok(Self { dimension, points })
    }

    pub fn from_rows(dimension: usize, rows: Vec<Vec<S>>) -> Result<Self, EconomyError> {
        Self::new(dimension, rows.into_iter().map(CommodityVector::new).collect())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[CommodityVector<S>] {
        &self.points
    }

    pub fn point(&self, j: usize) -> &CommodityVector<S> {
        &self.points[j]
    }

    /// Index of a bundle equal to `x` coordinate by coordinate.
    pub fn position(&self, x: &[S]) -> Option<usize> {
        self.points.iter().position(|p| p.as_ref() == x)
    }

    /// Cost `<p, x_j>` of every bundle.
    pub fn costs(&self, price: &Price<S>) -> Vec<S> {
        self.points.iter().map(|x| dot(price, x)).collect()
    }

    /// Largest Euclidean norm over the bundles.
    pub fn max_norm(&self) -> S {
        self.points
            .iter()
            .map(|x| crate::scalar::norm2(x))
            .fold(S::zero(), S::max)
    }
}

impl<S> AsRef<[S]> for CommodityVector<S> {
    fn as_ref(&self) -> &[S] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent<S> {
    pub id: String,
    /// Population mass carried by this agent type.
    pub weight: S,
    /// `utility[j]` is the utility of bundle `j`.
    pub utility: Vec<S>,
    /// Index of the endowment bundle in the consumption set.
    pub endowment: usize,
}

impl<S: Scalar> Agent<S> {
    pub fn new(id: impl Into<String>, weight: S, utility: Vec<S>, endowment: usize) -> Self {
        Self { id: id.into(), weight, utility, endowment }
    }

    pub fn max_utility(&self) -> S {
        self.utility.iter().copied().fold(S::neg_infinity(), S::max)
    }

    pub fn min_utility(&self) -> S {
        self.utility.iter().copied().fold(S::infinity(), S::min)
    }

    /// Tolerance for utility equality: `util_eps` times the larger of the
    /// utility span and the largest utility magnitude.
    pub fn utility_tolerance(&self) -> S {
        let span = self.max_utility() - self.min_utility();
        let mag = self.utility.iter().fold(S::zero(), |m, u| m.max(u.abs()));
        S::util_eps() * span.max(mag)
    }
}

/// Market constraint on aggregate excess: `{0}` or the negative orthant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintMode {
    Exact,
    FreeDisposal,
}

impl fmt::Display for ConstraintMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintMode::Exact => f.write_str("exact"),
            ConstraintMode::FreeDisposal => f.write_str("free_disposal"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Economy<S> {
    consumption_set: ConsumptionSet<S>,
    agents: Vec<Agent<S>>,
    mode: ConstraintMode,
}

impl<S: Scalar> Economy<S> {
    pub fn new(
        consumption_set: ConsumptionSet<S>,
        agents: Vec<Agent<S>>,
        mode: ConstraintMode,
    ) -> Result<Self, EconomyError> {
        if agents.is_empty() {
            return Err(EconomyError::NoAgents);
        }
        let len = consumption_set.len();
        for (i, a) in agents.iter().enumerate() {
            if a.utility.len() != len {
                return Err(EconomyError::UtilityLength { agent: i, expected: len, found: a.utility.len() });
            }
            if a.endowment >= len {
                return Err(EconomyError::EndowmentIndex { agent: i, index: a.endowment, len });
            }
            if !(a.weight > S::zero()) || !a.weight.is_finite() {
                return Err(EconomyError::Weight { agent: i });
            }
        }
        Ok(Self { consumption_set, agents, mode })
    }

    pub fn dimension(&self) -> usize {
        self.consumption_set.dimension()
    }

    pub fn consumption_set(&self) -> &ConsumptionSet<S> {
        &self.consumption_set
    }

    pub fn agents(&self) -> &[Agent<S>] {
        &self.agents
    }

    pub fn agent(&self, i: usize) -> &Agent<S> {
        &self.agents[i]
    }

    pub fn mode(&self) -> ConstraintMode {
        self.mode
    }

    pub fn with_mode(mut self, mode: ConstraintMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn endowment_of(&self, i: usize) -> &CommodityVector<S> {
        self.consumption_set.point(self.agents[i].endowment)
    }

    pub fn total_mass(&self) -> S {
        self.agents.iter().map(|a| a.weight).sum()
    }

    /// `W = sum_i mu_i * omega_i`.
    pub fn aggregate_endowment(&self) -> CommodityVector<S> {
        let mut w = vec![S::zero(); self.dimension()];
        for a in &self.agents {
            let x = self.consumption_set.point(a.endowment);
            for (wk, &xk) in w.iter_mut().zip(x.iter()) {
                *wk += a.weight * xk;
            }
        }
        CommodityVector(w)
    }

    /// Replace every agent's endowment with bundle `index`.
    pub(crate) fn with_common_endowment(&self, index: usize) -> Self {
        let mut out = self.clone();
        for a in &mut out.agents {
            a.endowment = index;
        }
        out
    }
}

/// A normalized price: nonnegative coordinates summing to one (the
/// normalization functional is the all-ones vector).
#[derive(Debug, Clone, PartialEq)]
pub struct Price<S>(Vec<S>);

impl<S: Scalar> Price<S> {
    pub fn new(coords: Vec<S>) -> Result<Self, PriceError> {
        check_coords(&coords)?;
        let sum: S = coords.iter().copied().sum();
        let tol = S::exact_eps() * S::from_usize_lossy(coords.len().max(1));
        if (sum - S::one()).abs() > tol {
            return Err(PriceError::NotNormalized(sum.to_f64_lossy()));
        }
        Ok(Self(coords))
    }

    /// Scale a raw nonnegative vector onto the simplex. Also returns the
    /// correction `|sum(raw) - 1|`.
    pub fn normalize(raw: Vec<S>) -> Result<(Self, S), PriceError> {
        check_coords(&raw)?;
        let sum: S = raw.iter().copied().sum();
        if !(sum > S::zero()) {
            return Err(PriceError::Zero);
        }
        let coords = raw.iter().map(|&c| c / sum).collect();
        Ok((Self(coords), (sum - S::one()).abs()))
    }

    /// Unchecked wrapper for prices read back from files; verification
    /// re-checks normalization itself.
    pub(crate) fn from_raw(coords: Vec<S>) -> Self {
        Self(coords)
    }

    pub fn uniform(dimension: usize) -> Self {
        let c = S::one() / S::from_usize_lossy(dimension);
        Self(vec![c; dimension])
    }

    /// Grid price `q / denom` where `q` sums to `denom`.
    pub fn from_lattice(q: &[u64], denom: u64) -> Self {
        debug_assert_eq!(q.iter().sum::<u64>(), denom);
        let d = S::from_u64(denom).expect("denominator representable");
        Self(q.iter().map(|&k| S::from_u64(k).expect("lattice coordinate representable") / d).collect())
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<S> {
        self.0
    }
}

fn check_coords<S: Scalar>(coords: &[S]) -> Result<(), PriceError> {
    for (k, &c) in coords.iter().enumerate() {
        if !c.is_finite() || c < S::zero() {
            return Err(PriceError::Coordinate(k));
        }
    }
    Ok(())
}

impl<S> Deref for Price<S> {
    type Target = [S];
    fn deref(&self) -> &[S] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    /// Structural well-formedness of the finite data.
    WellFormed,
    /// Satiation points dominate the endowment.
    SatiationAboveEndowment,
    /// Finite consumption set with an interior-dominated endowment.
    InteriorEndowment,
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assumption::WellFormed => f.write_str("A1 (well-formed finite economy)"),
            Assumption::SatiationAboveEndowment => f.write_str("A2(iii) (satiation points dominate endowment)"),
            Assumption::InteriorEndowment => f.write_str("A3 (endowment strictly dominates some bundle)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub agent: Option<usize>,
    pub point: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub assumption: Assumption,
    pub violations: Vec<Violation>,
    /// Per-agent witness bundle, filled only by the interior-endowment check.
    pub witnesses: Vec<Option<usize>>,
}

impl ValidationReport {
    fn new(assumption: Assumption) -> Self {
        Self { assumption, violations: Vec::new(), witnesses: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, agent: Option<usize>, point: Option<usize>, message: String) {
        self.violations.push(Violation { agent, point, message });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "pass" } else { "FAIL" };
        writeln!(f, "{}: {}", self.assumption, status)?;
        for v in &self.violations {
            writeln!(f, "  - {}", v.message)?;
        }
        Ok(())
    }
}

/// Structural checks: X inside the closed orthant, finite data, distinct
/// bundles. Never aborts.
pub fn validate_assumption1<S: Scalar>(economy: &Economy<S>) -> ValidationReport {
    let mut report = ValidationReport::new(Assumption::WellFormed);
    let points = economy.consumption_set().points();
    for (j, x) in points.iter().enumerate() {
        if !x.is_finite() {
            report.push(None, Some(j), format!("bundle {j} has a non-finite coordinate"));
        } else if !x.is_nonnegative() {
            report.push(None, Some(j), format!("bundle {j} has a negative coordinate: X ⊄ E₊"));
        }
    }
    for j in 0..points.len() {
        for k in (j + 1)..points.len() {
            if points[j] == points[k] {
                report.push(None, Some(k), format!("bundles {j} and {k} coincide"));
            }
        }
    }
    for (i, a) in economy.agents().iter().enumerate() {
        if let Some(j) = a.utility.iter().position(|u| !u.is_finite()) {
            report.push(Some(i), Some(j), format!("agent {i} ({}) has a non-finite utility at bundle {j}", a.id));
        }
    }
    report
}

/// Every endowment strictly dominates some bundle of X in every coordinate.
pub fn validate_assumption3<S: Scalar>(economy: &Economy<S>) -> ValidationReport {
    let mut report = ValidationReport::new(Assumption::InteriorEndowment);
    let xs = economy.consumption_set();
    for (i, a) in economy.agents().iter().enumerate() {
        let omega = xs.point(a.endowment);
        let witness = xs.points().iter().position(|z| omega.strictly_dominates(z));
        if witness.is_none() {
            report.push(
                Some(i),
                None,
                format!("agent {i} ({}): no bundle z with ω(t) − z strictly positive", a.id),
            );
        }
        report.witnesses.push(witness);
    }
    report
}

/// Every satiation point of every agent dominates that agent's endowment.
pub fn validate_assumption2iii<S: Scalar>(economy: &Economy<S>) -> ValidationReport {
    let mut report = ValidationReport::new(Assumption::SatiationAboveEndowment);
    let xs = economy.consumption_set();
    for (i, a) in economy.agents().iter().enumerate() {
        let omega = xs.point(a.endowment);
        for j in satiation_set(a) {
            if !xs.point(j).dominates(omega) {
                report.push(
                    Some(i),
                    Some(j),
                    format!("agent {i} ({}): satiation bundle {j} does not dominate the endowment", a.id),
                );
            }
        }
    }
    report
}

/// Indices of the utility-maximal bundles.
pub fn satiation_set<S: Scalar>(agent: &Agent<S>) -> Vec<usize> {
    let max = agent.max_utility();
    let tol = agent.utility_tolerance();
    agent
        .utility
        .iter()
        .enumerate()
        .filter(|(_, &u)| u >= max - tol)
        .map(|(j, _)| j)
        .collect()
}

/// Mass-weighted mean endowment `sum mu_i omega_i / sum mu_i`.
pub fn mean_endowment<S: Scalar>(economy: &Economy<S>) -> CommodityVector<S> {
    let total = economy.total_mass();
    let w = economy.aggregate_endowment();
    CommodityVector(w.iter().map(|&c| c / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_good(points: Vec<Vec<f64>>, agents: Vec<Agent<f64>>) -> Economy<f64> {
        let xs = ConsumptionSet::from_rows(2, points).unwrap();
        Economy::new(xs, agents, ConstraintMode::FreeDisposal).unwrap()
    }

    #[test]
    fn well_formed_economy_passes_a1() {
        let e = two_good(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![Agent::new("a", 1.0, vec![0.0, 1.0], 0)],
        );
        assert!(validate_assumption1(&e).passed());
    }

    #[test]
    fn negative_coordinate_fails_a1() {
        let e = two_good(
            vec![vec![1.0, -0.5], vec![0.0, 1.0]],
            vec![Agent::new("a", 1.0, vec![0.0, 1.0], 1)],
        );
        let r = validate_assumption1(&e);
        assert!(!r.passed());
        assert!(r.violations[0].message.contains("X ⊄ E₊"));
    }

    #[test]
    fn nan_utility_and_duplicates_fail_a1() {
        let e = two_good(
            vec![vec![1.0, 0.0], vec![1.0, 0.0]],
            vec![Agent::new("a", 1.0, vec![f64::NAN, 1.0], 1)],
        );
        let r = validate_assumption1(&e);
        assert_eq!(r.violations.len(), 2);
    }

    #[test]
    fn shape_errors_rejected_at_construction() {
        let xs = ConsumptionSet::from_rows(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let err = Economy::new(xs.clone(), vec![Agent::new("a", 1.0, vec![0.0, 1.0, 2.0], 0)], ConstraintMode::Exact);
        assert_eq!(err.unwrap_err(), EconomyError::UtilityLength { agent: 0, expected: 2, found: 3 });
        let err = Economy::new(xs.clone(), vec![Agent::new("a", 1.0, vec![0.0, 1.0], 2)], ConstraintMode::Exact);
        assert!(matches!(err, Err(EconomyError::EndowmentIndex { .. })));
        let err = Economy::new(xs, vec![Agent::new("a", 0.0, vec![0.0, 1.0], 0)], ConstraintMode::Exact);
        assert!(matches!(err, Err(EconomyError::Weight { agent: 0 })));
        assert!(ConsumptionSet::<f64>::from_rows(2, vec![vec![1.0]]).is_err());
    }

    #[test]
    fn a3_zero_bundle_witness() {
        let e = two_good(
            vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![3.0, 1.0]],
            vec![Agent::new("a", 1.0, vec![0.0, 1.0, 2.0], 1), Agent::new("b", 1.0, vec![0.0, 1.0, 2.0], 2)],
        );
        let r = validate_assumption3(&e);
        assert!(r.passed());
        assert_eq!(r.witnesses, vec![Some(0), Some(0)]);
    }

    #[test]
    fn a3_boundary_endowment_fails() {
        let e = two_good(
            vec![vec![0.0, 0.0], vec![1.0, 0.0]],
            vec![Agent::new("a", 1.0, vec![0.0, 1.0], 1)],
        );
        let r = validate_assumption3(&e);
        assert!(!r.passed());
        assert_eq!(r.violations[0].agent, Some(0));
    }

    #[test]
    fn a3_nonzero_witness() {
        let e = two_good(
            vec![vec![1.0, 1.0], vec![2.0, 2.0]],
            vec![Agent::new("a", 1.0, vec![0.0, 1.0], 1)],
        );
        let r = validate_assumption3(&e);
        assert!(r.passed());
        assert_eq!(r.witnesses, vec![Some(0)]);
    }

    #[test]
    fn a2iii_cases() {
        let pts = vec![vec![1.0, 1.0], vec![0.0, 2.0], vec![2.0, 2.0]];
        let at_endowment = two_good(pts.clone(), vec![Agent::new("a", 1.0, vec![5.0, 1.0, 2.0], 0)]);
        assert!(validate_assumption2iii(&at_endowment).passed());
        let below = two_good(pts.clone(), vec![Agent::new("a", 1.0, vec![1.0, 5.0, 2.0], 0)]);
        assert!(!validate_assumption2iii(&below).passed());
        let mixed = two_good(pts, vec![Agent::new("a", 1.0, vec![1.0, 5.0, 5.0], 0)]);
        let r = validate_assumption2iii(&mixed);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].point, Some(1));
    }

    #[test]
    fn satiation_sets() {
        assert_eq!(satiation_set(&Agent::new("a", 1.0, vec![1.0, 3.0, 3.0], 0)), vec![1, 2]);
        assert_eq!(satiation_set(&Agent::new("a", 1.0, vec![5.0], 0)), vec![0]);
        assert_eq!(satiation_set(&Agent::new("a", 1.0, vec![2.0, 2.0, 2.0], 0)), vec![0, 1, 2]);
    }

    #[test]
    fn mean_endowments() {
        let pts = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![4.0, 0.0], vec![0.0, 4.0]];
        let e = two_good(pts.clone(), vec![Agent::new("a", 1.0, vec![0.0; 4], 0), Agent::new("b", 1.0, vec![0.0; 4], 1)]);
        assert_eq!(&*mean_endowment(&e), &[0.5, 0.5]);
        let e = two_good(pts.clone(), vec![Agent::new("a", 2.5, vec![0.0; 4], 2)]);
        assert_eq!(&*mean_endowment(&e), &[4.0, 0.0]);
        let e = two_good(pts, vec![Agent::new("a", 1.0, vec![0.0; 4], 2), Agent::new("b", 3.0, vec![0.0; 4], 3)]);
        assert_eq!(&*mean_endowment(&e), &[1.0, 3.0]);
    }

    #[test]
    fn price_normalization() {
        let (p, corr) = Price::normalize(vec![1.0, 3.0]).unwrap();
        assert_eq!(&*p, &[0.25, 0.75]);
        assert_eq!(corr, 3.0);
        assert!(Price::new(vec![0.5, 0.6]).is_err());
        assert!(Price::normalize(vec![0.0, 0.0]).is_err());
        assert!(Price::normalize(vec![-1.0, 2.0]).is_err());
        assert_eq!(&*Price::<f64>::from_lattice(&[1, 3], 4), &[0.25, 0.75]);
    }

    #[test]
    fn works_in_single_precision() {
        let xs = ConsumptionSet::<f32>::from_rows(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let e = Economy::new(
            xs,
            vec![Agent::new("a", 1.0f32, vec![0.0, 1.0], 0), Agent::new("b", 1.0, vec![1.0, 0.0], 1)],
            ConstraintMode::FreeDisposal,
        )
        .unwrap();
        assert!(validate_assumption1(&e).passed());
        assert_eq!(&*mean_endowment(&e), &[0.5f32, 0.5]);
    }
}
