//! Posynomial edge latencies and path/total latency evaluation.

use thiserror::Error;

use crate::network::{EdgeId, Path};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatencyError {
    #[error("coefficient a_{index} = {value} must be a finite non-negative number")]
    InvalidCoefficient { index: usize, value: f64 },
    #[error("flow {0} is negative")]
    NegativeFlow(f64),
    #[error("unknown edge index {0}")]
    UnknownEdge(usize),
    #[error("expected {expected} latency functions, got {actual}")]
    WrongEdgeCount { expected: usize, actual: usize },
}

/// A polynomial `a_0 + a_1 x + ... + a_d x^d` with non-negative coefficients,
/// hence non-decreasing and convex on `[0, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Posynomial {
    coeffs: Vec<f64>,
}

impl Posynomial {
    /// Trailing zero coefficients are dropped; the zero polynomial keeps a
    /// single `0.0` constant term.
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self, LatencyError> {
        for (index, &value) in coeffs.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(LatencyError::InvalidCoefficient { index, value });
            }
        }
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Ok(Posynomial { coeffs })
    }

    pub fn constant(c: f64) -> Result<Self, LatencyError> {
        Self::new(vec![c])
    }

    /// `coef * x^degree`
    pub fn monomial(coef: f64, degree: usize) -> Result<Self, LatencyError> {
        let mut coeffs = vec![0.0; degree + 1];
        coeffs[degree] = coef;
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Has a positive coefficient of some power `i >= 1`.
    pub fn is_strictly_increasing(&self) -> bool {
        self.coeffs.iter().skip(1).any(|&a| a > 0.0)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() == 1
    }

    pub fn eval(&self, x: f64) -> Result<f64, LatencyError> {
        check_flow(x)?;
        Ok(self.value(x))
    }

    /// `l(x) + x l'(x)`, the cost an extra unit of flow imposes on everyone.
    pub fn marginal(&self, x: f64) -> Result<f64, LatencyError> {
        check_flow(x)?;
        Ok(self.marginal_value(x))
    }

    /// Horner evaluation without the domain check.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &a| acc * x + a)
    }

    /// `sum (1 + i) a_i x^i`
    #[inline]
    pub fn marginal_value(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (i, &a)| acc * x + (1 + i) as f64 * a)
    }

    /// `l'(x)`
    #[inline]
    pub fn derivative_value(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (i, &a)| acc * x + i as f64 * a)
    }

    /// Slope of the marginal cost, `sum i (1 + i) a_i x^(i-1)`.
    #[inline]
    pub fn marginal_slope_value(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (i, &a)| acc * x + (i * (1 + i)) as f64 * a)
    }

    /// `int_0^x l(t) dt`
    #[inline]
    pub fn integral_value(&self, x: f64) -> f64 {
        x * self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (i, &a)| acc * x + a / (1 + i) as f64)
    }
}

fn check_flow(x: f64) -> Result<(), LatencyError> {
    if x < 0.0 || x.is_nan() {
        return Err(LatencyError::NegativeFlow(x));
    }
    Ok(())
}

/// One latency function per edge, indexed by [`EdgeId`].
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeCosts(Vec<Posynomial>);

impl EdgeCosts {
    pub fn new(costs: Vec<Posynomial>) -> Self {
        EdgeCosts(costs)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, e: EdgeId) -> Result<&Posynomial, LatencyError> {
        self.0.get(e.0).ok_or(LatencyError::UnknownEdge(e.0))
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Posynomial> {
        self.0.iter()
    }

    pub fn max_degree(&self) -> usize {
        self.0.iter().map(Posynomial::degree).max().unwrap_or(0)
    }

    /// Latency of a path or sub-path: the sum of its edge latencies. The
    /// empty sub-path has latency zero.
    pub fn path_latency(&self, edge_flows: &[f64], edges: &[EdgeId]) -> Result<f64, LatencyError> {
        self.path_sum(edge_flows, edges, Posynomial::eval)
    }

    /// Marginal cost of a path: the sum of edge marginal costs.
    pub fn path_marginal(&self, edge_flows: &[f64], edges: &[EdgeId]) -> Result<f64, LatencyError> {
        self.path_sum(edge_flows, edges, Posynomial::marginal)
    }

    fn path_sum(
        &self,
        edge_flows: &[f64],
        edges: &[EdgeId],
        f: fn(&Posynomial, f64) -> Result<f64, LatencyError>,
    ) -> Result<f64, LatencyError> {
        edges.iter().try_fold(0.0, |acc, &e| {
            let x = *edge_flows.get(e.0).ok_or(LatencyError::UnknownEdge(e.0))?;
            Ok(acc + f(self.get(e)?, x)?)
        })
    }

    /// Total latency `sum_e x_e l_e(x_e)`.
    pub fn total_latency(&self, edge_flows: &[f64]) -> Result<f64, LatencyError> {
        self.check_len(edge_flows)?;
        self.0
            .iter()
            .zip(edge_flows)
            .try_fold(0.0, |acc, (l, &x)| Ok(acc + x * l.eval(x)?))
    }

    /// Total latency in path form, `sum_p x_p l_p(x)`.
    pub fn total_latency_by_paths<'a>(
        &self,
        edge_flows: &[f64],
        path_flows: impl IntoIterator<Item = (&'a Path, f64)>,
    ) -> Result<f64, LatencyError> {
        self.check_len(edge_flows)?;
        path_flows.into_iter().try_fold(0.0, |acc, (p, m)| {
            Ok(acc + m * self.path_latency(edge_flows, p.edges())?)
        })
    }

    /// Beckmann potential `sum_e int_0^{x_e} l_e`.
    pub fn beckmann_potential(&self, edge_flows: &[f64]) -> Result<f64, LatencyError> {
        self.check_len(edge_flows)?;
        self.0.iter().zip(edge_flows).try_fold(0.0, |acc, (l, &x)| {
            check_flow(x)?;
            Ok(acc + l.integral_value(x))
        })
    }

    fn check_len(&self, edge_flows: &[f64]) -> Result<(), LatencyError> {
        if edge_flows.len() != self.0.len() {
            return Err(LatencyError::WrongEdgeCount {
                expected: self.0.len(),
                actual: edge_flows.len(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn poly(c: &[f64]) -> Posynomial {
        Posynomial::new(c.to_vec()).unwrap()
    }

    #[test]
    fn eval_examples() {
        for d in 1..=4 {
            let df = d as f64;
            assert_eq!(poly(&[1.0 + df]).eval(1.0).unwrap(), 1.0 + df);
            assert_eq!(
                Posynomial::monomial(1.0, d).unwrap().eval(1.0).unwrap(),
                1.0
            );
        }
        assert_eq!(poly(&[0.3, 2.0, 5.0]).eval(0.0).unwrap(), 0.3);
        assert_eq!(
            poly(&[1.0]).eval(-1e-3),
            Err(LatencyError::NegativeFlow(-1e-3))
        );
    }

    #[test]
    fn marginal_examples() {
        for d in 1..=4 {
            let m = Posynomial::monomial(1.0, d).unwrap().marginal(1.0).unwrap();
            assert_eq!(m, 1.0 + d as f64);
        }
        assert_eq!(poly(&[2.5]).marginal(7.0).unwrap(), 2.5);
        assert_eq!(poly(&[0.0, 1.0]).marginal(0.5).unwrap(), 1.0);
        assert!(poly(&[1.0]).marginal(-1.0).is_err());
    }

    #[test]
    fn construction_normalizes_and_validates() {
        assert_eq!(poly(&[1.0, 0.0, 0.0]).coeffs(), &[1.0]);
        assert_eq!(poly(&[]).coeffs(), &[0.0]);
        assert_eq!(
            Posynomial::new(vec![1.0, -0.5]),
            Err(LatencyError::InvalidCoefficient {
                index: 1,
                value: -0.5
            })
        );
        assert!(Posynomial::new(vec![f64::NAN]).is_err());
        assert!(poly(&[0.0, 0.0, 1.0]).is_strictly_increasing());
        assert!(!poly(&[3.0]).is_strictly_increasing());
    }

    #[test]
    fn derived_quantities() {
        let p = poly(&[1.0, 2.0, 3.0]);
        assert_relative_eq!(p.derivative_value(2.0), 2.0 + 12.0);
        assert_relative_eq!(p.marginal_slope_value(2.0), 2.0 * 2.0 + 6.0 * 3.0 * 2.0);
        assert_relative_eq!(p.integral_value(2.0), 2.0 + 4.0 + 8.0);
    }

    #[test]
    fn path_and_total_latency_on_three_links() {
        // links 1+d, x^d, 1 with d = 2
        let costs = EdgeCosts::new(vec![
            poly(&[3.0]),
            Posynomial::monomial(1.0, 2).unwrap(),
            poly(&[1.0]),
        ]);
        let selfish = [0.0, 1.0, 1.0];
        assert_eq!(costs.path_latency(&selfish, &[EdgeId(1)]).unwrap(), 1.0);
        assert_eq!(costs.path_latency(&selfish, &[]).unwrap(), 0.0);
        assert_eq!(costs.total_latency(&selfish).unwrap(), 2.0);
        let mixed = [1.0, 1.0, 0.0];
        assert_eq!(costs.path_marginal(&mixed, &[EdgeId(1)]).unwrap(), 3.0);
        assert_eq!(costs.total_latency(&mixed).unwrap(), 4.0);
        assert_eq!(costs.total_latency(&[0.0; 3]).unwrap(), 0.0);
        assert_eq!(
            costs.path_latency(&mixed, &[EdgeId(7)]),
            Err(LatencyError::UnknownEdge(7))
        );
        assert!(costs.total_latency(&[0.0; 2]).is_err());
    }

    fn posynomial() -> impl Strategy<Value = Posynomial> {
        prop::collection::vec(0.0..2.0f64, 1..=7).prop_map(|c| Posynomial::new(c).unwrap())
    }

    proptest! {
        #[test]
        fn marginal_dominates_latency(p in posynomial(), x in 0.0..10.0f64) {
            prop_assert!(p.marginal_value(x) >= p.value(x));
        }

        #[test]
        fn latency_and_marginal_are_monotone(p in posynomial(), a in 0.0..10.0f64, b in 0.0..10.0f64) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(p.value(lo) <= p.value(hi));
            prop_assert!(p.marginal_value(lo) <= p.marginal_value(hi));
        }

        #[test]
        fn integral_differentiates_back(p in posynomial(), x in 0.1..3.0f64) {
            let h = 1e-5;
            let fd = (p.integral_value(x + h) - p.integral_value(x - h)) / (2.0 * h);
            prop_assert!((fd - p.value(x)).abs() <= 1e-6 * p.value(x).max(1.0));
        }
    }
}
