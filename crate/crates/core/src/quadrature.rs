//! Composite Gauss-Legendre quadrature on panelled intervals and rectangles.
//!
//! Every integral is evaluated twice on the same panels, once with `order`
//! nodes per panel and once with `ceil(1.5 * order)` nodes. The higher-order
//! value is reported and the absolute difference between the two levels is the
//! error estimate. When the estimate misses both tolerances every panel is
//! bisected and the pair is recomputed, up to `refinement_limit` times.
//!
//! Accumulation always walks the nodes in a fixed order with compensated
//! summation, so results are bit-reproducible regardless of how the samples
//! were produced (see [`crate::par`]).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::{self, Exec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("Gauss-Legendre order must be at least 1")]
    ZeroOrder,
    #[error("invalid panel [{lo}, {hi}] with order {order}: need lo < hi and order >= 2")]
    InvalidPanel { lo: f64, hi: f64, order: usize },
    #[error("panels do not tile an interval: gap or overlap between {prev_hi} and {next_lo}")]
    NotTiled { prev_hi: f64, next_lo: f64 },
    #[error("quadrature spec has no panels")]
    Empty,
    #[error("tolerances must be positive (abs_tol = {abs_tol}, rel_tol = {rel_tol})")]
    InvalidTolerance { abs_tol: f64, rel_tol: f64 },
    #[error(
        "tolerance not met after {refinements} refinements: value {}, error estimate {}",
        best.value, best.error_estimate
    )]
    ToleranceNotMet { best: QuadResult, refinements: u32 },
    #[error("integrand returned a non-finite value at {at:?}")]
    NonFiniteIntegrand { at: Vec<f64> },
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Nodes and weights of the `order`-point Gauss-Legendre rule on [-1, 1],
/// sorted by increasing node.
pub fn gauss_nodes(order: usize) -> Result<Vec<(f64, f64)>, QuadratureError> {
    if order == 0 {
        return Err(QuadratureError::ZeroOrder);
    }
    let n = order;
    let mut rule = vec![(0.0, 0.0); n];
    // Roots come in +/- pairs; solve for the positive half and mirror.
    for i in 0..n / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule[i] = (-x, w);
        rule[n - 1 - i] = (x, w);
    }
    if n % 2 == 1 {
        let (_, d) = legendre_with_derivative(n, 0.0);
        rule[n / 2] = (0.0, 2.0 / (d * d));
    }
    Ok(rule)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    // P'_n(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Order used for the error-estimating companion rule.
pub fn companion_order(order: usize) -> usize {
    (3 * order).div_ceil(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub lo: f64,
    pub hi: f64,
    /// Gauss nodes per panel.
    pub order: usize,
}

impl Panel {
    pub fn new(lo: f64, hi: f64, order: usize) -> Result<Self, QuadratureError> {
        let panel = Panel { lo, hi, order };
        panel.validate()?;
        Ok(panel)
    }

    fn validate(&self) -> Result<(), QuadratureError> {
        if !(self.lo < self.hi) || self.order < 2 || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(QuadratureError::InvalidPanel { lo: self.lo, hi: self.hi, order: self.order });
        }
        Ok(())
    }

    fn bisect(&self) -> [Panel; 2] {
        let mid = 0.5 * (self.lo + self.hi);
        [
            Panel { lo: self.lo, hi: mid, order: self.order },
            Panel { lo: mid, hi: self.hi, order: self.order },
        ]
    }
}

/// Panels tiling one axis plus the stopping rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub panels: Vec<Panel>,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub refinement_limit: u32,
}

impl QuadratureSpec {
    pub const DEFAULT_REL_TOL: f64 = 1e-10;
    pub const DEFAULT_REFINEMENTS: u32 = 4;

    /// Panels between consecutive break points, all with the same order.
    pub fn from_breaks(breaks: &[f64], order: usize) -> Result<Self, QuadratureError> {
        if breaks.len() < 2 {
            return Err(QuadratureError::Empty);
        }
        let panels = breaks
            .windows(2)
            .map(|w| Panel::new(w[0], w[1], order))
            .collect::<Result<Vec<_>, _>>()?;
        let spec = QuadratureSpec {
            panels,
            abs_tol: 1e-12,
            rel_tol: Self::DEFAULT_REL_TOL,
            refinement_limit: Self::DEFAULT_REFINEMENTS,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn uniform(lo: f64, hi: f64, n_panels: usize, order: usize) -> Result<Self, QuadratureError> {
        if n_panels == 0 {
            return Err(QuadratureError::Empty);
        }
        let h = (hi - lo) / n_panels as f64;
        let breaks: Vec<f64> = (0..=n_panels)
            .map(|i| if i == n_panels { hi } else { lo + h * i as f64 })
            .collect();
        Self::from_breaks(&breaks, order)
    }

    pub fn with_tolerances(mut self, abs_tol: f64, rel_tol: f64) -> Result<Self, QuadratureError> {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self.validate()?;
        Ok(self)
    }

    pub fn with_refinement_limit(mut self, limit: u32) -> Self {
        self.refinement_limit = limit;
        self
    }

    pub fn validate(&self) -> Result<(), QuadratureError> {
        if self.panels.is_empty() {
            return Err(QuadratureError::Empty);
        }
        for p in &self.panels {
            p.validate()?;
        }
        for w in self.panels.windows(2) {
            if w[0].hi != w[1].lo {
                return Err(QuadratureError::NotTiled { prev_hi: w[0].hi, next_lo: w[1].lo });
            }
        }
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(QuadratureError::InvalidTolerance { abs_tol: self.abs_tol, rel_tol: self.rel_tol });
        }
        Ok(())
    }

    pub fn lo(&self) -> f64 {
        self.panels[0].lo
    }

    pub fn hi(&self) -> f64 {
        self.panels[self.panels.len() - 1].hi
    }

    /// Every panel split in two.
    pub fn bisected(&self) -> Self {
        QuadratureSpec {
            panels: self.panels.iter().flat_map(Panel::bisect).collect(),
            ..self.clone()
        }
    }

    /// Whether `error` satisfies either tolerance for `value`.
    pub fn accepts(&self, value: f64, error: f64) -> bool {
        error <= self.abs_tol || error <= self.rel_tol * value.abs()
    }

    /// Flattened node/weight lists for the base and companion orders.
    pub fn compile(&self) -> Result<CompiledRule, QuadratureError> {
        self.validate()?;
        Ok(CompiledRule {
            low: flatten(&self.panels, |p| p.order)?,
            high: flatten(&self.panels, |p| companion_order(p.order))?,
        })
    }
}

fn flatten(panels: &[Panel], order_of: impl Fn(&Panel) -> usize) -> Result<Vec<(f64, f64)>, QuadratureError> {
    let mut cache: Vec<(usize, Vec<(f64, f64)>)> = Vec::new();
    let mut out = Vec::new();
    for p in panels {
        let order = order_of(p);
        if !cache.iter().any(|(o, _)| *o == order) {
            cache.push((order, gauss_nodes(order)?));
        }
        let rule = &cache.iter().find(|(o, _)| *o == order).unwrap().1;
        let mid = 0.5 * (p.lo + p.hi);
        let half = 0.5 * (p.hi - p.lo);
        out.extend(rule.iter().map(|&(t, w)| (mid + half * t, half * w)));
    }
    Ok(out)
}

/// Node/weight pairs for both levels of one spec.
#[derive(Debug, Clone)]
pub struct CompiledRule {
    pub low: Vec<(f64, f64)>,
    pub high: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: u64,
}

/// Result of a multi-channel integration; channel 0 drives refinement.
#[derive(Debug, Clone, Copy)]
pub struct Outcome<const K: usize> {
    pub channels: [QuadResult; K],
    pub converged: bool,
    pub refinements: u32,
}

impl<const K: usize> Outcome<K> {
    fn into_primary(self) -> Result<QuadResult, QuadratureError> {
        if self.converged {
            Ok(self.channels[0])
        } else {
            Err(QuadratureError::ToleranceNotMet { best: self.channels[0], refinements: self.refinements })
        }
    }
}

fn check_finite<const K: usize>(v: &[f64; K], at: &[f64]) -> Result<(), QuadratureError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(QuadratureError::NonFiniteIntegrand { at: at.to_vec() })
    }
}

fn combine<const K: usize>(low: [f64; K], high: [f64; K], evaluations: u64) -> [QuadResult; K] {
    std::array::from_fn(|c| QuadResult {
        value: high[c],
        error_estimate: (high[c] - low[c]).abs(),
        evaluations,
    })
}

/// One two-level pass of a vector-valued 1D integrand over a compiled rule.
pub fn eval_rule_1d<const K: usize, E, F>(rule: &CompiledRule, f: &mut F) -> Result<[QuadResult; K], E>
where
    F: FnMut(f64) -> Result<[f64; K], E>,
    E: From<QuadratureError>,
{
    let mut level = |nodes: &[(f64, f64)]| -> Result<[f64; K], E> {
        let mut acc = [CompensatedSum::new(); K];
        for &(x, w) in nodes {
            let v = f(x)?;
            check_finite(&v, &[x])?;
            for c in 0..K {
                acc[c].add(w * v[c]);
            }
        }
        Ok(acc.map(|a| a.value()))
    };
    let low = level(&rule.low)?;
    let high = level(&rule.high)?;
    Ok(combine(low, high, (rule.low.len() + rule.high.len()) as u64))
}

/// Vector-valued 1D integration with refinement. Channel 0 drives the
/// stopping rule; a missed tolerance is reported through `converged`.
pub fn integrate_channels_1d<const K: usize, E, F>(mut f: F, spec: &QuadratureSpec) -> Result<Outcome<K>, E>
where
    F: FnMut(f64) -> Result<[f64; K], E>,
    E: From<QuadratureError>,
{
    let mut spec = spec.clone();
    let mut evaluations = 0;
    let mut refinements = 0;
    loop {
        let rule = spec.compile()?;
        let mut channels = eval_rule_1d(&rule, &mut f)?;
        evaluations += channels[0].evaluations;
        for ch in channels.iter_mut() {
            ch.evaluations = evaluations;
        }
        let converged = spec.accepts(channels[0].value, channels[0].error_estimate);
        if converged || refinements >= spec.refinement_limit {
            return Ok(Outcome { channels, converged, refinements });
        }
        spec = spec.bisected();
        refinements += 1;
    }
}

pub fn integrate_1d<F>(mut f: F, spec: &QuadratureSpec) -> Result<QuadResult, QuadratureError>
where
    F: FnMut(f64) -> f64,
{
    integrate_channels_1d::<1, QuadratureError, _>(|x| Ok([f(x)]), spec)?.into_primary()
}

/// One two-level pass of a vector-valued tensor-product rule. Samples are
/// produced by `exec` and reduced in row-major node order.
pub fn eval_rule_2d<const K: usize, E, F>(
    rule_x: &CompiledRule,
    rule_y: &CompiledRule,
    f: &F,
    exec: Exec,
) -> Result<[QuadResult; K], E>
where
    F: Fn(f64, f64) -> Result<[f64; K], E> + Sync,
    E: From<QuadratureError> + Send,
{
    let level = |xs: &[(f64, f64)], ys: &[(f64, f64)]| -> Result<[f64; K], E> {
        let rows = par::map_ordered(xs, exec, |&(x, _)| -> Result<Vec<[f64; K]>, E> {
            ys.iter()
                .map(|&(y, _)| {
                    let v = f(x, y)?;
                    check_finite(&v, &[x, y])?;
                    Ok(v)
                })
                .collect()
        });
        let mut acc = [CompensatedSum::new(); K];
        for (row, &(_, wx)) in rows.into_iter().zip(xs) {
            let row = row?;
            for (v, &(_, wy)) in row.iter().zip(ys) {
                let w = wx * wy;
                for c in 0..K {
                    acc[c].add(w * v[c]);
                }
            }
        }
        Ok(acc.map(|a| a.value()))
    };
    let low = level(&rule_x.low, &rule_y.low)?;
    let high = level(&rule_x.high, &rule_y.high)?;
    let evaluations = (rule_x.low.len() * rule_y.low.len() + rule_x.high.len() * rule_y.high.len()) as u64;
    Ok(combine(low, high, evaluations))
}

/// Vector-valued tensor-product integration with refinement of both axes.
/// The stopping rule uses the tolerances of `spec_x`.
pub fn integrate_channels_2d<const K: usize, E, F>(
    f: F,
    spec_x: &QuadratureSpec,
    spec_y: &QuadratureSpec,
    exec: Exec,
) -> Result<Outcome<K>, E>
where
    F: Fn(f64, f64) -> Result<[f64; K], E> + Sync,
    E: From<QuadratureError> + Send,
{
    spec_y.validate()?;
    let mut sx = spec_x.clone();
    let mut sy = spec_y.clone();
    let mut evaluations = 0;
    let mut refinements = 0;
    loop {
        let rx = sx.compile()?;
        let ry = sy.compile()?;
        let mut channels = eval_rule_2d(&rx, &ry, &f, exec)?;
        evaluations += channels[0].evaluations;
        for ch in channels.iter_mut() {
            ch.evaluations = evaluations;
        }
        let converged = sx.accepts(channels[0].value, channels[0].error_estimate);
        if converged || refinements >= sx.refinement_limit {
            return Ok(Outcome { channels, converged, refinements });
        }
        sx = sx.bisected();
        sy = sy.bisected();
        refinements += 1;
    }
}

pub fn integrate_2d<F>(f: F, spec_x: &QuadratureSpec, spec_y: &QuadratureSpec) -> Result<QuadResult, QuadratureError>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    integrate_channels_2d::<1, QuadratureError, _>(|x, y| Ok([f(x, y)]), spec_x, spec_y, Exec::default())?
        .into_primary()
}

/// Break points on `[lo, hi]` graded geometrically toward `lo`:
/// `lo, lo + w r^levels, ..., lo + w r, hi` with `w = hi - lo`.
pub fn graded_toward_lo(lo: f64, hi: f64, ratio: f64, levels: usize) -> Vec<f64> {
    let w = hi - lo;
    let mut breaks = vec![lo];
    for k in (1..=levels).rev() {
        breaks.push(lo + w * ratio.powi(k as i32));
    }
    breaks.push(hi);
    breaks
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(lo: f64, hi: f64, panels: usize, order: usize) -> QuadratureSpec {
        QuadratureSpec::uniform(lo, hi, panels, order).unwrap()
    }

    #[test]
    fn one_point_rule_is_midpoint() {
        assert_eq!(gauss_nodes(1).unwrap(), vec![(0.0, 2.0)]);
    }

    #[test]
    fn two_point_rule_matches_legendre_roots() {
        let r = gauss_nodes(2).unwrap();
        let root = 1.0 / 3f64.sqrt();
        assert!((r[0].0 + root).abs() < 1e-15 && (r[1].0 - root).abs() < 1e-15);
        assert!((r[0].1 - 1.0).abs() < 1e-15 && (r[1].1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_order_rejected() {
        assert_eq!(gauss_nodes(0), Err(QuadratureError::ZeroOrder));
    }

    #[test]
    fn weights_sum_to_two() {
        for n in 1..=64 {
            let s: f64 = gauss_nodes(n).unwrap().iter().map(|p| p.1).sum();
            assert!((s - 2.0).abs() < 1e-14, "order {n}: {s}");
        }
    }

    #[test]
    fn constant_over_full_period() {
        let r = integrate_1d(|_| 1.0, &spec(0.0, 2.0 * PI, 4, 8)).unwrap();
        assert!((r.value - 2.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn lattice_term_over_zone() {
        let r = integrate_1d(|x| 2.0 * (1.0 - x.cos()), &spec(-PI, PI, 8, 10)).unwrap();
        assert!((r.value - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn sqrt_abs_with_break_at_origin() {
        // Graded panels on each side of the branch point.
        let mut breaks: Vec<f64> = graded_toward_lo(0.0, 1.0, 0.15, 14).iter().map(|x| -x).rev().collect();
        breaks.pop();
        breaks.extend(graded_toward_lo(0.0, 1.0, 0.15, 14));
        let s = QuadratureSpec::from_breaks(&breaks, 10).unwrap();
        let r = integrate_1d(|x| x.abs().sqrt(), &s).unwrap();
        assert!((r.value - 4.0 / 3.0).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn unit_square_area() {
        let s = spec(0.0, PI, 2, 4);
        let r = integrate_2d(|_, _| 1.0, &s, &s).unwrap();
        assert!((r.value - PI * PI).abs() < 1e-12);
    }

    #[test]
    fn full_period_harmonics_vanish() {
        let s = spec(-PI, PI, 4, 10);
        let r = integrate_2d(|x, y| x.cos() * y.cos(), &s, &s).unwrap();
        assert!(r.value.abs() < 1e-12);
    }

    #[test]
    fn refinement_is_reported_when_tolerance_is_unreachable() {
        let s = spec(0.0, 1.0, 1, 2).with_tolerances(1e-300, 1e-300).unwrap().with_refinement_limit(2);
        match integrate_1d(|x| x.sqrt(), &s) {
            Err(QuadratureError::ToleranceNotMet { best, refinements }) => {
                assert_eq!(refinements, 2);
                assert!((best.value - 2.0 / 3.0).abs() < 1e-2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nan_integrand_is_an_error() {
        let r = integrate_1d(|x| if x > 0.5 { f64::NAN } else { x }, &spec(0.0, 1.0, 2, 4));
        assert!(matches!(r, Err(QuadratureError::NonFiniteIntegrand { .. })));
    }

    #[test]
    fn spec_validation() {
        assert!(Panel::new(1.0, 1.0, 4).is_err());
        assert!(Panel::new(0.0, 1.0, 1).is_err());
        let mut s = spec(0.0, 1.0, 2, 4);
        s.panels[1].lo = 0.6;
        assert!(matches!(s.validate(), Err(QuadratureError::NotTiled { .. })));
        assert!(spec(0.0, 1.0, 2, 4).with_tolerances(0.0, 1e-3).is_err());
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let s: CompensatedSum = [1.0, 1e100, 1.0, -1e100].into_iter().collect();
        assert_eq!(s.value(), 2.0);
    }
}
