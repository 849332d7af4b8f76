//! Acquisition functions over Gaussian posteriors.
//!
//! All functions are pure and maximize: larger values mark more promising
//! candidates.

use crate::normal;

/// Gaussian marginal `N(mean, std²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posterior {
    pub mean: f64,
    pub std: f64,
}

impl Posterior {
    pub fn new(mean: f64, std: f64) -> Self {
        debug_assert!(std >= 0.0, "negative std {std}");
        Posterior { mean, std: std.max(0.0) }
    }
}

impl From<crate::gp::Prediction> for Posterior {
    fn from(p: crate::gp::Prediction) -> Self {
        Posterior::new(p.mean, p.std())
    }
}

/// `E[max(0, Y − threshold)]` for `Y ~ N(mean, std²)`.
#[inline]
fn positive_part(p: Posterior, threshold: f64) -> f64 {
    let gap = p.mean - threshold;
    if p.std == 0.0 {
        return gap.max(0.0);
    }
    let z = gap / p.std;
    (gap * normal::cdf(z) + p.std * normal::pdf(z)).max(0.0)
}

/// Closed-form expected improvement over `incumbent`.
pub fn expected_improvement(p: Posterior, incumbent: f64) -> f64 {
    positive_part(p, incumbent)
}

/// `P(c ≥ 0)` for a constraint posterior.
pub fn feasibility_probability(p: Posterior) -> f64 {
    if p.std == 0.0 {
        return if p.mean >= 0.0 { 1.0 } else { 0.0 };
    }
    normal::cdf(p.mean / p.std)
}

/// Reference value for improvement under constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Incumbent {
    /// Best objective among trials that satisfied every constraint.
    Feasible(f64),
    /// No feasible trial yet: the improvement term is replaced by 1 so that
    /// the acquisition reduces to the probability of feasibility.
    NoneFeasible,
}

/// `EI(x) · ∏ P(c_i(x) ≥ 0)`.
pub fn expected_constrained_improvement(obj: Posterior, constraints: &[Posterior], incumbent: Incumbent) -> f64 {
    let ei = match incumbent {
        Incumbent::Feasible(best) => expected_improvement(obj, best),
        Incumbent::NoneFeasible => 1.0,
    };
    constraints
        .iter()
        .fold(ei, |acc, c| acc * feasibility_probability(*c))
}

/// A two-objective Pareto front, both objectives maximized.
///
/// Points are mutually non-dominated, strictly dominate the reference point,
/// and are kept sorted by decreasing first objective (hence increasing second).
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFront2 {
    points: Vec<(f64, f64)>,
    reference: (f64, f64),
}

#[inline]
fn dominates(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 >= b.0 && a.1 >= b.1 && a != b
}

impl ParetoFront2 {
    pub fn new(reference: (f64, f64)) -> Self {
        ParetoFront2 {
            points: Vec::new(),
            reference,
        }
    }

    pub fn from_points(reference: (f64, f64), points: impl IntoIterator<Item = (f64, f64)>) -> Self {
        points
            .into_iter()
            .fold(Self::new(reference), |front, p| front.inserted(p))
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn reference(&self) -> (f64, f64) {
        self.reference
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Inserts `point` unless it is weakly dominated by the front or fails to
    /// strictly dominate the reference; removes every point it dominates.
    /// Returns whether the point was inserted.
    pub fn insert(&mut self, point: (f64, f64)) -> bool {
        let r = self.reference;
        if !(point.0 > r.0 && point.1 > r.1) {
            return false;
        }
        if self.points.iter().any(|&q| q.0 >= point.0 && q.1 >= point.1) {
            return false;
        }
        self.points.retain(|&q| !dominates(point, q));
        let at = self.points.partition_point(|q| q.0 > point.0);
        self.points.insert(at, point);
        true
    }

    pub fn inserted(mut self, point: (f64, f64)) -> Self {
        self.insert(point);
        self
    }

    /// Area dominated by the front and bounded below by the reference point.
    pub fn hypervolume(&self) -> f64 {
        let mut area = 0.0;
        let mut floor = self.reference.1;
        // Sweep by decreasing first objective: each point adds a slab above the previous height.
        for &(x, y) in &self.points {
            area += (x - self.reference.0) * (y - floor);
            floor = y;
        }
        area
    }

    /// Exact hypervolume improvement of a deterministic point.
    pub fn hypervolume_improvement(&self, point: (f64, f64)) -> f64 {
        self.strips()
            .map(|(lo, hi, height)| {
                let width = (hi.min(point.0) - lo).max(0.0);
                width * (point.1 - height).max(0.0)
            })
            .sum()
    }

    /// Partition of the first-objective axis from the reference upward into
    /// strips `(lo, hi, height)`: inside `(lo, hi]` the front dominates every
    /// second-objective value up to `height`.
    fn strips(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let n = self.points.len();
        // Ascending in the first objective is the stored order reversed.
        (0..=n).map(move |j| {
            let lo = if j == 0 {
                self.reference.0
            } else {
                self.points[n - j].0
            };
            let (hi, height) = if j < n {
                let q = self.points[n - 1 - j];
                (q.0, q.1)
            } else {
                (f64::INFINITY, self.reference.1)
            };
            (lo, hi, height)
        })
    }
}

/// Maintains a front: returns `front` with `point` inserted when non-dominated.
pub fn pareto_insert(front: &ParetoFront2, point: (f64, f64)) -> ParetoFront2 {
    front.clone().inserted(point)
}

/// Expected hypervolume improvement for independent Gaussian objectives.
///
/// The non-dominated region above the front splits into vertical strips; in
/// each strip the improvement factorizes into a first-objective width term and
/// a second-objective height term, whose expectations are both positive-part
/// moments of a Gaussian.
pub fn ehvi_2d(obj1: Posterior, obj2: Posterior, front: &ParetoFront2) -> f64 {
    front
        .strips()
        .map(|(lo, hi, height)| {
            let width = positive_part(obj1, lo) - if hi.is_finite() { positive_part(obj1, hi) } else { 0.0 };
            let rise = positive_part(obj2, height);
            width.max(0.0) * rise
        })
        .sum()
}
