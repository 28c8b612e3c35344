//! One-dimensional P1 meshes, optionally carrying the radial measure
//! `|S^{n-1}| r^{n-1} dr` so that radially symmetric problems in `R^n`
//! reduce to weighted problems on an interval.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{GAUSS4, GAUSS8};

/// Measure carried by a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Weight {
    Flat,
    /// Radial reduction of an `n`-dimensional problem.
    Radial { n: u32 },
}

impl Weight {
    /// Surface area of the unit sphere `S^{n-1}` in `R^n`.
    pub fn sphere_area(n: u32) -> f64 {
        // |S^0| = 2, |S^1| = 2 pi, |S^{k+1}| = 2 pi / k * |S^{k-1}|
        let (mut area, mut k) = if n % 2 == 1 { (2.0, 1) } else { (2.0 * PI, 2) };
        while k < n {
            area *= 2.0 * PI / k as f64;
            k += 2;
        }
        area
    }

    /// Density of the measure at `x`.
    pub fn density(&self, x: f64) -> f64 {
        match *self {
            Weight::Flat => 1.0,
            Weight::Radial { n } => Self::sphere_area(n) * x.powi(n as i32 - 1),
        }
    }

    /// Spatial dimension represented by this weight (1 for flat meshes).
    pub fn dimension(&self) -> u32 {
        match *self {
            Weight::Flat => 1,
            Weight::Radial { n } => n,
        }
    }
}

/// A strictly increasing node sequence with an attached measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeshRecord")]
pub struct Mesh {
    nodes: Vec<f64>,
    weight: Weight,
}

#[derive(Deserialize)]
struct MeshRecord {
    nodes: Vec<f64>,
    weight: Weight,
}

impl TryFrom<MeshRecord> for Mesh {
    type Error = Error;

    fn try_from(record: MeshRecord) -> Result<Self> {
        Mesh::new(record.nodes, record.weight)
    }
}

/// A quadrature point of a mesh: element index, abscissa, and weight that
/// already includes the element Jacobian and the mesh measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    pub element: usize,
    pub x: f64,
    pub weight: f64,
}

impl Mesh {
    pub fn new(nodes: Vec<f64>, weight: Weight) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidMesh(format!(
                "need at least 3 nodes, got {}",
                nodes.len()
            )));
        }
        if let Some(x) = nodes.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidMesh(format!("non-finite node {x}")));
        }
        if let Some(w) = nodes.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidMesh(format!(
                "nodes must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        if let Weight::Radial { n } = weight {
            if n < 2 {
                return Err(Error::InvalidMesh(format!(
                    "radial weight needs dimension >= 2, got {n}"
                )));
            }
            if nodes[0] <= 0.0 {
                return Err(Error::InvalidMesh(format!(
                    "radial mesh must exclude the origin (first node {})",
                    nodes[0]
                )));
            }
        }
        Ok(Self { nodes, weight })
    }

    /// Equally spaced nodes from `a` to `b` inclusive.
    pub fn uniform(a: f64, b: f64, elements: usize, weight: Weight) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidMesh(format!("need a < b, got ({a}, {b})")));
        }
        if elements < 2 {
            return Err(Error::InvalidMesh(format!(
                "need at least 2 elements, got {elements}"
            )));
        }
        let h = (b - a) / elements as f64;
        let nodes = (0..=elements)
            .map(|i| if i == elements { b } else { a + h * i as f64 })
            .collect();
        Self::new(nodes, weight)
    }

    /// Geometric nodes `a q^i` from `a` to `b`, graded toward the inner end.
    pub fn geometric(a: f64, b: f64, elements: usize, weight: Weight) -> Result<Self> {
        if !(a > 0.0 && a < b) {
            return Err(Error::InvalidMesh(format!(
                "geometric grading needs 0 < a < b, got ({a}, {b})"
            )));
        }
        if elements < 2 {
            return Err(Error::InvalidMesh(format!(
                "need at least 2 elements, got {elements}"
            )));
        }
        let log_ratio = (b / a).ln() / elements as f64;
        let nodes = (0..=elements)
            .map(|i| match i {
                0 => a,
                i if i == elements => b,
                i => a * (log_ratio * i as f64).exp(),
            })
            .collect();
        Self::new(nodes, weight)
    }

    /// Geometric grading with successive element lengths growing by about
    /// `ratio`; the element count is the smallest that reaches `b`.
    pub fn graded(a: f64, b: f64, ratio: f64, weight: Weight) -> Result<Self> {
        if !(ratio > 1.0) {
            return Err(Error::InvalidMesh(format!(
                "grading ratio must exceed 1, got {ratio}"
            )));
        }
        if !(a > 0.0 && a < b) {
            return Err(Error::InvalidMesh(format!(
                "graded mesh needs 0 < a < b, got ({a}, {b})"
            )));
        }
        let elements = ((b / a).ln() / ratio.ln()).ceil().max(2.0) as usize;
        Self::geometric(a, b, elements, weight)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weight(&self) -> Weight {
        self.weight
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn interior_count(&self) -> usize {
        self.nodes.len() - 2
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.nodes[e], self.nodes[e + 1])
    }

    pub fn element_length(&self, e: usize) -> f64 {
        self.nodes[e + 1] - self.nodes[e]
    }

    pub fn max_element_length(&self) -> f64 {
        (0..self.element_count())
            .map(|e| self.element_length(e))
            .fold(0.0, f64::max)
    }

    pub fn min_element_length(&self) -> f64 {
        (0..self.element_count())
            .map(|e| self.element_length(e))
            .fold(f64::INFINITY, f64::min)
    }

    /// Index of the element containing `x` (the left one at interior nodes).
    pub fn locate(&self, x: f64) -> Option<usize> {
        if !(x >= self.start() && x <= self.end()) {
            return None;
        }
        let idx = self.nodes.partition_point(|&node| node < x);
        Some(idx.saturating_sub(1).min(self.element_count() - 1))
    }

    /// Index of the node closest to `x`.
    pub fn nearest_node(&self, x: f64) -> usize {
        let idx = self.nodes.partition_point(|&node| node < x);
        if idx == 0 {
            0
        } else if idx == self.nodes.len() {
            idx - 1
        } else if (x - self.nodes[idx - 1]) <= (self.nodes[idx] - x) {
            idx - 1
        } else {
            idx
        }
    }

    /// The mesh restricted to nodes `first..=last`.
    pub fn submesh(&self, first: usize, last: usize) -> Result<Self> {
        if last >= self.nodes.len() || last < first + 2 {
            return Err(Error::InvalidMesh(format!(
                "submesh node range {first}..={last} is invalid for {} nodes",
                self.nodes.len()
            )));
        }
        Self::new(self.nodes[first..=last].to_vec(), self.weight)
    }

    /// Uniform refinement: every element split in two.
    pub fn refined(&self) -> Self {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(self.end());
        Self {
            nodes,
            weight: self.weight,
        }
    }

    /// Four-point Gauss quadrature on every element, weighted by the measure.
    pub fn quadrature(&self) -> impl Iterator<Item = QuadPoint> + '_ {
        (0..self.element_count()).flat_map(move |e| self.element_quadrature(e))
    }

    pub fn element_quadrature(&self, e: usize) -> impl Iterator<Item = QuadPoint> + '_ {
        let (lo, hi) = self.element(e);
        GAUSS4.mapped(lo, hi).map(move |(x, w)| QuadPoint {
            element: e,
            x,
            weight: w * self.weight.density(x),
        })
    }

    /// `int f dmu` over the whole mesh.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        let mut total = 0.0;
        for q in self.quadrature() {
            let value = f(q.x);
            if !value.is_finite() {
                return Err(Error::NonFinite { x: q.x, value });
            }
            total += q.weight * value;
        }
        Ok(total)
    }

    /// `int_lo^hi f dmu`, splitting at mesh nodes and using an eight-point
    /// rule on each piece; exact for P1 integrands against any radial
    /// weight up to dimension 8.
    /// Endpoints outside the mesh by no more than rounding (relative to the
    /// mesh length) are clamped.
    pub fn integrate_over(&self, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
        let slack = 1e-12 * (self.end() - self.start());
        if !(lo <= hi) || lo < self.start() - slack || hi > self.end() + slack {
            return Err(Error::InvalidArgument(format!(
                "interval ({lo}, {hi}) is not inside the mesh ({}, {})",
                self.start(),
                self.end()
            )));
        }
        let (lo, hi) = (lo.max(self.start()), hi.min(self.end()));
        let mut total = 0.0;
        let mut left = lo;
        let mut idx = self.nodes.partition_point(|&node| node <= lo);
        while left < hi {
            let right = if idx < self.nodes.len() {
                self.nodes[idx].min(hi)
            } else {
                hi
            };
            for (x, w) in GAUSS8.mapped(left, right) {
                let value = f(x);
                if !value.is_finite() {
                    return Err(Error::NonFinite { x, value });
                }
                total += w * self.weight.density(x) * value;
            }
            left = right;
            idx += 1;
        }
        Ok(total)
    }

    /// Measure of `(lo, hi)`.
    pub fn measure(&self, lo: f64, hi: f64) -> f64 {
        match self.weight {
            Weight::Flat => hi - lo,
            Weight::Radial { n } => {
                Weight::sphere_area(n) * (hi.powi(n as i32) - lo.powi(n as i32)) / n as f64
            }
        }
    }
}

/// A continuous piecewise-linear function given by its nodal values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.node_count() {
            return Err(Error::InvalidField(format!(
                "{} values for {} nodes",
                values.len(),
                mesh.node_count()
            )));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidField(format!("value {v} at node {i}")));
        }
        Ok(Self { mesh, values })
    }

    /// Nodal interpolant of `f`.
    pub fn from_fn(mesh: Arc<Mesh>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = mesh.nodes().iter().map(|&x| f(x)).collect();
        Self::new(mesh, values)
    }

    pub fn constant(mesh: Arc<Mesh>, value: f64) -> Result<Self> {
        let values = vec![value; mesh.node_count()];
        Self::new(mesh, values)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Slope on element `e`.
    pub fn slope(&self, e: usize) -> f64 {
        (self.values[e + 1] - self.values[e]) / self.mesh.element_length(e)
    }

    /// Value at `x` inside element `e`.
    pub fn eval_in(&self, e: usize, x: f64) -> f64 {
        let (lo, hi) = self.mesh.element(e);
        let t = (x - lo) / (hi - lo);
        self.values[e] * (1.0 - t) + self.values[e + 1] * t
    }

    /// Value at `x`; `NaN` outside the mesh.
    pub fn eval(&self, x: f64) -> f64 {
        match self.mesh.locate(x) {
            Some(e) => self.eval_in(e, x),
            None => f64::NAN,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = self.values.iter().map(|&v| f(v)).collect();
        Self::new(self.mesh.clone(), values)
    }

    pub fn integrate(&self) -> f64 {
        self.mesh
            .quadrature()
            .map(|q| q.weight * self.eval_in(q.element, q.x))
            .sum()
    }

    /// Dirichlet energy `int_lo^hi |u'|^2 dmu`.
    pub fn dirichlet_energy(&self, lo: f64, hi: f64) -> Result<f64> {
        self.mesh.integrate_over(lo, hi, |x| {
            let e = self.mesh.locate(x).expect("point inside mesh");
            self.slope(e).powi(2)
        })
    }

    /// Restriction to a mesh whose nodes are the contiguous run of this
    /// field's nodes starting at `offset`.
    pub fn restrict(&self, mesh: Arc<Mesh>, offset: usize) -> Result<Self> {
        let end = offset + mesh.node_count();
        if end > self.values.len() || mesh.nodes() != &self.mesh.nodes()[offset..end] {
            return Err(Error::InvalidField(
                "target mesh is not a contiguous sub-mesh at the given offset".into(),
            ));
        }
        Self::new(mesh, self.values[offset..end].to_vec())
    }
}

/// A ball `B(center, radius)`, i.e. the interval `(center - r, center + r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: f64,
    pub radius: f64,
}

impl Ball {
    pub fn enlarged(&self, factor: f64) -> Ball {
        Ball {
            center: self.center,
            radius: factor * self.radius,
        }
    }

    pub fn lo(&self) -> f64 {
        self.center - self.radius
    }

    pub fn hi(&self) -> f64 {
        self.center + self.radius
    }

    pub fn inside(&self, lo: f64, hi: f64) -> bool {
        let slack = 1e-12 * (hi - lo);
        self.lo() >= lo - slack && self.hi() <= hi + slack
    }
}

/// Admissible balls for one of the ball-based constants on a subdomain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallScan {
    pub lo: f64,
    pub hi: f64,
    pub enlargement: u32,
    pub balls: Vec<Ball>,
}

impl BallScan {
    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    /// Union of two scans over the same subdomain and enlargement.
    pub fn merged(&self, other: &BallScan) -> Result<BallScan> {
        if self.lo != other.lo || self.hi != other.hi || self.enlargement != other.enlargement {
            return Err(Error::InvalidArgument(
                "can only merge scans of the same subdomain and enlargement".into(),
            ));
        }
        let mut balls = self.balls.clone();
        balls.extend(other.balls.iter().filter(|b| !self.balls.contains(b)));
        Ok(BallScan {
            balls,
            ..self.clone()
        })
    }
}

/// Upper limit on centres per radius.
pub const MAX_CENTERS: usize = 64;

/// Deterministic lattice of balls `B(x, r)` with `B(x, k r)` inside `(lo, hi)`:
/// dyadic radii from the largest admissible one down to one element length,
/// and up to `centers` (capped at 64) evenly spaced centres per radius.
pub fn enumerate_balls(
    mesh: &Mesh,
    (lo, hi): (f64, f64),
    enlargement: u32,
    centers: usize,
) -> Result<BallScan> {
    if !(enlargement == 2 || enlargement == 4) {
        return Err(Error::InvalidArgument(format!(
            "enlargement must be 2 or 4, got {enlargement}"
        )));
    }
    if !(lo < hi) || lo < mesh.start() || hi > mesh.end() {
        return Err(Error::InvalidArgument(format!(
            "subdomain ({lo}, {hi}) is not inside the mesh ({}, {})",
            mesh.start(),
            mesh.end()
        )));
    }
    let touched: Vec<usize> = (0..mesh.element_count())
        .filter(|&e| {
            let (a, b) = mesh.element(e);
            b > lo && a < hi
        })
        .collect();
    if touched.len() < 2 {
        return Err(Error::EmptyScan { lo, hi });
    }
    let h_ref = touched
        .iter()
        .map(|&e| mesh.element_length(e))
        .fold(f64::INFINITY, f64::min);
    let k = enlargement as f64;
    let r_max = (hi - lo) / (2.0 * k);
    let per_radius = centers.clamp(1, MAX_CENTERS);

    let mut balls = Vec::new();
    let mut r = r_max;
    while r >= h_ref * (1.0 - 1e-12) {
        let c_lo = lo + k * r;
        let c_hi = hi - k * r;
        let count = if c_hi - c_lo <= 1e-12 * (hi - lo) {
            1
        } else {
            per_radius
        };
        for i in 0..count {
            let center = if count == 1 {
                0.5 * (lo + hi)
            } else {
                c_lo + (c_hi - c_lo) * i as f64 / (count - 1) as f64
            };
            let ball = Ball { center, radius: r };
            if ball.enlarged(k).inside(lo, hi) {
                balls.push(ball);
            }
        }
        r *= 0.5;
    }
    if balls.is_empty() {
        return Err(Error::EmptyScan { lo, hi });
    }
    Ok(BallScan {
        lo,
        hi,
        enlargement,
        balls,
    })
}

/// One level of an exhaustion: the subdomain and its mollification radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionLevel {
    pub lo: f64,
    pub hi: f64,
    pub epsilon: f64,
}

/// Nested subdomains exhausting `(outer.0, outer.1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionSpec {
    pub outer: (f64, f64),
    pub levels: Vec<ExhaustionLevel>,
}

/// Spacing of the exhaustion margins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ExhaustionScale {
    /// Margins `L 2^{-(j+1)}` in the coordinate itself.
    #[default]
    Linear,
    /// Margins `L 2^{-(j+1)}` in `log r`; for annuli reaching toward the origin.
    Logarithmic,
}

/// Exhaustion with margins halving at every level and mollification radii
/// `eps_j = min(eps_{j-1}/2, d(O_j, dO_{j+1})/2, 2^{-j})`, `eps_0 = 1`.
pub fn build_exhaustion(outer: (f64, f64), levels: usize) -> Result<ExhaustionSpec> {
    build_exhaustion_scaled(outer, levels, ExhaustionScale::Linear)
}

pub fn build_exhaustion_scaled(
    outer: (f64, f64),
    levels: usize,
    scale: ExhaustionScale,
) -> Result<ExhaustionSpec> {
    let (a, b) = outer;
    if levels < 1 {
        return Err(Error::InvalidArgument("need at least one level".into()));
    }
    if !(a < b) {
        return Err(Error::InvalidArgument(format!(
            "outer domain ({a}, {b}) is empty"
        )));
    }
    if scale == ExhaustionScale::Logarithmic && a <= 0.0 {
        return Err(Error::InvalidArgument(
            "logarithmic exhaustion needs a positive inner endpoint".into(),
        ));
    }
    let (to, from): (fn(f64) -> f64, fn(f64) -> f64) = match scale {
        ExhaustionScale::Linear => (|x| x, |x| x),
        ExhaustionScale::Logarithmic => (f64::ln, f64::exp),
    };
    let (ta, tb) = (to(a), to(b));
    let length = tb - ta;
    let bounds = |j: usize| -> (f64, f64) {
        let margin = length * 0.5f64.powi(j as i32 + 1);
        (from(ta + margin), from(tb - margin))
    };

    let mut eps_prev = 1.0f64;
    let mut out = Vec::with_capacity(levels);
    for j in 1..=levels {
        let (lo, hi) = bounds(j);
        let (next_lo, next_hi) = if j == levels { (a, b) } else { bounds(j + 1) };
        let gap = (lo - next_lo).min(next_hi - hi);
        let epsilon = (eps_prev / 2.0).min(gap / 2.0).min(0.5f64.powi(j as i32));
        out.push(ExhaustionLevel { lo, hi, epsilon });
        eps_prev = epsilon;
    }
    Ok(ExhaustionSpec {
        outer,
        levels: out,
    })
}

impl ExhaustionSpec {
    /// Checks nesting and the mollification-radius rule.
    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.outer;
        let mut eps_prev = 1.0f64;
        for (idx, level) in self.levels.iter().enumerate() {
            let j = idx + 1;
            let (next_lo, next_hi) = match self.levels.get(idx + 1) {
                Some(next) => (next.lo, next.hi),
                None => (a, b),
            };
            if !(next_lo < level.lo && level.hi < next_hi && level.lo < level.hi) {
                return Err(Error::InvalidArgument(format!("level {j} is not nested")));
            }
            let gap = (level.lo - next_lo).min(next_hi - level.hi);
            let limit = (eps_prev / 2.0).min(gap / 2.0).min(0.5f64.powi(j as i32));
            if !(level.epsilon > 0.0 && level.epsilon <= limit * (1.0 + 1e-12)) {
                return Err(Error::InvalidArgument(format!(
                    "level {j}: epsilon {} exceeds {limit}",
                    level.epsilon
                )));
            }
            eps_prev = level.epsilon;
        }
        Ok(())
    }
}
