//! Concrete Lie groupoid families, their algebroid data, discretization
//! grids and left Haar systems.
//!
//! Three families are shipped: pair groupoids `Q x Q` over a line window or a
//! circle, Lie groups (U(1) and the affine group `ax+b`), and transformation
//! groupoids `G x Q` for a translation or rotation action.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Chart tolerance for deciding composability.
pub const CHART_TOL: f64 = 1e-9;

/// Reduce an angle to `[0, 2π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Reduce an angle to `(-π, π]`.
pub fn wrap_symmetric(x: f64) -> f64 {
    let r = wrap_angle(x);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

fn circle_distance(a: f64, b: f64) -> f64 {
    wrap_symmetric(a - b).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseKind {
    /// The one-point base of a Lie group.
    Point,
    LineWindow,
    Circle,
}

/// Riemannian metric `g(q) = 1 + amplitude * cos q` on the circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineMetric {
    pub amplitude: f64,
}

impl CosineMetric {
    pub fn value(&self, q: f64) -> f64 {
        1.0 + self.amplitude * q.cos()
    }

    pub fn derivative(&self, q: f64) -> f64 {
        -self.amplitude * q.sin()
    }

    /// Levi-Civita Christoffel symbol `Γ = g' / 2g` of the 1-D metric.
    pub fn christoffel(&self, q: f64) -> f64 {
        self.derivative(q) / (2.0 * self.value(q))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartedBase {
    pub kind: BaseKind,
    pub samples: Vec<f64>,
    pub weights: Vec<f64>,
    pub metric: Option<CosineMetric>,
    /// Half-width `L` of a line window; `π` for circles, 0 for a point.
    pub half_width: f64,
}

impl ChartedBase {
    pub fn point() -> Self {
        Self {
            kind: BaseKind::Point,
            samples: vec![0.0],
            weights: vec![1.0],
            metric: None,
            half_width: 0.0,
        }
    }

    /// Uniform samples on `[-L, L]` (endpoints included) with trapezoid weights.
    pub fn line_window(points: usize, half_width: f64) -> Result<Self> {
        if points < 3 {
            return Err(Error::InvalidResolution(format!(
                "line window needs at least 3 points, got {points}"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidResolution(format!(
                "window half-width must be positive, got {half_width}"
            )));
        }
        let h = 2.0 * half_width / (points - 1) as f64;
        let mid = (points - 1) as f64 / 2.0;
        let samples = (0..points).map(|k| (k as f64 - mid) * h).collect();
        let mut weights = vec![h; points];
        weights[0] = 0.5 * h;
        weights[points - 1] = 0.5 * h;
        Ok(Self {
            kind: BaseKind::LineWindow,
            samples,
            weights,
            metric: None,
            half_width,
        })
    }

    /// `points` uniform samples covering `[0, 2π)` with Riemann weights.
    pub fn circle(points: usize) -> Result<Self> {
        if points < 3 {
            return Err(Error::InvalidResolution(format!(
                "circle needs at least 3 points, got {points}"
            )));
        }
        let h = TAU / points as f64;
        Ok(Self {
            kind: BaseKind::Circle,
            samples: (0..points).map(|k| k as f64 * h).collect(),
            weights: vec![h; points],
            metric: None,
            half_width: PI,
        })
    }

    pub fn with_metric(mut self, metric: CosineMetric) -> Self {
        self.metric = Some(metric);
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Uniform spacing of the grid (0 for a point).
    pub fn spacing(&self) -> f64 {
        match self.kind {
            BaseKind::Point => 0.0,
            _ => self.samples[1] - self.samples[0],
        }
    }

    pub fn normalize(&self, q: f64) -> f64 {
        match self.kind {
            BaseKind::Circle => wrap_angle(q),
            _ => q,
        }
    }

    pub fn same_point(&self, a: f64, b: f64) -> bool {
        match self.kind {
            BaseKind::Circle => circle_distance(a, b) < CHART_TOL,
            _ => (a - b).abs() < CHART_TOL,
        }
    }

    /// Index of the sample closest to `q`.
    pub fn nearest_index(&self, q: f64) -> usize {
        match self.kind {
            BaseKind::Point => 0,
            BaseKind::Circle => {
                let h = self.spacing();
                ((wrap_angle(q) / h).round() as usize) % self.len()
            }
            BaseKind::LineWindow => {
                let h = self.spacing();
                let k = ((q - self.samples[0]) / h).round();
                k.clamp(0.0, (self.len() - 1) as f64) as usize
            }
        }
    }

    /// Integer lattice offset of `q` relative to sample 0, if `q` is a sample.
    pub fn lattice_index(&self, q: f64) -> Option<usize> {
        match self.kind {
            BaseKind::Point => Some(0),
            BaseKind::Circle => {
                let h = self.spacing();
                let k = wrap_angle(q) / h;
                let r = k.round();
                ((k - r).abs() < 1e-6).then(|| (r as usize) % self.len())
            }
            BaseKind::LineWindow => {
                let h = self.spacing();
                let k = (q - self.samples[0]) / h;
                let r = k.round();
                ((k - r).abs() < 1e-6 && r >= 0.0 && (r as usize) < self.len())
                    .then_some(r as usize)
            }
        }
    }
}

/// Grid parameters handed to [`make_example`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolution {
    pub points: usize,
    /// Window half-width `L` for line bases; frequency window for the affine
    /// group; ignored for circles.
    pub window: f64,
}

impl Resolution {
    pub fn new(points: usize, window: f64) -> Self {
        Self { points, window }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExampleName {
    PairFlatLine,
    PairCircleMetric,
    GroupU1,
    GroupAffine,
    TransfLineTranslation,
    TransfCircleRotation,
    /// Auxiliary: translation group acting trivially on a line.
    TransfLineTrivial,
}

impl ExampleName {
    pub const SHIPPED: [ExampleName; 6] = [
        ExampleName::PairFlatLine,
        ExampleName::PairCircleMetric,
        ExampleName::GroupU1,
        ExampleName::GroupAffine,
        ExampleName::TransfLineTranslation,
        ExampleName::TransfCircleRotation,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExampleName::PairFlatLine => "pair-flat-line",
            ExampleName::PairCircleMetric => "pair-circle-metric",
            ExampleName::GroupU1 => "group-u1",
            ExampleName::GroupAffine => "group-affine",
            ExampleName::TransfLineTranslation => "transf-line-translation",
            ExampleName::TransfCircleRotation => "transf-circle-rotation",
            ExampleName::TransfLineTrivial => "transf-line-trivial",
        }
    }

    pub fn family(&self) -> Family {
        match self {
            ExampleName::PairFlatLine | ExampleName::PairCircleMetric => Family::Pair,
            ExampleName::GroupU1 | ExampleName::GroupAffine => Family::LieGroup,
            _ => Family::Transformation,
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            ExampleName::PairFlatLine => "pair groupoid R x R, flat connection (Weyl's prescription)",
            ExampleName::PairCircleMetric => {
                "pair groupoid S1 x S1, Levi-Civita connection of g = 1 + 0.3 cos q"
            }
            ExampleName::GroupU1 => "Lie group U(1) with cutoff (abelian, zero bracket)",
            ExampleName::GroupAffine => "affine group ax+b, [e1,e2] = e2 (Rieffel's prescription)",
            ExampleName::TransfLineTranslation => "R acting on R by translation",
            ExampleName::TransfCircleRotation => "U(1) acting on S1 by rotation",
            ExampleName::TransfLineTrivial => "R acting trivially on R (auxiliary)",
        }
    }
}

impl fmt::Display for ExampleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExampleName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExampleName::SHIPPED
            .iter()
            .chain(std::iter::once(&ExampleName::TransfLineTrivial))
            .find(|e| e.as_str() == s)
            .copied()
            .ok_or_else(|| Error::UnknownExample(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Pair,
    LieGroup,
    Transformation,
}

/// Closed-form Lie groups used by the examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LieGroupKind {
    /// The additive group R.
    Line,
    /// U(1), charted by an angle in `[0, 2π)`.
    Circle,
    /// `{(a, b) : a > 0}` with `(a,b)(a',b') = (aa', ab' + b)`.
    Affine,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroupElement {
    Line(f64),
    Circle(f64),
    Affine { a: f64, b: f64 },
}

impl LieGroupKind {
    pub fn dim(&self) -> usize {
        match self {
            LieGroupKind::Affine => 2,
            _ => 1,
        }
    }

    /// Structure constants `c^k_{ij}` stored at `k*n*n + i*n + j`.
    pub fn structure_constants(&self) -> Vec<f64> {
        match self {
            LieGroupKind::Affine => {
                let mut c = vec![0.0; 8];
                // [e1, e2] = e2
                c[4 + 1] = 1.0;
                c[4 + 2] = -1.0;
                c
            }
            _ => vec![0.0],
        }
    }

    pub fn identity(&self) -> GroupElement {
        match self {
            LieGroupKind::Line => GroupElement::Line(0.0),
            LieGroupKind::Circle => GroupElement::Circle(0.0),
            LieGroupKind::Affine => GroupElement::Affine { a: 1.0, b: 0.0 },
        }
    }

    pub fn mul(&self, x: &GroupElement, y: &GroupElement) -> GroupElement {
        match (x, y) {
            (GroupElement::Line(p), GroupElement::Line(q)) => GroupElement::Line(p + q),
            (GroupElement::Circle(p), GroupElement::Circle(q)) => {
                GroupElement::Circle(wrap_angle(p + q))
            }
            (GroupElement::Affine { a, b }, GroupElement::Affine { a: a2, b: b2 }) => {
                GroupElement::Affine {
                    a: a * a2,
                    b: a * b2 + b,
                }
            }
            _ => panic!("group elements of different kinds"),
        }
    }

    pub fn inv(&self, x: &GroupElement) -> GroupElement {
        match x {
            GroupElement::Line(p) => GroupElement::Line(-p),
            GroupElement::Circle(p) => GroupElement::Circle(wrap_angle(-p)),
            GroupElement::Affine { a, b } => GroupElement::Affine {
                a: 1.0 / a,
                b: -b / a,
            },
        }
    }

    /// Group exponential in closed form.
    pub fn exp(&self, x: &[f64]) -> GroupElement {
        match self {
            LieGroupKind::Line => GroupElement::Line(x[0]),
            LieGroupKind::Circle => GroupElement::Circle(wrap_angle(x[0])),
            LieGroupKind::Affine => GroupElement::Affine {
                a: x[0].exp(),
                b: x[1] * expm1_ratio(x[0]),
            },
        }
    }

    /// Inverse of [`exp`](Self::exp); for U(1) the branch in `(-π, π]`.
    pub fn log(&self, g: &GroupElement) -> Vec<f64> {
        match g {
            GroupElement::Line(p) => vec![*p],
            GroupElement::Circle(p) => vec![wrap_symmetric(*p)],
            GroupElement::Affine { a, b } => {
                let s = a.ln();
                vec![s, b / expm1_ratio(s)]
            }
        }
    }

    /// Density of the left Haar measure in chart coordinates.
    pub fn left_haar_density(&self, g: &GroupElement) -> f64 {
        match g {
            GroupElement::Affine { a, .. } => 1.0 / (a * a),
            _ => 1.0,
        }
    }

    pub fn distance(&self, x: &GroupElement, y: &GroupElement) -> f64 {
        match (x, y) {
            (GroupElement::Line(p), GroupElement::Line(q)) => (p - q).abs(),
            (GroupElement::Circle(p), GroupElement::Circle(q)) => circle_distance(*p, *q),
            (GroupElement::Affine { a, b }, GroupElement::Affine { a: a2, b: b2 }) => {
                (a - a2).abs().max((b - b2).abs())
            }
            _ => f64::INFINITY,
        }
    }
}

/// `(e^s - 1) / s`, continuous at 0.
pub fn expm1_ratio(s: f64) -> f64 {
    if s.abs() < 1e-8 {
        1.0 + 0.5 * s + s * s / 6.0
    } else {
        s.exp_m1() / s
    }
}

/// Smooth left actions of a one-dimensional group on a one-dimensional base.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionKind {
    /// `x · q = q + x` on a line.
    Translation,
    /// `x · q = q + x mod 2π` on a circle.
    Rotation,
    /// `x · q = q`.
    Trivial,
}

impl ActionKind {
    pub fn act(&self, g: &GroupElement, q: f64) -> f64 {
        match (self, g) {
            (ActionKind::Translation, GroupElement::Line(x)) => q + x,
            (ActionKind::Rotation, GroupElement::Circle(x)) => wrap_angle(q + x),
            (ActionKind::Trivial, _) => q,
            _ => panic!("action applied to the wrong group"),
        }
    }

    /// Fundamental vector field `ξ_X(q) = d/dt Exp(tX)·q` for `X = 1`.
    pub fn fundamental_field(&self, _q: f64) -> f64 {
        match self {
            ActionKind::Trivial => 0.0,
            _ => 1.0,
        }
    }
}

/// Affine-group discretization: a log-frequency grid covering
/// `|θ₂| ∈ [theta_lo, theta_hi]` at the chosen ħ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineGrid {
    pub points: usize,
    pub theta_lo: f64,
    pub theta_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupoidModel {
    pub name: ExampleName,
    pub family: Family,
    pub base: ChartedBase,
    pub group: Option<LieGroupKind>,
    /// Samples of the group for U(1) and transformation families.
    pub group_grid: Option<ChartedBase>,
    pub action: Option<ActionKind>,
    pub fiber_dim: usize,
    pub structure_constants: Vec<f64>,
    pub affine_grid: Option<AffineGrid>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroupoidPoint {
    /// `(x, y)` with target `x` and source `y`.
    Pair { x: f64, y: f64 },
    Group(GroupElement),
    /// `(g, q)` with target `q` and source `g⁻¹·q`.
    Action { g: GroupElement, q: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgebroidVector {
    pub base: f64,
    pub fiber: Vec<f64>,
}

impl AlgebroidVector {
    pub fn new(base: f64, fiber: Vec<f64>) -> Self {
        Self { base, fiber }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            base: self.base,
            fiber: self.fiber.iter().map(|x| c * x).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.fiber.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualVector {
    pub base: f64,
    pub fiber: Vec<f64>,
}

/// Instantiate one of the shipped example families.
pub fn make_example(name: &str, resolution: Resolution) -> Result<GroupoidModel> {
    let name: ExampleName = name.parse()?;
    GroupoidModel::new(name, resolution)
}

impl GroupoidModel {
    pub fn new(name: ExampleName, res: Resolution) -> Result<Self> {
        if res.points == 0 {
            return Err(Error::InvalidResolution("points must be positive".into()));
        }
        if !(res.window > 0.0) {
            return Err(Error::InvalidResolution(format!(
                "window must be positive, got {}",
                res.window
            )));
        }
        let model = match name {
            ExampleName::PairFlatLine => Self {
                name,
                family: Family::Pair,
                base: ChartedBase::line_window(res.points, res.window)?,
                group: None,
                group_grid: None,
                action: None,
                fiber_dim: 1,
                structure_constants: vec![0.0],
                affine_grid: None,
            },
            ExampleName::PairCircleMetric => Self {
                name,
                family: Family::Pair,
                base: ChartedBase::circle(res.points)?
                    .with_metric(CosineMetric { amplitude: 0.3 }),
                group: None,
                group_grid: None,
                action: None,
                fiber_dim: 1,
                structure_constants: vec![0.0],
                affine_grid: None,
            },
            ExampleName::GroupU1 => Self {
                name,
                family: Family::LieGroup,
                base: ChartedBase::point(),
                group: Some(LieGroupKind::Circle),
                group_grid: Some(ChartedBase::circle(res.points)?),
                action: None,
                fiber_dim: 1,
                structure_constants: LieGroupKind::Circle.structure_constants(),
                affine_grid: None,
            },
            ExampleName::GroupAffine => {
                if res.points < 8 {
                    return Err(Error::InvalidResolution(
                        "affine grid needs at least 8 points".into(),
                    ));
                }
                Self {
                    name,
                    family: Family::LieGroup,
                    base: ChartedBase::point(),
                    group: Some(LieGroupKind::Affine),
                    group_grid: None,
                    action: None,
                    fiber_dim: 2,
                    structure_constants: LieGroupKind::Affine.structure_constants(),
                    affine_grid: Some(AffineGrid {
                        points: res.points,
                        theta_lo: 1e-6,
                        theta_hi: res.window,
                    }),
                }
            }
            ExampleName::TransfLineTranslation | ExampleName::TransfLineTrivial => {
                // odd point count keeps 0 on the grid so q - x stays on the lattice
                let points = res.points | 1;
                let base = ChartedBase::line_window(points, res.window)?;
                Self {
                    name,
                    family: Family::Transformation,
                    group_grid: Some(base.clone()),
                    base,
                    group: Some(LieGroupKind::Line),
                    action: Some(if name == ExampleName::TransfLineTrivial {
                        ActionKind::Trivial
                    } else {
                        ActionKind::Translation
                    }),
                    fiber_dim: 1,
                    structure_constants: vec![0.0],
                    affine_grid: None,
                }
            }
            ExampleName::TransfCircleRotation => {
                let base = ChartedBase::circle(res.points)?;
                Self {
                    name,
                    family: Family::Transformation,
                    group_grid: Some(base.clone()),
                    base,
                    group: Some(LieGroupKind::Circle),
                    action: Some(ActionKind::Rotation),
                    fiber_dim: 1,
                    structure_constants: LieGroupKind::Circle.structure_constants(),
                    affine_grid: None,
                }
            }
        };
        Ok(model)
    }

    /// Structure constant `c^k_{ij}`.
    pub fn structure_constant(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.fiber_dim;
        self.structure_constants[k * n * n + i * n + j]
    }

    /// Largest violation of antisymmetry or the Jacobi identity.
    pub fn jacobi_residual(&self) -> f64 {
        let n = self.fiber_dim;
        let c = |k, i, j| self.structure_constant(k, i, j);
        let mut worst = 0.0f64;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((c(k, i, j) + c(k, j, i)).abs());
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for m in 0..n {
                        let mut s = 0.0;
                        for l in 0..n {
                            s += c(l, i, j) * c(m, l, k)
                                + c(l, j, k) * c(m, l, i)
                                + c(l, k, i) * c(m, l, j);
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    fn group_kind(&self) -> LieGroupKind {
        self.group.expect("model has no group data")
    }

    pub fn source(&self, p: &GroupoidPoint) -> f64 {
        match p {
            GroupoidPoint::Pair { y, .. } => *y,
            GroupoidPoint::Group(_) => 0.0,
            GroupoidPoint::Action { g, q } => {
                let act = self.action.expect("transformation model");
                act.act(&self.group_kind().inv(g), *q)
            }
        }
    }

    pub fn target(&self, p: &GroupoidPoint) -> f64 {
        match p {
            GroupoidPoint::Pair { x, .. } => *x,
            GroupoidPoint::Group(_) => 0.0,
            GroupoidPoint::Action { q, .. } => *q,
        }
    }

    pub fn unit(&self, q: f64) -> GroupoidPoint {
        match self.family {
            Family::Pair => {
                let q = self.base.normalize(q);
                GroupoidPoint::Pair { x: q, y: q }
            }
            Family::LieGroup => GroupoidPoint::Group(self.group_kind().identity()),
            Family::Transformation => GroupoidPoint::Action {
                g: self.group_kind().identity(),
                q: self.base.normalize(q),
            },
        }
    }

    pub fn invert(&self, p: &GroupoidPoint) -> GroupoidPoint {
        match p {
            GroupoidPoint::Pair { x, y } => GroupoidPoint::Pair { x: *y, y: *x },
            GroupoidPoint::Group(g) => GroupoidPoint::Group(self.group_kind().inv(g)),
            GroupoidPoint::Action { g, q } => {
                let gi = self.group_kind().inv(g);
                let act = self.action.expect("transformation model");
                GroupoidPoint::Action {
                    g: gi,
                    q: act.act(&gi, *q),
                }
            }
        }
    }

    pub fn composable(&self, a: &GroupoidPoint, b: &GroupoidPoint) -> bool {
        self.base.same_point(self.source(a), self.target(b))
    }

    /// `a · b`, or `None` when `τ_s(a) ≠ τ_t(b)`.
    pub fn compose(&self, a: &GroupoidPoint, b: &GroupoidPoint) -> Option<GroupoidPoint> {
        if !self.composable(a, b) {
            return None;
        }
        Some(match (a, b) {
            (GroupoidPoint::Pair { x, .. }, GroupoidPoint::Pair { y, .. }) => {
                GroupoidPoint::Pair { x: *x, y: *y }
            }
            (GroupoidPoint::Group(g), GroupoidPoint::Group(h)) => {
                GroupoidPoint::Group(self.group_kind().mul(g, h))
            }
            (GroupoidPoint::Action { g, q }, GroupoidPoint::Action { g: h, .. }) => {
                GroupoidPoint::Action {
                    g: self.group_kind().mul(g, h),
                    q: *q,
                }
            }
            _ => return None,
        })
    }

    /// Distance in chart coordinates, circles measured along the circle.
    pub fn point_distance(&self, a: &GroupoidPoint, b: &GroupoidPoint) -> f64 {
        let d = |u: f64, v: f64| match self.base.kind {
            BaseKind::Circle => circle_distance(u, v),
            _ => (u - v).abs(),
        };
        match (a, b) {
            (GroupoidPoint::Pair { x, y }, GroupoidPoint::Pair { x: x2, y: y2 }) => {
                d(*x, *x2).max(d(*y, *y2))
            }
            (GroupoidPoint::Group(g), GroupoidPoint::Group(h)) => {
                self.group_kind().distance(g, h)
            }
            (GroupoidPoint::Action { g, q }, GroupoidPoint::Action { g: h, q: q2 }) => {
                self.group_kind().distance(g, h).max(d(*q, *q2))
            }
            _ => f64::INFINITY,
        }
    }

    /// Residual of `(xy)·q = x·(y·q)` over all pairs of group samples.
    pub fn action_residual(&self) -> f64 {
        let (Some(act), Some(grid), Some(kind)) = (self.action, &self.group_grid, self.group)
        else {
            return 0.0;
        };
        let elem = |x: f64| match kind {
            LieGroupKind::Circle => GroupElement::Circle(x),
            _ => GroupElement::Line(x),
        };
        let mut worst = 0.0f64;
        let stride = (grid.len() / 24).max(1);
        for &x in grid.samples.iter().step_by(stride) {
            for &y in grid.samples.iter().step_by(stride) {
                for &q in self.base.samples.iter().step_by(stride) {
                    let lhs = act.act(&kind.mul(&elem(x), &elem(y)), q);
                    let rhs = act.act(&elem(x), act.act(&elem(y), q));
                    let r = match self.base.kind {
                        BaseKind::Circle => circle_distance(lhs, rhs),
                        _ => (lhs - rhs).abs(),
                    };
                    worst = worst.max(r);
                }
            }
        }
        worst
    }
}

/// A positive density used to build a left Haar system.
#[derive(Clone)]
pub enum DensitySpec {
    /// Lebesgue measure in the chart (Haar measure with unit density at `e`).
    Lebesgue,
    /// Density `ρ(q)` on the base, for pair groupoids.
    Base(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    /// Constant rescaling of the canonical measure.
    Constant(f64),
}

impl fmt::Debug for DensitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensitySpec::Lebesgue => f.write_str("Lebesgue"),
            DensitySpec::Base(_) => f.write_str("Base(<fn>)"),
            DensitySpec::Constant(c) => write!(f, "Constant({c})"),
        }
    }
}

/// Left Haar system `{μ^t_q}` together with the normalization of the
/// Lebesgue measures `μ^L_q` on the algebroid fibers.
#[derive(Clone, Debug)]
pub struct HaarSystem {
    family: Family,
    group: Option<LieGroupKind>,
    density: DensitySpec,
}

/// Extend a positive density on the algebroid to a left-invariant Haar system.
pub fn build_haar_system(model: &GroupoidModel, density: DensitySpec) -> Result<HaarSystem> {
    match &density {
        DensitySpec::Lebesgue => {}
        DensitySpec::Constant(c) => {
            if !(*c > 0.0) {
                return Err(Error::NonPositiveDensity { value: *c, at: 0.0 });
            }
        }
        DensitySpec::Base(rho) => {
            if model.family != Family::Pair {
                return Err(Error::FamilyMismatch(
                    "base densities define Haar systems on pair groupoids only".into(),
                ));
            }
            for &q in &model.base.samples {
                let v = rho(q);
                if !(v > 0.0) {
                    return Err(Error::NonPositiveDensity { value: v, at: q });
                }
            }
        }
    }
    Ok(HaarSystem {
        family: model.family,
        group: model.group,
        density,
    })
}

impl HaarSystem {
    fn base_density(&self, q: f64) -> f64 {
        match &self.density {
            DensitySpec::Lebesgue => 1.0,
            DensitySpec::Constant(c) => *c,
            DensitySpec::Base(rho) => rho(q),
        }
    }

    /// Density of `μ^t_{τ_t(γ)}` at `γ`, w.r.t. the chart coordinates of the
    /// t-fiber (`y` for pairs, the group chart otherwise).
    pub fn fiber_density(&self, p: &GroupoidPoint) -> f64 {
        match p {
            GroupoidPoint::Pair { y, .. } => self.base_density(*y),
            GroupoidPoint::Group(g) | GroupoidPoint::Action { g, .. } => {
                self.base_density(0.0) * self.group.expect("group").left_haar_density(g)
            }
        }
    }

    /// Scale `λ_q` of `μ^L_q = λ_q dX`, fixed by `J_q(0) = 1`.
    pub fn lebesgue_normalization(&self, q: f64) -> f64 {
        match self.family {
            Family::Pair => self.base_density(q),
            _ => self.base_density(0.0),
        }
    }

    pub fn density_at_base(&self, q: f64) -> f64 {
        self.base_density(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> GroupoidModel {
        make_example("pair-flat-line", Resolution::new(256, 8.0)).unwrap()
    }

    #[test]
    fn constructor_contracts() {
        let m = pair();
        assert_eq!(m.family, Family::Pair);
        assert_eq!(m.fiber_dim, 1);
        assert_eq!(m.base.len(), 256);
        assert!((m.base.samples[0] + 8.0).abs() < 1e-12);

        let u1 = make_example("group-u1", Resolution::new(128, 1.0)).unwrap();
        assert_eq!(u1.family, Family::LieGroup);
        assert!(u1.structure_constants.iter().all(|&c| c == 0.0));
        assert_eq!(u1.group_grid.as_ref().unwrap().len(), 128);
    }

    #[test]
    fn affine_structure_constants_satisfy_jacobi() {
        let m = make_example("group-affine", Resolution::new(64, 64.0)).unwrap();
        assert_eq!(m.structure_constant(0, 0, 1), 0.0);
        assert_eq!(m.structure_constant(1, 0, 1), 1.0);
        assert_eq!(m.structure_constant(1, 1, 0), -1.0);
        assert!(m.jacobi_residual() < 1e-12);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(matches!(
            make_example("heisenberg", Resolution::new(10, 1.0)),
            Err(Error::UnknownExample(_))
        ));
        assert!(matches!(
            make_example("pair-flat-line", Resolution::new(0, 1.0)),
            Err(Error::InvalidResolution(_))
        ));
        assert!(matches!(
            make_example("pair-flat-line", Resolution::new(10, -1.0)),
            Err(Error::InvalidResolution(_))
        ));
    }

    #[test]
    fn pair_composition_and_inverse() {
        let m = pair();
        let a = GroupoidPoint::Pair { x: 1.0, y: 2.0 };
        let b = GroupoidPoint::Pair { x: 2.0, y: 5.0 };
        assert_eq!(m.compose(&a, &b), Some(GroupoidPoint::Pair { x: 1.0, y: 5.0 }));
        assert_eq!(m.compose(&b, &a), None);
        let u = m.unit(m.target(&a));
        assert_eq!(m.compose(&u, &a), Some(a));
        assert_eq!(m.compose(&a, &m.invert(&a)), Some(m.unit(1.0)));
    }

    #[test]
    fn translation_inverse() {
        let m = make_example("transf-line-translation", Resolution::new(33, 8.0)).unwrap();
        let p = GroupoidPoint::Action {
            g: GroupElement::Line(2.0),
            q: 3.0,
        };
        assert_eq!(
            m.invert(&p),
            GroupoidPoint::Action {
                g: GroupElement::Line(-2.0),
                q: 1.0
            }
        );
        assert_eq!(m.source(&p), 1.0);
        assert!(m.action_residual() < 1e-10);
        let r = make_example("transf-circle-rotation", Resolution::new(32, 1.0)).unwrap();
        assert!(r.action_residual() < 1e-10);
    }

    #[test]
    fn circle_coordinates_wrap() {
        assert!((wrap_angle(-0.5) - (TAU - 0.5)).abs() < 1e-15);
        assert!((wrap_symmetric(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        let m = make_example("pair-circle-metric", Resolution::new(64, 1.0)).unwrap();
        let a = GroupoidPoint::Pair { x: 0.1, y: TAU - 1e-12 };
        let b = GroupoidPoint::Pair { x: 0.0, y: 1.0 };
        assert!(m.compose(&a, &b).is_some());
    }

    #[test]
    fn affine_group_law() {
        let g = LieGroupKind::Affine;
        let x = g.exp(&[0.3, -0.7]);
        let y = g.exp(&[-0.2, 1.1]);
        let e = g.mul(&x, &g.inv(&x));
        assert!(g.distance(&e, &g.identity()) < 1e-15);
        let l = g.log(&g.mul(&x, &y));
        let back = g.exp(&l);
        assert!(g.distance(&back, &g.mul(&x, &y)) < 1e-14);
    }

    #[test]
    fn haar_density_validation() {
        let m = pair();
        let bad = DensitySpec::Base(Arc::new(|q: f64| q));
        assert!(matches!(
            build_haar_system(&m, bad),
            Err(Error::NonPositiveDensity { .. })
        ));
        let h = build_haar_system(&m, DensitySpec::Lebesgue).unwrap();
        let p = GroupoidPoint::Pair { x: 0.3, y: -1.0 };
        assert_eq!(h.fiber_density(&p), 1.0);
        assert_eq!(h.lebesgue_normalization(0.0), 1.0);
    }
}
