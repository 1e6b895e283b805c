//! Connections, geodesic flow, the left and Weyl exponential maps, and the
//! Haar Jacobian `J_q`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::geometry::{
    expm1_ratio, wrap_angle, BaseKind, CosineMetric, Family, GroupElement, GroupoidModel, GroupoidPoint,
    HaarSystem, LieGroupKind, AlgebroidVector,
};

/// Margin kept between the cutoff support and the cut locus.
pub const INJECTIVITY_MARGIN: f64 = 0.05;

const GEODESIC_TOL: f64 = 1e-12;
const JACOBIAN_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConnectionKind {
    Flat,
    LeviCivita1d(CosineMetric),
    GroupTrivial,
    ActionTrivial,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionDescriptor {
    pub kind: ConnectionKind,
}

impl ConnectionDescriptor {
    pub fn for_model(model: &GroupoidModel) -> Self {
        let kind = match (model.family, model.base.metric) {
            (Family::Pair, Some(m)) => ConnectionKind::LeviCivita1d(m),
            (Family::Pair, None) => ConnectionKind::Flat,
            (Family::LieGroup, _) => ConnectionKind::GroupTrivial,
            (Family::Transformation, _) => ConnectionKind::ActionTrivial,
        };
        Self { kind }
    }

    pub fn christoffel(&self, q: f64) -> f64 {
        match self.kind {
            ConnectionKind::LeviCivita1d(m) => m.christoffel(q),
            _ => 0.0,
        }
    }
}

/// Radius (in fiber coordinates) inside which `Exp^W` is a diffeomorphism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InjectivityWindow {
    pub radius: f64,
}

impl InjectivityWindow {
    pub fn for_model(model: &GroupoidModel) -> Self {
        let radius = match (model.family, model.base.kind, model.group) {
            (Family::Pair, BaseKind::Circle, _) => match model.base.metric {
                // a geodesic arc of length |v|·√g(q) must stay below half the circumference
                Some(m) => {
                    let arc = ArcLength::new(m);
                    0.5 * arc.circumference() / (1.0 + m.amplitude.abs()).sqrt() - INJECTIVITY_MARGIN
                }
                None => PI - INJECTIVITY_MARGIN,
            },
            (_, _, Some(LieGroupKind::Circle)) => PI - INJECTIVITY_MARGIN,
            _ => f64::INFINITY,
        };
        Self { radius }
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > self.radius {
            return Err(Error::OutsideInjectivity { norm, radius: self.radius });
        }
        Ok(())
    }
}

/// Arc length `S(q) = ∫_0^q √g` on the circle, from a Fourier series of `√g`.
#[derive(Debug, Clone)]
pub struct ArcLength {
    metric: CosineMetric,
    mean: f64,
    /// `(m, c_m)` for `m ≥ 1`; `√g = mean + Σ 2 Re(c_m e^{imq})`.
    modes: Vec<Complex64>,
}

impl ArcLength {
    pub fn new(metric: CosineMetric) -> Self {
        const M: usize = 256;
        let mut data: Vec<Complex64> = (0..M)
            .map(|k| Complex64::new(metric.value(2.0 * PI * k as f64 / M as f64).sqrt(), 0.0))
            .collect();
        FftPlanner::new().plan_fft_forward(M).process(&mut data);
        let mean = data[0].re / M as f64;
        let modes = data[1..M / 2]
            .iter()
            .map(|c| c / M as f64)
            .take_while(|c| c.norm() > 1e-18)
            .collect();
        Self { metric, mean, modes }
    }

    pub fn circumference(&self) -> f64 {
        2.0 * PI * self.mean
    }

    /// `S(q)` for any real `q` (not wrapped).
    pub fn eval(&self, q: f64) -> f64 {
        let mut s = self.mean * q;
        for (i, c) in self.modes.iter().enumerate() {
            let m = (i + 1) as f64;
            // ∫_0^q 2 Re(c e^{imt}) dt = 2 Re(c (e^{imq} - 1)/(im))
            let e = Complex64::new((m * q).cos() - 1.0, (m * q).sin());
            s += 2.0 * (c * e / Complex64::new(0.0, m)).re;
        }
        s
    }

    /// Solve `S(q) = s` by Newton's method.
    pub fn invert(&self, s: f64) -> f64 {
        let mut q = s / self.mean;
        for _ in 0..50 {
            let step = (self.eval(q) - s) / self.metric.value(q).sqrt();
            q -= step;
            if step.abs() < 1e-15 * (1.0 + q.abs()) {
                break;
            }
        }
        q
    }

    /// `(q, v)` with `exp_q(∓v/2) = (x, y)` along the shorter arc; exact
    /// antisymmetry `v(y, x) = -v(x, y)`.
    pub fn weyl_inverse(&self, x: f64, y: f64) -> (f64, f64) {
        self.weyl_inverse_arcs(self.eval(x), self.eval(y))
    }

    /// Signed arc length from `S(x) = sx` to `S(y) = sy` along the shorter arc.
    pub fn arc_between(&self, sx: f64, sy: f64) -> f64 {
        let c = self.circumference();
        (sy - sx) - ((sy - sx) / c).round() * c
    }

    /// [`ArcLength::weyl_inverse`] from precomputed arc lengths of the endpoints.
    pub fn weyl_inverse_arcs(&self, sx: f64, sy: f64) -> (f64, f64) {
        let c = self.circumference();
        let k = ((sy - sx) / c).round();
        let delta = (sy - sx) - k * c;
        let mid = 0.5 * (sx + sy - k * c);
        let q = wrap_angle(self.invert(mid.rem_euclid(c)));
        (q, delta / self.metric.value(q).sqrt())
    }
}

fn rk4_step(conn: &ConnectionDescriptor, y: [f64; 2], h: f64) -> [f64; 2] {
    let f = |s: [f64; 2]| [s[1], -conn.christoffel(s[0]) * s[1] * s[1]];
    let k1 = f(y);
    let k2 = f([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
    let k3 = f([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
    let k4 = f([y[0] + h * k3[0], y[1] + h * k3[1]]);
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Integrate `q̈ + Γ(q) q̇² = 0` with a fixed number of RK4 steps.
pub fn integrate_geodesic(conn: &ConnectionDescriptor, q0: f64, v0: f64, t: f64, steps: usize) -> (f64, f64) {
    let h = t / steps as f64;
    let mut y = [q0, v0];
    for _ in 0..steps {
        y = rk4_step(conn, y, h);
    }
    (y[0], y[1])
}

/// `X(t)` along the geodesic flow on the algebroid.
pub fn geodesic_flow(model: &GroupoidModel, conn: &ConnectionDescriptor, x0: &AlgebroidVector, t: f64) -> Result<AlgebroidVector> {
    if x0.fiber.len() != model.fiber_dim {
        return Err(Error::DimensionMismatch {
            expected: model.fiber_dim,
            got: x0.fiber.len(),
        });
    }
    let (q, v) = match conn.kind {
        ConnectionKind::GroupTrivial | ConnectionKind::ActionTrivial => return Ok(x0.clone()),
        ConnectionKind::Flat => (x0.base + t * x0.fiber[0], x0.fiber[0]),
        ConnectionKind::LeviCivita1d(_) => {
            // halve the step until two successive resolutions agree
            let mut steps = 8;
            let mut prev = integrate_geodesic(conn, x0.base, x0.fiber[0], t, steps);
            loop {
                steps *= 2;
                let next = integrate_geodesic(conn, x0.base, x0.fiber[0], t, steps);
                let err = (next.0 - prev.0).abs().max((next.1 - prev.1).abs());
                prev = next;
                if err < GEODESIC_TOL || steps > 1 << 20 {
                    break;
                }
            }
            prev
        }
    };
    let q = match model.base.kind {
        BaseKind::Circle => wrap_angle(q),
        BaseKind::LineWindow if q.abs() > model.base.half_width + 1e-12 => {
            return Err(Error::OutOfWindow { at: t });
        }
        _ => q,
    };
    Ok(AlgebroidVector::new(q, vec![v]))
}

/// `Exp^L(X)`, whose target is `τ(X)`.
pub fn exp_left(model: &GroupoidModel, conn: &ConnectionDescriptor, x: &AlgebroidVector) -> Result<GroupoidPoint> {
    InjectivityWindow::for_model(model).check(&x.fiber)?;
    match model.family {
        Family::Pair => {
            let end = geodesic_flow(model, conn, x, 1.0)?;
            Ok(GroupoidPoint::Pair { x: x.base, y: end.base })
        }
        Family::LieGroup => Ok(GroupoidPoint::Group(model.group.expect("group").exp(&x.fiber))),
        Family::Transformation => Ok(GroupoidPoint::Action {
            g: model.group.expect("group").exp(&x.fiber),
            q: x.base,
        }),
    }
}

/// `Exp^W(X) = Exp^L(−X/2)⁻¹ · Exp^L(X/2)`.
pub fn exp_weyl(model: &GroupoidModel, conn: &ConnectionDescriptor, x: &AlgebroidVector) -> Result<GroupoidPoint> {
    InjectivityWindow::for_model(model).check(&x.fiber)?;
    let left = model.invert(&exp_left(model, conn, &x.scaled(-0.5))?);
    let right = exp_left(model, conn, &x.scaled(0.5))?;
    model
        .compose(&left, &right)
        .ok_or_else(|| Error::GridMismatch("Weyl factors not composable".into()))
}

/// Chart coordinates of a point, used for finite-difference volume ratios.
fn chart(p: &GroupoidPoint) -> Vec<f64> {
    match p {
        GroupoidPoint::Pair { x, y } => vec![*x, *y],
        GroupoidPoint::Group(g) | GroupoidPoint::Action { g, .. } => match g {
            GroupElement::Line(x) | GroupElement::Circle(x) => vec![*x],
            GroupElement::Affine { a, b } => vec![*a, *b],
        },
    }
}

fn unwrap_near(v: f64, reference: f64) -> f64 {
    reference + (v - reference + PI).rem_euclid(2.0 * PI) - PI
}

/// `J_q(X)`; closed form where available.
pub fn haar_jacobian(model: &GroupoidModel, haar: &HaarSystem, q: f64, x: &[f64]) -> Result<f64> {
    InjectivityWindow::for_model(model).check(x)?;
    if x.iter().all(|v| *v == 0.0) {
        return Ok(1.0);
    }
    let rho = |t: f64| haar.density_at_base(t);
    match (model.family, model.group) {
        (Family::Pair, _) => {
            let (xq, yq, det) = match model.base.metric {
                None => (q - 0.5 * x[0], q + 0.5 * x[0], 1.0),
                Some(m) => {
                    let conn = ConnectionDescriptor::for_model(model);
                    let p = exp_weyl(model, &conn, &AlgebroidVector::new(q, x.to_vec()))?;
                    let (xs, ys) = match p {
                        GroupoidPoint::Pair { x, y } => (x, y),
                        _ => unreachable!(),
                    };
                    (xs, ys, m.value(q) / (m.value(xs) * m.value(ys)).sqrt())
                }
            };
            Ok(rho(xq) * rho(yq) * det / (rho(q) * haar.lebesgue_normalization(q)))
        }
        (_, Some(LieGroupKind::Affine)) => {
            // Haar density e^{-2X₁} times det d(exp) = e^{X₁} φ(X₁)
            Ok((-x[0]).exp() * expm1_ratio(x[0]))
        }
        _ => Ok(1.0),
    }
}

/// `J_q(X)` by fourth-order finite differences of the chart map
/// `X ↦ Exp^W(X)` (for pairs, of `(q, v) ↦ (x, y)`).
pub fn haar_jacobian_fd(model: &GroupoidModel, haar: &HaarSystem, q: f64, x: &[f64]) -> Result<f64> {
    let conn = ConnectionDescriptor::for_model(model);
    let h = JACOBIAN_STEP;
    let eval = |q: f64, x: &[f64]| -> Result<Vec<f64>> {
        Ok(chart(&exp_weyl(model, &conn, &AlgebroidVector::new(q, x.to_vec()))?))
    };
    let centre = eval(q, x)?;
    // columns of the Jacobian: for pairs the variables are (q, v)
    let vars = if model.family == Family::Pair { 2 } else { x.len() };
    let mut cols = Vec::with_capacity(vars);
    for j in 0..vars {
        let shifted = |s: f64| -> Result<Vec<f64>> {
            let mut xs = x.to_vec();
            let mut qs = q;
            if model.family == Family::Pair {
                if j == 0 {
                    qs += s;
                } else {
                    xs[0] += s;
                }
            } else {
                xs[j] += s;
            }
            let p = eval(qs, &xs)?;
            Ok(if model.base.kind == BaseKind::Circle || model.group == Some(LieGroupKind::Circle) {
                p.iter().zip(&centre).map(|(v, r)| unwrap_near(*v, *r)).collect()
            } else {
                p
            })
        };
        let (p2, p1, m1, m2) = (shifted(2.0 * h)?, shifted(h)?, shifted(-h)?, shifted(-2.0 * h)?);
        cols.push(
            (0..centre.len())
                .map(|i| (-p2[i] + 8.0 * p1[i] - 8.0 * m1[i] + m2[i]) / (12.0 * h))
                .collect::<Vec<f64>>(),
        );
    }
    let det = match vars {
        1 => cols[0][0],
        2 => cols[0][0] * cols[1][1] - cols[1][0] * cols[0][1],
        _ => unreachable!("at most two chart variables"),
    }
    .abs();
    let p = exp_weyl(model, &conn, &AlgebroidVector::new(q, x.to_vec()))?;
    let density = match p {
        GroupoidPoint::Pair { x: xs, y: ys } => {
            haar.density_at_base(xs) * haar.density_at_base(ys) / haar.density_at_base(q)
        }
        _ => haar.fiber_density(&p),
    };
    Ok(density * det / haar.lebesgue_normalization(q))
}
