//! Closed-form classical observables on the dual of an algebroid.
//!
//! An [`Observable`] is a finite sum of separable terms
//! `coeff · F(θ) · B(q)`. The fiber factor `F` is either a polynomial times a
//! Gaussian in each θ-coordinate, whose fiber transform is known exactly, or a
//! mollifier bump given directly on the algebroid side. The Gaussian class is
//! closed under products and under the derivatives entering Poisson brackets,
//! so `fg` and `{f, g}` stay exactly representable.
//!
//! Transform convention (unit Lebesgue normalization):
//! `f(θ) = ∫ e^{-iθ·X} f̀(X) dX` and `f̀(X) = ∫ e^{iθ·X} f(θ) dθ / (2π)^n`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default relative amplitude below which Gaussian transforms are cut to zero.
pub const DEFAULT_TRUNCATION: f64 = 1e-14;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq)]
pub enum FiberFactor {
    /// `∏_d θ_d^{p_d} exp(-α_d (θ_d - c_d)²)`; `α_d = 0` is a pure polynomial.
    Gauss {
        powers: Vec<u32>,
        centers: Vec<f64>,
        alphas: Vec<f64>,
    },
    /// One-dimensional `f̀(X) = X^m exp(-1 / (1 - (X/r)²))` for `|X| < r`.
    Bump { radius: f64, power: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseFactor {
    Const,
    /// `q^k exp(-β (q - b)²)` on a line.
    Gauss { power: u32, center: f64, beta: f64 },
    /// `e^{i m q}` on a circle.
    Fourier { mode: i32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: Complex64,
    pub fiber: FiberFactor,
    pub base: BaseFactor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservableClass {
    /// Compactly supported (possibly after truncation) fiber transform.
    PaleyWiener,
    /// Polynomial in θ somewhere; brackets are fine but no quantization.
    Polynomial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub fiber_dim: usize,
    pub terms: Vec<Term>,
    pub truncation: Option<f64>,
    pub class: ObservableClass,
    /// Per-dimension radius outside which `f̀` is exactly zero.
    pub support: Vec<f64>,
}

impl Term {
    pub fn gauss(coeff: f64, powers: &[u32], centers: &[f64], alphas: &[f64], base: BaseFactor) -> Self {
        Self {
            coeff: Complex64::new(coeff, 0.0),
            fiber: FiberFactor::Gauss {
                powers: powers.to_vec(),
                centers: centers.to_vec(),
                alphas: alphas.to_vec(),
            },
            base,
        }
    }

    pub fn bump(coeff: f64, radius: f64, power: u32, base: BaseFactor) -> Self {
        Self {
            coeff: Complex64::new(coeff, 0.0),
            fiber: FiberFactor::Bump { radius, power },
            base,
        }
    }

    /// A function of the base only.
    pub fn base_only(coeff: f64, fiber_dim: usize, base: BaseFactor) -> Self {
        Self::gauss(coeff, &vec![0; fiber_dim], &vec![0.0; fiber_dim], &vec![0.0; fiber_dim], base)
    }

    fn fiber_is_constant(&self) -> bool {
        matches!(&self.fiber, FiberFactor::Gauss { powers, alphas, .. }
            if powers.iter().all(|&p| p == 0) && alphas.iter().all(|&a| a == 0.0))
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `∫ dθ/(2π) e^{iθX} θ^p e^{-α(θ-c)²}` in closed form (`α > 0`).
pub fn gauss_ft_1d(x: f64, power: u32, center: f64, alpha: f64) -> Complex64 {
    // moments E[(μ + σZ)^m] with complex mean μ = iX/2α and σ² = 1/2α
    let mu = Complex64::new(0.0, x / (2.0 * alpha));
    let var = 1.0 / (2.0 * alpha);
    let mut moments = Vec::with_capacity(power as usize + 1);
    moments.push(Complex64::new(1.0, 0.0));
    if power >= 1 {
        moments.push(mu);
    }
    for m in 2..=power as usize {
        let next = mu * moments[m - 1] + (m as f64 - 1.0) * var * moments[m - 2];
        moments.push(next);
    }
    let mut poly = Complex64::new(0.0, 0.0);
    for m in 0..=power {
        poly += binomial(power, m) * center.powi((power - m) as i32) * moments[m as usize];
    }
    let envelope = (PI / alpha).sqrt() / (2.0 * PI) * (-x * x / (4.0 * alpha)).exp();
    let phase = center * x;
    let (s, c) = phase.abs().sin_cos();
    let rot = Complex64::new(c, if phase < 0.0 { -s } else { s });
    rot * poly * envelope
}

pub fn bump_profile(x: f64, radius: f64) -> f64 {
    let u = x / radius;
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

/// `∫ e^{-iθX} X^m bump(X/r) dX` by a fine trapezoid rule (the integrand is
/// smooth and flat at the support ends, so the rule converges very fast).
pub fn bump_transform(theta: f64, radius: f64, power: u32) -> Complex64 {
    const N: usize = 2048;
    let h = 2.0 * radius / N as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 1..N {
        let x = -radius + k as f64 * h;
        let v = x.powi(power as i32) * bump_profile(x, radius);
        acc += Complex64::from_polar(v, -theta * x);
    }
    acc * h
}

fn gauss_1d_value(theta: f64, power: u32, center: f64, alpha: f64) -> f64 {
    theta.powi(power as i32) * (-alpha * (theta - center).powi(2)).exp()
}

impl BaseFactor {
    pub fn eval(&self, q: f64) -> Complex64 {
        match *self {
            BaseFactor::Const => Complex64::new(1.0, 0.0),
            BaseFactor::Gauss { power, center, beta } => {
                Complex64::new(gauss_1d_value(q, power, center, beta), 0.0)
            }
            BaseFactor::Fourier { mode } => {
                let phase = mode as f64 * q;
                Complex64::new(phase.cos(), phase.sin())
            }
        }
    }

    fn sup_bound(&self) -> f64 {
        match *self {
            BaseFactor::Gauss { power, center, beta } if power > 0 && beta > 0.0 => {
                let qmax = center.abs() + (power as f64 / beta).sqrt() + 1.0;
                qmax.powi(power as i32)
            }
            _ => 1.0,
        }
    }

    fn product(&self, other: &BaseFactor) -> Result<(f64, BaseFactor)> {
        use BaseFactor::*;
        Ok(match (*self, *other) {
            (Const, b) | (b, Const) => (1.0, b),
            (Fourier { mode: m1 }, Fourier { mode: m2 }) => (1.0, Fourier { mode: m1 + m2 }),
            (
                Gauss { power: p1, center: c1, beta: b1 },
                Gauss { power: p2, center: c2, beta: b2 },
            ) => {
                let (scale, center, beta) = combine_gauss(c1, b1, c2, b2);
                (scale, Gauss { power: p1 + p2, center, beta })
            }
            _ => {
                return Err(Error::NotRepresentable(
                    "line and circle base factors cannot be multiplied".into(),
                ))
            }
        })
    }

    /// `d/dq` as a list of `(coefficient, factor)`.
    fn derivative(&self) -> Vec<(Complex64, BaseFactor)> {
        match *self {
            BaseFactor::Const => vec![],
            BaseFactor::Fourier { mode } => {
                if mode == 0 {
                    vec![]
                } else {
                    vec![(Complex64::new(0.0, mode as f64), *self)]
                }
            }
            BaseFactor::Gauss { power, center, beta } => {
                let mut out = Vec::new();
                if power > 0 {
                    out.push((
                        Complex64::new(power as f64, 0.0),
                        BaseFactor::Gauss { power: power - 1, center, beta },
                    ));
                }
                if beta != 0.0 {
                    out.push((
                        Complex64::new(-2.0 * beta, 0.0),
                        BaseFactor::Gauss { power: power + 1, center, beta },
                    ));
                    if center != 0.0 {
                        out.push((
                            Complex64::new(2.0 * beta * center, 0.0),
                            BaseFactor::Gauss { power, center, beta },
                        ));
                    }
                }
                out
            }
        }
    }

    fn conj(&self) -> BaseFactor {
        match *self {
            BaseFactor::Fourier { mode } => BaseFactor::Fourier { mode: -mode },
            b => b,
        }
    }
}

/// Product of `exp(-a1(x-c1)²)` and `exp(-a2(x-c2)²)` as `scale · exp(-a(x-c)²)`.
fn combine_gauss(c1: f64, a1: f64, c2: f64, a2: f64) -> (f64, f64, f64) {
    let a = a1 + a2;
    if a == 0.0 {
        return (1.0, 0.0, 0.0);
    }
    if a1 == 0.0 {
        return (1.0, c2, a2);
    }
    if a2 == 0.0 {
        return (1.0, c1, a1);
    }
    let c = (a1 * c1 + a2 * c2) / a;
    let scale = (-a1 * a2 * (c1 - c2).powi(2) / a).exp();
    (scale, c, a)
}

impl FiberFactor {
    fn eval(&self, theta: &[f64]) -> Complex64 {
        match self {
            FiberFactor::Gauss { powers, centers, alphas } => {
                let mut v = 1.0;
                for d in 0..powers.len() {
                    v *= gauss_1d_value(theta[d], powers[d], centers[d], alphas[d]);
                }
                Complex64::new(v, 0.0)
            }
            FiberFactor::Bump { radius, power } => bump_transform(theta[0], *radius, *power),
        }
    }

    fn eval_ft(&self, x: &[f64]) -> Result<Complex64> {
        match self {
            FiberFactor::Gauss { powers, centers, alphas } => {
                let mut v = Complex64::new(1.0, 0.0);
                for d in 0..powers.len() {
                    if alphas[d] <= 0.0 {
                        return Err(Error::NotPaleyWiener(
                            "polynomial growth in θ has no function-valued transform".into(),
                        ));
                    }
                    v *= gauss_ft_1d(x[d], powers[d], centers[d], alphas[d]);
                }
                Ok(v)
            }
            FiberFactor::Bump { radius, power } => Ok(Complex64::new(
                x[0].powi(*power as i32) * bump_profile(x[0], *radius),
                0.0,
            )),
        }
    }

    /// `∂/∂θ_d` as `(coefficient, factor)` terms.
    fn derivative(&self, d: usize) -> Vec<(Complex64, FiberFactor)> {
        match self {
            FiberFactor::Gauss { powers, centers, alphas } => {
                let mut out = Vec::new();
                let with_power = |p: u32| {
                    let mut powers = powers.clone();
                    powers[d] = p;
                    FiberFactor::Gauss {
                        powers,
                        centers: centers.clone(),
                        alphas: alphas.clone(),
                    }
                };
                let (p, c, a) = (powers[d], centers[d], alphas[d]);
                if p > 0 {
                    out.push((Complex64::new(p as f64, 0.0), with_power(p - 1)));
                }
                if a != 0.0 {
                    out.push((Complex64::new(-2.0 * a, 0.0), with_power(p + 1)));
                    if c != 0.0 {
                        out.push((Complex64::new(2.0 * a * c, 0.0), with_power(p)));
                    }
                }
                out
            }
            // ∂_θ f ↔ (-iX) f̀
            FiberFactor::Bump { radius, power } => vec![(
                -I,
                FiberFactor::Bump {
                    radius: *radius,
                    power: power + 1,
                },
            )],
        }
    }
}

impl Observable {
    /// Build an observable. Gaussian terms need a truncation threshold to
    /// count as Paley-Wiener; without one they are rejected.
    pub fn new(fiber_dim: usize, terms: Vec<Term>, truncation: Option<f64>) -> Result<Self> {
        let mut class = ObservableClass::PaleyWiener;
        for t in &terms {
            match &t.fiber {
                FiberFactor::Gauss { powers, centers, alphas } => {
                    if powers.len() != fiber_dim || centers.len() != fiber_dim || alphas.len() != fiber_dim {
                        return Err(Error::DimensionMismatch {
                            expected: fiber_dim,
                            got: powers.len(),
                        });
                    }
                    if alphas.iter().any(|&a| a < 0.0) {
                        return Err(Error::NotPaleyWiener("negative Gaussian width".into()));
                    }
                    if alphas.iter().any(|&a| a == 0.0) {
                        class = ObservableClass::Polynomial;
                    } else if truncation.is_none() {
                        return Err(Error::NotPaleyWiener(
                            "Gaussian in θ has a transform without compact support; \
                             supply a truncation threshold"
                                .into(),
                        ));
                    }
                }
                FiberFactor::Bump { radius, .. } => {
                    if fiber_dim != 1 {
                        return Err(Error::DimensionMismatch { expected: 1, got: fiber_dim });
                    }
                    if !(*radius > 0.0) {
                        return Err(Error::NotPaleyWiener("bump radius must be positive".into()));
                    }
                }
            }
        }
        let mut obs = Self {
            fiber_dim,
            terms,
            truncation,
            class,
            support: vec![0.0; fiber_dim],
        };
        obs.prune();
        obs.support = obs.compute_support();
        Ok(obs)
    }

    pub fn zero(fiber_dim: usize) -> Self {
        Self {
            fiber_dim,
            terms: Vec::new(),
            truncation: Some(DEFAULT_TRUNCATION),
            class: ObservableClass::PaleyWiener,
            support: vec![0.0; fiber_dim],
        }
    }

    fn prune(&mut self) {
        self.terms.retain(|t| t.coeff.norm() > 0.0);
    }

    fn rebuild(&self, terms: Vec<Term>) -> Result<Self> {
        let truncation = self.truncation.or(Some(DEFAULT_TRUNCATION));
        Observable::new(self.fiber_dim, terms, truncation)
    }

    pub fn is_paley_wiener(&self) -> bool {
        self.class == ObservableClass::PaleyWiener
    }

    /// Whether every term has a Gaussian (not bump) fiber factor.
    pub fn has_bump(&self) -> bool {
        self.terms.iter().any(|t| matches!(t.fiber, FiberFactor::Bump { .. }))
    }

    fn compute_support(&self) -> Vec<f64> {
        let mut radii = vec![0.0f64; self.fiber_dim];
        if self.class != ObservableClass::PaleyWiener {
            return vec![f64::INFINITY; self.fiber_dim];
        }
        let thr = self.truncation.unwrap_or(DEFAULT_TRUNCATION);
        let mut seen: Vec<Vec<(u32, u64, u64)>> = vec![Vec::new(); self.fiber_dim];
        for t in &self.terms {
            match &t.fiber {
                FiberFactor::Bump { radius, .. } => radii[0] = radii[0].max(*radius),
                FiberFactor::Gauss { powers, centers, alphas } => {
                    for d in 0..self.fiber_dim {
                        let key = (powers[d], centers[d].to_bits(), alphas[d].to_bits());
                        if seen[d].contains(&key) {
                            continue;
                        }
                        seen[d].push(key);
                        radii[d] = radii[d].max(gauss_truncation_radius(powers[d], centers[d], alphas[d], thr));
                    }
                }
            }
        }
        radii
    }

    /// `f(θ, q)`.
    pub fn eval(&self, theta: &[f64], q: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.coeff * t.fiber.eval(theta) * t.base.eval(q))
            .sum()
    }

    /// `f̀_q(X)`, exactly zero outside the support box.
    pub fn eval_ft(&self, x: &[f64], q: f64) -> Result<Complex64> {
        if self.class != ObservableClass::PaleyWiener {
            return Err(Error::NotPaleyWiener("polynomial observable".into()));
        }
        if x.iter().zip(&self.support).any(|(xi, r)| xi.abs() > *r) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            acc += t.coeff * t.fiber.eval_ft(x)? * t.base.eval(q);
        }
        Ok(acc)
    }

    /// Transform in the first fiber coordinate only:
    /// `P(Y₁, θ₂) = ∫ dθ₁/2π e^{iθ₁Y₁} f(θ₁, θ₂)`, for two-dimensional fibers.
    pub fn eval_partial_ft(&self, y1: f64, theta2: f64) -> Result<Complex64> {
        if self.fiber_dim != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: self.fiber_dim });
        }
        if y1.abs() > self.support[0] {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            match &t.fiber {
                FiberFactor::Gauss { powers, centers, alphas } => {
                    if alphas[0] <= 0.0 {
                        return Err(Error::NotPaleyWiener("polynomial in θ₁".into()));
                    }
                    acc += t.coeff
                        * gauss_ft_1d(y1, powers[0], centers[0], alphas[0])
                        * gauss_1d_value(theta2, powers[1], centers[1], alphas[1])
                        * t.base.eval(0.0);
                }
                FiberFactor::Bump { .. } => unreachable!("bumps are one-dimensional"),
            }
        }
        Ok(acc)
    }

    /// Upper estimate of the `L¹` mass of `f̀` removed by the truncation.
    pub fn truncation_mass(&self) -> f64 {
        let mut mass = 0.0;
        for t in &self.terms {
            if let FiberFactor::Gauss { powers, centers, alphas } = &t.fiber {
                let mut total = Vec::with_capacity(self.fiber_dim);
                let mut outside = Vec::with_capacity(self.fiber_dim);
                for d in 0..self.fiber_dim {
                    let (tot, out) =
                        gauss_ft_mass(powers[d], centers[d], alphas[d], self.support[d]);
                    total.push(tot);
                    outside.push(out);
                }
                let mut term = 0.0;
                for d in 0..self.fiber_dim {
                    let mut m = outside[d];
                    for (e, tot) in total.iter().enumerate() {
                        if e != d {
                            m *= tot;
                        }
                    }
                    term += m;
                }
                mass += t.coeff.norm() * t.base.sup_bound() * term;
            }
        }
        mass
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff *= c;
        }
        out.prune();
        out
    }

    pub fn add(&self, other: &Observable) -> Result<Self> {
        if self.fiber_dim != other.fiber_dim {
            return Err(Error::DimensionMismatch {
                expected: self.fiber_dim,
                got: other.fiber_dim,
            });
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        let mut out = self.rebuild(terms)?;
        out.truncation = match (self.truncation, other.truncation) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        Ok(out)
    }

    pub fn sub(&self, other: &Observable) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Pointwise complex conjugate `f^*`.
    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff = t.coeff.conj();
            t.base = t.base.conj();
            if let FiberFactor::Bump { power, .. } = t.fiber {
                if power % 2 == 1 {
                    t.coeff = -t.coeff;
                }
            }
        }
        out
    }

    /// Pointwise product `fg`.
    pub fn product(&self, other: &Observable) -> Result<Self> {
        if self.fiber_dim != other.fiber_dim {
            return Err(Error::DimensionMismatch {
                expected: self.fiber_dim,
                got: other.fiber_dim,
            });
        }
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let (bscale, base) = a.base.product(&b.base)?;
                let (fscale, fiber) = if b.fiber_is_constant() {
                    (1.0, a.fiber.clone())
                } else if a.fiber_is_constant() {
                    (1.0, b.fiber.clone())
                } else {
                    match (&a.fiber, &b.fiber) {
                        (
                            FiberFactor::Gauss { powers: p1, centers: c1, alphas: a1 },
                            FiberFactor::Gauss { powers: p2, centers: c2, alphas: a2 },
                        ) => {
                            let mut scale = 1.0;
                            let mut powers = Vec::new();
                            let mut centers = Vec::new();
                            let mut alphas = Vec::new();
                            for d in 0..self.fiber_dim {
                                let (s, c, al) = combine_gauss(c1[d], a1[d], c2[d], a2[d]);
                                scale *= s;
                                powers.push(p1[d] + p2[d]);
                                centers.push(c);
                                alphas.push(al);
                            }
                            (scale, FiberFactor::Gauss { powers, centers, alphas })
                        }
                        _ => {
                            return Err(Error::NotRepresentable(
                                "product of a bump factor with another fiber-dependent factor".into(),
                            ))
                        }
                    }
                };
                terms.push(Term {
                    coeff: a.coeff * b.coeff * bscale * fscale,
                    fiber,
                    base,
                });
            }
        }
        self.rebuild(terms)
    }

    /// `∂f/∂θ_d`.
    pub fn d_theta(&self, d: usize) -> Result<Self> {
        let mut terms = Vec::new();
        for t in &self.terms {
            for (c, fiber) in t.fiber.derivative(d) {
                terms.push(Term {
                    coeff: t.coeff * c,
                    fiber,
                    base: t.base,
                });
            }
        }
        self.rebuild(terms)
    }

    /// `∂f/∂q`.
    pub fn d_base(&self) -> Result<Self> {
        let mut terms = Vec::new();
        for t in &self.terms {
            for (c, base) in t.base.derivative() {
                terms.push(Term {
                    coeff: t.coeff * c,
                    fiber: t.fiber.clone(),
                    base,
                });
            }
        }
        self.rebuild(terms)
    }

    /// Multiply by the coordinate function `θ_d`.
    pub fn times_theta(&self, d: usize) -> Result<Self> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            match &t.fiber {
                FiberFactor::Gauss { powers, centers, alphas } => {
                    let mut powers = powers.clone();
                    powers[d] += 1;
                    terms.push(Term {
                        coeff: t.coeff,
                        fiber: FiberFactor::Gauss {
                            powers,
                            centers: centers.clone(),
                            alphas: alphas.clone(),
                        },
                        base: t.base,
                    });
                }
                FiberFactor::Bump { .. } => {
                    return Err(Error::NotRepresentable("θ times a bump observable".into()))
                }
            }
        }
        self.rebuild(terms)
    }

    /// Whether `f` is real-valued (checked through `f̄ = f` on the terms).
    pub fn is_real(&self) -> bool {
        let diff = match self.sub(&self.conj()) {
            Ok(d) => d,
            Err(_) => return false,
        };
        // collect like terms by probing at a few points
        let probes = [
            (vec![0.3, -0.7], 0.4),
            (vec![-1.1, 0.2], -0.9),
            (vec![0.05, 1.3], 2.1),
            (vec![1.7, -0.4], 5.0),
        ];
        probes.iter().all(|(th, q)| {
            let th = &th[..self.fiber_dim];
            diff.eval(th, *q).norm() <= 1e-13 * (1.0 + self.eval(th, *q).norm())
        })
    }
}

/// Radius beyond which the 1-D Gaussian transform stays below `thr` times its peak.
fn gauss_truncation_radius(power: u32, center: f64, alpha: f64, thr: f64) -> f64 {
    if alpha <= 0.0 {
        return f64::INFINITY;
    }
    let width = (4.0 * alpha).sqrt();
    let step = 0.05 * width;
    let limit = width * ((1.0 / thr).ln().sqrt() + 8.0 + power as f64);
    let n = (limit / step).ceil() as usize;
    let amp = |x: f64| gauss_ft_1d(x, power, center, alpha).norm();
    let vals: Vec<f64> = (0..=n).map(|k| amp(k as f64 * step)).collect();
    let level = thr * vals.iter().cloned().fold(0.0, f64::max);
    let last = vals.iter().rposition(|&v| v >= level).unwrap_or(0);
    // refine the final crossing inside [last, last + 1] steps
    let (mut lo, mut hi) = (last as f64 * step, (last + 1) as f64 * step);
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if amp(mid) >= level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `(∫|ĝ|, ∫_{|X|>R}|ĝ|)` for a 1-D Gaussian factor.
fn gauss_ft_mass(power: u32, center: f64, alpha: f64, radius: f64) -> (f64, f64) {
    if alpha <= 0.0 {
        return (f64::INFINITY, f64::INFINITY);
    }
    let width = (4.0 * alpha).sqrt();
    let limit = radius.max(width * (12.0 + power as f64));
    let n = 8000;
    let h = limit / n as f64;
    let mut total = 0.0;
    let mut outside = 0.0;
    for k in 0..n {
        let x = (k as f64 + 0.5) * h;
        let v = 2.0 * gauss_ft_1d(x, power, center, alpha).norm() * h;
        total += v;
        if x > radius {
            outside += v;
        }
    }
    (total, outside)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple(alpha: f64) -> Observable {
        Observable::new(
            1,
            vec![Term::gauss(1.0, &[0], &[0.0], &[alpha], BaseFactor::Const)],
            Some(DEFAULT_TRUNCATION),
        )
        .unwrap()
    }

    #[test]
    fn gaussian_transform_matches_quadrature() {
        // brute-force ∫ dθ/2π e^{iθX} θ^p e^{-α(θ-c)²}
        for &(p, c, a) in &[(0u32, 0.0, 1.0), (2, 0.4, 0.7), (3, -0.3, 2.0)] {
            for &x in &[0.0, 0.9, -2.3] {
                let n = 40000;
                let lim = 30.0;
                let h = 2.0 * lim / n as f64;
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..=n {
                    let th = -lim + k as f64 * h;
                    acc += Complex64::from_polar(gauss_1d_value(th, p, c, a), th * x);
                }
                acc *= h / (2.0 * PI);
                let exact = gauss_ft_1d(x, p, c, a);
                assert!((acc - exact).norm() < 1e-12, "p={p} x={x}: {acc} vs {exact}");
            }
        }
    }

    #[test]
    fn gaussian_requires_truncation() {
        let t = Term::gauss(1.0, &[0], &[0.0], &[1.0], BaseFactor::Const);
        assert!(matches!(
            Observable::new(1, vec![t.clone()], None),
            Err(Error::NotPaleyWiener(_))
        ));
        let o = Observable::new(1, vec![t], Some(1e-14)).unwrap();
        // e^{-X²/4} < 1e-14 beyond X ≈ 11.35
        assert!((o.support[0] - 11.35).abs() < 0.05, "{}", o.support[0]);
        assert_eq!(o.eval_ft(&[11.5], 0.0).unwrap(), Complex64::new(0.0, 0.0));
        assert!(o.truncation_mass() < 1e-13);
    }

    #[test]
    fn products_and_derivatives_are_exact() {
        let f = simple(1.0);
        let g = Observable::new(
            1,
            vec![Term::gauss(2.0, &[1], &[0.5], &[0.5], BaseFactor::Gauss { power: 0, center: 0.0, beta: 1.0 })],
            Some(DEFAULT_TRUNCATION),
        )
        .unwrap();
        let fg = f.product(&g).unwrap();
        let dg = g.d_theta(0).unwrap();
        let dq = g.d_base().unwrap();
        for &(th, q) in &[(0.3, 0.2), (-1.2, 0.8), (2.0, -0.5)] {
            let lhs = fg.eval(&[th], q);
            let rhs = f.eval(&[th], q) * g.eval(&[th], q);
            assert!((lhs - rhs).norm() < 1e-14);
            let e = 1e-5;
            let fd = (g.eval(&[th + e], q) - g.eval(&[th - e], q)) / (2.0 * e);
            assert!((dg.eval(&[th], q) - fd).norm() < 1e-8);
            let fdq = (g.eval(&[th], q + e) - g.eval(&[th], q - e)) / (2.0 * e);
            assert!((dq.eval(&[th], q) - fdq).norm() < 1e-8);
        }
    }

    #[test]
    fn bump_products_are_not_representable() {
        let b = Observable::new(1, vec![Term::bump(1.0, 2.0, 0, BaseFactor::Const)], None).unwrap();
        assert!(b.is_paley_wiener());
        assert!(matches!(b.product(&b), Err(Error::NotRepresentable(_))));
        let base = Observable::new(1, vec![Term::base_only(1.0, 1, BaseFactor::Gauss { power: 0, center: 0.0, beta: 1.0 })], None).unwrap();
        assert!(b.product(&base).is_ok());
    }

    #[test]
    fn conjugation_and_reality() {
        let f = simple(1.0);
        assert!(f.is_real());
        let g = f.scale(Complex64::new(0.0, 1.0));
        assert!(!g.is_real());
        let h = Observable::new(
            1,
            vec![
                Term::gauss(1.0, &[0], &[0.0], &[1.0], BaseFactor::Fourier { mode: 2 }),
                Term::gauss(1.0, &[0], &[0.0], &[1.0], BaseFactor::Fourier { mode: -2 }),
            ],
            Some(DEFAULT_TRUNCATION),
        )
        .unwrap();
        assert!(h.is_real());
        // real f ⇒ f̀(-X) = conj f̀(X)
        let b = Observable::new(1, vec![Term::bump(1.0, 2.0, 1, BaseFactor::Const)], None).unwrap();
        let fb = b.scale(Complex64::new(0.0, 1.0));
        assert!(fb.is_real());
        for x in [0.3, 1.1] {
            let a = fb.eval_ft(&[x], 0.0).unwrap();
            let m = fb.eval_ft(&[-x], 0.0).unwrap();
            assert!((a - m.conj()).norm() < 1e-15);
        }
    }
}
