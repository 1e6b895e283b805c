//! Defects of the strict quantization conditions at a single `ħ`.

use num_complex::Complex64;

use crate::cstar::{combine, convolve, involute, reduced_norm_estimate};
use crate::error::{Error, Result};
use crate::fourier::{make_pw_observable, make_pw_observable_on, FiberGrid, PWObservable};
use crate::geometry::GroupoidModel;
use crate::observable::Observable;
use crate::poisson::{exact_bracket, BracketDescriptor, Sign};
use crate::quantize::{classical_section, weyl_quantize, Cutoff};

/// A defect norm and the truncation mass of the observable it required.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Defect {
    pub value: f64,
    pub truncation_mass: f64,
}

/// Quantization settings shared by every defect at one rung.
#[derive(Debug, Clone, Copy)]
pub struct Setting<'a> {
    pub model: &'a GroupoidModel,
    pub hbar: f64,
    pub sign: Sign,
    pub kappa: &'a Cutoff,
    /// Seed of the power-iteration start vectors.
    pub seed: u64,
}

impl Setting<'_> {
    fn norm(&self, a: &crate::quantize::KernelElement) -> Result<f64> {
        Ok(reduced_norm_estimate(a, self.seed)?.value)
    }

    fn quantize(&self, f: &PWObservable) -> Result<crate::quantize::KernelElement> {
        weyl_quantize(self.model, f, self.hbar, self.sign, self.kappa)
    }

    /// Project a derived observable back to the sampled class, on the
    /// spacing used for `like`.
    fn project(&self, obs: &Observable, like: &PWObservable) -> Result<PWObservable> {
        make_pw_observable(self.model, obs, like.grid.spacing)
    }
}

/// `‖(i/ħ)[Q(f), Q(g)] − Q({f,g})‖`, with both products convolved separately.
pub fn dirac_defect(s: &Setting, f: &PWObservable, g: &PWObservable) -> Result<Defect> {
    let desc = BracketDescriptor::for_model(s.model, s.sign);
    let bracket = exact_bracket(&desc, &f.observable, &g.observable)?;
    let (qf, qg) = (s.quantize(f)?, s.quantize(g)?);
    let fg = convolve(&qf, &qg)?;
    let gf = convolve(&qg, &qf)?;
    let i_over_hbar = Complex64::new(0.0, 1.0 / s.hbar);
    let commutator = combine(i_over_hbar, &fg, -i_over_hbar, &gf)?;
    let (target, mass) = if bracket.terms.is_empty() {
        (combine(Complex64::new(0.0, 0.0), &qf, Complex64::new(0.0, 0.0), &qf)?, 0.0)
    } else {
        let pw = s.project(&bracket, f)?;
        (s.quantize(&pw)?, pw.truncation_mass)
    };
    let diff = combine(Complex64::new(1.0, 0.0), &commutator, Complex64::new(-1.0, 0.0), &target)?;
    Ok(Defect { value: s.norm(&diff)?, truncation_mass: mass })
}

/// `‖Q(f)Q(g) − Q(fg)‖`.
pub fn vonneumann_defect(s: &Setting, f: &PWObservable, g: &PWObservable) -> Result<Defect> {
    let product = f.observable.product(&g.observable)?;
    let (qf, qg) = (s.quantize(f)?, s.quantize(g)?);
    let lhs = convolve(&qf, &qg)?;
    let (rhs, mass) = if product.terms.is_empty() {
        (combine(Complex64::new(0.0, 0.0), &qf, Complex64::new(0.0, 0.0), &qf)?, 0.0)
    } else {
        let pw = s.project(&product, f)?;
        (s.quantize(&pw)?, pw.truncation_mass)
    };
    let diff = combine(Complex64::new(1.0, 0.0), &lhs, Complex64::new(-1.0, 0.0), &rhs)?;
    Ok(Defect { value: s.norm(&diff)?, truncation_mass: mass })
}

/// `‖Q(f)* − Q(f̄)‖`.
pub fn selfadjoint_defect(s: &Setting, f: &PWObservable) -> Result<f64> {
    let conj = make_pw_observable_on(s.model, &f.observable.conj(), f.grid.clone())?;
    let diff = combine(
        Complex64::new(1.0, 0.0),
        &involute(&s.quantize(f)?),
        Complex64::new(-1.0, 0.0),
        &s.quantize(&conj)?,
    )?;
    s.norm(&diff)
}

/// `‖Q_ħ(f)‖`, or the sup norm on the dual grid at `ħ = 0`.
pub fn quantized_norm(s: &Setting, f: &PWObservable) -> Result<f64> {
    if s.hbar == 0.0 {
        return s.norm(&classical_section(s.model, f));
    }
    s.norm(&s.quantize(f)?)
}

/// `(ħ, ‖Q_ħ(f)‖)` along a ladder, ending with the classical value at `ħ = 0`.
/// The model is reused for every rung.
pub fn norm_continuity_scan(
    model: &GroupoidModel,
    f: &PWObservable,
    ladder: &[f64],
    sign: Sign,
    kappa: &Cutoff,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if ladder.iter().any(|&h| !(h > 0.0)) {
        return Err(Error::InvalidConfig("ladder rungs must be positive; ħ = 0 is appended".into()));
    }
    ladder
        .iter()
        .copied()
        .chain(std::iter::once(0.0))
        .map(|hbar| {
            let s = Setting { model, hbar, sign, kappa, seed };
            Ok((hbar, quantized_norm(&s, f)?))
        })
        .collect()
}

/// `max |f|` on a fiber grid refined so that the dual spacing is at most
/// `dual_step`, over every base sample.
pub fn classical_sup(model: &GroupoidModel, f: &PWObservable, dual_step: f64) -> Result<f64> {
    let grid = &f.grid;
    let mut points = grid.points;
    while 2.0 * std::f64::consts::PI / (points as f64 * grid.spacing) > dual_step {
        points *= 2;
    }
    if points == grid.points {
        return Ok(f.sup_norm());
    }
    let fine = FiberGrid::new(points, grid.spacing, grid.dim)?;
    Ok(make_pw_observable_on(model, &f.observable, fine)?.sup_norm())
}
