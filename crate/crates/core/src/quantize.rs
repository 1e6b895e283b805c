//! The cutoff `κ`, Weyl quantization `Q_ħ` and the classical section at `ħ = 0`.
//!
//! Kernels are stored on the grid each family is discretized on, with values
//! computed from the closed-form `f̀` at the exact preimage under `Exp^W`:
//!
//! * pair groupoids: a dense matrix `a(x_i, x_j)` (target, source);
//! * the circle group: `a(φ_k)` on `2πk/n`;
//! * transformation groupoids: `a(x_k, q_j)` for lattice offsets `x_k`;
//! * the affine group: the two irreducible components of the regular
//!   representation, as banded kernels in the log-frequency variable.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expmaps::{ArcLength, InjectivityWindow};
use crate::fourier::PWObservable;
use crate::geometry::{BaseKind, ExampleName, Family, GroupoidModel, LieGroupKind};
use crate::observable::Observable;
use crate::poisson::Sign;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Smooth even cutoff, exactly `1` for `|X| ≤ r_in` and `0` for `|X| ≥ r_out`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub r_in: f64,
    pub r_out: f64,
}

fn smooth_zero(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

impl Cutoff {
    /// `κ ≡ 1`, admissible when `Exp^W` is injective everywhere.
    pub fn unit() -> Self {
        Self {
            r_in: f64::INFINITY,
            r_out: f64::INFINITY,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r <= self.r_in {
            1.0
        } else if r >= self.r_out {
            0.0
        } else {
            let u = (r - self.r_in) / (self.r_out - self.r_in);
            let (a, b) = (smooth_zero(1.0 - u), smooth_zero(u));
            a / (a + b)
        }
    }
}

/// A cutoff with the given plateau and support radii.
pub fn build_cutoff(model: &GroupoidModel, r_in: f64, r_out: f64) -> Result<Cutoff> {
    let inj = InjectivityWindow::for_model(model).radius;
    if r_in.is_infinite() && r_out.is_infinite() {
        if inj.is_finite() {
            return Err(Error::InvalidCutoff(format!(
                "κ ≡ 1 is not admissible: Exp^W is injective only for |X| < {inj}"
            )));
        }
        return Ok(Cutoff::unit());
    }
    if !(r_in > 0.0 && r_in < r_out) {
        return Err(Error::InvalidCutoff(format!("need 0 < r_in < r_out, got {r_in}, {r_out}")));
    }
    if r_out > inj {
        return Err(Error::InvalidCutoff(format!(
            "support radius {r_out} exceeds the injectivity radius {inj}"
        )));
    }
    Ok(Cutoff { r_in, r_out })
}

/// The cutoff used unless a configuration overrides it.
pub fn default_cutoff(model: &GroupoidModel) -> Cutoff {
    let inj = InjectivityWindow::for_model(model).radius;
    if inj.is_infinite() {
        Cutoff::unit()
    } else {
        Cutoff {
            r_in: 2.5,
            r_out: inj,
        }
    }
}

/// Banded kernels of the two irreducible components `ε = ±` of the affine
/// group's regular representation, on `s_i = s0 + i·ds`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineKernel {
    pub s0: f64,
    pub ds: f64,
    pub len: usize,
    pub band: usize,
    /// Rows below this index are polluted by the lower grid edge.
    pub valid_from: usize,
    /// `K_ε(i, i+d)` at `i·(2·band+1) + d + band`; index 0 is `ε = +`.
    pub parts: [Vec<Complex64>; 2],
}

impl AffineKernel {
    pub fn zeros(s0: f64, ds: f64, len: usize, band: usize, valid_from: usize) -> Self {
        let size = len * (2 * band + 1);
        Self {
            s0,
            ds,
            len,
            band,
            valid_from,
            parts: [vec![ZERO; size], vec![ZERO; size]],
        }
    }

    pub fn get(&self, e: usize, i: usize, j: usize) -> Complex64 {
        let d = j as isize - i as isize;
        if d.unsigned_abs() > self.band {
            return ZERO;
        }
        self.parts[e][i * (2 * self.band + 1) + (d + self.band as isize) as usize]
    }

    fn set(&mut self, e: usize, i: usize, j: usize, v: Complex64) {
        let d = j as isize - i as isize;
        let w = 2 * self.band + 1;
        self.parts[e][i * w + (d + self.band as isize) as usize] = v;
    }

    pub fn widened(&self, band: usize) -> Self {
        if band <= self.band {
            return self.clone();
        }
        let mut out = Self::zeros(self.s0, self.ds, self.len, band, self.valid_from);
        for e in 0..2 {
            for i in 0..self.len {
                let lo = i.saturating_sub(self.band);
                let hi = (i + self.band).min(self.len - 1);
                for j in lo..=hi {
                    out.set(e, i, j, self.get(e, i, j));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelData {
    /// `f` on the dual grid of each base sample (`ħ = 0`).
    Classical {
        base_samples: Vec<f64>,
        values: Vec<Vec<Complex64>>,
    },
    /// Pair groupoids: `a(x_i, x_j)` with quadrature weights of the base.
    Dense { matrix: Mat<Complex64> },
    /// Circle group: `a(2πk/n)`.
    Circle { values: Vec<Complex64> },
    /// Transformation groupoids: `a(x, q_j)` for offsets `x = k·h`,
    /// stored at `(k + band)·n + j`; periodic bases keep all `n` offsets.
    Action {
        band: usize,
        periodic: bool,
        values: Vec<Complex64>,
    },
    Affine(AffineKernel),
}

/// An element of the convolution algebra (or, at `ħ = 0`, of `C₀(𝔊*)`).
#[derive(Debug, Clone)]
pub struct KernelElement {
    pub model: Arc<GroupoidModel>,
    pub hbar: f64,
    pub sign: Sign,
    pub data: KernelData,
    pub selfadjoint: bool,
}

impl KernelElement {
    pub fn example(&self) -> ExampleName {
        self.model.name
    }
}

/// Offset `m` of a circle index, in `(-n/2, n/2]`.
pub fn circle_offset(k: usize, n: usize) -> i64 {
    let k = k as i64;
    let n = n as i64;
    if 2 * k > n {
        k - n
    } else {
        k
    }
}

fn check_hbar(hbar: f64) -> Result<()> {
    if !(hbar > 0.0) || !hbar.is_finite() {
        return Err(Error::InvalidHbar(hbar));
    }
    Ok(())
}

/// `Q_ħ(f)` for the model's family.
pub fn weyl_quantize(model: &GroupoidModel, f: &PWObservable, hbar: f64, sign: Sign, kappa: &Cutoff) -> Result<KernelElement> {
    check_hbar(hbar)?;
    if f.observable.fiber_dim != model.fiber_dim {
        return Err(Error::DimensionMismatch {
            expected: model.fiber_dim,
            got: f.observable.fiber_dim,
        });
    }
    let inj = InjectivityWindow::for_model(model).radius;
    if kappa.r_out > inj {
        return Err(Error::InvalidCutoff(format!(
            "cutoff support {} exceeds the injectivity radius {inj}",
            kappa.r_out
        )));
    }
    let obs = &f.observable;
    let s = sign.factor();
    let n = model.fiber_dim as i32;
    let scale = hbar.powi(-n);
    let value = |x: &[f64], q: f64| -> Result<Complex64> {
        let k = kappa.eval(x);
        if k == 0.0 {
            return Ok(ZERO);
        }
        let y: Vec<f64> = x.iter().map(|v| s * v / hbar).collect();
        Ok(obs.eval_ft(&y, q)? * (scale * k))
    };
    let reach = hbar * obs.support.iter().cloned().fold(0.0, f64::max);
    let data = match model.family {
        Family::Pair => {
            let nodes = &model.base.samples;
            let n = nodes.len();
            let mut matrix = Mat::<Complex64>::zeros(n, n);
            match model.base.metric {
                None => {
                    if model.base.kind == BaseKind::LineWindow && reach > 2.0 * model.base.half_width {
                        return Err(Error::SupportOverflow {
                            needed: reach,
                            available: 2.0 * model.base.half_width,
                        });
                    }
                    let band = (reach / model.base.spacing()).ceil() as usize + 1;
                    for i in 0..n {
                        let lo = i.saturating_sub(band);
                        let hi = (i + band).min(n - 1);
                        for j in lo..=hi {
                            let (x, y) = (nodes[i], nodes[j]);
                            matrix[(i, j)] = value(&[y - x], 0.5 * (x + y))?;
                        }
                    }
                }
                Some(metric) => {
                    let arc = ArcLength::new(metric);
                    let arcs: Vec<f64> = nodes.iter().map(|&x| arc.eval(x)).collect();
                    // |v| ≥ |arc| / max √g, so longer arcs lie outside the kernel support
                    let max_root = (1.0 + metric.amplitude.abs()).sqrt();
                    let cut = reach.min(kappa.r_out);
                    for i in 0..n {
                        for j in 0..n {
                            if arc.arc_between(arcs[i], arcs[j]).abs() > cut * max_root * (1.0 + 1e-12) {
                                continue;
                            }
                            let (q, v) = arc.weyl_inverse_arcs(arcs[i], arcs[j]);
                            matrix[(i, j)] = value(&[v], q)?;
                        }
                    }
                }
            }
            KernelData::Dense { matrix }
        }
        Family::LieGroup => match model.group.expect("group") {
            LieGroupKind::Circle => {
                let n = model.group_grid.as_ref().expect("circle grid").len();
                let values = (0..n)
                    .map(|k| value(&[2.0 * PI * circle_offset(k, n) as f64 / n as f64], 0.0))
                    .collect::<Result<_>>()?;
                KernelData::Circle { values }
            }
            LieGroupKind::Affine => KernelData::Affine(affine_kernel(model, obs, hbar, sign)?),
            LieGroupKind::Line => {
                return Err(Error::FamilyMismatch("the line group is only used inside actions".into()))
            }
        },
        Family::Transformation => {
            let action = model.action.expect("action");
            let base = &model.base;
            let nq = base.len();
            let periodic = base.kind == BaseKind::Circle;
            let h = if periodic { 2.0 * PI / nq as f64 } else { base.spacing() };
            let band = if periodic {
                nq
            } else {
                let b = (reach / h).ceil() as usize + 1;
                if b >= nq {
                    return Err(Error::SupportOverflow {
                        needed: reach,
                        available: 2.0 * base.half_width,
                    });
                }
                b
            };
            let rows = if periodic { nq } else { 2 * band + 1 };
            let mut values = vec![ZERO; rows * nq];
            for r in 0..rows {
                let x = if periodic {
                    circle_offset(r, nq) as f64 * h
                } else {
                    (r as f64 - band as f64) * h
                };
                let half = model.group.expect("group").exp(&[-0.5 * x]);
                for j in 0..nq {
                    let q0 = action.act(&half, base.samples[j]);
                    values[r * nq + j] = value(&[x], q0)?;
                }
            }
            KernelData::Action { band: if periodic { 0 } else { band }, periodic, values }
        }
    };
    Ok(KernelElement {
        model: Arc::new(model.clone()),
        hbar,
        sign,
        data,
        selfadjoint: f.selfadjoint,
    })
}

/// Quantization on a transformation groupoid, `f̀` taken fiberwise in the
/// Lie algebra variable and evaluated at `Exp(−X/2)·q`.
pub fn transform_groupoid_quantize(
    model: &GroupoidModel,
    f: &PWObservable,
    hbar: f64,
    sign: Sign,
    kappa: &Cutoff,
) -> Result<KernelElement> {
    if model.family != Family::Transformation {
        return Err(Error::FamilyMismatch(format!("{} is not a transformation groupoid", model.name)));
    }
    weyl_quantize(model, f, hbar, sign, kappa)
}

fn affine_kernel(model: &GroupoidModel, obs: &Observable, hbar: f64, sign: Sign) -> Result<AffineKernel> {
    let grid = model.affine_grid.expect("affine grid");
    let s = sign.factor();
    let (s_lo, s_hi) = ((grid.theta_lo / hbar).ln(), (grid.theta_hi / hbar).ln());
    let ds = (s_hi - s_lo) / (grid.points - 1) as f64;
    let band = (hbar * obs.support[0] / ds).ceil() as usize + 1;
    // every kernel at one ħ shares the grid, whatever its band
    let len = grid.points;
    let s0 = s_lo;
    let mut out = AffineKernel::zeros(s0, ds, len, band, 0);
    let exps: Vec<f64> = (0..len).map(|i| (s0 + i as f64 * ds).exp()).collect();
    for (e, eps) in [1.0, -1.0].into_iter().enumerate() {
        for i in 0..len {
            let lo = i.saturating_sub(band);
            let hi = (i + band).min(len - 1);
            for j in lo..=hi {
                let d = j as isize - i as isize;
                let sd = d as f64 * ds;
                // sinh(s_d/2)/(s_d/2) and e^s φ(s_d) = (e^{s'} − e^s)/s_d, both symmetric in (s, s')
                let (pref, growth) = if d == 0 {
                    (1.0, exps[i])
                } else {
                    ((0.5 * sd).sinh() / (0.5 * sd), (exps[j] - exps[i]) / sd)
                };
                let p = obs.eval_partial_ft(s * sd / hbar, -s * eps * growth * hbar)?;
                out.set(e, i, j, p * (pref / hbar));
            }
        }
    }
    Ok(out)
}

/// `Q_0(f) = f`, sampled on the dual grid.
pub fn classical_section(model: &GroupoidModel, f: &PWObservable) -> KernelElement {
    KernelElement {
        model: Arc::new(model.clone()),
        hbar: 0.0,
        sign: Sign::default_for(model.family),
        data: KernelData::Classical {
            base_samples: f.base_samples.clone(),
            values: f.dual_samples.clone(),
        },
        selfadjoint: f.selfadjoint,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::make_pw_observable;
    use crate::geometry::{make_example, Resolution};
    use crate::observable::{BaseFactor, Term, DEFAULT_TRUNCATION};

    fn obs(alpha: f64, base: BaseFactor, n: usize) -> Observable {
        Observable::new(
            n,
            vec![Term::gauss(1.0, &vec![1; n], &vec![0.3; n], &vec![alpha; n], base)],
            Some(DEFAULT_TRUNCATION),
        )
        .unwrap()
    }

    #[test]
    fn cutoff_shape() {
        let m = make_example("group-u1", Resolution::new(64, 1.0)).unwrap();
        let k = build_cutoff(&m, 1.0, 2.0).unwrap();
        assert_eq!(k.eval(&[0.0]), 1.0);
        assert_eq!(k.eval(&[2.0]), 0.0);
        for x in [0.3, 1.2, 1.5, 1.9] {
            assert_eq!(k.eval(&[x]), k.eval(&[-x]));
            assert!((0.0..=1.0).contains(&k.eval(&[x])));
        }
        assert!(matches!(build_cutoff(&m, 2.0, 1.0), Err(Error::InvalidCutoff(_))));
        assert!(matches!(build_cutoff(&m, 1.0, 3.5), Err(Error::InvalidCutoff(_))));
        assert!(build_cutoff(&m, f64::INFINITY, f64::INFINITY).is_err());
        let flat = make_example("pair-flat-line", Resolution::new(33, 4.0)).unwrap();
        assert_eq!(build_cutoff(&flat, f64::INFINITY, f64::INFINITY).unwrap(), Cutoff::unit());
    }

    #[test]
    fn flat_kernel_matches_phase_space_integral() {
        let hbar = 0.3;
        let m = make_example("pair-flat-line", Resolution::new(41, 2.0)).unwrap();
        let f = obs(1.0, BaseFactor::Gauss { power: 1, center: 0.2, beta: 0.7 }, 1);
        let pw = make_pw_observable(&m, &f, 0.05).unwrap();
        let k = weyl_quantize(&m, &pw, hbar, Sign::Minus, &Cutoff::unit()).unwrap();
        let KernelData::Dense { matrix } = &k.data else { panic!() };
        for &(i, j) in &[(20usize, 20usize), (18, 22), (25, 21), (10, 11)] {
            let (x, y) = (m.base.samples[i], m.base.samples[j]);
            // (2πħ)^{-1} ∫ dp e^{ip(x-y)/ħ} f(p, (x+y)/2) by brute-force quadrature
            let n = 60000;
            let lim = 20.0;
            let dp = 2.0 * lim / n as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..=n {
                let p = -lim + t as f64 * dp;
                acc += f.eval(&[p], 0.5 * (x + y)) * Complex64::from_polar(1.0, p * (x - y) / hbar);
            }
            acc *= dp / (2.0 * PI * hbar);
            assert!((matrix[(i, j)] - acc).norm() < 1e-8, "{i},{j}");
        }
    }

    #[test]
    fn group_kernel_matches_fourier_integral() {
        let hbar = 0.2;
        let m = make_example("group-u1", Resolution::new(128, 1.0)).unwrap();
        let f = obs(0.25, BaseFactor::Const, 1);
        let pw = make_pw_observable(&m, &f, 0.05).unwrap();
        let kappa = default_cutoff(&m);
        let k = weyl_quantize(&m, &pw, hbar, Sign::Plus, &kappa).unwrap();
        let KernelData::Circle { values } = &k.data else { panic!() };
        for idx in [0usize, 3, 120] {
            let x = 2.0 * PI * circle_offset(idx, 128) as f64 / 128.0;
            let n = 80000;
            let lim = 40.0;
            let dt = 2.0 * lim / n as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..=n {
                let th = -lim + t as f64 * dt;
                acc += f.eval(&[th], 0.0) * Complex64::from_polar(1.0, th * x / hbar);
            }
            acc *= dt / (2.0 * PI * hbar);
            assert!((values[idx] - acc).norm() < 1e-9);
        }
    }

    #[test]
    fn kernels_independent_of_cutoff_below_threshold() {
        let m = make_example("transf-circle-rotation", Resolution::new(96, 1.0)).unwrap();
        let f = obs(0.25, BaseFactor::Fourier { mode: 1 }, 1);
        let pw = make_pw_observable(&m, &f, 0.05).unwrap();
        let k1 = build_cutoff(&m, 2.5, 3.0).unwrap();
        let k2 = build_cutoff(&m, 2.8, 3.05).unwrap();
        let a = weyl_quantize(&m, &pw, 0.3, Sign::Plus, &k1).unwrap();
        let b = weyl_quantize(&m, &pw, 0.3, Sign::Plus, &k2).unwrap();
        assert_eq!(a.data, b.data);
        // above the threshold the cutoff matters
        let c = weyl_quantize(&m, &pw, 1.2, Sign::Plus, &k1).unwrap();
        let d = weyl_quantize(&m, &pw, 1.2, Sign::Plus, &k2).unwrap();
        assert_ne!(c.data, d.data);
    }

    #[test]
    fn unit_value_of_transformation_kernel() {
        let hbar = 0.25;
        let m = make_example("transf-line-translation", Resolution::new(41, 3.0)).unwrap();
        let f = obs(1.0, BaseFactor::Gauss { power: 0, center: 0.0, beta: 0.5 }, 1);
        let pw = make_pw_observable(&m, &f, 0.05).unwrap();
        let k = transform_groupoid_quantize(&m, &pw, hbar, Sign::Plus, &Cutoff::unit()).unwrap();
        let KernelData::Action { band, values, .. } = &k.data else { panic!() };
        let nq = m.base.len();
        for j in [0usize, 17, 40] {
            let q = m.base.samples[j];
            let expected = f.eval_ft(&[0.0], q).unwrap() / hbar;
            assert_eq!(values[band * nq + j], expected);
        }
        let pair = make_example("pair-flat-line", Resolution::new(41, 3.0)).unwrap();
        assert!(transform_groupoid_quantize(&pair, &pw, hbar, Sign::Plus, &Cutoff::unit()).is_err());
    }

    #[test]
    fn invalid_hbar_and_overflow() {
        let m = make_example("pair-flat-line", Resolution::new(21, 1.0)).unwrap();
        let f = obs(1.0, BaseFactor::Const, 1);
        let pw = make_pw_observable(&m, &f, 0.1).unwrap();
        assert!(matches!(weyl_quantize(&m, &pw, 0.0, Sign::Minus, &Cutoff::unit()), Err(Error::InvalidHbar(_))));
        assert!(matches!(
            weyl_quantize(&m, &pw, 0.5, Sign::Minus, &Cutoff::unit()),
            Err(Error::SupportOverflow { .. })
        ));
    }

    #[test]
    fn classical_section_is_f() {
        let m = make_example("group-u1", Resolution::new(16, 1.0)).unwrap();
        let f = obs(0.25, BaseFactor::Const, 1);
        let pw = make_pw_observable(&m, &f, 0.05).unwrap();
        let c = classical_section(&m, &pw);
        assert_eq!(c.hbar, 0.0);
        let KernelData::Classical { values, .. } = &c.data else { panic!() };
        assert_eq!(values, &pw.dual_samples);
    }
}
