//! Convolution algebra operations and reduced-norm estimates.
//!
//! Norms come from truncated regular representations: on the source fiber
//! over a unit `u`, `a` acts by `(π_u(a)ξ)(γ) = ∫ a(γη⁻¹) ξ(η) dη`, and the
//! quadrature weights are absorbed symmetrically so that singular values of
//! the matrix are operator norms on a discrete `L²`.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::{ColRef, Mat};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::geometry::{ActionKind, BaseKind, GroupoidModel};
use crate::quantize::{circle_offset, AffineKernel, KernelData, KernelElement};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Relative Rayleigh-quotient stagnation used by [`reduced_norm`].
pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITER: usize = 10_000;
/// Largest dimension for which the dense fallback is attempted.
pub const DENSE_LIMIT: usize = 2048;

fn same_layout(a: &KernelElement, b: &KernelElement) -> Result<()> {
    if !Arc::ptr_eq(&a.model, &b.model) && *a.model != *b.model {
        return Err(Error::GridMismatch(format!(
            "kernels live on different discretizations of {} / {}",
            a.model.name, b.model.name
        )));
    }
    if a.hbar != b.hbar {
        return Err(Error::GridMismatch(format!("ħ mismatch: {} vs {}", a.hbar, b.hbar)));
    }
    Ok(())
}

fn spacing(model: &GroupoidModel) -> f64 {
    match model.base.kind {
        BaseKind::Circle => 2.0 * PI / model.base.len() as f64,
        _ => model.base.spacing(),
    }
}

fn action_index(band: usize, periodic: bool, n: usize, k: i64) -> Option<usize> {
    if periodic {
        Some(k.rem_euclid(n as i64) as usize)
    } else if k.unsigned_abs() as usize <= band {
        Some((k + band as i64) as usize)
    } else {
        None
    }
}

fn action_get(values: &[Complex64], band: usize, periodic: bool, n: usize, k: i64, j: i64) -> Complex64 {
    let j = if periodic {
        j.rem_euclid(n as i64)
    } else if j < 0 || j >= n as i64 {
        return ZERO;
    } else {
        j
    };
    match action_index(band, periodic, n, k) {
        Some(r) => values[r * n + j as usize],
        None => ZERO,
    }
}

/// `(a*b)(γ) = ∫ a(γγ₁) b(γ₁⁻¹) dμ^t(γ₁)` by quadrature.
pub fn convolve(a: &KernelElement, b: &KernelElement) -> Result<KernelElement> {
    same_layout(a, b)?;
    let model = &a.model;
    let data = match (&a.data, &b.data) {
        (KernelData::Dense { matrix: ma }, KernelData::Dense { matrix: mb }) => {
            let w = &model.base.weights;
            let n = ma.nrows();
            let (ba, bb) = (bandwidth(ma), bandwidth(mb));
            if 4 * (ba + bb) < n {
                // bands are cyclic, so wrapped (circle) kernels take this path too
                let (la, lb) = (Banded::from_mat(ma, ba), Banded::from_mat(mb, bb));
                let (wa, wb) = (la.width(), lb.width());
                let mut out = Mat::<Complex64>::zeros(n, n);
                for i in 0..n {
                    for (sa, j) in la.columns(i) {
                        let aij = la.rows[i * wa + sa] * w[j];
                        if aij == ZERO {
                            continue;
                        }
                        for (sb, k) in lb.columns(j) {
                            out[(i, k)] += aij * lb.rows[j * wb + sb];
                        }
                    }
                }
                KernelData::Dense { matrix: out }
            } else {
                let scaled = Mat::<Complex64>::from_fn(n, ma.ncols(), |i, j| ma[(i, j)] * w[j]);
                KernelData::Dense { matrix: &scaled * mb }
            }
        }
        (KernelData::Circle { values: va }, KernelData::Circle { values: vb }) => {
            let n = va.len();
            let mut planner = FftPlanner::new();
            let (fwd, inv) = (planner.plan_fft_forward(n), planner.plan_fft_inverse(n));
            let (mut fa, mut fb) = (va.clone(), vb.clone());
            fwd.process(&mut fa);
            fwd.process(&mut fb);
            let mut prod: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
            inv.process(&mut prod);
            let scale = 2.0 * PI / (n as f64 * n as f64);
            prod.iter_mut().for_each(|v| *v *= scale);
            KernelData::Circle { values: prod }
        }
        (
            KernelData::Action { band: ba, periodic, values: va },
            KernelData::Action { band: bb, values: vb, .. },
        ) => {
            let n = model.base.len();
            let h = spacing(model);
            let shifts = model.action != Some(ActionKind::Trivial);
            let band = if *periodic { 0 } else { (ba + bb).min(n - 1) };
            let rows = if *periodic { n } else { 2 * band + 1 };
            let offset = |r: usize, band: usize| if *periodic { circle_offset(r, n) } else { r as i64 - band as i64 };
            // offsets carrying a nonzero entry of `a`; the sum runs over x + y among them
            let support: Vec<i64> = va
                .chunks(n)
                .enumerate()
                .filter(|(_, row)| row.iter().any(|z| *z != ZERO))
                .map(|(r, _)| offset(r, *ba))
                .collect();
            let mut values = vec![ZERO; rows * n];
            values.par_chunks_mut(n).enumerate().for_each(|(r, row)| {
                let x = offset(r, band);
                for (j, out) in row.iter_mut().enumerate() {
                    let mut acc = ZERO;
                    for &xa in &support {
                        let y = xa - x;
                        let bv_src = if shifts { j as i64 - xa } else { j as i64 };
                        let bv = action_get(vb, *bb, *periodic, n, -y, bv_src);
                        if bv == ZERO {
                            continue;
                        }
                        acc += action_get(va, *ba, *periodic, n, xa, j as i64) * bv;
                    }
                    *out = acc * h;
                }
            });
            KernelData::Action { band, periodic: *periodic, values }
        }
        (KernelData::Affine(ka), KernelData::Affine(kb)) => KernelData::Affine(affine_product(ka, kb)),
        (KernelData::Classical { base_samples, values: va }, KernelData::Classical { values: vb, .. }) => {
            // at ħ = 0 the product is pointwise on 𝔊* (convolution on 𝔊)
            KernelData::Classical {
                base_samples: base_samples.clone(),
                values: va
                    .iter()
                    .zip(vb)
                    .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).collect())
                    .collect(),
            }
        }
        _ => return Err(Error::GridMismatch("kernel storage kinds differ".into())),
    };
    Ok(KernelElement {
        model: a.model.clone(),
        hbar: a.hbar,
        sign: a.sign,
        data,
        selfadjoint: false,
    })
}

fn affine_product(a: &AffineKernel, b: &AffineKernel) -> AffineKernel {
    let band = a.band + b.band;
    let valid = a.valid_from.max(b.valid_from) + a.band;
    let mut out = AffineKernel::zeros(a.s0, a.ds, a.len, band, valid.min(a.len));
    let w = 2 * band + 1;
    for e in 0..2 {
        out.parts[e].par_chunks_mut(w).enumerate().for_each(|(i, row)| {
            let lo = i.saturating_sub(band);
            let hi = (i + band).min(a.len - 1);
            for j in lo..=hi {
                let m_lo = i.saturating_sub(a.band).max(j.saturating_sub(b.band));
                let m_hi = (i + a.band).min(j + b.band).min(a.len - 1);
                let mut acc = ZERO;
                for m in m_lo..=m_hi.max(m_lo) {
                    if m > m_hi {
                        break;
                    }
                    acc += a.get(e, i, m) * b.get(e, m, j);
                }
                row[j + band - i] = acc * a.ds;
            }
        });
    }
    out
}

/// `a*(γ) = conj a(γ⁻¹)`.
pub fn involute(a: &KernelElement) -> KernelElement {
    let model = &a.model;
    let data = match &a.data {
        KernelData::Dense { matrix } => KernelData::Dense {
            matrix: matrix.adjoint().to_owned(),
        },
        KernelData::Circle { values } => {
            let n = values.len();
            KernelData::Circle {
                values: (0..n).map(|k| values[(n - k) % n].conj()).collect(),
            }
        }
        KernelData::Action { band, periodic, values } => {
            let n = model.base.len();
            let rows = values.len() / n;
            let shifts = model.action != Some(ActionKind::Trivial);
            let mut out = vec![ZERO; values.len()];
            for r in 0..rows {
                let x = if *periodic { circle_offset(r, n) } else { r as i64 - *band as i64 };
                for j in 0..n {
                    let src = if shifts { j as i64 - x } else { j as i64 };
                    out[r * n + j] = action_get(values, *band, *periodic, n, -x, src).conj();
                }
            }
            KernelData::Action { band: *band, periodic: *periodic, values: out }
        }
        KernelData::Affine(k) => {
            let mut out = AffineKernel::zeros(k.s0, k.ds, k.len, k.band, k.valid_from);
            let w = 2 * k.band + 1;
            for e in 0..2 {
                for i in 0..k.len {
                    let lo = i.saturating_sub(k.band);
                    let hi = (i + k.band).min(k.len - 1);
                    for j in lo..=hi {
                        out.parts[e][i * w + j + k.band - i] = k.get(e, j, i).conj();
                    }
                }
            }
            KernelData::Affine(out)
        }
        KernelData::Classical { base_samples, values } => KernelData::Classical {
            base_samples: base_samples.clone(),
            values: values.iter().map(|v| v.iter().map(|z| z.conj()).collect()).collect(),
        },
    };
    KernelElement {
        model: a.model.clone(),
        hbar: a.hbar,
        sign: a.sign,
        data,
        selfadjoint: a.selfadjoint,
    }
}

/// `α a + β b`.
pub fn combine(alpha: Complex64, a: &KernelElement, beta: Complex64, b: &KernelElement) -> Result<KernelElement> {
    same_layout(a, b)?;
    let lin = |x: &[Complex64], y: &[Complex64]| -> Vec<Complex64> {
        x.iter().zip(y).map(|(p, q)| alpha * p + beta * q).collect()
    };
    let data = match (&a.data, &b.data) {
        (KernelData::Dense { matrix: ma }, KernelData::Dense { matrix: mb }) => KernelData::Dense {
            matrix: Mat::from_fn(ma.nrows(), ma.ncols(), |i, j| alpha * ma[(i, j)] + beta * mb[(i, j)]),
        },
        (KernelData::Circle { values: va }, KernelData::Circle { values: vb }) => {
            KernelData::Circle { values: lin(va, vb) }
        }
        (
            KernelData::Action { band: ba, periodic, values: va },
            KernelData::Action { band: bb, values: vb, .. },
        ) => {
            let n = a.model.base.len();
            if *periodic {
                KernelData::Action { band: 0, periodic: true, values: lin(va, vb) }
            } else {
                let band = (*ba).max(*bb);
                let mut values = vec![ZERO; (2 * band + 1) * n];
                for r in 0..2 * band + 1 {
                    let x = r as i64 - band as i64;
                    for j in 0..n {
                        values[r * n + j] = alpha * action_get(va, *ba, false, n, x, j as i64)
                            + beta * action_get(vb, *bb, false, n, x, j as i64);
                    }
                }
                KernelData::Action { band, periodic: false, values }
            }
        }
        (KernelData::Affine(ka), KernelData::Affine(kb)) => {
            let band = ka.band.max(kb.band);
            let (wa, wb) = (ka.widened(band), kb.widened(band));
            let mut out = AffineKernel::zeros(ka.s0, ka.ds, ka.len, band, ka.valid_from.max(kb.valid_from));
            for e in 0..2 {
                out.parts[e] = lin(&wa.parts[e], &wb.parts[e]);
            }
            KernelData::Affine(out)
        }
        (KernelData::Classical { base_samples, values: va }, KernelData::Classical { values: vb, .. }) => {
            KernelData::Classical {
                base_samples: base_samples.clone(),
                values: va.iter().zip(vb).map(|(x, y)| lin(x, y)).collect(),
            }
        }
        _ => return Err(Error::GridMismatch("kernel storage kinds differ".into())),
    };
    Ok(KernelElement {
        model: a.model.clone(),
        hbar: a.hbar,
        sign: a.sign,
        data,
        selfadjoint: false,
    })
}

pub fn scale(c: Complex64, a: &KernelElement) -> KernelElement {
    let zero = Complex64::new(0.0, 0.0);
    combine(c, a, zero, a).expect("same layout")
}

/// A finite matrix realizing the regular representation at one unit.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub unit: f64,
    /// `W^{1/2} A W^{1/2}`.
    pub matrix: Mat<Complex64>,
    pub weights: Vec<f64>,
}

impl OperatorMatrix {
    /// Raw kernel entry `A[i, j]` with the weights divided back out.
    pub fn raw(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[(i, j)] / (self.weights[i] * self.weights[j]).sqrt()
    }
}

/// Units at which [`reduced_norm`] evaluates representations. For the
/// affine group the labels `±1` stand for the two irreducible components.
pub fn sample_units(a: &KernelElement) -> Vec<f64> {
    let m = &a.model;
    match &a.data {
        KernelData::Affine(_) => vec![1.0, -1.0],
        KernelData::Action { .. } if m.action == Some(ActionKind::Trivial) => {
            let n = m.base.len();
            let step = (n / 8).max(1);
            (0..n).step_by(step).map(|j| m.base.samples[j]).collect()
        }
        KernelData::Circle { .. } => vec![0.0],
        _ => vec![m.base.samples[m.base.len() / 2]],
    }
}

/// Matrix of `π_q(a)`.
pub fn represent(a: &KernelElement, q: f64) -> Result<OperatorMatrix> {
    let m = &a.model;
    match &a.data {
        KernelData::Dense { matrix } => {
            let w = &m.base.weights;
            let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
            Ok(OperatorMatrix {
                unit: q,
                matrix: Mat::from_fn(matrix.nrows(), matrix.ncols(), |i, j| matrix[(i, j)] * (sw[i] * sw[j])),
                weights: w.clone(),
            })
        }
        KernelData::Circle { values } => {
            let n = values.len();
            let w = 2.0 * PI / n as f64;
            Ok(OperatorMatrix {
                unit: q,
                matrix: Mat::from_fn(n, n, |i, j| values[(i + n - j) % n] * w),
                weights: vec![w; n],
            })
        }
        KernelData::Action { band, periodic, values } => {
            let n = m.base.len();
            let h = spacing(m);
            let matrix = if m.action == Some(ActionKind::Trivial) {
                let j0 = m.base.nearest_index(q) as i64;
                Mat::from_fn(n, n, |i, j| action_get(values, *band, *periodic, n, i as i64 - j as i64, j0) * h)
            } else {
                Mat::from_fn(n, n, |i, j| {
                    action_get(values, *band, *periodic, n, i as i64 - j as i64, i as i64) * h
                })
            };
            Ok(OperatorMatrix { unit: q, matrix, weights: vec![h; n] })
        }
        KernelData::Affine(k) => {
            let e = if q >= 0.0 { 0 } else { 1 };
            let v = k.valid_from;
            let dim = k.len - v;
            Ok(OperatorMatrix {
                unit: q,
                matrix: Mat::from_fn(dim, dim, |i, j| k.get(e, i + v, j + v) * k.ds),
                weights: vec![k.ds; dim],
            })
        }
        KernelData::Classical { .. } => Err(Error::FamilyMismatch(
            "the classical section is a function on 𝔊*, not a convolution kernel".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMethod {
    Power,
    Dense,
    Sup,
    /// Power iteration hit the cap above the dense limit.
    Unconverged,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub method: NormMethod,
}

fn random_unit_vector(n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let nrm = l2(&v);
    if nrm > 0.0 {
        v.iter_mut().for_each(|z| *z /= nrm);
    }
    v
}

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest cyclic distance `min(|i - j|, n - |i - j|)` over nonzero entries
/// of a square matrix.
pub fn bandwidth(m: &Mat<Complex64>) -> usize {
    let n = m.nrows();
    let mut b = 0;
    for j in 0..m.ncols() {
        for i in 0..n {
            if m[(i, j)] != ZERO {
                let d = i.abs_diff(j);
                b = b.max(d.min(n - d));
            }
        }
    }
    b
}

/// A square matrix stored by cyclic diagonals `-b..=b`, row by row. Line
/// kernels are the special case with empty corners.
struct Banded {
    n: usize,
    b: usize,
    rows: Vec<Complex64>,
}

impl Banded {
    fn width(&self) -> usize {
        2 * self.b + 1
    }

    /// Columns `(slot, j)` of row `i`.
    fn columns(&self, i: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (n, b) = (self.n, self.b);
        (0..2 * b + 1).map(move |slot| (slot, (i + n + slot - b) % n))
    }

    fn from_mat(m: &Mat<Complex64>, b: usize) -> Self {
        let n = m.nrows();
        let mut out = Self { n, b, rows: vec![ZERO; n * (2 * b + 1)] };
        let w = out.width();
        for i in 0..n {
            let cols: Vec<(usize, usize)> = out.columns(i).collect();
            for (slot, j) in cols {
                out.rows[i * w + slot] = m[(i, j)];
            }
        }
        out
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let w = self.width();
        (0..self.n)
            .map(|i| self.columns(i).map(|(slot, j)| self.rows[i * w + slot] * x[j]).sum())
            .collect()
    }

    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        let w = self.width();
        let mut out = vec![ZERO; self.n];
        for i in 0..self.n {
            for (slot, j) in self.columns(i) {
                out[j] += self.rows[i * w + slot].conj() * x[i];
            }
        }
        out
    }
}

/// Largest singular value by power iteration on `M*M`, falling back to a
/// dense decomposition if the iteration does not stagnate in time. Banded
/// matrices are applied by diagonals.
pub fn spectral_norm(m: &Mat<Complex64>, seed: u64) -> Result<NormEstimate> {
    let n = m.ncols();
    if n == 0 || m.nrows() == 0 {
        return Ok(NormEstimate { value: 0.0, iterations: 0, method: NormMethod::Power });
    }
    let b = if m.nrows() == n { bandwidth(m) } else { n };
    let banded = (4 * b < n).then(|| Banded::from_mat(m, b));
    let adj = m.adjoint().to_owned();
    let apply = |v: &[Complex64]| -> Vec<Complex64> {
        match &banded {
            Some(band) => band.apply(v),
            None => {
                let w = m * ColRef::from_slice(v);
                w.iter().copied().collect()
            }
        }
    };
    let apply_adjoint = |v: &[Complex64]| -> Vec<Complex64> {
        match &banded {
            Some(band) => band.apply_adjoint(v),
            None => {
                let w = &adj * ColRef::from_slice(v);
                w.iter().copied().collect()
            }
        }
    };
    let mut v = random_unit_vector(n, seed);
    let mut history: Vec<f64> = Vec::new();
    for it in 0..POWER_MAX_ITER {
        let w = apply(&v);
        let lambda = w.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if lambda == 0.0 {
            return Ok(NormEstimate { value: 0.0, iterations: it + 1, method: NormMethod::Power });
        }
        let mut u = apply_adjoint(&w);
        let nrm = l2(&u);
        u.iter_mut().for_each(|z| *z /= nrm);
        v = u;
        history.push(lambda);
        if it >= 10 {
            let old = history[it - 10];
            if (lambda - old).abs() < POWER_TOL * lambda {
                return Ok(NormEstimate {
                    value: lambda.sqrt(),
                    iterations: it + 1,
                    method: NormMethod::Power,
                });
            }
        }
    }
    if n <= DENSE_LIMIT {
        return Ok(NormEstimate {
            value: dense_spectral_norm(m)?,
            iterations: POWER_MAX_ITER,
            method: NormMethod::Dense,
        });
    }
    Ok(NormEstimate {
        value: history.last().copied().unwrap_or(0.0).sqrt(),
        iterations: POWER_MAX_ITER,
        method: NormMethod::Unconverged,
    })
}

/// Largest singular value from a full decomposition.
pub fn dense_spectral_norm(m: &Mat<Complex64>) -> Result<f64> {
    let sv = m
        .singular_values()
        .map_err(|e| Error::Linalg(format!("singular value decomposition failed: {e:?}")))?;
    Ok(sv.into_iter().fold(0.0, f64::max))
}

/// Sup over sampled units of the truncated regular representation norms;
/// at `ħ = 0`, the sup norm on the dual grid.
pub fn reduced_norm(a: &KernelElement) -> Result<f64> {
    Ok(reduced_norm_estimate(a, 0)?.value)
}

pub fn reduced_norm_estimate(a: &KernelElement, seed: u64) -> Result<NormEstimate> {
    if let KernelData::Classical { values, .. } = &a.data {
        let value = values.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        return Ok(NormEstimate { value, iterations: 0, method: NormMethod::Sup });
    }
    let units = sample_units(a);
    let estimates: Vec<NormEstimate> = units
        .par_iter()
        .enumerate()
        .map(|(k, &q)| spectral_norm(&represent(a, q)?.matrix, seed.wrapping_add(k as u64)))
        .collect::<Result<_>>()?;
    Ok(estimates
        .into_iter()
        .fold(NormEstimate { value: 0.0, iterations: 0, method: NormMethod::Power }, |best, e| {
            if e.value > best.value {
                e
            } else {
                best
            }
        }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::make_pw_observable;
    use crate::geometry::{make_example, Resolution};
    use crate::observable::{BaseFactor, Observable, Term, DEFAULT_TRUNCATION};
    use crate::poisson::Sign;
    use crate::quantize::{default_cutoff, weyl_quantize};

    fn kernel(name: &str, res: Resolution, hbar: f64, center: f64, base: BaseFactor) -> KernelElement {
        let m = make_example(name, res).unwrap();
        let n = m.fiber_dim;
        let f = Observable::new(
            n,
            vec![
                Term::gauss(1.0, &vec![1; n], &vec![center; n], &vec![0.25; n], base),
                Term::gauss(0.5, &vec![0; n], &vec![-center; n], &vec![0.5; n], BaseFactor::Const),
            ],
            Some(DEFAULT_TRUNCATION),
        )
        .unwrap();
        let pw = make_pw_observable(&m, &f, 0.1).unwrap();
        weyl_quantize(&m, &pw, hbar, Sign::default_for(m.family), &default_cutoff(&m)).unwrap()
    }

    fn cases() -> Vec<(&'static str, Resolution, BaseFactor)> {
        vec![
            ("pair-flat-line", Resolution::new(81, 4.0), BaseFactor::Gauss { power: 0, center: 0.0, beta: 0.5 }),
            ("pair-circle-metric", Resolution::new(64, 1.0), BaseFactor::Fourier { mode: 1 }),
            ("group-u1", Resolution::new(64, 1.0), BaseFactor::Const),
            ("transf-line-translation", Resolution::new(81, 4.0), BaseFactor::Gauss { power: 0, center: 0.0, beta: 0.5 }),
            ("transf-line-trivial", Resolution::new(41, 4.0), BaseFactor::Gauss { power: 0, center: 0.0, beta: 0.5 }),
            ("transf-circle-rotation", Resolution::new(64, 1.0), BaseFactor::Fourier { mode: 1 }),
            ("group-affine", Resolution::new(120, 4.0), BaseFactor::Const),
        ]
    }

    fn diff(a: &KernelElement, b: &KernelElement) -> f64 {
        reduced_norm(&combine(Complex64::new(1.0, 0.0), a, Complex64::new(-1.0, 0.0), b).unwrap()).unwrap()
    }

    #[test]
    fn representation_is_multiplicative_and_star_preserving() {
        for (name, res, base) in cases() {
            let a = kernel(name, res, 0.4, 0.3, base);
            let b = kernel(name, res, 0.4, -0.2, base);
            let ab = convolve(&a, &b).unwrap();
            for q in sample_units(&ab) {
                let (ra, rb, rab) = (represent(&a, q).unwrap(), represent(&b, q).unwrap(), represent(&ab, q).unwrap());
                let prod = &ra.matrix * &rb.matrix;
                let v = ab_valid_offset(&ab, &a);
                let mut err: f64 = 0.0;
                for i in 0..rab.matrix.nrows() {
                    for j in 0..rab.matrix.ncols() {
                        err = err.max((rab.matrix[(i, j)] - prod[(i + v, j + v)]).norm());
                    }
                }
                // truncations of a noncompact group are multiplicative only away from the edges
                if !matches!(name, "group-affine" | "transf-line-trivial") {
                    assert!(err < 1e-12, "{name}: {err}");
                }
                let rs = represent(&involute(&a), q).unwrap();
                let adj = ra.matrix.adjoint().to_owned();
                let err = (0..rs.matrix.nrows())
                    .flat_map(|i| (0..rs.matrix.ncols()).map(move |j| (i, j)))
                    .map(|(i, j)| (rs.matrix[(i, j)] - adj[(i, j)]).norm())
                    .fold(0.0, f64::max);
                assert!(err < 1e-14, "{name}: {err}");
            }
        }
    }

    fn ab_valid_offset(ab: &KernelElement, a: &KernelElement) -> usize {
        match (&ab.data, &a.data) {
            (KernelData::Affine(x), KernelData::Affine(y)) => x.valid_from - y.valid_from,
            _ => 0,
        }
    }

    #[test]
    fn associativity_and_antihomomorphism() {
        for (name, res, base) in cases() {
            let a = kernel(name, res, 0.4, 0.3, base);
            let b = kernel(name, res, 0.4, -0.2, base);
            let c = kernel(name, res, 0.4, 0.1, base);
            let left = convolve(&convolve(&a, &b).unwrap(), &c).unwrap();
            let right = convolve(&a, &convolve(&b, &c).unwrap()).unwrap();
            let scale = reduced_norm(&left).unwrap();
            assert!(diff(&left, &right) < 1e-10 * scale.max(1.0), "{name}");
            let s1 = involute(&convolve(&a, &b).unwrap());
            let s2 = convolve(&involute(&b), &involute(&a)).unwrap();
            assert!(diff(&s1, &s2) < 1e-10 * scale.max(1.0), "{name}");
        }
    }

    #[test]
    fn norms_cstar_identity_isometry_submultiplicativity() {
        for (name, res, base) in cases() {
            let a = kernel(name, res, 0.4, 0.3, base);
            let b = kernel(name, res, 0.4, -0.2, base);
            let na = reduced_norm(&a).unwrap();
            let nb = reduced_norm(&b).unwrap();
            assert!(na > 0.0);
            let ns = reduced_norm(&involute(&a)).unwrap();
            assert!(((ns - na) / na).abs() < 1e-10, "{name}: {ns} vs {na}");
            let nab = reduced_norm(&convolve(&a, &b).unwrap()).unwrap();
            assert!(nab <= na * nb + 1e-8, "{name}");
            if matches!(name, "pair-flat-line" | "group-u1" | "pair-circle-metric") {
                let nsa = reduced_norm(&convolve(&involute(&a), &a).unwrap()).unwrap();
                assert!(((nsa - na * na) / (na * na)).abs() < 1e-8, "{name}");
            }
        }
    }

    #[test]
    fn power_iteration_matches_dense() {
        for (name, res, base) in cases() {
            let a = kernel(name, res, 0.4, 0.3, base);
            for q in sample_units(&a) {
                let m = represent(&a, q).unwrap().matrix;
                let p = spectral_norm(&m, 7).unwrap().value;
                let d = dense_spectral_norm(&m).unwrap();
                assert!(((p - d) / d).abs() < 1e-8, "{name}: {p} vs {d}");
            }
        }
    }

    #[test]
    fn circle_group_norm_is_max_fourier_coefficient() {
        let a = kernel("group-u1", Resolution::new(128, 1.0), 0.2, 0.3, BaseFactor::Const);
        let KernelData::Circle { values } = &a.data else { panic!() };
        let n = values.len();
        let coeffs = crate::fourier::circle_coefficients(values);
        let oracle = coeffs.iter().map(|c| c.norm() * 2.0 * PI).fold(0.0, f64::max);
        let _ = n;
        let norm = reduced_norm(&a).unwrap();
        assert!(((norm - oracle) / oracle).abs() < 1e-8, "{norm} vs {oracle}");
    }

    #[test]
    fn banded_paths_match_dense() {
        for (name, points) in [("pair-flat-line", 401), ("pair-circle-metric", 400)] {
            let res = Resolution::new(points, 4.0);
            let a = kernel(name, res, 0.05, 0.3, BaseFactor::Const);
            let b = kernel(name, res, 0.05, -0.2, BaseFactor::Const);
            let (KernelData::Dense { matrix: ma }, KernelData::Dense { matrix: mb }) = (&a.data, &b.data) else {
                panic!()
            };
            assert!(4 * (bandwidth(ma) + bandwidth(mb)) < ma.nrows(), "{name}");
            let w = &a.model.base.weights;
            let scaled = Mat::<Complex64>::from_fn(ma.nrows(), ma.ncols(), |i, j| ma[(i, j)] * w[j]);
            let dense = &scaled * mb;
            let KernelData::Dense { matrix: banded } = convolve(&a, &b).unwrap().data else { panic!() };
            let err = (0..dense.nrows())
                .flat_map(|i| (0..dense.ncols()).map(move |j| (i, j)))
                .map(|(i, j)| (dense[(i, j)] - banded[(i, j)]).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-12, "{name}: {err}");
            let m = represent(&a, a.model.base.samples[0]).unwrap().matrix;
            let (p, d) = (spectral_norm(&m, 3).unwrap().value, dense_spectral_norm(&m).unwrap());
            assert!(((p - d) / d).abs() < 1e-8, "{name}: {p} vs {d}");
        }
    }

    #[test]
    fn rank_one_pair_composition() {
        let m = Arc::new(make_example("pair-flat-line", Resolution::new(21, 2.0)).unwrap());
        let n = m.base.len();
        let xs = m.base.samples.clone();
        let mk = |f: &dyn Fn(f64, f64) -> Complex64| KernelElement {
            model: m.clone(),
            hbar: 0.5,
            sign: Sign::Minus,
            data: KernelData::Dense { matrix: Mat::from_fn(n, n, |i, j| f(xs[i], xs[j])) },
            selfadjoint: false,
        };
        let a = mk(&|x, y| Complex64::new(x.cos(), 0.0) * Complex64::new(1.0, y));
        let b = mk(&|y, z| Complex64::new(y * y, 0.0) * Complex64::new(z.sin(), 0.0));
        let c = convolve(&a, &b).unwrap();
        let inner: Complex64 = (0..n).map(|k| Complex64::new(1.0, xs[k]) * xs[k] * xs[k] * m.base.weights[k]).sum();
        let KernelData::Dense { matrix } = &c.data else { panic!() };
        for i in 0..n {
            for j in 0..n {
                let exact = inner * xs[i].cos() * xs[j].sin();
                assert!((matrix[(i, j)] - exact).norm() < 1e-12);
            }
        }
        let zero = scale(Complex64::new(0.0, 0.0), &a);
        assert_eq!(reduced_norm(&zero).unwrap(), 0.0);
    }

    #[test]
    fn trivial_action_blocks() {
        let a = kernel("transf-line-trivial", Resolution::new(41, 4.0), 0.4, 0.3, BaseFactor::Gauss { power: 0, center: 0.0, beta: 0.5 });
        let KernelData::Action { band, values, .. } = &a.data else { panic!() };
        let m = &a.model;
        let n = m.base.len();
        let h = m.base.spacing();
        let q = m.base.samples[13];
        let rep = represent(&a, q).unwrap();
        for i in 0..n {
            for j in 0..n {
                let k = i as i64 - j as i64;
                let expect = if k.unsigned_abs() as usize <= *band {
                    values[(k + *band as i64) as usize * n + 13] * h
                } else {
                    Complex64::new(0.0, 0.0)
                };
                assert_eq!(rep.matrix[(i, j)], expect);
            }
        }
    }

    #[test]
    fn mismatched_hbar_rejected() {
        let a = kernel("group-u1", Resolution::new(64, 1.0), 0.4, 0.3, BaseFactor::Const);
        let b = kernel("group-u1", Resolution::new(64, 1.0), 0.2, 0.3, BaseFactor::Const);
        assert!(matches!(convolve(&a, &b), Err(Error::GridMismatch(_))));
    }
}
