//! Fiberwise Fourier transform between functions on 𝔊 and on 𝔊*.
//!
//! Grids are uniform and symmetric: `X_k = (k - N/2) h` and the dual grid
//! `θ_j = (j - N/2) Δθ` with `Δθ = 2π / (N h)`. With these choices the sampled
//! pair
//!
//! `f(θ_j) = Σ_k h e^{-iθ_j X_k} f̀(X_k)`,
//! `f̀(X_k) = Σ_j Δθ/(2π) e^{iθ_j X_k} f(θ_j)`
//!
//! is an exact inverse pair, so a roundtrip is limited only by rounding.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::geometry::GroupoidModel;
use crate::observable::Observable;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberGrid {
    /// Samples per fiber coordinate.
    pub points: usize,
    pub spacing: f64,
    pub dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformPath {
    Fft,
    Direct,
}

impl FiberGrid {
    pub fn new(points: usize, spacing: f64, dim: usize) -> Result<Self> {
        if points < 2 || points % 2 == 1 {
            return Err(Error::GridMismatch("fiber grid needs an even point count ≥ 2".into()));
        }
        if !(spacing > 0.0) || dim == 0 || dim > 2 {
            return Err(Error::GridMismatch(format!(
                "fiber grid spacing {spacing} / dimension {dim} not supported"
            )));
        }
        Ok(Self { points, spacing, dim })
    }

    /// Smallest grid with the given spacing whose window contains `support`
    /// with at least `margin` spare samples on each side.
    pub fn covering(support: &[f64], spacing: f64, margin: usize) -> Result<Self> {
        let r = support.iter().cloned().fold(0.0, f64::max);
        if !r.is_finite() {
            return Err(Error::NotPaleyWiener("unbounded fiber support".into()));
        }
        let half = (r / spacing).ceil() as usize + margin + 1;
        Self::new(2 * half, spacing, support.len())
    }

    pub fn coord(&self, k: usize) -> f64 {
        (k as f64 - (self.points / 2) as f64) * self.spacing
    }

    pub fn dual_spacing(&self) -> f64 {
        2.0 * PI / (self.points as f64 * self.spacing)
    }

    pub fn dual_coord(&self, j: usize) -> f64 {
        (j as f64 - (self.points / 2) as f64) * self.dual_spacing()
    }

    /// Largest `|X|` on the grid.
    pub fn half_width(&self) -> f64 {
        (self.points / 2) as f64 * self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Multi-index of a flat sample index (first coordinate varies slowest).
    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        let mut rest = flat;
        for d in (0..self.dim).rev() {
            out[d] = rest % self.points;
            rest /= self.points;
        }
        out
    }

    pub fn fiber_point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).into_iter().map(|k| self.coord(k)).collect()
    }

    pub fn dual_point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).into_iter().map(|k| self.dual_coord(k)).collect()
    }

    /// Flat index of the mirror sample `-X` (the first row has no mirror).
    pub fn mirror(&self, flat: usize) -> Option<usize> {
        let idx = self.multi_index(flat);
        let mut out = 0;
        for k in idx {
            if k == 0 {
                return None;
            }
            out = out * self.points + (self.points - k);
        }
        Some(out)
    }
}

fn check_support(grid: &FiberGrid, values: &[Complex64]) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "expected {} samples, got {}",
            grid.len(),
            values.len()
        )));
    }
    // the outermost ring must vanish, otherwise the periodic extension aliases
    for (flat, v) in values.iter().enumerate() {
        if v.norm() != 0.0 {
            let idx = grid.multi_index(flat);
            if idx.iter().any(|&k| k <= 1 || k >= grid.points - 1) {
                return Err(Error::SupportTouchesBoundary);
            }
        }
    }
    Ok(())
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Plans {
    let mut planner = FftPlanner::new();
    Plans {
        forward: planner.plan_fft_forward(n),
        inverse: planner.plan_fft_inverse(n),
    }
}

/// Centered 1-D DFT `out_j = Σ_k e^{∓2πi (j-N/2)(k-N/2)/N} in_k`. Rotating by
/// `N/2` before and after a plain DFT is exact because both exponents are
/// only needed mod `N`.
fn centered_dft(line: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
    let half = line.len() / 2;
    line.rotate_left(half);
    fft.process(line);
    line.rotate_right(half);
}

fn apply_along_axes(grid: &FiberGrid, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
    let n = grid.points;
    match grid.dim {
        1 => centered_dft(data, fft),
        2 => {
            for row in data.chunks_mut(n) {
                centered_dft(row, fft);
            }
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            for c in 0..n {
                for r in 0..n {
                    col[r] = data[r * n + c];
                }
                centered_dft(&mut col, fft);
                for r in 0..n {
                    data[r * n + c] = col[r];
                }
            }
        }
        _ => unreachable!("fiber grids have dimension 1 or 2"),
    }
}

/// Sampled forward transform `f(θ) = ∫ e^{-iθX} f̀(X) dX` on one fiber.
pub fn fiber_fourier(grid: &FiberGrid, grave: &[Complex64], path: TransformPath) -> Result<Vec<Complex64>> {
    check_support(grid, grave)?;
    let scale = grid.spacing.powi(grid.dim as i32);
    match path {
        TransformPath::Fft => {
            let mut data = grave.to_vec();
            apply_along_axes(grid, &mut data, &plans(grid.points).forward);
            data.iter_mut().for_each(|v| *v *= scale);
            Ok(data)
        }
        TransformPath::Direct => Ok(direct_sum(grid, grave, -1.0, scale, false)),
    }
}

/// Sampled inverse transform `f̀(X) = ∫ e^{iθX} f(θ) dθ/(2π)^n` on one fiber.
pub fn fiber_inverse_fourier(grid: &FiberGrid, dual: &[Complex64], path: TransformPath) -> Result<Vec<Complex64>> {
    if dual.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "expected {} samples, got {}",
            grid.len(),
            dual.len()
        )));
    }
    let scale = (grid.dual_spacing() / (2.0 * PI)).powi(grid.dim as i32);
    let out = match path {
        TransformPath::Fft => {
            let mut data = dual.to_vec();
            apply_along_axes(grid, &mut data, &plans(grid.points).inverse);
            data.iter_mut().for_each(|v| *v *= scale);
            data
        }
        TransformPath::Direct => direct_sum(grid, dual, 1.0, scale, true),
    };
    Ok(out)
}

fn direct_sum(grid: &FiberGrid, input: &[Complex64], sign: f64, scale: f64, from_dual: bool) -> Vec<Complex64> {
    let n = grid.len();
    let (src, dst): (Box<dyn Fn(usize) -> Vec<f64>>, Box<dyn Fn(usize) -> Vec<f64>>) = if from_dual {
        (Box::new(|k| grid.dual_point(k)), Box::new(|k| grid.fiber_point(k)))
    } else {
        (Box::new(|k| grid.fiber_point(k)), Box::new(|k| grid.dual_point(k)))
    };
    let src_pts: Vec<Vec<f64>> = (0..n).map(&src).collect();
    (0..n)
        .map(|j| {
            let t = dst(j);
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, x) in src_pts.iter().enumerate() {
                if input[k].norm() == 0.0 {
                    continue;
                }
                let phase: f64 = t.iter().zip(x).map(|(a, b)| a * b).sum();
                acc += input[k] * Complex64::from_polar(1.0, sign * phase);
            }
            acc * scale
        })
        .collect()
}

/// Fourier coefficients `c_m = (1/N) Σ_k a(φ_k) e^{-imφ_k}` of a sampled
/// function on the circle, modes ordered as the FFT output `0, 1, …, -1`.
pub fn circle_coefficients(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    let mut data = values.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut data);
    data.iter_mut().for_each(|v| *v /= n as f64);
    data
}

/// An observable together with consistent samples of `f̀` and `f` on every
/// base point of a model.
#[derive(Debug, Clone)]
pub struct PWObservable {
    pub observable: Observable,
    pub base_samples: Vec<f64>,
    pub grid: FiberGrid,
    /// `f̀_q(X)` per base sample, flat over the fiber grid.
    pub ft_samples: Vec<Vec<Complex64>>,
    /// `f_q(θ)` per base sample, on the dual grid.
    pub dual_samples: Vec<Vec<Complex64>>,
    pub selfadjoint: bool,
    pub truncation_radius: Vec<f64>,
    pub truncation_mass: f64,
}

/// Sample an observable on the model's base and a fiber grid covering its
/// Fourier support. `spacing` is the fiber grid spacing in `X`.
pub fn make_pw_observable(model: &GroupoidModel, obs: &Observable, spacing: f64) -> Result<PWObservable> {
    if obs.fiber_dim != model.fiber_dim {
        return Err(Error::DimensionMismatch {
            expected: model.fiber_dim,
            got: obs.fiber_dim,
        });
    }
    if !obs.is_paley_wiener() {
        return Err(Error::NotPaleyWiener("observable is polynomial in θ".into()));
    }
    let grid = FiberGrid::covering(&obs.support, spacing, 4)?;
    make_pw_observable_on(model, obs, grid)
}

/// As [`make_pw_observable`], on a caller-chosen fiber grid (used to put
/// several observables on one grid).
pub fn make_pw_observable_on(model: &GroupoidModel, obs: &Observable, grid: FiberGrid) -> Result<PWObservable> {
    if obs.fiber_dim != grid.dim {
        return Err(Error::DimensionMismatch {
            expected: grid.dim,
            got: obs.fiber_dim,
        });
    }
    if !obs.is_paley_wiener() {
        return Err(Error::NotPaleyWiener("observable is polynomial in θ".into()));
    }
    let base_samples = model.base.samples.clone();
    let mut ft_samples = Vec::with_capacity(base_samples.len());
    let mut dual_samples = Vec::with_capacity(base_samples.len());
    let fft = plans(grid.points);
    let scale = grid.spacing.powi(grid.dim as i32);
    for &q in &base_samples {
        let ft: Vec<Complex64> = (0..grid.len())
            .map(|k| obs.eval_ft(&grid.fiber_point(k), q))
            .collect::<Result<_>>()?;
        check_support(&grid, &ft)?;
        let mut dual = ft.clone();
        apply_along_axes(&grid, &mut dual, &fft.forward);
        dual.iter_mut().for_each(|v| *v *= scale);
        ft_samples.push(ft);
        dual_samples.push(dual);
    }
    let selfadjoint = ft_samples.iter().all(|ft| {
        (0..grid.len()).all(|k| match grid.mirror(k) {
            Some(m) => (ft[m] - ft[k].conj()).norm() <= 1e-14 * (1.0 + ft[k].norm()),
            None => ft[k].norm() == 0.0,
        })
    });
    Ok(PWObservable {
        observable: obs.clone(),
        base_samples,
        grid,
        ft_samples,
        dual_samples,
        selfadjoint,
        truncation_radius: obs.support.clone(),
        truncation_mass: obs.truncation_mass(),
    })
}

impl PWObservable {
    /// `max |f|` over the sampled dual grid.
    pub fn sup_norm(&self) -> f64 {
        self.dual_samples
            .iter()
            .flat_map(|v| v.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}
