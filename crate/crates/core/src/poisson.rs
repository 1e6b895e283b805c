//! Poisson brackets on the dual of each example's algebroid.
//!
//! With sign `+` the brackets are
//!
//! * canonical (pair groupoids, `T*Q`): `{f,g} = ∂_q f ∂_θ g − ∂_θ f ∂_q g`,
//!   so `{θ, g(q)} = −g'(q)`;
//! * Lie–Poisson (groups): `{f,g}(θ) = −Σ c^k_{ij} θ_k ∂_i f ∂_j g`;
//! * semidirect (transformation groupoids): the Lie–Poisson part plus
//!   `ξ(q) (∂_θ f ∂_q g − ∂_q f ∂_θ g)` with `ξ` the fundamental vector field.
//!
//! Sign `−` negates every bracket.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{fiber_fourier, FiberGrid, PWObservable, TransformPath};
use crate::geometry::{ActionKind, BaseKind, Family, GroupoidModel};
use crate::observable::Observable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn factor(&self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }

    /// Sign matching the classical formulas of each family.
    pub fn default_for(family: Family) -> Sign {
        match family {
            Family::Pair => Sign::Minus,
            Family::LieGroup | Family::Transformation => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" => Ok(Sign::Plus),
            "-" | "minus" => Ok(Sign::Minus),
            other => Err(Error::InvalidConfig(format!("unknown sign `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BracketFamily {
    Canonical,
    LiePoisson,
    Semidirect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BracketDescriptor {
    pub family: BracketFamily,
    pub sign: Sign,
    pub fiber_dim: usize,
    pub structure_constants: Vec<f64>,
    pub action: Option<ActionKind>,
}

impl BracketDescriptor {
    pub fn for_model(model: &GroupoidModel, sign: Sign) -> Self {
        let family = match model.family {
            Family::Pair => BracketFamily::Canonical,
            Family::LieGroup => BracketFamily::LiePoisson,
            Family::Transformation => BracketFamily::Semidirect,
        };
        Self {
            family,
            sign,
            fiber_dim: model.fiber_dim,
            structure_constants: model.structure_constants.clone(),
            action: model.action,
        }
    }

    fn check(&self, model: &GroupoidModel) -> Result<()> {
        let expected = BracketDescriptor::for_model(model, self.sign);
        if expected.family != self.family || expected.fiber_dim != self.fiber_dim {
            return Err(Error::FamilyMismatch(format!(
                "{:?} bracket used on a {:?} model",
                self.family, model.family
            )));
        }
        Ok(())
    }

    fn c(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.fiber_dim;
        self.structure_constants[k * n * n + i * n + j]
    }

    fn xi(&self) -> f64 {
        match self.family {
            BracketFamily::Canonical => 1.0,
            BracketFamily::LiePoisson => 0.0,
            BracketFamily::Semidirect => self.action.map_or(0.0, |a| a.fundamental_field(0.0)),
        }
    }
}

/// Exact bracket of two closed-form observables.
pub fn exact_bracket(desc: &BracketDescriptor, f: &Observable, g: &Observable) -> Result<Observable> {
    if f.fiber_dim != desc.fiber_dim || g.fiber_dim != desc.fiber_dim {
        return Err(Error::DimensionMismatch {
            expected: desc.fiber_dim,
            got: f.fiber_dim.max(g.fiber_dim),
        });
    }
    let n = desc.fiber_dim;
    let mut out = Observable::zero(n);
    let df: Vec<Observable> = (0..n).map(|i| f.d_theta(i)).collect::<Result<_>>()?;
    let dg: Vec<Observable> = (0..n).map(|i| g.d_theta(i)).collect::<Result<_>>()?;
    // Lie–Poisson part
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let c = desc.c(k, i, j);
                if c != 0.0 {
                    let term = df[i].product(&dg[j])?.times_theta(k)?;
                    out = out.add(&term.scale(Complex64::new(-c, 0.0)))?;
                }
            }
        }
    }
    // anchor part, for one-dimensional fibers over a one-dimensional base
    let xi = desc.xi();
    if xi != 0.0 {
        let cross = f.d_base()?.product(&dg[0])?.sub(&df[0].product(&g.d_base()?)?)?;
        let orient = match desc.family {
            BracketFamily::Canonical => 1.0,
            _ => -1.0,
        };
        out = out.add(&cross.scale(Complex64::new(orient * xi, 0.0)))?;
    }
    Ok(out.scale(Complex64::new(desc.sign.factor(), 0.0)))
}

/// A function sampled on the dual grid of every base point.
#[derive(Debug, Clone)]
pub struct SampledDual {
    pub base_samples: Vec<f64>,
    pub grid: FiberGrid,
    pub values: Vec<Vec<Complex64>>,
}

impl SampledDual {
    pub fn max_abs_diff(&self, other: &SampledDual) -> f64 {
        self.values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Values of a closed-form observable on the same sample points.
    pub fn from_observable(like: &SampledDual, obs: &Observable) -> SampledDual {
        let values = like
            .base_samples
            .iter()
            .map(|&q| (0..like.grid.len()).map(|j| obs.eval(&like.grid.dual_point(j), q)).collect())
            .collect();
        SampledDual {
            base_samples: like.base_samples.clone(),
            grid: like.grid,
            values,
        }
    }
}

/// `∂f/∂θ_d` on the dual grid, via multiplication of `f̀` by `−iX_d`.
fn theta_derivative(f: &PWObservable, d: usize) -> Result<Vec<Vec<Complex64>>> {
    f.ft_samples
        .iter()
        .map(|ft| {
            let weighted: Vec<Complex64> = ft
                .iter()
                .enumerate()
                .map(|(k, v)| v * Complex64::new(0.0, -f.grid.fiber_point(k)[d]))
                .collect();
            fiber_fourier(&f.grid, &weighted, TransformPath::Fft)
        })
        .collect()
}

/// Fourth-order finite differences across base samples.
fn base_derivative(values: &[Vec<Complex64>], h: f64, periodic: bool) -> Vec<Vec<Complex64>> {
    let n = values.len();
    let m = values.first().map_or(0, |v| v.len());
    let mut out = vec![vec![Complex64::new(0.0, 0.0); m]; n];
    let central = [(-2isize, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)];
    let left0 = [(0isize, -25.0), (1, 48.0), (2, -36.0), (3, 16.0), (4, -3.0)];
    let left1 = [(-1isize, -3.0), (0, -10.0), (1, 18.0), (2, -6.0), (3, 1.0)];
    for i in 0..n {
        let (stencil, flip): (&[(isize, f64)], f64) = if periodic || (i >= 2 && i + 2 < n) {
            (&central, 1.0)
        } else if i == 0 || i == n - 1 {
            (&left0, if i == 0 { 1.0 } else { -1.0 })
        } else {
            (&left1, if i == 1 { 1.0 } else { -1.0 })
        };
        for (off, w) in stencil {
            let idx = if periodic {
                (i as isize + off).rem_euclid(n as isize) as usize
            } else {
                (i as isize + (*off as f64 * flip) as isize) as usize
            };
            for j in 0..m {
                out[i][j] += values[idx][j] * (w * flip);
            }
        }
        for v in &mut out[i] {
            *v /= 12.0 * h;
        }
    }
    out
}

/// Sampled bracket `{f, g}` on the dual grid of every base sample.
pub fn poisson_bracket(
    model: &GroupoidModel,
    desc: &BracketDescriptor,
    f: &PWObservable,
    g: &PWObservable,
) -> Result<SampledDual> {
    desc.check(model)?;
    if f.grid != g.grid || f.base_samples != g.base_samples {
        return Err(Error::GridMismatch("observables sampled on different grids".into()));
    }
    let n = desc.fiber_dim;
    let grid = f.grid;
    let nb = f.base_samples.len();
    let df: Vec<_> = (0..n).map(|d| theta_derivative(f, d)).collect::<Result<_>>()?;
    let dg: Vec<_> = (0..n).map(|d| theta_derivative(g, d)).collect::<Result<_>>()?;
    let mut values = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; nb];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let c = desc.c(k, i, j);
                if c == 0.0 {
                    continue;
                }
                for b in 0..nb {
                    for s in 0..grid.len() {
                        let theta_k = grid.dual_point(s)[k];
                        values[b][s] -= c * theta_k * df[i][b][s] * dg[j][b][s];
                    }
                }
            }
        }
    }
    let xi = desc.xi();
    if xi != 0.0 {
        if model.base.kind == BaseKind::Point {
            return Err(Error::FamilyMismatch("anchor term on a one-point base".into()));
        }
        let periodic = model.base.kind == BaseKind::Circle;
        let h = model.base.spacing();
        let fq = base_derivative(&f.dual_samples, h, periodic);
        let gq = base_derivative(&g.dual_samples, h, periodic);
        let orient = if desc.family == BracketFamily::Canonical { 1.0 } else { -1.0 };
        for b in 0..nb {
            for s in 0..grid.len() {
                values[b][s] += orient * xi * (fq[b][s] * dg[0][b][s] - df[0][b][s] * gq[b][s]);
            }
        }
    }
    let sign = desc.sign.factor();
    values.iter_mut().flatten().for_each(|v| *v *= sign);
    Ok(SampledDual {
        base_samples: f.base_samples.clone(),
        grid,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{make_pw_observable, make_pw_observable_on};
    use crate::geometry::{make_example, Resolution};
    use crate::observable::{BaseFactor, Term, DEFAULT_TRUNCATION};

    fn poly(terms: Vec<Term>, n: usize) -> Observable {
        Observable::new(n, terms, None).unwrap()
    }

    fn theta(d: usize, n: usize) -> Observable {
        let mut p = vec![0; n];
        p[d] = 1;
        poly(vec![Term::gauss(1.0, &p, &vec![0.0; n], &vec![0.0; n], BaseFactor::Const)], n)
    }

    fn sample_points(n: usize) -> Vec<(Vec<f64>, f64)> {
        let pts = [(0.3, -0.8, 0.2), (-1.1, 0.5, 1.4), (0.9, 1.7, -0.6)];
        pts.iter().map(|&(a, b, q)| (vec![a, b][..n].to_vec(), q)).collect()
    }

    #[test]
    fn momentum_against_base_function() {
        let model = make_example("pair-flat-line", Resolution::new(33, 4.0)).unwrap();
        let desc = BracketDescriptor::for_model(&model, Sign::Plus);
        let g = poly(vec![Term::base_only(1.0, 1, BaseFactor::Gauss { power: 2, center: 0.0, beta: 0.0 })], 1);
        let b = exact_bracket(&desc, &theta(0, 1), &g).unwrap();
        for (th, q) in sample_points(1) {
            assert!((b.eval(&th, q) - Complex64::new(-2.0 * q, 0.0)).norm() < 1e-14);
        }
        // base functions commute
        let h = poly(vec![Term::base_only(1.0, 1, BaseFactor::Gauss { power: 1, center: 0.0, beta: 0.3 })], 1);
        assert!(exact_bracket(&desc, &g, &h).unwrap().terms.is_empty());
    }

    #[test]
    fn affine_lie_poisson_and_sign_flip() {
        let model = make_example("group-affine", Resolution::new(32, 4.0)).unwrap();
        let plus = BracketDescriptor::for_model(&model, Sign::Plus);
        let minus = BracketDescriptor::for_model(&model, Sign::Minus);
        let b = exact_bracket(&plus, &theta(0, 2), &theta(1, 2)).unwrap();
        let bm = exact_bracket(&minus, &theta(0, 2), &theta(1, 2)).unwrap();
        for (th, q) in sample_points(2) {
            assert_eq!(b.eval(&th, q), Complex64::new(-th[1], 0.0));
            assert_eq!(bm.eval(&th, q), -b.eval(&th, q));
        }
    }

    fn gaussian_obs(n: usize, powers: &[u32], base: BaseFactor, c: f64) -> Observable {
        Observable::new(
            n,
            vec![Term::gauss(1.0, powers, &vec![c; n], &vec![0.5; n], base)],
            Some(DEFAULT_TRUNCATION),
        )
        .unwrap()
    }

    #[test]
    fn antisymmetry_leibniz_jacobi() {
        let cases = [
            ("pair-flat-line", 1usize, BaseFactor::Gauss { power: 1, center: 0.2, beta: 0.5 }),
            ("group-affine", 2, BaseFactor::Const),
            ("transf-circle-rotation", 1, BaseFactor::Fourier { mode: 1 }),
        ];
        for (name, n, base) in cases {
            let model = make_example(name, Resolution::new(32, 4.0)).unwrap();
            let desc = BracketDescriptor::for_model(&model, Sign::Plus);
            let f = gaussian_obs(n, &vec![1; n], base, 0.1);
            let g = gaussian_obs(n, &vec![0; n], BaseFactor::Const, -0.3).add(&theta(0, n).product(&gaussian_obs(n, &vec![0; n], base, 0.4)).unwrap()).unwrap();
            let h = gaussian_obs(n, &vec![2; n], base, 0.0);
            let fg = exact_bracket(&desc, &f, &g).unwrap();
            let gf = exact_bracket(&desc, &g, &f).unwrap();
            let f_gh = exact_bracket(&desc, &f, &g.product(&h).unwrap()).unwrap();
            let fh = exact_bracket(&desc, &f, &h).unwrap();
            let jac = exact_bracket(&desc, &f, &exact_bracket(&desc, &g, &h).unwrap())
                .unwrap()
                .add(&exact_bracket(&desc, &g, &exact_bracket(&desc, &h, &f).unwrap()).unwrap())
                .unwrap()
                .add(&exact_bracket(&desc, &h, &fg).unwrap())
                .unwrap();
            for (th, q) in sample_points(n) {
                assert!((fg.eval(&th, q) + gf.eval(&th, q)).norm() < 1e-12, "{name}");
                let leib = fg.eval(&th, q) * h.eval(&th, q) + g.eval(&th, q) * fh.eval(&th, q);
                assert!((f_gh.eval(&th, q) - leib).norm() < 1e-12, "{name}");
                assert!(jac.eval(&th, q).norm() < 1e-10, "{name}: {}", jac.eval(&th, q));
            }
        }
    }

    #[test]
    fn sampled_route_matches_exact_route() {
        let cases = [
            ("pair-flat-line", Resolution::new(161, 4.0), BaseFactor::Gauss { power: 0, center: 0.3, beta: 0.5 }),
            ("pair-circle-metric", Resolution::new(128, 1.0), BaseFactor::Fourier { mode: 1 }),
            ("transf-circle-rotation", Resolution::new(128, 1.0), BaseFactor::Fourier { mode: 2 }),
            ("group-affine", Resolution::new(32, 4.0), BaseFactor::Const),
        ];
        for (name, res, base) in cases {
            let model = make_example(name, res).unwrap();
            let n = model.fiber_dim;
            let desc = BracketDescriptor::for_model(&model, Sign::Minus);
            let f = gaussian_obs(n, &vec![1; n], base, 0.2);
            let g = gaussian_obs(n, &vec![0; n], BaseFactor::Const, -0.4)
                .add(&gaussian_obs(n, &vec![0; n], base, 0.0))
                .unwrap();
            let support: Vec<f64> = f.support.iter().zip(&g.support).map(|(a, b)| a.max(*b)).collect();
            let grid = FiberGrid::covering(&support, 0.1, 4).unwrap();
            let pf = make_pw_observable_on(&model, &f, grid).unwrap();
            let pg = make_pw_observable_on(&model, &g, grid).unwrap();
            let sampled = poisson_bracket(&model, &desc, &pf, &pg).unwrap();
            let exact = SampledDual::from_observable(&sampled, &exact_bracket(&desc, &f, &g).unwrap());
            let err = sampled.max_abs_diff(&exact);
            assert!(err < 1e-5, "{name}: {err}");
        }
    }

    #[test]
    fn family_and_grid_mismatch() {
        let pair = make_example("pair-flat-line", Resolution::new(33, 4.0)).unwrap();
        let group = make_example("group-u1", Resolution::new(32, 4.0)).unwrap();
        let desc = BracketDescriptor::for_model(&group, Sign::Plus);
        let f = gaussian_obs(1, &[0], BaseFactor::Const, 0.0);
        let pf = make_pw_observable(&pair, &f, 0.1).unwrap();
        assert!(matches!(poisson_bracket(&pair, &desc, &pf, &pf), Err(Error::FamilyMismatch(_))));
        let pg = make_pw_observable(&pair, &f, 0.2).unwrap();
        let d = BracketDescriptor::for_model(&pair, Sign::Plus);
        assert!(matches!(poisson_bracket(&pair, &d, &pf, &pg), Err(Error::GridMismatch(_))));
    }
}
