//! Named observables for each example.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{BaseKind, ExampleName, GroupoidModel};
use crate::observable::{BaseFactor, Observable, Term, DEFAULT_TRUNCATION};

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub description: &'static str,
}

const LINE: &[CatalogEntry] = &[
    CatalogEntry { id: "gauss-a", description: "exp(-(θ-0.5)²/10) exp(-q²/4)" },
    CatalogEntry { id: "gauss-b", description: "θ exp(-(θ+0.3)²/10) exp(-(q-0.4)²/4)" },
    CatalogEntry { id: "gauss-c", description: "exp(-θ²) exp(-q²/2)" },
    CatalogEntry { id: "bump-a", description: "transform of the unit-radius bump, times exp(-q²/4)" },
    CatalogEntry { id: "imag-a", description: "i · gauss-a" },
    CatalogEntry { id: "zero", description: "0" },
];

const CIRCLE: &[CatalogEntry] = &[
    CatalogEntry { id: "gauss-a", description: "exp(-(θ-0.5)²/10) (1 + 0.4 cos q)" },
    CatalogEntry { id: "gauss-b", description: "θ exp(-(θ+0.3)²/10) (1 + 0.3 cos 2q)" },
    CatalogEntry { id: "gauss-c", description: "exp(-θ²) (1 + 0.5 cos q)" },
    CatalogEntry { id: "bump-a", description: "transform of the unit-radius bump, times (1 + 0.4 cos q)" },
    CatalogEntry { id: "imag-a", description: "i · gauss-a" },
    CatalogEntry { id: "zero", description: "0" },
];

const POINT: &[CatalogEntry] = &[
    CatalogEntry { id: "gauss-a", description: "exp(-(θ-0.5)²/10)" },
    CatalogEntry { id: "gauss-b", description: "θ exp(-(θ+0.3)²/10)" },
    CatalogEntry { id: "gauss-c", description: "exp(-θ²)" },
    CatalogEntry { id: "bump-a", description: "transform of the unit-radius bump" },
    CatalogEntry { id: "imag-a", description: "i · gauss-a" },
    CatalogEntry { id: "zero", description: "0" },
];

const AFFINE: &[CatalogEntry] = &[
    CatalogEntry { id: "gauss-a", description: "exp(-(θ₁-0.3)²/4 - (θ₂-0.5)²/4)" },
    CatalogEntry { id: "gauss-b", description: "θ₂ exp(-(θ₁+0.2)²/2 - θ₂²/2)" },
    CatalogEntry { id: "gauss-c", description: "exp(-θ₁² - θ₂²/2)" },
    CatalogEntry { id: "imag-a", description: "i · gauss-a" },
    CatalogEntry { id: "zero", description: "0" },
];

/// Observables available for an example.
pub fn catalog(example: ExampleName) -> &'static [CatalogEntry] {
    match example {
        ExampleName::GroupAffine => AFFINE,
        ExampleName::GroupU1 => POINT,
        ExampleName::PairCircleMetric | ExampleName::TransfCircleRotation => CIRCLE,
        _ => LINE,
    }
}

/// Base profiles `(a, b, c)` of the three Gaussian observables.
fn base_profiles(model: &GroupoidModel) -> [Vec<(f64, BaseFactor)>; 3] {
    let fourier = |amp: f64, mode: i32| {
        vec![
            (1.0, BaseFactor::Const),
            (0.5 * amp, BaseFactor::Fourier { mode }),
            (0.5 * amp, BaseFactor::Fourier { mode: -mode }),
        ]
    };
    let gauss = |center: f64, beta: f64| vec![(1.0, BaseFactor::Gauss { power: 0, center, beta })];
    match model.base.kind {
        BaseKind::Circle => [fourier(0.4, 1), fourier(0.3, 2), fourier(0.5, 1)],
        BaseKind::LineWindow => [gauss(0.0, 0.25), gauss(0.4, 0.25), gauss(0.0, 0.5)],
        _ => [vec![(1.0, BaseFactor::Const)], vec![(1.0, BaseFactor::Const)], vec![(1.0, BaseFactor::Const)]],
    }
}

/// The observable `id` of the model's catalog.
pub fn lookup(model: &GroupoidModel, id: &str) -> Result<Observable> {
    if !catalog(model.name).iter().any(|e| e.id == id) {
        return Err(Error::InvalidConfig(format!("no observable `{id}` for {}", model.name)));
    }
    let n = model.fiber_dim;
    let [pa, pb, pc] = base_profiles(model);
    let gauss = |powers: &[u32], centers: &[f64], alphas: &[f64], profile: &[(f64, BaseFactor)]| {
        let terms = profile
            .iter()
            .map(|(c, b)| Term::gauss(*c, powers, centers, alphas, *b))
            .collect();
        Observable::new(n, terms, Some(DEFAULT_TRUNCATION))
    };
    let affine = n == 2;
    match id {
        "gauss-a" if affine => gauss(&[0, 0], &[0.3, 0.5], &[0.25, 0.25], &pa),
        "gauss-a" => gauss(&[0], &[0.5], &[0.1], &pa),
        "gauss-b" if affine => gauss(&[0, 1], &[-0.2, 0.0], &[0.5, 0.5], &pb),
        "gauss-b" => gauss(&[1], &[-0.3], &[0.1], &pb),
        "gauss-c" if affine => gauss(&[0, 0], &[0.0, 0.0], &[1.0, 0.5], &pc),
        "gauss-c" => gauss(&[0], &[0.0], &[1.0], &pc),
        "bump-a" => {
            let terms = pa.iter().map(|(c, b)| Term::bump(*c, 1.0, 0, *b)).collect();
            Observable::new(n, terms, None)
        }
        "imag-a" => Ok(lookup(model, "gauss-a")?.scale(Complex64::new(0.0, 1.0))),
        "zero" => Ok(Observable::zero(n)),
        _ => unreachable!("catalog ids are matched above"),
    }
}
