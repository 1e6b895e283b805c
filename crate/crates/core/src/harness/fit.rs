//! Least-squares order fits of defect ladders.

use crate::error::{Error, Result};

/// Slope of `log D` against `log ħ` and the RMS residual of the fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderFit {
    /// `f64::INFINITY` marks an identically zero sequence.
    pub order: f64,
    pub residual: f64,
}

impl OrderFit {
    pub fn is_exact_zero(&self) -> bool {
        self.order.is_infinite()
    }
}

pub fn order_fit(ladder: &[f64], defects: &[f64]) -> Result<OrderFit> {
    if ladder.len() != defects.len() {
        return Err(Error::InsufficientData(format!(
            "{} rungs but {} defects",
            ladder.len(),
            defects.len()
        )));
    }
    if defects.iter().all(|&d| d == 0.0) {
        return Ok(OrderFit { order: f64::INFINITY, residual: 0.0 });
    }
    if defects.len() < 3 {
        return Err(Error::InsufficientData(format!("need at least 3 rungs, got {}", defects.len())));
    }
    if let Some(d) = defects.iter().find(|&&d| !(d > 0.0)) {
        return Err(Error::InsufficientData(format!("nonpositive defect {d}")));
    }
    if let Some(h) = ladder.iter().find(|&&h| !(h > 0.0)) {
        return Err(Error::InsufficientData(format!("nonpositive ħ {h}")));
    }
    let xs: Vec<f64> = ladder.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = defects.iter().map(|d| d.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all rungs coincide".into()));
    }
    let order = sxy / sxx;
    let intercept = my - order * mx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - order * x).powi(2)).sum::<f64>() / n).sqrt();
    Ok(OrderFit { order, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LADDER: [f64; 5] = [0.4, 0.2, 0.1, 0.05, 0.025];

    #[test]
    fn exact_power_laws() {
        for p in [1.0, 2.0] {
            let d: Vec<f64> = LADDER.iter().map(|h| 3.7 * h.powf(p)).collect();
            let fit = order_fit(&LADDER, &d).unwrap();
            assert!((fit.order - p).abs() < 1e-12);
            assert!(fit.residual < 1e-12);
        }
    }

    #[test]
    fn zero_sequence_is_marked() {
        let fit = order_fit(&LADDER, &[0.0; 5]).unwrap();
        assert!(fit.is_exact_zero());
    }

    #[test]
    fn bad_input() {
        assert!(order_fit(&LADDER[..2], &[1.0, 0.5]).is_err());
        assert!(order_fit(&LADDER, &[1.0, 0.5, 0.0, 0.1, 0.1]).is_err());
        assert!(order_fit(&LADDER, &[1.0; 4]).is_err());
    }
}
