use serde::Serialize;

use crate::error::{Error, Result};

/// Least-squares line through a sample set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute deviation from the line over the samples.
    pub residual: f64,
}

impl AffineFit {
    pub fn at(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

pub fn fit_affine(samples: &[(f64, f64)]) -> Result<AffineFit> {
    if samples.len() < 3 {
        return Err(Error::DegenerateFit(format!("{} samples, need at least 3", samples.len())));
    }
    if samples.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::DegenerateFit("non-finite sample".into()));
    }
    let (min, max) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, _)| (lo.min(x), hi.max(x)));
    if max - min < 1e-12 {
        return Err(Error::DegenerateFit(format!("x spread {} is below 1e-12", max - min)));
    }
    let n = samples.len() as f64;
    let mx = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let my = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let sxx: f64 = samples.iter().map(|s| (s.0 - mx).powi(2)).sum();
    let sxy: f64 = samples.iter().map(|s| (s.0 - mx) * (s.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = samples
        .iter()
        .map(|&(x, y)| (y - (slope * x + intercept)).abs())
        .fold(0.0, f64::max);
    Ok(AffineFit {
        slope,
        intercept,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    #[test]
    fn exact_lines() {
        let f = fit_affine(&[(0.0, 0.5), (1.0, 0.5), (2.0, 0.5)]).unwrap();
        assert_eq!((f.slope, f.intercept, f.residual), (0.0, 0.5, 0.0));
        let f = fit_affine(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]).unwrap();
        assert_eq!((f.slope, f.intercept, f.residual), (2.0, 1.0, 0.0));
    }

    #[test]
    fn noisy_line() {
        let mut rng = StdRng::seed_from_u64(3);
        let samples: Vec<(f64, f64)> = (0..64)
            .map(|i| {
                let x = i as f64 / 16.0;
                (x, 2.0 * x + 1.0 + rng.gen_range(-1e-9..1e-9))
            })
            .collect();
        let f = fit_affine(&samples).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-8);
        assert!(f.residual <= 2e-9);
    }

    #[test]
    fn degenerate() {
        assert!(matches!(fit_affine(&[(0.0, 1.0), (1.0, 2.0)]), Err(Error::DegenerateFit(_))));
        assert!(matches!(
            fit_affine(&[(1.0, 1.0), (1.0, 2.0), (1.0 + 1e-13, 3.0)]),
            Err(Error::DegenerateFit(_))
        ));
    }
}
