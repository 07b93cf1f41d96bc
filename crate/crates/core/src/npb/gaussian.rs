//! Gaussian emission components and their normal-inverse-Wishart base measure.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dist::{sample_gamma, sample_normal};
use crate::{Error, Result};

/// Lower bound on covariance eigenvalues (diagonal entries in the diagonal case).
pub const COVARIANCE_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceKind {
    Diagonal,
    Full,
}

/// Diagonal variances, or a row-major `dim x dim` symmetric matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Covariance {
    Diagonal(Vec<f64>),
    Full(Vec<f64>),
}

impl Covariance {
    pub fn kind(&self) -> CovarianceKind {
        match self {
            Covariance::Diagonal(_) => CovarianceKind::Diagonal,
            Covariance::Full(_) => CovarianceKind::Full,
        }
    }

    pub fn identity(dim: usize, kind: CovarianceKind) -> Self {
        match kind {
            CovarianceKind::Diagonal => Covariance::Diagonal(vec![1.0; dim]),
            CovarianceKind::Full => Covariance::Full(DMatrix::<f64>::identity(dim, dim).as_slice().to_vec()),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Covariance::Diagonal(v) => v.len(),
            Covariance::Full(m) => (m.len() as f64).sqrt() as usize,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct GaussianRepr {
    mean: Vec<f64>,
    covariance: Covariance,
}

/// A Gaussian with cached factorization for density evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GaussianRepr", into = "GaussianRepr")]
pub struct GaussianComponent {
    mean: Vec<f64>,
    covariance: Covariance,
    // diagonal: inverse variances; full: row-major lower Cholesky factor
    factor: Vec<f64>,
    log_norm: f64,
}

impl PartialEq for GaussianComponent {
    fn eq(&self, other: &Self) -> bool {
        self.mean == other.mean && self.covariance == other.covariance
    }
}

impl From<GaussianComponent> for GaussianRepr {
    fn from(g: GaussianComponent) -> Self {
        GaussianRepr {
            mean: g.mean,
            covariance: g.covariance,
        }
    }
}

impl TryFrom<GaussianRepr> for GaussianComponent {
    type Error = Error;

    fn try_from(r: GaussianRepr) -> Result<Self> {
        GaussianComponent::new(r.mean, r.covariance)
    }
}

impl GaussianComponent {
    /// Builds a component, flooring the covariance spectrum at [`COVARIANCE_FLOOR`].
    pub fn new(mean: Vec<f64>, covariance: Covariance) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || covariance.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: covariance.dim(),
            });
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite Gaussian mean".into()));
        }
        let (covariance, factor, log_det) = match covariance {
            Covariance::Diagonal(vars) => {
                let vars: Vec<f64> = vars
                    .into_iter()
                    .map(|v| if v.is_finite() { v.max(COVARIANCE_FLOOR) } else { f64::NAN })
                    .collect();
                if vars.iter().any(|v| v.is_nan()) {
                    return Err(Error::InvalidArgument("non-finite variance".into()));
                }
                let log_det = vars.iter().map(|v| v.ln()).sum();
                let inv = vars.iter().map(|v| 1.0 / v).collect();
                (Covariance::Diagonal(vars), inv, log_det)
            }
            Covariance::Full(values) => {
                let m = DMatrix::from_row_slice(dim, dim, &values);
                if m.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidArgument("non-finite covariance".into()));
                }
                let floored = floor_spectrum(&m);
                let chol = floored
                    .clone()
                    .cholesky()
                    .ok_or_else(|| Error::InvalidArgument("covariance is not positive definite".into()))?;
                let l = chol.l();
                let log_det = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
                let factor = row_major(&l);
                (Covariance::Full(row_major(&floored)), factor, log_det)
            }
        };
        let log_norm = -0.5 * (dim as f64 * (2.0 * PI).ln() + log_det);
        Ok(Self {
            mean,
            covariance,
            factor,
            log_norm,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &Covariance {
        &self.covariance
    }

    /// Smallest covariance eigenvalue (smallest variance in the diagonal case).
    pub fn min_eigenvalue(&self) -> f64 {
        match &self.covariance {
            Covariance::Diagonal(v) => v.iter().copied().fold(f64::INFINITY, f64::min),
            Covariance::Full(m) => {
                let d = self.dim();
                DMatrix::from_row_slice(d, d, m)
                    .symmetric_eigenvalues()
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        let maha = match &self.covariance {
            Covariance::Diagonal(_) => x
                .iter()
                .zip(&self.mean)
                .zip(&self.factor)
                .map(|((x, m), p)| {
                    let d = x - m;
                    d * d * p
                })
                .sum::<f64>(),
            Covariance::Full(_) => {
                // forward substitution L y = x - mean
                let dim = self.dim();
                let mut y = vec![0.0; dim];
                let mut acc = 0.0;
                for i in 0..dim {
                    let row = &self.factor[i * dim..i * dim + i];
                    let s: f64 = row.iter().zip(&y[..i]).map(|(l, y)| l * y).sum();
                    y[i] = (x[i] - self.mean[i] - s) / self.factor[i * dim + i];
                    acc += y[i] * y[i];
                }
                acc
            }
        };
        self.log_norm - 0.5 * maha
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

fn floor_spectrum(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.clone().symmetric_eigen();
    // tolerance keeps already-floored matrices stable across reloads
    if eig.eigenvalues.iter().all(|&e| e >= COVARIANCE_FLOOR * (1.0 - 1e-9)) {
        return sym;
    }
    let clamped = eig.eigenvalues.map(|e| e.max(COVARIANCE_FLOOR));
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
    (&rebuilt + rebuilt.transpose()) * 0.5
}

/// Normal-inverse-Wishart base measure `H(lambda)` over component parameters.
///
/// With diagonal covariances each variance follows the matching marginal,
/// `InvGamma((dof - dim + 1) / 2, scatter_dd / 2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NiwPrior {
    pub mean: Vec<f64>,
    pub kappa: f64,
    pub dof: f64,
    pub scatter: Covariance,
}

impl NiwPrior {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if self.scatter.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.scatter.dim(),
            });
        }
        if !(self.kappa > 0.0) {
            return Err(Error::Config("NIW kappa must be positive".into()));
        }
        if !(self.dof > dim as f64 + 1.0) {
            return Err(Error::Config(format!("NIW dof must exceed dim + 1 = {}", dim + 1)));
        }
        let spd = match &self.scatter {
            Covariance::Diagonal(v) => v.iter().all(|&x| x > 0.0),
            Covariance::Full(m) => DMatrix::from_row_slice(dim, dim, m).cholesky().is_some(),
        };
        if !spd {
            return Err(Error::Config("NIW scatter must be symmetric positive definite".into()));
        }
        Ok(())
    }

    /// Data-centred prior: mean at the data mean, expected covariance
    /// `scale * per-dimension variance`, `dof = dim + 2`.
    pub fn from_data<'a>(
        frames: impl Iterator<Item = &'a [f32]>,
        dim: usize,
        kind: CovarianceKind,
        kappa: f64,
        scale: f64,
    ) -> Result<Self> {
        let mut n = 0.0;
        let mut sum = vec![0.0; dim];
        let mut sumsq = vec![0.0; dim];
        for f in frames {
            n += 1.0;
            for d in 0..dim {
                let v = f[d] as f64;
                sum[d] += v;
                sumsq[d] += v * v;
            }
        }
        if n == 0.0 {
            return Err(Error::InvalidArgument("cannot fit a prior to an empty corpus".into()));
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let var: Vec<f64> = (0..dim)
            .map(|d| (sumsq[d] / n - mean[d] * mean[d]).max(COVARIANCE_FLOOR))
            .collect();
        let dof = dim as f64 + 2.0;
        // E[Sigma] = scatter / (dof - dim - 1) = scatter
        let diag: Vec<f64> = var.iter().map(|v| v * scale).collect();
        let scatter = match kind {
            CovarianceKind::Diagonal => Covariance::Diagonal(diag),
            CovarianceKind::Full => Covariance::Full(row_major(&DMatrix::from_diagonal(&DVector::from_vec(diag)))),
        };
        let prior = Self {
            mean,
            kappa,
            dof,
            scatter,
        };
        prior.validate()?;
        Ok(prior)
    }

    pub fn empty_stats(&self) -> SuffStats {
        let dim = self.dim();
        let second = match self.scatter {
            Covariance::Diagonal(_) => dim,
            Covariance::Full(_) => dim * dim,
        };
        SuffStats {
            count: 0.0,
            centered_sum: vec![0.0; dim],
            centered_second: vec![0.0; second],
        }
    }

    /// Accumulates `x` into `stats`, centred on the prior mean.
    pub fn accumulate(&self, stats: &mut SuffStats, x: &[f64]) {
        stats.count += 1.0;
        let dim = self.dim();
        let full = stats.centered_second.len() != dim;
        for i in 0..dim {
            let di = x[i] - self.mean[i];
            stats.centered_sum[i] += di;
            if full {
                for j in 0..dim {
                    stats.centered_second[i * dim + j] += di * (x[j] - self.mean[j]);
                }
            } else {
                stats.centered_second[i] += di * di;
            }
        }
    }

    /// Draws `(mean, covariance)` from the NIW posterior given `stats`.
    pub fn sample_posterior<R: Rng + ?Sized>(&self, stats: &SuffStats, rng: &mut R) -> Result<GaussianComponent> {
        let dim = self.dim();
        let n = stats.count;
        let kappa_n = self.kappa + n;
        // offset of the sample mean from the prior mean
        let offset: Vec<f64> = if n > 0.0 {
            stats.centered_sum.iter().map(|s| s / n).collect()
        } else {
            vec![0.0; dim]
        };
        let post_mean: Vec<f64> = (0..dim).map(|d| self.mean[d] + n * offset[d] / kappa_n).collect();
        let shrink = self.kappa * n / kappa_n;
        match &self.scatter {
            Covariance::Diagonal(s0) => {
                let shape = (self.dof - dim as f64 + 1.0) / 2.0 + n / 2.0;
                let mut vars = Vec::with_capacity(dim);
                let mut mean = Vec::with_capacity(dim);
                for d in 0..dim {
                    let within = (stats.centered_second[d] - n * offset[d] * offset[d]).max(0.0);
                    let rate = s0[d] / 2.0 + within / 2.0 + shrink * offset[d] * offset[d] / 2.0;
                    let var = (rate / sample_gamma(shape, 1.0, rng)).max(COVARIANCE_FLOOR);
                    mean.push(post_mean[d] + (var / kappa_n).sqrt() * sample_normal(rng));
                    vars.push(var);
                }
                GaussianComponent::new(mean, Covariance::Diagonal(vars))
            }
            Covariance::Full(s0) => {
                let mut scatter = DMatrix::from_row_slice(dim, dim, s0);
                for i in 0..dim {
                    for j in 0..dim {
                        let within = stats.centered_second[i * dim + j] - n * offset[i] * offset[j];
                        scatter[(i, j)] += within + shrink * offset[i] * offset[j];
                    }
                }
                let scatter = floor_spectrum(&scatter);
                let cov = sample_inverse_wishart(&scatter, self.dof + n, rng)?;
                let cov = floor_spectrum(&cov);
                let chol = (&cov / kappa_n)
                    .cholesky()
                    .ok_or_else(|| Error::InvalidArgument("posterior covariance not SPD".into()))?;
                let z = DVector::from_fn(dim, |_, _| sample_normal(rng));
                let mean = DVector::from_vec(post_mean) + chol.l() * z;
                GaussianComponent::new(mean.as_slice().to_vec(), Covariance::Full(row_major(&cov)))
            }
        }
    }
}

/// Bartlett-decomposition draw of `Sigma ~ IW(scatter, dof)`.
fn sample_inverse_wishart<R: Rng + ?Sized>(scatter: &DMatrix<f64>, dof: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    let dim = scatter.nrows();
    let precision = scatter
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("singular NIW scatter".into()))?;
    let l = precision
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("NIW scatter not SPD".into()))?
        .l();
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        a[(i, i)] = (2.0 * sample_gamma((dof - i as f64) / 2.0, 1.0, rng)).sqrt();
        for j in 0..i {
            a[(i, j)] = sample_normal(rng);
        }
    }
    let la = l * a;
    let wishart = &la * la.transpose();
    wishart
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("singular Wishart draw".into()))
}

/// Sufficient statistics centred on the prior mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SuffStats {
    pub count: f64,
    pub centered_sum: Vec<f64>,
    pub centered_second: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn density_at_mode_of_standard_normal() {
        for kind in [CovarianceKind::Diagonal, CovarianceKind::Full] {
            let g = GaussianComponent::new(vec![0.5; 39], Covariance::identity(39, kind)).unwrap();
            let expected = -(39.0 / 2.0) * (2.0 * PI).ln();
            assert!((g.log_density(&[0.5; 39]) - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn full_matches_diagonal_when_diagonal() {
        let vars = vec![0.5, 2.0, 3.0];
        let mut full = vec![0.0; 9];
        for i in 0..3 {
            full[i * 4] = vars[i];
        }
        let a = GaussianComponent::new(vec![1.0, 0.0, -1.0], Covariance::Diagonal(vars)).unwrap();
        let b = GaussianComponent::new(vec![1.0, 0.0, -1.0], Covariance::Full(full)).unwrap();
        let x = [0.3, -0.7, 2.0];
        assert!((a.log_density(&x) - b.log_density(&x)).abs() < 1e-12);
    }

    #[test]
    fn correlated_density_matches_closed_form() {
        // 2x2 covariance [[2, 1], [1, 2]]: det 3, inverse [[2, -1], [-1, 2]] / 3
        let g = GaussianComponent::new(vec![0.0, 0.0], Covariance::Full(vec![2.0, 1.0, 1.0, 2.0])).unwrap();
        let x = [1.0, -1.0];
        let maha = (2.0 * 1.0 + 2.0 * 1.0 + 2.0 * 1.0) / 3.0;
        let expected = -(2.0 * PI).ln() - 0.5 * 3.0f64.ln() - 0.5 * maha;
        assert!((g.log_density(&x) - expected).abs() < 1e-12);
    }

    #[test]
    fn floor_applies() {
        let g = GaussianComponent::new(vec![0.0, 0.0], Covariance::Diagonal(vec![0.0, 1e-9])).unwrap();
        assert_eq!(g.covariance(), &Covariance::Diagonal(vec![COVARIANCE_FLOOR; 2]));
        let rank_one = GaussianComponent::new(vec![0.0, 0.0], Covariance::Full(vec![1.0, 1.0, 1.0, 1.0])).unwrap();
        assert!(rank_one.min_eigenvalue() >= COVARIANCE_FLOOR * (1.0 - 1e-9));
    }

    #[test]
    fn posterior_concentrates_on_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for kind in [CovarianceKind::Diagonal, CovarianceKind::Full] {
            let prior = NiwPrior {
                mean: vec![0.0; 3],
                kappa: 0.01,
                dof: 5.0,
                scatter: Covariance::identity(3, kind),
            };
            prior.validate().unwrap();
            let mut stats = prior.empty_stats();
            let target = [4.0, -2.0, 1.0];
            for _ in 0..2000 {
                let x: Vec<f64> = target
                    .iter()
                    .map(|m| m + 0.3 * sample_normal(&mut rng))
                    .collect();
                prior.accumulate(&mut stats, &x);
            }
            let g = prior.sample_posterior(&stats, &mut rng).unwrap();
            for d in 0..3 {
                assert!((g.mean()[d] - target[d]).abs() < 0.05, "{kind:?} {:?}", g.mean());
            }
            let var0 = match g.covariance() {
                Covariance::Diagonal(v) => v[0],
                Covariance::Full(m) => m[0],
            };
            assert!((var0 - 0.09).abs() < 0.02, "{kind:?} var {var0}");
        }
    }

    #[test]
    fn prior_validation() {
        let mut prior = NiwPrior {
            mean: vec![0.0; 2],
            kappa: 1.0,
            dof: 3.0,
            scatter: Covariance::Diagonal(vec![1.0, 1.0]),
        };
        assert!(prior.validate().is_err());
        prior.dof = 3.5;
        prior.validate().unwrap();
        prior.scatter = Covariance::Full(vec![1.0, 2.0, 2.0, 1.0]);
        assert!(prior.validate().is_err());
    }

    #[test]
    fn serde_round_trip_rebuilds_cache() {
        let g = GaussianComponent::new(vec![1.0, 2.0], Covariance::Full(vec![2.0, 0.5, 0.5, 1.0])).unwrap();
        let bytes = bincode::serialize(&g).unwrap();
        let back: GaussianComponent = bincode::deserialize(&bytes).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.log_density(&[0.0, 0.0]), g.log_density(&[0.0, 0.0]));
    }
}
