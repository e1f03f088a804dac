use nalgebra::linalg::Cholesky;
use nalgebra::{DMatrix, DVector, Dyn};
use num_complex::Complex64;

use super::stack::StackedSystem;
use crate::error::{Error, Result};

/// Normal matrices with a condition estimate above this are treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

const PRIOR_REGULARIZATION: f64 = 1e-12;

/// Second-order priors for LMMSE estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariancePriors {
    r_h: DMatrix<Complex64>,
    /// `R_h^{-1}`, regularized when `R_h` is numerically singular.
    r_h_inv: DMatrix<Complex64>,
    diagonal: Option<Vec<f64>>,
    /// Noise variance; the noise covariance is `sigma2 · I`.
    pub sigma2: f64,
}

impl CovariancePriors {
    /// Independent taps with the given powers.
    pub fn diagonal(weights: &[f64], sigma2: f64) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config("tap powers must be finite and >= 0".into()));
        }
        let r_h = DMatrix::from_diagonal(&DVector::from_iterator(
            weights.len(),
            weights.iter().map(|&w| Complex64::new(w, 0.0)),
        ));
        Self::new(r_h, sigma2)
    }

    pub fn new(r_h: DMatrix<Complex64>, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::Config(format!("LMMSE needs a positive noise variance, got {sigma2}")));
        }
        let l = r_h.nrows();
        if l == 0 || r_h.ncols() != l {
            return Err(Error::Config("channel covariance must be square and non-empty".into()));
        }
        let scale = r_h.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
        let asym = (&r_h - r_h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asym > 1e-10 * scale {
            return Err(Error::Config("channel covariance is not Hermitian".into()));
        }
        let is_diag = (0..l).all(|i| (0..l).all(|j| i == j || r_h[(i, j)] == Complex64::default()));
        if is_diag {
            let w: Vec<f64> = (0..l).map(|i| r_h[(i, i)].re).collect();
            if w.iter().any(|&v| v < 0.0) {
                return Err(Error::Config("channel covariance is not positive semidefinite".into()));
            }
            let inv = w.iter().map(|&v| 1.0 / v.max(PRIOR_REGULARIZATION)).collect::<Vec<_>>();
            let r_h_inv = DMatrix::from_diagonal(&DVector::from_iterator(
                l,
                inv.iter().map(|&v| Complex64::new(v, 0.0)),
            ));
            return Ok(CovariancePriors { r_h, r_h_inv, diagonal: Some(inv), sigma2 });
        }
        let eig = r_h.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&v| v < -1e-10 * scale) {
            return Err(Error::Config("channel covariance is not positive semidefinite".into()));
        }
        let r_h_inv = match Cholesky::new(r_h.clone()) {
            Some(ch) if min_pivot_ratio(&ch) > 1e-6 => ch.inverse(),
            _ => {
                let reg = &r_h + DMatrix::identity(l, l) * Complex64::new(PRIOR_REGULARIZATION, 0.0);
                Cholesky::new(reg)
                    .ok_or_else(|| Error::Config("channel covariance could not be regularized".into()))?
                    .inverse()
            }
        };
        Ok(CovariancePriors { r_h, r_h_inv, diagonal: None, sigma2 })
    }

    pub fn r_h(&self) -> &DMatrix<Complex64> {
        &self.r_h
    }

    pub fn taps(&self) -> usize {
        self.r_h.nrows()
    }

    /// Same channel prior, different noise level.
    pub fn with_sigma2(&self, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::Config(format!("LMMSE needs a positive noise variance, got {sigma2}")));
        }
        let mut p = self.clone();
        p.sigma2 = sigma2;
        Ok(p)
    }
}

fn min_pivot_ratio(ch: &Cholesky<Complex64, Dyn>) -> f64 {
    let l = ch.l_dirty();
    let d: Vec<f64> = (0..l.nrows()).map(|i| l[(i, i)].re).collect();
    let max = d.iter().cloned().fold(0.0, f64::max);
    let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
    if max > 0.0 {
        min / max
    } else {
        0.0
    }
}

/// Factors a Hermitian normal matrix, rejecting it when the squared pivot
/// spread (a lower bound on the condition number) exceeds [`CONDITION_LIMIT`].
fn factor(gram: DMatrix<Complex64>, indices: &[usize]) -> Result<Cholesky<Complex64, Dyn>> {
    let singular = |condition: f64| Error::Singular { condition, indices: indices.to_vec() };
    let ch = Cholesky::new(gram).ok_or_else(|| singular(f64::INFINITY))?;
    let ratio = min_pivot_ratio(&ch);
    let condition = if ratio > 0.0 { 1.0 / (ratio * ratio) } else { f64::INFINITY };
    if !(condition <= CONDITION_LIMIT) {
        return Err(singular(condition));
    }
    Ok(ch)
}

/// Least-squares taps `(CᴴC)^{-1} Cᴴ y`.
pub fn ls_estimate(sys: &StackedSystem) -> Result<Vec<Complex64>> {
    if sys.rows() < sys.taps() {
        return Err(Error::Singular { condition: f64::INFINITY, indices: sys.indices.clone() });
    }
    let gram = sys.c_matrix.ad_mul(&sys.c_matrix);
    let rhs = sys.c_matrix.ad_mul(&sys.y_sel);
    let ch = factor(gram, &sys.indices)?;
    Ok(ch.solve(&rhs).iter().copied().collect())
}

/// LMMSE taps `(R_h^{-1} + Cᴴ R_z^{-1} C)^{-1} Cᴴ R_z^{-1} y` with a zero-mean
/// prior and `R_z = σ² I`, solved as `(σ² R_h^{-1} + CᴴC) h = Cᴴ y`.
pub fn lmmse_estimate(sys: &StackedSystem, priors: &CovariancePriors) -> Result<Vec<Complex64>> {
    if priors.taps() != sys.taps() {
        return Err(Error::InputShape(format!(
            "prior covers {} taps, system has {}",
            priors.taps(),
            sys.taps()
        )));
    }
    let mut a = sys.c_matrix.ad_mul(&sys.c_matrix);
    match &priors.diagonal {
        Some(inv) => {
            for (i, &v) in inv.iter().enumerate() {
                a[(i, i)] += priors.sigma2 * v;
            }
        }
        None => a += &priors.r_h_inv * Complex64::new(priors.sigma2, 0.0),
    }
    let rhs = sys.c_matrix.ad_mul(&sys.y_sel);
    let ch = factor(a, &sys.indices)?;
    Ok(ch.solve(&rhs).iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::complex_gaussian;
    use crate::estimate::stack_system;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Solves `A x = b` by Gauss-Jordan elimination with partial pivoting.
    fn gauss_solve(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Vec<Complex64> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm())).unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for row in 0..n {
                if row != col {
                    let f = a[row][col] / a[col][col];
                    for k in col..n {
                        let v = a[col][k];
                        a[row][k] -= f * v;
                    }
                    let v = b[col];
                    b[row] -= f * v;
                }
            }
        }
        (0..n).map(|i| b[i] / a[i][i]).collect()
    }

    /// Pseudo-inverse solution via explicitly formed normal equations.
    fn pinv_solve(c: &[Vec<Complex64>], y: &[Complex64]) -> Vec<Complex64> {
        let l = c[0].len();
        let gram: Vec<Vec<Complex64>> = (0..l)
            .map(|i| (0..l).map(|j| c.iter().map(|row| row[i].conj() * row[j]).sum()).collect())
            .collect();
        let rhs: Vec<Complex64> = (0..l).map(|i| c.iter().zip(y).map(|(row, v)| row[i].conj() * v).sum()).collect();
        gauss_solve(gram, rhs)
    }

    fn system_from(c: &DMatrix<Complex64>, y: Vec<Complex64>) -> StackedSystem {
        StackedSystem {
            indices: (0..c.nrows()).collect(),
            x_sel: vec![Complex64::new(1.0, 0.0); c.nrows()],
            y_sel: DVector::from_vec(y),
            c_matrix: c.clone(),
        }
    }

    #[test]
    fn noiseless_exactly_determined() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h: Vec<Complex64> = (0..16).map(|_| complex_gaussian(&mut rng, 1.0 / 16.0)).collect();
        let y = crate::channel::cfr_from_cir(&h, 256).unwrap();
        let p: Vec<usize> = (0..16).map(|i| 16 * i).collect();
        let one = vec![Complex64::new(1.0, 0.0); 16];
        let sys = stack_system(&y, &p, &one, &[], &[], 16).unwrap();
        let est = ls_estimate(&sys).unwrap();
        assert!(est.iter().zip(&h).all(|(a, b)| (a - b).norm() < 1e-10));
    }

    #[test]
    fn random_system_matches_pseudo_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<Vec<Complex64>> =
            (0..32).map(|_| (0..16).map(|_| complex_gaussian(&mut rng, 1.0)).collect()).collect();
        let y: Vec<Complex64> = (0..32).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let c = DMatrix::from_fn(32, 16, |i, j| rows[i][j]);
        let est = ls_estimate(&system_from(&c, y.clone())).unwrap();
        let oracle = pinv_solve(&rows, &y);
        assert!(est.iter().zip(&oracle).all(|(a, b)| (a - b).norm() < 1e-9));
    }

    #[test]
    fn hand_built_small_stack() {
        // N = 8, L = 2, pilots {0, 4}, reliable {1}
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y: Vec<Complex64> = (0..8).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let xs = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-0.6, 0.8)];
        let sys = stack_system(&y, &[0, 4], &[xs[0], xs[2]], &[1], &[xs[1]], 2).unwrap();
        let tone_sym = [(0usize, xs[0]), (1, xs[1]), (4, xs[2])];
        let rows: Vec<Vec<Complex64>> = tone_sym
            .iter()
            .map(|&(n, x)| {
                (0..2)
                    .map(|l| x * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (n * l) as f64 / 8.0))
                    .collect()
            })
            .collect();
        let obs: Vec<Complex64> = tone_sym.iter().map(|&(n, _)| y[n]).collect();
        let oracle = pinv_solve(&rows, &obs);
        let est = ls_estimate(&sys).unwrap();
        assert!(est.iter().zip(&oracle).all(|(a, b)| (a - b).norm() < 1e-10));
    }

    #[test]
    fn rank_deficient_is_singular() {
        let c = DMatrix::from_fn(4, 2, |i, _| Complex64::new(i as f64 + 1.0, 0.0));
        let err = ls_estimate(&system_from(&c, vec![Complex64::default(); 4])).unwrap_err();
        assert!(matches!(err, Error::Singular { ref indices, .. } if indices == &vec![0, 1, 2, 3]));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn lmmse_tends_to_ls() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = DMatrix::from_fn(24, 8, |_, _| complex_gaussian(&mut rng, 1.0));
        let y: Vec<Complex64> = (0..24).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let sys = system_from(&c, y);
        let priors = CovariancePriors::diagonal(&[0.125; 8], 1e-12).unwrap();
        let a = ls_estimate(&sys).unwrap();
        let b = lmmse_estimate(&sys, &priors).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).norm() < 1e-6));
    }

    #[test]
    fn scalar_wiener_solution() {
        let c = Complex64::new(0.6, -1.1);
        let y = Complex64::new(0.3, 0.9);
        let (r_h, s2) = (0.7, 0.2);
        let sys = system_from(&DMatrix::from_element(1, 1, c), vec![y]);
        let est = lmmse_estimate(&sys, &CovariancePriors::diagonal(&[r_h], s2).unwrap()).unwrap();
        let expect = c.conj() * y * r_h / (s2 + c.norm_sqr() * r_h);
        assert!((est[0] - expect).norm() < 1e-14);
    }

    #[test]
    fn full_covariance_matches_diagonal_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = DMatrix::from_fn(12, 4, |_, _| complex_gaussian(&mut rng, 1.0));
        let y: Vec<Complex64> = (0..12).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let sys = system_from(&c, y);
        let w = [0.4, 0.3, 0.2, 0.1];
        let diag = CovariancePriors::diagonal(&w, 0.05).unwrap();
        // a tiny off-diagonal term forces the general path
        let mut full = diag.r_h().clone();
        full[(0, 1)] = Complex64::new(1e-13, 0.0);
        full[(1, 0)] = Complex64::new(1e-13, 0.0);
        let full = CovariancePriors::new(full, 0.05).unwrap();
        let a = lmmse_estimate(&sys, &diag).unwrap();
        let b = lmmse_estimate(&sys, &full).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).norm() < 1e-9));
    }

    #[test]
    fn invalid_priors() {
        let mut m = DMatrix::from_element(2, 2, Complex64::new(1.0, 0.0));
        m[(0, 1)] = Complex64::new(2.0, 0.0);
        m[(1, 0)] = Complex64::new(2.0, 0.0);
        assert!(matches!(CovariancePriors::new(m, 0.1), Err(Error::Config(_))));
        let mut m = DMatrix::from_element(2, 2, Complex64::default());
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(CovariancePriors::new(m, 0.1), Err(Error::Config(_))));
        assert!(CovariancePriors::diagonal(&[1.0], 0.0).is_err());
        assert!(CovariancePriors::diagonal(&[-1.0], 0.1).is_err());
    }

    #[test]
    fn singular_prior_is_regularized() {
        let mut m = DMatrix::from_element(2, 2, Complex64::new(1.0, 0.0));
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        let p = CovariancePriors::new(m, 0.1).unwrap();
        assert!(p.r_h_inv.iter().all(|z| z.re.is_finite()));
    }
}
