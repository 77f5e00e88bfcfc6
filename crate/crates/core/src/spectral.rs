//! Dense eigenvalue kernels.
//!
//! Symmetric spectra come from a cyclic Jacobi rotation sweep. The spectral
//! radius of a general matrix is taken from the growth rate of its repeated
//! squares, `ρ(M) = lim ‖M^(2^k)‖^(1/2^k)`, which does not care whether the
//! dominant eigenvalues are real or a complex pair.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{self, SignedGraph};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` pairs with `eigenvalues[k]`.
    pub eigenvectors: DMatrix<f64>,
    pub lambda_max: f64,
    /// Second entry of the descending spectrum, counting multiplicity.
    pub lambda_2: f64,
    /// `max |Mv − λv|` over all computed pairs.
    pub residual: f64,
}

impl SpectrumResult {
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Second smallest eigenvalue; for a Laplacian this is the algebraic
    /// connectivity.
    pub fn algebraic_connectivity(&self) -> f64 {
        self.eigenvalues
            .get(1)
            .copied()
            .unwrap_or(self.eigenvalues[0])
    }

    /// Largest magnitude.
    pub fn radius(&self) -> f64 {
        self.lambda_max.abs().max(self.lambda_min().abs())
    }
}

pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Result<SpectrumResult> {
    sym_eigenvalues_with(m, &Tolerances::default())
}

pub fn sym_eigenvalues_with(m: &DMatrix<f64>, tol: &Tolerances) -> Result<SpectrumResult> {
    check_square(m)?;
    let asym = asymmetry(m);
    if asym > tol.symmetry {
        return Err(Error::NotSymmetric(asym));
    }
    let n = m.nrows();
    let (values, vectors) = jacobi(m, tol, true)?;
    let vectors = vectors.expect("vectors requested");

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| values[k]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| vectors[r * n + order[c]]);

    let lambda_max = eigenvalues[n - 1];
    let lambda_2 = if n >= 2 {
        eigenvalues[n - 2]
    } else {
        lambda_max
    };
    let scaled =
        &eigenvectors * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eigenvalues.clone()));
    let residual = (m * &eigenvectors - scaled).amax();

    Ok(SpectrumResult {
        eigenvalues,
        eigenvectors,
        lambda_max,
        lambda_2,
        residual,
    })
}

/// Eigenvalues only, unsorted. Skips eigenvector accumulation.
pub(crate) fn sym_values(m: &DMatrix<f64>, tol: &Tolerances) -> Result<Vec<f64>> {
    check_square(m)?;
    let asym = asymmetry(m);
    if asym > tol.symmetry {
        return Err(Error::NotSymmetric(asym));
    }
    let (mut values, _) = jacobi(m, tol, false)?;
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Cyclic Jacobi on a row-major copy of the symmetrised input. Returns the
/// diagonal and, if requested, the accumulated rotations (row-major, columns
/// are eigenvectors).
fn jacobi(
    m: &DMatrix<f64>,
    tol: &Tolerances,
    vectors: bool,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let n = m.nrows();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = 0.5 * (m[(i, j)] + m[(j, i)]);
        }
    }
    let mut v = vectors.then(|| {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        v
    });

    let frobenius = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = tol.jacobi_off_diagonal * frobenius;

    for _ in 0..tol.jacobi_max_sweeps {
        let off = off_diagonal_norm(&a, n);
        if off <= threshold {
            let diag = (0..n).map(|i| a[i * n + i]).collect();
            return Ok((diag, v));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                let (row_p, row_q) = (p * n, q * n);
                for k in 0..n {
                    let apk = a[row_p + k];
                    let aqk = a[row_q + k];
                    a[row_p + k] = c * apk - s * aqk;
                    a[row_q + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;

                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    Err(Error::NoConvergence {
        what: "Jacobi eigensolver",
        iterations: tol.jacobi_max_sweeps,
    })
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[i * n + j] * a[i * n + j];
            }
        }
    }
    sum.sqrt()
}

/// `‖M − Mᵀ‖_∞`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    (0..n)
        .map(|i| (0..n).map(|j| (m[(i, j)] - m[(j, i)]).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Maximum absolute row sum.
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn check_square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "expected a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    spectral_radius_with(m, &Tolerances::default())
}

/// Symmetric inputs go through the Jacobi solver; everything else through
/// [`spectral_radius_by_squaring`].
pub fn spectral_radius_with(m: &DMatrix<f64>, tol: &Tolerances) -> Result<f64> {
    check_square(m)?;
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(
            "matrix has non-finite entries".into(),
        ));
    }
    if asymmetry(m) <= 1e-12 * (1.0 + inf_norm(m)) {
        let values = sym_values(m, tol)?;
        return Ok(values[0].abs().max(values[values.len() - 1].abs()));
    }
    spectral_radius_by_squaring(m, tol)
}

pub fn spectral_radius_by_squaring(m: &DMatrix<f64>, tol: &Tolerances) -> Result<f64> {
    check_square(m)?;
    let norm = m.norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    if !norm.is_finite() {
        return Err(Error::InvalidArgument(
            "matrix has non-finite entries".into(),
        ));
    }
    let mut power = m / norm;
    // log ‖M^(2^k)‖_F; its 2^-k multiple is log ρ + c/2^k + o(2^-k), and one
    // Richardson step removes the c/2^k term
    let mut log_norm = norm.ln();
    let mut exponent = 1.0f64;
    let mut rate = log_norm;
    let mut estimate: Option<f64> = None;
    for _ in 0..tol.radius_max_squarings {
        power = &power * &power;
        let s = power.norm();
        if s == 0.0 {
            return Ok(0.0);
        }
        power /= s;
        log_norm = 2.0 * log_norm + s.ln();
        exponent *= 2.0;
        let next_rate = log_norm / exponent;
        let next = (2.0 * next_rate - rate).exp();
        rate = next_rate;
        if let Some(prev) = estimate {
            if (next - prev).abs() <= tol.radius_relative * next {
                return Ok(next);
            }
        }
        estimate = Some(next);
    }
    Err(Error::NoConvergence {
        what: "repeated squaring",
        iterations: tol.radius_max_squarings,
    })
}

/// `‖AB − BA‖_∞`.
pub fn commutator_norm(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "commutator of {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(inf_norm(&(a * b - b * a)))
}

/// `1 − (α/n)·λ₂(L_att) + (β/n)·λ_max(L_rep)` with `λ₂` the algebraic
/// connectivity of the attractive Laplacian. Requires symmetric `P_att`, `P_rep`.
pub fn weyl_bound(g: &SignedGraph, alpha: f64, beta: f64) -> Result<f64> {
    weyl_bound_with(g, alpha, beta, &Tolerances::default())
}

pub fn weyl_bound_with(g: &SignedGraph, alpha: f64, beta: f64, tol: &Tolerances) -> Result<f64> {
    for m in [g.p_att(), g.p_rep()] {
        if !graph::is_symmetric(m) {
            return Err(Error::NotSymmetric(asymmetry(m)));
        }
    }
    let n = g.n() as f64;
    let att = sym_values(g.l_att(), tol)?;
    let rep = sym_values(g.l_rep(), tol)?;
    let connectivity = att[1];
    let rep_max = rep[rep.len() - 1];
    Ok(1.0 - alpha / n * connectivity + beta / n * rep_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::complete_uniform;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn diagonal_spectrum() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let s = sym_eigenvalues(&m).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 2.0, 3.0]);
        assert_eq!(s.lambda_max, 3.0);
        assert_eq!(s.lambda_2, 2.0);
    }

    #[test]
    fn k3_laplacian_spectrum() {
        let g = complete_uniform(3, &[]).unwrap();
        let s = sym_eigenvalues(g.l_att()).unwrap();
        for (got, want) in s.eigenvalues.iter().zip([0.0, 1.5, 1.5]) {
            assert!(close(*got, want, 1e-12), "{:?}", s.eigenvalues);
        }
        assert!(s.residual < 1e-12);
    }

    #[test]
    fn projection_spectrum() {
        let pi = DMatrix::from_fn(3, 3, |i, j| if i == j { 2.0 / 3.0 } else { -1.0 / 3.0 });
        let s = sym_eigenvalues(&pi).unwrap();
        for (got, want) in s.eigenvalues.iter().zip([0.0, 1.0, 1.0]) {
            assert!(close(*got, want, 1e-12));
        }
    }

    #[test]
    fn rejects_asymmetric_and_rectangular() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(sym_eigenvalues(&m), Err(Error::NotSymmetric(_))));
        let r = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(sym_eigenvalues(&r), Err(Error::Dimension(_))));
    }

    #[test]
    fn eigenvectors_reconstruct_input() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, -2.0, 1.0, 2.0, 0.5, -2.0, 0.5, 3.0]);
        let s = sym_eigenvalues(&m).unwrap();
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(s.eigenvalues.clone()));
        let back = &s.eigenvectors * d * s.eigenvectors.transpose();
        assert!((back - m).amax() < 1e-12);
    }

    #[test]
    fn radius_examples() {
        let tol = Tolerances::default();
        for n in [1, 3, 7] {
            assert!(close(
                spectral_radius(&DMatrix::identity(n, n)).unwrap(),
                1.0,
                1e-12
            ));
        }
        let nil = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 0.0]);
        assert_eq!(spectral_radius(&nil).unwrap(), 0.0);
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(close(spectral_radius(&rot).unwrap(), 1.0, 1e-8));
        assert!(close(
            spectral_radius_by_squaring(&DMatrix::identity(4, 4), &tol).unwrap(),
            1.0,
            1e-12
        ));
    }

    #[test]
    fn radius_of_rotation_scaled() {
        // eigenvalues 2(cos θ ± i sin θ)
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[2.0 * c, -2.0 * s, 0.0, 2.0 * s, 2.0 * c, 0.0, 0.0, 0.0, 1.5],
        );
        assert!(close(spectral_radius(&m).unwrap(), 2.0, 2e-8));
    }

    #[test]
    fn commutator_examples() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(commutator_norm(&a, &a).unwrap(), 0.0);
        assert!(commutator_norm(&a, &DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn weyl_bound_examples() {
        let g = complete_uniform(3, &[]).unwrap();
        assert!(close(weyl_bound(&g, 0.5, 0.0).unwrap(), 0.75, 1e-12));
        assert_eq!(weyl_bound(&g, 0.0, 0.0).unwrap(), 1.0);
        let g =
            crate::graph::build_partition(3, &[(1, 2, 1.0), (2, 3, 1.0)], &[(2, 1, 1.0)]).unwrap();
        assert!(matches!(
            weyl_bound(&g, 0.5, 0.5),
            Err(Error::NotSymmetric(_))
        ));
    }
}
