//! Log-det / PSD kernels on top of [`ComplexMatrix`]: Cholesky, Hermitian
//! eigendecomposition (cyclic Jacobi), PSD factorization, pseudo-inverse,
//! and numeric rank.

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, HermitianPsd};
use crate::scalar::Scalar;
use num_complex::Complex;

/// Lower-triangular Cholesky factor of a Hermitian positive definite matrix.
pub struct Cholesky<T> {
    l: ComplexMatrix<T>,
}

/// Cholesky factorization; fails with `SingularMatrix` when a pivot falls
/// below `dim * 1e-12 * max diagonal`, mirroring the positive-definiteness
/// precondition of [`logdet_hpd`].
pub fn cholesky<T: Scalar>(a: &HermitianPsd<T>) -> Result<Cholesky<T>> {
    let n = a.dim();
    let m = a.as_matrix();
    let max_diag = (0..n).fold(T::zero(), |acc, i| acc.max(m.get(i, i).re.abs()));
    let pivot_floor = T::of(n as f64) * T::of(1e-12).max(T::epsilon() * T::of(16.0)) * max_diag;

    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m.get(j, j).re;
        for k in 0..j {
            d -= l.get(j, k).norm_sqr();
        }
        if !(d > pivot_floor) || !d.is_finite() {
            return Err(Error::SingularMatrix {
                context: "cholesky",
            });
        }
        let dj = d.sqrt();
        l.set(j, j, Complex::new(dj, T::zero()));
        for i in (j + 1)..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s = s - l.get(i, k) * l.get(j, k).conj();
            }
            l.set(i, j, s.unscale(dj));
        }
    }
    Ok(Cholesky { l })
}

impl<T: Scalar> Cholesky<T> {
    /// `ln det A = 2 * sum ln L_ii`.
    pub fn logdet(&self) -> T {
        let two = T::of(2.0);
        (0..self.l.rows()).fold(T::zero(), |acc, i| acc + two * self.l.get(i, i).re.ln())
    }

    /// Solve `A X = B` by forward/back substitution.
    pub fn solve(&self, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        let n = self.l.rows();
        assert_eq!(b.rows(), n, "cholesky solve dimension mismatch");
        let mut x = b.clone();
        // L y = b
        for col in 0..x.cols() {
            for i in 0..n {
                let mut s = x.get(i, col);
                for k in 0..i {
                    s = s - self.l.get(i, k) * x.get(k, col);
                }
                x.set(i, col, s.unscale(self.l.get(i, i).re));
            }
            // L^* x = y
            for i in (0..n).rev() {
                let mut s = x.get(i, col);
                for k in (i + 1)..n {
                    s = s - self.l.get(k, i).conj() * x.get(k, col);
                }
                x.set(i, col, s.unscale(self.l.get(i, i).re));
            }
        }
        x
    }

    pub fn inverse(&self) -> ComplexMatrix<T> {
        self.solve(&ComplexMatrix::identity(self.l.rows()))
    }
}

/// `ln det(a)` for Hermitian positive definite `a`.
pub fn logdet_hpd<T: Scalar>(a: &HermitianPsd<T>) -> Result<T> {
    Ok(cholesky(a)?.logdet())
}

/// Ridge scale used when positive definiteness fails during optimization:
/// `eps = 1e-9 * trace / dim`.
pub fn ridge_eps<T: Scalar>(a: &HermitianPsd<T>) -> T {
    let n = T::of(a.dim().max(1) as f64);
    T::of(1e-9) * a.trace().abs() / n
}

/// `logdet_hpd` with one ridge retry (`a + eps I`); the perturbation is
/// O(eps) in the returned value.
pub fn logdet_hpd_ridged<T: Scalar>(a: &HermitianPsd<T>) -> Result<T> {
    match logdet_hpd(a) {
        Ok(v) => Ok(v),
        Err(_) => logdet_hpd(&a.add_ridge(ridge_eps(a).max(T::epsilon()))),
    }
}

/// Cholesky with one ridge retry.
pub fn cholesky_ridged<T: Scalar>(a: &HermitianPsd<T>) -> Result<Cholesky<T>> {
    match cholesky(a) {
        Ok(c) => Ok(c),
        Err(_) => cholesky(&a.add_ridge(ridge_eps(a).max(T::epsilon()))),
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the unitary `V` with matching
/// columns, so `a = V diag(eigs) V^*`.
pub fn eigh<T: Scalar>(a: &ComplexMatrix<T>) -> (Vec<T>, ComplexMatrix<T>) {
    assert!(a.is_square(), "eigh requires a square matrix");
    let n = a.rows();
    let mut m = a.hermitize();
    let mut v = ComplexMatrix::<T>::identity(n);
    if n <= 1 {
        let eigs = (0..n).map(|i| m.get(i, i).re).collect();
        return (eigs, v);
    }

    let norm = m.frobenius_norm();
    let stop = norm * T::epsilon() * T::of(n as f64);
    for _sweep in 0..64 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += m.get(p, q).norm_sqr();
            }
        }
        if off.sqrt() <= stop || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                let abs_apq = apq.norm();
                if abs_apq <= norm * T::epsilon() {
                    continue;
                }
                let app = m.get(p, p).re;
                let aqq = m.get(q, q).re;
                // phase = apq / |apq|; rotation angle from tan(2theta) = 2|apq| / (aqq - app)
                let phase = apq.unscale(abs_apq);
                let tau = (aqq - app) / (T::of(2.0) * abs_apq);
                let t = if tau == T::zero() {
                    T::one()
                } else {
                    let s = if tau > T::zero() { T::one() } else { -T::one() };
                    s / (tau.abs() + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;

                // Columns p,q: a_ip' = c a_ip - s e^{-i phi} a_iq ; a_iq' = s e^{i phi} a_ip + c a_iq
                let se_pos = phase.scale(s);
                let se_neg = phase.conj().scale(s);
                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = m.get(i, p);
                    let aiq = m.get(i, q);
                    let new_p = aip.scale(c) - se_neg * aiq;
                    let new_q = se_pos * aip + aiq.scale(c);
                    m.set(i, p, new_p);
                    m.set(i, q, new_q);
                    m.set(p, i, new_p.conj());
                    m.set(q, i, new_q.conj());
                }
                let app_new = c * c * app - T::of(2.0) * c * s * abs_apq + s * s * aqq;
                let aqq_new = s * s * app + T::of(2.0) * c * s * abs_apq + c * c * aqq;
                m.set(p, p, Complex::new(app_new, T::zero()));
                m.set(q, q, Complex::new(aqq_new, T::zero()));
                m.set(p, q, Complex::new(T::zero(), T::zero()));
                m.set(q, p, Complex::new(T::zero(), T::zero()));

                for i in 0..n {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, vip.scale(c) - se_neg * viq);
                    v.set(i, q, se_pos * vip + viq.scale(c));
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let eigs_raw: Vec<T> = (0..n).map(|i| m.get(i, i).re).collect();
    order.sort_by(|&i, &j| eigs_raw[i].partial_cmp(&eigs_raw[j]).unwrap());
    let eigs: Vec<T> = order.iter().map(|&i| eigs_raw[i]).collect();
    let v_sorted = ComplexMatrix::from_fn(n, n, |i, j| v.get(i, order[j]));
    (eigs, v_sorted)
}

fn rank_from_eigs<T: Scalar>(eigs: &[T], rel_tol: T) -> usize {
    let max = eigs.iter().fold(T::zero(), |a, &b| a.max(b));
    if max <= T::zero() {
        return 0;
    }
    eigs.iter().filter(|&&l| l > rel_tol * max).count()
}

/// Factor a PSD matrix as `T T^*` via eigendecomposition, clamping negative
/// eigenvalues to zero. Columns are ordered by decreasing eigenvalue.
///
/// With `target_rank` given, exactly that many columns are returned;
/// reconstruction `T T^* = sigma` holds when `target_rank` is at least the
/// numeric rank. `RankDeficient` is returned when `target_rank` exceeds it.
pub fn psd_factor<T: Scalar>(
    sigma: &HermitianPsd<T>,
    target_rank: Option<usize>,
) -> Result<ComplexMatrix<T>> {
    let n = sigma.dim();
    let (eigs, v) = eigh(sigma.as_matrix());
    let rel_tol = T::of(n as f64) * T::epsilon() * T::of(32.0);
    let rank = rank_from_eigs(&eigs, rel_tol);
    let k = target_rank.unwrap_or(rank);
    if k > rank {
        return Err(Error::RankDeficient {
            requested: k,
            numeric: rank,
        });
    }
    // eigs ascending; take the top k.
    let mut t = ComplexMatrix::zeros(n, k);
    for j in 0..k {
        let src = n - 1 - j;
        let scale = eigs[src].max(T::zero()).sqrt();
        for i in 0..n {
            t.set(i, j, v.get(i, src).scale(scale));
        }
    }
    Ok(t)
}

/// Moore-Penrose pseudo-inverse via the Gram eigendecomposition:
/// `A^+ = (A^* A)^+ A^*` (or the transposed variant when rows < cols).
pub fn pseudo_inverse<T: Scalar>(a: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let (m, n) = (a.rows(), a.cols());
    if m == 0 || n == 0 {
        return ComplexMatrix::zeros(n, m);
    }
    if m >= n {
        let gram = a.adjoint().matmul(a).hermitize();
        let ginv = gram_pseudo_inverse(&gram, m.max(n));
        ginv.matmul(&a.adjoint())
    } else {
        let gram = a.matmul(&a.adjoint()).hermitize();
        let ginv = gram_pseudo_inverse(&gram, m.max(n));
        a.adjoint().matmul(&ginv)
    }
}

fn gram_pseudo_inverse<T: Scalar>(gram: &ComplexMatrix<T>, long_dim: usize) -> ComplexMatrix<T> {
    let (eigs, v) = eigh(gram);
    let max = eigs.iter().fold(T::zero(), |a, &b| a.max(b));
    let tol = T::of(long_dim as f64) * T::epsilon() * T::of(32.0) * max;
    let n = gram.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        if eigs[k] <= tol || eigs[k] <= T::zero() {
            continue;
        }
        let inv = T::one() / eigs[k];
        for i in 0..n {
            let vik = v.get(i, k);
            if vik.norm_sqr() == T::zero() {
                continue;
            }
            for j in 0..n {
                let add = vik * v.get(j, k).conj();
                let cur = out.get(i, j) + add.scale(inv);
                out.set(i, j, cur);
            }
        }
    }
    out
}

/// Singular values by one-sided Jacobi (columns orthogonalized in place),
/// descending. Avoids forming the Gram matrix, so small singular values keep
/// high relative accuracy.
pub fn singular_values<T: Scalar>(a: &ComplexMatrix<T>) -> Vec<T> {
    if a.rows() == 0 || a.cols() == 0 {
        return Vec::new();
    }
    let mut m = if a.rows() >= a.cols() { a.clone() } else { a.adjoint() };
    let (rows, cols) = (m.rows(), m.cols());
    for _sweep in 0..64 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let mut app = T::zero();
                let mut aqq = T::zero();
                let mut apq = Complex::new(T::zero(), T::zero());
                for i in 0..rows {
                    let xp = m.get(i, p);
                    let xq = m.get(i, q);
                    app += xp.norm_sqr();
                    aqq += xq.norm_sqr();
                    apq = apq + xp.conj() * xq;
                }
                let abs_apq = apq.norm();
                if abs_apq <= T::epsilon() * (app * aqq).sqrt() || abs_apq == T::zero() {
                    continue;
                }
                rotated = true;
                let phase = apq.unscale(abs_apq);
                let tau = (aqq - app) / (T::of(2.0) * abs_apq);
                let t = if tau == T::zero() {
                    T::one()
                } else {
                    let s = if tau > T::zero() { T::one() } else { -T::one() };
                    s / (tau.abs() + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                let se_pos = phase.scale(s);
                let se_neg = phase.conj().scale(s);
                for i in 0..rows {
                    let xp = m.get(i, p);
                    let xq = m.get(i, q);
                    m.set(i, p, xp.scale(c) - se_neg * xq);
                    m.set(i, q, se_pos * xp + xq.scale(c));
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = (0..cols)
        .map(|j| {
            (0..rows)
                .fold(T::zero(), |acc, i| acc + m.get(i, j).norm_sqr())
                .sqrt()
        })
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Number of singular values strictly greater than `tol * largest`.
pub fn numeric_rank<T: Scalar>(a: &ComplexMatrix<T>, tol: T) -> usize {
    assert!(tol > T::zero(), "numeric_rank requires tol > 0");
    let sv = singular_values(a);
    let max = sv.first().copied().unwrap_or(T::zero());
    if max <= T::zero() {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * max).count()
}

/// Solve `A X = B` for Hermitian positive definite `A`, with one ridge retry.
pub fn solve_hpd_ridged<T: Scalar>(
    a: &HermitianPsd<T>,
    b: &ComplexMatrix<T>,
) -> Result<ComplexMatrix<T>> {
    Ok(cholesky_ridged(a)?.solve(b))
}
