//! Dense linear-algebra helpers shared across modules.

use nalgebra::{Complex, DMatrix, Schur, SymmetricEigen};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::poly::Poly;

/// Determinant by LU with partial pivoting.
pub fn det(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    m.clone().lu().determinant()
}

pub fn det_complex(m: &DMatrix<Complex<f64>>) -> Complex<f64> {
    if m.nrows() == 0 {
        return Complex::new(1.0, 0.0);
    }
    m.clone().lu().determinant()
}

/// Eigenvalues via a bounded real Schur iteration. Highly structured inputs
/// (0/1 matrices with many equal eigenvalues) can stall the QR sweep; those
/// are retried after a fixed orthogonal similarity.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    if let Some(s) = Schur::try_new(m.clone(), f64::EPSILON, 50 * n.max(10)) {
        return s.complex_eigenvalues().iter().copied().collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..8 {
        let q = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)).qr().q();
        let rotated = q.transpose() * m * &q;
        if let Some(s) = Schur::try_new(rotated, f64::EPSILON, 200 * n.max(10)) {
            return s.complex_eigenvalues().iter().copied().collect();
        }
    }
    panic!("real Schur iteration failed to converge on a {n}x{n} matrix");
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 100 * n.max(10))
        .expect("symmetric eigen-decomposition failed to converge");
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.iter().copied().fold(0.0, f64::max)
}

pub fn identity(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n)
}

pub fn from_rows(rows: &[Vec<i64>]) -> DMatrix<f64> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, m, |i, j| rows[i][j] as f64)
}

/// Coefficients `c_0..c_n` of `det(I - u M) = Σ c_k uᵏ`, computed exactly by
/// the Faddeev-LeVerrier recursion over the rationals.
pub fn det_i_minus_u_m(m: &[Vec<i64>]) -> Poly {
    let n = m.len();
    let a: Vec<Vec<BigRational>> =
        m.iter().map(|row| row.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect()).collect();
    // Characteristic polynomial det(λI - M) = Σ_k c_k λ^{n-k}; then
    // det(I - uM) = Σ_k c_k u^k.
    let mut c = vec![BigRational::one()];
    // am = A·M_{k-1}, starting from M_0 = 0.
    let mut am = vec![vec![BigRational::zero(); n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{k-1} I,  c_k = -tr(A M_k)/k.
        let mut mk = am;
        for (i, row) in mk.iter_mut().enumerate() {
            row[i] += &c[k - 1];
        }
        am = rational_matmul(&a, &mk);
        let tr = (0..n).fold(BigRational::zero(), |acc, i| acc + &am[i][i]);
        c.push(-tr / BigRational::from_integer(BigInt::from(k)));
    }
    Poly::new(
        c.into_iter()
            .map(|x| {
                assert!(x.is_integer(), "characteristic coefficients of an integer matrix are integers");
                x.to_integer()
            })
            .collect(),
    )
}

fn rational_matmul(a: &[Vec<BigRational>], b: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let n = a.len();
    let p = b.first().map_or(0, Vec::len);
    let mut out = vec![vec![BigRational::zero(); p]; n];
    for i in 0..n {
        for (k, aik) in a[i].iter().enumerate() {
            if aik.is_zero() {
                continue;
            }
            for j in 0..p {
                if !b[k][j].is_zero() {
                    out[i][j] += aik * &b[k][j];
                }
            }
        }
    }
    out
}

/// Exact determinant of a rational matrix by Gaussian elimination.
pub fn det_rational(mut a: Vec<Vec<BigRational>>) -> BigRational {
    let n = a.len();
    let mut d = BigRational::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&r| !a[r][k].is_zero()) else {
            return BigRational::zero();
        };
        if p != k {
            a.swap(p, k);
            d = -d;
        }
        let piv = a[k][k].clone();
        d *= &piv;
        for i in k + 1..n {
            if a[i][k].is_zero() {
                continue;
            }
            let f = &a[i][k] / &piv;
            for j in k..n {
                let v = &f * &a[k][j];
                a[i][j] -= v;
            }
        }
    }
    d
}
