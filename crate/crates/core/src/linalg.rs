//! Dense symmetric solves for normal equations.
//!
//! Matrices are square, row-major `Vec<f64>`. Only what least squares needs.

/// Condition-number estimate above which the ridge fallback kicks in.
pub const CONDITION_LIMIT: f64 = 1e12;
/// Ridge strength relative to the mean diagonal of the normal matrix.
pub const RIDGE_SCALE: f64 = 1e-8;
const RIDGE_RETRIES: usize = 12;

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factorizes `a`; `None` when a pivot is not strictly positive.
    pub fn factor(a: &[f64], n: usize) -> Option<Cholesky> {
        debug_assert_eq!(a.len(), n * n);
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in (j + 1)..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Some(Cholesky { n, l })
    }

    /// Cheap condition estimate: squared ratio of extreme pivots.
    pub fn condition_estimate(&self) -> f64 {
        let diag = (0..self.n).map(|i| self.l[i * self.n + i]);
        let (lo, hi) = diag.fold((f64::INFINITY, 0.0_f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
        if self.n == 0 {
            1.0
        } else {
            (hi / lo).powi(2)
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}

/// Outcome of factoring a normal matrix.
#[derive(Debug, Clone)]
pub struct RegularizedFactor {
    pub factor: Cholesky,
    /// Ridge added to the diagonal (0 when none was needed).
    pub ridge: f64,
}

impl RegularizedFactor {
    pub fn rank_deficient(&self) -> bool {
        self.ridge > 0.0
    }
}

/// Factors the symmetric normal matrix `gram`, adding a ridge
/// `RIDGE_SCALE * trace / n` when plain Cholesky fails or the condition
/// estimate exceeds [`CONDITION_LIMIT`]. The ridge grows tenfold per retry.
/// `None` when the matrix has zero trace or stays unfactorable.
pub fn factor_normal_matrix(gram: &[f64], n: usize) -> Option<RegularizedFactor> {
    if let Some(f) = Cholesky::factor(gram, n) {
        if f.condition_estimate() <= CONDITION_LIMIT {
            return Some(RegularizedFactor { factor: f, ridge: 0.0 });
        }
    }
    let trace: f64 = (0..n).map(|i| gram[i * n + i]).sum();
    if !(trace > 0.0) || !trace.is_finite() {
        return None;
    }
    let mut ridge = RIDGE_SCALE * trace / n as f64;
    let mut shifted = gram.to_vec();
    for _ in 0..RIDGE_RETRIES {
        for i in 0..n {
            shifted[i * n + i] = gram[i * n + i] + ridge;
        }
        if let Some(f) = Cholesky::factor(&shifted, n) {
            return Some(RegularizedFactor { factor: f, ridge });
        }
        ridge *= 10.0;
    }
    None
}

/// `XᵀX` for row-major `rows` (each of length `p`).
pub fn gram<R: AsRef<[f64]>>(rows: &[R], p: usize) -> Vec<f64> {
    let mut g = vec![0.0; p * p];
    for row in rows {
        let r = row.as_ref();
        for i in 0..p {
            let ri = r[i];
            if ri == 0.0 {
                continue;
            }
            for j in i..p {
                g[i * p + j] += ri * r[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            g[i * p + j] = g[j * p + i];
        }
    }
    g
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
