//! Small dense linear-algebra helpers.
//!
//! Everything in the crate is matrix-free except the sketched Jacobian and
//! the test problems' data matrices, so a minimal row-major matrix plus a
//! handful of vector kernels is all that is needed.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Build from row-major data; `data.len()` must equal `rows * cols`.
    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length mismatch");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// y = Aᵀ x
    pub fn mul_transpose_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            axpy(x[i], self.row(i), &mut out);
        }
        out
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// y += alpha * x
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| alpha * v).collect()
}

/// Deterministic unit vector for power-iteration starts.
pub(crate) fn seeded_unit_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
    let n = norm2(&v);
    if n == 0.0 {
        v[0] = 1.0;
    } else {
        for x in &mut v {
            *x /= n;
        }
    }
    v
}

/// Largest-eigenvalue estimate of a symmetric PSD operator by power
/// iteration, returned as the best Rayleigh quotient seen.
///
/// For PSD operators the Rayleigh quotients of the power sequence are
/// nondecreasing, so the result is a lower bound on the true spectral
/// radius that improves with `iterations`.
pub(crate) fn power_iteration_lambda_max<F>(
    op: F,
    dim: usize,
    iterations: usize,
    start: Vec<f64>,
) -> f64
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    assert_eq!(start.len(), dim);
    let mut v = start;
    let n = norm2(&v);
    if n == 0.0 {
        return 0.0;
    }
    for x in &mut v {
        *x /= n;
    }
    let mut best = 0.0f64;
    for _ in 0..iterations {
        let w = op(&v);
        let rayleigh = dot(&v, &w);
        if rayleigh > best {
            best = rayleigh;
        }
        let wn = norm2(&w);
        if wn == 0.0 || !wn.is_finite() {
            break;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / wn;
        }
    }
    best.max(0.0)
}

/// splitmix64 step; used to derive independent child seeds.
pub(crate) fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable child-seed derivation from a base seed and index tuple.
///
/// Independent of platform and of the order in which other seeds are drawn.
pub(crate) fn mix_seed(base: u64, indices: &[u64]) -> u64 {
    let mut z = splitmix64(base);
    for &i in indices {
        z = splitmix64(z ^ splitmix64(i.wrapping_add(0xA076_1D64_78BD_642F)));
    }
    z
}
