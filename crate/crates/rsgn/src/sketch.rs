//! Random sketching operators `S ∈ R^{l×d}`.
//!
//! Four ensembles are supported: dense Gaussian, sparse s-hashing, coordinate
//! sampling and the deterministic identity. Gaussian entries are i.i.d.
//! `N(0, 1/l)`, hashing columns carry `s` signed entries `±1/√s` in distinct
//! rows, and sampling rows each pick one coordinate uniformly with value
//! `√(d/l)`. All three random ensembles are scaled so that
//! `E‖Sy‖² = ‖y‖²`, which is what makes the sketched model gradient an
//! unbiased norm estimate of the projected gradient.
//!
//! Operators are immutable after [`draw`] and cheap to apply in both
//! directions (`y ↦ Sy`, `s ↦ Sᵀs`). Sampling and identity operators expose
//! their [`column_support`](SketchOperator::column_support), which downstream
//! code uses to extract Jacobian columns directly instead of forming
//! directional derivatives.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// The random matrix ensemble a sketch is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SketchKind {
    /// Dense i.i.d. `N(0, 1/l)` entries.
    Gaussian,
    /// Sparse embedding with `s` entries `±1/√s` per column, rows distinct.
    Hashing { s: usize },
    /// One uniformly sampled coordinate per row, value `√(d/l)`; rows draw
    /// independently, so repeats are possible. Selecting coordinates turns
    /// the solver into a block-coordinate Gauss-Newton method.
    Sampling,
    /// `S = I_d`; requires `l == d`. Recovers the full (unsketched) method.
    Identity,
}

impl fmt::Display for SketchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SketchKind::Gaussian => write!(f, "gaussian"),
            SketchKind::Hashing { s } => write!(f, "hashing(s={s})"),
            SketchKind::Sampling => write!(f, "sampling"),
            SketchKind::Identity => write!(f, "identity"),
        }
    }
}

impl FromStr for SketchKind {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let t = text.trim();
        match t {
            "gaussian" => Ok(SketchKind::Gaussian),
            "sampling" => Ok(SketchKind::Sampling),
            "identity" => Ok(SketchKind::Identity),
            _ => {
                // "hashing(s=3)" or the shorthand "hashing:3"
                let inner = t
                    .strip_prefix("hashing(s=")
                    .and_then(|r| r.strip_suffix(')'))
                    .or_else(|| t.strip_prefix("hashing:"));
                match inner.and_then(|v| v.parse::<usize>().ok()) {
                    Some(s) => Ok(SketchKind::Hashing { s }),
                    None => Err(Error::InvalidParameter(format!(
                        "unknown sketch kind '{text}' (expected gaussian, \
                         hashing(s=N), sampling or identity)"
                    ))),
                }
            }
        }
    }
}

impl Serialize for SketchKind {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SketchKind {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Payload {
    /// Row-major l×d entries (Gaussian).
    Dense(Vec<f64>),
    /// (row, col, value) triples sorted by column then row
    /// (hashing / sampling / identity).
    Sparse(Vec<(usize, usize, f64)>),
}

/// A sampled sketching matrix in a representation supporting fast
/// `y ↦ Sy` and `s ↦ Sᵀs`.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchOperator {
    kind: SketchKind,
    l: usize,
    d: usize,
    payload: Payload,
}

/// Draw a fresh sketching operator from the given ensemble.
///
/// Requires `1 ≤ l ≤ d` (and `l == d` for the identity); hashing requires
/// `1 ≤ s ≤ l`.
pub fn draw<R: Rng>(kind: SketchKind, l: usize, d: usize, rng: &mut R) -> Result<SketchOperator> {
    if l < 1 || l > d {
        return Err(Error::dim("sketch dimensions (need 1 <= l <= d)", d, l));
    }
    let payload = match kind {
        SketchKind::Gaussian => {
            let normal = Normal::new(0.0, (1.0 / l as f64).sqrt()).expect("valid std dev");
            let entries = (0..l * d).map(|_| normal.sample(rng)).collect();
            Payload::Dense(entries)
        }
        SketchKind::Hashing { s } => {
            if s < 1 || s > l {
                return Err(Error::InvalidParameter(format!(
                    "hashing nonzero count s={s} must satisfy 1 <= s <= l={l}"
                )));
            }
            let value = 1.0 / (s as f64).sqrt();
            let mut triples = Vec::with_capacity(s * d);
            for col in 0..d {
                let mut rows: Vec<usize> = rand::seq::index::sample(rng, l, s).into_vec();
                rows.sort_unstable();
                for row in rows {
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    triples.push((row, col, sign * value));
                }
            }
            Payload::Sparse(triples)
        }
        SketchKind::Sampling => {
            let value = (d as f64 / l as f64).sqrt();
            let mut triples: Vec<(usize, usize, f64)> = (0..l)
                .map(|row| (row, rng.random_range(0..d), value))
                .collect();
            triples.sort_unstable_by_key(|&(row, col, _)| (col, row));
            Payload::Sparse(triples)
        }
        SketchKind::Identity => {
            if l != d {
                return Err(Error::InvalidParameter(format!(
                    "identity sketch requires l == d, got l={l}, d={d}"
                )));
            }
            Payload::Sparse((0..d).map(|i| (i, i, 1.0)).collect())
        }
    };
    Ok(SketchOperator {
        kind,
        l,
        d,
        payload,
    })
}

impl SketchOperator {
    pub fn kind(&self) -> SketchKind {
        self.kind
    }

    /// Row count l.
    pub fn rows(&self) -> usize {
        self.l
    }

    /// Column count d.
    pub fn cols(&self) -> usize {
        self.d
    }

    /// `Sy` for `y ∈ R^d`.
    pub fn apply_vec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.d {
            return Err(Error::dim("apply_vec input", self.d, y.len()));
        }
        match &self.payload {
            Payload::Dense(entries) => Ok((0..self.l)
                .map(|i| linalg::dot(&entries[i * self.d..(i + 1) * self.d], y))
                .collect()),
            Payload::Sparse(triples) => {
                let mut out = vec![0.0; self.l];
                for &(row, col, value) in triples {
                    out[row] += value * y[col];
                }
                Ok(out)
            }
        }
    }

    /// `Sᵀs` for `s ∈ R^l`. For sampling sketches the result is supported on
    /// the selected coordinates only.
    pub fn apply_transpose(&self, s: &[f64]) -> Result<Vec<f64>> {
        if s.len() != self.l {
            return Err(Error::dim("apply_transpose input", self.l, s.len()));
        }
        let mut out = vec![0.0; self.d];
        match &self.payload {
            Payload::Dense(entries) => {
                for i in 0..self.l {
                    linalg::axpy(s[i], &entries[i * self.d..(i + 1) * self.d], &mut out);
                }
            }
            Payload::Sparse(triples) => {
                for &(row, col, value) in triples {
                    out[col] += value * s[row];
                }
            }
        }
        Ok(out)
    }

    /// The coordinate selected by each row, in row order, when the sketch is
    /// a (scaled) selection matrix; `None` for dense column combinations
    /// (Gaussian, hashing).
    pub fn column_support(&self) -> Option<Vec<usize>> {
        match self.kind {
            SketchKind::Sampling | SketchKind::Identity => {
                let Payload::Sparse(triples) = &self.payload else {
                    unreachable!("selection sketches use the sparse payload");
                };
                let mut support = vec![0; self.l];
                for &(row, col, _) in triples {
                    support[row] = col;
                }
                Some(support)
            }
            SketchKind::Gaussian | SketchKind::Hashing { .. } => None,
        }
    }

    /// The scalar carried by every nonzero of a selection sketch
    /// (`√(d/l)`; `1` for the identity).
    pub(crate) fn selection_scale(&self) -> f64 {
        (self.d as f64 / self.l as f64).sqrt()
    }

    /// Power-iteration estimate of `‖S‖₂`, converging from below.
    ///
    /// The start vector is derived from a fixed seed, so repeated calls give
    /// identical results.
    pub fn operator_norm_estimate(&self, iterations: usize) -> f64 {
        assert!(iterations >= 1, "need at least one power iteration");
        let mut rng = crate::seeded_rng(0x5EED_0F_0E57);
        let start = linalg::seeded_unit_vector(self.d, &mut rng);
        let op = |v: &[f64]| {
            let sv = self.apply_vec(v).expect("dimension fixed by operator");
            self.apply_transpose(&sv).expect("dimension fixed by operator")
        };
        linalg::power_iteration_lambda_max(op, self.d, iterations, start).sqrt()
    }

    #[cfg(test)]
    pub(crate) fn triples(&self) -> Option<&[(usize, usize, f64)]> {
        match &self.payload {
            Payload::Sparse(t) => Some(t),
            Payload::Dense(_) => None,
        }
    }
}

/// Empirical failure rate of the `(1±ε_S)` norm-preservation property over
/// independent draws against one fixed test vector.
///
/// The test vector defaults to a uniformly random direction drawn from `rng`;
/// pass `test_vector` to probe non-uniform directions (for sampling sketches
/// the failure rate grows with `‖y‖_∞ / ‖y‖₂`).
pub fn embedding_trial<R: Rng>(
    kind: SketchKind,
    l: usize,
    d: usize,
    epsilon_s: f64,
    trials: usize,
    rng: &mut R,
    test_vector: Option<&[f64]>,
) -> Result<f64> {
    if trials < 1 {
        return Err(Error::InvalidParameter(
            "embedding_trial needs trials >= 1".into(),
        ));
    }
    if !(epsilon_s > 0.0 && epsilon_s < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon_S must lie in (0, 1), got {epsilon_s}"
        )));
    }
    let y = match test_vector {
        Some(v) => {
            if v.len() != d {
                return Err(Error::dim("embedding_trial test vector", d, v.len()));
            }
            let n = linalg::norm2(v);
            if n == 0.0 {
                return Err(Error::InvalidParameter(
                    "embedding_trial test vector must be nonzero".into(),
                ));
            }
            linalg::scale(1.0 / n, v)
        }
        None => {
            // Uniform direction: normalized Gaussian.
            let normal = Normal::new(0.0, 1.0).expect("valid std dev");
            let v: Vec<f64> = (0..d).map(|_| normal.sample(rng)).collect();
            let n = linalg::norm2(&v);
            linalg::scale(1.0 / n, &v)
        }
    };

    // Pre-draw one child seed per trial so the count is independent of how
    // trials are scheduled across threads.
    let seeds: Vec<u64> = (0..trials).map(|_| rng.random::<u64>()).collect();
    let violates = |seed: &u64| -> Result<usize> {
        let mut trial_rng = crate::seeded_rng(*seed);
        let sketch = draw(kind, l, d, &mut trial_rng)?;
        let sy = sketch.apply_vec(&y)?;
        let sq = linalg::dot(&sy, &sy);
        Ok(usize::from(sq < 1.0 - epsilon_s || sq > 1.0 + epsilon_s))
    };

    #[cfg(feature = "parallel")]
    let failures: usize = seeds.par_iter().map(violates).sum::<Result<usize>>()?;
    #[cfg(not(feature = "parallel"))]
    let failures: usize = seeds.iter().map(violates).sum::<Result<usize>>()?;

    Ok(failures as f64 / trials as f64)
}
