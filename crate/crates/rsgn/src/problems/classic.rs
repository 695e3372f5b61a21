//! Classic analytic nonlinear least-squares test problems, scalable in
//! dimension. These stand in for large benchmark suites: nonconvex, square
//! or overdetermined residual systems with known structure.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::NlsProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestProblemName {
    /// Pairs of residuals `(10(x_{2k+1} − x_{2k}²), 1 − x_{2k})`; `d` even,
    /// `f* = 0` at the all-ones point.
    ExtendedRosenbrock,
    /// Tridiagonal system `r_i = x_{i−1} + 2x_{i+1} − (3 − 2x_i)x_i − 1`
    /// with zero boundary values; `f* = 0`.
    BroydenTridiagonal,
    /// Overlapping singular 4-residual blocks; `d` even ≥ 4, `f* = 0` at
    /// the origin with a singular Jacobian there.
    ChainedSingular,
}

impl fmt::Display for TestProblemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TestProblemName::ExtendedRosenbrock => "extended_rosenbrock",
            TestProblemName::BroydenTridiagonal => "broyden_tridiagonal",
            TestProblemName::ChainedSingular => "chained_singular",
        };
        write!(f, "{name}")
    }
}

impl FromStr for TestProblemName {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        match text.trim() {
            "extended_rosenbrock" => Ok(TestProblemName::ExtendedRosenbrock),
            "broyden_tridiagonal" => Ok(TestProblemName::BroydenTridiagonal),
            "chained_singular" => Ok(TestProblemName::ChainedSingular),
            other => Err(Error::InvalidParameter(format!(
                "unknown test problem '{other}'"
            ))),
        }
    }
}

/// Build one of the named test problems in dimension `d`.
pub fn build_test_problem(name: TestProblemName, d: usize) -> Result<Box<dyn NlsProblem>> {
    match name {
        TestProblemName::ExtendedRosenbrock => {
            if d < 2 || d % 2 != 0 {
                return Err(Error::InvalidParameter(format!(
                    "extended_rosenbrock needs even d >= 2, got {d}"
                )));
            }
            Ok(Box::new(ExtendedRosenbrock { d }))
        }
        TestProblemName::BroydenTridiagonal => {
            if d < 1 {
                return Err(Error::InvalidParameter(
                    "broyden_tridiagonal needs d >= 1".into(),
                ));
            }
            Ok(Box::new(BroydenTridiagonal { d }))
        }
        TestProblemName::ChainedSingular => {
            if d < 4 || d % 2 != 0 {
                return Err(Error::InvalidParameter(format!(
                    "chained_singular needs even d >= 4, got {d}"
                )));
            }
            Ok(Box::new(ChainedSingular { d }))
        }
    }
}

/// The customary starting point for each problem.
pub fn standard_start(name: TestProblemName, d: usize) -> Vec<f64> {
    match name {
        TestProblemName::ExtendedRosenbrock => (0..d)
            .map(|j| if j % 2 == 0 { -1.2 } else { 1.0 })
            .collect(),
        TestProblemName::BroydenTridiagonal => vec![-1.0; d],
        TestProblemName::ChainedSingular => {
            let pattern = [3.0, -1.0, 0.0, 1.0];
            (0..d).map(|j| pattern[j % 4]).collect()
        }
    }
}

#[derive(Debug, Clone)]
struct ExtendedRosenbrock {
    d: usize,
}

impl NlsProblem for ExtendedRosenbrock {
    fn residual_count(&self) -> usize {
        self.d
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.d, x, "extended_rosenbrock point")?;
        let mut r = vec![0.0; self.d];
        for k in 0..self.d / 2 {
            let (a, b) = (x[2 * k], x[2 * k + 1]);
            r[2 * k] = 10.0 * (b - a * a);
            r[2 * k + 1] = 1.0 - a;
        }
        Ok(r)
    }

    fn jacobian_action(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.d, x, "extended_rosenbrock point")?;
        check_dim(self.d, v, "extended_rosenbrock direction")?;
        let mut jv = vec![0.0; self.d];
        for k in 0..self.d / 2 {
            jv[2 * k] = 10.0 * (v[2 * k + 1] - 2.0 * x[2 * k] * v[2 * k]);
            jv[2 * k + 1] = -v[2 * k];
        }
        Ok(jv)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let r = self.residual(x)?;
        let mut g = vec![0.0; self.d];
        for k in 0..self.d / 2 {
            g[2 * k] = -20.0 * x[2 * k] * r[2 * k] - r[2 * k + 1];
            g[2 * k + 1] = 10.0 * r[2 * k];
        }
        Ok(g)
    }
}

#[derive(Debug, Clone)]
struct BroydenTridiagonal {
    d: usize,
}

impl NlsProblem for BroydenTridiagonal {
    fn residual_count(&self) -> usize {
        self.d
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.d, x, "broyden_tridiagonal point")?;
        let at = |i: isize| -> f64 {
            if i < 0 || i as usize >= self.d {
                0.0
            } else {
                x[i as usize]
            }
        };
        Ok((0..self.d)
            .map(|i| {
                let i = i as isize;
                at(i - 1) + 2.0 * at(i + 1) - (3.0 - 2.0 * at(i)) * at(i) - 1.0
            })
            .collect())
    }

    fn jacobian_action(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.d, x, "broyden_tridiagonal point")?;
        check_dim(self.d, v, "broyden_tridiagonal direction")?;
        let at = |arr: &[f64], i: isize| -> f64 {
            if i < 0 || i as usize >= self.d {
                0.0
            } else {
                arr[i as usize]
            }
        };
        Ok((0..self.d)
            .map(|i| {
                let ii = i as isize;
                // ∂r_i/∂x_{i−1} = 1, ∂r_i/∂x_i = 4x_i − 3, ∂r_i/∂x_{i+1} = 2
                at(v, ii - 1) + 2.0 * at(v, ii + 1) + (4.0 * x[i] - 3.0) * v[i]
            })
            .collect())
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let r = self.residual(x)?;
        let mut g = vec![0.0; self.d];
        for i in 0..self.d {
            if i > 0 {
                g[i - 1] += r[i];
            }
            g[i] += (4.0 * x[i] - 3.0) * r[i];
            if i + 1 < self.d {
                g[i + 1] += 2.0 * r[i];
            }
        }
        Ok(g)
    }
}

#[derive(Debug, Clone)]
struct ChainedSingular {
    d: usize,
}

impl ChainedSingular {
    fn blocks(&self) -> usize {
        (self.d - 2) / 2
    }
}

impl NlsProblem for ChainedSingular {
    fn residual_count(&self) -> usize {
        4 * self.blocks()
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.d, x, "chained_singular point")?;
        let mut r = vec![0.0; self.residual_count()];
        for k in 0..self.blocks() {
            let i = 2 * k;
            r[4 * k] = x[i] + 10.0 * x[i + 1];
            r[4 * k + 1] = 5f64.sqrt() * (x[i + 2] - x[i + 3]);
            r[4 * k + 2] = (x[i + 1] - 2.0 * x[i + 2]).powi(2);
            r[4 * k + 3] = 10f64.sqrt() * (x[i] - x[i + 3]).powi(2);
        }
        Ok(r)
    }

    fn jacobian_action(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.d, x, "chained_singular point")?;
        check_dim(self.d, v, "chained_singular direction")?;
        let mut jv = vec![0.0; self.residual_count()];
        for k in 0..self.blocks() {
            let i = 2 * k;
            jv[4 * k] = v[i] + 10.0 * v[i + 1];
            jv[4 * k + 1] = 5f64.sqrt() * (v[i + 2] - v[i + 3]);
            jv[4 * k + 2] = 2.0 * (x[i + 1] - 2.0 * x[i + 2]) * (v[i + 1] - 2.0 * v[i + 2]);
            jv[4 * k + 3] = 2.0 * 10f64.sqrt() * (x[i] - x[i + 3]) * (v[i] - v[i + 3]);
        }
        Ok(jv)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let r = self.residual(x)?;
        let mut g = vec![0.0; self.d];
        for k in 0..self.blocks() {
            let i = 2 * k;
            g[i] += r[4 * k];
            g[i + 1] += 10.0 * r[4 * k];
            g[i + 2] += 5f64.sqrt() * r[4 * k + 1];
            g[i + 3] -= 5f64.sqrt() * r[4 * k + 1];
            let q = 2.0 * (x[i + 1] - 2.0 * x[i + 2]) * r[4 * k + 2];
            g[i + 1] += q;
            g[i + 2] -= 2.0 * q;
            let p = 2.0 * 10f64.sqrt() * (x[i] - x[i + 3]) * r[4 * k + 3];
            g[i] += p;
            g[i + 3] -= p;
        }
        Ok(g)
    }
}

fn check_dim(d: usize, x: &[f64], context: &'static str) -> Result<()> {
    if x.len() != d {
        return Err(Error::dim(context, d, x.len()));
    }
    Ok(())
}
