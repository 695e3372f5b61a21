//! Experiment specifications, loadable from JSON or TOML.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::problems::{
    build_linear, build_logistic, build_test_problem, load_dataset, standard_start,
    synthetic_classification, DatasetFormat, NlsProblem, TestProblemName,
};
use crate::sketch::SketchKind;
use rand::Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverVariant {
    Tr,
    Qr,
}

/// What to optimize: a named builder with parameters, or a dataset on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSpec {
    /// Random consistent linear system `r(x) = Ax − b`, `b = Ax*`.
    Linear {
        n: usize,
        d: usize,
        #[serde(default)]
        data_seed: u64,
    },
    /// One of the classic analytic test problems, started from its
    /// customary point.
    TestProblem { name: TestProblemName, d: usize },
    /// Seeded synthetic logistic regression.
    SyntheticLogistic {
        n: usize,
        d: usize,
        #[serde(default = "default_true")]
        separable: bool,
        lambda: f64,
        #[serde(default)]
        data_seed: u64,
    },
    /// Logistic regression over a dataset file.
    Dataset {
        path: PathBuf,
        format: DatasetFormat,
        lambda: f64,
        #[serde(default)]
        label_column: Option<usize>,
        #[serde(default)]
        intercept: bool,
    },
}

fn default_true() -> bool {
    true
}

impl ProblemSpec {
    /// Build the problem and its starting point.
    pub fn build(&self) -> Result<(Box<dyn NlsProblem>, Vec<f64>)> {
        match self {
            ProblemSpec::Linear { n, d, data_seed } => {
                let mut rng = crate::seeded_rng(*data_seed);
                let normal = Normal::new(0.0, 1.0).expect("valid std dev");
                let a = DenseMatrix::from_rows(
                    *n,
                    *d,
                    (0..n * d).map(|_| normal.sample(&mut rng)).collect(),
                );
                let x_star: Vec<f64> = (0..*d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
                let b = a.mul_vec(&x_star);
                Ok((Box::new(build_linear(a, b)?), vec![0.0; *d]))
            }
            ProblemSpec::TestProblem { name, d } => {
                let problem = build_test_problem(*name, *d)?;
                Ok((problem, standard_start(*name, *d)))
            }
            ProblemSpec::SyntheticLogistic {
                n,
                d,
                separable,
                lambda,
                data_seed,
            } => {
                let (data, labels) = synthetic_classification(*n, *d, *separable, *data_seed);
                let problem = build_logistic(data, labels, *lambda)?;
                let dim = problem.dim();
                Ok((Box::new(problem), vec![0.0; dim]))
            }
            ProblemSpec::Dataset {
                path,
                format,
                lambda,
                label_column,
                intercept,
            } => {
                let (data, labels) = load_dataset(path, *format, *label_column)?;
                let problem = build_logistic(data, labels, *lambda)?.with_intercept(*intercept);
                let dim = problem.dim();
                Ok((Box::new(problem), vec![0.0; dim]))
            }
        }
    }
}

/// A seeded sweep over sketch kinds and block-size fractions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub experiment_id: String,
    pub problem: ProblemSpec,
    #[serde(default = "default_variant")]
    pub variant: SolverVariant,
    /// Sketch ensembles to sweep (strings: `gaussian`, `hashing(s=3)`,
    /// `sampling`, `identity`).
    pub sketches: Vec<SketchKind>,
    /// Block sizes as fractions of `d`; `l = max(1, round(fraction · d))`.
    pub fractions: Vec<f64>,
    /// Independent solver runs per (sketch, fraction) cell.
    #[serde(default = "default_runs")]
    pub runs: usize,
    pub base_seed: u64,
    /// Iteration budget per run.
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub f_target: Option<f64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    // solver knobs, defaulted
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_gamma1")]
    pub gamma1: f64,
    #[serde(default = "default_c")]
    pub c: u32,
    #[serde(default = "default_delta0")]
    pub delta0: f64,
    #[serde(default = "default_sigma0")]
    pub sigma0: f64,
    #[serde(default)]
    pub grad_diag_every: usize,
    #[serde(default = "default_cg_rel_tol")]
    pub cg_rel_tol: f64,
    /// Cap on inner CG iterations (default `2l`). Worth setting on large,
    /// nearly singular systems where the residual tolerance is unreachable.
    #[serde(default)]
    pub cg_max_iter: Option<usize>,
}

fn default_variant() -> SolverVariant {
    SolverVariant::Tr
}
fn default_runs() -> usize {
    5
}
fn default_budget() -> usize {
    100
}
fn default_eta() -> f64 {
    0.1
}
fn default_gamma1() -> f64 {
    0.5
}
fn default_c() -> u32 {
    1
}
fn default_delta0() -> f64 {
    1.0
}
fn default_sigma0() -> f64 {
    1.0
}
fn default_cg_rel_tol() -> f64 {
    1e-8
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sketches.is_empty() || self.fractions.is_empty() {
            return Err(Error::InvalidConfig(
                "need at least one sketch kind and one fraction".into(),
            ));
        }
        for &fraction in &self.fractions {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "fractions must lie in (0, 1], got {fraction}"
                )));
            }
        }
        if self.runs < 1 {
            return Err(Error::InvalidConfig("runs must be >= 1".into()));
        }
        if self.budget < 1 {
            return Err(Error::InvalidConfig("budget must be >= 1".into()));
        }
        Ok(())
    }
}

/// Load a spec from a `.json` or `.toml` file (decided by extension).
pub fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    let text = fs::read_to_string(path)?;
    let spec: ExperimentSpec = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => serde_json::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?,
        Some("toml") => toml::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?,
        other => {
            return Err(Error::InvalidConfig(format!(
                "unsupported config extension {other:?} (expected .json or .toml)"
            )));
        }
    };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn toml_round_trip() {
        let text = r#"
experiment_id = "demo"
sketches = ["sampling", "hashing(s=3)"]
fractions = [0.1, 1.0]
base_seed = 7
f_target = 1e-5

[problem]
kind = "synthetic_logistic"
n = 50
d = 10
lambda = 1e-10
"#;
        let mut file = tempfile::Builder::new().suffix(".toml").tempfile().unwrap();
        file.write_all(text.as_bytes()).unwrap();
        let spec = load_spec(file.path()).unwrap();
        assert_eq!(spec.experiment_id, "demo");
        assert_eq!(spec.sketches, vec![SketchKind::Sampling, SketchKind::Hashing { s: 3 }]);
        assert_eq!(spec.runs, 5); // default
        assert_eq!(spec.budget, 100); // default
        assert_eq!(spec.f_target, Some(1e-5));
        let (problem, x0) = spec.problem.build().unwrap();
        assert_eq!(problem.dim(), 10);
        assert_eq!(x0, vec![0.0; 10]);
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{
            "experiment_id": "demo-json",
            "problem": {"kind": "test_problem", "name": "extended_rosenbrock", "d": 4},
            "sketches": ["identity"],
            "fractions": [1.0],
            "runs": 2,
            "base_seed": 1
        }"#;
        let mut file = tempfile::Builder::new().suffix(".json").tempfile().unwrap();
        file.write_all(text.as_bytes()).unwrap();
        let spec = load_spec(file.path()).unwrap();
        assert_eq!(spec.runs, 2);
        let (_, x0) = spec.problem.build().unwrap();
        assert_eq!(x0, vec![-1.2, 1.0, -1.2, 1.0]);
    }

    #[test]
    fn bad_fraction_is_rejected() {
        let spec = ExperimentSpec {
            experiment_id: "x".into(),
            problem: ProblemSpec::Linear {
                n: 2,
                d: 2,
                data_seed: 0,
            },
            variant: SolverVariant::Tr,
            sketches: vec![SketchKind::Sampling],
            fractions: vec![0.0],
            runs: 1,
            base_seed: 0,
            budget: 10,
            f_target: None,
            output_dir: None,
            eta: 0.1,
            gamma1: 0.5,
            c: 1,
            delta0: 1.0,
            sigma0: 1.0,
            grad_diag_every: 0,
            cg_rel_tol: 1e-8,
            cg_max_iter: None,
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn linear_problem_is_consistent() {
        let spec = ProblemSpec::Linear {
            n: 6,
            d: 3,
            data_seed: 5,
        };
        let (problem, x0) = spec.build().unwrap();
        // b = Ax* means the minimum value is zero; check the gradient at a
        // random point is not zero but the problem is well-posed
        assert_eq!(problem.dim(), 3);
        assert_eq!(problem.residual_count(), 6);
        assert!(problem.objective(&x0).unwrap() > 0.0);
    }
}
