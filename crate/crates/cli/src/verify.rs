//! `verify`: randomized checks of the operator and pushforward identities.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use positools::charclass::{chern_forms, Partition};
use positools::curvature::CurvatureTensor;
use positools::fiber::{self, QuadratureRule};
use positools::linalg;
use positools::multilinear::{form_operator, restrict, ComplexPlane};
use positools::psi;

use crate::doc::{input, read_json, CliError, TensorDocument};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    TildeC,
    Plane,
    Segre,
    JacobiTrudi,
    NakanoPush,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::TildeC => "tilde-c",
            Suite::Plane => "plane",
            Suite::Segre => "segre",
            Suite::JacobiTrudi => "jacobi-trudi",
            Suite::NakanoPush => "nakano-push",
        }
    }

    pub fn tolerance(self) -> f64 {
        match self {
            Suite::TildeC | Suite::Plane => 1e-9,
            Suite::Segre | Suite::JacobiTrudi => 1e-4,
            Suite::NakanoPush => 1e-8,
        }
    }

    pub fn default_trials(self) -> usize {
        match self {
            Suite::TildeC | Suite::Plane => 100,
            _ => 10,
        }
    }

    /// Shape of the random tensor for trial `i`.
    fn shape(self, i: usize) -> (usize, usize) {
        match self {
            Suite::TildeC => (2 + i % 2, 2 + i % 2),
            Suite::Plane => [(2, 2), (3, 2), (3, 3)][i % 3],
            Suite::Segre | Suite::JacobiTrudi => (2 + i % 2, 2),
            Suite::NakanoPush => (2 + i / 2 % 2, 2 + i % 2),
        }
    }

    fn check_shape(self, n: usize, r: usize) -> Result<(), String> {
        let ok = match self {
            Suite::TildeC => r <= n,
            Suite::Plane => r <= n && n >= 2,
            Suite::Segre | Suite::JacobiTrudi => r == 2 && (2..=3).contains(&n),
            Suite::NakanoPush => r >= 2,
        };
        if ok {
            Ok(())
        } else {
            Err(format!("shape n={n}, r={r} is not covered by suite {}", self.name()))
        }
    }

    /// Relative deviation of the identity on `t`; `seed` drives any extra sampling.
    fn deviation(self, t: &CurvatureTensor, i: usize, seed: u64) -> Result<f64, String> {
        let (n, r) = (t.n(), t.r());
        let err = |e: &dyn std::fmt::Display| e.to_string();
        match self {
            Suite::TildeC => {
                let a = psi::tilde_top_chern(t).map_err(|e| err(&e))?;
                let b = form_operator(&chern_forms(t)[r]).map_err(|e| err(&e))?;
                Ok(linalg::max_abs_diff(a.matrix(), b.matrix()) / (1.0 + linalg::max_abs(b.matrix())))
            }
            Suite::Plane => {
                let mut g = linalg::rng(seed ^ 0x5a);
                let plane = ComplexPlane::random(&mut g, n, r);
                let a = psi::top_chern_on_plane(t, &plane).map_err(|e| err(&e))?;
                let b = restrict(&chern_forms(t)[r], &plane).map_err(|e| err(&e))?;
                Ok((a - b).abs() / (1.0 + b.abs()))
            }
            Suite::Segre => {
                let rule = QuadratureRule::default();
                let mut worst = 0.0f64;
                for k in 1..=2 {
                    let rep = fiber::verify_segre(t, k, &rule).map_err(|e| err(&e))?;
                    worst = worst.max(rep.rel_deviation);
                }
                Ok(worst)
            }
            Suite::JacobiTrudi => {
                let rule = QuadratureRule::default();
                let mut worst = 0.0f64;
                for a in [Partition::row(2), Partition::column(2)] {
                    let rep = fiber::verify_jacobi_trudi(t, &a, &rule).map_err(|e| err(&e))?;
                    worst = worst.max(rep.rel_deviation);
                }
                Ok(worst)
            }
            Suite::NakanoPush => {
                let rep = fiber::verify_nakano_pushforward(t, &[i % r], 32, seed).map_err(|e| err(&e))?;
                Ok(rep.max_deviation)
            }
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Failure {
    pub trial: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct VerifyJson {
    pub suite: &'static str,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub max_deviation: f64,
    pub worst_trial: Option<usize>,
    pub failures: Vec<Failure>,
    pub passed: bool,
}

/// Runs `trials` seeded trials, or one trial per document of `fixture` (a JSON array of tensors).
pub fn verify(suite: Suite, trials: Option<usize>, seed: u64, fixture: Option<&Path>) -> Result<VerifyJson, CliError> {
    let tensors: Vec<Result<CurvatureTensor, String>> = match fixture {
        Some(path) => {
            if trials.is_some() {
                return Err(input("--trials and --fixture are exclusive"));
            }
            read_json::<Vec<TensorDocument>>(path)?
                .iter()
                .map(|d| d.to_tensor().map_err(|e| e.to_string()))
                .collect()
        }
        None => (0..trials.unwrap_or(suite.default_trials()))
            .map(|i| {
                let (n, r) = suite.shape(i);
                Ok(CurvatureTensor::random(n, r, linalg::derive_seed(seed, i as u64)))
            })
            .collect(),
    };
    let tol = suite.tolerance();
    let outcomes: Vec<Result<f64, String>> = tensors
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let t = t.as_ref().map_err(Clone::clone)?;
            suite.check_shape(t.n(), t.r())?;
            suite.deviation(t, i, linalg::derive_seed(seed ^ 0x7e57, i as u64))
        })
        .collect();

    let mut max_deviation = 0.0f64;
    let mut worst_trial = None;
    let mut failures = Vec::new();
    for (trial, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(d) if d <= tol => {
                if d > max_deviation || worst_trial.is_none() {
                    max_deviation = d;
                    worst_trial = Some(trial);
                }
            }
            Ok(d) => {
                if !(d <= max_deviation) {
                    max_deviation = d;
                    worst_trial = Some(trial);
                }
                failures.push(Failure {
                    trial,
                    deviation: Some(d),
                    reason: None,
                });
            }
            Err(reason) => failures.push(Failure {
                trial,
                deviation: None,
                reason: Some(reason),
            }),
        }
    }
    Ok(VerifyJson {
        suite: suite.name(),
        trials: tensors.len(),
        seed,
        tolerance: tol,
        max_deviation,
        worst_trial,
        passed: failures.is_empty(),
        failures,
    })
}
