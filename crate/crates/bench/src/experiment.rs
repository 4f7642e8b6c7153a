//! Replicate orchestration and summary statistics.

use std::fmt;
use std::time::Instant;

use anyhow::{bail, Result};
use psd_cholesky::estimators::{
    dpca_from_spectra, eigv_ave_from_spectra, fpca_estimate, lrc_from_spectra, sample_covariance, sin_theta,
    site_spectra,
};
use psd_cholesky::{Estimate, Matrix, Method, ProjectorNorm, SymEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{generate_sigma, perturb_matrix, sample_batch, sampling_factor, sigma_from_eigenvalues, stream};

/// How the per-site matrices are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Each site holds `Σ` plus symmetric Gaussian noise.
    NoisyMatrix,
    /// Each site holds the sample covariance of `l` draws from `N(0, Σ + σ² I)`.
    RandomVector,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::NoisyMatrix => "noisy-matrix",
            Scenario::RandomVector => "random-vector",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub k: usize,
    /// Number of sites.
    pub m: usize,
    /// Noise standard deviation.
    pub sigma: f64,
    /// Samples per site; only used by [`Scenario::RandomVector`].
    pub l: usize,
    pub replicates: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub norm: ProjectorNorm,
}

impl ExperimentConfig {
    /// Three-method noisy-matrix setup with 100 replicates.
    pub fn noisy_matrix(n: usize, m: usize, sigma: f64, seed: u64) -> Self {
        Self {
            scenario: Scenario::NoisyMatrix,
            n,
            k: 3,
            m,
            sigma,
            l: 0,
            replicates: 100,
            seed,
            methods: vec![Method::Lrc, Method::Dpca, Method::EigvAve],
            norm: ProjectorNorm::Spectral,
        }
    }

    /// Four-method random-vector setup with 100 replicates.
    pub fn random_vector(n: usize, m: usize, sigma: f64, l: usize, seed: u64) -> Self {
        Self {
            scenario: Scenario::RandomVector,
            l,
            methods: Method::ALL.to_vec(),
            ..Self::noisy_matrix(n, m, sigma, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            bail!("n must be at least 4");
        }
        if !(1..=3).contains(&self.k) || self.k >= self.n {
            bail!("k must be between 1 and 3 and below n");
        }
        if self.m == 0 {
            bail!("need at least one site");
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            bail!("noise level must be positive");
        }
        if self.replicates == 0 {
            bail!("need at least one replicate");
        }
        if self.methods.is_empty() {
            bail!("no methods selected");
        }
        match self.scenario {
            Scenario::RandomVector if self.l == 0 => bail!("random-vector scenario needs l >= 1"),
            Scenario::NoisyMatrix if self.methods.contains(&Method::Fpca) => {
                bail!("fpca needs raw samples and only runs in the random-vector scenario")
            }
            _ => Ok(()),
        }
    }

    fn l_column(&self) -> Option<usize> {
        match self.scenario {
            Scenario::NoisyMatrix => None,
            Scenario::RandomVector => Some(self.l),
        }
    }
}

/// One method's score on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub replicate: usize,
    pub method: String,
    pub error: f64,
    pub time_s: f64,
}

/// Aggregated statistics for one method under one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: Scenario,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub sigma: f64,
    pub l: Option<usize>,
    pub method: String,
    pub mean_error: f64,
    pub sd_error: f64,
    pub mean_time_s: f64,
    pub replicates: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub rows: Vec<ResultRow>,
    pub trials: Vec<Trial>,
}

impl ExperimentOutcome {
    pub fn row(&self, method: Method) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.method == method.name())
    }

    /// Zeroes every wall-clock field so that equal configs give byte-equal output.
    pub fn without_times(mut self) -> Self {
        self.rows.iter_mut().for_each(|r| r.mean_time_s = 0.0);
        self.trials.iter_mut().for_each(|t| t.time_s = 0.0);
        self
    }
}

/// Mean and sample standard deviation; the deviation is zero for a single value.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

fn score(est: &Estimate, truth: &Matrix, norm: ProjectorNorm) -> Result<f64> {
    Ok(sin_theta(est.basis(), truth, norm)?)
}

fn from_spectra(method: Method, spectra: &[SymEigen<f64>], k: usize) -> Result<Estimate> {
    Ok(match method {
        Method::Lrc => lrc_from_spectra(spectra, k)?,
        Method::Dpca => dpca_from_spectra(spectra, k)?,
        Method::EigvAve => eigv_ave_from_spectra(spectra, k)?,
        Method::Fpca => unreachable!("fpca does not use site spectra"),
    })
}

/// Runs one replicate. The site eigendecompositions are shared by the
/// spectral methods; each of them is charged the shared time plus its own.
pub fn run_replicate(config: &ExperimentConfig, replicate: usize) -> Result<Vec<Trial>> {
    let rep = u32::try_from(replicate)?;
    let (sigma, truth) = generate_sigma(config.n, config.k, &mut stream(config.seed, rep, 0))?;
    let mut batches = Vec::new();
    let inputs: Vec<Matrix> = match config.scenario {
        Scenario::NoisyMatrix => (0..config.m)
            .map(|i| perturb_matrix(&sigma, config.sigma, &mut stream(config.seed, rep, i as u32 + 1)))
            .collect::<Result<_>>()?,
        Scenario::RandomVector => {
            let factor = sampling_factor(&sigma, config.sigma)?;
            for i in 0..config.m {
                batches.push(sample_batch(&factor, config.l, &mut stream(config.seed, rep, i as u32 + 1))?);
            }
            batches.iter().map(|b| Ok(sample_covariance(b)?)).collect::<Result<_>>()?
        }
    };

    let needs_spectra = config.methods.iter().any(|&m| m != Method::Fpca);
    let (spectra, shared) = if needs_spectra {
        let (s, t) = timed(|| site_spectra(&inputs, config.k));
        (s?, t)
    } else {
        (Vec::new(), 0.0)
    };

    let mut trials = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let (est, own) = if method == Method::Fpca {
            timed(|| fpca_estimate(&batches, config.k).map_err(anyhow::Error::from))
        } else {
            let (e, t) = timed(|| from_spectra(method, &spectra, config.k));
            (e, t + shared)
        };
        trials.push(Trial {
            replicate,
            method: method.name().to_string(),
            error: score(&est?, &truth, config.norm)?,
            time_s: own,
        });
    }
    Ok(trials)
}

/// Runs all replicates, in parallel on the current rayon pool, and
/// aggregates them in replicate order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let per_rep: Vec<Vec<Trial>> = (0..config.replicates)
        .into_par_iter()
        .map(|r| run_replicate(config, r))
        .collect::<Result<_>>()?;
    let trials: Vec<Trial> = per_rep.into_iter().flatten().collect();
    let rows = config
        .methods
        .iter()
        .map(|&method| {
            let mine: Vec<&Trial> = trials.iter().filter(|t| t.method == method.name()).collect();
            let errors: Vec<f64> = mine.iter().map(|t| t.error).collect();
            let times: Vec<f64> = mine.iter().map(|t| t.time_s).collect();
            let (mean_error, sd_error) = mean_sd(&errors);
            ResultRow {
                scenario: config.scenario,
                n: config.n,
                k: config.k,
                m: config.m,
                sigma: config.sigma,
                l: config.l_column(),
                method: method.name().to_string(),
                mean_error,
                sd_error,
                mean_time_s: mean_sd(&times).0,
                replicates: config.replicates,
                seed: config.seed,
            }
        })
        .collect();
    Ok(ExperimentOutcome { rows, trials })
}

/// Fixed eigenvalues used by the timing benchmark.
pub const TIMING_EIGENVALUES: [f64; 3] = [10.0, 5.0, 2.5];
/// Noise level used by the timing benchmark.
pub const TIMING_SIGMA: f64 = 0.3;

/// Timing benchmark row: wall time per method, each estimator run end to
/// end on its own, sequentially.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub n: usize,
    pub m: usize,
    pub method: String,
    pub mean_time_s: f64,
    pub sd_time_s: f64,
    pub mean_error: f64,
    pub replicates: usize,
    pub seed: u64,
}

pub fn run_timing(ns: &[usize], m: usize, replicates: usize, seed: u64, methods: &[Method]) -> Result<Vec<TimingRow>> {
    if methods.contains(&Method::Fpca) {
        bail!("fpca has no noisy-matrix timing");
    }
    if m == 0 || replicates == 0 {
        bail!("need at least one site and one replicate");
    }
    let k = TIMING_EIGENVALUES.len();
    let mut rows = Vec::new();
    for &n in ns {
        let sigma = sigma_from_eigenvalues(n, &TIMING_EIGENVALUES)?;
        let truth = crate::data::true_basis(n, k)?;
        let mut times = vec![Vec::new(); methods.len()];
        let mut errors = vec![Vec::new(); methods.len()];
        for r in 0..replicates {
            let rep = u32::try_from(r)?;
            let inputs: Vec<Matrix> = (0..m)
                .map(|i| perturb_matrix(&sigma, TIMING_SIGMA, &mut stream(seed, rep, i as u32 + 1)))
                .collect::<Result<_>>()?;
            for (j, &method) in methods.iter().enumerate() {
                let (est, t) = timed(|| match method {
                    Method::Lrc => psd_cholesky::estimators::lrc_estimate(&inputs, k),
                    Method::Dpca => psd_cholesky::estimators::dpca_estimate(&inputs, k),
                    Method::EigvAve => psd_cholesky::estimators::eigv_ave_estimate(&inputs, k),
                    Method::Fpca => unreachable!(),
                });
                times[j].push(t);
                errors[j].push(score(&est?, &truth, ProjectorNorm::Spectral)?);
            }
        }
        for (j, &method) in methods.iter().enumerate() {
            let (mean_time_s, sd_time_s) = mean_sd(&times[j]);
            rows.push(TimingRow {
                n,
                m,
                method: method.name().to_string(),
                mean_time_s,
                sd_time_s,
                mean_error: mean_sd(&errors[j]).0,
                replicates,
                seed,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_sd_uses_sample_deviation() {
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_sd(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = ExperimentConfig::noisy_matrix(10, 5, 0.1, 1);
        assert!(c.validate().is_ok());
        c.methods.push(Method::Fpca);
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::random_vector(10, 5, 0.1, 0, 1);
        assert!(c.validate().is_err());
        c.l = 5;
        assert!(c.validate().is_ok());
        c.k = 4;
        assert!(c.validate().is_err());
        let c = ExperimentConfig::noisy_matrix(3, 5, 0.1, 1);
        assert!(c.validate().is_err());
    }
}
