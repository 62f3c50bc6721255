//! Monte-Carlo studies of the MLE and PMLE under a known truth.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{fit_mle, fit_pmle, mle_optim_config, FitReport};
use crate::model::{normalize, EquiDispParams};
use crate::numerics::{QuadConfig, RandomStream};

pub const PARAMS: [&str; 3] = ["alpha", "beta", "gamma"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Mle,
    Pmle,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Mle => "mle",
            Estimator::Pmle => "pmle",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mle" => Ok(Estimator::Mle),
            "pmle" => Ok(Estimator::Pmle),
            _ => Err(Error::Input(format!("unknown estimator '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub truth: EquiDispParams,
    pub sample_size: usize,
    pub replicates: usize,
    pub base_seed: u64,
    pub estimators: Vec<Estimator>,
    /// Worker threads; 0 uses the global pool.
    pub parallelism: usize,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::InvalidParameter(
                "replicates must be at least 2".into(),
            ));
        }
        if self.sample_size < 5 {
            return Err(Error::InvalidParameter(
                "sample size must be at least 5".into(),
            ));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidParameter("no estimators requested".into()));
        }
        Ok(())
    }
}

/// One (n, estimator, parameter) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub estimator: Estimator,
    pub param: String,
    pub mean: f64,
    pub sd: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub attempted: usize,
    pub converged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudySummary {
    pub truth: EquiDispParams,
    pub sample_size: usize,
    pub rows: Vec<SummaryRow>,
    pub wall_time: f64,
}

impl StudySummary {
    pub fn row(&self, estimator: Estimator, param: &str) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator && r.param == param)
    }
}

type Replicate = Vec<Option<[f64; 3]>>;

fn run_replicate(cfg: &StudyConfig, r: u64, quad: &QuadConfig) -> Replicate {
    let mut rng = RandomStream::new(cfg.base_seed, r);
    let sample = normalize(&cfg.truth, quad).and_then(|m| m.sample(cfg.sample_size, &mut rng));
    cfg.estimators
        .iter()
        .map(|e| {
            let s = sample.as_ref().ok()?;
            let fit: Result<FitReport> = match e {
                Estimator::Mle => fit_mle(s, None, &QuadConfig::fitting(), &mle_optim_config()),
                Estimator::Pmle => fit_pmle(s),
            };
            fit.ok()
                .filter(|f| f.converged)
                .and_then(|f| f.equidisp_params())
                .map(|p| p.as_array())
        })
        .collect()
}

/// Runs `cfg.replicates` independent replicates, replicate r drawing from
/// `RandomStream::new(base_seed, r)`. Results do not depend on parallelism.
pub fn run_study(cfg: &StudyConfig) -> Result<StudySummary> {
    cfg.validate()?;
    let start = Instant::now();
    let quad = QuadConfig::default();
    let work = || -> Vec<Replicate> {
        (1..=cfg.replicates as u64)
            .into_par_iter()
            .map(|r| run_replicate(cfg, r, &quad))
            .collect()
    };
    let results = if cfg.parallelism == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.parallelism)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(work)
    };

    let mut rows = Vec::new();
    for (k, &est) in cfg.estimators.iter().enumerate() {
        let good: Vec<[f64; 3]> = results.iter().filter_map(|rep| rep[k]).collect();
        if good.is_empty() {
            return Err(Error::EmptyAggregate(format!(
                "no {est} fit converged in {} replicates",
                cfg.replicates
            )));
        }
        for (j, name) in PARAMS.iter().enumerate() {
            let v: Vec<f64> = good.iter().map(|g| g[j]).collect();
            let (mean, sd) = mean_sd(&v);
            rows.push(SummaryRow {
                n: cfg.sample_size,
                estimator: est,
                param: name.to_string(),
                mean,
                sd,
                ci_lo: quantile(&v, 0.025),
                ci_hi: quantile(&v, 0.975),
                attempted: cfg.replicates,
                converged: good.len(),
            });
        }
    }
    Ok(StudySummary {
        truth: cfg.truth,
        sample_size: cfg.sample_size,
        rows,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Mean and (n - 1)-denominator standard deviation; sd is 0 for one value.
pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Linearly interpolated empirical quantile (R's type 7).
pub fn quantile(v: &[f64], p: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let h = (s.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(s.len() - 1);
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
}

pub const CSV_HEADER: &str = "n,estimator,param,mean,sd,ci_lo,ci_hi,attempted,converged";

/// Six significant digits, shortest representation.
pub fn sig6(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.5e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

pub fn summary_table(sums: &[StudySummary], format: TableFormat) -> String {
    let rows: Vec<&SummaryRow> = sums.iter().flat_map(|s| &s.rows).collect();
    match format {
        TableFormat::Json => serde_json::to_string_pretty(&rows).expect("rows serialize"),
        TableFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for r in rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    r.n,
                    r.estimator,
                    r.param,
                    sig6(r.mean),
                    sig6(r.sd),
                    sig6(r.ci_lo),
                    sig6(r.ci_hi),
                    r.attempted,
                    r.converged
                ));
            }
            out
        }
    }
}

/// Parses the CSV written by [`summary_table`].
pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::Input("line 1: missing summary header".into())),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Input(format!("line {}: {what}", i + 1));
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 9 {
            return Err(bad(&format!("expected 9 fields, found {}", f.len())));
        }
        let num = |k: usize| {
            f[k].parse::<f64>()
                .map_err(|_| bad(&format!("bad number '{}'", f[k])))
        };
        let count = |k: usize| {
            f[k].parse::<usize>()
                .map_err(|_| bad(&format!("bad count '{}'", f[k])))
        };
        rows.push(SummaryRow {
            n: count(0)?,
            estimator: f[1]
                .parse()
                .map_err(|_| bad(&format!("bad estimator '{}'", f[1])))?,
            param: f[2].to_string(),
            mean: num(3)?,
            sd: num(4)?,
            ci_lo: num(5)?,
            ci_hi: num(6)?,
            attempted: count(7)?,
            converged: count(8)?,
        });
    }
    Ok(rows)
}
