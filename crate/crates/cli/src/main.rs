use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use equidisp::dataset::{load_column, load_pairs, write_pairs};
use equidisp::estimation::{
    compare_models, fit_bivariate_normal, fit_independent_equidisp, fit_mle, fit_pmle,
    mle_optim_config, CompareConfig, FitReport,
};
use equidisp::model::{grid_modes, normalize, EquiDispParams, GridSpec};
use equidisp::numerics::{QuadConfig, RandomStream};
use equidisp::pseudo::{pseudo_fit, pseudo_optim_config, pseudo_sample, PseudoParams};
use equidisp::sample::Sample2D;
use equidisp::study::{run_study, summary_table, Estimator, StudyConfig, TableFormat};
use equidisp::univariate::ueq_lrt;

#[derive(Parser)]
#[command(
    name = "equidisp",
    version,
    about = "Fit, simulate and test equi-dispersed normal models"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit one model and print its report as JSON.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum, default_value = "equidisp-mle")]
        model: ModelKind,
    },
    /// Fit the four competing models and rank them by AIC.
    Compare {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Draw a sample and write it as `x,y` CSV.
    Simulate {
        #[arg(long, value_enum, default_value = "equidisp")]
        family: Family,
        /// alpha,beta,gamma for equidisp; tau1,tau2,tau3 for pseudo.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        params: Vec<f64>,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Likelihood-ratio test of mean = variance for a single column.
    Lrt {
        #[arg(long)]
        input: PathBuf,
        /// Column name; the first column when absent.
        #[arg(long)]
        col: Option<String>,
    },
    /// Evaluate the joint density on a rectangular grid (`x,y,density` CSV).
    Grid {
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        params: Vec<f64>,
        #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
        x_min: f64,
        #[arg(long, default_value_t = 15.0, allow_hyphen_values = true)]
        x_max: f64,
        #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
        y_min: f64,
        #[arg(long, default_value_t = 15.0, allow_hyphen_values = true)]
        y_max: f64,
        #[arg(long, default_value_t = 200)]
        nx: usize,
        #[arg(long, default_value_t = 200)]
        ny: usize,
        /// Also print the grid's local maxima as JSON on standard error.
        #[arg(long)]
        report_modes: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo study of the estimators at one or more sample sizes.
    Study {
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        params: Vec<f64>,
        #[arg(long = "n", value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        replicates: usize,
        /// Run 5000 replicates regardless of --replicates.
        #[arg(long)]
        full: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "mle,pmle")]
        estimators: Vec<String>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Worker threads; 0 picks automatically.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    input: PathBuf,
    /// Column for x; the first column when absent.
    #[arg(long)]
    x_col: Option<String>,
    /// Column for y; the second column when absent.
    #[arg(long)]
    y_col: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    EquidispMle,
    EquidispPmle,
    EquidispIndep,
    Bvn,
    BvnIndep,
    Pseudo,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Equidisp,
    Pseudo,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

const EXIT_INPUT: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn load(data: &DataArgs) -> Result<Sample2D> {
    let s = load_pairs(&data.input, data.x_col.as_deref(), data.y_col.as_deref())?;
    if s.len() < 3 {
        bail!(
            "{}: need at least 3 data rows, found {}",
            data.input.display(),
            s.len()
        );
    }
    Ok(s)
}

fn triple(v: &[f64]) -> Result<[f64; 3]> {
    match v {
        [a, b, c] => Ok([*a, *b, *c]),
        _ => bail!(
            "--params takes exactly three comma-separated numbers, got {}",
            v.len()
        ),
    }
}

fn equidisp_params(v: &[f64]) -> Result<EquiDispParams> {
    let [a, b, g] = triple(v)?;
    Ok(EquiDispParams::new(a, b, g)?)
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn fit(s: &Sample2D, model: ModelKind) -> Result<FitReport> {
    Ok(match model {
        ModelKind::EquidispMle => fit_mle(s, None, &QuadConfig::fitting(), &mle_optim_config())?,
        ModelKind::EquidispPmle => fit_pmle(s)?,
        ModelKind::EquidispIndep => fit_independent_equidisp(s)?,
        ModelKind::Bvn => fit_bivariate_normal(s, false)?,
        ModelKind::BvnIndep => fit_bivariate_normal(s, true)?,
        ModelKind::Pseudo => pseudo_fit(s, &pseudo_optim_config())?,
    })
}

fn run(cmd: Cmd) -> Result<ExitCode> {
    match cmd {
        Cmd::Fit { data, model } => {
            let report = fit(&load(&data)?, model)?;
            print_json(&report)?;
            if !report.converged {
                return Ok(ExitCode::from(EXIT_NOT_CONVERGED));
            }
        }
        Cmd::Compare { data } => {
            print_json(&compare_models(&load(&data)?, &CompareConfig::default()))?;
        }
        Cmd::Simulate {
            family,
            params,
            n,
            seed,
            out,
        } => {
            if n == 0 {
                bail!("--n must be positive");
            }
            let mut rng = RandomStream::new(seed, 0);
            let s = match family {
                Family::Equidisp => normalize(&equidisp_params(&params)?, &QuadConfig::default())?
                    .sample(n, &mut rng)?,
                Family::Pseudo => {
                    let [t1, t2, t3] = triple(&params)?;
                    let p = PseudoParams::new(t1, t2, t3)?;
                    pseudo_sample(&p, n, &mut rng)?
                }
            };
            emit(out.as_deref(), &write_pairs(&s))?;
        }
        Cmd::Lrt { input, col } => {
            let xs = load_column(&input, col.as_deref())?;
            print_json(&ueq_lrt(&xs)?)?;
        }
        Cmd::Grid {
            params,
            x_min,
            x_max,
            y_min,
            y_max,
            nx,
            ny,
            report_modes,
            out,
        } => {
            let g = GridSpec {
                x_min,
                x_max,
                y_min,
                y_max,
                nx,
                ny,
            };
            let model = normalize(&equidisp_params(&params)?, &QuadConfig::default())?;
            let points = model.density_grid(&g)?;
            let mut text = String::with_capacity(points.len() * 32);
            text.push_str("x,y,density\n");
            for p in &points {
                text.push_str(&format!("{},{},{}\n", p.x, p.y, p.density));
            }
            emit(out.as_deref(), &text)?;
            if report_modes {
                let modes = grid_modes(&points, &g);
                eprintln!("{}", serde_json::json!({ "modes": modes }));
            }
        }
        Cmd::Study {
            params,
            sizes,
            replicates,
            full,
            seed,
            estimators,
            format,
            threads,
        } => {
            let truth = equidisp_params(&params)?;
            let estimators = estimators
                .iter()
                .map(|e| e.parse::<Estimator>())
                .collect::<equidisp::Result<Vec<_>>>()?;
            let mut sums = Vec::new();
            for n in sizes {
                let cfg = StudyConfig {
                    truth,
                    sample_size: n,
                    replicates: if full { 5000 } else { replicates },
                    base_seed: seed,
                    estimators: estimators.clone(),
                    parallelism: threads,
                };
                sums.push(run_study(&cfg)?);
            }
            let format = match format {
                Format::Csv => TableFormat::Csv,
                Format::Json => TableFormat::Json,
            };
            let mut table = summary_table(&sums, format);
            if !table.ends_with('\n') {
                table.push('\n');
            }
            emit(None, &table)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
