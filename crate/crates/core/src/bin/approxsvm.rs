use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use approxsvm::approx::{build_approx, decide_approx_batch, decide_approx_batch_par, error_curve};
use approxsvm::bench::{
    compare_with, size_report, time_prediction_with, Backend, SizeReport, TimingOptions,
};
use approxsvm::bounds::{
    bound_report, cauchy_bound_holds, gamma_max_for_dataset, gamma_max_model_only,
};
use approxsvm::exact::decide_exact_batch;
use approxsvm::io::{
    read_approx_model, read_dataset, read_exact_model, read_poly2_model, save_approx_model,
    write_approx_model,
};
use approxsvm::poly2::{expand_poly2, poly2_kernel, Poly2Params};
use approxsvm::synth::{
    gaussian_clusters, random_rbf_classifier, to_libsvm_data, to_libsvm_text, ClusterConfig,
};
use approxsvm::{Dataset, DecisionValue, Error, Kernel, Result};

/// Fast prediction for RBF-kernel SVM models via a quadratic-form approximation.
#[derive(Parser)]
#[command(name = "approxsvm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a LIBSVM RBF model into the compact approximate format.
    Approximate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Predict a LIBSVM data file with an exact or approximate model.
    Predict(PredictArgs),
    /// Report the largest gamma for which the approximation bound holds.
    CheckGamma {
        #[arg(long)]
        data: PathBuf,
        /// LIBSVM model whose support-vector norms should be used.
        #[arg(long)]
        model: Option<PathBuf>,
        /// What-if gamma; never written back to any model.
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Compare exact and approximate predictions on a dataset.
    Compare {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Per-instance CSV.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Time exact prediction, approximation and approximate prediction.
    Bench {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, value_enum, default_value_t = BackendArg::Sparse)]
        backend: BackendArg,
        /// Predict on all cores (timings are then not single-threaded).
        #[arg(long)]
        parallel: bool,
        /// Per-repetition CSV.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare the on-disk size of an exact model and its approximation.
    Size {
        #[arg(long)]
        model: PathBuf,
        /// Compact model file; built in memory from --model when omitted.
        #[arg(long)]
        approx: Option<PathBuf>,
    },
    /// Expand a degree-2 polynomial LIBSVM model into its exact quadratic form.
    #[command(name = "poly2-expand")]
    Poly2Expand {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Verify the expansion against kernel sums on this data.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Relative error of 1 + x + x^2/2 against e^x, as CSV.
    #[command(name = "error-curve")]
    ErrorCurve {
        /// `min:max:step`
        #[arg(long, allow_hyphen_values = true, default_value = "-1:1:0.01")]
        range: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a synthetic RBF model and a matching test set.
    Synth(SynthArgs),
}

#[derive(Args)]
struct PredictArgs {
    /// LIBSVM model (exact mode) or compact model (approx mode).
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Approx)]
    mode: Mode,
    /// Flag instances outside the validity bound (approx mode).
    #[arg(long)]
    check_bound: bool,
    /// Prediction lines go here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Predict on all cores.
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// LIBSVM model file to write.
    #[arg(long)]
    output: PathBuf,
    /// LIBSVM test data file to write.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 20)]
    dim: usize,
    #[arg(long, default_value_t = 1000)]
    n_sv: usize,
    #[arg(long, default_value_t = 10000)]
    n_test: usize,
    /// Probability that a feature is zero.
    #[arg(long, default_value_t = 0.0)]
    sparsity: f64,
    /// gamma as a fraction of the data's gamma_max.
    #[arg(long, default_value_t = 0.9)]
    gamma_frac: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Approx,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Sparse,
    Dense,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes to `path`, or standard output when absent.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_err(path: Option<&Path>) -> impl Fn(io::Error) -> Error + '_ {
    move |e| Error::io(path.unwrap_or(Path::new("<stdout>")), e)
}

fn approximate(model: &Path, output: &Path) -> Result<()> {
    let exact = read_exact_model(model)?;
    let approx = build_approx(&exact)?;
    save_approx_model(&approx, output)?;
    println!("d: {}", approx.dimension());
    println!("n_sv: {}", exact.n_sv());
    println!("max_sv_norm_sq: {}", approx.max_sv_norm_sq);
    println!("gamma: {}", approx.gamma);
    println!("gamma_max: {}", gamma_max_model_only(&exact));
    Ok(())
}

fn predict(args: &PredictArgs) -> Result<()> {
    let data = read_dataset(&args.data)?;
    let (decisions, flags): (Vec<DecisionValue>, Vec<Option<bool>>) = match args.mode {
        Mode::Exact => {
            let model = read_exact_model(&args.model)?;
            let d = decide_exact_batch(&model, &data)?;
            let n = d.len();
            (d, vec![None; n])
        }
        Mode::Approx => {
            let model = read_approx_model(&args.model)?;
            let preds = if args.parallel {
                decide_approx_batch_par(&model, &data, args.check_bound)?
            } else {
                decide_approx_batch(&model, &data, args.check_bound)?
            };
            preds.into_iter().map(|p| (p.decision, p.bound_ok)).unzip()
        }
    };

    let out_path = args.output.as_deref();
    let mut out = sink(out_path)?;
    for (d, flag) in decisions.iter().zip(&flags) {
        let label = d
            .label
            .map_or_else(|| format!("{:?}", d.value), |l| l.to_string());
        let line = match flag {
            Some(true) => format!("{label}\t{:?}\tok", d.value),
            Some(false) => format!("{label}\t{:?}\tbound-violated", d.value),
            None => format!("{label}\t{:?}", d.value),
        };
        writeln!(out, "{line}").map_err(io_err(out_path))?;
    }
    out.flush().map_err(io_err(out_path))?;

    if decisions.first().is_some_and(|d| d.label.is_some()) {
        let correct = decisions
            .iter()
            .zip(&data.instances)
            .filter(|(d, inst)| d.label.map(f64::from) == Some(inst.label))
            .count();
        let pct = 100.0 * correct as f64 / data.len().max(1) as f64;
        eprintln!("accuracy: {pct:.4}% ({correct}/{})", data.len());
    } else if !decisions.is_empty() {
        let mse = decisions
            .iter()
            .zip(&data.instances)
            .map(|(d, inst)| (d.value - inst.label).powi(2))
            .sum::<f64>()
            / data.len() as f64;
        eprintln!("mean_squared_error: {mse}");
    }
    let violations = flags.iter().filter(|f| **f == Some(false)).count();
    if args.check_bound && matches!(args.mode, Mode::Approx) {
        eprintln!("bound_violations: {violations}/{}", data.len());
    }
    Ok(())
}

fn check_gamma(data: &Path, model: Option<&Path>, gamma: Option<f64>) -> Result<()> {
    if let Some(g) = gamma.filter(|g| g.is_nan() || *g <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma must be positive, got {g}"
        )));
    }
    let data = read_dataset(data)?;
    let gamma_max = gamma_max_for_dataset(&data)?;
    let max_norm_sq = data.max_norm_sq();
    println!("instances: {}", data.len());
    println!("max_norm_sq: {max_norm_sq}");
    println!("gamma_max: {gamma_max}");
    match model {
        Some(path) => {
            let model = read_exact_model(path)?;
            let g = gamma.unwrap_or(model.gamma());
            let r = bound_report(model.max_sv_norm_sq(), g, &data);
            println!("model_max_sv_norm_sq: {}", r.max_norm_sq_model);
            println!("model_gamma_max: {}", r.gamma_max);
            println!("gamma: {g}");
            println!("violations: {}", r.n_violations);
            println!("violation_percent: {:.4}", 100.0 * r.violation_fraction());
        }
        None => {
            if let Some(g) = gamma {
                println!("gamma: {g}");
                println!(
                    "within_bound: {}",
                    cauchy_bound_holds(max_norm_sq, max_norm_sq, g)
                );
            }
        }
    }
    Ok(())
}

fn compare_cmd(model: &Path, data: &Path, output: Option<&Path>) -> Result<()> {
    let exact = read_exact_model(model)?;
    let data = read_dataset(data)?;
    let approx = build_approx(&exact)?;
    let report = compare_with(&exact, &approx, &data)?;
    print!("{report}");
    if let Some(path) = output {
        std::fs::write(path, report.to_csv()).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn bench(
    model: &Path,
    data: &Path,
    reps: usize,
    backend: BackendArg,
    parallel: bool,
    output: Option<&Path>,
) -> Result<()> {
    let exact = read_exact_model(model)?;
    let data = read_dataset(data)?;
    let opts = TimingOptions {
        repetitions: reps,
        backend: match backend {
            BackendArg::Sparse => Backend::SparseLoops,
            BackendArg::Dense => Backend::DenseLoops,
        },
        parallel,
    };
    let report = time_prediction_with(&exact, &data, &opts)?;
    println!("n_sv: {}", exact.n_sv());
    println!("d: {}", exact.dimension);
    print!("{report}");
    if let Some(path) = output {
        std::fs::write(path, report.to_csv()).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn size(model: &Path, approx: Option<&Path>) -> Result<()> {
    let report = match approx {
        Some(approx) => size_report(model, approx)?,
        None => {
            let exact_bytes = std::fs::metadata(model)
                .map_err(|e| Error::io(model, e))?
                .len();
            let text = write_approx_model(&build_approx(&read_exact_model(model)?)?);
            SizeReport {
                exact_bytes,
                approx_bytes: text.len() as u64,
            }
        }
    };
    print!("{report}");
    Ok(())
}

fn poly2_expand(model: &Path, output: Option<&Path>, data: Option<&Path>) -> Result<()> {
    let exact = read_poly2_model(model)?;
    let expansion = expand_poly2(&exact)?;
    let mut out = sink(output)?;
    out.write_all(expansion.to_text().as_bytes())
        .and_then(|_| out.flush())
        .map_err(io_err(output))?;
    drop(out);
    if let Some(path) = data {
        let data = read_dataset(path)?;
        data.check_dimension(exact.dimension)?;
        let Kernel::Poly2 { gamma, beta } = exact.kernel else {
            unreachable!()
        };
        let p = Poly2Params { gamma, beta };
        let mut max_abs = 0.0f64;
        for inst in &data.instances {
            let direct: f64 = exact
                .coefficients
                .iter()
                .zip(&exact.support_vectors)
                .map(|(a, x)| a * poly2_kernel(x, &inst.features, p))
                .sum::<f64>()
                + exact.bias;
            let expanded = expansion.decide(&inst.features)?.value;
            max_abs = max_abs.max((direct - expanded).abs());
        }
        eprintln!("instances: {}", data.len());
        eprintln!("max_abs_deviation: {max_abs:e}");
    }
    Ok(())
}

fn parse_range(text: &str) -> Result<(f64, f64, f64)> {
    let bad = || Error::InvalidArgument(format!("range must be min:max:step, got {text:?}"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match parts[..] {
        [a, b, s] => Ok((a, b, s)),
        _ => Err(bad()),
    }
}

fn error_curve_cmd(range: &str, output: Option<&Path>) -> Result<()> {
    let (min, max, step) = parse_range(range)?;
    let curve = error_curve(min, max, step)?;
    let mut out = sink(output)?;
    let write = || -> io::Result<()> {
        writeln!(out, "x,relative_error")?;
        for (x, err) in curve {
            // drop the grid's accumulated rounding from the printed abscissa
            let x = (x * 1e12).round() / 1e12;
            writeln!(out, "{x},{err:?}")?;
        }
        out.flush()
    };
    write().map_err(io_err(output))
}

fn synth(args: &SynthArgs) -> Result<()> {
    if args.gamma_frac.is_nan() || args.gamma_frac <= 0.0 || args.n_sv == 0 || args.dim == 0 {
        return Err(Error::InvalidArgument(
            "dim, n-sv and gamma-frac must be positive".into(),
        ));
    }
    let pool = gaussian_clusters(&ClusterConfig {
        dim: args.dim,
        n: args.n_sv.max(256),
        sparsity: args.sparsity,
        seed: args.seed,
        ..Default::default()
    });
    let test = gaussian_clusters(&ClusterConfig {
        dim: args.dim,
        n: args.n_test,
        sparsity: args.sparsity,
        seed: args.seed.wrapping_add(1),
        ..Default::default()
    });
    let all = Dataset::new(
        pool.instances
            .iter()
            .chain(&test.instances)
            .cloned()
            .collect(),
    );
    let gamma_max = gamma_max_for_dataset(&all)?;
    let gamma = if gamma_max.is_finite() {
        args.gamma_frac * gamma_max
    } else {
        1.0
    };
    let model = random_rbf_classifier(&pool, args.n_sv, gamma, args.seed.wrapping_add(2))?;
    std::fs::write(&args.output, to_libsvm_text(&model)).map_err(|e| Error::io(&args.output, e))?;
    std::fs::write(&args.data, to_libsvm_data(&test)).map_err(|e| Error::io(&args.data, e))?;
    println!("gamma: {gamma}");
    println!("gamma_max: {gamma_max}");
    println!("n_sv: {}", model.n_sv());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Approximate { model, output } => approximate(&model, &output),
        Command::Predict(args) => predict(&args),
        Command::CheckGamma { data, model, gamma } => check_gamma(&data, model.as_deref(), gamma),
        Command::Compare {
            model,
            data,
            output,
        } => compare_cmd(&model, &data, output.as_deref()),
        Command::Bench {
            model,
            data,
            reps,
            backend,
            parallel,
            output,
        } => bench(&model, &data, reps, backend, parallel, output.as_deref()),
        Command::Size { model, approx } => size(&model, approx.as_deref()),
        Command::Poly2Expand {
            model,
            output,
            data,
        } => poly2_expand(&model, output.as_deref(), data.as_deref()),
        Command::ErrorCurve { range, output } => error_curve_cmd(&range, output.as_deref()),
        Command::Synth(args) => synth(&args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
