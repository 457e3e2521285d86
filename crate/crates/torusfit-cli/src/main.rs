//! torusfit: fit, simulate, and test discrete-torus circular distributions.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use torusfit::baselines::{fit_baseline, BaselineModel};
use torusfit::gof::{auto_merge_groups, chisq_gof, GroupSpec};
use torusfit::inference::{
    fit_bgwg, fit_bwg, CountTable, Family, FitOptions, FitResult, FittedParams,
};
use torusfit::io as tio;
use torusfit::moments::{jupp_mardia_rho1sq, trig_moments_brute, MomentEngine};
use torusfit::sampling::sample_joint;
use torusfit::simstudy::{run_simulation_study, SimStudyConfig};
use torusfit::{
    fixtures, pmf_table, BgwgParams, BwgParams, Delta, Error, TorusGrid, TorusModel,
};

#[derive(Parser)]
#[command(
    name = "torusfit",
    about = "Bivariate wrapped geometric distributions on a discrete torus: \
             maximum-likelihood fitting, sampling, moments, and goodness of fit",
    after_help = "The environment variable TORUSFIT_THREADS caps worker \
                  parallelism (0 or unset = automatic)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to a contingency table and write a fit report (JSON)
    Fit(FitArgs),
    /// Draw seeded samples from a model and write them as CSV pairs
    Simulate(SimulateArgs),
    /// Pearson chi-square goodness of fit with merged cells (JSON report)
    Gof(GofArgs),
    /// Fit all five families and rank them by AIC
    Compare(CompareArgs),
    /// Trigonometric moments and circular correlation of a model (JSON)
    Moments(ModelArgs),
    /// Long-format (k, l, value) CSV of a model pmf or a count table
    Heatmap(HeatmapArgs),
    /// Monte Carlo simulation study driven by a JSON config
    Simstudy(SimstudyArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Contingency CSV path, or fixture:dataset1|dataset2|dataset3
    #[arg(long)]
    data: String,
    /// Grid size of the first direction
    #[arg(long, default_value_t = 16)]
    m1: usize,
    /// Grid size of the second direction
    #[arg(long, default_value_t = 16)]
    m2: usize,
}

impl DataArgs {
    fn load(&self) -> torusfit::Result<CountTable> {
        if let Some(name) = self.data.strip_prefix("fixture:") {
            return fixtures::dataset(name).cloned();
        }
        tio::parse_count_table_path(&PathBuf::from(&self.data), self.m1, self.m2)
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Model family: bwg | bgwg | wc | vms | vmc
    #[arg(long)]
    family: Family,
    /// Location anchors per axis for the multi-start search
    #[arg(long, default_value_t = 8)]
    starts: usize,
    /// Reserved for reproducibility records; fitting itself is deterministic
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path (default: stdout)
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ModelParamArgs {
    /// Model family: bwg | bgwg
    #[arg(long)]
    family: Family,
    #[arg(long, default_value_t = 16)]
    m1: usize,
    #[arg(long, default_value_t = 16)]
    m2: usize,
    /// Location of the first direction (integer for bwg)
    #[arg(long)]
    alpha: f64,
    /// Location of the second direction (integer for bwg)
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    q: f64,
    #[arg(long)]
    s: f64,
    #[arg(long, allow_negative_numbers = true)]
    rho: f64,
    /// Coupling sign: -1 or 1
    #[arg(long, allow_hyphen_values = true)]
    delta: i8,
}

impl ModelParamArgs {
    fn model(&self) -> torusfit::Result<TorusModel> {
        let grid = TorusGrid::new(self.m1, self.m2)?;
        let delta = Delta::try_from(self.delta).map_err(Error::Domain)?;
        match self.family {
            Family::Bwg => {
                if self.alpha.fract() != 0.0 || self.beta.fract() != 0.0 {
                    return Err(Error::Domain(
                        "bwg locations must be integers; use --family bgwg for real-valued \
                         locations"
                            .into(),
                    ));
                }
                Ok(TorusModel::Bwg(BwgParams::new(
                    grid,
                    self.alpha as usize,
                    self.beta as usize,
                    self.q,
                    self.s,
                    self.rho,
                    delta,
                )?))
            }
            Family::Bgwg => Ok(TorusModel::Bgwg(BgwgParams::new(
                grid, self.alpha, self.beta, self.q, self.s, self.rho, delta,
            )?)),
            other => Err(Error::Domain(format!("{other} has no torus parameterization"))),
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelParamArgs,
    /// Number of pairs to draw
    #[arg(long, short)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GofArgs {
    /// Use an embedded dataset with its published groups (dataset1|2|3)
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    data: Option<String>,
    #[arg(long, default_value_t = 16)]
    m1: usize,
    #[arg(long, default_value_t = 16)]
    m2: usize,
    /// Grouping: preset:<name> | auto | file:<path> (one start:end per line)
    #[arg(long)]
    groups: Option<String>,
    /// Family fitted to the data before testing
    #[arg(long, default_value = "bgwg")]
    family: Family,
    #[arg(long, default_value_t = 8)]
    starts: usize,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 8)]
    starts: usize,
    /// Output format: json | csv
    #[arg(long, default_value = "json")]
    format: String,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArgs {
    #[command(flatten)]
    model: ModelParamArgs,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HeatmapArgs {
    /// Model family for a pmf heatmap (omit with --data for counts)
    #[arg(long)]
    family: Option<Family>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    rho: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<i8>,
    /// Count-table CSV path or fixture:<name>
    #[arg(long)]
    data: Option<String>,
    #[arg(long, default_value_t = 16)]
    m1: usize,
    #[arg(long, default_value_t = 16)]
    m2: usize,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

impl HeatmapArgs {
    fn model(&self) -> torusfit::Result<Option<TorusModel>> {
        let Some(family) = self.family else { return Ok(None) };
        let missing = || Error::Domain("model heatmaps need --alpha --beta --q --s --rho --delta".into());
        let args = ModelParamArgs {
            family,
            m1: self.m1,
            m2: self.m2,
            alpha: self.alpha.ok_or_else(missing)?,
            beta: self.beta.ok_or_else(missing)?,
            q: self.q.ok_or_else(missing)?,
            s: self.s.ok_or_else(missing)?,
            rho: self.rho.ok_or_else(missing)?,
            delta: self.delta.ok_or_else(missing)?,
        };
        args.model().map(Some)
    }
}

#[derive(Args)]
struct SimstudyArgs {
    /// JSON configuration file (see README for the schema)
    #[arg(long)]
    config: PathBuf,
    /// Summary CSV output path (default: stdout)
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn out_writer(path: &Option<PathBuf>) -> torusfit::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn fit_options(starts: usize) -> FitOptions {
    FitOptions { anchors_per_axis: starts.max(1), ..FitOptions::default() }
}

fn run_fit(data: &CountTable, family: Family, starts: usize) -> torusfit::Result<FitResult> {
    let options = fit_options(starts);
    match family {
        Family::Bwg => fit_bwg(data, &options),
        Family::Bgwg => fit_bgwg(data, &options),
        Family::WrappedCauchy => fit_baseline(data, BaselineModel::WrappedCauchy, &options),
        Family::VmSine => fit_baseline(data, BaselineModel::VmSine, &options),
        Family::VmCosine => fit_baseline(data, BaselineModel::VmCosine, &options),
    }
}

fn fitted_table(fit: &FitResult) -> torusfit::Result<torusfit::PmfTable> {
    match &fit.params {
        FittedParams::Bwg(p) => pmf_table(&TorusModel::Bwg(*p)),
        FittedParams::Bgwg(p) => pmf_table(&TorusModel::Bgwg(*p)),
        FittedParams::Baseline(p) => {
            let grid = TorusGrid::new(16, 16)?;
            torusfit::baselines::discretize(p, grid)
        }
    }
}

fn parse_groups_arg(
    spec: &str,
    expected: &[f64],
) -> torusfit::Result<GroupSpec> {
    if let Some(name) = spec.strip_prefix("preset:") {
        return fixtures::preset_groups(name);
    }
    if spec == "auto" {
        return auto_merge_groups(expected, 5.0, 1.0);
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let text = std::fs::read_to_string(path)?;
        let mut groups = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (a, b) = line.split_once(':').ok_or(Error::Parse {
                line: i + 1,
                msg: "expected start:end".into(),
            })?;
            let parse = |t: &str| {
                t.trim().parse::<usize>().map_err(|_| Error::Parse {
                    line: i + 1,
                    msg: format!("bad group bound {t:?}"),
                })
            };
            groups.push((parse(a)?, parse(b)?));
        }
        return Ok(groups);
    }
    Err(Error::Domain(format!(
        "unrecognized groups spec {spec:?}; use preset:<name>, auto, or file:<path>"
    )))
}

fn real_main(cli: Cli) -> torusfit::Result<()> {
    if let Ok(threads) = std::env::var("TORUSFIT_THREADS") {
        let threads: usize = threads
            .parse()
            .map_err(|_| Error::Domain(format!("TORUSFIT_THREADS={threads} is not a number")))?;
        if threads > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
        }
    }

    match cli.command {
        Command::Fit(args) => {
            let data = args.data.load()?;
            let fit = run_fit(&data, args.family, args.starts)?;
            let mut out = out_writer(&args.out)?;
            serde_json::to_writer_pretty(&mut out, &fit).map_err(io_err)?;
            writeln!(out)?;
        }
        Command::Simulate(args) => {
            let model = args.model.model()?;
            let batch = sample_joint(&model, args.n, args.seed)?;
            let mut out = out_writer(&args.out)?;
            tio::write_pairs(&batch.pairs, &mut out)?;
        }
        Command::Gof(args) => {
            let (data, groups_spec): (CountTable, String) = match (&args.preset, &args.data) {
                (Some(name), None) => {
                    (fixtures::dataset(name)?.clone(), format!("preset:{name}"))
                }
                (None, Some(_)) => {
                    let d = DataArgs {
                        data: args.data.clone().unwrap(),
                        m1: args.m1,
                        m2: args.m2,
                    }
                    .load()?;
                    let spec = args.groups.clone().unwrap_or_else(|| "auto".into());
                    (d, spec)
                }
                _ => {
                    return Err(Error::Domain(
                        "give exactly one of --preset <dataset> or --data <path>".into(),
                    ))
                }
            };
            let spec = args.groups.clone().unwrap_or(groups_spec);
            let fit = run_fit(&data, args.family, args.starts)?;
            let table = fitted_table(&fit)?;
            let n = data.n() as f64;
            let expected: Vec<f64> = table.flat().iter().map(|p| p * n).collect();
            let groups = parse_groups_arg(&spec, &expected)?;
            let report = chisq_gof(&data, &table, &groups, fit.family.n_params())?;
            let mut out = out_writer(&args.out)?;
            serde_json::to_writer_pretty(&mut out, &report).map_err(io_err)?;
            writeln!(out)?;
        }
        Command::Compare(args) => {
            let data = args.data.load()?;
            let mut rows = Vec::new();
            for family in [
                Family::Bwg,
                Family::Bgwg,
                Family::WrappedCauchy,
                Family::VmSine,
                Family::VmCosine,
            ] {
                let fit = run_fit(&data, family, args.starts)?;
                rows.push((family, fit.loglik, fit.aic));
            }
            rows.sort_by(|a, b| a.2.total_cmp(&b.2));
            let mut out = out_writer(&args.out)?;
            match args.format.as_str() {
                "csv" => {
                    writeln!(out, "rank,family,loglik,aic")?;
                    for (i, (family, loglik, aic)) in rows.iter().enumerate() {
                        writeln!(out, "{},{family},{loglik:.6},{aic:.6}", i + 1)?;
                    }
                }
                "json" => {
                    let items: Vec<serde_json::Value> = rows
                        .iter()
                        .enumerate()
                        .map(|(i, (family, loglik, aic))| {
                            serde_json::json!({
                                "rank": i + 1,
                                "family": family,
                                "loglik": loglik,
                                "aic": aic,
                            })
                        })
                        .collect();
                    serde_json::to_writer_pretty(&mut out, &items).map_err(io_err)?;
                    writeln!(out)?;
                }
                other => {
                    return Err(Error::Domain(format!("unknown format {other:?}")));
                }
            }
        }
        Command::Moments(args) => {
            let model = args.model.model()?;
            let table = pmf_table(&model)?;
            let moments = trig_moments_brute(&table);
            let rho1sq = jupp_mardia_rho1sq(&model, MomentEngine::Brute);
            let mut out = out_writer(&args.out)?;
            let report = serde_json::json!({
                "model": model,
                "moments": moments,
                "rho1sq": rho1sq.ok(),
            });
            serde_json::to_writer_pretty(&mut out, &report).map_err(io_err)?;
            writeln!(out)?;
        }
        Command::Heatmap(args) => {
            let mut out = out_writer(&args.out)?;
            match (args.model()?, &args.data) {
                (Some(model), None) => {
                    let table = pmf_table(&model)?;
                    tio::emit_pmf_heatmap(&table, &mut out)?;
                }
                (None, Some(path)) => {
                    let data = DataArgs { data: path.clone(), m1: args.m1, m2: args.m2 }.load()?;
                    tio::emit_count_heatmap(&data, &mut out)?;
                }
                _ => {
                    return Err(Error::Domain(
                        "give either model parameters (--family ...) or --data, not both".into(),
                    ))
                }
            }
        }
        Command::Simstudy(args) => {
            let text = std::fs::read_to_string(&args.config)?;
            let config: SimStudyConfig = serde_json::from_str(&text)
                .map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })?;
            let summary = run_simulation_study(&config)?;
            let mut out = out_writer(&args.out)?;
            writeln!(out, "n,replicates,parameter,kind,truth,mean,sd,frequencies")?;
            for block in &summary.blocks {
                for c in &block.continuous {
                    writeln!(
                        out,
                        "{},{},{},continuous,{},{:.6},{:.6},",
                        block.n, block.replicates, c.name, c.truth, c.mean, c.sd
                    )?;
                }
                for d in &block.discrete {
                    let freqs: Vec<String> =
                        d.counts.iter().map(|(v, c)| format!("{v}:{c}")).collect();
                    writeln!(
                        out,
                        "{},{},{},discrete,{},,,{}",
                        block.n,
                        block.replicates,
                        d.name,
                        d.truth,
                        freqs.join(";")
                    )?;
                }
            }
        }
    }
    Ok(())
}

fn io_err(e: serde_json::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn main() -> ExitCode {
    // exit codes: 0 success, 1 domain/parse/usage errors, 2 internal errors
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(1);
        }
        Err(e) => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match std::panic::catch_unwind(move || real_main(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(_) => {
            eprintln!("internal error");
            ExitCode::from(2)
        }
    }
}
