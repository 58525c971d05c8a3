use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use augmetric::augment::{build_augmented_dataset, AugmentationKind, AugmentationSpec, DatasetManifest, MANIFEST_FILE};
use augmetric::features::{fit_gaussian, EmbedderSpec};
use augmetric::imgcore::{average_dsc, pack, pnm, unpack_rgb};
use augmetric::inference::{
    aggregate, best_fit, compare_models, log_evidence, AggregateOptions, AggregatedPoint, QuadSpec,
    DEFAULT_MC_SAMPLES,
};
use augmetric::pipeline::{
    build_report, ingest_results, load_feature_source, load_plan, mask_pairs, series_label, simulate_runs,
    with_workers, ReportOptions,
};
use augmetric::{default_priors, frechet_distance, Baseline, Error, ErrorClass, ModelFamily, ModelSpec, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "augmetric", version, about = "Dataset similarity, Dice scoring and evidence-based model comparison")]
struct Cli {
    /// Worker threads (default: one per core)
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// More log output (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Average Dice score over mask pairs, skipping pairs where both are empty
    Dsc {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Fréchet distance between two datasets or feature files
    Fid {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, value_enum, default_value_t = Embedder::Reference)]
        embedder: Embedder,
        #[arg(long, default_value_t = 256)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write an augmented copy of a dataset
    Augment {
        #[arg(long = "in")]
        input: PathBuf,
        /// hflip, blur:MIN,MAX or noise:MIN,MAX
        #[arg(long)]
        spec: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pack a scan and its mask into one RGB image
    Pack {
        #[arg(long)]
        scan: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split a packed RGB image into scan and mask
    Unpack {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        scan: PathBuf,
        #[arg(long)]
        mask: PathBuf,
    },
    /// log10 evidence of one or all model families
    Evidence {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "all")]
        family: String,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Best-fit parameters within the default priors
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "h")]
        family: String,
    },
    /// Evidence table for all families with the highlight column
    Compare {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Simulated run results for a sweep plan
    Simulate {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        family: String,
        /// name=value list, or the full form h(A=..,mu=..,sigma=..)
        #[arg(long)]
        params: String,
        #[arg(long)]
        dsc0: f64,
        #[arg(long)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write here instead of standard output
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Comparison tables, best-fit curves and plot data for every series
    Report {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        quad: QuadArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Embedder {
    Reference,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Grid,
    Mc,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    dsc0: f64,
    /// Only use datasets whose id ends in /<SERIES>
    #[arg(long)]
    series: Option<String>,
    /// Lower bound on the standard error; 0 disables it
    #[arg(long, default_value_t = 1e-6)]
    jitter_floor: f64,
}

#[derive(Args)]
struct QuadArgs {
    #[arg(long, value_enum, default_value_t = Method::Grid)]
    method: Method,
    /// Grid nodes per axis
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_MC_SAMPLES)]
    mc_samples: usize,
    #[arg(long, default_value_t = 0)]
    mc_seed: u64,
}

impl QuadArgs {
    fn spec(&self) -> QuadSpec {
        match self.method {
            Method::Grid => QuadSpec::Grid { nodes: self.nodes },
            Method::Mc => QuadSpec::MonteCarlo {
                samples: self.mc_samples,
                seed: self.mc_seed,
            },
        }
    }
}

impl DataArgs {
    fn options(&self) -> AggregateOptions {
        AggregateOptions {
            jitter_floor: (self.jitter_floor > 0.0).then_some(self.jitter_floor),
            ..Default::default()
        }
    }

    fn load(&self) -> Result<(Vec<AggregatedPoint>, Baseline)> {
        let base = Baseline::new(self.dsc0)?;
        let mut records = ingest_results(&self.samples)?;
        if let Some(s) = &self.series {
            records.retain(|r| series_label(&r.dataset_id) == s);
            if records.is_empty() {
                return Err(Error::Argument(format!("no records in series `{s}`")));
            }
        }
        let agg = aggregate(&records, &self.options())?;
        for d in &agg.diagnostics {
            log::warn!("{d}");
        }
        Ok((agg.points, base))
    }
}

fn families(text: &str) -> Result<Vec<ModelFamily>> {
    if text == "all" {
        return Ok(ModelFamily::ALL.to_vec());
    }
    text.split(',').map(str::parse).collect()
}

fn model_spec(family: &str, params: &str) -> Result<ModelSpec> {
    let family: ModelFamily = family.parse()?;
    if params.contains('(') {
        let spec: ModelSpec = params.parse()?;
        if spec.family != family {
            return Err(Error::Argument(format!("--params is for {} but --family is {family}", spec.family)));
        }
        return Ok(spec);
    }
    ModelSpec::parse_params(family, params)
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::Io {
                    path: "<stdout>".into(),
                    source: e,
                })
        }
    }
}

fn run(cmd: Cmd) -> Result<String> {
    match cmd {
        Cmd::Dsc { pred, truth } => {
            let pairs = mask_pairs(&pred, &truth)?;
            let masks = pairs
                .iter()
                .map(|(p, t)| Ok((pnm::read_mask(p)?, pnm::read_mask(t)?)))
                .collect::<Result<Vec<_>>>()?;
            let summary = average_dsc(masks.iter().map(|(p, t)| (p, t)))?;
            if summary.excluded > 0 {
                log::warn!("{} pair(s) with both masks empty were excluded", summary.excluded);
            }
            Ok(format!(
                "avg_dsc={}\ndefined={}\nexcluded={}\n",
                summary.mean, summary.defined, summary.excluded
            ))
        }
        Cmd::Fid {
            a,
            b,
            embedder: Embedder::Reference,
            dim,
            seed,
        } => {
            let spec = EmbedderSpec::Reference { dim, seed };
            let fa = load_feature_source(&a, &spec)?;
            let fb = load_feature_source(&b, &spec)?;
            let r = frechet_distance(&fit_gaussian(&fa)?, &fit_gaussian(&fb)?)?;
            if r.clamped_negative_eigenvalue_mass > 0.0 {
                log::warn!("clamped negative eigenvalue mass {:e}", r.clamped_negative_eigenvalue_mass);
            }
            Ok(format!(
                "fid={}\nmean_term={}\ntrace_term={}\nclamped_negative_eigenvalue_mass={}\nn_a={}\nn_b={}\ndim={}\n",
                r.value,
                r.mean_term,
                r.trace_term,
                r.clamped_negative_eigenvalue_mass,
                fa.len(),
                fb.len(),
                fa.dim()
            ))
        }
        Cmd::Augment {
            input,
            spec,
            seed,
            out,
        } => {
            let kind: AugmentationKind = spec.parse()?;
            let spec = AugmentationSpec::new(kind, seed)?;
            let src = DatasetManifest::load(&input)?;
            let m = build_augmented_dataset(&src, &spec, &out)?;
            Ok(format!("manifest={}\nimages={}\n", out.join(MANIFEST_FILE).display(), m.len()))
        }
        Cmd::Pack { scan, mask, out } => {
            let packed = pack(&pnm::read_pgm(&scan)?, &pnm::read_mask(&mask)?)?;
            pnm::write_ppm(&out, packed.rgb())?;
            Ok(String::new())
        }
        Cmd::Unpack { input, scan, mask } => {
            let (s, m) = unpack_rgb(&pnm::read_ppm(&input)?);
            pnm::write_pgm(&scan, &s)?;
            pnm::write_mask(&mask, &m)?;
            Ok(String::new())
        }
        Cmd::Evidence { data, family, quad } => {
            let (points, base) = data.load()?;
            let quad = quad.spec();
            let mut s = String::from("function,log10_evidence,method,nodes_or_samples,mc_standard_error\n");
            for f in families(&family)? {
                let e = log_evidence(&points, f, &default_priors(f, base)?, base, &quad)?;
                let se = e.mc_standard_error.map(|v| v.to_string()).unwrap_or_default();
                s.push_str(&format!("{f},{:.4},{},{},{se}\n", e.log10_evidence, e.method, e.nodes_or_samples));
            }
            Ok(s)
        }
        Cmd::Fit { data, family } => {
            let (points, base) = data.load()?;
            let family: ModelFamily = family.parse()?;
            let fit = best_fit(&points, family, &default_priors(family, base)?, base)?;
            let mut s = String::from("Curve");
            for n in family.param_names() {
                s.push_str(&format!(",{n}"));
            }
            s.push_str(",log_likelihood\n");
            s.push_str(data.series.as_deref().unwrap_or("all"));
            for v in &fit.params {
                s.push_str(&format!(",{v:.3}"));
            }
            s.push_str(&format!(",{:.4}\n", fit.log_likelihood));
            Ok(s)
        }
        Cmd::Compare { data, quad } => {
            let (points, base) = data.load()?;
            Ok(compare_models(&points, base, &quad.spec())?.to_csv())
        }
        Cmd::Simulate {
            plan,
            family,
            params,
            dsc0,
            noise,
            seed,
            out,
        } => {
            let plan = load_plan(&plan)?;
            let model = model_spec(&family, &params)?;
            let records = simulate_runs(&plan, &model, Baseline::new(dsc0)?, noise, seed)?;
            let text = augmetric::inference::samples_to_string(&records)?;
            if let Some(path) = out {
                write_output(Some(&path), &text)?;
                return Ok(String::new());
            }
            Ok(text)
        }
        Cmd::Report { data, out, quad } => {
            let base = Baseline::new(data.dsc0)?;
            let mut records = ingest_results(&data.samples)?;
            if let Some(s) = &data.series {
                records.retain(|r| series_label(&r.dataset_id) == s);
            }
            let opts = ReportOptions {
                aggregate: data.options(),
                quad: quad.spec(),
                ..Default::default()
            };
            let report = build_report(&records, base, &opts, &out)?;
            Ok(report
                .files
                .iter()
                .map(|p| format!("{}\n", p.display()))
                .collect())
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Usage => 2,
        ErrorClass::Data => 3,
        ErrorClass::Numerical => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let result = with_workers(cli.workers, || run(cli.cmd)).and_then(|r| r);
    match result.and_then(|text| write_output(None, &text)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("augmetric: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
