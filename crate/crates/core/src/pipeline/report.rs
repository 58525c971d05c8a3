use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::inference::{
    aggregate, best_fit, compare_models, AggregateOptions, AggregatedPoint, ComparisonTable, QuadSpec, SampleRecord,
};
use crate::models::{default_priors, Baseline, ModelFamily, ModelSpec};

pub const CURVE_POINTS: usize = 200;
pub const BEST_FIT_FILE: &str = "best_fit.csv";

/// Points that share an increment label, plotted and compared together.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<AggregatedPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveFit {
    pub label: String,
    pub model: ModelSpec,
}

/// What was written, in write order.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub comparisons: Vec<(String, ComparisonTable)>,
    pub fits: Vec<CurveFit>,
}

/// Text after the last `/` of a record id, or `all` when there is none.
pub fn series_label(dataset_id: &str) -> &str {
    match dataset_id.rsplit_once('/') {
        Some((_, label)) if !label.is_empty() => label,
        _ => "all",
    }
}

pub fn split_series(points: &[AggregatedPoint]) -> Vec<Series> {
    let mut groups: BTreeMap<&str, Vec<AggregatedPoint>> = BTreeMap::new();
    for p in points {
        groups.entry(series_label(&p.dataset_id)).or_default().push(p.clone());
    }
    groups
        .into_iter()
        .map(|(label, points)| Series {
            label: label.to_string(),
            points,
        })
        .collect()
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "+-_.".contains(c) { c } else { '_' })
        .collect()
}

/// `n` log-spaced values from `lo` to `hi`, endpoints exact.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 || lo == hi {
        return vec![lo; n];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

fn write(out_dir: &Path, name: &str, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = out_dir.join(name);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    files.push(path);
    Ok(())
}

fn points_csv(points: &[AggregatedPoint]) -> String {
    let mut s = String::from("dataset_id,x,y,sem,n\n");
    for p in points {
        let _ = writeln!(s, "{},{},{},{},{}", p.dataset_id, p.fid, p.mean, p.sem, p.n);
    }
    s
}

fn plot_csv(points: &[AggregatedPoint], model: &ModelSpec, base: Baseline) -> Result<String> {
    let mut s = String::from("x,y,sem,fitted_y\n");
    for p in points {
        let _ = writeln!(s, "{},{},{},{}", p.fid, p.mean, p.sem, model.eval(p.fid, base)?);
    }
    let lo = points.iter().map(|p| p.fid).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.fid).fold(f64::NEG_INFINITY, f64::max);
    for x in log_space(lo, hi, CURVE_POINTS) {
        let _ = writeln!(s, "{x},,,{}", model.eval(x, base)?);
    }
    Ok(s)
}

fn best_fit_csv(fits: &[CurveFit]) -> Result<String> {
    let family = fits[0].model.family;
    if let Some(f) = fits.iter().find(|f| f.model.family != family) {
        return Err(Error::Argument(format!(
            "best-fit table mixes families {family} and {}",
            f.model.family
        )));
    }
    let mut s = String::from("Curve");
    for name in family.param_names() {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for f in fits {
        s.push_str(&f.label);
        for v in &f.model.params {
            let _ = write!(s, ",{v:.3}");
        }
        s.push('\n');
    }
    Ok(s)
}

/// Writes `comparison_<label>.csv` and `points_<label>.csv` per series, plus
/// `best_fit.csv` and `plot_<label>.csv` for fitted series.
pub fn render_report(
    series: &[Series],
    comparisons: &[(String, ComparisonTable)],
    fits: &[CurveFit],
    base: Baseline,
    out_dir: impl AsRef<Path>,
) -> Result<Report> {
    let out_dir = out_dir.as_ref();
    for s in series {
        if !comparisons.iter().any(|(l, _)| l == &s.label) {
            return Err(Error::Argument(format!("series `{}` has no comparison table", s.label)));
        }
        if s.points.is_empty() {
            return Err(Error::Argument(format!("series `{}` is empty", s.label)));
        }
    }
    if let Some(f) = fits.iter().find(|f| !series.iter().any(|s| s.label == f.label)) {
        return Err(Error::Argument(format!("fit `{}` has no series", f.label)));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files = Vec::new();
    for (label, table) in comparisons {
        write(out_dir, &format!("comparison_{}.csv", file_stem(label)), &table.to_csv(), &mut files)?;
    }
    for s in series {
        write(out_dir, &format!("points_{}.csv", file_stem(&s.label)), &points_csv(&s.points), &mut files)?;
    }
    if !fits.is_empty() {
        write(out_dir, BEST_FIT_FILE, &best_fit_csv(fits)?, &mut files)?;
        for f in fits {
            let s = series.iter().find(|s| s.label == f.label).expect("checked above");
            write(
                out_dir,
                &format!("plot_{}.csv", file_stem(&f.label)),
                &plot_csv(&s.points, &f.model, base)?,
                &mut files,
            )?;
        }
    }
    Ok(Report {
        out_dir: out_dir.to_path_buf(),
        files,
        comparisons: comparisons.to_vec(),
        fits: fits.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    pub aggregate: AggregateOptions,
    pub quad: QuadSpec,
    /// Family drawn through each series.
    pub fit_family: ModelFamily,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            aggregate: AggregateOptions::default(),
            quad: QuadSpec::default(),
            fit_family: ModelFamily::LogNormal,
        }
    }
}

/// Aggregates samples, compares models and fits a curve for each series, then
/// renders the report. Series with too few points for the fit get no curve.
pub fn build_report(
    samples: &[SampleRecord],
    base: Baseline,
    opts: &ReportOptions,
    out_dir: impl AsRef<Path>,
) -> Result<Report> {
    let agg = aggregate(samples, &opts.aggregate)?;
    for d in &agg.diagnostics {
        log::warn!("{d}");
    }
    let series = split_series(&agg.points);
    let mut comparisons = Vec::with_capacity(series.len());
    let mut fits = Vec::new();
    let priors = default_priors(opts.fit_family, base)?;
    for s in &series {
        comparisons.push((s.label.clone(), compare_models(&s.points, base, &opts.quad)?));
        if s.points.len() < opts.fit_family.n_params() {
            log::warn!("series `{}`: {} points, too few to fit {}", s.label, s.points.len(), opts.fit_family);
            continue;
        }
        let fit = best_fit(&s.points, opts.fit_family, &priors, base)?;
        fits.push(CurveFit {
            label: s.label.clone(),
            model: ModelSpec::new(opts.fit_family, fit.params)?,
        });
    }
    render_report(&series, &comparisons, &fits, base, out_dir)
}
