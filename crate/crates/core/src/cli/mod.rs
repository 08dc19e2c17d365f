//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage errors (usage text on stderr),
//! 2 for unreadable or malformed data (one-line diagnostic on stderr).
//! Every CSV written here has a header row, `\n` line endings and reals in
//! `{:.16e}` form, which round-trips an `f64` exactly.

use std::collections::{BTreeMap, HashMap};
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand};

use crate::bitmeasures::{feature_vector, FeatureVector, MeasureConfig, FEATURE_DIM};
use crate::classifier::{evaluate, load_model, save_model, train_multiclass, Label, MulticlassModel, Sample, SvmConfig};
use crate::detector::{
    calibrate_detailed, estimate_k, eta_grid, expected_eta, p_prime_chain, analytic_pr, CalibrationCurve, CurvePoint,
    DEFAULT_REPEATS,
};
use crate::imageio::{read_pnm, write_pnm, Image};
use crate::stego::{embed_lsb, extract_lsb_plane, EmbedOrder, StegoParams};
use crate::wavelet::{second_level_subbands, Band};

#[derive(Debug, Parser)]
#[command(name = "stegmetrics", version, about = "Bit-level content measures and LSB embedding analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-window measure vectors of one or more files.
    Features(FeaturesArgs),
    /// Train a one-vs-one RBF classifier from a features CSV.
    Train(TrainArgs),
    /// Predict a class for each window of a features CSV.
    Predict(PredictArgs),
    /// Confusion matrix and accuracy on a labelled features CSV.
    Evaluate(EvaluateArgs),
    /// Replace LSBs of a PNM image with pseudo-random bits.
    Embed(EmbedArgs),
    /// Second-level Haar sub-band coefficients of a PNM image.
    Wavelet(WaveletArgs),
    /// Eta and gamma readings of forced embeddings over a grid of levels.
    Etacurve(EtacurveArgs),
    /// Mean eta against start level over a set of cover images.
    Calibrate(CalibrateArgs),
    /// Estimate the start level of an image from a calibration CSV.
    Estimate(EstimateArgs),
    /// Closed-form probability model over a (k, i) grid.
    Prmodel(PrmodelArgs),
}

#[derive(Debug, Args)]
struct FeaturesArgs {
    /// Input files, comma separated.
    #[arg(long = "in", value_delimiter = ',', required = true)]
    inputs: Vec<PathBuf>,
    /// Treat inputs as PNM images and measure their packed LSB planes.
    #[arg(long)]
    lsb: bool,
    /// Window length in 32-bit words.
    #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(1..))]
    words: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    features: PathBuf,
    /// CSV with header `file,label`.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_parser = positive_real)]
    gamma: Option<f64>,
    #[arg(long, value_parser = positive_real, default_value_t = 10.0)]
    c: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EmbedArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_parser = unit_real)]
    level: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "randomized", value_parser = ["randomized", "sequential"])]
    order: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct WaveletArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "ll", value_parser = parse_band)]
    band: Band,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EtacurveArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Forced levels, comma separated.
    #[arg(long = "i", value_delimiter = ',', required = true, value_parser = unit_real)]
    i_levels: Vec<f64>,
    /// Start levels applied to the input before forcing; defaults to 0.
    #[arg(long = "k", value_delimiter = ',', value_parser = unit_real)]
    k_levels: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// Cover images, comma separated.
    #[arg(long = "in", value_delimiter = ',', required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long = "k", value_delimiter = ',', required = true, value_parser = unit_real)]
    k_levels: Vec<f64>,
    #[arg(long = "i-fixed", value_parser = unit_real, default_value_t = 0.2)]
    i_fixed: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_REPEATS, value_parser = positive_count)]
    repeats: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// CSV written by `calibrate`.
    #[arg(long)]
    curve: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_REPEATS, value_parser = positive_count)]
    repeats: usize,
}

#[derive(Debug, Args)]
struct PrmodelArgs {
    /// Cover probability that an LSB is 0.
    #[arg(long, value_parser = unit_real)]
    p: f64,
    #[arg(long = "k-grid", value_delimiter = ',', required = true, value_parser = unit_real)]
    k_grid: Vec<f64>,
    #[arg(long = "i-grid", value_delimiter = ',', required = true, value_parser = unit_real)]
    i_grid: Vec<f64>,
    #[arg(long, default_value_t = 800)]
    width: usize,
    #[arg(long, default_value_t = 600)]
    height: usize,
    #[arg(long, default_value_t = 3)]
    channels: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn unit_real(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn positive_real(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be a positive finite number"))
    }
}

fn positive_count(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(format!("{s:?}: {e}")),
    }
}

fn parse_band(s: &str) -> Result<Band, String> {
    s.parse()
}

/// Failure reported with exit code 2.
#[derive(Debug)]
struct DataError(String);

impl From<crate::error::Error> for DataError {
    fn from(e: crate::error::Error) -> Self {
        DataError(e.to_string())
    }
}

impl From<csv::Error> for DataError {
    fn from(e: csv::Error) -> Self {
        DataError(format!("csv: {e}"))
    }
}

impl From<io::Error> for DataError {
    fn from(e: io::Error) -> Self {
        DataError(e.to_string())
    }
}

type CliResult<T> = Result<T, DataError>;

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// [`dispatch`] with explicit output streams.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    0
                }
                _ => {
                    let rendered = e.render().to_string();
                    let _ = write!(stderr, "{rendered}");
                    if !rendered.contains("Usage:") {
                        let _ = writeln!(stderr, "\n{}", Cli::command().render_usage());
                    }
                    1
                }
            };
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(DataError(msg)) => {
            let _ = writeln!(stderr, "error: {}", msg.replace('\n', " "));
            2
        }
    }
}

fn execute(command: Command, stdout: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Features(a) => features(a, stdout),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a, stdout),
        Command::Evaluate(a) => evaluate_cmd(a, stdout),
        Command::Embed(a) => embed(a),
        Command::Wavelet(a) => wavelet(a, stdout),
        Command::Etacurve(a) => etacurve(a, stdout),
        Command::Calibrate(a) => calibrate_cmd(a, stdout),
        Command::Estimate(a) => estimate(a, stdout),
        Command::Prmodel(a) => prmodel(a, stdout),
    }
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| DataError(format!("{}: {e}", path.display())))
}

fn read_image(path: &Path) -> CliResult<Image> {
    read_pnm(&read_file(path)?).map_err(|e| DataError(format!("{}: {e}", path.display())))
}

/// Writes CSV records to `--out` or, when absent, to stdout.
fn with_csv(
    out: Option<&Path>,
    stdout: &mut dyn Write,
    body: impl FnOnce(&mut csv::Writer<&mut dyn Write>) -> CliResult<()>,
) -> CliResult<()> {
    let mut file;
    let sink: &mut dyn Write = match out {
        Some(path) => {
            file = io::BufWriter::new(
                fs::File::create(path).map_err(|e| DataError(format!("{}: {e}", path.display())))?,
            );
            &mut file
        }
        None => stdout,
    };
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .flexible(true)
        .from_writer(sink);
    body(&mut writer)?;
    writer.flush()?;
    Ok(())
}

fn csv_reader(path: &Path) -> CliResult<csv::Reader<fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| DataError(format!("{}: {e}", path.display())))
}

fn features(a: FeaturesArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let cfg = MeasureConfig::with_window_words(a.words as usize);
    let window = cfg.window_bytes();
    let mut rows = Vec::new();
    for path in &a.inputs {
        let bytes = if a.lsb {
            extract_lsb_plane(&read_image(path)?).to_bytes()
        } else {
            read_file(path)?
        };
        if bytes.len() < window {
            return Err(DataError(format!(
                "{}: {} bytes is shorter than one {window}-byte window",
                path.display(),
                bytes.len()
            )));
        }
        for (n, chunk) in bytes.chunks_exact(window).enumerate() {
            rows.push((path.display().to_string(), n, feature_vector(chunk, &cfg)?));
        }
    }
    with_csv(a.out.as_deref(), stdout, |w| {
        let mut header = vec!["file".to_string(), "window".to_string()];
        header.extend((1..=FEATURE_DIM).map(|k| format!("mu{k}")));
        w.write_record(&header)?;
        for (file, n, fv) in &rows {
            let mut rec = vec![file.clone(), n.to_string()];
            rec.extend(fv.0.iter().map(|&v| real(v)));
            w.write_record(&rec)?;
        }
        Ok(())
    })
}

struct FeatureRow {
    file: String,
    window: String,
    features: FeatureVector,
}

fn read_features(path: &Path) -> CliResult<Vec<FeatureRow>> {
    let mut reader = csv_reader(path)?;
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 + FEATURE_DIM {
            return Err(DataError(format!(
                "{} row {}: expected {} fields, found {}",
                path.display(),
                line + 2,
                2 + FEATURE_DIM,
                rec.len()
            )));
        }
        let mut fv = [0.0; FEATURE_DIM];
        for (k, slot) in fv.iter_mut().enumerate() {
            let field = &rec[2 + k];
            *slot = field
                .trim()
                .parse()
                .map_err(|_| DataError(format!("{} row {}: bad number {field:?}", path.display(), line + 2)))?;
        }
        rows.push(FeatureRow {
            file: rec[0].to_string(),
            window: rec[1].to_string(),
            features: FeatureVector(fv),
        });
    }
    if rows.is_empty() {
        return Err(DataError(format!("{}: no feature rows", path.display())));
    }
    Ok(rows)
}

fn read_labels(path: &Path) -> CliResult<HashMap<String, Label>> {
    let mut reader = csv_reader(path)?;
    let mut map = HashMap::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(DataError(format!("{} row {}: expected file,label", path.display(), line + 2)));
        }
        let label: Label = rec[1]
            .trim()
            .parse()
            .map_err(|_| DataError(format!("{} row {}: bad label {:?}", path.display(), line + 2, &rec[1])))?;
        map.insert(rec[0].to_string(), label);
    }
    Ok(map)
}

fn labelled_samples(features: &Path, labels: &Path) -> CliResult<Vec<Sample>> {
    let labels = read_labels(labels)?;
    read_features(features)?
        .into_iter()
        .map(|row| {
            let label = labels
                .get(&row.file)
                .ok_or_else(|| DataError(format!("no label for {}", row.file)))?;
            Ok(Sample::new(row.features, *label))
        })
        .collect()
}

fn load_model_file(path: &Path) -> CliResult<MulticlassModel> {
    let text = String::from_utf8(read_file(path)?)
        .map_err(|_| DataError(format!("{}: model file is not UTF-8", path.display())))?;
    load_model(&text).map_err(|e| DataError(format!("{}: {e}", path.display())))
}

fn train(a: TrainArgs) -> CliResult<()> {
    let samples = labelled_samples(&a.features, &a.labels)?;
    let mut config = SvmConfig {
        c: a.c,
        seed: a.seed,
        ..SvmConfig::default()
    };
    if let Some(g) = a.gamma {
        config.gamma = g;
    }
    let model = train_multiclass(&samples, &config)?;
    fs::write(&a.model, save_model(&model)).map_err(|e| DataError(format!("{}: {e}", a.model.display())))?;
    Ok(())
}

fn predict(a: PredictArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let model = load_model_file(&a.model)?;
    let rows = read_features(&a.features)?;
    with_csv(a.out.as_deref(), stdout, |w| {
        w.write_record(["file", "window", "predicted"])?;
        for row in &rows {
            let label = model.predict_class(&row.features);
            w.write_record([row.file.as_str(), row.window.as_str(), &label.to_string()])?;
        }
        Ok(())
    })
}

fn evaluate_cmd(a: EvaluateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let model = load_model_file(&a.model)?;
    let samples = labelled_samples(&a.features, &a.labels)?;
    let eval = evaluate(&model, &samples)?;
    with_csv(a.out.as_deref(), stdout, |w| {
        let mut header = vec!["true_label".to_string()];
        header.extend(eval.matrix.labels.iter().map(Label::to_string));
        w.write_record(&header)?;
        for (label, row) in eval.matrix.labels.iter().zip(&eval.matrix.rates) {
            let mut rec = vec![label.to_string()];
            rec.extend(row.iter().map(|&v| real(v)));
            w.write_record(&rec)?;
        }
        w.write_record(["accuracy".to_string(), real(eval.accuracy)])?;
        Ok(())
    })
}

fn embed(a: EmbedArgs) -> CliResult<()> {
    let image = read_image(&a.input)?;
    let order: EmbedOrder = a.order.parse().map_err(DataError)?;
    let params = StegoParams::with_order(a.level, a.seed, order)?;
    let out = embed_lsb(&image, &params);
    fs::write(&a.out, write_pnm(&out)).map_err(|e| DataError(format!("{}: {e}", a.out.display())))?;
    Ok(())
}

fn wavelet(a: WaveletArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let image = read_image(&a.input)?;
    let bands = image
        .channels()
        .iter()
        .map(second_level_subbands)
        .collect::<Result<Vec<_>, _>>()?;
    with_csv(a.out.as_deref(), stdout, |w| {
        w.write_record(["channel", "row", "col", "value"])?;
        for (c, sb) in bands.iter().enumerate() {
            for (n, &v) in sb.band(a.band).iter().enumerate() {
                w.write_record([c.to_string(), (n / sb.width).to_string(), (n % sb.width).to_string(), real(v)])?;
            }
        }
        Ok(())
    })
}

fn etacurve(a: EtacurveArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let image = read_image(&a.input)?;
    let k_levels = if a.k_levels.is_empty() { vec![0.0] } else { a.k_levels };
    let grid = eta_grid(&image, &k_levels, &a.i_levels, a.seed)?;
    with_csv(a.out.as_deref(), stdout, |w| {
        w.write_record(["image", "k", "i", "eta", "gamma_db"])?;
        for (&k, row) in k_levels.iter().zip(&grid) {
            for r in row {
                w.write_record(["0".to_string(), real(k), real(r.i), real(r.eta), real(r.gamma_db)])?;
            }
        }
        Ok(())
    })
}

fn calibrate_cmd(a: CalibrateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let images = a.inputs.iter().map(|p| read_image(p)).collect::<CliResult<Vec<_>>>()?;
    let run = calibrate_detailed(&images, &a.k_levels, a.i_fixed, a.seed, a.repeats)?;
    with_csv(a.out.as_deref(), stdout, |w| {
        w.write_record(["image", "k", "i", "eta", "gamma_db"])?;
        for (m, readings) in run.per_image.iter().enumerate() {
            for (&k, r) in a.k_levels.iter().zip(readings) {
                w.write_record([m.to_string(), real(k), real(a.i_fixed), real(r.eta), real(r.gamma_db)])?;
            }
        }
        for p in &run.curve.points {
            w.write_record([
                "mean".to_string(),
                real(p.k),
                real(a.i_fixed),
                real(p.mean_eta),
                real(p.mean_gamma_db),
            ])?;
        }
        Ok(())
    })
}

/// Reads the `mean` rows of a calibration CSV; files without them are
/// averaged per `k` over all rows.
fn read_curve(path: &Path) -> CliResult<CalibrationCurve> {
    let mut reader = csv_reader(path)?;
    let mut mean_rows = Vec::new();
    let mut by_k: BTreeMap<u64, (f64, f64, f64, usize)> = BTreeMap::new();
    let mut i_fixed = None;
    let bad = |line: usize, what: &str| DataError(format!("{} row {line}: bad {what}", path.display()));
    for (n, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        if rec.len() != 5 {
            return Err(DataError(format!("{} row {line}: expected 5 fields", path.display())));
        }
        let num = |idx: usize, what: &str| rec[idx].trim().parse::<f64>().map_err(|_| bad(line, what));
        let (k, i, eta, gamma) = (num(1, "k")?, num(2, "i")?, num(3, "eta")?, num(4, "gamma_db")?);
        match i_fixed {
            None => i_fixed = Some(i),
            Some(prev) if prev != i => {
                return Err(DataError(format!("{}: mixed forced levels", path.display())));
            }
            _ => {}
        }
        let point = CurvePoint {
            k,
            mean_eta: eta,
            mean_gamma_db: gamma,
        };
        if &rec[0] == "mean" {
            mean_rows.push(point);
        } else {
            let e = by_k.entry(k.to_bits()).or_insert((k, 0.0, 0.0, 0));
            e.1 += eta;
            e.2 += gamma;
            e.3 += 1;
        }
    }
    let i_fixed = i_fixed.ok_or_else(|| DataError(format!("{}: empty calibration file", path.display())))?;
    let mut points = if mean_rows.is_empty() {
        by_k.into_values()
            .map(|(k, eta, gamma, n)| CurvePoint {
                k,
                mean_eta: eta / n as f64,
                mean_gamma_db: gamma / n as f64,
            })
            .collect()
    } else {
        mean_rows
    };
    points.sort_by(|a, b| a.k.total_cmp(&b.k));
    Ok(CalibrationCurve::new(i_fixed, points, None)?)
}

fn estimate(a: EstimateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let image = read_image(&a.input)?;
    let curve = read_curve(&a.curve)?;
    let k_hat = estimate_k(&image, &curve, a.seed, a.repeats)?;
    writeln!(stdout, "k_hat={}", real(k_hat))?;
    Ok(())
}

fn prmodel(a: PrmodelArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let mut rows = Vec::with_capacity(a.k_grid.len() * a.i_grid.len());
    for &k in &a.k_grid {
        for &i in &a.i_grid {
            let (p_prime, _) = p_prime_chain(a.p, k, i)?;
            let pr = analytic_pr(i, p_prime)?;
            let eta = expected_eta(i, p_prime, a.channels, a.width, a.height)?;
            rows.push([real(k), real(i), real(p_prime), real(pr), real(eta)]);
        }
    }
    with_csv(a.out.as_deref(), stdout, |w| {
        w.write_record(["k", "i", "p_prime", "pr", "expected_eta"])?;
        for r in &rows {
            w.write_record(r)?;
        }
        Ok(())
    })
}
