//! Command-line workflow for the metasurface inverse-design toolkit.
//!
//! Subcommands cover the full loop: `gen-data` synthesizes a labeled corpus,
//! `train` fits an inverse network on it, `design` turns a requested
//! reflection behavior into a copper layout, `eval` scores a trained model
//! against a corpus, and `simulate` runs the analytic reflection model on a
//! hand-picked structure.
//!
//! Every subcommand is reproducible: identical flags and inputs yield
//! byte-identical output files. Exit status is 0 on success, 1 on usage
//! errors (bad flags or unparseable inline values), and 2 on data or model
//! errors (unreadable/mismatched files). Usage errors are detected before
//! any output file is created.

use clap::error::ErrorKind;
use clap::{ArgAction, Parser, Subcommand};
use msinn::codec::{GeometryMetadata, UnitCellCodes, NUM_CODES, NUM_TILES};
use msinn::dataset::{generate, load_dataset, save_dataset, split};
use msinn::designer::{
    bundle_paths, design, evaluate, load_bundle, save_bundle, train_inverse, ModelManifest,
    Variant, DEFAULT_DROPOUT_RATE,
};
use msinn::nn::TrainConfig;
use msinn::plot::write_spectrum_svg;
use msinn::spectral::extract_notches;
use msinn::surrogate::simulate;
use msinn::{Real, Spectrum, SurrogateConfig, Target};
use std::fmt::Display;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Fraction of a corpus `train` keeps for fitting; the rest is held out for
/// the per-epoch evaluation columns and the final report.
const TRAIN_SPLIT_FRACTION: f64 = 0.7;

#[derive(Parser)]
#[command(
    name = "msinn",
    version,
    about = "Inverse design of frequency-selective metasurfaces",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled corpus of random structures
    #[command(name = "gen-data")]
    GenData {
        /// Number of samples to generate
        #[arg(long)]
        n: usize,
        /// Seed for the sample generator
        #[arg(long)]
        seed: u64,
        /// Output corpus path
        #[arg(long)]
        out: PathBuf,
        /// Sort each sample's tile codes so spectrum-equivalent structures
        /// share one label
        #[arg(long, action = ArgAction::SetTrue)]
        canonical: bool,
        /// Store each sample's full reflection spectrum alongside its
        /// features
        #[arg(long = "store-spectra", action = ArgAction::SetTrue)]
        store_spectra: bool,
    },
    /// Train an inverse network on a corpus
    Train {
        /// Training corpus (from gen-data)
        #[arg(long)]
        data: PathBuf,
        /// Network output form: "restricted" (tile codes) or
        /// "non-restricted" (pixels)
        #[arg(long, value_parser = parse_variant)]
        variant: Variant,
        /// Number of training epochs
        #[arg(long)]
        epochs: usize,
        /// Mini-batch size
        #[arg(long)]
        batch: usize,
        /// Adam learning rate
        #[arg(long)]
        lr: f64,
        /// Seed for initialization, shuffling, dropout, and the train/test
        /// split
        #[arg(long)]
        seed: u64,
        /// Output model stem; writes the .weights and .manifest.json pair
        #[arg(long)]
        out: PathBuf,
    },
    /// Design a structure for a requested set of reflection notches
    Design {
        /// Model stem (or either bundle file) from train
        #[arg(long)]
        model: PathBuf,
        /// Requested notches: semicolon-separated "freq_ghz,depth_db,bw_ghz"
        /// triples, e.g. "15,-15,0.5" or "17.5,-30,0.5;23.5,-20,0.5"
        #[arg(long)]
        target: String,
        /// Output mask path; ".csv" writes comma-separated 0/1 rows, any
        /// other extension a portable bitmap (P1)
        #[arg(long = "out-mask")]
        out_mask: PathBuf,
        /// Output spectrum CSV path; a rendering of the curve is written
        /// next to it with the extension replaced by ".svg"
        #[arg(long = "out-spectrum")]
        out_spectrum: PathBuf,
        /// Output report path (JSON)
        #[arg(long)]
        report: PathBuf,
    },
    /// Score a trained model against a corpus
    Eval {
        /// Model stem (or either bundle file) from train
        #[arg(long)]
        model: PathBuf,
        /// Corpus to score against (from gen-data)
        #[arg(long)]
        data: PathBuf,
        /// Output report path (JSON)
        #[arg(long)]
        report: PathBuf,
    },
    /// Run the analytic reflection model on one structure
    Simulate {
        /// 16 tile codes (0..=7), row-major, separated by spaces or commas
        #[arg(long)]
        codes: String,
        /// Output spectrum CSV path; a rendering of the curve is written
        /// next to it with the extension replaced by ".svg"
        #[arg(long)]
        out: PathBuf,
    },
}

/// A failed run, split by whose fault it is: `Usage` for arguments that are
/// wrong on their face (exit 1), `Data` for files or models that don't hold
/// up (exit 2).
enum Failure {
    Usage(String),
    Data(String),
}

impl From<msinn::Error> for Failure {
    fn from(e: msinn::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

fn usage<T: Display>(message: T) -> Failure {
    Failure::Usage(message.to_string())
}

fn reading(path: &Path, e: msinn::Error) -> Failure {
    Failure::Data(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    // Die the Unix way when stdout is a pipe that closes early (`msinn ... |
    // head`), instead of panicking on the broken pipe.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap models --help/--version as errors; they are successes.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(Failure::Data(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::GenData {
            n,
            seed,
            out,
            canonical,
            store_spectra,
        } => gen_data(n, seed, &out, canonical, store_spectra),
        Command::Train {
            data,
            variant,
            epochs,
            batch,
            lr,
            seed,
            out,
        } => train(&data, variant, epochs, batch, lr, seed, &out),
        Command::Design {
            model,
            target,
            out_mask,
            out_spectrum,
            report,
        } => run_design(&model, &target, &out_mask, &out_spectrum, &report),
        Command::Eval {
            model,
            data,
            report,
        } => run_eval(&model, &data, &report),
        Command::Simulate { codes, out } => run_simulate(&codes, &out),
    }
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    Variant::from_tag(s).map_err(|_| {
        format!("'{s}' is not a network variant (expected \"restricted\" or \"non-restricted\")")
    })
}

fn gen_data(
    n: usize,
    seed: u64,
    out: &Path,
    canonical: bool,
    store_spectra: bool,
) -> Result<(), Failure> {
    if n == 0 {
        return Err(usage("--n must be positive"));
    }
    let config = SurrogateConfig::default();
    let dataset = generate::<Real>(n, seed, &config, canonical, store_spectra)?;
    save_dataset(&dataset, out)?;
    println!(
        "wrote {n} samples to {} (seed {seed}, canonical labels: {}, spectra stored: {})",
        out.display(),
        yes_no(canonical),
        yes_no(store_spectra),
    );
    println!("simulator config digest: {}", dataset.config_digest());
    Ok(())
}

fn train(
    data: &Path,
    variant: Variant,
    epochs: usize,
    batch: usize,
    lr: f64,
    seed: u64,
    out: &Path,
) -> Result<(), Failure> {
    if epochs == 0 {
        return Err(usage("--epochs must be positive"));
    }
    if batch == 0 {
        return Err(usage("--batch must be positive"));
    }
    if !(lr.is_finite() && lr > 0.0) {
        return Err(usage("--lr must be a positive number"));
    }
    let dataset = load_dataset::<Real>(data).map_err(|e| reading(data, e))?;
    let (train_set, test_set) = split(&dataset, TRAIN_SPLIT_FRACTION, seed)?;
    println!(
        "training the {variant} model on {} samples ({} held out) for {epochs} epochs \
         (batch {batch}, learning rate {lr}, dropout {DEFAULT_DROPOUT_RATE}, seed {seed})",
        train_set.len(),
        test_set.len(),
    );
    std::io::stdout().flush()?;

    let config = TrainConfig {
        epochs,
        batch_size: batch,
        learning_rate: lr,
        dropout_rate: DEFAULT_DROPOUT_RATE,
        rng_seed: seed,
        ..TrainConfig::default()
    };
    let (model, history) = train_inverse(variant, &train_set, Some(&test_set), &config)?;

    // Condensed learning curve: first epoch, ten waypoints, last epoch.
    let stride = (epochs / 10).max(1);
    for (i, stats) in history.epochs.iter().enumerate() {
        let epoch = i + 1;
        if epoch == 1 || epoch == epochs || epoch % stride == 0 {
            println!(
                "epoch {epoch:>6}/{epochs}  train loss {:.6}  train acc {:.4}  \
                 held-out loss {:.6}  held-out acc {:.4}",
                stats.train_loss,
                stats.train_accuracy,
                stats.eval_loss.unwrap_or(f64::NAN),
                stats.eval_accuracy.unwrap_or(f64::NAN),
            );
        }
    }

    let metrics = evaluate(&model, variant, &test_set, dataset.surrogate_config())?;
    println!("held-out round trip over {} samples:", metrics.samples);
    print_metrics(&metrics);

    let manifest = ModelManifest::new(
        variant,
        dataset.surrogate_config().clone(),
        dataset.config_digest(),
        config,
        &history,
    );
    save_bundle(out, &model, &manifest)?;
    let (weights_path, manifest_path) = bundle_paths(out);
    println!(
        "saved model to {} and {}",
        weights_path.display(),
        manifest_path.display()
    );
    Ok(())
}

fn run_design(
    model_path: &Path,
    target: &str,
    out_mask: &Path,
    out_spectrum: &Path,
    report_path: &Path,
) -> Result<(), Failure> {
    let target = Target::parse(target).map_err(usage)?;
    check_spectrum_path(out_spectrum)?;
    let (model, manifest) =
        load_bundle::<Real>(&bundle_stem(model_path)).map_err(|e| reading(model_path, e))?;
    let report = design(
        &model,
        manifest.variant,
        &target,
        &manifest.surrogate_config,
    )?;
    let spectrum = simulate(&report.codes, &manifest.surrogate_config);

    write_mask(out_mask, &report)?;
    let svg_path = write_spectrum_files(&spectrum, out_spectrum)?;
    write_json(report_path, &report)?;

    println!("requested: {}", describe_target(&target));
    println!("designed tile codes: {}", codes_line(&report.codes));
    println!("achieved:  {}", describe_target(&report.achieved));
    for m in &report.matches {
        println!(
            "matched target #{} to achieved notch #{} ({:+.2} GHz, {:+.2} dB, {:+.2} GHz wide)",
            m.target_index,
            m.achieved_index,
            m.delta_freq_ghz,
            m.delta_depth_db,
            m.delta_bandwidth_ghz,
        );
    }
    if report.missed_targets > 0 {
        println!(
            "missed {} of {} requested notches",
            report.missed_targets,
            target.len()
        );
    }
    if report.spurious_achieved > 0 {
        println!("{} unrequested notches appeared", report.spurious_achieved);
    }
    println!(
        "wrote {}, {}, {}, {}",
        out_mask.display(),
        out_spectrum.display(),
        svg_path.display(),
        report_path.display()
    );
    Ok(())
}

fn run_eval(model_path: &Path, data: &Path, report_path: &Path) -> Result<(), Failure> {
    let (model, manifest) =
        load_bundle::<Real>(&bundle_stem(model_path)).map_err(|e| reading(model_path, e))?;
    let dataset = load_dataset::<Real>(data).map_err(|e| reading(data, e))?;
    if dataset.config_digest() != manifest.dataset_digest {
        return Err(Failure::Data(format!(
            "corpus {} was generated under a different simulator configuration than the model \
             (digest {} vs {})",
            data.display(),
            dataset.config_digest(),
            manifest.dataset_digest,
        )));
    }
    let metrics = evaluate(
        &model,
        manifest.variant,
        &dataset,
        dataset.surrogate_config(),
    )?;
    write_json(report_path, &metrics)?;
    println!(
        "evaluated the {} model on {} samples:",
        manifest.variant, metrics.samples
    );
    print_metrics(&metrics);
    println!("wrote {}", report_path.display());
    Ok(())
}

fn run_simulate(codes: &str, out: &Path) -> Result<(), Failure> {
    let cell = parse_codes(codes)?;
    check_spectrum_path(out)?;
    let spectrum = simulate::<Real>(&cell, &SurrogateConfig::default());
    let svg_path = write_spectrum_files(&spectrum, out)?;

    let (min_index, min_db) = spectrum.min_point();
    println!("tile codes: {}", codes_line(&cell));
    println!(
        "deepest reflection {min_db:.2} dB at {:.2} GHz",
        Spectrum::frequency_ghz(min_index)
    );
    let notches = extract_notches(&spectrum);
    if notches.is_empty() {
        println!("no notches below the detection threshold");
    } else {
        println!("notches: {}", describe_target(&notches));
    }
    println!("wrote {} and {}", out.display(), svg_path.display());
    Ok(())
}

/// Parses 16 whitespace- or comma-separated tile codes.
fn parse_codes(text: &str) -> Result<UnitCellCodes, Failure> {
    let mut values = Vec::with_capacity(NUM_TILES);
    for token in text.split(|c: char| c.is_whitespace() || c == ',') {
        if token.is_empty() {
            continue;
        }
        let code: u8 = token
            .parse()
            .map_err(|_| usage(format!("tile code '{token}' is not an integer")))?;
        if code as usize >= NUM_CODES {
            return Err(usage(format!(
                "tile code {code} out of range 0..={}",
                NUM_CODES - 1
            )));
        }
        values.push(code);
    }
    if values.len() != NUM_TILES {
        return Err(usage(format!(
            "expected {NUM_TILES} tile codes, got {}",
            values.len()
        )));
    }
    UnitCellCodes::from_slice(&values).map_err(usage)
}

/// Accepts a bundle stem or either of its files.
fn bundle_stem(path: &Path) -> PathBuf {
    let name = path.to_string_lossy();
    for suffix in [".manifest.json", ".weights"] {
        if let Some(stem) = name.strip_suffix(suffix) {
            return PathBuf::from(stem);
        }
    }
    path.to_path_buf()
}

/// The spectrum CSV path must not itself end in ".svg", which is reserved
/// for the rendering written next to it.
fn check_spectrum_path(path: &Path) -> Result<(), Failure> {
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("svg"))
    {
        return Err(usage(format!(
            "spectrum path {} must not use the .svg extension (reserved for the plot written \
             alongside the CSV)",
            path.display()
        )));
    }
    Ok(())
}

fn write_mask(path: &Path, report: &msinn::DesignReport) -> Result<(), Failure> {
    let mut writer = BufWriter::new(File::create(path)?);
    let meta = GeometryMetadata::default();
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        report.mask.write_csv(&mut writer, &meta)?;
    } else {
        report.mask.write_pbm(&mut writer, &meta)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes the spectrum CSV at `csv_path` and its rendering alongside;
/// returns the rendering's path.
fn write_spectrum_files(spectrum: &Spectrum, csv_path: &Path) -> Result<PathBuf, Failure> {
    let mut writer = BufWriter::new(File::create(csv_path)?);
    spectrum.write_csv(&mut writer)?;
    writer.flush()?;
    let svg_path = csv_path.with_extension("svg");
    let mut writer = BufWriter::new(File::create(&svg_path)?);
    write_spectrum_svg(spectrum, &mut writer)?;
    writer.flush()?;
    Ok(svg_path)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut writer = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut writer, value)
        .map_err(|e| Failure::Data(format!("writing {}: {e}", path.display())))?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

fn print_metrics(metrics: &msinn::designer::EvalMetrics) {
    println!("  bit accuracy          {:.4}", metrics.bit_accuracy);
    println!("  tile accuracy         {:.4}", metrics.tile_accuracy);
    println!(
        "  notch count match     {:.4}",
        metrics.notch_count_match_rate
    );
    match (
        metrics.mean_abs_freq_error_ghz,
        metrics.mean_abs_depth_error_db,
        metrics.mean_abs_bandwidth_error_ghz,
    ) {
        (Some(freq), Some(depth), Some(bw)) => {
            println!("  mean |Δfrequency|     {freq:.4} GHz");
            println!("  mean |Δdepth|         {depth:.4} dB");
            println!("  mean |Δbandwidth|     {bw:.4} GHz");
        }
        _ => println!("  no notches matched, round-trip errors undefined"),
    }
    println!(
        "  notches matched/missed/spurious  {}/{}/{}",
        metrics.matched_notches, metrics.missed_notches, metrics.spurious_notches
    );
}

fn describe_target(target: &Target) -> String {
    if target.is_empty() {
        return "no notches".to_owned();
    }
    target
        .notches()
        .iter()
        .map(|n| format!("({n})"))
        .collect::<Vec<_>>()
        .join("; ")
}

fn codes_line(cell: &UnitCellCodes) -> String {
    cell.codes()
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn yes_no(flag: bool) -> &'static str {
    if flag {
        "yes"
    } else {
        "no"
    }
}
