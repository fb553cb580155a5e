//! Synthetic training corpora: seeded generation, deterministic splits, and
//! a line-delimited JSON interchange format (`MSDS/1`).
//!
//! Each sample pairs a unit cell (the label) with the feature vector of its
//! simulated spectrum (the input), optionally retaining the spectrum itself.
//! Generation is reproducible from a single seed: sample `i` draws its codes
//! from an independent, index-keyed substream, so the corpus is identical
//! regardless of generation order or batching.

use crate::codec::{UnitCellCodes, NUM_CODES, NUM_TILES};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::{extract_notches, target_to_vector, FeatureVector};
use crate::surrogate::{simulate, Spectrum, SurrogateConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// Magic string naming the on-disk dataset format.
pub const DATASET_FORMAT: &str = "MSDS/1";

/// One labeled example: a unit cell and its spectrum features.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    /// Tile codes — the label a network learns to reproduce.
    pub codes: UnitCellCodes,
    /// Normalized notch features of the simulated spectrum — the input.
    pub features: FeatureVector<T>,
    /// The full spectrum, when the corpus was generated with storage on.
    pub spectrum: Option<Spectrum<T>>,
}

/// A generated corpus plus the provenance needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    samples: Vec<Sample<T>>,
    generator_seed: u64,
    canonical_labels: bool,
    surrogate_config: SurrogateConfig<T>,
}

impl<T: Scalar> Dataset<T> {
    /// The samples in generation (or split) order.
    pub fn samples(&self) -> &[Sample<T>] {
        &self.samples
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Whether the corpus is empty.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Seed the corpus was generated from.
    pub fn generator_seed(&self) -> u64 {
        self.generator_seed
    }

    /// Whether labels were put in canonical (sorted) tile order.
    pub fn canonical_labels(&self) -> bool {
        self.canonical_labels
    }

    /// Simulator configuration the samples were computed with.
    pub fn surrogate_config(&self) -> &SurrogateConfig<T> {
        &self.surrogate_config
    }

    /// Hex digest of the simulator configuration, for provenance checks.
    pub fn config_digest(&self) -> String {
        self.surrogate_config.digest()
    }
}

/// Generates `n` samples from `seed`.
///
/// Sample `i` draws 16 uniform codes from substream `i` of the seeded
/// generator. With `canonical_labels` the codes are sorted ascending before
/// being stored — the spectrum only depends on how many tiles carry each
/// code, so sorting collapses every permutation of a draw onto one
/// representative label and makes features-to-label a well-posed mapping.
/// `store_spectra` keeps each sample's full spectrum (large on disk).
pub fn generate<T: Scalar>(
    n: usize,
    seed: u64,
    config: &SurrogateConfig<T>,
    canonical_labels: bool,
    store_spectra: bool,
) -> Result<Dataset<T>> {
    config.validate()?;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut codes = [0u8; 16];
        for code in codes.iter_mut() {
            *code = rng.random_range(0..NUM_CODES as u8);
        }
        let cell = UnitCellCodes::new(codes).expect("codes drawn in range");
        let cell = if canonical_labels {
            cell.sorted()
        } else {
            cell
        };
        let spectrum = simulate(&cell, config);
        let features = target_to_vector(&extract_notches(&spectrum))?;
        samples.push(Sample {
            codes: cell,
            features,
            spectrum: store_spectra.then_some(spectrum),
        });
    }
    Ok(Dataset {
        samples,
        generator_seed: seed,
        canonical_labels,
        surrogate_config: config.clone(),
    })
}

/// Splits a corpus into train and test parts.
///
/// Indices are shuffled with the seeded generator; the first
/// `floor(n * train_fraction)` (with a tiny epsilon so exact products like
/// 2000 x 0.7 don't round down) become the training set. Both sides must be
/// non-empty.
pub fn split<T: Scalar>(
    dataset: &Dataset<T>,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset<T>, Dataset<T>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = dataset.len();
    let train_len = ((n as f64) * train_fraction + 1e-9).floor() as usize;
    if train_len == 0 || train_len == n {
        return Err(Error::InvalidConfig(format!(
            "splitting {n} samples at {train_fraction} leaves an empty side"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let pick = |picked: &[usize]| Dataset {
        samples: picked.iter().map(|&i| dataset.samples[i].clone()).collect(),
        generator_seed: dataset.generator_seed,
        canonical_labels: dataset.canonical_labels,
        surrogate_config: dataset.surrogate_config.clone(),
    };
    Ok((pick(&indices[..train_len]), pick(&indices[train_len..])))
}

fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_reals(values: impl Iterator<Item = f64>) -> String {
    values.map(fmt_real).collect::<Vec<_>>().join(",")
}

/// Writes a corpus in the line-delimited `MSDS/1` format.
///
/// Line 1 is a JSON header (format magic, generator seed, label mode,
/// simulator configuration and its digest); every further line is one
/// sample. Reals carry 17 significant digits, so values round-trip exactly
/// and equal corpora serialize to identical bytes.
pub fn write_dataset<T: Scalar, W: Write>(dataset: &Dataset<T>, writer: &mut W) -> Result<()> {
    let cfg = dataset.surrogate_config();
    writeln!(
        writer,
        "{{\"format\":\"{}\",\"generator_seed\":{},\"canonical_labels\":{},\
         \"surrogate_config\":{{\"centers_ghz\":[{}],\"halfwidth_ghz\":{},\
         \"max_depth_db\":{}}},\"config_digest\":\"{}\"}}",
        DATASET_FORMAT,
        dataset.generator_seed(),
        dataset.canonical_labels(),
        fmt_reals(cfg.centers_ghz.iter().map(|c| c.to_f64_lossy())),
        fmt_real(cfg.halfwidth_ghz.to_f64_lossy()),
        fmt_real(cfg.max_depth_db.to_f64_lossy()),
        dataset.config_digest(),
    )?;
    for sample in dataset.samples() {
        let codes = sample
            .codes
            .codes()
            .iter()
            .map(u8::to_string)
            .collect::<Vec<_>>()
            .join(",");
        write!(
            writer,
            "{{\"codes\":[{}],\"features\":[{}]",
            codes,
            fmt_reals(sample.features.as_slice().iter().map(|v| v.to_f64_lossy())),
        )?;
        if let Some(spectrum) = &sample.spectrum {
            write!(
                writer,
                ",\"spectrum\":[{}]",
                fmt_reals(spectrum.values().iter().map(|v| v.to_f64_lossy()))
            )?;
        }
        writeln!(writer, "}}")?;
    }
    Ok(())
}

/// Saves a corpus to a file in the `MSDS/1` format.
pub fn save_dataset<T: Scalar>(dataset: &Dataset<T>, path: &Path) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    write_dataset(dataset, &mut writer)?;
    writer.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct RawConfig {
    centers_ghz: [f64; NUM_CODES],
    halfwidth_ghz: f64,
    max_depth_db: f64,
}

#[derive(Deserialize)]
struct RawHeader {
    format: String,
    generator_seed: u64,
    canonical_labels: bool,
    surrogate_config: RawConfig,
    config_digest: String,
}

#[derive(Deserialize)]
struct RawSample {
    codes: Vec<u8>,
    features: Vec<f64>,
    #[serde(default)]
    spectrum: Option<Vec<f64>>,
}

fn parse_err(line: usize, message: impl ToString) -> Error {
    Error::Parse {
        line,
        message: message.to_string(),
    }
}

/// Reads a corpus in the `MSDS/1` format, verifying the format magic, the
/// configuration digest, and every sample's invariants.
pub fn read_dataset<T: Scalar, R: BufRead>(reader: R) -> Result<Dataset<T>> {
    let mut lines = reader.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header line"))??;
    let header: RawHeader = serde_json::from_str(&header_line).map_err(|e| parse_err(1, e))?;
    if header.format != DATASET_FORMAT {
        return Err(Error::FormatVersion {
            expected: DATASET_FORMAT,
            found: header.format,
        });
    }
    let raw = &header.surrogate_config;
    let reference = SurrogateConfig::<f64> {
        centers_ghz: raw.centers_ghz,
        halfwidth_ghz: raw.halfwidth_ghz,
        max_depth_db: raw.max_depth_db,
    };
    if reference.digest() != header.config_digest {
        return Err(Error::DigestMismatch {
            header: header.config_digest,
            recomputed: reference.digest(),
        });
    }
    let config = SurrogateConfig::<T> {
        centers_ghz: raw.centers_ghz.map(T::from_f64_lossy),
        halfwidth_ghz: T::from_f64_lossy(raw.halfwidth_ghz),
        max_depth_db: T::from_f64_lossy(raw.max_depth_db),
    };
    config.validate()?;

    let mut samples = Vec::new();
    for (index, line) in lines.enumerate() {
        let line_no = index + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawSample = serde_json::from_str(&line).map_err(|e| parse_err(line_no, e))?;
        if raw.codes.len() != NUM_TILES {
            return Err(parse_err(
                line_no,
                format!("expected {NUM_TILES} codes, got {}", raw.codes.len()),
            ));
        }
        let codes = UnitCellCodes::from_slice(&raw.codes).map_err(|e| parse_err(line_no, e))?;
        if header.canonical_labels && codes.codes().windows(2).any(|p| p[0] > p[1]) {
            return Err(parse_err(line_no, "codes not in canonical sorted order"));
        }
        let features: Vec<T> = raw.features.iter().map(|&v| T::from_f64_lossy(v)).collect();
        let features = FeatureVector::from_slice(&features).map_err(|e| parse_err(line_no, e))?;
        let spectrum = match raw.spectrum {
            Some(values) => Some(
                Spectrum::from_values(values.iter().map(|&v| T::from_f64_lossy(v)).collect())
                    .map_err(|e| parse_err(line_no, e))?,
            ),
            None => None,
        };
        samples.push(Sample {
            codes,
            features,
            spectrum,
        });
    }
    Ok(Dataset {
        samples,
        generator_seed: header.generator_seed,
        canonical_labels: header.canonical_labels,
        surrogate_config: config,
    })
}

/// Loads a corpus from a file in the `MSDS/1` format.
pub fn load_dataset<T: Scalar>(path: &Path) -> Result<Dataset<T>> {
    read_dataset(BufReader::new(File::open(path)?))
}
