//! The two inverse networks: construction, training, design, and evaluation.
//!
//! Both networks map the 24-element notch features to a unit cell. The
//! *restricted* variant emits 48 bits — sixteen 3-bit tile codes — so every
//! decoded output is a legal structure. The *non-restricted* variant emits
//! all 1024 pixels and relies on nearest-tile projection to legalize its
//! output. `design` runs a trained network on a target and closes the loop:
//! decode, assemble, simulate, and compare achieved notches against the ask.

use crate::codec::{
    assemble_unit_cell, decode_bits, encode_codes, flatten_mask, project_pixels_to_tiles,
    PixelMask, UnitCellCodes, CODE_VECTOR_LEN, NUM_TILES, PIXEL_VECTOR_LEN,
};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::nn::{
    binary_accuracy, load_model, save_model, train, Activation, DenseLayer, MlpModel, TrainConfig,
    TrainHistory,
};
use crate::scalar::Scalar;
use crate::spectral::{
    extract_notches, target_to_vector, vector_to_target, DesignTarget, FEATURE_LEN,
};
use crate::surrogate::{simulate, SurrogateConfig};
use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

/// Notches farther apart than this are never considered the same notch.
pub const MATCH_GATE_GHZ: f64 = 1.5;
/// Dropout rate both architectures are built with.
pub const DEFAULT_DROPOUT_RATE: f64 = 0.1;

/// Which of the two network architectures is in play.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// 1024 pixel outputs, legalized by projection.
    NonRestricted,
    /// 48 bit-code outputs, legal by construction.
    Restricted,
}

impl Variant {
    /// Stable text tag (CLI flag value, manifest field).
    pub fn tag(self) -> &'static str {
        match self {
            Variant::NonRestricted => "non_restricted",
            Variant::Restricted => "restricted",
        }
    }

    /// Parses [`Variant::tag`] (hyphen/underscore agnostic).
    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag.replace('-', "_").as_str() {
            "non_restricted" => Ok(Variant::NonRestricted),
            "restricted" => Ok(Variant::Restricted),
            other => Err(Error::InvalidConfig(format!(
                "unknown variant {other:?}; expected restricted or non_restricted"
            ))),
        }
    }

    /// Width of the network output / label vector.
    pub fn label_len(self) -> usize {
        match self {
            Variant::NonRestricted => PIXEL_VECTOR_LEN,
            Variant::Restricted => CODE_VECTOR_LEN,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Blueprint of one variant: layer widths, dropout placement, activations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchitectureSpec {
    pub variant: Variant,
    /// Widths from input to output, e.g. `[24, 24, 500, ..., 48]`.
    pub layer_dims: Vec<usize>,
    /// Dense-layer indices followed by dropout.
    pub dropout_after: Vec<usize>,
    /// Activation of each dense layer.
    pub activations: Vec<Activation>,
}

/// The fixed blueprint of each variant.
///
/// Both take the 24 features through a 24-wide layer and four equal hidden
/// layers to the variant's output width, ReLU throughout and sigmoid on the
/// output. The non-restricted net (hidden width 300, 1024 outputs) has
/// dropout after all five pre-output layers; the restricted net (hidden
/// width 500, 48 outputs) omits the dropout stage after its last hidden
/// layer.
pub fn architecture(variant: Variant) -> ArchitectureSpec {
    let (hidden, dropout_after) = match variant {
        Variant::NonRestricted => (300, vec![0, 1, 2, 3, 4]),
        Variant::Restricted => (500, vec![0, 1, 2, 3]),
    };
    let layer_dims = vec![
        FEATURE_LEN,
        FEATURE_LEN,
        hidden,
        hidden,
        hidden,
        hidden,
        variant.label_len(),
    ];
    let mut activations = vec![Activation::Relu; layer_dims.len() - 2];
    activations.push(Activation::Sigmoid);
    ArchitectureSpec {
        variant,
        layer_dims,
        dropout_after,
        activations,
    }
}

/// Builds an untrained (zero-initialized) network of the given variant.
pub fn build<T: Scalar>(variant: Variant) -> MlpModel<T> {
    let spec = architecture(variant);
    let layers = spec
        .layer_dims
        .windows(2)
        .zip(&spec.activations)
        .map(|(dims, &act)| DenseLayer::zeros(dims[0], dims[1], act))
        .collect();
    MlpModel::new(
        layers,
        &spec.dropout_after,
        T::from_f64_lossy(DEFAULT_DROPOUT_RATE),
    )
    .expect("built-in architectures are valid")
}

/// Whether a model has exactly the layer shape, activations, and dropout
/// placement of a variant.
pub fn matches_architecture<T: Scalar>(model: &MlpModel<T>, variant: Variant) -> bool {
    let spec = architecture(variant);
    model.layers().len() == spec.layer_dims.len() - 1
        && model
            .layers()
            .iter()
            .zip(spec.layer_dims.windows(2))
            .zip(&spec.activations)
            .all(|((layer, dims), &act)| {
                layer.in_dim() == dims[0] && layer.out_dim() == dims[1] && layer.activation() == act
            })
        && model.dropout_after() == spec.dropout_after
}

/// The label vector a variant's network learns for one unit cell: 48 code
/// bits (restricted) or 1024 assembled pixels (non-restricted).
pub fn encode_label<T: Scalar>(variant: Variant, codes: &UnitCellCodes) -> Vec<T> {
    let bits: Vec<u8> = match variant {
        Variant::Restricted => encode_codes(codes).to_vec(),
        Variant::NonRestricted => flatten_mask(&assemble_unit_cell(codes)),
    };
    bits.iter()
        .map(|&b| T::from_f64_lossy(f64::from(b)))
        .collect()
}

/// Decodes raw network outputs into a legal unit cell: bit thresholding for
/// the restricted variant, nearest-tile projection for the non-restricted.
pub fn decode_label<T: Scalar>(variant: Variant, outputs: &[T]) -> Result<UnitCellCodes> {
    match variant {
        Variant::Restricted => decode_bits(outputs),
        Variant::NonRestricted => project_pixels_to_tiles(outputs),
    }
}

/// Stacks a corpus's feature vectors into one `n x 24` matrix.
pub fn feature_matrix<T: Scalar>(dataset: &Dataset<T>) -> Array2<T> {
    let mut matrix = Array2::zeros((dataset.len(), FEATURE_LEN));
    for (mut row, sample) in matrix.rows_mut().into_iter().zip(dataset.samples()) {
        for (slot, &v) in row.iter_mut().zip(sample.features.as_slice()) {
            *slot = v;
        }
    }
    matrix
}

/// Stacks a corpus's labels (per the variant's encoding) into one matrix.
pub fn label_matrix<T: Scalar>(variant: Variant, dataset: &Dataset<T>) -> Array2<T> {
    let mut matrix = Array2::zeros((dataset.len(), variant.label_len()));
    for (mut row, sample) in matrix.rows_mut().into_iter().zip(dataset.samples()) {
        for (slot, v) in row
            .iter_mut()
            .zip(encode_label::<T>(variant, &sample.codes))
        {
            *slot = v;
        }
    }
    matrix
}

/// Trains a fresh network of `variant` on a corpus.
///
/// Labels are encoded per the variant; `eval_set`, when given, is scored
/// after every epoch with dropout off and shows up in the history's
/// evaluation columns. Fully deterministic given `config.rng_seed`.
pub fn train_inverse<T: Scalar>(
    variant: Variant,
    train_set: &Dataset<T>,
    eval_set: Option<&Dataset<T>>,
    config: &TrainConfig,
) -> Result<(MlpModel<T>, TrainHistory)> {
    let mut model = build(variant);
    let inputs = feature_matrix(train_set);
    let targets = label_matrix(variant, train_set);
    let eval_data = eval_set.map(|d| (feature_matrix(d), label_matrix(variant, d)));
    let history = train(
        &mut model,
        &inputs,
        &targets,
        eval_data.as_ref().map(|(x, y)| (x, y)),
        config,
    )?;
    Ok((model, history))
}

/// One target notch paired with the achieved notch that landed nearest it.
///
/// Deltas are achieved minus target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NotchMatch<T> {
    pub target_index: usize,
    pub achieved_index: usize,
    pub delta_freq_ghz: T,
    pub delta_depth_db: T,
    pub delta_bandwidth_ghz: T,
}

/// Greedily pairs achieved notches to target notches by nearest frequency.
///
/// Candidate pairs within the 1.5 GHz gate are taken closest-first, each
/// notch used at most once (ties broken by index, so the pairing is
/// deterministic). Returns the matches in target order plus the counts of
/// unmatched target (missed) and achieved (spurious) notches.
pub fn match_notches<T: Scalar>(
    target: &DesignTarget<T>,
    achieved: &DesignTarget<T>,
) -> (Vec<NotchMatch<T>>, usize, usize) {
    let mut candidates = Vec::new();
    for (ti, tn) in target.notches().iter().enumerate() {
        for (ai, an) in achieved.notches().iter().enumerate() {
            let gap = (an.freq_ghz - tn.freq_ghz).abs().to_f64_lossy();
            if gap <= MATCH_GATE_GHZ {
                candidates.push((gap, ti, ai));
            }
        }
    }
    candidates.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("frequency gaps are finite")
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let mut target_used = vec![false; target.len()];
    let mut achieved_used = vec![false; achieved.len()];
    let mut matches = Vec::new();
    for (_, ti, ai) in candidates {
        if target_used[ti] || achieved_used[ai] {
            continue;
        }
        target_used[ti] = true;
        achieved_used[ai] = true;
        let tn = target.notches()[ti];
        let an = achieved.notches()[ai];
        matches.push(NotchMatch {
            target_index: ti,
            achieved_index: ai,
            delta_freq_ghz: an.freq_ghz - tn.freq_ghz,
            delta_depth_db: an.depth_db - tn.depth_db,
            delta_bandwidth_ghz: an.bandwidth_ghz - tn.bandwidth_ghz,
        });
    }
    matches.sort_by_key(|m| m.target_index);
    let missed = target.len() - matches.len();
    let spurious = achieved.len() - matches.len();
    (matches, missed, spurious)
}

/// Everything `design` produced for one target: the structure, what it
/// actually reflects, and how that compares to the ask.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport<T> {
    /// The requested notches.
    pub target: DesignTarget<T>,
    /// Decoded tile codes of the designed structure.
    pub codes: UnitCellCodes,
    /// The assembled 32x32 copper mask.
    pub mask: PixelMask,
    /// Notches of the simulated spectrum of `codes`.
    pub achieved: DesignTarget<T>,
    /// Target/achieved pairings within the matching gate.
    pub matches: Vec<NotchMatch<T>>,
    /// Target notches nothing landed near.
    pub missed_targets: usize,
    /// Achieved notches nobody asked for.
    pub spurious_achieved: usize,
}

/// Runs a trained network on a target and reports the closed loop.
///
/// The target is normalized and pushed through the network; the output is
/// decoded into a legal cell (thresholding or projection per the variant),
/// assembled, simulated, and its notches matched back against the target.
/// Rejects untrained models and models whose shape doesn't fit the variant.
pub fn design<T: Scalar>(
    model: &MlpModel<T>,
    variant: Variant,
    target: &DesignTarget<T>,
    config: &SurrogateConfig<T>,
) -> Result<DesignReport<T>> {
    if !model.is_trained() {
        return Err(Error::Untrained);
    }
    if model.in_dim() != FEATURE_LEN {
        return Err(Error::ShapeMismatch {
            context: "design model input width",
            expected: FEATURE_LEN,
            actual: model.in_dim(),
        });
    }
    if model.out_dim() != variant.label_len() {
        return Err(Error::ShapeMismatch {
            context: "design model output width",
            expected: variant.label_len(),
            actual: model.out_dim(),
        });
    }
    let features = target_to_vector(target)?;
    let output = model.forward(ArrayView1::from(features.as_slice()))?;
    let codes = decode_label(
        variant,
        output.as_slice().expect("forward output is contiguous"),
    )?;
    let mask = assemble_unit_cell(&codes);
    let achieved = extract_notches(&simulate(&codes, config));
    let (matches, missed_targets, spurious_achieved) = match_notches(target, &achieved);
    Ok(DesignReport {
        target: target.clone(),
        codes,
        mask,
        achieved,
        matches,
        missed_targets,
        spurious_achieved,
    })
}

/// Test-set metrics of a trained network.
///
/// `bit_accuracy` scores raw outputs against the variant's label bits;
/// `tile_accuracy` scores whole decoded tiles. The round-trip columns push
/// each prediction back through assembly and simulation and compare the
/// achieved notches with the sample's own: mean absolute errors over all
/// matched notches (absent when nothing matched) and the fraction of samples
/// whose achieved notch count equals the target's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub samples: usize,
    pub bit_accuracy: f64,
    pub tile_accuracy: f64,
    pub mean_abs_freq_error_ghz: Option<f64>,
    pub mean_abs_depth_error_db: Option<f64>,
    pub mean_abs_bandwidth_error_ghz: Option<f64>,
    pub notch_count_match_rate: f64,
    pub matched_notches: usize,
    pub missed_notches: usize,
    pub spurious_notches: usize,
}

/// Scores a trained network on a held-out corpus (see [`EvalMetrics`]).
pub fn evaluate<T: Scalar>(
    model: &MlpModel<T>,
    variant: Variant,
    testset: &Dataset<T>,
    config: &SurrogateConfig<T>,
) -> Result<EvalMetrics> {
    if !model.is_trained() {
        return Err(Error::Untrained);
    }
    if testset.is_empty() {
        return Err(Error::InvalidConfig("evaluation set is empty".into()));
    }
    if model.in_dim() != FEATURE_LEN || model.out_dim() != variant.label_len() {
        return Err(Error::ShapeMismatch {
            context: "evaluation model output width",
            expected: variant.label_len(),
            actual: model.out_dim(),
        });
    }
    let predictions = model.forward_batch(&feature_matrix(testset))?;
    evaluate_predictions(variant, testset, &predictions, config)
}

/// [`evaluate`] against an already-computed prediction matrix.
fn evaluate_predictions<T: Scalar>(
    variant: Variant,
    testset: &Dataset<T>,
    predictions: &Array2<T>,
    config: &SurrogateConfig<T>,
) -> Result<EvalMetrics> {
    let mut bit_accuracy_sum = 0.0;
    let mut tiles_correct = 0usize;
    let mut count_matches = 0usize;
    let mut matched = 0usize;
    let mut missed = 0usize;
    let mut spurious = 0usize;
    let mut freq_error_sum = 0.0;
    let mut depth_error_sum = 0.0;
    let mut bandwidth_error_sum = 0.0;

    for (sample, prediction) in testset.samples().iter().zip(predictions.rows()) {
        let label = encode_label::<T>(variant, &sample.codes);
        bit_accuracy_sum += binary_accuracy(prediction, ArrayView1::from(&label).view())?;

        let decoded = decode_label(
            variant,
            prediction.as_slice().expect("prediction row is contiguous"),
        )?;
        tiles_correct += decoded
            .codes()
            .iter()
            .zip(sample.codes.codes())
            .filter(|(a, b)| a == b)
            .count();

        let target = vector_to_target(&sample.features);
        let achieved = extract_notches(&simulate(&decoded, config));
        if achieved.len() == target.len() {
            count_matches += 1;
        }
        let (matches, miss, spur) = match_notches(&target, &achieved);
        matched += matches.len();
        missed += miss;
        spurious += spur;
        for m in &matches {
            freq_error_sum += m.delta_freq_ghz.abs().to_f64_lossy();
            depth_error_sum += m.delta_depth_db.abs().to_f64_lossy();
            bandwidth_error_sum += m.delta_bandwidth_ghz.abs().to_f64_lossy();
        }
    }

    let n = testset.len();
    let mean = |sum: f64| (matched > 0).then(|| sum / matched as f64);
    Ok(EvalMetrics {
        samples: n,
        bit_accuracy: bit_accuracy_sum / n as f64,
        tile_accuracy: tiles_correct as f64 / (n * NUM_TILES) as f64,
        mean_abs_freq_error_ghz: mean(freq_error_sum),
        mean_abs_depth_error_db: mean(depth_error_sum),
        mean_abs_bandwidth_error_ghz: mean(bandwidth_error_sum),
        notch_count_match_rate: count_matches as f64 / n as f64,
        matched_notches: matched,
        missed_notches: missed,
        spurious_notches: spurious,
    })
}

/// Format magic of the manifest sitting next to a weights file.
pub const MANIFEST_FORMAT: &str = "MSNN-MANIFEST/1";

/// Sidecar metadata of a saved model: what it is, what it was trained on,
/// how, and how well it did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub format: String,
    pub variant: Variant,
    /// Simulator parameters of the training corpus, kept so later design and
    /// evaluation runs reproduce the physics the model was fitted against.
    pub surrogate_config: SurrogateConfig<f64>,
    /// Digest of the simulator configuration of the training corpus.
    pub dataset_digest: String,
    pub train_config: TrainConfig,
    pub final_train_loss: Option<f64>,
    pub final_train_accuracy: Option<f64>,
    pub final_eval_loss: Option<f64>,
    pub final_eval_accuracy: Option<f64>,
}

impl ModelManifest {
    /// Assembles a manifest from a finished training run.
    pub fn new(
        variant: Variant,
        surrogate_config: SurrogateConfig<f64>,
        dataset_digest: String,
        train_config: TrainConfig,
        history: &TrainHistory,
    ) -> Self {
        let last = history.last();
        ModelManifest {
            format: MANIFEST_FORMAT.to_owned(),
            variant,
            surrogate_config,
            dataset_digest,
            train_config,
            final_train_loss: last.map(|s| s.train_loss),
            final_train_accuracy: last.map(|s| s.train_accuracy),
            final_eval_loss: last.and_then(|s| s.eval_loss),
            final_eval_accuracy: last.and_then(|s| s.eval_accuracy),
        }
    }
}

/// The two file paths of a model bundle derived from one stem:
/// `<stem>.weights` and `<stem>.manifest.json`.
pub fn bundle_paths(stem: &Path) -> (PathBuf, PathBuf) {
    (
        stem.with_extension("weights"),
        stem.with_extension("manifest.json"),
    )
}

/// Saves a trained model and its manifest next to each other (see
/// [`bundle_paths`]).
pub fn save_bundle<T: Scalar>(
    stem: &Path,
    model: &MlpModel<T>,
    manifest: &ModelManifest,
) -> Result<()> {
    let (weights_path, manifest_path) = bundle_paths(stem);
    save_model(model, &weights_path)?;
    let mut writer = BufWriter::new(File::create(&manifest_path)?);
    serde_json::to_writer_pretty(&mut writer, manifest)
        .map_err(|e| Error::InvalidConfig(format!("manifest serialization: {e}")))?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

/// Loads a model bundle and verifies the weights fit the manifest's variant.
pub fn load_bundle<T: Scalar>(stem: &Path) -> Result<(MlpModel<T>, ModelManifest)> {
    let (weights_path, manifest_path) = bundle_paths(stem);
    let manifest: ModelManifest =
        serde_json::from_reader(BufReader::new(File::open(&manifest_path)?)).map_err(|e| {
            Error::Parse {
                line: e.line(),
                message: format!("manifest {}: {e}", manifest_path.display()),
            }
        })?;
    if manifest.format != MANIFEST_FORMAT {
        return Err(Error::FormatVersion {
            expected: MANIFEST_FORMAT,
            found: manifest.format,
        });
    }
    let model = load_model(&weights_path)?;
    if !matches_architecture(&model, manifest.variant) {
        return Err(Error::InvalidConfig(format!(
            "weights in {} do not have the {} architecture",
            weights_path.display(),
            manifest.variant
        )));
    }
    Ok((model, manifest))
}
