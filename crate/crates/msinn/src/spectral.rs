//! Notch extraction and the 24-element feature encoding.
//!
//! A *notch* is a contiguous dip of the reflection spectrum below the
//! -10 dB detection threshold, summarized by its center frequency, depth,
//! and the width between the two threshold crossings. Up to 8 notches
//! (ascending in frequency) are packed into a 24-element vector of
//! `(freq_norm, depth_norm, bw_norm)` triples in `[0, 1]`, zero-padded —
//! the input format of the inverse networks.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::surrogate::{Spectrum, FREQ_START_GHZ, FREQ_STEP_GHZ, FREQ_STOP_GHZ};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Reflection level below which a dip counts as a notch, dB.
pub const DETECTION_THRESHOLD_DB: f64 = -10.0;
/// Maximum number of notches the feature encoding can carry.
pub const MAX_NOTCHES: usize = 8;
/// Features per notch slot: frequency, depth, bandwidth.
pub const FEATURES_PER_NOTCH: usize = 3;
/// Total feature-vector length.
pub const FEATURE_LEN: usize = MAX_NOTCHES * FEATURES_PER_NOTCH;
/// Depth magnitude cap for normalization, dB.
pub const DEPTH_CAP_DB: f64 = 50.0;
/// Bandwidth cap for normalization, GHz.
pub const BANDWIDTH_CAP_GHZ: f64 = 5.0;
/// A feature slot is a live notch iff its depth entry exceeds this
/// (0.2 corresponds exactly to the -10 dB threshold).
pub const LIVE_SLOT_DEPTH_NORM: f64 = 0.2;

/// One reflection notch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Notch<T> {
    /// Center frequency, GHz, inside the modeled band.
    pub freq_ghz: T,
    /// Reflection at the center, dB (below the detection threshold).
    pub depth_db: T,
    /// Width between the threshold crossings, GHz.
    pub bandwidth_ghz: T,
}

impl<T: Scalar> Notch<T> {
    /// Builds a notch, validating the band, the detection threshold, and
    /// bandwidth positivity.
    pub fn new(freq_ghz: T, depth_db: T, bandwidth_ghz: T) -> Result<Self> {
        let f = freq_ghz.to_f64_lossy();
        if !(FREQ_START_GHZ..=FREQ_STOP_GHZ).contains(&f) {
            return Err(Error::FrequencyOutOfBand { freq_ghz: f });
        }
        if !(depth_db.is_finite() && depth_db.to_f64_lossy() < DETECTION_THRESHOLD_DB) {
            return Err(Error::InvalidConfig(format!(
                "notch depth must be below {DETECTION_THRESHOLD_DB} dB, got {depth_db}"
            )));
        }
        if !(bandwidth_ghz.is_finite() && bandwidth_ghz > T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "notch bandwidth must be positive, got {bandwidth_ghz}"
            )));
        }
        Ok(Notch {
            freq_ghz,
            depth_db,
            bandwidth_ghz,
        })
    }
}

impl<T: Scalar> fmt::Display for Notch<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:.2} GHz, {:.2} dB, {:.2} GHz wide",
            self.freq_ghz.to_f64_lossy(),
            self.depth_db.to_f64_lossy(),
            self.bandwidth_ghz.to_f64_lossy()
        )
    }
}

/// An ordered set of up to 8 notches (ascending frequency) — either a design
/// goal or the summary of an achieved spectrum.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DesignTarget<T> {
    notches: Vec<Notch<T>>,
}

impl<T: Scalar> DesignTarget<T> {
    /// A target with no notches.
    pub fn empty() -> Self {
        DesignTarget {
            notches: Vec::new(),
        }
    }

    /// Builds a target from notches, sorting by frequency and rejecting
    /// duplicates (equal frequencies) and more than 8 entries.
    pub fn new(mut notches: Vec<Notch<T>>) -> Result<Self> {
        if notches.len() > MAX_NOTCHES {
            return Err(Error::InvalidConfig(format!(
                "at most {MAX_NOTCHES} notches are supported, got {}",
                notches.len()
            )));
        }
        notches.sort_by(|a, b| {
            a.freq_ghz
                .partial_cmp(&b.freq_ghz)
                .expect("notch frequencies are finite")
        });
        if notches.windows(2).any(|p| p[0].freq_ghz == p[1].freq_ghz) {
            return Err(Error::InvalidConfig(
                "notch frequencies must be distinct".into(),
            ));
        }
        Ok(DesignTarget { notches })
    }

    /// Constructor for internal producers whose outputs are sorted but may
    /// not satisfy the strict `Notch` bounds (e.g. de-normalized network
    /// outputs with degenerate bandwidths).
    pub(crate) fn from_sorted_unchecked(notches: Vec<Notch<T>>) -> Self {
        DesignTarget { notches }
    }

    /// The notches in ascending frequency order.
    pub fn notches(&self) -> &[Notch<T>] {
        &self.notches
    }

    /// Number of notches.
    pub fn len(&self) -> usize {
        self.notches.len()
    }

    /// Whether the target has no notches.
    pub fn is_empty(&self) -> bool {
        self.notches.is_empty()
    }

    /// Parses the CLI text form: semicolon-separated notches, each
    /// `freq,depth,bw` (GHz, dB, GHz), e.g. `"17.5,-30,0.5;23.5,-20,0.5"`.
    /// An empty (or all-whitespace) string is the empty target.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(DesignTarget::empty());
        }
        let mut notches = Vec::new();
        for part in text.split(';') {
            let fields: Vec<&str> = part.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::InvalidConfig(format!(
                    "notch {part:?} must be freq,depth,bw"
                )));
            }
            let mut reals = [0.0f64; 3];
            for (slot, field) in reals.iter_mut().zip(&fields) {
                *slot = field.parse().map_err(|e| {
                    Error::InvalidConfig(format!("bad number {field:?} in target: {e}"))
                })?;
            }
            notches.push(Notch::new(
                T::from_f64_lossy(reals[0]),
                T::from_f64_lossy(reals[1]),
                T::from_f64_lossy(reals[2]),
            )?);
        }
        DesignTarget::new(notches)
    }
}

impl<T: Scalar> fmt::Display for DesignTarget<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.notches.is_empty() {
            return write!(f, "(no notches)");
        }
        for (i, notch) in self.notches.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{notch}")?;
        }
        Ok(())
    }
}

/// The 24-element normalized network input: 8 slots of
/// `(freq_norm, depth_norm, bw_norm)`, zero-padded after the last notch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector<T>([T; FEATURE_LEN]);

impl<T: Scalar> FeatureVector<T> {
    /// Wraps raw features, checking every entry is in `[0, 1]`.
    pub fn new(values: [T; FEATURE_LEN]) -> Result<Self> {
        if values.iter().any(|v| !(*v >= T::zero() && *v <= T::one())) {
            return Err(Error::InvalidConfig(
                "feature entries must lie in [0, 1]".into(),
            ));
        }
        Ok(FeatureVector(values))
    }

    /// Builds from a slice, checking length and range.
    pub fn from_slice(values: &[T]) -> Result<Self> {
        let arr: [T; FEATURE_LEN] = values.try_into().map_err(|_| Error::ShapeMismatch {
            context: "feature vector",
            expected: FEATURE_LEN,
            actual: values.len(),
        })?;
        FeatureVector::new(arr)
    }

    /// The features as a slice.
    pub fn as_slice(&self) -> &[T] {
        &self.0
    }
}

/// Finds the notches of a spectrum at the standard -10 dB threshold.
///
/// Maximal contiguous runs strictly below the threshold become notches:
/// frequency and depth come from the run's minimum sample (lowest index on
/// ties), bandwidth from the two linearly interpolated threshold crossings
/// bounding the run (runs touching a grid edge use the edge frequency).
/// When more than 8 runs exist, the 8 deepest are kept. The result is
/// sorted by frequency; a spectrum with no dips yields an empty target.
pub fn extract_notches<T: Scalar>(spectrum: &Spectrum<T>) -> DesignTarget<T> {
    extract_notches_at(spectrum, T::from_f64_lossy(DETECTION_THRESHOLD_DB))
        .expect("default threshold is valid")
}

/// [`extract_notches`] with an explicit threshold, which must be at or below
/// the standard -10 dB so the extracted notches satisfy their invariants.
pub fn extract_notches_at<T: Scalar>(
    spectrum: &Spectrum<T>,
    threshold_db: T,
) -> Result<DesignTarget<T>> {
    if !(threshold_db.is_finite() && threshold_db.to_f64_lossy() <= DETECTION_THRESHOLD_DB) {
        return Err(Error::InvalidConfig(format!(
            "extraction threshold must be <= {DETECTION_THRESHOLD_DB} dB, got {threshold_db}"
        )));
    }
    let values = spectrum.values();
    let step = T::from_f64_lossy(FREQ_STEP_GHZ);
    let mut notches: Vec<Notch<T>> = Vec::new();

    let mut i = 0;
    while i < values.len() {
        if values[i] >= threshold_db {
            i += 1;
            continue;
        }
        // Maximal run [start, end] below the threshold.
        let start = i;
        while i + 1 < values.len() && values[i + 1] < threshold_db {
            i += 1;
        }
        let end = i;
        i += 1;

        let mut min_idx = start;
        for j in start..=end {
            if values[j] < values[min_idx] {
                min_idx = j;
            }
        }

        let freq_at = |idx: usize| T::from_f64_lossy(Spectrum::<T>::frequency_ghz(idx));
        let left = if start == 0 {
            freq_at(0)
        } else {
            // values[start-1] >= threshold > values[start]
            let t = (threshold_db - values[start - 1]) / (values[start] - values[start - 1]);
            freq_at(start - 1) + t * step
        };
        let right = if end == values.len() - 1 {
            freq_at(end)
        } else {
            let t = (threshold_db - values[end]) / (values[end + 1] - values[end]);
            freq_at(end) + t * step
        };

        notches.push(Notch {
            freq_ghz: freq_at(min_idx),
            depth_db: values[min_idx],
            bandwidth_ghz: right - left,
        });
    }

    if notches.len() > MAX_NOTCHES {
        // Keep the 8 deepest (most negative depth), then restore frequency
        // order.
        notches.sort_by(|a, b| {
            a.depth_db
                .partial_cmp(&b.depth_db)
                .expect("spectrum values are finite")
        });
        notches.truncate(MAX_NOTCHES);
        notches.sort_by(|a, b| {
            a.freq_ghz
                .partial_cmp(&b.freq_ghz)
                .expect("grid frequencies are finite")
        });
    }
    Ok(DesignTarget::from_sorted_unchecked(notches))
}

/// Normalizes a target into the 24-element network input.
///
/// Slot `i` (ascending frequency) carries `((f - 4) / 41, min(-depth, 50) /
/// 50, min(bw, 5) / 5)`; unused slots stay zero.
pub fn target_to_vector<T: Scalar>(target: &DesignTarget<T>) -> Result<FeatureVector<T>> {
    let mut values = [T::zero(); FEATURE_LEN];
    for (slot, notch) in target.notches().iter().enumerate() {
        let f = notch.freq_ghz.to_f64_lossy();
        if !(FREQ_START_GHZ..=FREQ_STOP_GHZ).contains(&f) {
            return Err(Error::FrequencyOutOfBand { freq_ghz: f });
        }
        let span = T::from_f64_lossy(FREQ_STOP_GHZ - FREQ_START_GHZ);
        let depth_cap = T::from_f64_lossy(DEPTH_CAP_DB);
        let bw_cap = T::from_f64_lossy(BANDWIDTH_CAP_GHZ);
        values[slot * FEATURES_PER_NOTCH] =
            (notch.freq_ghz - T::from_f64_lossy(FREQ_START_GHZ)) / span;
        values[slot * FEATURES_PER_NOTCH + 1] = (-notch.depth_db).min(depth_cap) / depth_cap;
        values[slot * FEATURES_PER_NOTCH + 2] = notch.bandwidth_ghz.min(bw_cap) / bw_cap;
    }
    FeatureVector::new(values)
}

/// De-normalizes a feature vector back into a target.
///
/// A slot is a live notch iff its depth entry exceeds 0.2 (the image of the
/// -10 dB threshold); live slots are de-normalized and sorted by frequency.
/// Never fails: degenerate slots (e.g. zero bandwidth) are preserved as-is,
/// which matters when decoding raw network outputs.
pub fn vector_to_target<T: Scalar>(vector: &FeatureVector<T>) -> DesignTarget<T> {
    let live_cut = T::from_f64_lossy(LIVE_SLOT_DEPTH_NORM);
    let span = T::from_f64_lossy(FREQ_STOP_GHZ - FREQ_START_GHZ);
    let mut notches = Vec::new();
    for slot in 0..MAX_NOTCHES {
        let base = slot * FEATURES_PER_NOTCH;
        let depth_norm = vector.as_slice()[base + 1];
        if depth_norm <= live_cut {
            continue;
        }
        notches.push(Notch {
            freq_ghz: T::from_f64_lossy(FREQ_START_GHZ) + vector.as_slice()[base] * span,
            depth_db: -depth_norm * T::from_f64_lossy(DEPTH_CAP_DB),
            bandwidth_ghz: vector.as_slice()[base + 2] * T::from_f64_lossy(BANDWIDTH_CAP_GHZ),
        });
    }
    notches.sort_by(|a, b| {
        a.freq_ghz
            .partial_cmp(&b.freq_ghz)
            .expect("de-normalized frequencies are finite")
    });
    DesignTarget::from_sorted_unchecked(notches)
}
