//! Closed-form reflection model.
//!
//! Full-wave electromagnetic simulation is replaced by a deterministic
//! analytic stand-in: each of the 8 tile patterns owns one resonance center
//! `f_k`, and a unit cell containing `n_k` copies of pattern `k` reflects as
//! a sum of Lorentzian notches in dB,
//!
//! ```text
//! R(f) = sum_k depth(n_k) * g^2 / ((f - f_k)^2 + g^2)
//! depth(n) = -D * (1 - e^(-n/2))
//! ```
//!
//! with half-width `g` and depth ceiling `D`. The saturating depth makes a
//! single tile already produce a notch past the -10 dB detection threshold
//! (about -15.7 dB at the defaults) while 16 tiles approach -D. The model is
//! intentionally phenomenological: it exists to give the learning pipeline a
//! cheap, smooth, arrangement-invariant forward map with realistic notch
//! shapes, not to predict physical hardware.

use crate::codec::{UnitCellCodes, NUM_CODES};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::{self, Write};

/// First grid frequency in GHz.
pub const FREQ_START_GHZ: f64 = 4.0;
/// Last grid frequency in GHz.
pub const FREQ_STOP_GHZ: f64 = 45.0;
/// Grid spacing in GHz.
pub const FREQ_STEP_GHZ: f64 = 0.05;
/// Number of grid points: round((45 - 4) / 0.05) + 1.
pub const GRID_POINTS: usize = 821;

/// Parameters of the analytic reflection model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig<T> {
    /// Resonance center of each pattern code, GHz, strictly increasing.
    pub centers_ghz: [T; NUM_CODES],
    /// Lorentzian half-width at half-depth, GHz.
    pub halfwidth_ghz: T,
    /// Depth ceiling `D` (positive; notches approach `-D` dB).
    pub max_depth_db: T,
}

impl<T: Scalar> Default for SurrogateConfig<T> {
    fn default() -> Self {
        let centers = [6.0, 11.0, 16.0, 21.0, 26.0, 31.0, 36.0, 41.0];
        SurrogateConfig {
            centers_ghz: centers.map(T::from_f64_lossy),
            halfwidth_ghz: T::from_f64_lossy(0.4),
            max_depth_db: T::from_f64_lossy(40.0),
        }
    }
}

impl<T: Scalar> SurrogateConfig<T> {
    /// Checks center ordering and parameter positivity.
    pub fn validate(&self) -> Result<()> {
        let inside = self.centers_ghz.iter().all(|c| {
            let c = c.to_f64_lossy();
            c > FREQ_START_GHZ && c < FREQ_STOP_GHZ
        });
        if !inside {
            return Err(Error::InvalidConfig(
                "surrogate centers must lie strictly inside (4, 45) GHz".into(),
            ));
        }
        if !self.centers_ghz.windows(2).all(|pair| pair[0] < pair[1]) {
            return Err(Error::InvalidConfig(
                "surrogate centers must be strictly increasing".into(),
            ));
        }
        if !(self.halfwidth_ghz > T::zero() && self.max_depth_db > T::zero()) {
            return Err(Error::InvalidConfig(
                "surrogate halfwidth and max depth must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Notch depth in dB contributed by `count` tiles of one pattern:
    /// `-D * (1 - e^(-count/2))`. Zero tiles contribute nothing.
    pub fn depth_db(&self, count: usize) -> T {
        let half_count = T::from_f64_lossy(count as f64 / 2.0);
        -self.max_depth_db * (T::one() - (-half_count).exp())
    }

    /// Canonical one-line text form; the digest is computed over this.
    pub fn canonical_string(&self) -> String {
        let centers: Vec<String> = self
            .centers_ghz
            .iter()
            .map(|c| format!("{:.16e}", c.to_f64_lossy()))
            .collect();
        format!(
            "centers_ghz=[{}];halfwidth_ghz={:.16e};max_depth_db={:.16e}",
            centers.join(","),
            self.halfwidth_ghz.to_f64_lossy(),
            self.max_depth_db.to_f64_lossy()
        )
    }

    /// SHA-256 hex digest of [`SurrogateConfig::canonical_string`]; datasets
    /// carry it so a loader can detect config drift.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical_string().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Reflection magnitude in dB sampled on the fixed 4-45 GHz grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Spectrum<T> {
    values: Vec<T>,
}

impl<T: Scalar> Spectrum<T> {
    /// Wraps raw samples, checking length, finiteness, and non-positivity.
    pub fn from_values(values: Vec<T>) -> Result<Self> {
        if values.len() != GRID_POINTS {
            return Err(Error::ShapeMismatch {
                context: "spectrum samples",
                expected: GRID_POINTS,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite() || *v > T::zero()) {
            return Err(Error::InvalidConfig(
                "spectrum values must be finite and <= 0 dB".into(),
            ));
        }
        Ok(Spectrum { values })
    }

    /// Reflection samples in grid order.
    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Frequency of grid index `i` in GHz (`4.0 + 0.05 * i`).
    pub fn frequency_ghz(index: usize) -> f64 {
        FREQ_START_GHZ + FREQ_STEP_GHZ * index as f64
    }

    /// The grid frequencies in order.
    pub fn grid() -> impl Iterator<Item = f64> {
        (0..GRID_POINTS).map(Self::frequency_ghz)
    }

    /// Index and value of the deepest sample (lowest index on ties).
    pub fn min_point(&self) -> (usize, T) {
        let mut best = (0, self.values[0]);
        for (i, &v) in self.values.iter().enumerate() {
            if v < best.1 {
                best = (i, v);
            }
        }
        best
    }

    /// Two-column CSV export: `frequency_ghz,reflection_db` header, then one
    /// row per grid point with 17-significant-digit reals.
    pub fn write_csv<W: Write>(&self, writer: &mut W) -> io::Result<()> {
        writeln!(writer, "frequency_ghz,reflection_db")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(
                writer,
                "{:.16e},{:.16e}",
                Self::frequency_ghz(i),
                v.to_f64_lossy()
            )?;
        }
        Ok(())
    }
}

/// Histogram of tile codes: `n[k]` = occurrences of code `k` in the cell.
/// Always sums to 16.
pub fn tile_counts(cell: &UnitCellCodes) -> [usize; NUM_CODES] {
    let mut counts = [0usize; NUM_CODES];
    for &code in cell.codes() {
        counts[usize::from(code)] += 1;
    }
    counts
}

/// Evaluates the reflection model for one cell on the fixed grid.
///
/// Depends on the cell only through [`tile_counts`]; tile arrangement never
/// changes the spectrum.
pub fn simulate<T: Scalar>(cell: &UnitCellCodes, cfg: &SurrogateConfig<T>) -> Spectrum<T> {
    let counts = tile_counts(cell);
    let depths: Vec<T> = counts.iter().map(|&n| cfg.depth_db(n)).collect();
    let g2 = cfg.halfwidth_ghz * cfg.halfwidth_ghz;
    let values = (0..GRID_POINTS)
        .map(|i| {
            let f = T::from_f64_lossy(Spectrum::<T>::frequency_ghz(i));
            let mut acc = T::zero();
            for (k, &depth) in depths.iter().enumerate() {
                if counts[k] == 0 {
                    continue;
                }
                let df = f - cfg.centers_ghz[k];
                acc += depth * g2 / (df * df + g2);
            }
            // Guard against rounding pushing a sum of non-positive terms
            // above zero.
            acc.min(T::zero())
        })
        .collect();
    Spectrum { values }
}

/// Closed-form prediction of one pattern's notch in a given cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NotchPrediction<T> {
    /// Notch center: the pattern's resonance frequency.
    pub freq_ghz: T,
    /// Reflection at the center, including neighbor-tail contributions.
    pub depth_db: T,
    /// Width between the two -10 dB crossings, `None` when the notch never
    /// reaches -10 dB.
    pub bandwidth_ghz: Option<T>,
}

/// Predicts the notch of pattern `code` in `cell` analytically.
///
/// Valid only when the pattern is present and its notch is effectively
/// isolated: the tails of all other patterns must contribute less than
/// 0.5 dB at its center. This is the oracle the feature-extraction tests
/// compare against; with the default configuration (centers 5 GHz apart)
/// every cell satisfies the isolation condition.
///
/// The depth at the center is `depth(n_k)` plus the neighbor tails; the
/// -10 dB bandwidth solves `depth * g^2 / (x^2 + g^2) = -10` for the
/// single-Lorentzian shape: `2g * sqrt(depth / -10 - 1)`.
pub fn analytic_notch<T: Scalar>(
    cell: &UnitCellCodes,
    code: u8,
    cfg: &SurrogateConfig<T>,
) -> Result<NotchPrediction<T>> {
    if usize::from(code) >= NUM_CODES {
        return Err(Error::InvalidCode { code });
    }
    let counts = tile_counts(cell);
    let k = usize::from(code);
    if counts[k] == 0 {
        return Err(Error::NonIsolatedNotch { code });
    }
    let g = cfg.halfwidth_ghz;
    let g2 = g * g;
    let f_k = cfg.centers_ghz[k];
    let mut tail = T::zero();
    for (j, &n_j) in counts.iter().enumerate() {
        if j == k || n_j == 0 {
            continue;
        }
        let df = f_k - cfg.centers_ghz[j];
        tail += cfg.depth_db(n_j) * g2 / (df * df + g2);
    }
    if tail.abs() >= T::from_f64_lossy(0.5) {
        return Err(Error::NonIsolatedNotch { code });
    }
    let depth = cfg.depth_db(counts[k]) + tail;
    let threshold = T::from_f64_lossy(-10.0);
    let bandwidth = if depth < threshold {
        Some(T::from_f64_lossy(2.0) * g * (depth / threshold - T::one()).sqrt())
    } else {
        None
    };
    Ok(NotchPrediction {
        freq_ghz: f_k,
        depth_db: depth,
        bandwidth_ghz: bandwidth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cell_of(codes: [u8; 16]) -> UnitCellCodes {
        UnitCellCodes::new(codes).unwrap()
    }

    fn random_cell<R: Rng>(rng: &mut R) -> UnitCellCodes {
        let mut codes = [0u8; 16];
        for c in codes.iter_mut() {
            *c = rng.random_range(0..8);
        }
        cell_of(codes)
    }

    #[test]
    fn tile_counts_histogram() {
        assert_eq!(tile_counts(&cell_of([3; 16])), [0, 0, 0, 16, 0, 0, 0, 0]);
        let codes = [0, 1, 2, 3, 4, 5, 6, 7, 0, 1, 2, 3, 4, 5, 6, 7];
        assert_eq!(tile_counts(&cell_of(codes)), [2; 8]);
    }

    #[test]
    fn tile_counts_conserve_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10_000 {
            let counts = tile_counts(&random_cell(&mut rng));
            assert_eq!(counts.iter().sum::<usize>(), 16);
        }
    }

    #[test]
    fn grid_has_exact_endpoints_and_count() {
        assert_eq!(GRID_POINTS, ((45.0 - 4.0) / 0.05f64).round() as usize + 1);
        assert_eq!(Spectrum::<f64>::frequency_ghz(0), 4.0);
        let last = Spectrum::<f64>::frequency_ghz(GRID_POINTS - 1);
        assert!((last - 45.0).abs() < 1e-9);
        // 16 GHz (a default center) is exactly on the grid at index 240.
        assert_eq!(Spectrum::<f64>::frequency_ghz(240), 16.0);
    }

    #[test]
    fn uniform_cell_minimum_matches_closed_form() {
        let cfg = SurrogateConfig::<f64>::default();
        let spectrum = simulate(&cell_of([2; 16]), &cfg);
        let (idx, depth) = spectrum.min_point();
        assert_eq!(Spectrum::<f64>::frequency_ghz(idx), 16.0);
        // depth(16) = -40 (1 - e^-8), plus sub-0.02 dB neighbor-free tails.
        let expected = -40.0 * (1.0 - (-8.0f64).exp());
        assert!(
            (depth - expected).abs() < 1e-3,
            "depth {depth} vs {expected}"
        );
    }

    #[test]
    fn far_tails_stay_below_one_db() {
        // At 45 GHz every default center is >= 4 GHz away; the summed
        // Lorentzian tails stay under 1 dB even at full depth everywhere.
        let cfg = SurrogateConfig::<f64>::default();
        let codes = [0, 1, 2, 3, 4, 5, 6, 7, 0, 1, 2, 3, 4, 5, 6, 7];
        let spectrum = simulate(&cell_of(codes), &cfg);
        assert!(spectrum.values()[GRID_POINTS - 1].abs() < 1.0);
        let deep = simulate(&cell_of([7; 16]), &cfg);
        assert!(deep.values()[GRID_POINTS - 1].abs() < 1.0);
    }

    #[test]
    fn spectrum_depends_only_on_tile_counts() {
        let cfg = SurrogateConfig::<f64>::default();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let cell = random_cell(&mut rng);
            let mut shuffled = *cell.codes();
            shuffled.shuffle(&mut rng);
            let permuted = cell_of(shuffled);
            assert_eq!(
                simulate(&cell, &cfg).values(),
                simulate(&permuted, &cfg).values()
            );
        }
    }

    #[test]
    fn more_tiles_deepen_the_notch() {
        let cfg = SurrogateConfig::<f64>::default();
        let mut prev = 0.0;
        for n in 1..=16usize {
            let mut codes = [0u8; 16]; // code 0 as filler
            for c in codes.iter_mut().take(n) {
                *c = 4;
            }
            let spectrum = simulate(&cell_of(codes), &cfg);
            let at_center = spectrum.values()[((26.0f64 - 4.0) / 0.05).round() as usize];
            assert!(at_center < prev, "n = {n}: {at_center} !< {prev}");
            prev = at_center;
        }
    }

    #[test]
    fn spectrum_is_superposition_of_per_pattern_terms() {
        let cfg = SurrogateConfig::<f64>::default();
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let cell = random_cell(&mut rng);
        let counts = tile_counts(&cell);
        let g2 = cfg.halfwidth_ghz * cfg.halfwidth_ghz;
        let spectrum = simulate(&cell, &cfg);
        for (i, &v) in spectrum.values().iter().enumerate().step_by(50) {
            let f = Spectrum::<f64>::frequency_ghz(i);
            let mut acc = 0.0;
            for (&count, &center) in counts.iter().zip(&cfg.centers_ghz) {
                if count == 0 {
                    continue;
                }
                let df = f - center;
                acc += cfg.depth_db(count) * g2 / (df * df + g2);
            }
            assert!((v - acc.min(0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn depth_shape_reference_values() {
        // depth(n) = -40 (1 - e^(-n/2)): n=2 -> -40 (1 - e^-1), n=16 ~ -40.
        let cfg = SurrogateConfig::<f64>::default();
        assert_eq!(cfg.depth_db(0), 0.0);
        assert!((cfg.depth_db(2) - (-25.284_822_353_142_307)).abs() < 1e-10);
        assert!((cfg.depth_db(16) - (-39.986_581_494_883_9)).abs() < 1e-10);
    }

    #[test]
    fn analytic_notch_matches_reference_bandwidth() {
        let cfg = SurrogateConfig::<f64>::default();
        let p = analytic_notch(&cell_of([2; 16]), 2, &cfg).unwrap();
        assert_eq!(p.freq_ghz, 16.0);
        let bw = p.bandwidth_ghz.unwrap();
        assert!((bw - 1.385).abs() < 1e-3, "bandwidth {bw}");
    }

    #[test]
    fn analytic_notch_rejects_absent_pattern() {
        let cfg = SurrogateConfig::<f64>::default();
        let err = analytic_notch(&cell_of([2; 16]), 5, &cfg).unwrap_err();
        assert!(matches!(err, Error::NonIsolatedNotch { code: 5 }));
    }

    #[test]
    fn analytic_notch_flags_crowded_centers() {
        // Shrink the spacing until tails at a center exceed 0.5 dB.
        let cfg = SurrogateConfig::<f64> {
            centers_ghz: [6.0, 6.5, 7.0, 7.5, 8.0, 8.5, 9.0, 9.5],
            ..SurrogateConfig::default()
        };
        let codes = [0, 1, 2, 3, 4, 5, 6, 7, 0, 1, 2, 3, 4, 5, 6, 7];
        let err = analytic_notch(&cell_of(codes), 1, &cfg).unwrap_err();
        assert!(matches!(err, Error::NonIsolatedNotch { .. }));
    }

    #[test]
    fn shallow_notch_has_no_bandwidth() {
        // One tile of a pattern with a tiny depth ceiling stays above -10 dB.
        let cfg = SurrogateConfig::<f64> {
            max_depth_db: 5.0,
            ..SurrogateConfig::default()
        };
        let mut codes = [0u8; 16];
        codes[0] = 3;
        let p = analytic_notch(&cell_of(codes), 3, &cfg).unwrap();
        assert!(p.bandwidth_ghz.is_none());
    }

    #[test]
    fn config_digest_tracks_values() {
        let a = SurrogateConfig::<f64>::default();
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        b.halfwidth_ghz = 0.5;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = SurrogateConfig::<f64>::default();
        cfg.centers_ghz[0] = 3.0; // outside (4, 45)
        assert!(cfg.validate().is_err());

        let mut cfg = SurrogateConfig::<f64>::default();
        cfg.centers_ghz[3] = cfg.centers_ghz[2]; // not strictly increasing
        assert!(cfg.validate().is_err());

        let cfg = SurrogateConfig::<f64> {
            halfwidth_ghz: 0.0,
            ..SurrogateConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn csv_export_lists_all_grid_rows() {
        let cfg = SurrogateConfig::<f64>::default();
        let spectrum = simulate(&cell_of([0; 16]), &cfg);
        let mut buf = Vec::new();
        spectrum.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("frequency_ghz,reflection_db"));
        assert_eq!(lines.count(), GRID_POINTS);
        assert!(text.contains("4.0000000000000000e0,"));
    }
}
