//! Tile patterns and structure encodings.
//!
//! A unit cell is a 4×4 grid of tiles, each tile one of 8 canonical 8×8
//! binary bitmaps (1 = copper). The bitmaps are concentric square rings
//! built from the border-band index `b(i,j) = min(i, j, 7-i, 7-j)`, which
//! splits the 8×8 grid into four one-pixel-wide square bands (b = 0 is the
//! outermost ring, b = 3 the central 2×2). Each code lights a fixed set of
//! bands:
//!
//! | code | bands  | ones |
//! |------|--------|------|
//! | 0    | {0}    | 28   |
//! | 1    | {0,1}  | 48   |
//! | 2    | {1}    | 20   |
//! | 3    | {1,2}  | 32   |
//! | 4    | {2}    | 12   |
//! | 5    | {2,3}  | 16   |
//! | 6    | {3}    | 4    |
//! | 7    | {0,2}  | 40   |
//!
//! Codes also exist in a bit form: each code 0..7 is three bits, MSB first,
//! so a 16-tile cell is a 48-bit vector. Continuous network outputs are
//! legalized either by thresholding those 48 bits or, for raw 1024-pixel
//! outputs, by snapping each 8×8 block to the nearest canonical bitmap in
//! Hamming distance.
//!
//! User-facing text displays codes as 1..8 (`code + 1`); everything internal
//! is 0-based to line up with the 3-bit strings.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

/// Tile edge length in pixels.
pub const TILE_SIZE: usize = 8;
/// Tiles per unit-cell edge.
pub const GRID_TILES: usize = 4;
/// Unit-cell edge length in pixels.
pub const MASK_SIZE: usize = GRID_TILES * TILE_SIZE;
/// Number of canonical tile patterns.
pub const NUM_CODES: usize = 8;
/// Bits per tile code.
pub const CODE_BITS: usize = 3;
/// Tiles per unit cell.
pub const NUM_TILES: usize = GRID_TILES * GRID_TILES;
/// Length of the bit encoding of a cell (16 tiles × 3 bits).
pub const CODE_VECTOR_LEN: usize = NUM_TILES * CODE_BITS;
/// Length of the flattened pixel form of a cell (32 × 32).
pub const PIXEL_VECTOR_LEN: usize = MASK_SIZE * MASK_SIZE;

/// One 8×8 tile bitmap; entries are 0 or 1.
pub type TileBitmap = [[u8; TILE_SIZE]; TILE_SIZE];

/// Which border bands each code lights, indexed `[code][band]`.
const CODE_BANDS: [[bool; 4]; NUM_CODES] = [
    [true, false, false, false], // 0: outermost ring
    [true, true, false, false],  // 1
    [false, true, false, false], // 2
    [false, true, true, false],  // 3
    [false, false, true, false], // 4
    [false, false, true, true],  // 5
    [false, false, false, true], // 6: central 2x2
    [true, false, true, false],  // 7: two separated rings
];

fn band(i: usize, j: usize) -> usize {
    i.min(j).min(TILE_SIZE - 1 - i).min(TILE_SIZE - 1 - j)
}

fn bitmap_unchecked(code: u8) -> TileBitmap {
    let bands = CODE_BANDS[code as usize];
    let mut bitmap = [[0u8; TILE_SIZE]; TILE_SIZE];
    for (i, row) in bitmap.iter_mut().enumerate() {
        for (j, px) in row.iter_mut().enumerate() {
            *px = u8::from(bands[band(i, j)]);
        }
    }
    bitmap
}

/// The canonical bitmap of one tile code.
pub fn pattern_bitmap(code: u8) -> Result<TileBitmap> {
    if usize::from(code) >= NUM_CODES {
        return Err(Error::InvalidCode { code });
    }
    Ok(bitmap_unchecked(code))
}

/// Number of copper pixels in a pattern.
pub fn pattern_ones(code: u8) -> Result<usize> {
    let bitmap = pattern_bitmap(code)?;
    Ok(bitmap.iter().flatten().map(|&v| usize::from(v)).sum())
}

/// The 16 tile codes of one unit cell, row-major over the 4×4 tile grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitCellCodes([u8; NUM_TILES]);

impl UnitCellCodes {
    /// Wraps a code array, checking every entry is in `0..=7`.
    pub fn new(codes: [u8; NUM_TILES]) -> Result<Self> {
        if let Some(&bad) = codes.iter().find(|&&c| usize::from(c) >= NUM_CODES) {
            return Err(Error::InvalidCode { code: bad });
        }
        Ok(UnitCellCodes(codes))
    }

    /// Builds from a slice, checking length and range.
    pub fn from_slice(codes: &[u8]) -> Result<Self> {
        let arr: [u8; NUM_TILES] = codes.try_into().map_err(|_| Error::ShapeMismatch {
            context: "unit cell codes",
            expected: NUM_TILES,
            actual: codes.len(),
        })?;
        UnitCellCodes::new(arr)
    }

    /// The tile codes in row-major order.
    pub fn codes(&self) -> &[u8; NUM_TILES] {
        &self.0
    }

    /// The same multiset of codes, sorted ascending (the canonical
    /// arrangement used for dataset labels).
    pub fn sorted(&self) -> Self {
        let mut codes = self.0;
        codes.sort_unstable();
        UnitCellCodes(codes)
    }
}

/// A 32×32 binary copper layout; `1` = copper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PixelMask([[u8; MASK_SIZE]; MASK_SIZE]);

impl PixelMask {
    /// All-zero mask.
    pub fn zeros() -> Self {
        PixelMask([[0; MASK_SIZE]; MASK_SIZE])
    }

    /// The raw 32×32 bit matrix.
    pub fn bits(&self) -> &[[u8; MASK_SIZE]; MASK_SIZE] {
        &self.0
    }

    /// One pixel.
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.0[row][col]
    }

    /// Number of copper pixels.
    pub fn ones(&self) -> usize {
        self.0.iter().flatten().map(|&v| usize::from(v)).sum()
    }

    /// Writes the mask as a plain-text portable bitmap (P1), one row per
    /// line, with the geometry constants as `#` comment lines.
    pub fn write_pbm<W: Write>(&self, writer: &mut W, meta: &GeometryMetadata) -> io::Result<()> {
        writeln!(writer, "P1")?;
        for line in meta.comment_lines() {
            writeln!(writer, "# {line}")?;
        }
        writeln!(writer, "{MASK_SIZE} {MASK_SIZE}")?;
        for row in &self.0 {
            let text: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(writer, "{}", text.join(" "))?;
        }
        Ok(())
    }

    /// Writes the mask as CSV rows of 0/1, with the geometry constants as
    /// `#` comment lines.
    pub fn write_csv<W: Write>(&self, writer: &mut W, meta: &GeometryMetadata) -> io::Result<()> {
        for line in meta.comment_lines() {
            writeln!(writer, "# {line}")?;
        }
        for row in &self.0 {
            let text: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(writer, "{}", text.join(","))?;
        }
        Ok(())
    }
}

/// Physical constants of the printed structure. Exported alongside masks for
/// downstream fabrication/simulation tools; nothing in this crate computes
/// with them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryMetadata {
    pub lattice_length_mm: f64,
    pub period_mm: f64,
    pub copper_thickness_mm: f64,
    pub substrate_height_mm: f64,
    /// Relative permittivity, real and imaginary part.
    pub substrate_permittivity: (f64, f64),
}

impl Default for GeometryMetadata {
    fn default() -> Self {
        GeometryMetadata {
            lattice_length_mm: 0.2,
            period_mm: 6.4,
            copper_thickness_mm: 0.018,
            substrate_height_mm: 1.5,
            substrate_permittivity: (4.2, 0.025),
        }
    }
}

impl GeometryMetadata {
    /// Key/value lines embedded as comments in mask exports.
    pub fn comment_lines(&self) -> Vec<String> {
        vec![
            format!("lattice_length_mm {}", self.lattice_length_mm),
            format!("period_mm {}", self.period_mm),
            format!("copper_thickness_mm {}", self.copper_thickness_mm),
            format!("substrate_height_mm {}", self.substrate_height_mm),
            format!(
                "substrate_permittivity {}+{}i",
                self.substrate_permittivity.0, self.substrate_permittivity.1
            ),
        ]
    }
}

/// Expands a cell into its 48-bit form: each code as 3 bits, MSB first,
/// tiles in row-major order.
pub fn encode_codes(cell: &UnitCellCodes) -> [u8; CODE_VECTOR_LEN] {
    let mut bits = [0u8; CODE_VECTOR_LEN];
    for (t, &code) in cell.codes().iter().enumerate() {
        bits[t * CODE_BITS] = (code >> 2) & 1;
        bits[t * CODE_BITS + 1] = (code >> 1) & 1;
        bits[t * CODE_BITS + 2] = code & 1;
    }
    bits
}

/// Thresholds 48 real-valued bits at 0.5 (ties round to 1) and reads each
/// 3-bit group MSB-first into a tile code. Every bit combination is a legal
/// code, so decoding is total.
pub fn decode_bits<T: Scalar>(bits: &[T]) -> Result<UnitCellCodes> {
    if bits.len() != CODE_VECTOR_LEN {
        return Err(Error::ShapeMismatch {
            context: "code bit vector",
            expected: CODE_VECTOR_LEN,
            actual: bits.len(),
        });
    }
    let half = T::from_f64_lossy(0.5);
    let mut codes = [0u8; NUM_TILES];
    for (t, code) in codes.iter_mut().enumerate() {
        let mut value = 0u8;
        for b in 0..CODE_BITS {
            value <<= 1;
            if bits[t * CODE_BITS + b] >= half {
                value |= 1;
            }
        }
        *code = value;
    }
    Ok(UnitCellCodes(codes))
}

/// Composes the 4×4 tiling into a 32×32 pixel mask. Tile `(r, c)` occupies
/// pixel rows `8r..8r+8` and columns `8c..8c+8`.
pub fn assemble_unit_cell(cell: &UnitCellCodes) -> PixelMask {
    let mut mask = PixelMask::zeros();
    for (t, &code) in cell.codes().iter().enumerate() {
        let bitmap = bitmap_unchecked(code);
        let (r0, c0) = (t / GRID_TILES * TILE_SIZE, t % GRID_TILES * TILE_SIZE);
        for (row, bitmap_row) in bitmap.iter().enumerate() {
            mask.0[r0 + row][c0..c0 + TILE_SIZE].copy_from_slice(bitmap_row);
        }
    }
    mask
}

/// Row-major flattening of a mask into 1024 bits.
pub fn flatten_mask(mask: &PixelMask) -> Vec<u8> {
    mask.0.iter().flatten().copied().collect()
}

/// Inverse of [`flatten_mask`].
pub fn unflatten_mask(bits: &[u8]) -> Result<PixelMask> {
    if bits.len() != PIXEL_VECTOR_LEN {
        return Err(Error::ShapeMismatch {
            context: "flattened mask",
            expected: PIXEL_VECTOR_LEN,
            actual: bits.len(),
        });
    }
    let mut mask = PixelMask::zeros();
    for (idx, &bit) in bits.iter().enumerate() {
        if bit > 1 {
            return Err(Error::InvalidConfig(format!(
                "mask bit at index {idx} is {bit}, expected 0 or 1"
            )));
        }
        mask.0[idx / MASK_SIZE][idx % MASK_SIZE] = bit;
    }
    Ok(mask)
}

/// Legalizes a raw 1024-pixel output: threshold at 0.5 (ties to 1), then
/// snap each 8×8 block to the canonical pattern at minimal Hamming distance
/// (ties broken by lowest code).
pub fn project_pixels_to_tiles<T: Scalar>(raw: &[T]) -> Result<UnitCellCodes> {
    if raw.len() != PIXEL_VECTOR_LEN {
        return Err(Error::ShapeMismatch {
            context: "raw pixel vector",
            expected: PIXEL_VECTOR_LEN,
            actual: raw.len(),
        });
    }
    let half = T::from_f64_lossy(0.5);
    let mut codes = [0u8; NUM_TILES];
    for (t, out) in codes.iter_mut().enumerate() {
        let (r0, c0) = (t / GRID_TILES * TILE_SIZE, t % GRID_TILES * TILE_SIZE);
        let mut best_code = 0u8;
        let mut best_distance = usize::MAX;
        for code in 0..NUM_CODES as u8 {
            let bitmap = bitmap_unchecked(code);
            let mut distance = 0usize;
            for i in 0..TILE_SIZE {
                for j in 0..TILE_SIZE {
                    let pixel = u8::from(raw[(r0 + i) * MASK_SIZE + c0 + j] >= half);
                    distance += usize::from(pixel != bitmap[i][j]);
                }
            }
            if distance < best_distance {
                best_distance = distance;
                best_code = code;
            }
        }
        *out = best_code;
    }
    Ok(UnitCellCodes(codes))
}

#[cfg(test)]
// Index pairs (i, j) mirror the bitmap geometry under test.
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cell<R: Rng>(rng: &mut R) -> UnitCellCodes {
        let mut codes = [0u8; NUM_TILES];
        for c in codes.iter_mut() {
            *c = rng.random_range(0..NUM_CODES as u8);
        }
        UnitCellCodes::new(codes).unwrap()
    }

    #[test]
    fn pattern_ones_match_band_geometry() {
        // Band populations: 28, 20, 12, 4 pixels from outermost inward.
        let expected = [28, 48, 20, 32, 12, 16, 4, 40];
        for (code, &ones) in expected.iter().enumerate() {
            assert_eq!(pattern_ones(code as u8).unwrap(), ones, "code {code}");
        }
    }

    #[test]
    fn patterns_are_pairwise_distinct() {
        for a in 0..NUM_CODES as u8 {
            for b in (a + 1)..NUM_CODES as u8 {
                assert_ne!(pattern_bitmap(a).unwrap(), pattern_bitmap(b).unwrap());
            }
        }
    }

    #[test]
    fn patterns_have_fourfold_rotational_symmetry() {
        for code in 0..NUM_CODES as u8 {
            let bm = pattern_bitmap(code).unwrap();
            for i in 0..TILE_SIZE {
                for j in 0..TILE_SIZE {
                    // 90-degree rotation: (i, j) -> (j, 7 - i).
                    assert_eq!(bm[i][j], bm[j][TILE_SIZE - 1 - i], "code {code}");
                }
            }
        }
    }

    #[test]
    fn out_of_range_code_is_rejected() {
        assert!(pattern_bitmap(8).is_err());
        assert!(UnitCellCodes::new([8; 16]).is_err());
        assert!(UnitCellCodes::from_slice(&[0; 15]).is_err());
    }

    #[test]
    fn encoding_is_msb_first_three_bits_per_tile() {
        let zero = UnitCellCodes::new([0; 16]).unwrap();
        assert_eq!(encode_codes(&zero), [0u8; 48]);

        let mut codes = [0u8; 16];
        codes[0] = 5;
        let cell = UnitCellCodes::new(codes).unwrap();
        let bits = encode_codes(&cell);
        assert_eq!(&bits[..6], &[1, 0, 1, 0, 0, 0]);
    }

    #[test]
    fn decoding_thresholds_at_half_with_ties_up() {
        let bits = vec![0.49f64; 48];
        assert_eq!(
            decode_bits(&bits).unwrap(),
            UnitCellCodes::new([0; 16]).unwrap()
        );

        // First group [0.6, 0.4, 0.7] -> 101 -> code 5; exact 0.5 -> 1.
        let mut bits = vec![0.0f64; 48];
        bits[0] = 0.6;
        bits[1] = 0.4;
        bits[2] = 0.7;
        bits[3] = 0.5;
        let decoded = decode_bits(&bits).unwrap();
        assert_eq!(decoded.codes()[0], 5);
        assert_eq!(decoded.codes()[1], 4); // [0.5, 0, 0] -> 100
    }

    #[test]
    fn decode_rejects_wrong_length() {
        assert!(decode_bits(&vec![0.0f64; 47]).is_err());
    }

    #[test]
    fn exhaustive_two_tile_round_trip() {
        for a in 0..NUM_CODES as u8 {
            for b in 0..NUM_CODES as u8 {
                let mut codes = [0u8; 16];
                codes[0] = a;
                codes[1] = b;
                let cell = UnitCellCodes::new(codes).unwrap();
                let bits: Vec<f64> = encode_codes(&cell).iter().map(|&v| f64::from(v)).collect();
                assert_eq!(decode_bits(&bits).unwrap(), cell);
            }
        }
    }

    #[test]
    fn assemble_places_blocks_and_preserves_ones() {
        let cell = UnitCellCodes::new([6; 16]).unwrap();
        assert_eq!(assemble_unit_cell(&cell).ones(), 16 * 4);

        let mut codes = [3u8; 16];
        codes[0] = 7;
        let cell = UnitCellCodes::new(codes).unwrap();
        let mask = assemble_unit_cell(&cell);
        let bm = pattern_bitmap(7).unwrap();
        for i in 0..TILE_SIZE {
            for j in 0..TILE_SIZE {
                assert_eq!(mask.get(i, j), bm[i][j]);
            }
        }
        let total: usize = cell.codes().iter().map(|&c| pattern_ones(c).unwrap()).sum();
        assert_eq!(mask.ones(), total);
    }

    #[test]
    fn assemble_is_injective_on_single_differing_tile() {
        // Distinct bitmaps guarantee distinct masks; check all ordered pairs.
        for a in 0..NUM_CODES as u8 {
            for b in 0..NUM_CODES as u8 {
                if a == b {
                    continue;
                }
                let mut codes_a = [0u8; 16];
                let mut codes_b = [0u8; 16];
                codes_a[5] = a;
                codes_b[5] = b;
                let mask_a = assemble_unit_cell(&UnitCellCodes::new(codes_a).unwrap());
                let mask_b = assemble_unit_cell(&UnitCellCodes::new(codes_b).unwrap());
                assert_ne!(mask_a, mask_b);
            }
        }
    }

    #[test]
    fn flatten_is_row_major_and_invertible() {
        assert_eq!(flatten_mask(&PixelMask::zeros()), vec![0u8; 1024]);

        let mut mask = PixelMask::zeros();
        mask.0[2][5] = 1;
        let flat = flatten_mask(&mask);
        assert_eq!(flat.iter().position(|&b| b == 1), Some(69));

        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let mask = assemble_unit_cell(&random_cell(&mut rng));
            assert_eq!(unflatten_mask(&flatten_mask(&mask)).unwrap(), mask);
        }
    }

    #[test]
    fn unflatten_rejects_bad_input() {
        assert!(unflatten_mask(&vec![0u8; 1023]).is_err());
        let mut bits = vec![0u8; 1024];
        bits[3] = 2;
        assert!(unflatten_mask(&bits).is_err());
    }

    #[test]
    fn projection_fixes_exact_masks_and_snaps_empty_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..200 {
            let cell = random_cell(&mut rng);
            let raw: Vec<f64> = flatten_mask(&assemble_unit_cell(&cell))
                .iter()
                .map(|&b| f64::from(b))
                .collect();
            assert_eq!(project_pixels_to_tiles(&raw).unwrap(), cell);
        }

        // An all-zero block is closest to the sparsest pattern (code 6).
        let raw = vec![0.0f64; 1024];
        let projected = project_pixels_to_tiles(&raw).unwrap();
        assert_eq!(projected, UnitCellCodes::new([6; 16]).unwrap());
    }

    #[test]
    fn projection_is_idempotent_on_noisy_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let raw: Vec<f64> = (0..1024).map(|_| rng.random::<f64>()).collect();
            let once = project_pixels_to_tiles(&raw).unwrap();
            let replay: Vec<f64> = flatten_mask(&assemble_unit_cell(&once))
                .iter()
                .map(|&b| f64::from(b))
                .collect();
            assert_eq!(project_pixels_to_tiles(&replay).unwrap(), once);
        }
    }

    #[test]
    fn pbm_export_has_header_comments_and_grid() {
        let cell = UnitCellCodes::new([6; 16]).unwrap();
        let mask = assemble_unit_cell(&cell);
        let mut buf = Vec::new();
        mask.write_pbm(&mut buf, &GeometryMetadata::default())
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("P1\n"));
        assert!(text.contains("# period_mm 6.4"));
        assert!(text.contains("# substrate_permittivity 4.2+0.025i"));
        assert!(text.contains("\n32 32\n"));
        assert_eq!(text.lines().count(), 1 + 5 + 1 + 32);
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(codes in proptest::array::uniform16(0u8..8)) {
            let cell = UnitCellCodes::new(codes).unwrap();
            let bits: Vec<f64> = encode_codes(&cell).iter().map(|&v| f64::from(v)).collect();
            prop_assert_eq!(decode_bits(&bits).unwrap(), cell);
        }

        #[test]
        fn project_inverts_assemble(codes in proptest::array::uniform16(0u8..8)) {
            let cell = UnitCellCodes::new(codes).unwrap();
            let raw: Vec<f64> = flatten_mask(&assemble_unit_cell(&cell))
                .iter()
                .map(|&b| f64::from(b))
                .collect();
            prop_assert_eq!(project_pixels_to_tiles(&raw).unwrap(), cell);
        }
    }
}
