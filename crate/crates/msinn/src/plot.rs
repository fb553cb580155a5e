//! Minimal standalone SVG rendering of a reflection spectrum.
//!
//! One polyline on labeled axes — black on white, no scripts, no external
//! references — so the file is viewable anywhere and byte-stable for a given
//! spectrum.

use crate::scalar::Scalar;
use crate::surrogate::{Spectrum, FREQ_START_GHZ, FREQ_STOP_GHZ};
use std::io::{self, Write};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 52.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 16.0;
const MARGIN_BOTTOM: f64 = 42.0;
const X_TICK_STEP_GHZ: f64 = 5.0;
const Y_TICK_STEP_DB: f64 = 10.0;

/// Writes a spectrum as a self-contained SVG line plot.
///
/// The x axis spans the simulation band with ticks every 5 GHz; the y axis
/// runs from 0 dB down to the spectrum's minimum rounded to the next tick,
/// ticks every 10 dB.
pub fn write_spectrum_svg<T: Scalar, W: Write>(
    spectrum: &Spectrum<T>,
    writer: &mut W,
) -> io::Result<()> {
    let (_, min_value) = spectrum.min_point();
    // At least one tick of range, even for a flat spectrum.
    let y_min = (min_value.to_f64_lossy() / Y_TICK_STEP_DB).floor() * Y_TICK_STEP_DB;
    let y_min = y_min.min(-Y_TICK_STEP_DB);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_at = |freq: f64| {
        MARGIN_LEFT + (freq - FREQ_START_GHZ) / (FREQ_STOP_GHZ - FREQ_START_GHZ) * plot_w
    };
    let y_at = |value: f64| MARGIN_TOP + (-value) / (-y_min) * plot_h;

    writeln!(
        writer,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    )?;
    writeln!(
        writer,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    )?;

    // Axes.
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = MARGIN_TOP;
    let y1 = HEIGHT - MARGIN_BOTTOM;
    writeln!(
        writer,
        "<path d=\"M {x0:.2} {y0:.2} L {x0:.2} {y1:.2} L {x1:.2} {y1:.2}\" \
         fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>"
    )?;

    writeln!(
        writer,
        "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"black\">"
    )?;
    let mut freq = FREQ_START_GHZ.div_euclid(X_TICK_STEP_GHZ) * X_TICK_STEP_GHZ;
    if freq < FREQ_START_GHZ {
        freq += X_TICK_STEP_GHZ;
    }
    while freq <= FREQ_STOP_GHZ {
        let x = x_at(freq);
        writeln!(
            writer,
            "<line x1=\"{x:.2}\" y1=\"{y1:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" \
             stroke=\"black\" stroke-width=\"1\"/>",
            y1 + 4.0
        )?;
        writeln!(
            writer,
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{freq:.0}</text>",
            y1 + 16.0
        )?;
        freq += X_TICK_STEP_GHZ;
    }
    let mut value = 0.0;
    while value >= y_min {
        let y = y_at(value);
        writeln!(
            writer,
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{x0:.2}\" y2=\"{y:.2}\" \
             stroke=\"black\" stroke-width=\"1\"/>",
            x0 - 4.0
        )?;
        writeln!(
            writer,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{value:.0}</text>",
            x0 - 7.0,
            y + 4.0
        )?;
        value -= Y_TICK_STEP_DB;
    }
    writeln!(
        writer,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">frequency, GHz</text>",
        (x0 + x1) / 2.0,
        HEIGHT - 8.0
    )?;
    writeln!(
        writer,
        "<text x=\"14\" y=\"{:.2}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 14 {:.2})\">reflection, dB</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    )?;
    writeln!(writer, "</g>")?;

    // The curve itself.
    write!(
        writer,
        "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.2\" points=\""
    )?;
    for (i, v) in spectrum.values().iter().enumerate() {
        if i > 0 {
            write!(writer, " ")?;
        }
        let freq = Spectrum::<T>::frequency_ghz(i);
        write!(writer, "{:.2},{:.2}", x_at(freq), y_at(v.to_f64_lossy()))?;
    }
    writeln!(writer, "\"/>")?;
    writeln!(writer, "</svg>")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::UnitCellCodes;
    use crate::surrogate::{simulate, SurrogateConfig, GRID_POINTS};

    fn render(spectrum: &Spectrum<f64>) -> String {
        let mut bytes = Vec::new();
        write_spectrum_svg(spectrum, &mut bytes).unwrap();
        String::from_utf8(bytes).unwrap()
    }

    #[test]
    fn svg_is_well_formed_and_complete() {
        let cfg = SurrogateConfig::default();
        let cell = UnitCellCodes::new([2; 16]).unwrap();
        let svg = render(&simulate(&cell, &cfg));
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("<polyline"));
        // One coordinate pair per grid sample.
        let points = svg.split("points=\"").nth(1).unwrap();
        let points = points.split('"').next().unwrap();
        assert_eq!(points.split(' ').count(), GRID_POINTS);
        // Band-edge tick labels are present.
        assert!(svg.contains(">5</text>"));
        assert!(svg.contains(">45</text>"));
        assert!(svg.contains(">-40</text>"));
        // Self-contained: no external references or scripts.
        assert!(!svg.contains("http://") || svg.contains("xmlns"));
        assert!(!svg.contains("<script"));
    }

    #[test]
    fn flat_spectra_still_render_with_a_default_range() {
        let flat = Spectrum::from_values(vec![0.0; GRID_POINTS]).unwrap();
        let svg = render(&flat);
        assert!(svg.contains(">-10</text>"));
        assert!(svg.contains("<polyline"));
    }

    #[test]
    fn rendering_is_byte_deterministic() {
        let cfg = SurrogateConfig::default();
        let cell = UnitCellCodes::new([0, 1, 2, 3, 4, 5, 6, 7, 0, 1, 2, 3, 4, 5, 6, 7]).unwrap();
        let spectrum = simulate(&cell, &cfg);
        assert_eq!(render(&spectrum), render(&spectrum));
    }
}
