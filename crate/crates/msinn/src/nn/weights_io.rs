//! Plain-text serialization of model weights (`MSINN/1`).
//!
//! The format is line oriented and self-describing:
//!
//! ```text
//! MSINN/1
//! layers <count>
//! dropout_rate <r>
//! dropout_after <i...>          (indices may be absent)
//! layer 0
//! in_dim <n>
//! out_dim <m>
//! activation <tag>
//! weights                       (m lines of n values, one row per output)
//! ...
//! biases                        (one line of m values)
//! ```
//!
//! Reals are written with 17 significant digits (`{:.16e}`), which is enough
//! for `f64` values to survive a write/read cycle bit-exactly.

use crate::error::{Error, Result};
use crate::nn::activation::Activation;
use crate::nn::layer::DenseLayer;
use crate::nn::model::MlpModel;
use crate::scalar::Scalar;
use ndarray::{Array1, Array2};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// Magic/version line identifying the weights format.
pub const WEIGHTS_FORMAT: &str = "MSINN/1";

/// Writes a model to `writer` in `MSINN/1` form.
pub fn write_model<T: Scalar, W: Write>(model: &MlpModel<T>, writer: &mut W) -> Result<()> {
    writeln!(writer, "{WEIGHTS_FORMAT}")?;
    writeln!(writer, "layers {}", model.layers().len())?;
    writeln!(writer, "dropout_rate {:.16e}", model.dropout_rate())?;
    write!(writer, "dropout_after")?;
    for idx in model.dropout_after() {
        write!(writer, " {idx}")?;
    }
    writeln!(writer)?;
    for (k, layer) in model.layers().iter().enumerate() {
        writeln!(writer, "layer {k}")?;
        writeln!(writer, "in_dim {}", layer.in_dim())?;
        writeln!(writer, "out_dim {}", layer.out_dim())?;
        writeln!(writer, "activation {}", layer.activation().tag())?;
        writeln!(writer, "weights")?;
        for row in layer.weights().rows() {
            let mut first = true;
            for v in row {
                if !first {
                    write!(writer, " ")?;
                }
                write!(writer, "{v:.16e}")?;
                first = false;
            }
            writeln!(writer)?;
        }
        writeln!(writer, "biases")?;
        let mut first = true;
        for v in layer.biases() {
            if !first {
                write!(writer, " ")?;
            }
            write!(writer, "{v:.16e}")?;
            first = false;
        }
        writeln!(writer)?;
    }
    Ok(())
}

/// Saves a model to a file in `MSINN/1` form.
pub fn save_model<T: Scalar, P: AsRef<Path>>(model: &MlpModel<T>, path: P) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    write_model(model, &mut writer)?;
    writer.flush()?;
    Ok(())
}

/// Line reader that tracks the current line number for error messages.
struct LineSource<R> {
    reader: R,
    line: usize,
}

impl<R: BufRead> LineSource<R> {
    fn next_line(&mut self) -> Result<String> {
        let mut buf = String::new();
        let n = self.reader.read_line(&mut buf)?;
        self.line += 1;
        if n == 0 {
            return Err(Error::Parse {
                line: self.line,
                message: "unexpected end of file".into(),
            });
        }
        Ok(buf.trim_end_matches(['\n', '\r']).to_string())
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    /// Reads a `key value...` line, checking the key.
    fn keyed_line(&mut self, key: &str) -> Result<String> {
        let line = self.next_line()?;
        match line.strip_prefix(key) {
            Some(rest) if rest.is_empty() || rest.starts_with(' ') => {
                Ok(rest.trim_start().to_string())
            }
            _ => Err(self.error(format!("expected `{key} ...`, found {line:?}"))),
        }
    }

    fn keyed_usize(&mut self, key: &str) -> Result<usize> {
        let value = self.keyed_line(key)?;
        value
            .parse()
            .map_err(|e| self.error(format!("bad {key}: {e}")))
    }

    fn real_row<T: Scalar>(&mut self, expected: usize) -> Result<Vec<T>> {
        let line = self.next_line()?;
        let mut out = Vec::with_capacity(expected);
        for token in line.split_ascii_whitespace() {
            let v: f64 = token
                .parse()
                .map_err(|e| self.error(format!("bad real {token:?}: {e}")))?;
            out.push(T::from_f64_lossy(v));
        }
        if out.len() != expected {
            return Err(self.error(format!(
                "expected {expected} values on row, found {}",
                out.len()
            )));
        }
        Ok(out)
    }
}

/// Reads a model in `MSINN/1` form.
///
/// The returned model is marked trained: weight files exist to carry fitted
/// parameters between processes.
pub fn read_model<T: Scalar, R: BufRead>(reader: R) -> Result<MlpModel<T>> {
    let mut src = LineSource { reader, line: 0 };
    let header = src.next_line()?;
    if header != WEIGHTS_FORMAT {
        return Err(Error::FormatVersion {
            expected: WEIGHTS_FORMAT,
            found: header,
        });
    }
    let layer_count = src.keyed_usize("layers")?;
    if layer_count == 0 {
        return Err(src.error("model must have at least one layer"));
    }
    let rate_text = src.keyed_line("dropout_rate")?;
    let dropout_rate: f64 = rate_text
        .parse()
        .map_err(|e| src.error(format!("bad dropout_rate: {e}")))?;
    let dropout_after: Vec<usize> = {
        let list = src.keyed_line("dropout_after")?;
        list.split_ascii_whitespace()
            .map(|tok| {
                tok.parse()
                    .map_err(|e| src.error(format!("bad dropout index {tok:?}: {e}")))
            })
            .collect::<Result<_>>()?
    };

    let mut layers = Vec::with_capacity(layer_count);
    for k in 0..layer_count {
        let idx = src.keyed_usize("layer")?;
        if idx != k {
            return Err(src.error(format!("expected layer {k}, found layer {idx}")));
        }
        let in_dim = src.keyed_usize("in_dim")?;
        let out_dim = src.keyed_usize("out_dim")?;
        if in_dim == 0 || out_dim == 0 {
            return Err(src.error("layer dimensions must be nonzero"));
        }
        let tag = src.keyed_line("activation")?;
        let activation = Activation::from_tag(&tag).map_err(|e| src.error(format!("{e}")))?;
        let marker = src.next_line()?;
        if marker != "weights" {
            return Err(src.error(format!("expected `weights`, found {marker:?}")));
        }
        let mut weights = Array2::zeros((out_dim, in_dim));
        for r in 0..out_dim {
            let row = src.real_row::<T>(in_dim)?;
            for (c, v) in row.into_iter().enumerate() {
                weights[[r, c]] = v;
            }
        }
        let marker = src.next_line()?;
        if marker != "biases" {
            return Err(src.error(format!("expected `biases`, found {marker:?}")));
        }
        let biases = Array1::from_vec(src.real_row::<T>(out_dim)?);
        let layer = DenseLayer::from_parts(weights, biases, activation)
            .map_err(|e| src.error(format!("{e}")))?;
        layers.push(layer);
    }

    let mut model = MlpModel::new(layers, &dropout_after, T::from_f64_lossy(dropout_rate))
        .map_err(|e| src.error(format!("{e}")))?;
    model.set_trained(true);
    Ok(model)
}

/// Loads a model from a `MSINN/1` file.
pub fn load_model<T: Scalar, P: AsRef<Path>>(path: P) -> Result<MlpModel<T>> {
    read_model(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_model() -> MlpModel<f64> {
        let layers = vec![
            DenseLayer::zeros(3, 5, Activation::Relu),
            DenseLayer::zeros(5, 2, Activation::Sigmoid),
        ];
        let mut model = MlpModel::new(layers, &[0], 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        model.init_glorot(&mut rng);
        model
    }

    #[test]
    fn round_trip_is_value_exact() {
        let model = sample_model();
        let mut buf = Vec::new();
        write_model(&model, &mut buf).unwrap();
        let loaded: MlpModel<f64> = read_model(buf.as_slice()).unwrap();
        assert_eq!(loaded.layers().len(), model.layers().len());
        assert_eq!(loaded.dropout_after(), model.dropout_after());
        assert_eq!(loaded.dropout_rate(), model.dropout_rate());
        for (a, b) in loaded.layers().iter().zip(model.layers()) {
            assert_eq!(a.activation(), b.activation());
            assert_eq!(a.weights(), b.weights()); // bitwise equality
            assert_eq!(a.biases(), b.biases());
        }
        assert!(loaded.is_trained());
    }

    #[test]
    fn f32_round_trip_is_value_exact() {
        let layers = vec![DenseLayer::<f32>::zeros(4, 3, Activation::Relu)];
        let mut model = MlpModel::new(layers, &[], 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        model.init_glorot(&mut rng);
        let mut buf = Vec::new();
        write_model(&model, &mut buf).unwrap();
        let loaded: MlpModel<f32> = read_model(buf.as_slice()).unwrap();
        assert_eq!(loaded.layers()[0].weights(), model.layers()[0].weights());
    }

    #[test]
    fn wrong_magic_is_a_version_error() {
        let err = read_model::<f64, _>("MSINN/9\nlayers 1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::FormatVersion { .. }));
    }

    #[test]
    fn truncated_file_reports_line_number() {
        let model = sample_model();
        let mut buf = Vec::new();
        write_model(&model, &mut buf).unwrap();
        let cut = buf.len() / 2;
        let err = read_model::<f64, _>(&buf[..cut]).unwrap_err();
        assert!(matches!(err, Error::Parse { line, .. } if line > 1));
    }

    #[test]
    fn corrupt_value_reports_line_number() {
        let model = sample_model();
        let mut buf = Vec::new();
        write_model(&model, &mut buf).unwrap();
        let text = String::from_utf8(buf)
            .unwrap()
            .replace("activation relu", "activation blargh");
        let err = read_model::<f64, _>(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn files_round_trip_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.weights");
        let model = sample_model();
        save_model(&model, &path).unwrap();
        let loaded: MlpModel<f64> = load_model(&path).unwrap();
        assert_eq!(loaded.layers()[1].weights(), model.layers()[1].weights());
    }
}
