//! Raw I/Q files: little-endian interleaved `f32` pairs, plus a TOML sidecar
//! named `<file>.toml` that records how the samples were produced.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::SampledSignal;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformMeta {
    pub sample_rate: f64,
    /// Signal family, e.g. `ofdm` or `sc-qam`.
    pub scheme: String,
    pub order: u32,
    pub n_symbols: usize,
    pub seed: u64,
    #[serde(default)]
    pub n_samples: Option<usize>,
    #[serde(default)]
    pub label: Option<String>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".toml");
    PathBuf::from(s)
}

/// Writes samples (narrowed to `f32`) and the sidecar next to them.
pub fn write_waveform(path: &Path, sig: &SampledSignal, meta: &WaveformMeta) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for z in sig.samples() {
        w.write_all(&(z.re as f32).to_le_bytes())
            .and_then(|_| w.write_all(&(z.im as f32).to_le_bytes()))
            .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    let meta = WaveformMeta {
        n_samples: Some(sig.len()),
        label: Some(sig.label().to_owned()),
        ..meta.clone()
    };
    let side = sidecar_path(path);
    let text = toml::to_string(&meta).map_err(|e| Error::Format {
        path: side.clone(),
        message: e.to_string(),
    })?;
    fs::write(&side, text).map_err(|e| Error::io(&side, e))
}

/// Reads an I/Q file and its sidecar.
pub fn read_waveform(path: &Path) -> Result<(SampledSignal, WaveformMeta)> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let meta: WaveformMeta = toml::from_str(&text).map_err(|e| Error::Format {
        path: side.clone(),
        message: e.to_string(),
    })?;

    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Format {
            path: path.to_owned(),
            message: format!("{} bytes is not a whole number of f32 I/Q pairs", bytes.len()),
        });
    }
    let samples: Vec<Complex64> = bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    if let Some(n) = meta.n_samples {
        if n != samples.len() {
            return Err(Error::Format {
                path: path.to_owned(),
                message: format!("sidecar says {n} samples, file holds {}", samples.len()),
            });
        }
    }
    let label = meta.label.clone().unwrap_or_else(|| meta.scheme.clone());
    let sig = SampledSignal::new(samples, meta.sample_rate, label).map_err(|e| Error::Format {
        path: path.to_owned(),
        message: e.to_string(),
    })?;
    Ok((sig, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> WaveformMeta {
        WaveformMeta {
            sample_rate: 1e6,
            scheme: "qam".into(),
            order: 16,
            n_symbols: 3,
            seed: 9,
            n_samples: None,
            label: None,
        }
    }

    #[test]
    fn round_trip_through_f32() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.cf32");
        let samples: Vec<Complex64> = (0..12).map(|i| Complex64::new(i as f64 * 0.1, -(i as f64))).collect();
        let sig = SampledSignal::new(samples.clone(), 1e6, "test").unwrap();
        write_waveform(&path, &sig, &meta()).unwrap();
        assert_eq!(fs::metadata(&path).unwrap().len(), 12 * 8);
        let (back, m) = read_waveform(&path).unwrap();
        assert_eq!(m.order, 16);
        assert_eq!(m.n_samples, Some(12));
        assert_eq!(back.label(), "test");
        for (a, b) in samples.iter().zip(back.samples()) {
            assert_eq!(a.re as f32 as f64, b.re);
            assert_eq!(a.im as f32 as f64, b.im);
        }
    }

    #[test]
    fn byte_layout_is_little_endian_interleaved() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("y.cf32");
        let sig = SampledSignal::new(vec![Complex64::new(1.0, -2.0)], 1.0, "one").unwrap();
        write_waveform(&path, &sig, &meta()).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], &1.0f32.to_le_bytes());
        assert_eq!(&bytes[4..], &(-2.0f32).to_le_bytes());
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.cf32");
        let sig = SampledSignal::new(vec![Complex64::new(1.0, 1.0); 4], 1.0, "z").unwrap();
        write_waveform(&path, &sig, &meta()).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.pop();
        fs::write(&path, bytes).unwrap();
        assert!(matches!(read_waveform(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn missing_sidecar_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("none.cf32");
        fs::write(&path, [0u8; 8]).unwrap();
        assert!(matches!(read_waveform(&path), Err(Error::Io { .. })));
    }
}
