//! On-disk formats for masks, complex images and measurement sets.
//!
//! - masks: P4 bitmap plus a JSON sidecar with the generation parameters;
//! - complex images: little-endian f64 amplitude and phase (radians) files
//!   plus a JSON sidecar;
//! - measurement sets: a directory with `mask_NNN.pbm`, `y_NNN.pgm`
//!   (16-bit sensor codes) or `y_NNN.f64` (ideal detector) and
//!   `manifest.json`.

pub mod netpbm;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ComplexImage, RealImage};
use crate::maskgen::{high_freq_ratio, BinaryMask, MaskKind};
use crate::optics::{decode, Acquisition, Measurement, MeasurementSet, ReadoutRecord, SensorParams};

pub use netpbm::Graymap;

/// Bumped whenever a layout or sign convention below changes.
pub const FORMAT_VERSION: u32 = 1;

pub const CONVENTION: &str = "row-major, origin top-left, orthonormal DFT with DC at index 0";

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| format_err(path, e.to_string()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_slice(&read(path)?).map_err(|e| format_err(path, e.to_string()))
}

pub fn write_f64(path: &Path, values: &[f64]) -> Result<()> {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_f64(path: &Path, expected_len: usize) -> Result<Vec<f64>> {
    let bytes = read(path)?;
    if bytes.len() != expected_len * 8 {
        return Err(format_err(
            path,
            format!("expected {} values, file holds {} bytes", expected_len, bytes.len()),
        ));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

pub fn write_pgm(path: &Path, map: &Graymap) -> Result<()> {
    fs::write(path, netpbm::encode_pgm(map))?;
    Ok(())
}

pub fn read_pgm(path: &Path) -> Result<Graymap> {
    netpbm::decode_pgm(&read(path)?, path)
}

/// Reads an 8- or 16-bit graymap scaled to [0, 1].
pub fn read_pgm_unit(path: &Path) -> Result<RealImage> {
    let map = read_pgm(path)?;
    let scale = map.maxval as f64;
    RealImage::new(map.width, map.height, map.samples.iter().map(|&s| s as f64 / scale).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskSidecar {
    pub kind: MaskKind,
    pub sigma: f64,
    pub r1: Option<f64>,
    pub seed: u64,
    pub eta: f64,
    pub width: usize,
    pub height: usize,
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes `path` (P4) and its `.json` sidecar; returns both paths.
pub fn save_mask(path: &Path, mask: &BinaryMask) -> Result<Vec<PathBuf>> {
    fs::write(path, netpbm::encode_pbm(mask.width(), mask.height(), mask.bits()))?;
    let meta = mask.meta();
    let sidecar = MaskSidecar {
        kind: meta.kind,
        sigma: meta.sigma,
        r1: meta.r1,
        seed: meta.seed,
        eta: high_freq_ratio(mask),
        width: mask.width(),
        height: mask.height(),
    };
    let side = sidecar_path(path);
    write_json(&side, &sidecar)?;
    Ok(vec![path.to_path_buf(), side])
}

pub fn load_mask(path: &Path) -> Result<BinaryMask> {
    let (w, h, bits) = netpbm::decode_pbm(&read(path)?, path)?;
    let side = sidecar_path(path);
    let meta: MaskSidecar = read_json(&side)?;
    if (meta.width, meta.height) != (w, h) {
        return Err(format_err(&side, "sidecar dimensions disagree with the bitmap"));
    }
    BinaryMask::from_bits(w, h, bits, meta.kind, meta.sigma, meta.r1, meta.seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexSidecar {
    pub format_version: u32,
    pub convention: String,
    pub width: usize,
    pub height: usize,
    pub amplitude: String,
    pub phase: String,
}

/// Writes `<stem>.json`, `<stem>_amplitude.f64` and `<stem>_phase.f64` in
/// `dir`; returns the written paths.
pub fn save_complex(dir: &Path, stem: &str, img: &ComplexImage) -> Result<Vec<PathBuf>> {
    let amp_name = format!("{stem}_amplitude.f64");
    let phase_name = format!("{stem}_phase.f64");
    let amp_path = dir.join(&amp_name);
    let phase_path = dir.join(&phase_name);
    write_f64(&amp_path, img.amplitude().data())?;
    write_f64(&phase_path, &img.phase())?;
    let side = dir.join(format!("{stem}.json"));
    write_json(
        &side,
        &ComplexSidecar {
            format_version: FORMAT_VERSION,
            convention: CONVENTION.into(),
            width: img.width(),
            height: img.height(),
            amplitude: amp_name,
            phase: phase_name,
        },
    )?;
    Ok(vec![side, amp_path, phase_path])
}

/// Loads a complex image from its JSON sidecar.
pub fn load_complex(sidecar: &Path) -> Result<ComplexImage> {
    let meta: ComplexSidecar = read_json(sidecar)?;
    if meta.format_version != FORMAT_VERSION {
        return Err(format_err(sidecar, format!("unsupported format version {}", meta.format_version)));
    }
    let dir = sidecar.parent().unwrap_or(Path::new("."));
    let n = meta.width * meta.height;
    let amp = read_f64(&dir.join(&meta.amplitude), n)?;
    let phase = read_f64(&dir.join(&meta.phase), n)?;
    ComplexImage::from_polar(meta.width, meta.height, &amp, &phase)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementEntry {
    pub mask: String,
    pub data: String,
    pub readout: Option<ReadoutRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementManifest {
    pub format_version: u32,
    pub width: usize,
    pub height: usize,
    pub acquisition: Acquisition,
    pub measurements: Vec<MeasurementEntry>,
}

/// Writes a measurement set into `dir` (created if missing); returns every
/// written path.
pub fn save_measurements(dir: &Path, ms: &MeasurementSet) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let (width, height) = ms.dims();
    let mut written = Vec::new();
    let mut entries = Vec::with_capacity(ms.len());
    for (i, m) in ms.measurements.iter().enumerate() {
        let mask_name = format!("mask_{i:03}.pbm");
        written.extend(save_mask(&dir.join(&mask_name), &m.mask)?);
        let data_name = match (&m.codes, &ms.acquisition.sensor) {
            (Some(codes), Some(sensor)) => {
                let name = format!("y_{i:03}.pgm");
                let map = Graymap {
                    width,
                    height,
                    maxval: sensor.max_code() as u16,
                    samples: codes.clone(),
                };
                write_pgm(&dir.join(&name), &map)?;
                name
            }
            _ => {
                let name = format!("y_{i:03}.f64");
                write_f64(&dir.join(&name), m.intensity.data())?;
                name
            }
        };
        written.push(dir.join(&data_name));
        entries.push(MeasurementEntry {
            mask: mask_name,
            data: data_name,
            readout: m.readout.clone(),
        });
    }
    let manifest = MeasurementManifest {
        format_version: FORMAT_VERSION,
        width,
        height,
        acquisition: ms.acquisition.clone(),
        measurements: entries,
    };
    let path = dir.join("manifest.json");
    write_json(&path, &manifest)?;
    written.push(path);
    Ok(written)
}

pub fn load_measurements(dir: &Path) -> Result<MeasurementSet> {
    let manifest_path = dir.join("manifest.json");
    let manifest: MeasurementManifest = read_json(&manifest_path)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(format_err(
            &manifest_path,
            format!("unsupported format version {}", manifest.format_version),
        ));
    }
    let (w, h) = (manifest.width, manifest.height);
    let mut out = Vec::with_capacity(manifest.measurements.len());
    for entry in &manifest.measurements {
        let mask = load_mask(&dir.join(&entry.mask))?;
        let data_path = dir.join(&entry.data);
        let (intensity, codes) = match (&manifest.acquisition.sensor, &entry.readout) {
            (Some(sensor), Some(readout)) => {
                let map = read_pgm(&data_path)?;
                if (map.width, map.height) != (w, h) || map.maxval as u32 != sensor.max_code() {
                    return Err(format_err(&data_path, "graymap does not match the manifest"));
                }
                let params = SensorParams {
                    photon_scale: readout.photon_scale,
                    ..*sensor
                };
                let intensity = decode(&map.samples, w, h, &params, readout.full_well)?;
                (intensity, Some(map.samples))
            }
            (None, None) => (RealImage::new(w, h, read_f64(&data_path, w * h)?)?, None),
            _ => return Err(format_err(&manifest_path, "sensor settings and readout records disagree")),
        };
        out.push(Measurement {
            mask,
            intensity,
            codes,
            readout: entry.readout.clone(),
        });
    }
    MeasurementSet::new(out, manifest.acquisition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maskgen::{fmedg_generate, white_noise_mask};
    use crate::optics::acquire;
    use crate::random::RandomStream;
    use crate::Complex64;

    fn field(n: usize) -> ComplexImage {
        let mut rng = RandomStream::new(4, "io");
        ComplexImage::from_fn(n, n, |_, _| Complex64::from_polar(0.2 + rng.uniform(), 3.0 * rng.uniform() - 1.5))
    }

    #[test]
    fn mask_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mask = fmedg_generate(21, 13, 0.4, 1.5, 3).unwrap();
        let path = dir.path().join("m.pbm");
        save_mask(&path, &mask).unwrap();
        assert_eq!(load_mask(&path).unwrap(), mask);
        let side: MaskSidecar = read_json(&path.with_extension("json")).unwrap();
        assert_eq!(side.eta, high_freq_ratio(&mask));
    }

    #[test]
    fn complex_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = field(9);
        save_complex(dir.path(), "u", &img).unwrap();
        let back = load_complex(&dir.path().join("u.json")).unwrap();
        assert!(back.distance(&img).unwrap() < 1e-14);
    }

    #[test]
    fn measurement_set_round_trip() {
        let u = field(16);
        let masks: Vec<_> = (0..2).map(|s| white_noise_mask(16, 16, 0.5, s).unwrap()).collect();
        for acq in [
            Acquisition::default(),
            Acquisition {
                sensor: Some(SensorParams {
                    photon_scale: 50.0,
                    ..Default::default()
                }),
                truncation: 0.2,
                ..Default::default()
            },
        ] {
            let ms = acquire(&u, &masks, &acq).unwrap();
            let dir = tempfile::tempdir().unwrap();
            save_measurements(dir.path(), &ms).unwrap();
            assert_eq!(load_measurements(dir.path()).unwrap(), ms);
        }
    }

    #[test]
    fn missing_files_are_format_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_measurements(dir.path()), Err(Error::Format { .. })));
        assert!(read_f64(&dir.path().join("nope"), 3).is_err());
    }
}
