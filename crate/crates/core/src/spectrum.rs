//! Spectrum containers, CSV export and peak analysis.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::TrajectoryRecord;
use crate::error::{Error, Result};
use crate::model::{DiscretizedBath, ModelParams};

/// Default peak threshold as a fraction of the global maximum.
pub const DEFAULT_PEAK_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[serde(rename = "multid1")]
    MultiD1,
    Trwa,
    Rwa,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::MultiD1, Method::Trwa, Method::Rwa];

    pub fn name(self) -> &'static str {
        match self {
            Method::MultiD1 => "multid1",
            Method::Trwa => "trwa",
            Method::Rwa => "rwa",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "multid1" | "multi-d1" | "davydov" => Ok(Method::MultiD1),
            "trwa" => Ok(Method::Trwa),
            "rwa" => Ok(Method::Rwa),
            other => Err(Error::InvalidParameter(format!(
                "unknown method '{other}' (expected multid1, trwa or rwa)"
            ))),
        }
    }
}

/// Everything needed to say where a spectrum came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMetadata {
    pub method: Method,
    pub params: ModelParams,
    /// `discrete` (per bath mode) or `per-unit-frequency`.
    pub measure: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_bath_modes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplicity: Option<usize>,
}

impl SpectrumMetadata {
    pub fn new(method: Method, params: &ModelParams, measure: &str) -> Self {
        Self {
            method,
            params: *params,
            measure: measure.to_string(),
            eta: None,
            run_id: None,
            t_final: None,
            n_bath_modes: None,
            multiplicity: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub frequencies: Vec<f64>,
    pub values: Vec<f64>,
    pub metadata: SpectrumMetadata,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    omega: f64,
    #[serde(rename = "N")]
    n: f64,
}

impl SpectrumResult {
    pub fn new(frequencies: Vec<f64>, values: Vec<f64>, metadata: SpectrumMetadata) -> Self {
        Self {
            frequencies,
            values,
            metadata,
        }
    }

    /// Reservoir photon numbers `N(w_k, t_f)` from the last snapshot of a run.
    pub fn from_trajectory(
        record: &TrajectoryRecord,
        bath: &DiscretizedBath,
        params: &ModelParams,
    ) -> Result<Self> {
        let values = record
            .emission_spectrum()
            .ok_or_else(|| Error::Consistency("trajectory has no photon-number snapshot".into()))?;
        if values.len() != bath.n_modes {
            return Err(Error::Consistency(format!(
                "snapshot has {} reservoir modes, bath has {}",
                values.len(),
                bath.n_modes
            )));
        }
        let mut meta = SpectrumMetadata::new(Method::MultiD1, params, "discrete");
        meta.t_final = record.photon_numbers.last().map(|s| s.time);
        meta.n_bath_modes = Some(bath.n_modes);
        meta.multiplicity = Some(record.final_state.multiplicity);
        Ok(Self::new(bath.frequencies.clone(), values.to_vec(), meta))
    }

    pub fn method(&self) -> Method {
        self.metadata.method
    }

    pub fn validate(&self) -> Result<()> {
        if self.frequencies.len() != self.values.len() {
            return Err(Error::Consistency(format!(
                "{} frequencies but {} values",
                self.frequencies.len(),
                self.values.len()
            )));
        }
        if self.frequencies.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Consistency("spectrum grid is not strictly increasing".into()));
        }
        if let Some(v) = self.values.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::Consistency(format!("negative or NaN spectrum value {v}")));
        }
        Ok(())
    }

    pub fn peaks(&self, threshold: f64) -> Vec<Peak> {
        find_peaks(&self.frequencies, &self.values, threshold)
    }

    /// Sidecar path holding the metadata: `<csv>.meta.json`.
    pub fn sidecar_path(csv: &Path) -> PathBuf {
        let mut s = csv.as_os_str().to_owned();
        s.push(".meta.json");
        PathBuf::from(s)
    }

    /// Writes `omega,N` rows plus the metadata sidecar.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.validate()?;
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        for (&omega, &n) in self.frequencies.iter().zip(&self.values) {
            w.serialize(Row { omega, n }).map_err(csv_err)?;
        }
        w.flush()?;
        fs::write(
            Self::sidecar_path(path),
            serde_json::to_string_pretty(&self.metadata)?,
        )?;
        Ok(())
    }

    /// Reads a spectrum CSV; the sidecar is required.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let meta_path = Self::sidecar_path(path);
        let metadata: SpectrumMetadata =
            serde_json::from_str(&fs::read_to_string(&meta_path).map_err(|e| {
                Error::Config(format!("{}: {e}", meta_path.display()))
            })?)?;
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let headers = r.headers().map_err(csv_err)?.clone();
        if headers.len() < 2 || &headers[0] != "omega" || &headers[1] != "N" {
            return Err(Error::Config(format!(
                "{}: expected header 'omega,N', found '{}'",
                path.display(),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let (mut frequencies, mut values) = (Vec::new(), Vec::new());
        for row in r.deserialize::<Row>() {
            let row = row.map_err(csv_err)?;
            frequencies.push(row.omega);
            values.push(row.n);
        }
        let s = Self::new(frequencies, values, metadata);
        s.validate()?;
        Ok(s)
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

/// A spectral line. Half widths are `None` when the profile does not fall
/// to half height before the grid edge or a neighbouring peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub position: f64,
    pub height: f64,
    pub left_half_width: Option<f64>,
    pub right_half_width: Option<f64>,
}

impl Peak {
    pub fn fwhm(&self) -> Option<f64> {
        Some(self.left_half_width? + self.right_half_width?)
    }
}

/// Interior local maxima above `threshold * max`, sorted by position.
///
/// The apex is refined by a parabola through the three top samples and
/// half-maximum crossings are found by linear interpolation.
pub fn find_peaks(freqs: &[f64], values: &[f64], threshold: f64) -> Vec<Peak> {
    let n = freqs.len().min(values.len());
    let global = values[..n].iter().cloned().fold(0.0, f64::max);
    if n < 3 || !(global > 0.0) {
        return Vec::new();
    }
    let floor = threshold * global;
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        let v = values[i];
        if v > values[i - 1] && v > floor {
            // walk over a flat top
            let mut j = i;
            while j + 1 < n && values[j + 1] == v {
                j += 1;
            }
            if j + 1 < n && values[j + 1] < v {
                let apex = (i + j) / 2;
                peaks.push(describe_peak(freqs, values, apex, i == j));
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}

fn describe_peak(x: &[f64], y: &[f64], k: usize, refine: bool) -> Peak {
    let (mut position, mut height) = (x[k], y[k]);
    if refine {
        // Lagrange parabola through (k-1, k, k+1) on a possibly uneven grid
        let (x0, x1, x2) = (x[k - 1], x[k], x[k + 1]);
        let (y0, y1, y2) = (y[k - 1], y[k], y[k + 1]);
        let d01 = (y1 - y0) / (x1 - x0);
        let d12 = (y2 - y1) / (x2 - x1);
        let a = (d12 - d01) / (x2 - x0);
        if a < 0.0 {
            let b = d01 - a * (x0 + x1);
            let xv = (-b / (2.0 * a)).clamp(x0, x2);
            position = xv;
            height = (y1 + d01 * (xv - x1) + a * (xv - x0) * (xv - x1)).max(y1);
        }
    }
    let half = 0.5 * height;
    let left = (1..=k).rev().find_map(|i| {
        let (near, far) = (y[i], y[i - 1]);
        if far <= half {
            Some(Some(position - lerp_cross(x[i - 1], far, x[i], near, half)))
        } else if far > near {
            Some(None) // rising again above half height: another line
        } else {
            None
        }
    });
    let right = (k..y.len() - 1).find_map(|i| {
        let (near, far) = (y[i], y[i + 1]);
        if far <= half {
            Some(Some(lerp_cross(x[i + 1], far, x[i], near, half) - position))
        } else if far > near {
            Some(None)
        } else {
            None
        }
    });
    Peak {
        position,
        height,
        left_half_width: left.flatten(),
        right_half_width: right.flatten(),
    }
}

/// Abscissa where the segment from `(xa, ya)` to `(xb, yb)` crosses `level`.
fn lerp_cross(xa: f64, ya: f64, xb: f64, yb: f64, level: f64) -> f64 {
    if yb == ya {
        return xa;
    }
    xa + (level - ya) * (xb - xa) / (yb - ya)
}

/// Peaks of one spectrum in a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakReport {
    pub label: String,
    pub method: Method,
    pub peaks: Vec<Peak>,
}

/// Peak tables for several spectra. Flat spectra yield empty lists.
pub fn compare(spectra: &[(String, SpectrumResult)], threshold: f64) -> Result<Vec<PeakReport>> {
    if spectra.is_empty() {
        return Err(Error::InvalidParameter("compare needs at least one spectrum".into()));
    }
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::InvalidParameter(format!(
            "peak threshold must lie in [0, 1), got {threshold}"
        )));
    }
    Ok(spectra
        .iter()
        .map(|(label, s)| PeakReport {
            label: label.clone(),
            method: s.method(),
            peaks: s.peaks(threshold),
        })
        .collect())
}

/// One row per peak; missing widths are left empty.
pub fn write_peak_report(reports: &[PeakReport], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record([
        "label",
        "method",
        "peak",
        "position",
        "height",
        "fwhm",
        "left_half_width",
        "right_half_width",
    ])
    .map_err(csv_err)?;
    for r in reports {
        for (i, p) in r.peaks.iter().enumerate() {
            w.write_record(&[
                r.label.clone(),
                r.method.name().to_string(),
                i.to_string(),
                p.position.to_string(),
                p.height.to_string(),
                opt(p.fwhm()),
                opt(p.left_half_width),
                opt(p.right_half_width),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
