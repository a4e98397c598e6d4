//! Power-law constitutive model, apparent-viscosity evaluation with shear-rate
//! regularization, and fitting of rheometer sweep data.
//!
//! The constitutive law is `mu(gamma_dot) = k * gamma_dot^(n-1)`. For a
//! shear-thinning fluid (n < 1) the viscosity diverges as the shear rate goes
//! to zero, so evaluation clamps the shear rate to a configurable window
//! `[gamma_min, gamma_max]` before applying the law.

use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

/// Default lower shear-rate cutoff (1/s), below the measured range of typical
/// rotational-rheometer sweeps (0.1..100 1/s).
pub const DEFAULT_GAMMA_MIN: f64 = 1e-3;
/// Default upper shear-rate cutoff (1/s).
pub const DEFAULT_GAMMA_MAX: f64 = 1e4;

#[derive(Debug, Error)]
pub enum RheologyError {
    #[error("degenerate sweep: {0}")]
    DegenerateSweep(String),
    #[error("observed/predicted length mismatch: {observed} vs {predicted}")]
    LengthMismatch { observed: usize, predicted: usize },
    #[error("invalid power-law model: {0}")]
    InvalidModel(String),
    #[error("malformed sweep row {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Power-law fluid `mu = k * gamma_dot^(n-1)` with shear-rate regularization.
///
/// `k` carries units Pa*s^n (the consistency index); `n` is dimensionless.
/// Only shear-thinning or Newtonian fluids (0 < n <= 1) are accepted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawModel {
    pub k: f64,
    pub n: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
}

impl PowerLawModel {
    pub fn new(k: f64, n: f64, gamma_min: f64, gamma_max: f64) -> Result<Self, RheologyError> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(RheologyError::InvalidModel(format!(
                "consistency index must be positive, got {k}"
            )));
        }
        if !(n > 0.0) || !n.is_finite() {
            return Err(RheologyError::InvalidModel(format!(
                "flow index must be positive, got {n}"
            )));
        }
        if n > 1.0 {
            return Err(RheologyError::InvalidModel(format!(
                "flow index {n} > 1 (dilatant fluids are unsupported)"
            )));
        }
        if !(gamma_min > 0.0 && gamma_min < gamma_max) {
            return Err(RheologyError::InvalidModel(format!(
                "shear-rate cutoffs must satisfy 0 < gamma_min < gamma_max, got [{gamma_min}, {gamma_max}]"
            )));
        }
        Ok(Self {
            k,
            n,
            gamma_min,
            gamma_max,
        })
    }

    /// A model with the default regularization window.
    pub fn with_default_cutoffs(k: f64, n: f64) -> Result<Self, RheologyError> {
        Self::new(k, n, DEFAULT_GAMMA_MIN, DEFAULT_GAMMA_MAX)
    }

    /// Apparent viscosity at the given shear rate (Pa*s).
    ///
    /// The shear rate is clamped to `[gamma_min, gamma_max]`, which keeps the
    /// value finite in stagnant regions for n < 1.
    pub fn apparent_viscosity(&self, shear_rate: f64) -> f64 {
        let g = shear_rate.clamp(self.gamma_min, self.gamma_max);
        self.k * g.powf(self.n - 1.0)
    }

    /// Largest viscosity the clamped law can return.
    pub fn viscosity_upper_bound(&self) -> f64 {
        self.apparent_viscosity(self.gamma_min)
    }

    /// Smallest viscosity the clamped law can return.
    pub fn viscosity_lower_bound(&self) -> f64 {
        self.apparent_viscosity(self.gamma_max)
    }
}

/// One rheometer measurement: (shear rate 1/s, shear viscosity Pa*s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub shear_rate: f64,
    pub viscosity: f64,
}

/// An ordered rheometer sweep. Shear rates must be strictly positive and
/// strictly increasing; viscosities strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct RheometrySweep {
    points: Vec<SweepPoint>,
    /// Measurement temperature in Celsius; metadata only.
    pub temperature: Option<f64>,
}

impl RheometrySweep {
    pub fn new(points: Vec<SweepPoint>, temperature: Option<f64>) -> Result<Self, RheologyError> {
        for (i, p) in points.iter().enumerate() {
            if !(p.shear_rate > 0.0) || !p.shear_rate.is_finite() {
                return Err(RheologyError::MalformedRow {
                    line: i + 2, // header is line 1
                    reason: format!("shear rate must be positive, got {}", p.shear_rate),
                });
            }
            if !(p.viscosity > 0.0) || !p.viscosity.is_finite() {
                return Err(RheologyError::MalformedRow {
                    line: i + 2,
                    reason: format!("viscosity must be positive, got {}", p.viscosity),
                });
            }
            if i > 0 && p.shear_rate <= points[i - 1].shear_rate {
                return Err(RheologyError::MalformedRow {
                    line: i + 2,
                    reason: "shear rates must be strictly increasing".into(),
                });
            }
        }
        Ok(Self {
            points,
            temperature,
        })
    }

    pub fn points(&self) -> &[SweepPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Read a sweep from CSV with header `shear_rate,viscosity`.
    pub fn from_csv(path: &Path) -> Result<Self, RheologyError> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, RheologyError> {
        let mut points = Vec::new();
        let mut lines = reader.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line?,
            None => {
                return Err(RheologyError::DegenerateSweep("empty sweep file".into()));
            }
        };
        let header_cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if header_cols.len() < 2 || header_cols[0] != "shear_rate" || header_cols[1] != "viscosity"
        {
            return Err(RheologyError::MalformedRow {
                line: 1,
                reason: format!("expected header `shear_rate,viscosity`, got `{header}`"),
            });
        }
        for (idx, line) in lines {
            let line = line?;
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() < 2 {
                return Err(RheologyError::MalformedRow {
                    line: line_no,
                    reason: "expected two comma-separated values".into(),
                });
            }
            let shear_rate: f64 = cols[0].parse().map_err(|e| RheologyError::MalformedRow {
                line: line_no,
                reason: format!("bad shear rate `{}`: {e}", cols[0]),
            })?;
            let viscosity: f64 = cols[1].parse().map_err(|e| RheologyError::MalformedRow {
                line: line_no,
                reason: format!("bad viscosity `{}`: {e}", cols[1]),
            })?;
            points.push(SweepPoint {
                shear_rate,
                viscosity,
            });
        }
        Self::new(points, None)
    }
}

/// Result of fitting a power-law model to a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub model: PowerLawModel,
    /// Coefficient of determination of the fit, computed on log-viscosity.
    pub r_squared: f64,
    /// Per-point relative errors (mu_pred - mu_obs)/mu_obs, one per sweep point.
    pub residuals: Vec<f64>,
}

impl FitReport {
    /// Emit the report as `key=value` lines.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("k={:.17e}\n", self.model.k));
        s.push_str(&format!("n={:.17e}\n", self.model.n));
        s.push_str(&format!("gamma_min={:.17e}\n", self.model.gamma_min));
        s.push_str(&format!("gamma_max={:.17e}\n", self.model.gamma_max));
        s.push_str(&format!("r_squared={:.17e}\n", self.r_squared));
        s.push_str(&format!("points={}\n", self.residuals.len()));
        s
    }

    /// Emit the report as a one-row CSV table.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,n,gamma_min,gamma_max,r_squared,points")?;
        writeln!(
            w,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            self.model.k,
            self.model.n,
            self.model.gamma_min,
            self.model.gamma_max,
            self.r_squared,
            self.residuals.len()
        )
    }
}

/// Fit `(k, n)` to a sweep by linear least squares in log-log space.
///
/// The power law is exactly linear in logs (`ln mu = ln k + (n-1) ln gamma`),
/// which makes the fit deterministic and initialization-free. R^2 is computed
/// on log-viscosity. The fitted model gets the default regularization window.
pub fn fit_power_law(sweep: &RheometrySweep) -> Result<FitReport, RheologyError> {
    let pts = sweep.points();
    if pts.len() < 3 {
        return Err(RheologyError::DegenerateSweep(format!(
            "need at least 3 points, got {}",
            pts.len()
        )));
    }
    let span = pts.last().unwrap().shear_rate / pts[0].shear_rate;
    if span <= 1.0 {
        return Err(RheologyError::DegenerateSweep(
            "zero shear-rate span".into(),
        ));
    }

    let xs: Vec<f64> = pts.iter().map(|p| p.shear_rate.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.viscosity.ln()).collect();
    let m = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / m;
    let y_mean = ys.iter().sum::<f64>() / m;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    // span > 1 guarantees sxx > 0
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let k = intercept.exp();
    let n = slope + 1.0;
    let model = PowerLawModel::with_default_cutoffs(k, n)?;

    let predicted_log: Vec<f64> = xs.iter().map(|x| intercept + slope * x).collect();
    let observed: Vec<f64> = pts.iter().map(|p| p.viscosity).collect();
    let predicted: Vec<f64> = predicted_log.iter().map(|y| y.exp()).collect();
    let r2 = r_squared(&observed, &predicted)?;
    let residuals = observed
        .iter()
        .zip(&predicted)
        .map(|(o, p)| (p - o) / o)
        .collect();

    Ok(FitReport {
        model,
        r_squared: r2,
        residuals,
    })
}

/// Coefficient of determination `1 - SS_res/SS_tot`, computed in log space.
///
/// Returns exactly 1 when `predicted == observed`. Both sequences must be
/// positive and of equal nonzero length.
pub fn r_squared(observed: &[f64], predicted: &[f64]) -> Result<f64, RheologyError> {
    if observed.len() != predicted.len() || observed.is_empty() {
        return Err(RheologyError::LengthMismatch {
            observed: observed.len(),
            predicted: predicted.len(),
        });
    }
    if observed == predicted {
        return Ok(1.0);
    }
    let log_obs: Vec<f64> = observed.iter().map(|v| v.ln()).collect();
    let log_pred: Vec<f64> = predicted.iter().map(|v| v.ln()).collect();
    let mean = log_obs.iter().sum::<f64>() / log_obs.len() as f64;
    let ss_tot: f64 = log_obs.iter().map(|y| (y - mean) * (y - mean)).sum();
    let ss_res: f64 = log_obs
        .iter()
        .zip(&log_pred)
        .map(|(o, p)| (o - p) * (o - p))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}
