//! Time-series traces with floored weights and deterministic splits.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("trace '{label}' has mismatched column lengths")]
    LengthMismatch { label: String },
    #[error("trace '{label}' needs at least 4 points, got {len}")]
    TooShort { label: String, len: usize },
    #[error("trace '{label}' has non-increasing time at row {index}")]
    NonMonotonic { label: String, index: usize },
    #[error("trace '{label}' has no usable error scale (all observations zero)")]
    NoScale { label: String },
}

/// Deterministic train/hold split over point indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub hold: Vec<usize>,
    pub rule: String,
}

/// Every fourth point (indices congruent to `offset` mod 4) is held out.
pub fn split_every_fourth(n_points: usize, offset: usize) -> Split {
    assert!(offset < 4, "offset must be in 0..4");
    assert!(n_points >= 4, "need at least 4 points to split");
    let mut train = Vec::new();
    let mut hold = Vec::new();
    for i in 0..n_points {
        if i % 4 == offset {
            hold.push(i);
        } else {
            train.push(i);
        }
    }
    Split {
        train,
        hold,
        rule: format!("hold_every_4th offset {offset}"),
    }
}

/// Result of SEM flooring.
#[derive(Debug, Clone, PartialEq)]
pub struct FlooredSems {
    pub weights: Vec<f64>,
    pub floor: f64,
    pub used_fallback: bool,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Floor reported SEMs at a quarter of the median positive SEM:
/// `sigma_i -> max(sigma_i, 0.25 * median{sigma_i : sigma_i > 0})`.
///
/// When no positive SEM exists the floor falls back to 5% of the median
/// absolute observation and the result is flagged.
pub fn floor_sems(sems: &[f64], values: &[f64]) -> Result<FlooredSems, TraceError> {
    let mut positive: Vec<f64> = sems.iter().copied().filter(|&s| s > 0.0).collect();
    let (floor, used_fallback) = if positive.is_empty() {
        let mut mags: Vec<f64> = values.iter().map(|v| v.abs()).collect();
        let m = median(&mut mags);
        if m <= 0.0 {
            return Err(TraceError::NoScale {
                label: String::new(),
            });
        }
        (0.05 * m, true)
    } else {
        (0.25 * median(&mut positive), false)
    };
    let weights = sems.iter().map(|&s| s.max(floor)).collect();
    Ok(FlooredSems {
        weights,
        floor,
        used_fallback,
    })
}

/// Mean squared weighted residual over an index set.
pub fn wmse(residuals: &[f64], weights: &[f64], idx: &[usize]) -> f64 {
    assert!(!idx.is_empty(), "index set must be nonempty");
    idx.iter()
        .map(|&i| {
            let r = residuals[i] / weights[i];
            r * r
        })
        .sum::<f64>()
        / idx.len() as f64
}

/// Sum of squared weighted residuals over an index set.
pub fn chi_squared(residuals: &[f64], weights: &[f64], idx: &[usize]) -> f64 {
    idx.iter()
        .map(|&i| {
            let r = residuals[i] / weights[i];
            r * r
        })
        .sum()
}

/// One observed time series with floored weights and a train/hold split.
#[derive(Debug, Clone)]
pub struct Trace {
    pub label: String,
    /// Dose carried by this trace, used by dose-response embeddings.
    pub dose: Option<f64>,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Reported SEMs; zero marks a missing entry.
    pub sems: Vec<f64>,
    /// Floored weights, all at least `sigma_floor`.
    pub weights: Vec<f64>,
    pub sigma_floor: f64,
    pub floor_fallback: bool,
    pub split: Split,
}

impl Trace {
    pub fn new(
        label: impl Into<String>,
        times: Vec<f64>,
        values: Vec<f64>,
        sems: Vec<f64>,
        split_offset: usize,
    ) -> Result<Trace, TraceError> {
        let label = label.into();
        if times.len() != values.len() || times.len() != sems.len() {
            return Err(TraceError::LengthMismatch { label });
        }
        if times.len() < 4 {
            return Err(TraceError::TooShort {
                label,
                len: times.len(),
            });
        }
        for (i, w) in times.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(TraceError::NonMonotonic {
                    label,
                    index: i + 1,
                });
            }
        }
        let floored = floor_sems(&sems, &values).map_err(|e| match e {
            TraceError::NoScale { .. } => TraceError::NoScale {
                label: label.clone(),
            },
            other => other,
        })?;
        let split = split_every_fourth(times.len(), split_offset);
        Ok(Trace {
            label,
            dose: None,
            times,
            values,
            sems,
            weights: floored.weights,
            sigma_floor: floored.floor,
            floor_fallback: floored.used_fallback,
            split,
        })
    }

    pub fn with_dose(mut self, dose: f64) -> Trace {
        self.dose = Some(dose);
        self
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}
