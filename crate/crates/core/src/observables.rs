//! Clustering observables and the energetic regime classifier.
//!
//! Regimes are read off the signs of the entropic and interaction energy
//! rates: aggregation concentrates mass at entropic cost, diffusion spreads
//! it at interaction cost, cooperative intervals lower both, and a quiescent
//! label covers rates inside the dead-band.

use crate::energy::EnergySample;
use crate::error::{Error, Result};
use crate::grid::DensityField;

/// Largest cell value `max_i rho_i`.
pub fn peak_height(field: &DensityField) -> f64 {
    field.max_value()
}

/// Second moment about the domain center, `sum_i x_i^2 rho_i dx`.
pub fn second_moment(field: &DensityField) -> f64 {
    let dx = field.grid().dx();
    field
        .grid()
        .centers()
        .iter()
        .zip(field.values())
        .map(|(x, r)| x * x * r)
        .sum::<f64>()
        * dx
}

/// Time-ordered energy samples recorded along one trajectory.
#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct EnergyLedger {
    samples: Vec<EnergySample>,
}

impl EnergyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Wraps samples, requiring strictly increasing times.
    pub fn from_samples(samples: Vec<EnergySample>) -> Result<Self> {
        if samples.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::InvalidConfig(
                "ledger samples must have strictly increasing times".into(),
            ));
        }
        Ok(Self { samples })
    }

    pub fn push(&mut self, sample: EnergySample) -> Result<()> {
        if let Some(last) = self.samples.last() {
            if sample.t <= last.t {
                return Err(Error::InvalidConfig(format!(
                    "ledger times must increase, got {} after {}",
                    sample.t, last.t
                )));
            }
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn samples(&self) -> &[EnergySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Largest increase of the total free energy between consecutive samples
    /// (nonpositive when the trajectory dissipates monotonically).
    pub fn max_energy_increase(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| w[1].total - w[0].total)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Regime label of one classified interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum RegimeLabel {
    Aggregation,
    Diffusion,
    Cooperative,
    Quiescent,
}

impl std::fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Aggregation => "Aggregation",
            Self::Diffusion => "Diffusion",
            Self::Cooperative => "Cooperative",
            Self::Quiescent => "Quiescent",
        };
        f.write_str(s)
    }
}

/// One labeled interval of a [`RegimeSegmentation`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub label: RegimeLabel,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// Contiguous, non-overlapping labeled intervals covering the ledger span.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RegimeSegmentation {
    pub segments: Vec<Segment>,
    pub rate_deadband: f64,
    pub min_duration: f64,
    /// Samples where both energy rates exceeded the dead-band upward, which
    /// contradicts dissipation beyond numerical error.
    pub anomalous_samples: usize,
}

impl RegimeSegmentation {
    /// Labels with quiescent intervals dropped and adjacent repeats merged:
    /// the regime sequence the trajectory traverses.
    pub fn non_quiescent(&self) -> Vec<Segment> {
        let mut out: Vec<Segment> = Vec::new();
        for seg in &self.segments {
            if seg.label == RegimeLabel::Quiescent {
                continue;
            }
            match out.last_mut() {
                Some(last) if last.label == seg.label => last.t_end = seg.t_end,
                _ => out.push(*seg),
            }
        }
        out
    }

    /// Transition times between consecutive non-quiescent regimes; when a
    /// quiescent gap separates them the midpoint of the gap is reported.
    pub fn transition_times(&self) -> Vec<f64> {
        self.non_quiescent()
            .windows(2)
            .map(|w| 0.5 * (w[0].t_end + w[1].t_start))
            .collect()
    }
}

/// Dead-band used when none is given: `1e-4` of the mean dissipation rate
/// over the ledger span.
pub fn default_rate_deadband(ledger: &EnergyLedger) -> f64 {
    let s = ledger.samples();
    if s.len() < 2 {
        return 0.0;
    }
    let first = s.first().unwrap();
    let last = s.last().unwrap();
    let span = last.t - first.t;
    if span <= 0.0 {
        return 0.0;
    }
    1e-4 * (first.total - last.total).max(0.0) / span
}

/// Splits a ledger into aggregation / diffusion / cooperative / quiescent
/// intervals from the signs of the entropic and interaction energy rates.
///
/// Rates are centered differences (one-sided at the ends). Per-sample labels
/// become segments with boundaries halfway between samples; interior segments
/// shorter than `min_duration` are merged into their longer neighbour (ties
/// merge backward). The first and last segments are kept even when short:
/// the initial transient of a trajectory is a reportable regime of its own.
pub fn classify_regimes(
    ledger: &EnergyLedger,
    rate_deadband: f64,
    min_duration: f64,
) -> Result<RegimeSegmentation> {
    let s = ledger.samples();
    if s.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "regime classification needs at least 3 samples, got {}",
            s.len()
        )));
    }
    if rate_deadband < 0.0 || min_duration < 0.0 {
        return Err(Error::InvalidConfig(
            "rate_deadband and min_duration must be nonnegative".into(),
        ));
    }

    let n = s.len();
    let rate = |f: &dyn Fn(&EnergySample) -> f64, i: usize| -> f64 {
        let (lo, hi) = if i == 0 {
            (0, 1)
        } else if i == n - 1 {
            (n - 2, n - 1)
        } else {
            (i - 1, i + 1)
        };
        (f(&s[hi]) - f(&s[lo])) / (s[hi].t - s[lo].t)
    };

    let mut anomalous = 0usize;
    let labels: Vec<RegimeLabel> = (0..n)
        .map(|i| {
            let r_ent = rate(&|e: &EnergySample| e.entropic, i);
            let r_int = rate(&|e: &EnergySample| e.interaction, i);
            let d = rate_deadband;
            if r_ent > d && r_int < -d {
                RegimeLabel::Aggregation
            } else if r_ent < -d && r_int > d {
                RegimeLabel::Diffusion
            } else if r_ent < -d && r_int < -d {
                RegimeLabel::Cooperative
            } else {
                if r_ent > d && r_int > d {
                    anomalous += 1;
                }
                RegimeLabel::Quiescent
            }
        })
        .collect();

    let mut segments = segments_from_labels(s, &labels);
    merge_short_segments(&mut segments, min_duration);

    Ok(RegimeSegmentation {
        segments,
        rate_deadband,
        min_duration,
        anomalous_samples: anomalous,
    })
}

fn segments_from_labels(samples: &[EnergySample], labels: &[RegimeLabel]) -> Vec<Segment> {
    let n = labels.len();
    let mut segments = Vec::new();
    let mut start_idx = 0;
    for i in 1..=n {
        if i == n || labels[i] != labels[start_idx] {
            let t_start = if start_idx == 0 {
                samples[0].t
            } else {
                0.5 * (samples[start_idx - 1].t + samples[start_idx].t)
            };
            let t_end = if i == n {
                samples[n - 1].t
            } else {
                0.5 * (samples[i - 1].t + samples[i].t)
            };
            segments.push(Segment {
                t_start,
                t_end,
                label: labels[start_idx],
            });
            start_idx = i;
        }
    }
    segments
}

fn merge_short_segments(segments: &mut Vec<Segment>, min_duration: f64) {
    loop {
        if segments.len() <= 2 {
            return;
        }
        // shortest interior segment below the threshold
        let candidate = (1..segments.len() - 1)
            .filter(|&i| segments[i].duration() < min_duration)
            .min_by(|&a, &b| {
                segments[a]
                    .duration()
                    .partial_cmp(&segments[b].duration())
                    .unwrap()
            });
        let Some(i) = candidate else { return };
        // ties merge backward
        let into = if segments[i - 1].duration() >= segments[i + 1].duration() {
            i - 1
        } else {
            i + 1
        };
        if into < i {
            segments[into].t_end = segments[i].t_end;
        } else {
            segments[into].t_start = segments[i].t_start;
        }
        segments.remove(i);
        // coalesce equal neighbours
        let mut k = 0;
        while k + 1 < segments.len() {
            if segments[k].label == segments[k + 1].label {
                segments[k].t_end = segments[k + 1].t_end;
                segments.remove(k + 1);
            } else {
                k += 1;
            }
        }
    }
}
