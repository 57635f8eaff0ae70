//! Uniformly sampled multichannel time series.

use crate::frames::AlphaBetaVector;
use crate::{Error, Result};

/// Channel names used for series in the stationary frame.
pub const ALPHA_BETA_CHANNELS: [&str; 3] = ["valpha", "vbeta", "vgamma"];
/// Channel names used for phase-domain series.
pub const ABC_CHANNELS: [&str; 3] = ["va", "vb", "vc"];

/// Samples of one or more named channels on the grid `t0 + k·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSeries {
    t0: f64,
    dt: f64,
    names: Vec<String>,
    channels: Vec<Vec<f64>>,
}

impl UniformSeries {
    /// Builds a series, checking `dt > 0`, equal channel lengths and finite samples.
    pub fn new<S: Into<String>>(t0: f64, dt: f64, channels: Vec<(S, Vec<f64>)>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidSeries(format!("dt must be positive and finite, got {dt}")));
        }
        if !t0.is_finite() {
            return Err(Error::InvalidSeries("t0 must be finite".into()));
        }
        let (names, channels): (Vec<String>, Vec<Vec<f64>>) = channels.into_iter().map(|(n, c)| (n.into(), c)).unzip();
        if let Some(first) = channels.first() {
            let len = first.len();
            if let Some(bad) = channels.iter().position(|c| c.len() != len) {
                return Err(Error::InvalidSeries(format!(
                    "channel '{}' has {} samples, expected {len}",
                    names[bad],
                    channels[bad].len()
                )));
            }
        }
        for (name, ch) in names.iter().zip(&channels) {
            if let Some(k) = ch.iter().position(|x| !x.is_finite()) {
                return Err(Error::InvalidSeries(format!("non-finite sample {k} in channel '{name}'")));
            }
        }
        Ok(Self { t0, dt, names, channels })
    }

    /// Builds a three-channel αβγ series from vectors.
    pub fn from_vectors(t0: f64, dt: f64, points: &[AlphaBetaVector]) -> Result<Self> {
        let alpha = points.iter().map(|p| p.alpha).collect();
        let beta = points.iter().map(|p| p.beta).collect();
        let gamma = points.iter().map(|p| p.gamma).collect();
        Self::new(
            t0,
            dt,
            vec![(ALPHA_BETA_CHANNELS[0], alpha), (ALPHA_BETA_CHANNELS[1], beta), (ALPHA_BETA_CHANNELS[2], gamma)],
        )
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// Time of the last sample (equal to `t0` for an empty series).
    pub fn end_time(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    pub fn channel(&self, idx: usize) -> &[f64] {
        &self.channels[idx]
    }

    pub fn channel_by_name(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.channels[i].as_slice())
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    /// Index of the sample nearest to `t`, or `None` when `t` is outside the span.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        if self.is_empty() {
            return None;
        }
        let k = ((t - self.t0) / self.dt).round();
        (k >= 0.0 && (k as usize) < self.len()).then_some(k as usize)
    }

    /// Applies `f` to every sample of every channel, keeping the time base.
    pub fn map_samples(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            t0: self.t0,
            dt: self.dt,
            names: self.names.clone(),
            channels: self.channels.iter().map(|c| c.iter().map(|&x| f(x)).collect()).collect(),
        }
    }

    /// Checks that the series has exactly three channels and returns them.
    pub(crate) fn three_channels(&self) -> Result<[&[f64]; 3]> {
        if self.channels.len() != 3 {
            return Err(Error::ChannelCount { expected: 3, found: self.channels.len() });
        }
        Ok([&self.channels[0], &self.channels[1], &self.channels[2]])
    }

    /// Sample `k` of a three-channel series as a vector.
    pub fn vector(&self, k: usize) -> AlphaBetaVector {
        AlphaBetaVector::new(self.channels[0][k], self.channels[1][k], self.channels[2][k])
    }

    /// All samples of a three-channel series as vectors.
    pub fn vectors(&self) -> Result<Vec<AlphaBetaVector>> {
        let [a, b, c] = self.three_channels()?;
        Ok(a.iter().zip(b).zip(c).map(|((&a, &b), &c)| AlphaBetaVector::new(a, b, c)).collect())
    }

    /// Replaces channel samples, keeping names and time base.
    pub(crate) fn with_channels(&self, channels: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(channels.len(), self.names.len());
        Self { t0: self.t0, dt: self.dt, names: self.names.clone(), channels }
    }

    pub(crate) fn channels_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.channels
    }
}
