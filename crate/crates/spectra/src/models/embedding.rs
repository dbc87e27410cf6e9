//! Input feature maps: domain normalization, periodic trigonometric
//! embedding, and fixed Fourier features.
//!
//! Features are computed as jets so axis derivatives flow through the
//! embedding by the chain rule. Normalization happens in the jet seed:
//! the scale coefficient carries d(normalized)/d(physical), so network
//! derivatives come out in physical units.

use crate::ndcore::Jet;
use serde::{Deserialize, Serialize};

/// Affine map from physical per-axis bounds onto `[−1, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputMap {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl InputMap {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        InputMap { lo, hi }
    }

    /// Normalized coordinate and chain-rule scale for axis `j`.
    #[inline]
    pub fn normalize(&self, j: usize, x: f64) -> (f64, f64) {
        let w = self.hi[j] - self.lo[j];
        (2.0 * (x - self.lo[j]) / w - 1.0, 2.0 / w)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
}

/// Input embedding variants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Embedding {
    /// Normalized coordinates passed straight through.
    None,
    /// Per-axis `{cos(2πm x/P), sin(2πm x/P)}`, m = 1..M; axes with
    /// `None` period pass through as normalized coordinates. Output is
    /// exactly periodic in each embedded axis by construction.
    PeriodicTrig {
        modes: usize,
        periods: Vec<Option<f64>>,
    },
    /// `{cos(2π b·s), sin(2π b·s)}` over normalized coords for each row
    /// `b` of a fixed frequency matrix.
    FourierFeatures { frequencies: Vec<Vec<f64>> },
}

impl Embedding {
    /// Number of features produced for `input_dim` coordinates.
    pub fn feature_dim(&self, input_dim: usize) -> usize {
        match self {
            Embedding::None => input_dim,
            Embedding::PeriodicTrig { modes, periods } => periods
                .iter()
                .map(|p| if p.is_some() { 2 * modes } else { 1 })
                .sum(),
            Embedding::FourierFeatures { frequencies } => 2 * frequencies.len(),
        }
    }

    /// Compute feature jets at physical point `x`, differentiating along
    /// `axis` (or none) to the given order.
    pub fn features(
        &self,
        map: Option<&InputMap>,
        x: &[f64],
        axis: Option<usize>,
        order: usize,
    ) -> Vec<Jet> {
        // Physical-coordinate jets: the diff axis is seeded with scale 1.
        let phys: Vec<Jet> = x
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                if Some(j) == axis {
                    Jet::variable(v, 1.0, order)
                } else {
                    Jet::constant(v, order)
                }
            })
            .collect();
        // Normalized-coordinate jets carry the affine chain-rule scale.
        let norm: Vec<Jet> = x
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let (s, scale) = match map {
                    Some(m) => m.normalize(j, v),
                    None => (v, 1.0),
                };
                if Some(j) == axis {
                    Jet::variable(s, scale, order)
                } else {
                    Jet::constant(s, order)
                }
            })
            .collect();

        match self {
            Embedding::None => norm,
            Embedding::PeriodicTrig { modes, periods } => {
                let mut feats = Vec::with_capacity(self.feature_dim(x.len()));
                for (j, period) in periods.iter().enumerate() {
                    match period {
                        Some(p) => {
                            for m in 1..=*modes {
                                let arg = phys[j].scale(2.0 * std::f64::consts::PI * m as f64 / p);
                                feats.push(arg.cos());
                                feats.push(arg.sin());
                            }
                        }
                        None => feats.push(norm[j]),
                    }
                }
                feats
            }
            Embedding::FourierFeatures { frequencies } => {
                let mut feats = Vec::with_capacity(2 * frequencies.len());
                for row in frequencies {
                    let mut arg = Jet::constant(0.0, order);
                    for (j, &b) in row.iter().enumerate() {
                        arg = arg.add(&norm[j].scale(2.0 * std::f64::consts::PI * b));
                    }
                    feats.push(arg.cos());
                    feats.push(arg.sin());
                }
                feats
            }
        }
    }
}

/// Periodic trigonometric feature map as plain values (all axes embedded).
pub fn embed_periodic(x: &[f64], modes: usize, periods: &[f64]) -> Vec<f64> {
    assert!(periods.iter().all(|&p| p > 0.0), "periods must be positive");
    let emb = Embedding::PeriodicTrig {
        modes,
        periods: periods.iter().map(|&p| Some(p)).collect(),
    };
    emb.features(None, x, None, 0)
        .iter()
        .map(|j| j.value())
        .collect()
}
