//! Signal sets: QPSK, uniform 16-QAM and the hierarchical (non-uniform) 16-QAM.
//!
//! The hierarchical 16-QAM is two superposed QPSKs. The high-priority (HP) pair
//! of bits picks the quadrant; the low-priority (LP) pair picks the point inside
//! it. Per axis the coordinates are `±(d_h + d_l) ± d_l`, i.e. `±d_h` (inner)
//! and `±(d_h + 2 d_l)` (outer), so that
//!
//! - `2 d_h` is the distance between the closest points carrying different HP bits,
//! - `2 d_l` is the spacing inside a quadrant,
//! - `α = d_h / d_l`; `α = 1` is the uniform 16-QAM.
//!
//! Labels are MSB-first. For 16 points, bit 0 is set when I < 0, bit 1 when
//! Q < 0, bit 2 when the point is on the inner I column of its quadrant and
//! bit 3 when it is on the inner Q row. Both bit pairs are therefore Gray
//! coded, and the LP pair is mirrored from quadrant to quadrant. Point `i`
//! carries label `i`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Modulations available in the modcod table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Modulation {
    Qpsk,
    Uniform16Qam,
    Hierarchical16Qam { alpha: f64 },
}

impl Modulation {
    pub fn name(&self) -> &'static str {
        match self {
            Modulation::Qpsk => "QPSK",
            Modulation::Uniform16Qam => "16QAM",
            Modulation::Hierarchical16Qam { .. } => "HIER16QAM",
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            Modulation::Hierarchical16Qam { alpha } => Some(*alpha),
            _ => None,
        }
    }

    pub fn bits_per_symbol(&self) -> u32 {
        match self {
            Modulation::Qpsk => 2,
            _ => 4,
        }
    }

    pub fn constellation(&self) -> Result<Constellation> {
        match *self {
            Modulation::Qpsk => Ok(build_reference(ReferenceModulation::Qpsk)),
            Modulation::Uniform16Qam => Ok(build_reference(ReferenceModulation::Uniform16Qam)),
            Modulation::Hierarchical16Qam { alpha } => build_hierarchical_16qam(alpha),
        }
    }

    /// Parses the table representation: a name plus an optional α.
    pub fn from_parts(name: &str, alpha: Option<f64>) -> Result<Self> {
        match (name, alpha) {
            ("QPSK", None) => Ok(Modulation::Qpsk),
            ("16QAM", None) => Ok(Modulation::Uniform16Qam),
            ("HIER16QAM", Some(alpha)) => {
                check_alpha(alpha)?;
                Ok(Modulation::Hierarchical16Qam { alpha })
            }
            _ => Err(Error::InvalidParameter(format!(
                "unknown modulation {name:?} (alpha {alpha:?})"
            ))),
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modulation::Hierarchical16Qam { alpha } => write!(f, "HIER16QAM(a={alpha})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Standard (non-hierarchical) constellations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceModulation {
    Qpsk,
    Uniform16Qam,
}

impl FromStr for ReferenceModulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace(['-', '_'], "").as_str() {
            "QPSK" => Ok(Self::Qpsk),
            "16QAM" | "UNIFORM16QAM" => Ok(Self::Uniform16Qam),
            _ => Err(Error::InvalidParameter(format!(
                "unknown modulation id {s:?}"
            ))),
        }
    }
}

/// A labeled complex signal set normalized to unit mean symbol energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    labels: Vec<u32>,
    bits_per_symbol: u32,
    alpha: Option<f64>,
}

impl Constellation {
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.bits_per_symbol
    }

    /// The constellation parameter, `None` for reference modulations.
    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// True for 16-point sets that carry an HP and an LP bit pair.
    pub fn is_layered(&self) -> bool {
        self.bits_per_symbol == 4
    }

    /// Label of point `i` as an MSB-first bit string.
    pub fn label_string(&self, i: usize) -> String {
        format!(
            "{:0width$b}",
            self.labels[i],
            width = self.bits_per_symbol as usize
        )
    }

    /// The HP bit pair of a 16-point label.
    pub fn hp_bits(label: u32) -> u32 {
        label >> 2
    }

    /// The LP bit pair of a 16-point label.
    pub fn lp_bits(label: u32) -> u32 {
        label & 0b11
    }

    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    pub fn min_distance(&self) -> f64 {
        self.min_distance_where(|_, _| true)
    }

    /// Minimum distance between points whose HP bits differ, i.e. `2 d_h`.
    pub fn hp_boundary_distance(&self) -> f64 {
        self.min_distance_where(|a, b| Self::hp_bits(a) != Self::hp_bits(b))
    }

    /// Minimum distance between points sharing HP bits, i.e. `2 d_l`.
    pub fn in_quadrant_distance(&self) -> f64 {
        self.min_distance_where(|a, b| Self::hp_bits(a) == Self::hp_bits(b))
    }

    /// `d_h / d_l` measured on the geometry.
    pub fn alpha_from_geometry(&self) -> f64 {
        self.hp_boundary_distance() / self.in_quadrant_distance()
    }

    /// HP-to-LP energy ratio `((d_h + d_l) / d_l)²` measured on the geometry.
    pub fn stream_energy_ratio(&self) -> f64 {
        let d_l = self.in_quadrant_distance() / 2.0;
        // Quadrant centroid sits at (d_h + d_l) on both axes.
        let centroid = self
            .points
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| Self::hp_bits(l) == 0)
            .map(|(p, _)| *p)
            .sum::<Complex64>()
            / 4.0;
        (centroid.re / d_l).powi(2)
    }

    fn min_distance_where(&self, keep: impl Fn(u32, u32) -> bool) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.points.len() {
            for j in i + 1..self.points.len() {
                if keep(self.labels[i], self.labels[j]) {
                    best = best.min((self.points[i] - self.points[j]).norm());
                }
            }
        }
        best
    }

    /// Writes `label,re,im` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["label", "re", "im"])?;
        for (i, p) in self.points.iter().enumerate() {
            w.write_record([self.label_string(i), p.re.to_string(), p.im.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "constellation parameter must be positive and finite, got {alpha}"
        )))
    }
}

/// Builds the hierarchical 16-QAM with constellation parameter `alpha`.
pub fn build_hierarchical_16qam(alpha: f64) -> Result<Constellation> {
    check_alpha(alpha)?;
    let mut c = layered_16qam(alpha);
    c.alpha = Some(alpha);
    Ok(c)
}

fn layered_16qam(alpha: f64) -> Constellation {
    let d_l = 1.0;
    let d_h = alpha;
    let inner = d_h;
    let outer = d_h + 2.0 * d_l;
    let scale = (inner * inner + outer * outer).sqrt().recip();
    let points = (0..16u32)
        .map(|label| {
            let sign_i = if label & 0b1000 != 0 { -1.0 } else { 1.0 };
            let sign_q = if label & 0b0100 != 0 { -1.0 } else { 1.0 };
            let mag_i = if label & 0b0010 != 0 { inner } else { outer };
            let mag_q = if label & 0b0001 != 0 { inner } else { outer };
            Complex64::new(sign_i * mag_i, sign_q * mag_q) * scale
        })
        .collect();
    Constellation {
        points,
        labels: (0..16).collect(),
        bits_per_symbol: 4,
        alpha: None,
    }
}

/// Builds a Gray-labeled, unit-energy reference constellation.
pub fn build_reference(id: ReferenceModulation) -> Constellation {
    match id {
        ReferenceModulation::Qpsk => {
            let a = std::f64::consts::FRAC_1_SQRT_2;
            let points = (0..4u32)
                .map(|label| {
                    let i = if label & 0b10 != 0 { -a } else { a };
                    let q = if label & 0b01 != 0 { -a } else { a };
                    Complex64::new(i, q)
                })
                .collect();
            Constellation {
                points,
                labels: (0..4).collect(),
                bits_per_symbol: 2,
                alpha: None,
            }
        }
        ReferenceModulation::Uniform16Qam => layered_16qam(1.0),
    }
}

/// Fractions of the symbol energy carried by the HP and LP streams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySplit {
    pub hp_fraction: f64,
    pub lp_fraction: f64,
}

/// Energy split for constellation parameter `alpha`: `E_hp / E_lp = (1 + α)²`.
pub fn energy_split(alpha: f64) -> Result<EnergySplit> {
    check_alpha(alpha)?;
    let ratio = (1.0 + alpha).powi(2);
    Ok(EnergySplit {
        hp_fraction: ratio / (1.0 + ratio),
        lp_fraction: 1.0 / (1.0 + ratio),
    })
}
