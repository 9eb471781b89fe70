//! Decoding thresholds and the modcod table.
//!
//! A threshold is derived from a QPSK reference operating point in three steps:
//!
//! 1. take the QPSK Es/N0 at which the code of rate `r` reaches the target
//!    BER (10⁻⁵),
//! 2. evaluate the normalized QPSK capacity there, giving a target `R̃`,
//! 3. invert the normalized capacity of the wanted constellation/stream at `R̃`.
//!
//! Only the rate-1/5 reference is available in closed literature form here, so
//! the shipped reference file was reconstructed from the published
//! hierarchical threshold grid (see [`reconstruct_references`]).

use std::cmp::Ordering;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{CapacityCurve, IntegrationSpec, StreamSelector};
use crate::constellation::{
    build_hierarchical_16qam, build_reference, Constellation, Modulation, ReferenceModulation,
};
use crate::{Error, Result};

/// Cells further than this from the row-consensus threshold are anomalous, dB.
pub const ANOMALY_THRESHOLD_DB: f64 = 0.5;
/// A row needs at least this many consistent cells to yield a reference.
pub const MIN_CONSISTENT_CELLS: usize = 3;
/// Target bit error rate the reference points refer to.
pub const TARGET_BER: f64 = 1e-5;

/// Constellation parameters of the published hierarchical grid.
pub const PUBLISHED_ALPHAS: [f64; 5] = [4.0, 2.0, 1.0, 0.8, 0.5];

const SHIPPED_REFERENCES: &str = include_str!("../data/qpsk_references.csv");

/// A code rate `num/den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CodingRate {
    num: u32,
    den: u32,
}

/// The turbo-code rates of the physical layer.
pub const CODING_RATES: [CodingRate; 8] = [
    CodingRate::new(1, 5),
    CodingRate::new(2, 9),
    CodingRate::new(1, 4),
    CodingRate::new(2, 7),
    CodingRate::new(1, 3),
    CodingRate::new(2, 5),
    CodingRate::new(1, 2),
    CodingRate::new(2, 3),
];

impl CodingRate {
    pub const fn new(num: u32, den: u32) -> Self {
        Self { num, den }
    }

    pub fn num(&self) -> u32 {
        self.num
    }

    pub fn den(&self) -> u32 {
        self.den
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Ord for CodingRate {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u64 * other.den as u64).cmp(&(other.num as u64 * self.den as u64))
    }
}

impl PartialOrd for CodingRate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CodingRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for CodingRate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad coding rate {s:?}"));
        let (n, d) = s.trim().split_once('/').ok_or_else(bad)?;
        let num: u32 = n.trim().parse().map_err(|_| bad())?;
        let den: u32 = d.trim().parse().map_err(|_| bad())?;
        if num == 0 || den == 0 || num > den {
            return Err(bad());
        }
        Ok(Self::new(num, den))
    }
}

impl Serialize for CodingRate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CodingRate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReferenceSource {
    Published,
    Datafile,
    Reconstructed,
}

/// QPSK operating point of one code rate at the target BER.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub coding_rate: CodingRate,
    pub qpsk_es_n0_db: f64,
    pub source: ReferenceSource,
}

#[derive(Serialize, Deserialize)]
struct ReferenceRecord {
    coding_rate: CodingRate,
    qpsk_es_n0_db: f64,
}

/// Reads `coding_rate,qpsk_es_n0_db` rows.
pub fn read_references<R: Read>(reader: R) -> Result<Vec<ReferencePoint>> {
    let mut refs = Vec::new();
    for rec in csv::Reader::from_reader(reader).deserialize() {
        let rec: ReferenceRecord = rec?;
        refs.push(ReferencePoint {
            coding_rate: rec.coding_rate,
            qpsk_es_n0_db: rec.qpsk_es_n0_db,
            source: ReferenceSource::Datafile,
        });
    }
    refs.sort_by_key(|r| r.coding_rate);
    for w in refs.windows(2) {
        if w[0].coding_rate == w[1].coding_rate {
            return Err(Error::Configuration(format!(
                "duplicate reference for rate {}",
                w[0].coding_rate
            )));
        }
        if w[1].qpsk_es_n0_db <= w[0].qpsk_es_n0_db {
            return Err(Error::Configuration(format!(
                "reference Es/N0 must increase with coding rate ({} at {} dB, {} at {} dB)",
                w[0].coding_rate, w[0].qpsk_es_n0_db, w[1].coding_rate, w[1].qpsk_es_n0_db
            )));
        }
    }
    Ok(refs)
}

pub fn write_references<W: Write>(writer: W, refs: &[ReferencePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in refs {
        w.serialize(ReferenceRecord {
            coding_rate: r.coding_rate,
            qpsk_es_n0_db: r.qpsk_es_n0_db,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// The reference operating points shipped with the crate.
pub fn shipped_references() -> Vec<ReferencePoint> {
    read_references(SHIPPED_REFERENCES.as_bytes()).expect("shipped reference file is valid")
}

/// One published hierarchical threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedCell {
    pub coding_rate: CodingRate,
    pub alpha: f64,
    pub stream: StreamSelector,
    pub threshold_db: f64,
}

/// A grid of published HP/LP thresholds, one row per coding rate.
#[derive(Debug, Clone, PartialEq)]
pub struct PublishedGrid {
    pub cells: Vec<PublishedCell>,
}

impl PublishedGrid {
    /// DVB-SH hierarchical 16-QAM thresholds (dB), pilot loss already removed.
    /// Columns per row: HP, LP for α = 4, 2, 1, 0.8, 0.5.
    pub fn dvb_sh_hierarchical() -> Self {
        const ROWS: [[f64; 10]; 8] = [
            [-3.6, 10.3, -3.2, 6.2, -2.5, 3.7, -2.1, 3.2, -1.4, 2.6],
            [-3.1, 10.8, -2.6, 6.8, -1.9, 4.1, -1.6, 3.6, -0.8, 2.9],
            [-2.5, 11.4, -2.0, 7.3, -1.2, 4.6, -0.9, 4.1, 0.0, 3.4],
            [-1.8, 12.1, -1.3, 8.0, -0.4, 5.2, 0.0, 4.7, 0.9, 3.9],
            [-0.9, 12.9, -0.4, 8.8, 0.7, 6.0, 1.1, 5.4, 2.2, 4.6],
            [0.2, 14.0, 2.0, 6.8, 9.9, 6.9, 2.5, 6.3, 3.8, 5.4],
            [1.6, 15.3, 7.3, 11.3, 3.7, 8.1, 4.4, 7.5, 6.2, 6.5],
            [3.9, 17.5, 4.9, 13.4, 7.0, 10.2, 8.1, 9.5, 11.0, 8.4],
        ];
        let mut cells = Vec::with_capacity(80);
        for (rate, row) in CODING_RATES.iter().zip(ROWS) {
            for (k, alpha) in PUBLISHED_ALPHAS.iter().enumerate() {
                for (stream, value) in [
                    (StreamSelector::Hp, row[2 * k]),
                    (StreamSelector::Lp, row[2 * k + 1]),
                ] {
                    cells.push(PublishedCell {
                        coding_rate: *rate,
                        alpha: *alpha,
                        stream,
                        threshold_db: value,
                    });
                }
            }
        }
        Self { cells }
    }

    /// Distinct coding rates, ascending.
    pub fn rates(&self) -> Vec<CodingRate> {
        let mut rates: Vec<_> = self.cells.iter().map(|c| c.coding_rate).collect();
        rates.sort();
        rates.dedup();
        rates
    }

    pub fn row(&self, rate: CodingRate) -> impl Iterator<Item = &PublishedCell> {
        self.cells.iter().filter(move |c| c.coding_rate == rate)
    }

    pub fn get(&self, rate: CodingRate, alpha: f64, stream: StreamSelector) -> Option<f64> {
        self.row(rate)
            .find(|c| c.alpha == alpha && c.stream == stream)
            .map(|c| c.threshold_db)
    }
}

/// A published cell inconsistent with the rest of its row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anomaly {
    pub coding_rate: CodingRate,
    pub alpha: f64,
    pub stream: StreamSelector,
    pub published_db: f64,
    /// Threshold implied by the row's consensus normalized capacity.
    pub implied_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub references: Vec<ReferencePoint>,
    pub anomalies: Vec<Anomaly>,
}

impl Reconstruction {
    pub fn is_anomalous(&self, rate: CodingRate, alpha: f64, stream: StreamSelector) -> bool {
        self.anomalies
            .iter()
            .any(|a| a.coding_rate == rate && a.alpha == alpha && a.stream == stream)
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn stream_curve<'a>(
    c: &'a Constellation,
    stream: StreamSelector,
    spec: &IntegrationSpec,
) -> Result<CapacityCurve<'a>> {
    CapacityCurve::new(c, stream, spec)
}

/// Recovers the QPSK reference operating points from a published grid.
///
/// Per row, every cell is mapped to the normalized capacity at its published
/// threshold; the median is the row consensus. Cells whose threshold differs
/// from the consensus-implied one by more than [`ANOMALY_THRESHOLD_DB`] are
/// reported and left out of the final median.
pub fn reconstruct_references(
    grid: &PublishedGrid,
    spec: &IntegrationSpec,
) -> Result<Reconstruction> {
    let rows: Vec<Result<(ReferencePoint, Vec<Anomaly>)>> = grid
        .rates()
        .into_par_iter()
        .map(|rate| reconstruct_row(grid, rate, spec))
        .collect();
    let mut references = Vec::new();
    let mut anomalies = Vec::new();
    for row in rows {
        let (r, a) = row?;
        references.push(r);
        anomalies.extend(a);
    }
    Ok(Reconstruction {
        references,
        anomalies,
    })
}

fn reconstruct_row(
    grid: &PublishedGrid,
    rate: CodingRate,
    spec: &IntegrationSpec,
) -> Result<(ReferencePoint, Vec<Anomaly>)> {
    let fail = |reason: String| Error::ReconstructionFailed {
        rate: rate.to_string(),
        reason,
    };
    let cells: Vec<&PublishedCell> = grid.row(rate).collect();
    let constellations = cells
        .iter()
        .map(|c| build_hierarchical_16qam(c.alpha))
        .collect::<Result<Vec<_>>>()?;
    let curves = cells
        .iter()
        .zip(&constellations)
        .map(|(cell, c)| stream_curve(c, cell.stream, spec))
        .collect::<Result<Vec<_>>>()?;
    let normalized: Vec<f64> = cells
        .iter()
        .zip(&curves)
        .map(|(cell, curve)| curve.normalized(cell.threshold_db))
        .collect();
    let consensus = median(&mut normalized.clone());

    let mut anomalies = Vec::new();
    let mut consistent = Vec::new();
    for ((cell, curve), &value) in cells.iter().zip(&curves).zip(&normalized) {
        let implied = curve.inverse(consensus)?;
        if (implied - cell.threshold_db).abs() > ANOMALY_THRESHOLD_DB {
            anomalies.push(Anomaly {
                coding_rate: rate,
                alpha: cell.alpha,
                stream: cell.stream,
                published_db: cell.threshold_db,
                implied_db: implied,
            });
        } else {
            consistent.push(value);
        }
    }
    if consistent.len() < MIN_CONSISTENT_CELLS {
        return Err(fail(format!(
            "only {} consistent cells (need {MIN_CONSISTENT_CELLS})",
            consistent.len()
        )));
    }
    let target = median(&mut consistent);
    let qpsk = build_reference(ReferenceModulation::Qpsk);
    let qpsk_es_n0_db = stream_curve(&qpsk, StreamSelector::Full, spec)?.inverse(target)?;
    Ok((
        ReferencePoint {
            coding_rate: rate,
            qpsk_es_n0_db,
            source: ReferenceSource::Reconstructed,
        },
        anomalies,
    ))
}

/// Normalized QPSK capacity at the reference operating point (`R̃`).
pub fn reference_target(reference: &ReferencePoint, spec: &IntegrationSpec) -> Result<f64> {
    let qpsk = build_reference(ReferenceModulation::Qpsk);
    Ok(stream_curve(&qpsk, StreamSelector::Full, spec)?.normalized(reference.qpsk_es_n0_db))
}

/// Decoding threshold (dB) of stream `s` of `c` for the code of `reference`.
pub fn derive_threshold(
    c: &Constellation,
    s: StreamSelector,
    coding_rate: CodingRate,
    reference: &ReferencePoint,
    spec: &IntegrationSpec,
) -> Result<f64> {
    if reference.coding_rate != coding_rate {
        return Err(Error::InvalidParameter(format!(
            "reference is for rate {}, asked for {coding_rate}",
            reference.coding_rate
        )));
    }
    let target = reference_target(reference, spec)?;
    stream_curve(c, s, spec)?.inverse(target)
}

/// A modulation/stream/code-rate combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModCod {
    pub modulation: Modulation,
    pub stream: StreamSelector,
    pub coding_rate: CodingRate,
    /// Useful bits per symbol carried by the stream.
    pub spectral_rate: f64,
    pub threshold_db: f64,
}

impl ModCod {
    pub fn alpha(&self) -> Option<f64> {
        self.modulation.alpha()
    }

    /// Short human-readable tag, e.g. `16QAM 1/2` or `HIER16QAM(a=1) HP 2/5`.
    pub fn tag(&self) -> String {
        match self.stream {
            StreamSelector::Full => format!("{} {}", self.modulation, self.coding_rate),
            s => format!("{} {} {}", self.modulation, s, self.coding_rate),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModCodTable {
    pub entries: Vec<ModCod>,
    /// Offset already added to every threshold.
    pub pilot_offset_db: f64,
}

#[derive(Serialize, Deserialize)]
struct ModCodRecord {
    modulation: String,
    alpha: Option<f64>,
    stream: String,
    coding_rate: CodingRate,
    spectral_rate: f64,
    threshold_db: f64,
}

impl ModCodTable {
    /// Single-stream entries (QPSK and uniform 16-QAM).
    pub fn full_entries(&self) -> impl Iterator<Item = &ModCod> {
        self.entries
            .iter()
            .filter(|e| e.stream == StreamSelector::Full)
    }

    /// Constellation parameters of the hierarchical entries, in table order.
    pub fn alphas(&self) -> Vec<f64> {
        let mut alphas: Vec<f64> = Vec::new();
        for a in self.entries.iter().filter_map(|e| e.alpha()) {
            if !alphas.contains(&a) {
                alphas.push(a);
            }
        }
        alphas
    }

    /// Entries of one hierarchical stream, by ascending coding rate.
    pub fn stream_entries(&self, alpha: f64, stream: StreamSelector) -> Vec<&ModCod> {
        let mut v: Vec<&ModCod> = self
            .entries
            .iter()
            .filter(|e| e.alpha() == Some(alpha) && e.stream == stream)
            .collect();
        v.sort_by_key(|e| e.coding_rate);
        v
    }

    /// Highest-rate entry of a hierarchical stream decodable at `snr_db`.
    pub fn best_stream_modcod(
        &self,
        alpha: f64,
        stream: StreamSelector,
        snr_db: f64,
    ) -> Option<&ModCod> {
        self.stream_entries(alpha, stream)
            .into_iter()
            .filter(|e| e.threshold_db <= snr_db)
            .max_by_key(|e| e.coding_rate)
    }

    pub fn find(
        &self,
        modulation: Modulation,
        stream: StreamSelector,
        rate: CodingRate,
    ) -> Option<&ModCod> {
        self.entries
            .iter()
            .find(|e| e.modulation == modulation && e.stream == stream && e.coding_rate == rate)
    }

    /// Groups whose thresholds do not strictly increase with coding rate.
    pub fn monotonicity_violations(&self) -> Vec<(Modulation, StreamSelector, CodingRate)> {
        let mut keys: Vec<(Modulation, StreamSelector)> = Vec::new();
        for e in &self.entries {
            if !keys.contains(&(e.modulation, e.stream)) {
                keys.push((e.modulation, e.stream));
            }
        }
        let mut bad = Vec::new();
        for (m, s) in keys {
            let mut group: Vec<&ModCod> = self
                .entries
                .iter()
                .filter(|e| e.modulation == m && e.stream == s)
                .collect();
            group.sort_by_key(|e| e.coding_rate);
            for w in group.windows(2) {
                if w[1].threshold_db <= w[0].threshold_db {
                    bad.push((m, s, w[1].coding_rate));
                }
            }
        }
        bad
    }

    /// Writes `modulation,alpha,stream,coding_rate,spectral_rate,threshold_db` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for e in &self.entries {
            w.serialize(ModCodRecord {
                modulation: e.modulation.name().to_string(),
                alpha: e.alpha(),
                stream: e.stream.name().to_string(),
                coding_rate: e.coding_rate,
                spectral_rate: e.spectral_rate,
                threshold_db: e.threshold_db,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a table written by [`write_csv`](Self::write_csv). Thresholds are
    /// taken as final, so the returned table reports a zero pilot offset.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut entries = Vec::new();
        for rec in csv::Reader::from_reader(reader).deserialize() {
            let rec: ModCodRecord = rec?;
            entries.push(ModCod {
                modulation: Modulation::from_parts(&rec.modulation, rec.alpha)?,
                stream: rec.stream.parse()?,
                coding_rate: rec.coding_rate,
                spectral_rate: rec.spectral_rate,
                threshold_db: rec.threshold_db,
            });
        }
        if entries.is_empty() {
            return Err(Error::Configuration("modcod table is empty".into()));
        }
        Ok(Self {
            entries,
            pilot_offset_db: 0.0,
        })
    }
}

/// Builds the full modcod table: QPSK and 16-QAM single-stream entries plus
/// HP and LP entries for every `alpha`, for all eight coding rates.
pub fn build_modcod_table(
    alphas: &[f64],
    references: &[ReferencePoint],
    pilot_offset_db: f64,
    spec: &IntegrationSpec,
) -> Result<ModCodTable> {
    spec.validate()?;
    let mut refs = Vec::with_capacity(CODING_RATES.len());
    for rate in CODING_RATES {
        let r = references
            .iter()
            .find(|r| r.coding_rate == rate)
            .ok_or_else(|| {
                Error::Configuration(format!("no reference operating point for rate {rate}"))
            })?;
        refs.push(*r);
    }

    let mut jobs: Vec<(Modulation, StreamSelector)> = vec![
        (Modulation::Qpsk, StreamSelector::Full),
        (Modulation::Uniform16Qam, StreamSelector::Full),
    ];
    for &alpha in alphas {
        let m = Modulation::from_parts("HIER16QAM", Some(alpha))?;
        jobs.push((m, StreamSelector::Hp));
        jobs.push((m, StreamSelector::Lp));
    }
    let targets = refs
        .iter()
        .map(|r| reference_target(r, spec))
        .collect::<Result<Vec<_>>>()?;

    let groups: Vec<Result<Vec<ModCod>>> = jobs
        .par_iter()
        .map(|&(modulation, stream)| {
            let c = modulation.constellation()?;
            let curve = stream_curve(&c, stream, spec)?;
            let bits = curve.stream_bits() as f64;
            refs.iter()
                .zip(&targets)
                .map(|(r, &target)| {
                    // The reference point is QPSK's own threshold.
                    let derived = if modulation == Modulation::Qpsk {
                        r.qpsk_es_n0_db
                    } else {
                        curve.inverse(target)?
                    };
                    Ok(ModCod {
                        modulation,
                        stream,
                        coding_rate: r.coding_rate,
                        spectral_rate: bits * r.coding_rate.value(),
                        threshold_db: derived + pilot_offset_db,
                    })
                })
                .collect()
        })
        .collect();
    let mut entries = Vec::new();
    for g in groups {
        entries.extend(g?);
    }
    Ok(ModCodTable {
        entries,
        pilot_offset_db,
    })
}
