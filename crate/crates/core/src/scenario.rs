//! Scenario configuration, the beam model and the experiment drivers.
//!
//! Every driver takes an already built [`ModCodTable`] so that all numbers of
//! one run come from the same table. Outputs are plain CSV.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::{
    best_grouping, classical_plan, enumerate_groupings, gain_percent, pair_plan, Grouping,
    GroupingChoice, GroupingMode, Plan, Receiver,
};
use crate::capacity::IntegrationSpec;
use crate::rate_region::{equal_rate_point, pair_region, EqualRateSolution, RateRegion};
use crate::thresholds::{
    build_modcod_table, read_references, shipped_references, ModCodTable, PUBLISHED_ALPHAS,
};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Satellite spot-beam model: one receiver at `snr_max − Δ`, two at
/// `snr_max − 2Δ`, three at `snr_max − 3Δ`.
pub fn beam_snrs(snr_max_db: f64, delta_db: f64) -> Vec<f64> {
    [1.0, 2.0, 2.0, 3.0, 3.0, 3.0]
        .iter()
        .map(|k| snr_max_db - k * delta_db)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    pub snr_max_db: f64,
    pub delta_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionSettings {
    pub snr1_db: f64,
    pub snr2_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub min_db: f64,
    pub max_db: f64,
    pub step_db: f64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            min_db: -4.0,
            max_db: 16.0,
            step_db: 0.25,
        }
    }
}

impl SweepGrid {
    /// Grid points `min + k·step` up to `max` (inclusive, with rounding slack).
    pub fn axis(&self) -> Result<Vec<f64>> {
        if self.step_db.is_nan()
            || self.step_db <= 0.0
            || !self.min_db.is_finite()
            || !self.max_db.is_finite()
        {
            return Err(Error::Configuration(format!(
                "bad sweep step {}",
                self.step_db
            )));
        }
        if self.min_db > self.max_db {
            return Err(Error::Configuration(format!(
                "empty sweep grid [{}, {}]",
                self.min_db, self.max_db
            )));
        }
        let count = ((self.max_db - self.min_db) / self.step_db + 1e-9).floor() as usize + 1;
        Ok((0..count)
            .map(|k| self.min_db + k as f64 * self.step_db)
            .collect())
    }
}

/// A planning run. Either an explicit receiver list or a beam describes the
/// population; the remaining fields configure the modcod table and outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub receivers: Option<Vec<Receiver>>,
    pub beam: Option<Beam>,
    pub alphas: Vec<f64>,
    /// Reference operating points (CSV); the shipped file when absent.
    pub references: Option<PathBuf>,
    /// Prebuilt modcod table (CSV); skips derivation when present.
    pub table: Option<PathBuf>,
    pub pilot_offset_db: f64,
    pub integration: IntegrationSpec,
    pub output_dir: PathBuf,
    pub grouping_mode: GroupingMode,
    pub region: Option<RegionSettings>,
    pub sweep: SweepGrid,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            receivers: None,
            beam: None,
            alphas: PUBLISHED_ALPHAS.to_vec(),
            references: None,
            table: None,
            pilot_offset_db: 0.0,
            integration: IntegrationSpec::default(),
            output_dir: PathBuf::from("out"),
            grouping_mode: GroupingMode::Auto,
            region: None,
            sweep: SweepGrid::default(),
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    /// Loads a scenario file. Relative table/reference paths are resolved
    /// against the file's directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let mut s = Self::from_json(&fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut s.references, &mut s.table].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Configuration(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.receivers.is_some() && self.beam.is_some() {
            return Err(Error::Configuration(
                "scenario must give either receivers or beam, not both".into(),
            ));
        }
        if let Some(r) = &self.receivers {
            if let Some(bad) = r.iter().find(|r| !r.snr_db.is_finite()) {
                return Err(Error::Configuration(format!(
                    "receiver {} has non-finite SNR",
                    bad.id
                )));
            }
        }
        if self.alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::Configuration(format!(
                "bad alphas {:?}",
                self.alphas
            )));
        }
        self.integration.validate()
    }

    /// The receiver population: the explicit list or the six beam receivers.
    pub fn population(&self) -> Result<Vec<Receiver>> {
        match (&self.receivers, &self.beam) {
            (Some(r), None) if !r.is_empty() => Ok(r.clone()),
            (None, Some(b)) => Ok(crate::allocation::receivers_from_snrs(&beam_snrs(
                b.snr_max_db,
                b.delta_db,
            ))),
            (Some(_), Some(_)) => Err(Error::Configuration(
                "scenario must give either receivers or beam, not both".into(),
            )),
            _ => Err(Error::Configuration(
                "scenario has no receivers or beam".into(),
            )),
        }
    }

    /// Loads or derives the modcod table.
    pub fn modcod_table(&self) -> Result<ModCodTable> {
        if let Some(path) = &self.table {
            return ModCodTable::read_csv(File::open(path)?);
        }
        let refs = match &self.references {
            Some(path) => read_references(File::open(path)?)?,
            None => shipped_references(),
        };
        build_modcod_table(&self.alphas, &refs, self.pilot_offset_db, &self.integration)
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Hierarchical and classical view of one receiver pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionReport {
    pub snr1_db: f64,
    pub snr2_db: f64,
    pub region: RateRegion,
    pub hierarchical: EqualRateSolution,
    pub classical: EqualRateSolution,
}

impl RegionReport {
    /// `R_hm / R_ts`, `None` when the classical rate is zero.
    pub fn ratio(&self) -> Option<f64> {
        (self.classical.rate > 0.0).then(|| self.hierarchical.rate / self.classical.rate)
    }

    /// Writes `region.csv` (all points) and `region_summary.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut f = create(dir, "region.csv")?;
        self.region.write_csv(&mut f)?;
        f.flush()?;

        let mut w = csv::Writer::from_writer(create(dir, "region_summary.csv")?);
        w.write_record([
            "snr1_db",
            "snr2_db",
            "classical_rate",
            "hierarchical_rate",
            "ratio",
            "mix",
        ])?;
        let mix = self
            .hierarchical
            .mix
            .iter()
            .map(|(p, t)| format!("{}@{t}", p.provenance))
            .collect::<Vec<_>>()
            .join(" | ");
        w.write_record([
            self.snr1_db.to_string(),
            self.snr2_db.to_string(),
            self.classical.rate.to_string(),
            self.hierarchical.rate.to_string(),
            self.ratio().map_or("NA".into(), |r| r.to_string()),
            mix,
        ])?;
        w.flush()?;
        Ok(())
    }
}

/// Rate region and equal-rate points for receivers at `snr1_db`, `snr2_db`.
pub fn run_region(snr1_db: f64, snr2_db: f64, table: &ModCodTable) -> RegionReport {
    let region = pair_region(snr1_db, snr2_db, table, true);
    let hierarchical = equal_rate_point(&region);
    let classical = equal_rate_point(&pair_region(snr1_db, snr2_db, table, false));
    RegionReport {
        snr1_db,
        snr2_db,
        region,
        hierarchical,
        classical,
    }
}

/// Gain matrix over an SNR × SNR grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub axis: Vec<f64>,
    /// `ratios[i][j]` for receiver SNRs `(axis[i], axis[j])`; `None` when
    /// the classical rate is zero.
    pub ratios: Vec<Vec<Option<f64>>>,
}

impl SweepReport {
    /// Matrix CSV: first column `snr1_db`, one column per `snr2_db` value.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(create(dir, "sweep.csv")?);
        let mut header = vec!["snr1_db\\snr2_db".to_string()];
        header.extend(self.axis.iter().map(|s| s.to_string()));
        w.write_record(&header)?;
        for (s, row) in self.axis.iter().zip(&self.ratios) {
            let mut rec = vec![s.to_string()];
            rec.extend(row.iter().map(|c| c.map_or("NA".into(), |r| r.to_string())));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn max_ratio(&self) -> Option<f64> {
        self.ratios
            .iter()
            .flatten()
            .flatten()
            .copied()
            .reduce(f64::max)
    }
}

pub fn run_sweep(grid: &SweepGrid, table: &ModCodTable) -> Result<SweepReport> {
    let axis = grid.axis()?;
    let ratios = axis
        .par_iter()
        .map(|&a| {
            axis.iter()
                .map(|&b| run_region(a, b, table).ratio())
                .collect()
        })
        .collect();
    Ok(SweepReport { axis, ratios })
}

/// One grouping strategy of a beam comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyResult {
    pub label: String,
    pub grouping: Grouping,
    pub description: String,
    pub rate: f64,
    pub gain_percent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamReport {
    pub beam: Beam,
    pub receivers: Vec<Receiver>,
    pub classical_rate: f64,
    /// Strategies labeled A, B, … by decreasing total pair SNR spread.
    pub strategies: Vec<StrategyResult>,
}

impl BeamReport {
    pub fn strategy(&self, label: &str) -> Option<&StrategyResult> {
        self.strategies.iter().find(|s| s.label == label)
    }

    pub fn best(&self) -> &StrategyResult {
        self.strategies
            .iter()
            .reduce(|a, b| if b.rate > a.rate { b } else { a })
            .expect("at least one strategy")
    }

    /// Writes `beam.csv`: one row per strategy; gains are rounded to one
    /// decimal, rates are exact.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(create(dir, "beam.csv")?);
        w.write_record([
            "snr_max_db",
            "delta_db",
            "strategy",
            "grouping",
            "classical_rate",
            "rate",
            "gain_pct",
        ])?;
        for s in &self.strategies {
            w.write_record([
                self.beam.snr_max_db.to_string(),
                self.beam.delta_db.to_string(),
                s.label.clone(),
                s.description.clone(),
                self.classical_rate.to_string(),
                s.rate.to_string(),
                format!("{:.1}", s.gain_percent),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Classical versus every distinct pairing of the six beam receivers.
pub fn run_beam_comparison(beam: Beam, table: &ModCodTable) -> Result<BeamReport> {
    let receivers =
        crate::allocation::receivers_from_snrs(&beam_snrs(beam.snr_max_db, beam.delta_db));
    let classical = classical_plan(&receivers, table)?;
    let mut groupings = enumerate_groupings(&receivers)?;
    groupings.sort_by(|a, b| {
        b.spread(&receivers)
            .total_cmp(&a.spread(&receivers))
            .then_with(|| {
                b.describe_snrs(&receivers)
                    .cmp(&a.describe_snrs(&receivers))
            })
    });
    let strategies = groupings
        .into_iter()
        .enumerate()
        .map(|(k, g)| {
            let plan = pair_plan(&receivers, &g, table)?;
            Ok(StrategyResult {
                label: strategy_label(k),
                description: g.describe_snrs(&receivers),
                grouping: g,
                rate: plan.rate,
                gain_percent: gain_percent(plan.rate, classical.rate),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BeamReport {
        beam,
        receivers,
        classical_rate: classical.rate,
        strategies,
    })
}

fn strategy_label(k: usize) -> String {
    if k < 26 {
        ((b'A' + k as u8) as char).to_string()
    } else {
        format!("S{}", k + 1)
    }
}

/// Classical and best hierarchical plans for a population.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanReport {
    pub classical: Plan,
    pub hierarchical: GroupingChoice,
}

impl PlanReport {
    pub fn gain_percent(&self) -> f64 {
        gain_percent(self.hierarchical.plan.rate, self.classical.rate)
    }

    /// Writes `plan_schedule.csv`, `plan_receivers.csv` and `plan_summary.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let plan = &self.hierarchical.plan;
        let mut f = create(dir, "plan_schedule.csv")?;
        plan.write_schedule_csv(&mut f)?;
        f.flush()?;
        let mut f = create(dir, "plan_receivers.csv")?;
        plan.write_receivers_csv(&mut f)?;
        f.flush()?;

        let mut w = csv::Writer::from_writer(create(dir, "plan_summary.csv")?);
        w.write_record([
            "rate",
            "classical_rate",
            "gain_pct",
            "grouping",
            "co_optimal",
        ])?;
        w.write_record([
            plan.rate.to_string(),
            self.classical.rate.to_string(),
            format!("{:.1}", self.gain_percent()),
            self.hierarchical.grouping.describe(&plan.receivers),
            self.hierarchical.co_optimal.len().to_string(),
        ])?;
        w.flush()?;
        Ok(())
    }
}

pub fn run_plan(
    receivers: &[Receiver],
    mode: GroupingMode,
    table: &ModCodTable,
) -> Result<PlanReport> {
    Ok(PlanReport {
        classical: classical_plan(receivers, table)?,
        hierarchical: best_grouping(receivers, table, mode)?,
    })
}
