use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hiermod::capacity::{capacity_curves, write_capacity_csv, IntegrationSpec, StreamSelector};
use hiermod::constellation::{build_hierarchical_16qam, build_reference, ReferenceModulation};
use hiermod::scenario::{
    run_beam_comparison, run_plan, run_region, run_sweep, Beam, Scenario, SweepGrid,
};
use hiermod::thresholds::{reconstruct_references, write_references, PublishedGrid};
use hiermod::Result;

#[derive(Parser)]
#[command(
    name = "hiermod",
    version,
    about = "Hierarchical 16-QAM multicast planning"
)]
struct Cli {
    /// Scenario file (JSON). Flags below override its fields.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    #[arg(long, global = true, env = "HIERMOD_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    /// QPSK reference operating points (CSV).
    #[arg(long, global = true)]
    references: Option<PathBuf>,
    /// Prebuilt modcod table (CSV).
    #[arg(long, global = true)]
    table: Option<PathBuf>,
    /// Added to every derived threshold (dB).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pilot_offset: Option<f64>,
    /// Comma-separated constellation parameters.
    #[arg(long, global = true, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Gauss-Hermite nodes per axis.
    #[arg(long, global = true)]
    gh_nodes: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive the modcod threshold table and write thresholds.csv.
    Thresholds,
    /// Reconstruct reference points from the published grid.
    References,
    /// Capacity curves of every stream and constellation.
    Capacity {
        #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
        min: f64,
        #[arg(long, default_value_t = 20.0, allow_hyphen_values = true)]
        max: f64,
        #[arg(long, default_value_t = 0.5)]
        step: f64,
    },
    /// Rate region of a two-receiver pair.
    Region {
        #[arg(long, allow_hyphen_values = true)]
        snr1: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        snr2: Option<f64>,
    },
    /// Gain matrix over an SNR grid.
    Sweep {
        #[arg(long, allow_hyphen_values = true)]
        min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        max: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
    },
    /// Compare pairing strategies for the six-receiver beam.
    Beam {
        #[arg(long, allow_hyphen_values = true)]
        snr_max: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Best plan for the scenario's receivers.
    Plan,
}

fn scenario(cli: &Cli) -> Result<Scenario> {
    let mut s = match &cli.scenario {
        Some(path) => Scenario::from_path(path)?,
        None => Scenario::default(),
    };
    if let Some(d) = &cli.output_dir {
        s.output_dir = d.clone();
    }
    if let Some(p) = &cli.references {
        s.references = Some(p.clone());
    }
    if let Some(p) = &cli.table {
        s.table = Some(p.clone());
    }
    if let Some(o) = cli.pilot_offset {
        s.pilot_offset_db = o;
    }
    if let Some(a) = &cli.alphas {
        s.alphas = a.clone();
    }
    if let Some(n) = cli.gh_nodes {
        s.integration = IntegrationSpec::GaussHermite { nodes_per_axis: n };
    }
    s.validate()?;
    Ok(s)
}

fn missing(what: &str) -> hiermod::Error {
    hiermod::Error::Configuration(format!("missing {what} (flag or scenario field)"))
}

fn output(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn run(cli: Cli) -> Result<()> {
    let s = scenario(&cli)?;
    let dir = s.output_dir.clone();
    let mut out = io::stdout().lock();
    match cli.command {
        Command::Thresholds => {
            let table = s.modcod_table()?;
            let mut f = output(&dir, "thresholds.csv")?;
            table.write_csv(&mut f)?;
            f.flush()?;
            for m in &table.entries {
                writeln!(
                    out,
                    "{:<28} {:>7.3} dB  {:.4} b/s/Hz",
                    m.tag(),
                    m.threshold_db,
                    m.spectral_rate
                )?;
            }
            for (m, st, r) in table.monotonicity_violations() {
                writeln!(out, "warning: non-monotone thresholds at {m} {st} {r}")?;
            }
        }
        Command::References => {
            let rec =
                reconstruct_references(&PublishedGrid::dvb_sh_hierarchical(), &s.integration)?;
            let mut f = output(&dir, "references.csv")?;
            write_references(&mut f, &rec.references)?;
            f.flush()?;
            for r in &rec.references {
                writeln!(out, "{} {:>7.3} dB", r.coding_rate, r.qpsk_es_n0_db)?;
            }
            for a in &rec.anomalies {
                writeln!(
                    out,
                    "anomaly: {} a={} {} published {} dB, implied {:.2} dB",
                    a.coding_rate, a.alpha, a.stream, a.published_db, a.implied_db
                )?;
            }
        }
        Command::Capacity { min, max, step } => {
            let snrs = SweepGrid {
                min_db: min,
                max_db: max,
                step_db: step,
            }
            .axis()?;
            let mut rows = capacity_curves(
                &build_reference(ReferenceModulation::Qpsk),
                &[StreamSelector::Full],
                &snrs,
                &s.integration,
            )?;
            rows.extend(capacity_curves(
                &build_reference(ReferenceModulation::Uniform16Qam),
                &[StreamSelector::Full],
                &snrs,
                &s.integration,
            )?);
            for &a in &s.alphas {
                let c = build_hierarchical_16qam(a)?;
                let sel = [
                    StreamSelector::Full,
                    StreamSelector::Hp,
                    StreamSelector::Lp,
                    StreamSelector::LpGivenHp,
                ];
                rows.extend(capacity_curves(&c, &sel, &snrs, &s.integration)?);
            }
            let mut f = output(&dir, "capacity.csv")?;
            write_capacity_csv(&mut f, &rows)?;
            f.flush()?;
            writeln!(
                out,
                "{} rows written to {}",
                rows.len(),
                dir.join("capacity.csv").display()
            )?;
        }
        Command::Region { snr1, snr2 } => {
            let snr1 = snr1
                .or(s.region.map(|r| r.snr1_db))
                .ok_or_else(|| missing("snr1"))?;
            let snr2 = snr2
                .or(s.region.map(|r| r.snr2_db))
                .ok_or_else(|| missing("snr2"))?;
            let table = s.modcod_table()?;
            let report = run_region(snr1, snr2, &table);
            report.write(&dir)?;
            for p in report.region.hull.iter() {
                writeln!(out, "({:.4}, {:.4})  {}", p.r1, p.r2, p.provenance)?;
            }
            writeln!(out, "classical equal rate    {:.4}", report.classical.rate)?;
            writeln!(
                out,
                "hierarchical equal rate {:.4}",
                report.hierarchical.rate
            )?;
            for (p, t) in &report.hierarchical.mix {
                writeln!(out, "  {:.4} x {}", t, p.provenance)?;
            }
        }
        Command::Sweep { min, max, step } => {
            let grid = SweepGrid {
                min_db: min.unwrap_or(s.sweep.min_db),
                max_db: max.unwrap_or(s.sweep.max_db),
                step_db: step.unwrap_or(s.sweep.step_db),
            };
            let table = s.modcod_table()?;
            let report = run_sweep(&grid, &table)?;
            report.write(&dir)?;
            match report.max_ratio() {
                Some(r) => writeln!(out, "max gain ratio {r:.4}")?,
                None => writeln!(out, "no decodable cell")?,
            }
        }
        Command::Beam { snr_max, delta } => {
            let beam = Beam {
                snr_max_db: snr_max
                    .or(s.beam.map(|b| b.snr_max_db))
                    .ok_or_else(|| missing("snr-max"))?,
                delta_db: delta
                    .or(s.beam.map(|b| b.delta_db))
                    .ok_or_else(|| missing("delta"))?,
            };
            let table = s.modcod_table()?;
            let report = run_beam_comparison(beam, &table)?;
            report.write(&dir)?;
            writeln!(out, "classical rate {:.4}", report.classical_rate)?;
            for st in &report.strategies {
                writeln!(
                    out,
                    "{}  {:<24} {:.4}  {:+.1}%",
                    st.label, st.description, st.rate, st.gain_percent
                )?;
            }
        }
        Command::Plan => {
            let receivers = s.population()?;
            let table = s.modcod_table()?;
            let report = run_plan(&receivers, s.grouping_mode, &table)?;
            report.write(&dir)?;
            writeln!(out, "{}", report.hierarchical.plan)?;
            writeln!(
                out,
                "classical rate {:.4}, gain {:+.1}%",
                report.classical.rate,
                report.gain_percent()
            )?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
