//! Constellation-constrained mutual information over the complex AWGN channel.
//!
//! With `Y = X + N`, `X` uniform on the unit-energy points and `N` circular
//! Gaussian of variance `N0 = 10^(-Es/N0 [dB] / 10)`, every quantity below is
//! an expectation of a log-likelihood ratio evaluated at the same noise
//! samples:
//!
//! | selector      | measure      | integrand                       |
//! |---------------|--------------|---------------------------------|
//! | `Full`        | `I(X;Y)`     | `log p(y|x) / p(y)`             |
//! | `Hp`          | `I(Q;Y)`     | `log p(y|q) / p(y)`             |
//! | `Lp`          | `I(L;Y)`     | `log p(y|l) / p(y)`             |
//! | `LpGivenHp`   | `I(X;Y|Q)`   | `log p(y|x) / p(y|q)`           |
//!
//! where `Q` is the HP bit pair (the quadrant) and `L` the LP bit pair.
//! Because `Full = Hp + LpGivenHp` holds pointwise, the chain rule is exact
//! for any node set. `Lp` treats the quadrant as unknown; it is the measure
//! the LP decoding thresholds are derived from.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::quadrature::GaussHermite;
use crate::{Error, Result};

/// Lower end of the inverse-capacity search bracket, dB.
pub const SEARCH_MIN_DB: f64 = -30.0;
/// Upper end of the inverse-capacity search bracket, dB.
pub const SEARCH_MAX_DB: f64 = 40.0;
/// Bisection stops once the bracket is narrower than this, dB.
pub const SEARCH_TOLERANCE_DB: f64 = 1e-3;

pub const MIN_GAUSS_HERMITE_NODES: usize = 16;
pub const MIN_MONTE_CARLO_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StreamSelector {
    /// All bits of the symbol.
    Full,
    /// The HP bit pair (quadrant).
    Hp,
    /// The LP bit pair with the quadrant unknown.
    Lp,
    /// The LP bit pair given a correctly decoded quadrant.
    LpGivenHp,
}

impl StreamSelector {
    pub fn name(&self) -> &'static str {
        match self {
            StreamSelector::Full => "FULL",
            StreamSelector::Hp => "HP",
            StreamSelector::Lp => "LP",
            StreamSelector::LpGivenHp => "LP|HP",
        }
    }

    /// Bits carried by the stream on `c`.
    pub fn stream_bits(&self, c: &Constellation) -> u32 {
        match self {
            StreamSelector::Full => c.bits_per_symbol(),
            _ => 2,
        }
    }

    fn check(&self, c: &Constellation) -> Result<()> {
        if *self != StreamSelector::Full && !c.is_layered() {
            return Err(Error::InvalidParameter(format!(
                "{} stream needs a 16-point layered constellation, got {} points",
                self.name(),
                c.len()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for StreamSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StreamSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "FULL" => Ok(Self::Full),
            "HP" => Ok(Self::Hp),
            "LP" => Ok(Self::Lp),
            "LP|HP" => Ok(Self::LpGivenHp),
            _ => Err(Error::InvalidParameter(format!("unknown stream {s:?}"))),
        }
    }
}

/// How the expectation over the noise is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum IntegrationSpec {
    /// Tensor-product Gauss-Hermite rule over the I and Q noise components.
    GaussHermite { nodes_per_axis: usize },
    /// Monte Carlo with an equal number of samples per transmitted point.
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for IntegrationSpec {
    fn default() -> Self {
        IntegrationSpec::GaussHermite { nodes_per_axis: 32 }
    }
}

impl IntegrationSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            IntegrationSpec::GaussHermite { nodes_per_axis } => {
                if !(MIN_GAUSS_HERMITE_NODES..=300).contains(&nodes_per_axis) {
                    return Err(Error::Configuration(format!(
                        "Gauss-Hermite needs {MIN_GAUSS_HERMITE_NODES}..=300 nodes per axis, got {nodes_per_axis}"
                    )));
                }
            }
            IntegrationSpec::MonteCarlo { samples, .. } => {
                if samples < MIN_MONTE_CARLO_SAMPLES {
                    return Err(Error::Configuration(format!(
                        "Monte Carlo needs at least {MIN_MONTE_CARLO_SAMPLES} samples, got {samples}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Spec for the `index`-th task of a batch. Monte Carlo seeds are derived
    /// from `(seed, index)`; Gauss-Hermite is returned unchanged.
    pub fn for_task(&self, index: u64) -> Self {
        match *self {
            IntegrationSpec::MonteCarlo { samples, seed } => IntegrationSpec::MonteCarlo {
                samples,
                seed: splitmix64(seed ^ splitmix64(index)),
            },
            gh => gh,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

enum Rule {
    Hermite(GaussHermite),
    MonteCarlo { samples: usize, seed: u64 },
}

/// Evaluates one stream's capacity curve for a fixed constellation and rule.
pub struct CapacityCurve<'a> {
    constellation: &'a Constellation,
    selector: StreamSelector,
    rule: Rule,
}

impl<'a> CapacityCurve<'a> {
    pub fn new(
        constellation: &'a Constellation,
        selector: StreamSelector,
        spec: &IntegrationSpec,
    ) -> Result<Self> {
        selector.check(constellation)?;
        spec.validate()?;
        let rule = match *spec {
            IntegrationSpec::GaussHermite { nodes_per_axis } => {
                Rule::Hermite(GaussHermite::new(nodes_per_axis)?)
            }
            IntegrationSpec::MonteCarlo { samples, seed } => Rule::MonteCarlo { samples, seed },
        };
        Ok(Self {
            constellation,
            selector,
            rule,
        })
    }

    pub fn stream_bits(&self) -> u32 {
        self.selector.stream_bits(self.constellation)
    }

    /// Mutual information in bits per symbol.
    pub fn capacity(&self, es_n0_db: f64) -> f64 {
        let n0 = 10f64.powf(-es_n0_db / 10.0);
        let points = self.constellation.points();
        let labels = self.constellation.labels();
        let m = points.len();
        let mut scratch = Scratch::new(m);
        let nats = match &self.rule {
            Rule::Hermite(gh) => {
                let sigma = n0.sqrt();
                let mut total = 0.0;
                for x in 0..m {
                    let mut acc = 0.0;
                    for (&ta, &wa) in gh.nodes().iter().zip(gh.weights()) {
                        for (&tb, &wb) in gh.nodes().iter().zip(gh.weights()) {
                            let noise = Complex64::new(sigma * ta, sigma * tb);
                            acc += wa
                                * wb
                                * self.log_ratio(x, noise, n0, points, labels, &mut scratch);
                        }
                    }
                    total += acc / PI;
                }
                total / m as f64
            }
            Rule::MonteCarlo { samples, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let sigma = (n0 / 2.0).sqrt();
                let per_point = samples.div_ceil(m);
                let mut total = 0.0;
                for x in 0..m {
                    for _ in 0..per_point {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        let noise = Complex64::new(sigma * re, sigma * im);
                        total += self.log_ratio(x, noise, n0, points, labels, &mut scratch);
                    }
                }
                total / (per_point * m) as f64
            }
        };
        (nats / LN_2).clamp(0.0, self.stream_bits() as f64)
    }

    pub fn normalized(&self, es_n0_db: f64) -> f64 {
        self.capacity(es_n0_db) / self.stream_bits() as f64
    }

    /// Es/N0 (dB) at which the normalized capacity reaches `target`.
    pub fn inverse(&self, target: f64) -> Result<f64> {
        if !(target > 0.0 && target < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "target normalized capacity must be in (0, 1), got {target}"
            )));
        }
        bisect_increasing(
            |snr| self.normalized(snr),
            target,
            SEARCH_MIN_DB,
            SEARCH_MAX_DB,
            SEARCH_TOLERANCE_DB,
        )
        .ok_or_else(|| {
            Error::OutOfRange(format!(
                "normalized {} capacity {target} not reached within [{SEARCH_MIN_DB}, {SEARCH_MAX_DB}] dB",
                self.selector
            ))
        })
    }

    /// Pointwise log-likelihood ratio (nats) for transmitted point `x` and noise sample.
    fn log_ratio(
        &self,
        x: usize,
        noise: Complex64,
        n0: f64,
        points: &[Complex64],
        labels: &[u32],
        scratch: &mut Scratch,
    ) -> f64 {
        let px = points[x];
        for (e, p) in scratch.exponents.iter_mut().zip(points) {
            let d = px - p;
            *e = -(d.norm_sqr() + 2.0 * (d.re * noise.re + d.im * noise.im)) / n0;
        }
        let exps = &scratch.exponents;
        let all = log_mean_exp(exps.iter().copied());
        let lx = labels[x];
        let hp = || {
            log_mean_exp(
                exps.iter()
                    .zip(labels)
                    .filter(|(_, &l)| Constellation::hp_bits(l) == Constellation::hp_bits(lx))
                    .map(|(&e, _)| e),
            )
        };
        match self.selector {
            StreamSelector::Full => -all,
            StreamSelector::Hp => hp() - all,
            StreamSelector::Lp => {
                log_mean_exp(
                    exps.iter()
                        .zip(labels)
                        .filter(|(_, &l)| Constellation::lp_bits(l) == Constellation::lp_bits(lx))
                        .map(|(&e, _)| e),
                ) - all
            }
            StreamSelector::LpGivenHp => -hp(),
        }
    }
}

struct Scratch {
    exponents: Vec<f64>,
}

impl Scratch {
    fn new(m: usize) -> Self {
        Self {
            exponents: vec![0.0; m],
        }
    }
}

fn log_mean_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + (v - max).exp(), c + 1));
    max + (sum / count as f64).ln()
}

/// Finds `x` in `[lo, hi]` with `f(x) = target` for increasing `f`.
/// Returns `None` when the target lies outside `[f(lo), f(hi)]`.
fn bisect_increasing(
    f: impl Fn(f64) -> f64,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Option<f64> {
    if f(lo) > target || f(hi) < target {
        return None;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Mutual information (bits/symbol) carried by stream `s` of `c` at `es_n0_db`.
pub fn stream_capacity(
    c: &Constellation,
    s: StreamSelector,
    es_n0_db: f64,
    spec: &IntegrationSpec,
) -> Result<f64> {
    Ok(CapacityCurve::new(c, s, spec)?.capacity(es_n0_db))
}

/// Stream capacity divided by the stream's bit count.
pub fn normalized_capacity(
    c: &Constellation,
    s: StreamSelector,
    es_n0_db: f64,
    spec: &IntegrationSpec,
) -> Result<f64> {
    Ok(CapacityCurve::new(c, s, spec)?.normalized(es_n0_db))
}

/// Es/N0 (dB) where the normalized capacity of stream `s` equals `target`.
pub fn inverse_capacity(
    c: &Constellation,
    s: StreamSelector,
    target: f64,
    spec: &IntegrationSpec,
) -> Result<f64> {
    CapacityCurve::new(c, s, spec)?.inverse(target)
}

/// One row of a capacity-curve dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityRow {
    pub selector: String,
    pub alpha: Option<f64>,
    pub es_n0_db: f64,
    pub capacity: f64,
}

/// Capacity of every selector in `selectors` on `c` over `snrs_db`.
pub fn capacity_curves(
    c: &Constellation,
    selectors: &[StreamSelector],
    snrs_db: &[f64],
    spec: &IntegrationSpec,
) -> Result<Vec<CapacityRow>> {
    let mut rows = Vec::with_capacity(selectors.len() * snrs_db.len());
    for &s in selectors {
        let curve = CapacityCurve::new(c, s, spec)?;
        for &snr in snrs_db {
            rows.push(CapacityRow {
                selector: s.name().to_string(),
                alpha: c.alpha(),
                es_n0_db: snr,
                capacity: curve.capacity(snr),
            });
        }
    }
    Ok(rows)
}

/// Writes `selector,alpha,es_n0_db,capacity` rows.
pub fn write_capacity_csv<W: Write>(writer: W, rows: &[CapacityRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{build_hierarchical_16qam, build_reference, ReferenceModulation};
    use approx::assert_abs_diff_eq;

    fn gh() -> IntegrationSpec {
        IntegrationSpec::default()
    }

    fn qpsk() -> Constellation {
        build_reference(ReferenceModulation::Qpsk)
    }

    #[test]
    fn qpsk_high_snr_asymptote() {
        let c = stream_capacity(&qpsk(), StreamSelector::Full, 30.0, &gh()).unwrap();
        assert_abs_diff_eq!(c, 2.0, epsilon = 1e-3);
    }

    #[test]
    fn qpsk_at_reference_point() {
        let c = stream_capacity(&qpsk(), StreamSelector::Full, -3.9, &gh()).unwrap();
        assert_abs_diff_eq!(c, 0.4908, epsilon = 0.01);
        let n = normalized_capacity(&qpsk(), StreamSelector::Full, -3.9, &gh()).unwrap();
        assert_abs_diff_eq!(n, 0.2454, epsilon = 0.005);
    }

    #[test]
    fn hp_at_worked_threshold() {
        let h = build_hierarchical_16qam(1.0).unwrap();
        let n = normalized_capacity(&h, StreamSelector::Hp, -2.46, &gh()).unwrap();
        assert_abs_diff_eq!(n, 0.2454, epsilon = 0.005);
    }

    #[test]
    fn vanishing_snr() {
        let h = build_hierarchical_16qam(0.5).unwrap();
        for s in [
            StreamSelector::Full,
            StreamSelector::Hp,
            StreamSelector::Lp,
            StreamSelector::LpGivenHp,
        ] {
            let n = normalized_capacity(&h, s, -60.0, &gh()).unwrap();
            assert_abs_diff_eq!(n, 0.0, epsilon = 1e-3);
        }
        let n = normalized_capacity(&qpsk(), StreamSelector::Full, -60.0, &gh()).unwrap();
        assert_abs_diff_eq!(n, 0.0, epsilon = 1e-3);
    }

    #[test]
    fn chain_rule_is_exact_on_shared_nodes() {
        let h = build_hierarchical_16qam(1.0).unwrap();
        for snr in [-10.0, -2.0, 3.5, 9.0, 17.0] {
            let full = stream_capacity(&h, StreamSelector::Full, snr, &gh()).unwrap();
            let hp = stream_capacity(&h, StreamSelector::Hp, snr, &gh()).unwrap();
            let lp = stream_capacity(&h, StreamSelector::LpGivenHp, snr, &gh()).unwrap();
            assert_abs_diff_eq!(full - hp - lp, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn parallel_lp_never_beats_successive_lp() {
        for alpha in [0.5, 1.0, 4.0] {
            let h = build_hierarchical_16qam(alpha).unwrap();
            for snr in [0.0, 5.0, 10.0] {
                let lp = stream_capacity(&h, StreamSelector::Lp, snr, &gh()).unwrap();
                let cond = stream_capacity(&h, StreamSelector::LpGivenHp, snr, &gh()).unwrap();
                assert!(lp <= cond + 1e-9, "alpha {alpha} snr {snr}: {lp} > {cond}");
            }
        }
    }

    #[test]
    fn inverse_of_qpsk_reference() {
        let snr = inverse_capacity(&qpsk(), StreamSelector::Full, 0.2454, &gh()).unwrap();
        assert_abs_diff_eq!(snr, -3.9, epsilon = 0.1);
    }

    #[test]
    fn inverse_of_lp_worked_threshold() {
        let h = build_hierarchical_16qam(1.0).unwrap();
        let snr = inverse_capacity(&h, StreamSelector::Lp, 0.2454, &gh()).unwrap();
        assert_abs_diff_eq!(snr, 3.72, epsilon = 0.1);
    }

    #[test]
    fn inverse_rejects_bad_targets() {
        let q = qpsk();
        for t in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(matches!(
                inverse_capacity(&q, StreamSelector::Full, t, &gh()),
                Err(Error::InvalidParameter(_))
            ));
        }
        // The weak stream of a very unbalanced constellation stays far below
        // one half inside the bracket.
        let h = build_hierarchical_16qam(1000.0).unwrap();
        assert!(matches!(
            inverse_capacity(&h, StreamSelector::Lp, 0.5, &gh()),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn selector_mismatch() {
        for s in [
            StreamSelector::Hp,
            StreamSelector::Lp,
            StreamSelector::LpGivenHp,
        ] {
            assert!(matches!(
                stream_capacity(&qpsk(), s, 0.0, &gh()),
                Err(Error::InvalidParameter(_))
            ));
        }
    }

    #[test]
    fn integration_settings_validated() {
        let q = qpsk();
        let few_nodes = IntegrationSpec::GaussHermite { nodes_per_axis: 8 };
        let few_samples = IntegrationSpec::MonteCarlo {
            samples: 1000,
            seed: 1,
        };
        for spec in [few_nodes, few_samples] {
            assert!(matches!(
                stream_capacity(&q, StreamSelector::Full, 0.0, &spec),
                Err(Error::Configuration(_))
            ));
        }
    }

    #[test]
    fn monte_carlo_is_deterministic_per_seed() {
        let h = build_hierarchical_16qam(2.0).unwrap();
        let spec = IntegrationSpec::MonteCarlo {
            samples: 100_000,
            seed: 7,
        };
        let a = stream_capacity(&h, StreamSelector::Hp, 2.0, &spec).unwrap();
        let b = stream_capacity(&h, StreamSelector::Hp, 2.0, &spec).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        let other = stream_capacity(&h, StreamSelector::Hp, 2.0, &spec.for_task(1)).unwrap();
        assert_ne!(a.to_bits(), other.to_bits());
        assert_eq!(spec.for_task(3), spec.for_task(3));
        assert_eq!(gh().for_task(3), gh());
    }

    #[test]
    fn stream_bit_counts() {
        let h = build_hierarchical_16qam(1.0).unwrap();
        assert_eq!(StreamSelector::Full.stream_bits(&h), 4);
        assert_eq!(StreamSelector::Hp.stream_bits(&h), 2);
        assert_eq!(StreamSelector::Lp.stream_bits(&h), 2);
        assert_eq!(StreamSelector::Full.stream_bits(&qpsk()), 2);
    }

    #[test]
    fn selector_names_parse_back() {
        for s in [
            StreamSelector::Full,
            StreamSelector::Hp,
            StreamSelector::Lp,
            StreamSelector::LpGivenHp,
        ] {
            assert_eq!(s.name().parse::<StreamSelector>().unwrap(), s);
        }
    }

    #[test]
    fn capacity_csv_layout() {
        let rows = capacity_curves(&qpsk(), &[StreamSelector::Full], &[0.0, 10.0], &gh()).unwrap();
        let mut buf = Vec::new();
        write_capacity_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("selector,alpha,es_n0_db,capacity"));
        assert!(lines.next().unwrap().starts_with("FULL,,0.0,"));
    }
}
