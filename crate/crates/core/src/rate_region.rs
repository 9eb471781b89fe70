//! Two-receiver achievable rate regions.
//!
//! Receiver 1 is the one with the lower SNR. A classical modcod serves one
//! receiver at a time, giving `(R1, 0)` or `(0, R2)`. A hierarchical 16-QAM
//! sends its HP stream to receiver 1 and its LP stream to receiver 2, giving
//! `(R_hp, R_lp)`. Time sharing between operating points fills in their convex
//! hull, and the equal-rate operating point is where that hull meets `R1 = R2`.

use std::fmt;
use std::io::Write;

use crate::capacity::StreamSelector;
use crate::thresholds::{ModCod, ModCodTable};
use crate::{Error, Result};

/// Comparison tolerance for rates, bits/symbol.
pub const RATE_EPS: f64 = 1e-9;

/// What generates a rate point.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    /// A single-stream modcod serving only `receiver` (1 or 2); `None` when
    /// that receiver decodes nothing.
    Classical {
        receiver: u8,
        modcod: Option<ModCod>,
    },
    /// Hierarchical 16-QAM: HP to receiver 1, LP to receiver 2.
    Hierarchical {
        alpha: f64,
        hp: Option<ModCod>,
        lp: Option<ModCod>,
    },
    /// Axis projection of a point that is not itself on the axis.
    Projection,
    Origin,
}

impl Provenance {
    pub fn is_hierarchical(&self) -> bool {
        matches!(self, Provenance::Hierarchical { .. })
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rate = |m: &Option<ModCod>| m.map_or("-".to_string(), |m| m.coding_rate.to_string());
        match self {
            Provenance::Classical {
                modcod: Some(m), ..
            } => f.write_str(&m.tag()),
            Provenance::Classical {
                receiver,
                modcod: None,
            } => write!(f, "none (receiver {receiver})"),
            Provenance::Hierarchical { alpha, hp, lp } => {
                write!(f, "HIER16QAM(a={alpha}) HP {} + LP {}", rate(hp), rate(lp))
            }
            Provenance::Projection => f.write_str("projection"),
            Provenance::Origin => f.write_str("origin"),
        }
    }
}

/// An achievable `(R1, R2)` pair in bits/symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub r1: f64,
    pub r2: f64,
    pub provenance: Provenance,
}

impl RatePoint {
    fn new(r1: f64, r2: f64, provenance: Provenance) -> Self {
        Self { r1, r2, provenance }
    }

    fn same_position(&self, other: &RatePoint) -> bool {
        (self.r1 - other.r1).abs() <= RATE_EPS && (self.r2 - other.r2).abs() <= RATE_EPS
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRegion {
    /// All generated points.
    pub points: Vec<RatePoint>,
    /// Upper-right hull vertices from `(0, R2max)` to `(R1max, 0)`, by increasing `r1`.
    pub hull: Vec<RatePoint>,
}

/// Time-sharing mix that gives both receivers the same rate.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualRateSolution {
    pub rate: f64,
    /// Up to two hull vertices with their time weights (summing to 1).
    pub mix: Vec<(RatePoint, f64)>,
    /// Set when one receiver gets nothing anywhere in the region.
    pub degenerate: bool,
}

/// Highest-rate single-stream modcod decodable at `snr_db`; ties go to the
/// lower threshold.
pub fn best_single_modcod(snr_db: f64, table: &ModCodTable) -> Option<ModCod> {
    table
        .full_entries()
        .filter(|e| e.threshold_db <= snr_db)
        .fold(None::<&ModCod>, |best, e| match best {
            Some(b) if e.spectral_rate < b.spectral_rate - RATE_EPS => Some(b),
            Some(b)
                if (e.spectral_rate - b.spectral_rate).abs() <= RATE_EPS
                    && e.threshold_db >= b.threshold_db =>
            {
                Some(b)
            }
            _ => Some(e),
        })
        .copied()
}

/// Rate points for a pair with SNRs `snr_lo <= snr_hi`.
pub fn achievable_points(snr_lo: f64, snr_hi: f64, table: &ModCodTable) -> Result<Vec<RatePoint>> {
    if snr_lo > snr_hi {
        return Err(Error::InvalidParameter(format!(
            "receiver 1 must have the lower SNR ({snr_lo} > {snr_hi})"
        )));
    }
    let mut points = Vec::new();
    let lo = best_single_modcod(snr_lo, table);
    let hi = best_single_modcod(snr_hi, table);
    points.push(RatePoint::new(
        lo.map_or(0.0, |m| m.spectral_rate),
        0.0,
        Provenance::Classical {
            receiver: 1,
            modcod: lo,
        },
    ));
    points.push(RatePoint::new(
        0.0,
        hi.map_or(0.0, |m| m.spectral_rate),
        Provenance::Classical {
            receiver: 2,
            modcod: hi,
        },
    ));
    for alpha in table.alphas() {
        let hp = table
            .best_stream_modcod(alpha, StreamSelector::Hp, snr_lo)
            .copied();
        let lp = table
            .best_stream_modcod(alpha, StreamSelector::Lp, snr_hi)
            .copied();
        if hp.is_none() && lp.is_none() {
            continue;
        }
        points.push(RatePoint::new(
            hp.map_or(0.0, |m| m.spectral_rate),
            lp.map_or(0.0, |m| m.spectral_rate),
            Provenance::Hierarchical { alpha, hp, lp },
        ));
    }
    Ok(points)
}

fn cross(o: &RatePoint, a: &RatePoint, b: &RatePoint) -> f64 {
    (a.r1 - o.r1) * (b.r2 - o.r2) - (a.r2 - o.r2) * (b.r1 - o.r1)
}

/// Upper-right convex hull of `points` together with the origin and the axis
/// projections of the extreme rates. Collinear points are not vertices.
pub fn upper_hull(points: Vec<RatePoint>) -> RateRegion {
    let r1_max = points.iter().map(|p| p.r1).fold(0.0, f64::max);
    let r2_max = points.iter().map(|p| p.r2).fold(0.0, f64::max);
    if r1_max <= RATE_EPS && r2_max <= RATE_EPS {
        return RateRegion {
            points,
            hull: vec![RatePoint::new(0.0, 0.0, Provenance::Origin)],
        };
    }

    let mut candidates = points.clone();
    let on_axis = |p: &RatePoint, r1: f64, r2: f64| {
        (p.r1 - r1).abs() <= RATE_EPS && (p.r2 - r2).abs() <= RATE_EPS
    };
    if !points.iter().any(|p| on_axis(p, 0.0, r2_max)) {
        candidates.push(RatePoint::new(0.0, r2_max, Provenance::Projection));
    }
    if !points.iter().any(|p| on_axis(p, r1_max, 0.0)) {
        candidates.push(RatePoint::new(r1_max, 0.0, Provenance::Projection));
    }
    // Stable sort: among coincident points the first one generated is kept.
    candidates.sort_by(|a, b| a.r1.total_cmp(&b.r1).then(b.r2.total_cmp(&a.r2)));
    let mut unique: Vec<RatePoint> = Vec::with_capacity(candidates.len());
    for c in candidates {
        if !unique.iter().any(|u| u.same_position(&c)) {
            unique.push(c);
        }
    }

    let scale = r1_max.max(r2_max);
    let mut hull: Vec<RatePoint> = Vec::new();
    for p in unique {
        while hull.len() >= 2
            && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &p) >= -RATE_EPS * scale * scale
        {
            hull.pop();
        }
        hull.push(p);
    }
    RateRegion { points, hull }
}

/// Largest `R` with `(R, R)` in the region and the vertex mix achieving it.
pub fn equal_rate_point(region: &RateRegion) -> EqualRateSolution {
    let r1_max = region.hull.iter().map(|p| p.r1).fold(0.0, f64::max);
    let r2_max = region.hull.iter().map(|p| p.r2).fold(0.0, f64::max);
    let degenerate = EqualRateSolution {
        rate: 0.0,
        mix: Vec::new(),
        degenerate: true,
    };
    if r1_max <= RATE_EPS || r2_max <= RATE_EPS {
        return degenerate;
    }
    let gap = |p: &RatePoint| p.r1 - p.r2;
    for (i, v) in region.hull.iter().enumerate() {
        let g = gap(v);
        if g.abs() <= RATE_EPS {
            return EqualRateSolution {
                rate: 0.5 * (v.r1 + v.r2),
                mix: vec![(v.clone(), 1.0)],
                degenerate: false,
            };
        }
        if g > 0.0 && i > 0 {
            let u = &region.hull[i - 1];
            let tau = g / (g - gap(u));
            let rate = if u.r1 == 0.0 && v.r2 == 0.0 {
                // Axis to axis: plain two-receiver time sharing.
                1.0 / (1.0 / u.r2 + 1.0 / v.r1)
            } else {
                tau * u.r1 + (1.0 - tau) * v.r1
            };
            return EqualRateSolution {
                rate,
                mix: vec![(u.clone(), tau), (v.clone(), 1.0 - tau)],
                degenerate: false,
            };
        }
    }
    degenerate
}

/// Region of a receiver pair given in any order; `hierarchical = false`
/// restricts it to single-stream modcods.
pub fn pair_region(snr_a: f64, snr_b: f64, table: &ModCodTable, hierarchical: bool) -> RateRegion {
    let (lo, hi) = if snr_a <= snr_b {
        (snr_a, snr_b)
    } else {
        (snr_b, snr_a)
    };
    let mut points = achievable_points(lo, hi, table).expect("ordered SNRs");
    if !hierarchical {
        points.retain(|p| !p.provenance.is_hierarchical());
    }
    upper_hull(points)
}

impl RateRegion {
    pub fn is_hull_vertex(&self, p: &RatePoint) -> bool {
        self.hull.iter().any(|h| h == p)
    }

    /// Writes `r1,r2,provenance,is_hull_vertex` rows: every generated point,
    /// then hull vertices that were added by projection.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["r1", "r2", "provenance", "is_hull_vertex"])?;
        for p in &self.points {
            w.write_record([
                p.r1.to_string(),
                p.r2.to_string(),
                p.provenance.to_string(),
                self.is_hull_vertex(p).to_string(),
            ])?;
        }
        for h in self.hull.iter().filter(|h| !self.points.contains(h)) {
            w.write_record([
                h.r1.to_string(),
                h.r2.to_string(),
                h.provenance.to_string(),
                "true".into(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pt(r1: f64, r2: f64) -> RatePoint {
        RatePoint::new(r1, r2, Provenance::Origin)
    }

    fn coords(region: &RateRegion) -> Vec<(f64, f64)> {
        region.hull.iter().map(|p| (p.r1, p.r2)).collect()
    }

    /// Brute-force oracle: is `p` a strict convex combination of two other
    /// points (or dominated by one), i.e. not extreme?
    fn dominated_by_combination(p: (f64, f64), others: &[(f64, f64)]) -> bool {
        for &a in others {
            if a.0 >= p.0 - 1e-12 && a.1 >= p.1 - 1e-12 && a != p {
                return true;
            }
            for &b in others {
                for k in 1..1000 {
                    let t = k as f64 / 1000.0;
                    let c = (t * a.0 + (1.0 - t) * b.0, t * a.1 + (1.0 - t) * b.1);
                    if c.0 >= p.0 - 1e-12
                        && c.1 >= p.1 - 1e-12
                        && (c.0 > p.0 + 1e-9 || c.1 > p.1 + 1e-9)
                    {
                        return true;
                    }
                }
            }
        }
        false
    }

    #[test]
    fn segment_hull() {
        let r = upper_hull(vec![pt(1.0, 0.0), pt(0.0, 1.0)]);
        assert_eq!(coords(&r), vec![(0.0, 1.0), (1.0, 0.0)]);
    }

    #[test]
    fn interior_point_excluded() {
        let others = [(1.0, 0.0), (0.0, 1.0)];
        assert!(dominated_by_combination((0.4, 0.4), &others));
        let r = upper_hull(vec![pt(1.0, 0.0), pt(0.0, 1.0), pt(0.4, 0.4)]);
        assert_eq!(coords(&r), vec![(0.0, 1.0), (1.0, 0.0)]);
    }

    #[test]
    fn extreme_point_kept() {
        let others = [(1.0, 0.0), (0.0, 1.0)];
        assert!(!dominated_by_combination((0.8, 0.8), &others));
        let r = upper_hull(vec![pt(1.0, 0.0), pt(0.0, 1.0), pt(0.8, 0.8)]);
        assert_eq!(coords(&r), vec![(0.0, 1.0), (0.8, 0.8), (1.0, 0.0)]);
    }

    #[test]
    fn collinear_point_not_a_vertex() {
        let r = upper_hull(vec![pt(1.0, 0.0), pt(0.0, 1.0), pt(0.5, 0.5)]);
        assert_eq!(coords(&r), vec![(0.0, 1.0), (1.0, 0.0)]);
    }

    #[test]
    fn projections_added_for_off_axis_extremes() {
        let r = upper_hull(vec![pt(1.0, 0.5)]);
        assert_eq!(coords(&r), vec![(0.0, 0.5), (1.0, 0.5), (1.0, 0.0)]);
        assert_eq!(r.hull[0].provenance, Provenance::Projection);
    }

    #[test]
    fn equal_rate_on_classical_segment() {
        let r = upper_hull(vec![pt(4.0 / 3.0, 0.0), pt(0.0, 2.0)]);
        let s = equal_rate_point(&r);
        assert!(!s.degenerate);
        assert_abs_diff_eq!(s.rate, 0.8, epsilon = 1e-12);
        let (first, tau) = s.mix.iter().find(|(p, _)| p.r1 > 0.0).unwrap();
        assert_abs_diff_eq!(first.r1, 4.0 / 3.0);
        assert_abs_diff_eq!(*tau, 0.6, epsilon = 1e-12);
    }

    #[test]
    fn equal_rate_on_diagonal_vertex() {
        let r = upper_hull(vec![pt(1.0, 0.0), pt(0.0, 1.0), pt(0.9, 0.9)]);
        let s = equal_rate_point(&r);
        assert_abs_diff_eq!(s.rate, 0.9, epsilon = 1e-12);
        assert_eq!(s.mix.len(), 1);
        assert_eq!(s.mix[0].1, 1.0);
    }

    #[test]
    fn one_sided_region_is_degenerate() {
        let r = upper_hull(vec![pt(1.0, 0.0), pt(0.0, 0.0)]);
        let s = equal_rate_point(&r);
        assert!(s.degenerate);
        assert_eq!(s.rate, 0.0);
        assert!(s.mix.is_empty());
        let empty = upper_hull(vec![pt(0.0, 0.0)]);
        assert!(equal_rate_point(&empty).degenerate);
    }

    #[test]
    fn unordered_snrs_rejected() {
        let table = ModCodTable {
            entries: Vec::new(),
            pilot_offset_db: 0.0,
        };
        assert!(matches!(
            achievable_points(5.0, 1.0, &table),
            Err(Error::InvalidParameter(_))
        ));
    }
}
