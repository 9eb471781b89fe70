//! Equal-rate time sharing across receivers, receiver pairing and plans.
//!
//! With per-receiver rates `R_i`, the fractions
//! `t_i = Π_{k≠i} R_k / Σ_j Π_{k≠j} R_k` are the unique solution of
//! `t_i R_i = t_j R_j`, `Σ t_i = 1`, and every receiver then gets
//! `R = Π_k R_k / Σ_j Π_{k≠j} R_k`.
//!
//! In a hierarchical plan the channel is shared by groups (pairs, plus one
//! singleton when `n` is odd). A group on air gives each member its equal-rate
//! `R_g`. Each member's share of the channel time is `t_i = T_g / |g|`, so the
//! rate entering the formulas above is `|g| · R_g`. For pairs this gives both
//! members the same `t`, and the pair is on air for `2t`.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rate_region::{best_single_modcod, equal_rate_point, pair_region, Provenance};
use crate::thresholds::ModCodTable;
use crate::{Error, Result};

/// Largest receiver count searched exhaustively.
pub const MAX_EXHAUSTIVE_RECEIVERS: usize = 12;

/// Relative tolerance under which two plan rates are considered tied.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Receiver {
    pub id: String,
    pub snr_db: f64,
}

impl Receiver {
    pub fn new(id: impl Into<String>, snr_db: f64) -> Self {
        Self {
            id: id.into(),
            snr_db,
        }
    }
}

/// Receivers named `rec1..recN` with the given SNRs.
pub fn receivers_from_snrs(snrs: &[f64]) -> Vec<Receiver> {
    snrs.iter()
        .enumerate()
        .map(|(i, &s)| Receiver::new(format!("rec{}", i + 1), s))
        .collect()
}

fn check_rates(rates: &[f64]) -> Result<()> {
    if rates.is_empty() {
        return Err(Error::InvalidParameter("no rates given".into()));
    }
    let bad: Vec<String> = rates
        .iter()
        .enumerate()
        .filter(|(_, &r)| !(r > 0.0 && r.is_finite()))
        .map(|(i, r)| format!("#{i} (rate {r})"))
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::DegenerateReceiver { ids: bad })
    }
}

/// `Π_{k≠i} R_k` for every `i`, computed on rates scaled by their geometric
/// mean (the ratios below are scale-free), plus the scale used.
fn leave_one_out_products(rates: &[f64]) -> (Vec<f64>, f64) {
    let n = rates.len();
    let scale = (rates.iter().map(|r| r.ln()).sum::<f64>() / n as f64).exp();
    let scaled: Vec<f64> = rates.iter().map(|r| r / scale).collect();
    let mut prefix = vec![1.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] * scaled[i];
    }
    let mut suffix = vec![1.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] * scaled[i];
    }
    ((0..n).map(|i| prefix[i] * suffix[i + 1]).collect(), scale)
}

/// Equal-rate time fractions for positive per-receiver rates.
pub fn time_fractions(rates: &[f64]) -> Result<Vec<f64>> {
    check_rates(rates)?;
    let (products, _) = leave_one_out_products(rates);
    let total: f64 = products.iter().sum();
    Ok(products.iter().map(|p| p / total).collect())
}

/// Common average rate under the equal-rate allocation.
pub fn equal_rate(rates: &[f64]) -> Result<f64> {
    check_rates(rates)?;
    let (products, scale) = leave_one_out_products(rates);
    let all = products[0] * rates[0] / scale;
    Ok(scale * all / products.iter().sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    Single(usize),
    Pair(usize, usize),
}

impl Group {
    pub fn members(&self) -> Vec<usize> {
        match *self {
            Group::Single(i) => vec![i],
            Group::Pair(i, j) => vec![i, j],
        }
    }
}

/// A partition of receivers (by index) into pairs and at most one singleton.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grouping {
    pub groups: Vec<Group>,
}

impl Grouping {
    /// Every receiver alone.
    pub fn singletons(n: usize) -> Self {
        Self {
            groups: (0..n).map(Group::Single).collect(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        let mut singles = 0;
        for g in &self.groups {
            if matches!(g, Group::Single(_)) {
                singles += 1;
            }
            for i in g.members() {
                if i >= n || seen[i] {
                    return Err(Error::InvalidParameter(format!(
                        "grouping must cover each of {n} receivers exactly once"
                    )));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidParameter(format!(
                "grouping must cover each of {n} receivers exactly once"
            )));
        }
        if singles > n % 2 {
            return Err(Error::InvalidParameter(
                "at most one singleton allowed".into(),
            ));
        }
        Ok(())
    }

    /// Total `|ΔSNR|` over pairs.
    pub fn spread(&self, receivers: &[Receiver]) -> f64 {
        self.groups
            .iter()
            .map(|g| match *g {
                Group::Pair(i, j) => (receivers[i].snr_db - receivers[j].snr_db).abs(),
                Group::Single(_) => 0.0,
            })
            .sum()
    }

    /// Per-group SNRs (descending), groups in descending lexicographic order.
    /// Two groupings with the same key perform identically.
    pub fn snr_key(&self, receivers: &[Receiver]) -> Vec<Vec<f64>> {
        let mut key: Vec<Vec<f64>> = self
            .groups
            .iter()
            .map(|g| {
                let mut s: Vec<f64> = g
                    .members()
                    .iter()
                    .map(|&i| receivers[i].snr_db + 0.0)
                    .collect();
                s.sort_by(|a, b| b.total_cmp(a));
                s
            })
            .collect();
        key.sort_by(|a, b| cmp_f64_slices(b, a));
        key
    }

    /// E.g. `(rec1,rec4) (rec2,rec5) (rec3)`.
    pub fn describe(&self, receivers: &[Receiver]) -> String {
        self.groups
            .iter()
            .map(|g| {
                let ids: Vec<&str> = g
                    .members()
                    .iter()
                    .map(|&i| receivers[i].id.as_str())
                    .collect();
                format!("({})", ids.join(","))
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// E.g. `(8,4) (6,4) (6,4)` in key order.
    pub fn describe_snrs(&self, receivers: &[Receiver]) -> String {
        self.snr_key(receivers)
            .iter()
            .map(|g| {
                format!(
                    "({})",
                    g.iter()
                        .map(|s| s.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                )
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn cmp_f64_slices(a: &[f64], b: &[f64]) -> Ordering {
    for (p, q) in a.iter().zip(b) {
        match p.total_cmp(q) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

fn cmp_snr_lists(a: &[Vec<f64>], b: &[Vec<f64>]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match cmp_f64_slices(x, y) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Preferred-first order among equally performing groupings: larger spread,
/// then larger SNR key.
fn cmp_preference(a: &Grouping, b: &Grouping, receivers: &[Receiver]) -> Ordering {
    b.spread(receivers)
        .total_cmp(&a.spread(receivers))
        .then_with(|| cmp_snr_lists(&b.snr_key(receivers), &a.snr_key(receivers)))
}

/// One line of a schedule: a group on air with one operating point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleEntry {
    /// Receiver indices; for pairs the lower-SNR member comes first.
    pub receivers: Vec<usize>,
    pub modcod: String,
    pub alpha: Option<f64>,
    /// Rate to the first member while on air.
    pub rate_1: f64,
    /// Rate to the second member (0 for singletons).
    pub rate_2: f64,
    pub time_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub receivers: Vec<Receiver>,
    pub grouping: Grouping,
    /// `t_i`, each receiver's share of the channel time.
    pub fractions: Vec<f64>,
    /// `R_i` entering the equal-rate formulas: `|group| · R_group`.
    pub rates: Vec<f64>,
    /// Rate a receiver gets while its group is on air.
    pub link_rates: Vec<f64>,
    /// Common average rate `t_i · R_i`.
    pub rate: f64,
    pub schedule: Vec<ScheduleEntry>,
}

struct GroupService {
    members: Vec<usize>,
    rate: f64,
    /// (modcod label, alpha, rate to first member, rate to second, weight)
    mix: Vec<(String, Option<f64>, f64, f64, f64)>,
}

fn serve_single(i: usize, receivers: &[Receiver], table: &ModCodTable) -> Option<GroupService> {
    let m = best_single_modcod(receivers[i].snr_db, table)?;
    Some(GroupService {
        members: vec![i],
        rate: m.spectral_rate,
        mix: vec![(m.tag(), None, m.spectral_rate, 0.0, 1.0)],
    })
}

fn serve_pair(
    i: usize,
    j: usize,
    receivers: &[Receiver],
    table: &ModCodTable,
) -> Option<GroupService> {
    let (lo, hi) = if receivers[i].snr_db <= receivers[j].snr_db {
        (i, j)
    } else {
        (j, i)
    };
    let region = pair_region(receivers[lo].snr_db, receivers[hi].snr_db, table, true);
    let sol = equal_rate_point(&region);
    if sol.degenerate || sol.rate <= 0.0 {
        return None;
    }
    let mix = sol
        .mix
        .iter()
        .map(|(p, w)| {
            let alpha = match p.provenance {
                Provenance::Hierarchical { alpha, .. } => Some(alpha),
                _ => None,
            };
            (p.provenance.to_string(), alpha, p.r1, p.r2, *w)
        })
        .collect();
    Some(GroupService {
        members: vec![lo, hi],
        rate: sol.rate,
        mix,
    })
}

fn assemble(
    receivers: &[Receiver],
    grouping: Grouping,
    services: Vec<GroupService>,
) -> Result<Plan> {
    let n = receivers.len();
    let mut rates = vec![0.0; n];
    let mut link_rates = vec![0.0; n];
    for s in &services {
        for &i in &s.members {
            rates[i] = s.members.len() as f64 * s.rate;
            link_rates[i] = s.rate;
        }
    }
    let fractions = time_fractions(&rates)?;
    let rate = equal_rate(&rates)?;
    let mut schedule = Vec::new();
    for s in &services {
        let on_air: f64 = s.members.iter().map(|&i| fractions[i]).sum();
        for (label, alpha, r1, r2, w) in &s.mix {
            schedule.push(ScheduleEntry {
                receivers: s.members.clone(),
                modcod: label.clone(),
                alpha: *alpha,
                rate_1: *r1,
                rate_2: *r2,
                time_fraction: on_air * w,
            });
        }
    }
    Ok(Plan {
        receivers: receivers.to_vec(),
        grouping,
        fractions,
        rates,
        link_rates,
        rate,
        schedule,
    })
}

/// Classical time sharing: every receiver served alone with its best modcod.
pub fn classical_plan(receivers: &[Receiver], table: &ModCodTable) -> Result<Plan> {
    if receivers.is_empty() {
        return Err(Error::InvalidParameter("no receivers".into()));
    }
    let mut services = Vec::with_capacity(receivers.len());
    let mut offenders = Vec::new();
    for i in 0..receivers.len() {
        match serve_single(i, receivers, table) {
            Some(s) => services.push(s),
            None => offenders.push(receivers[i].id.clone()),
        }
    }
    if !offenders.is_empty() {
        return Err(Error::DegenerateReceiver { ids: offenders });
    }
    assemble(receivers, Grouping::singletons(receivers.len()), services)
}

/// Hierarchical time sharing for a given grouping.
pub fn pair_plan(receivers: &[Receiver], grouping: &Grouping, table: &ModCodTable) -> Result<Plan> {
    if receivers.is_empty() {
        return Err(Error::InvalidParameter("no receivers".into()));
    }
    grouping.validate(receivers.len())?;
    let mut services = Vec::with_capacity(grouping.groups.len());
    let mut offenders = Vec::new();
    for g in &grouping.groups {
        let service = match *g {
            Group::Single(i) => serve_single(i, receivers, table),
            Group::Pair(i, j) => serve_pair(i, j, receivers, table),
        };
        match service {
            Some(s) => services.push(s),
            None => offenders.extend(g.members().iter().map(|&i| receivers[i].id.clone())),
        }
    }
    if !offenders.is_empty() {
        return Err(Error::DegenerateReceiver { ids: offenders });
    }
    assemble(receivers, grouping.clone(), services)
}

/// All groupings of `receivers`, one per distinct multiset of per-group SNRs,
/// in enumeration order.
pub fn enumerate_groupings(receivers: &[Receiver]) -> Result<Vec<Grouping>> {
    let n = receivers.len();
    if n == 0 {
        return Err(Error::InvalidParameter("no receivers".into()));
    }
    if n > MAX_EXHAUSTIVE_RECEIVERS {
        return Err(Error::Size {
            n,
            max: MAX_EXHAUSTIVE_RECEIVERS,
        });
    }
    let mut all = Vec::new();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut current = Vec::new();
    matchings(&mut remaining, n % 2 == 1, &mut current, &mut all);

    let mut seen = HashSet::new();
    let mut distinct = Vec::new();
    for g in all {
        let key: Vec<Vec<u64>> = g
            .snr_key(receivers)
            .iter()
            .map(|grp| grp.iter().map(|s| s.to_bits()).collect())
            .collect();
        if seen.insert(key) {
            distinct.push(g);
        }
    }
    Ok(distinct)
}

fn matchings(
    remaining: &mut Vec<usize>,
    single_left: bool,
    current: &mut Vec<Group>,
    out: &mut Vec<Grouping>,
) {
    if remaining.is_empty() {
        out.push(Grouping {
            groups: current.clone(),
        });
        return;
    }
    let first = remaining.remove(0);
    if single_left {
        current.push(Group::Single(first));
        matchings(remaining, false, current, out);
        current.pop();
    }
    for k in 0..remaining.len() {
        let partner = remaining.remove(k);
        current.push(Group::Pair(first, partner));
        matchings(remaining, single_left, current, out);
        current.pop();
        remaining.insert(k, partner);
    }
    remaining.insert(0, first);
}

/// Pairs rank `i` with rank `m/2 + i` after sorting by descending SNR; with
/// odd `n` the best receiver is served alone.
pub fn max_spread_grouping(receivers: &[Receiver]) -> Grouping {
    let mut order: Vec<usize> = (0..receivers.len()).collect();
    order.sort_by(|&a, &b| receivers[b].snr_db.total_cmp(&receivers[a].snr_db));
    let mut groups = Vec::new();
    let rest = if order.len() % 2 == 1 {
        groups.push(Group::Single(order[0]));
        &order[1..]
    } else {
        &order[..]
    };
    let half = rest.len() / 2;
    for i in 0..half {
        groups.push(Group::Pair(rest[i], rest[half + i]));
    }
    Grouping { groups }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupingMode {
    /// Exhaustive up to [`MAX_EXHAUSTIVE_RECEIVERS`], heuristic beyond.
    #[default]
    Auto,
    Exhaustive,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupingChoice {
    pub grouping: Grouping,
    pub plan: Plan,
    /// Every grouping reaching the best rate, canonical one first.
    pub co_optimal: Vec<Grouping>,
}

/// Plans of every distinct grouping that admits one, in preference order
/// (rate, then spread, then SNR key).
pub fn ranked_plans(receivers: &[Receiver], table: &ModCodTable) -> Result<Vec<(Grouping, Plan)>> {
    let groupings = enumerate_groupings(receivers)?;
    let results: Vec<Result<Plan>> = groupings
        .par_iter()
        .map(|g| pair_plan(receivers, g, table))
        .collect();
    let mut first_err = None;
    let mut ok = Vec::new();
    for (g, r) in groupings.into_iter().zip(results) {
        match r {
            Ok(p) => ok.push((g, p)),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if ok.is_empty() {
        return Err(first_err.unwrap_or_else(|| Error::InvalidParameter("no grouping".into())));
    }
    let best = ok
        .iter()
        .map(|(_, p)| p.rate)
        .fold(f64::NEG_INFINITY, f64::max);
    let tied = |r: f64| r >= best - TIE_TOLERANCE * best.abs();
    ok.sort_by(|(ga, pa), (gb, pb)| match (tied(pa.rate), tied(pb.rate)) {
        (true, true) => cmp_preference(ga, gb, receivers),
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (false, false) => pb
            .rate
            .total_cmp(&pa.rate)
            .then_with(|| cmp_preference(ga, gb, receivers)),
    });
    Ok(ok)
}

/// Grouping with the highest common rate.
pub fn best_grouping(
    receivers: &[Receiver],
    table: &ModCodTable,
    mode: GroupingMode,
) -> Result<GroupingChoice> {
    let heuristic = match mode {
        GroupingMode::Heuristic => true,
        GroupingMode::Exhaustive => false,
        GroupingMode::Auto => receivers.len() > MAX_EXHAUSTIVE_RECEIVERS,
    };
    if heuristic {
        if receivers.is_empty() {
            return Err(Error::InvalidParameter("no receivers".into()));
        }
        let grouping = max_spread_grouping(receivers);
        let plan = pair_plan(receivers, &grouping, table)?;
        return Ok(GroupingChoice {
            co_optimal: vec![grouping.clone()],
            grouping,
            plan,
        });
    }
    let ranked = ranked_plans(receivers, table)?;
    let best = ranked[0].1.rate;
    let co_optimal = ranked
        .iter()
        .take_while(|(_, p)| p.rate >= best - TIE_TOLERANCE * best.abs())
        .map(|(g, _)| g.clone())
        .collect();
    let (grouping, plan) = ranked.into_iter().next().expect("non-empty");
    Ok(GroupingChoice {
        grouping,
        plan,
        co_optimal,
    })
}

impl Plan {
    /// Writes `group,modcod,alpha,rate_1,rate_2,time_fraction` rows.
    pub fn write_schedule_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "group",
            "modcod",
            "alpha",
            "rate_1",
            "rate_2",
            "time_fraction",
        ])?;
        for e in &self.schedule {
            let ids: Vec<&str> = e
                .receivers
                .iter()
                .map(|&i| self.receivers[i].id.as_str())
                .collect();
            w.write_record([
                ids.join("+"),
                e.modcod.clone(),
                e.alpha.map_or(String::new(), |a| a.to_string()),
                e.rate_1.to_string(),
                e.rate_2.to_string(),
                e.time_fraction.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `receiver,snr_db,time_fraction,rate,link_rate,average_rate` rows.
    pub fn write_receivers_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "receiver",
            "snr_db",
            "time_fraction",
            "rate",
            "link_rate",
            "average_rate",
        ])?;
        for (i, r) in self.receivers.iter().enumerate() {
            w.write_record([
                r.id.clone(),
                r.snr_db.to_string(),
                self.fractions[i].to_string(),
                self.rates[i].to_string(),
                self.link_rates[i].to_string(),
                (self.fractions[i] * self.rates[i]).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Relative throughput gain in percent.
pub fn gain_percent(hierarchical: f64, classical: f64) -> f64 {
    100.0 * (hierarchical - classical) / classical
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "grouping: {}", self.grouping.describe(&self.receivers))?;
        writeln!(f, "common rate: {:.6} bit/symbol", self.rate)?;
        for e in &self.schedule {
            let ids: Vec<&str> = e
                .receivers
                .iter()
                .map(|&i| self.receivers[i].id.as_str())
                .collect();
            writeln!(
                f,
                "  {:<16} {:<40} {:.6}",
                ids.join("+"),
                e.modcod,
                e.time_fraction
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn symmetric_fractions() {
        assert_eq!(time_fractions(&[1.0, 1.0]).unwrap(), vec![0.5, 0.5]);
        assert_abs_diff_eq!(equal_rate(&[1.0, 1.0]).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn two_receiver_fractions() {
        // Π_{k≠1} = 2, Π_{k≠2} = 4/3; sum 10/3.
        let t = time_fractions(&[4.0 / 3.0, 2.0]).unwrap();
        assert_abs_diff_eq!(t[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(t[1], 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(equal_rate(&[4.0 / 3.0, 2.0]).unwrap(), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn three_receiver_fractions() {
        // Π_{k≠i}: 8, 4, 2 over 14.
        let t = time_fractions(&[1.0, 2.0, 4.0]).unwrap();
        for (got, want) in t.iter().zip([4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn non_positive_rates_rejected() {
        for rates in [vec![1.0, 0.0], vec![-1.0], vec![], vec![f64::NAN, 1.0]] {
            assert!(time_fractions(&rates).is_err());
            assert!(equal_rate(&rates).is_err());
        }
        assert!(matches!(
            time_fractions(&[1.0, 0.0]),
            Err(Error::DegenerateReceiver { .. })
        ));
    }

    #[test]
    fn enumerate_two_and_four() {
        let two = receivers_from_snrs(&[1.0, 2.0]);
        assert_eq!(enumerate_groupings(&two).unwrap().len(), 1);
        let four = receivers_from_snrs(&[1.0, 2.0, 3.0, 4.0]);
        let all = enumerate_groupings(&four).unwrap();
        assert_eq!(all.len(), 3);
        for g in &all {
            g.validate(4).unwrap();
        }
    }

    #[test]
    fn enumerate_counts_match_double_factorial() {
        // Distinct SNRs: every perfect matching is distinct, (n−1)!!.
        for (n, want) in [(2, 1), (4, 3), (6, 15), (8, 105), (10, 945)] {
            let snrs: Vec<f64> = (0..n).map(|i| i as f64).collect();
            assert_eq!(
                enumerate_groupings(&receivers_from_snrs(&snrs))
                    .unwrap()
                    .len(),
                want
            );
        }
        // Odd n: choose the singleton, then match the rest: n · (n−2)!!.
        for (n, want) in [(1, 1), (3, 3), (5, 15), (7, 105)] {
            let snrs: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let all = enumerate_groupings(&receivers_from_snrs(&snrs)).unwrap();
            assert_eq!(all.len(), want);
            for g in &all {
                g.validate(n).unwrap();
            }
        }
    }

    #[test]
    fn beam_population_has_three_strategies() {
        let rec = receivers_from_snrs(&[8.0, 6.0, 6.0, 4.0, 4.0, 4.0]);
        let all = enumerate_groupings(&rec).unwrap();
        let mut keys: Vec<String> = all.iter().map(|g| g.describe_snrs(&rec)).collect();
        keys.sort();
        assert_eq!(
            keys,
            vec![
                "(8,4) (6,4) (6,4)",
                "(8,4) (6,6) (4,4)",
                "(8,6) (6,4) (4,4)"
            ]
        );
    }

    #[test]
    fn exhaustive_size_limit() {
        let rec = receivers_from_snrs(&[1.0; 13]);
        assert!(matches!(
            enumerate_groupings(&rec),
            Err(Error::Size { n: 13, max: 12 })
        ));
    }

    #[test]
    fn max_spread_pairs_ranks() {
        let rec = receivers_from_snrs(&[1.0, 5.0, 3.0, 7.0]);
        let g = max_spread_grouping(&rec);
        assert_eq!(g.groups, vec![Group::Pair(3, 2), Group::Pair(1, 0)]);
        let odd = receivers_from_snrs(&[1.0, 5.0, 3.0]);
        assert_eq!(
            max_spread_grouping(&odd).groups,
            vec![Group::Single(1), Group::Pair(2, 0)]
        );
    }

    #[test]
    fn grouping_validation() {
        let bad = Grouping {
            groups: vec![Group::Pair(0, 1), Group::Pair(1, 2)],
        };
        assert!(bad.validate(3).is_err());
        let missing = Grouping {
            groups: vec![Group::Pair(0, 1)],
        };
        assert!(missing.validate(4).is_err());
        let two_singles = Grouping {
            groups: vec![Group::Single(0), Group::Single(1)],
        };
        assert!(two_singles.validate(2).is_err());
    }

    proptest! {
        #[test]
        fn allocation_algebra(rates in prop::collection::vec(0.1f64..4.0, 1..=8)) {
            let t = time_fractions(&rates).unwrap();
            let r = equal_rate(&rates).unwrap();
            prop_assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (ti, ri) in t.iter().zip(&rates) {
                prop_assert!((ti * ri - r).abs() < 1e-12);
            }
            let harmonic = 1.0 / rates.iter().map(|x| 1.0 / x).sum::<f64>();
            prop_assert!((r - harmonic).abs() < 1e-12);
        }

        #[test]
        fn enumerated_groupings_are_partitions(snrs in prop::collection::vec(-2.0f64..12.0, 1..=7)) {
            let rec = receivers_from_snrs(&snrs);
            for g in enumerate_groupings(&rec).unwrap() {
                prop_assert!(g.validate(rec.len()).is_ok());
            }
        }
    }
}
