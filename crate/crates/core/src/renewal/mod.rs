//! Walks, threshold extrema and the renewal structure they generate:
//! drawdown-detected alternating extrema, maximal two-sided elongations with
//! an excess margin, the closed-form limit laws and statistical comparison
//! harnesses.

mod drawdown;
mod elongation;
pub mod laws;
pub mod oracle;

pub use drawdown::{
    drawdown_extrema, sample_bbm, sample_bbm_interarrivals, sample_bbm_residuals,
    DrawdownScanner, RawExtremum,
};
pub use elongation::{maximal_elongations, ElongationRecord};

use crate::error::{Error, Result};
use serde::Serialize;

/// How a walk was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WalkKind {
    ChiWalk,
    BbmSample,
    Deterministic,
}

/// A piecewise-constant path on a uniform grid. `values[k]` is the value at
/// grid index `first_index + k`; time of index i is `i * dt`.
#[derive(Debug, Clone, Serialize)]
pub struct WalkPath {
    pub dt: f64,
    pub first_index: i64,
    pub values: Vec<f64>,
    pub kind: WalkKind,
}

impl WalkPath {
    pub fn new(dt: f64, first_index: i64, values: Vec<f64>, kind: WalkKind) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Domain("grid step must be positive".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("walk value not finite".into()));
        }
        let w = Self {
            dt,
            first_index,
            values,
            kind,
        };
        if let Some(v0) = w.value_at_index(0) {
            if v0 != 0.0 {
                return Err(Error::Precondition("walk must vanish at the origin".into()));
            }
        }
        Ok(w)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last_index(&self) -> i64 {
        self.first_index + self.values.len() as i64 - 1
    }

    pub fn value_at_index(&self, idx: i64) -> Option<f64> {
        let off = idx.checked_sub(self.first_index)?;
        if off < 0 {
            return None;
        }
        self.values.get(off as usize).copied()
    }

    /// Value at real time `t`, nearest-grid convention.
    pub fn value_at_time(&self, t: f64) -> Result<f64> {
        let idx = (t / self.dt).round() as i64;
        self.value_at_index(idx.clamp(self.first_index, self.last_index()))
            .ok_or_else(|| Error::Domain(format!("time {t} outside the walk span")))
    }

    pub fn time_of_index(&self, idx: i64) -> f64 {
        idx as f64 * self.dt
    }
}

/// One detected extremum of a walk.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Extremum {
    /// grid index
    pub index: i64,
    /// real time, index * dt
    pub time: f64,
    pub value: f64,
    pub is_max: bool,
    /// false only for a leading extremum whose outer excursion could not be
    /// verified inside the available window
    pub certified: bool,
}

/// An ordered alternating sequence of threshold extrema of one walk.
#[derive(Debug, Clone, Serialize)]
pub struct RenewalRecord {
    /// detection threshold on the walk's own scale
    pub threshold: f64,
    pub extrema: Vec<Extremum>,
    /// the window ended before the stretch containing its right end closed
    pub incomplete_right: bool,
}

impl RenewalRecord {
    /// Times of the certified extrema.
    pub fn certified_times(&self) -> Vec<f64> {
        self.extrema
            .iter()
            .filter(|e| e.certified)
            .map(|e| e.time)
            .collect()
    }

    /// Verify alternation, the minimal gap between consecutive extremum
    /// values and the containment of the path between them.
    pub fn validate_against(&self, path: &WalkPath) -> Result<()> {
        let h = self.threshold;
        for w in self.extrema.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if a.is_max == b.is_max {
                return Err(Error::Numerical("extremum labels do not alternate".into()));
            }
            if a.index >= b.index {
                return Err(Error::Numerical("extremum times not increasing".into()));
            }
            let gap = b.value - a.value;
            if a.is_max {
                if !(gap <= -h) {
                    return Err(Error::Numerical(format!(
                        "descending stretch gap {gap} above -{h}"
                    )));
                }
            } else if !(gap >= h) {
                return Err(Error::Numerical(format!(
                    "ascending stretch gap {gap} below {h}"
                )));
            }
            let (lo, hi) = if a.is_max {
                (b.value, a.value)
            } else {
                (a.value, b.value)
            };
            // containment between the bracketing values, and counter-moves
            // against the stretch direction never exceeding the threshold
            let mut run = path
                .value_at_index(a.index)
                .ok_or_else(|| Error::Numerical("extremum outside path".into()))?;
            let mut worst: f64 = 0.0;
            for idx in a.index..=b.index {
                let v = path
                    .value_at_index(idx)
                    .ok_or_else(|| Error::Numerical("extremum outside path".into()))?;
                if v < lo - 1e-12 || v > hi + 1e-12 {
                    return Err(Error::Numerical(format!(
                        "path escapes the extremum bracket at index {idx}"
                    )));
                }
                if a.is_max {
                    run = run.min(v);
                    worst = worst.max(v - run);
                } else {
                    run = run.max(v);
                    worst = worst.max(run - v);
                }
            }
            if worst > h + 1e-12 {
                return Err(Error::Numerical(format!(
                    "counter-move {worst} exceeds threshold {h} inside a stretch"
                )));
            }
        }
        Ok(())
    }
}

/// A record relabeled so index 0 is the last extremum at time <= 0.
#[derive(Debug, Clone, Serialize)]
pub struct RelabeledRecord {
    /// (label, extremum), labels consecutive and increasing
    pub labeled: Vec<(i64, Extremum)>,
    /// inf{ i >= 0 : time_i > q }; None encodes +infinity (empty set)
    pub kappa_plus: Option<i64>,
    /// sup{ i <= 0 : time_i < -q }; None encodes -infinity (empty set)
    pub kappa_minus: Option<i64>,
}

impl RelabeledRecord {
    pub fn time_of_label(&self, label: i64) -> Option<f64> {
        self.labeled
            .iter()
            .find(|(l, _)| *l == label)
            .map(|(_, e)| e.time)
    }
}

/// Relabel a record so that S_0 <= 0 < S_1 and count the extrema beyond the
/// window [-q, q] on each side.
pub fn relabel_s(record: &RenewalRecord, q: f64) -> Result<RelabeledRecord> {
    if record.extrema.is_empty() {
        return Err(Error::Precondition("cannot relabel an empty record".into()));
    }
    // position of the last extremum at time <= 0; if none, labels start at 1
    let zero_pos = record.extrema.iter().rposition(|e| e.time <= 0.0);
    let base = match zero_pos {
        Some(p) => p as i64,
        None => -1,
    };
    let labeled: Vec<(i64, Extremum)> = record
        .extrema
        .iter()
        .enumerate()
        .map(|(i, e)| (i as i64 - base, *e))
        .collect();
    let kappa_plus = labeled
        .iter()
        .filter(|(l, e)| *l >= 0 && e.time > q)
        .map(|(l, _)| *l)
        .min();
    let kappa_minus = labeled
        .iter()
        .filter(|(l, e)| *l <= 0 && e.time < -q)
        .map(|(l, _)| *l)
        .max();
    Ok(RelabeledRecord {
        labeled,
        kappa_plus,
        kappa_minus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record_from_times(times: &[f64], first_is_max: bool) -> RenewalRecord {
        RenewalRecord {
            threshold: 1.0,
            extrema: times
                .iter()
                .enumerate()
                .map(|(i, &t)| Extremum {
                    index: (t * 10.0).round() as i64,
                    time: t,
                    value: if (i % 2 == 0) == first_is_max { 1.0 } else { -1.0 },
                    is_max: (i % 2 == 0) == first_is_max,
                    certified: true,
                })
                .collect(),
            incomplete_right: false,
        }
    }

    #[test]
    fn relabel_matches_direct_application() {
        // extrema at {-3, -1, 2, 5}, q = 4
        let r = record_from_times(&[-3.0, -1.0, 2.0, 5.0], false);
        let rel = relabel_s(&r, 4.0).unwrap();
        assert_eq!(rel.time_of_label(0), Some(-1.0));
        assert_eq!(rel.time_of_label(1), Some(2.0));
        assert_eq!(rel.time_of_label(-1), Some(-3.0));
        // S_2 = 5 > 4 is the first label >= 0 beyond q
        assert_eq!(rel.kappa_plus, Some(2));
        // no extremum below -4: empty-set convention (-infinity)
        assert_eq!(rel.kappa_minus, None);
    }

    #[test]
    fn relabel_all_positive_times() {
        let r = record_from_times(&[1.0, 2.5, 4.0], true);
        let rel = relabel_s(&r, 3.0).unwrap();
        // labels start at 1
        assert_eq!(rel.time_of_label(1), Some(1.0));
        assert_eq!(rel.time_of_label(0), None);
        assert_eq!(rel.kappa_plus, Some(3));
        assert_eq!(rel.kappa_minus, None);
    }

    #[test]
    fn relabel_shift_consistent() {
        let r1 = record_from_times(&[-3.0, -1.0, 2.0, 5.0], false);
        // shift every time by a small amount that crosses no sign boundary
        let mut r2 = r1.clone();
        for e in &mut r2.extrema {
            e.time += 0.1;
        }
        let a = relabel_s(&r1, 4.0).unwrap();
        let b = relabel_s(&r2, 4.0).unwrap();
        let la: Vec<i64> = a.labeled.iter().map(|(l, _)| *l).collect();
        let lb: Vec<i64> = b.labeled.iter().map(|(l, _)| *l).collect();
        assert_eq!(la, lb);
    }
}
