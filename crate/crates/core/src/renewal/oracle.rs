//! Reference implementations used only to cross-check the production code.
//!
//! Nothing here is called on any production path; the point of these
//! functions is that they are written from the defining property, not from
//! the stopping-time construction, so an agreement between the two is
//! meaningful.

use super::drawdown::RawExtremum;

/// Quadratic-time threshold-extrema finder working straight from the
/// definition: a position is an `h`-minimum (maximum) when it is the last
/// minimizer (maximizer) of its excursion and the walk rises (falls) by at
/// least `h` on both sides of it before crossing its level, with both
/// certifying excursions visible inside the window.
pub fn brute_force_h_extrema(values: &[f64], h: f64) -> Vec<RawExtremum> {
    let n = values.len();
    let mut out = Vec::new();
    for t in 0..n {
        let v = values[t];
        // candidate minimum
        let mut right_ok = false;
        for s in t + 1..n {
            if values[s] <= v {
                // lower, or a later tie that supersedes t
                right_ok = false;
                break;
            }
            if values[s] - v >= h {
                right_ok = true;
                break;
            }
        }
        if right_ok {
            let mut left_ok = false;
            for s in (0..t).rev() {
                if values[s] < v {
                    left_ok = false;
                    break;
                }
                if values[s] - v >= h {
                    left_ok = true;
                    break;
                }
            }
            if left_ok {
                out.push(RawExtremum {
                    pos: t as u64,
                    value: v,
                    is_max: false,
                    certified: true,
                });
                continue;
            }
        }
        // candidate maximum
        let mut right_ok = false;
        for s in t + 1..n {
            if values[s] >= v {
                right_ok = false;
                break;
            }
            if v - values[s] >= h {
                right_ok = true;
                break;
            }
        }
        if right_ok {
            let mut left_ok = false;
            for s in (0..t).rev() {
                if values[s] > v {
                    left_ok = false;
                    break;
                }
                if v - values[s] >= h {
                    left_ok = true;
                    break;
                }
            }
            if left_ok {
                out.push(RawExtremum {
                    pos: t as u64,
                    value: v,
                    is_max: true,
                    certified: true,
                });
            }
        }
    }
    out
}
