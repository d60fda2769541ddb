//! Geometric covering intervals restricted to a horizon.
//!
//! Rounds are 1-based. The intervals are `[2^k i, 2^k (i+1) - 1]` for
//! `k >= 0`, `i >= 1`, clipped to `[1, T]`, plus `[1, T]` itself; clipped
//! duplicates are merged. Every query is plain arithmetic on `(t, T)`.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Closed interval of rounds `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lo: usize,
    pub hi: usize,
}

impl Interval {
    pub fn new(lo: usize, hi: usize) -> Self {
        assert!(1 <= lo && lo <= hi, "invalid interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, t: usize) -> bool {
        self.lo <= t && t <= self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Level-`k` block containing `t`, clipped to the horizon.
fn block(t: usize, k: u32, horizon: usize) -> Option<Interval> {
    let size = 1usize << k;
    let i = t >> k;
    if i == 0 {
        return None;
    }
    let lo = i * size;
    Some(Interval::new(lo, (lo + size - 1).min(horizon)))
}

fn sorted_unique(mut v: Vec<Interval>) -> Vec<Interval> {
    v.sort_unstable();
    v.dedup();
    v
}

/// All intervals of the restricted family that contain `t`, sorted by `(lo, hi)`.
pub fn active_at(t: usize, horizon: usize) -> Vec<Interval> {
    assert!(1 <= t && t <= horizon, "round {t} outside [1, {horizon}]");
    let mut out: Vec<Interval> = (0..usize::BITS)
        .take_while(|&k| (1usize << k) <= t)
        .filter_map(|k| block(t, k, horizon))
        .collect();
    out.push(Interval::new(1, horizon));
    sorted_unique(out)
}

/// Intervals whose first round is `t`.
pub fn starting_at(t: usize, horizon: usize) -> Vec<Interval> {
    assert!(1 <= t && t <= horizon, "round {t} outside [1, {horizon}]");
    let mut out: Vec<Interval> = (0..usize::BITS)
        .take_while(|&k| t.is_multiple_of(1usize << k))
        .map(|k| Interval::new(t, (t + (1usize << k) - 1).min(horizon)))
        .collect();
    if t == 1 {
        out.push(Interval::new(1, horizon));
    }
    sorted_unique(out)
}

/// Intervals whose last round is `t`.
pub fn ending_at(t: usize, horizon: usize) -> Vec<Interval> {
    active_at(t, horizon).into_iter().filter(|i| i.hi == t).collect()
}

/// Whether `iv` belongs to the restricted family for `horizon`.
pub fn is_member(iv: Interval, horizon: usize) -> bool {
    if iv.hi > horizon {
        return false;
    }
    if iv.lo == 1 && iv.hi == horizon {
        return true;
    }
    (0..usize::BITS)
        .take_while(|&k| iv.lo.is_multiple_of(1usize << k))
        .any(|k| (iv.lo + (1usize << k) - 1).min(horizon) == iv.hi)
}

/// Total size of the restricted family.
pub fn family_size(horizon: usize) -> usize {
    (1..=horizon).map(|t| starting_at(t, horizon).len()).sum()
}

/// Splits `[lo, hi]` into disjoint members of the family, greedily taking the
/// longest member that starts at the current left end and fits.
pub fn partition(lo: usize, hi: usize, horizon: usize) -> Vec<Interval> {
    assert!(1 <= lo && lo <= hi && hi <= horizon, "invalid range [{lo}, {hi}] for horizon {horizon}");
    let mut out = Vec::new();
    let mut cur = lo;
    while cur <= hi {
        let end = if cur == 1 && hi == horizon {
            horizon
        } else {
            // clipped ends grow with k, so the last one that fits is the longest
            (0..usize::BITS)
                .take_while(|&k| cur.is_multiple_of(1usize << k))
                .map(|k| (cur + (1usize << k) - 1).min(horizon))
                .take_while(|&e| e <= hi)
                .last()
                .expect("the singleton [cur, cur] always fits")
        };
        out.push(Interval::new(cur, end));
        cur = end + 1;
    }
    out
}

/// Upper bound on the number of pieces returned by [`partition`].
pub fn partition_bound(lo: usize, hi: usize) -> usize {
    let n = hi - lo + 2;
    2 * (usize::BITS - (n - 1).leading_zeros()) as usize + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ivs(v: &[(usize, usize)]) -> Vec<Interval> {
        sorted_unique(v.iter().map(|&(a, b)| Interval::new(a, b)).collect())
    }

    #[test]
    fn active_examples() {
        assert_eq!(active_at(6, 8), ivs(&[(6, 6), (6, 7), (4, 7), (1, 8)]));
        assert_eq!(active_at(1, 8), ivs(&[(1, 1), (1, 8)]));
    }

    #[test]
    fn start_and_end_examples() {
        assert_eq!(starting_at(4, 8), ivs(&[(4, 4), (4, 5), (4, 7)]));
        assert_eq!(starting_at(1, 8), ivs(&[(1, 1), (1, 8)]));
        assert_eq!(ending_at(7, 8), ivs(&[(7, 7), (6, 7), (4, 7)]));
    }

    #[test]
    fn clipped_duplicates_are_merged() {
        // [4, 7] clipped to T = 5 coincides with the level-1 block [4, 5]
        assert_eq!(starting_at(4, 5), ivs(&[(4, 4), (4, 5)]));
        // with T a power of two, [1, T] is not a dyadic block and stays separate
        assert!(active_at(8, 8).contains(&Interval::new(1, 8)));
        assert!(active_at(8, 8).contains(&Interval::new(8, 8)));
    }

    #[test]
    fn partition_examples() {
        assert_eq!(partition(1, 1, 8), ivs(&[(1, 1)]));
        assert_eq!(partition(4, 7, 8), ivs(&[(4, 7)]));
        assert_eq!(partition(3, 8, 8), ivs(&[(3, 3), (4, 7), (8, 8)]));
        assert_eq!(partition(1, 8, 8), ivs(&[(1, 8)]));
    }

    #[test]
    fn partition_bound_values() {
        assert_eq!(partition_bound(1, 1), 3);
        assert_eq!(partition_bound(3, 8), 7);
    }

    #[test]
    fn active_count_bound_exhaustive() {
        let horizon = 1 << 14;
        for t in 1..=horizon {
            let n = active_at(t, horizon).len();
            assert!(n <= t.ilog2() as usize + 2, "t = {t}: {n} intervals");
        }
    }

    #[test]
    fn level_blocks_are_disjoint() {
        for k in 0..8u32 {
            let size = 1usize << k;
            let blocks: Vec<_> = (1..40).map(|i| (i * size, (i + 1) * size - 1)).collect();
            for w in blocks.windows(2) {
                assert!(w[0].1 < w[1].0);
            }
        }
    }

    #[test]
    fn spawn_and_retire_counts_agree() {
        for horizon in [2usize, 7, 8, 100, 256, 1000] {
            let starts: usize = (1..=horizon).map(|t| starting_at(t, horizon).len()).sum();
            let ends: usize = (1..=horizon).map(|t| ending_at(t, horizon).len()).sum();
            assert_eq!(starts, ends);
            assert_eq!(starts, family_size(horizon));
        }
    }

    #[test]
    fn starting_and_active_are_consistent() {
        for horizon in [5usize, 16, 37] {
            for t in 1..=horizon {
                for iv in starting_at(t, horizon) {
                    assert!(is_member(iv, horizon));
                    assert!(active_at(t, horizon).contains(&iv));
                }
                for iv in active_at(t, horizon) {
                    assert!(is_member(iv, horizon));
                }
            }
        }
    }

    /// Exhaustive over every horizon up to 512 and every sub-range.
    #[test]
    fn partition_is_exact_disjoint_cover() {
        for horizon in 1..=512usize {
            for a in 1..=horizon {
                for b in a..=horizon {
                    let parts = partition(a, b, horizon);
                    assert!(parts.len() <= partition_bound(a, b), "[{a},{b}] T={horizon}: {parts:?}");
                    let mut next = a;
                    for p in &parts {
                        assert_eq!(p.lo, next);
                        assert!(is_member(*p, horizon));
                        next = p.hi + 1;
                    }
                    assert_eq!(next, b + 1);
                }
            }
        }
    }
}
