//! Minimum-weight matching baselines.
//!
//! Bit flips: Z stabilizers are nodes of a decoding graph whose edges are
//! data qubits (a qubit shared by two stabilizers joins them, a qubit in a
//! single stabilizer joins it to the boundary). Defects are paired exactly by
//! subset dynamic programming up to [`EXACT_DEFECT_LIMIT`] defects and
//! greedily beyond.
//!
//! Phase flips: X stabilizers are column strips on a line, so matching is a
//! one-dimensional pairing problem solved exactly.

use std::collections::VecDeque;

use crate::code::CodeLayout;
use crate::error::{Error, Result};
use crate::gf2::BitVec;

pub const EXACT_DEFECT_LIMIT: usize = 14;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchOutcome {
    pub correction: BitVec,
    /// False when the greedy fallback was used.
    pub exact: bool,
}

#[derive(Clone, Debug)]
struct Route {
    len: usize,
    qubits: BitVec,
}

/// Precomputed shortest paths for the bit-flip decoding graph.
#[derive(Clone, Debug)]
pub struct BitflipMatcher {
    n_qubits: usize,
    n_stab: usize,
    /// `pair[a][b]`, `None` when disconnected.
    pair: Vec<Vec<Option<Route>>>,
    boundary: Vec<Option<Route>>,
}

impl BitflipMatcher {
    pub fn new(layout: &CodeLayout) -> Self {
        let n = layout.n_qubits();
        let stabs = layout.z_stabilizers();
        let n_stab = stabs.len();

        // qubit → stabilizers containing it
        let mut owners: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (s, sup) in stabs.iter().enumerate() {
            for q in sup.iter_ones() {
                owners[q].push(s);
            }
        }
        debug_assert!(owners.iter().all(|o| o.len() <= 2));

        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_stab];
        let mut boundary_qubits: Vec<Vec<usize>> = vec![Vec::new(); n_stab];
        for (q, o) in owners.iter().enumerate() {
            match o.as_slice() {
                [a, b] => {
                    adj[*a].push((*b, q));
                    adj[*b].push((*a, q));
                }
                [a] => boundary_qubits[*a].push(q),
                _ => {}
            }
        }

        let mut pair = Vec::with_capacity(n_stab);
        for src in 0..n_stab {
            // BFS with qubit-index tie-breaking
            let mut prev: Vec<Option<(usize, usize)>> = vec![None; n_stab];
            let mut dist = vec![usize::MAX; n_stab];
            dist[src] = 0;
            let mut queue = VecDeque::from([src]);
            while let Some(u) = queue.pop_front() {
                for &(v, q) in &adj[u] {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        prev[v] = Some((u, q));
                        queue.push_back(v);
                    }
                }
            }
            let routes = (0..n_stab)
                .map(|t| {
                    (dist[t] != usize::MAX).then(|| {
                        let mut qubits = BitVec::zeros(n);
                        let mut at = t;
                        while let Some((p, q)) = prev[at] {
                            qubits.flip(q);
                            at = p;
                        }
                        Route {
                            len: dist[t],
                            qubits,
                        }
                    })
                })
                .collect::<Vec<_>>();
            pair.push(routes);
        }

        let boundary = (0..n_stab)
            .map(|s| {
                let mut best: Option<Route> = None;
                for t in 0..n_stab {
                    let (Some(r), Some(&bq)) = (&pair[s][t], boundary_qubits[t].first()) else {
                        continue;
                    };
                    if best.as_ref().is_none_or(|b| r.len + 1 < b.len) {
                        let mut qubits = r.qubits.clone();
                        qubits.flip(bq);
                        best = Some(Route {
                            len: r.len + 1,
                            qubits,
                        });
                    }
                }
                best
            })
            .collect();

        BitflipMatcher {
            n_qubits: n,
            n_stab,
            pair,
            boundary,
        }
    }

    fn pair_cost(&self, a: usize, b: usize) -> usize {
        self.pair[a][b].as_ref().map_or(usize::MAX / 4, |r| r.len)
    }

    fn boundary_cost(&self, a: usize) -> usize {
        self.boundary[a].as_ref().map_or(usize::MAX / 4, |r| r.len)
    }

    pub fn decode(&self, syndrome: &BitVec) -> Result<MatchOutcome> {
        if syndrome.len() != self.n_stab {
            return Err(Error::LengthMismatch {
                expected: self.n_stab,
                found: syndrome.len(),
            });
        }
        let defects: Vec<usize> = syndrome.iter_ones().collect();
        let (plan, exact) = if defects.len() <= EXACT_DEFECT_LIMIT {
            (self.match_exact(&defects), true)
        } else {
            (self.match_greedy(&defects), false)
        };
        let mut correction = BitVec::zeros(self.n_qubits);
        for m in plan {
            let route = match m {
                (a, Some(b)) => self.pair[a][b].as_ref(),
                (a, None) => self.boundary[a].as_ref(),
            };
            let route = route.ok_or_else(|| Error::Invalid("defect cannot be matched".into()))?;
            correction.xor_assign_unchecked(&route.qubits);
        }
        Ok(MatchOutcome { correction, exact })
    }

    /// Subset DP: the lowest unresolved defect either goes to the boundary
    /// or pairs with another unresolved defect.
    fn match_exact(&self, defects: &[usize]) -> Vec<(usize, Option<usize>)> {
        let k = defects.len();
        let full = (1usize << k) - 1;
        let mut cost = vec![usize::MAX; 1 << k];
        let mut choice = vec![(0usize, usize::MAX); 1 << k];
        cost[0] = 0;
        for mask in 1..=full {
            let i = mask.trailing_zeros() as usize;
            let rest = mask & !(1 << i);
            let mut best = cost[rest].saturating_add(self.boundary_cost(defects[i]));
            let mut pick = (i, usize::MAX);
            let mut others = rest;
            while others != 0 {
                let j = others.trailing_zeros() as usize;
                others &= others - 1;
                let c = cost[rest & !(1 << j)]
                    .saturating_add(self.pair_cost(defects[i], defects[j]));
                if c < best {
                    best = c;
                    pick = (i, j);
                }
            }
            cost[mask] = best;
            choice[mask] = pick;
        }
        let mut plan = Vec::new();
        let mut mask = full;
        while mask != 0 {
            let (i, j) = choice[mask];
            mask &= !(1 << i);
            if j == usize::MAX {
                plan.push((defects[i], None));
            } else {
                mask &= !(1 << j);
                plan.push((defects[i], Some(defects[j])));
            }
        }
        plan
    }

    /// Repeatedly takes the cheapest remaining pair or boundary match.
    fn match_greedy(&self, defects: &[usize]) -> Vec<(usize, Option<usize>)> {
        let mut open: Vec<usize> = defects.to_vec();
        let mut plan = Vec::new();
        while !open.is_empty() {
            let mut best = (usize::MAX, 0, None);
            for (x, &a) in open.iter().enumerate() {
                let c = self.boundary_cost(a);
                if c < best.0 {
                    best = (c, x, None);
                }
                for (y, &b) in open.iter().enumerate().skip(x + 1) {
                    let c = self.pair_cost(a, b);
                    if c < best.0 {
                        best = (c, x, Some(y));
                    }
                }
            }
            let (_, x, y) = best;
            let a = open[x];
            match y {
                Some(y) => {
                    let b = open[y];
                    plan.push((a, Some(b)));
                    open.remove(y);
                    open.remove(x);
                }
                None => {
                    plan.push((a, None));
                    open.remove(x);
                }
            }
        }
        plan
    }
}

/// Phase-flip matching on the line of column strips.
///
/// Strip `s` (0-based) covers columns `s` and `s+1`, so a Z on column `c`
/// flips strips `c−1` and `c`. The correction flips the top qubit of every
/// column spanned by a matched pair or boundary route.
pub fn mwpm_decode_phaseflip(layout: &CodeLayout, syndrome: &BitVec) -> Result<BitVec> {
    let d = layout.d();
    if syndrome.len() != d - 1 {
        return Err(Error::LengthMismatch {
            expected: d - 1,
            found: syndrome.len(),
        });
    }
    let defects: Vec<usize> = syndrome.iter_ones().collect();
    let k = defects.len();
    let left = |s: usize| s + 1;
    let right = |s: usize| d - 1 - s;

    // best[i]: minimum cost for the first i defects
    let mut best = vec![usize::MAX; k + 1];
    let mut paired = vec![false; k + 1];
    best[0] = 0;
    for i in 1..=k {
        let s = defects[i - 1];
        best[i] = best[i - 1] + left(s).min(right(s));
        if i >= 2 {
            let c = best[i - 2] + (s - defects[i - 2]);
            if c < best[i] {
                best[i] = c;
                paired[i] = true;
            }
        }
    }

    let mut correction = BitVec::zeros(d * d);
    let mut flip_cols = |lo: usize, hi: usize| {
        for c in lo..hi {
            correction.flip(c);
        }
    };
    let mut i = k;
    while i > 0 {
        let s = defects[i - 1];
        if paired[i] {
            flip_cols(defects[i - 2] + 1, s + 1);
            i -= 2;
        } else {
            if left(s) <= right(s) {
                flip_cols(0, s + 1);
            } else {
                flip_cols(s + 1, d);
            }
            i -= 1;
        }
    }
    Ok(correction)
}

pub fn mwpm_decode_bitflip(layout: &CodeLayout, syndrome: &BitVec) -> Result<MatchOutcome> {
    BitflipMatcher::new(layout).decode(syndrome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_syndromes() {
        let l = CodeLayout::new(3).unwrap();
        let m = BitflipMatcher::new(&l);
        assert!(m.decode(&BitVec::zeros(4)).unwrap().correction.is_zero());
        assert!(mwpm_decode_phaseflip(&l, &BitVec::zeros(2)).unwrap().is_zero());
        assert!(m.decode(&BitVec::zeros(3)).is_err());
        assert!(mwpm_decode_phaseflip(&l, &BitVec::zeros(3)).is_err());
    }

    #[test]
    fn d3_single_defect_pair() {
        let l = CodeLayout::new(3).unwrap();
        let m = BitflipMatcher::new(&l);
        let out = m.decode(&"1100".parse().unwrap()).unwrap();
        assert!(out.exact);
        assert_eq!(out.correction.count_ones(), 1);
        assert_eq!(l.syndrome_bitflip(&out.correction).unwrap().to_string(), "1100");
        // the only weight-1 error with this syndrome is X on qubit 4
        let weight_one: Vec<usize> = (0..9)
            .filter(|&q| {
                let e = BitVec::from_indices(9, &[q]).unwrap();
                l.syndrome_bitflip(&e).unwrap().to_string() == "1100"
            })
            .collect();
        assert_eq!(weight_one, vec![4]);
        assert_eq!(out.correction, BitVec::from_indices(9, &[4]).unwrap());
    }

    /// Smallest error weight producing each syndrome, by enumeration.
    fn min_weights(l: &CodeLayout) -> std::collections::HashMap<BitVec, usize> {
        let mut best = std::collections::HashMap::new();
        for v in 0u64..1 << l.n_qubits() {
            let e = BitVec::from_u64(l.n_qubits(), v);
            let s = l.syndrome_bitflip(&e).unwrap();
            let w = e.count_ones();
            best.entry(s).and_modify(|b: &mut usize| *b = (*b).min(w)).or_insert(w);
        }
        best
    }

    #[test]
    fn d3_all_syndromes_consistent_and_minimal() {
        let l = CodeLayout::new(3).unwrap();
        let m = BitflipMatcher::new(&l);
        let mins = min_weights(&l);
        assert_eq!(mins.len(), 16);
        for v in 0u64..16 {
            let s = BitVec::from_u64(4, v);
            let out = m.decode(&s).unwrap();
            assert_eq!(l.syndrome_bitflip(&out.correction).unwrap(), s);
            assert_eq!(out.correction.count_ones(), mins[&s], "syndrome {s}");
        }
    }

    #[test]
    fn random_syndromes_consistent_d5_d7() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for d in [5usize, 7] {
            let l = CodeLayout::new(d).unwrap();
            let m = BitflipMatcher::new(&l);
            for _ in 0..1000 {
                let s = BitVec::from_bools(
                    &(0..l.n_z_syndrome_bits()).map(|_| rng.gen_bool(0.3)).collect::<Vec<_>>(),
                );
                let out = m.decode(&s).unwrap();
                assert_eq!(l.syndrome_bitflip(&out.correction).unwrap(), s);
                let sp = BitVec::from_bools(
                    &(0..l.n_x_syndrome_bits()).map(|_| rng.gen_bool(0.5)).collect::<Vec<_>>(),
                );
                let c = mwpm_decode_phaseflip(&l, &sp).unwrap();
                assert_eq!(l.syndrome_phaseflip(&c).unwrap(), sp);
            }
        }
    }

    #[test]
    fn greedy_fallback_is_flagged_and_consistent() {
        let l = CodeLayout::new(7).unwrap();
        let m = BitflipMatcher::new(&l);
        let s = BitVec::ones(l.n_z_syndrome_bits());
        let out = m.decode(&s).unwrap();
        assert!(!out.exact);
        assert_eq!(l.syndrome_bitflip(&out.correction).unwrap(), s);
    }

    #[test]
    fn phase_examples() {
        let l3 = CodeLayout::new(3).unwrap();
        let c = mwpm_decode_phaseflip(&l3, &"10".parse().unwrap()).unwrap();
        assert_eq!(c, BitVec::from_indices(9, &[0]).unwrap());
        let l5 = CodeLayout::new(5).unwrap();
        let s: BitVec = "1111".parse().unwrap();
        let c = mwpm_decode_phaseflip(&l5, &s).unwrap();
        assert_eq!(l5.syndrome_phaseflip(&c).unwrap(), s);
        assert_eq!(c.count_ones(), 2);
    }

    #[test]
    fn phase_matching_is_minimal_d5() {
        let l = CodeLayout::new(5).unwrap();
        // minimum number of flipped columns per syndrome, enumerated over column patterns
        for v in 0u64..16 {
            let s = BitVec::from_u64(4, v);
            let brute = (0u64..32)
                .filter(|cols| {
                    let e = BitVec::from_u64(25, *cols);
                    l.syndrome_phaseflip(&e).unwrap() == s
                })
                .map(|c| c.count_ones() as usize)
                .min()
                .unwrap();
            let c = mwpm_decode_phaseflip(&l, &s).unwrap();
            assert_eq!(c.count_ones(), brute, "syndrome {s}");
        }
    }
}
