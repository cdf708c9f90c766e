//! Gauge-equivalence class representatives.
//!
//! Every error class is represented by its lexicographic minimum, the member
//! minimizing `Σ 2^k · e[k]`. Bit flips can be reduced three ways (full-span
//! search, rank-based streaming, exact coset-leader projection); phase flips
//! fold onto the first row.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;

use crate::code::{CodeLayout, ErrorType};
use crate::error::{Error, Result};
use crate::gf2::{BitVec, Gf2Matrix, ReducedBasis};

/// Largest full span that will be materialized for search-based reduction
/// (2^13 elements, which admits d ≤ 5).
pub const SPAN_CAP: usize = 1 << 13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    /// Exhaustive search over the full gauge span.
    Search,
    /// Streaming rank-equivalence scan over the dataset.
    Rank,
    /// Coset-leader projection against the reduced basis.
    Exact,
    /// Column fold for phase flips only; X components are left untouched.
    Phase,
    /// No canonicalization.
    None,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Search => "search",
            Method::Rank => "rank",
            Method::Exact => "exact",
            Method::Phase => "phase",
            Method::None => "none",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "search" => Ok(Method::Search),
            "rank" => Ok(Method::Rank),
            "exact" => Ok(Method::Exact),
            "phase" => Ok(Method::Phase),
            "none" => Ok(Method::None),
            other => Err(Error::Invalid(format!(
                "unknown canonical method {other:?} (expected search, rank, exact, phase or none)"
            ))),
        }
    }
}

impl serde::Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// X-gauge generators with their reduced basis and, when small enough,
/// the full span.
#[derive(Clone, Debug)]
pub struct GaugeBasis {
    generators: Gf2Matrix,
    reduced: ReducedBasis,
    full_span: Option<Vec<BitVec>>,
}

impl GaugeBasis {
    pub fn new(generators: Gf2Matrix, span_cap: usize) -> Result<Self> {
        let reduced = generators.reduce();
        if reduced.rank() != generators.n_rows() {
            return Err(Error::DependentGenerators {
                rank: reduced.rank(),
                rows: generators.n_rows(),
            });
        }
        let rows = generators.n_rows();
        let full_span = (rows < usize::BITS as usize && (1usize << rows) <= span_cap)
            .then(|| enumerate_span(&generators));
        Ok(GaugeBasis {
            generators,
            reduced,
            full_span,
        })
    }

    /// X-gauge basis of `layout` with the default span cap.
    pub fn bitflip(layout: &CodeLayout) -> Result<Self> {
        Self::new(layout.x_gauge_matrix(), SPAN_CAP)
    }

    pub fn generators(&self) -> &Gf2Matrix {
        &self.generators
    }

    pub fn reduced(&self) -> &ReducedBasis {
        &self.reduced
    }

    pub fn full_span(&self) -> Option<&[BitVec]> {
        self.full_span.as_deref()
    }

    pub fn n_qubits(&self) -> usize {
        self.generators.n_cols()
    }
}

/// All 2^rows combinations in Gray-code order (one XOR per element).
fn enumerate_span(m: &Gf2Matrix) -> Vec<BitVec> {
    let rows = m.n_rows();
    let mut out = Vec::with_capacity(1 << rows);
    let mut acc = BitVec::zeros(m.n_cols());
    out.push(acc.clone());
    for k in 1usize..1 << rows {
        acc.xor_assign_unchecked(m.row(k.trailing_zeros() as usize));
        out.push(acc.clone());
    }
    out
}

/// `Σ 2^k · e[k]` as an exact integer.
pub fn lex_weight(e: &BitVec) -> BigUint {
    let digits: Vec<u32> = e
        .words()
        .iter()
        .flat_map(|&w| [w as u32, (w >> 32) as u32])
        .collect();
    BigUint::new(digits)
}

/// Full-span search: the minimum of `e ⊕ g` over every gauge operator `g`.
pub fn canonical_bitflip_search(e: &BitVec, gb: &GaugeBasis) -> Result<BitVec> {
    let span = gb.full_span().ok_or(Error::SpanNotMaterialized {
        rows: gb.generators().n_rows(),
    })?;
    check_len(e, gb.n_qubits())?;
    let mut best = e.clone();
    for g in span {
        if e.cmp_xor_with(g, &best).is_lt() {
            best.assign_xor(e, g);
        }
    }
    Ok(best)
}

/// Coset-leader projection; identical result to the search without the span.
pub fn canonical_bitflip_exact(e: &BitVec, gb: &GaugeBasis) -> Result<BitVec> {
    gb.reduced().project_to_leader(e)
}

/// Folds every qubit below the first row onto the top qubit of its column,
/// then clears it. `result[c]` is the parity of column `c`.
pub fn canonical_phaseflip(e: &BitVec, d: usize) -> Result<BitVec> {
    check_len(e, d * d)?;
    let mut out = e.clone();
    for j in d..d * d {
        if out.get(j) {
            out.flip(j % d);
            out.set(j, false);
        }
    }
    Ok(out)
}

/// Span membership decided the long way: `rank([M; a ⊕ b]) == rank(M)`.
pub fn rank_equivalent(generators: &Gf2Matrix, a: &BitVec, b: &BitVec) -> Result<bool> {
    let diff = a.xor(b)?;
    Ok(generators.with_row(diff)?.rank() == generators.rank())
}

fn check_len(e: &BitVec, n: usize) -> Result<()> {
    if e.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: e.len(),
        });
    }
    Ok(())
}

struct ClassEntry {
    witness: BitVec,
    min: BitVec,
}

/// Streaming rank-based reduction for bit flips.
///
/// Each incoming error is compared with previously seen errors of the same
/// syndrome; two errors are equivalent when appending their difference to
/// the generator matrix leaves the rank unchanged. The running
/// representative of an error is the smallest equivalent error seen so far
/// (itself included). Prior errors are kept grouped by class, so each test
/// runs against one witness per class instead of every earlier member; the
/// running minimum is the same either way.
pub struct RankCanonicalizer<'a> {
    layout: &'a CodeLayout,
    gb: &'a GaugeBasis,
    buckets: HashMap<BitVec, Vec<usize>>,
    classes: Vec<ClassEntry>,
    assigned: Vec<usize>,
    scratch: BitVec,
}

impl<'a> RankCanonicalizer<'a> {
    pub fn new(layout: &'a CodeLayout, gb: &'a GaugeBasis) -> Self {
        RankCanonicalizer {
            layout,
            gb,
            buckets: HashMap::new(),
            classes: Vec::new(),
            assigned: Vec::new(),
            scratch: BitVec::zeros(layout.n_qubits()),
        }
    }

    /// Adds `e` and returns its running representative.
    pub fn push(&mut self, e: &BitVec) -> Result<BitVec> {
        let syndrome = self.layout.syndrome_bitflip(e)?;
        let bucket = self.buckets.entry(syndrome).or_default();
        let reduced = self.gb.reduced();
        let found = bucket.iter().copied().find(|&c| {
            self.scratch.assign_xor(e, &self.classes[c].witness);
            reduced.project_in_place(&mut self.scratch);
            self.scratch.is_zero()
        });
        let (class, rep) = match found {
            Some(c) => {
                let entry = &mut self.classes[c];
                if *e < entry.min {
                    entry.min = e.clone();
                }
                (c, entry.min.clone())
            }
            None => {
                let c = self.classes.len();
                self.classes.push(ClassEntry {
                    witness: e.clone(),
                    min: e.clone(),
                });
                bucket.push(c);
                (c, e.clone())
            }
        };
        self.assigned.push(class);
        Ok(rep)
    }

    /// Number of distinct classes seen.
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// Smallest member seen of each error's class, in push order.
    pub fn seen_minima(&self) -> Vec<BitVec> {
        self.assigned
            .iter()
            .map(|&c| self.classes[c].min.clone())
            .collect()
    }

    /// Global class minimum for every pushed error, in push order. Each
    /// class is resolved once, by reducing its witness against the basis.
    pub fn unified(&self) -> Vec<BitVec> {
        let reduced = self.gb.reduced();
        let leaders: Vec<BitVec> = self
            .classes
            .iter()
            .map(|c| {
                let mut v = c.witness.clone();
                reduced.project_in_place(&mut v);
                v
            })
            .collect();
        self.assigned.iter().map(|&c| leaders[c].clone()).collect()
    }
}

/// Rank-based reduction of a whole stream. With `unify`, a second pass maps
/// every error to its global class minimum; without it, early members of a
/// class keep the running minimum they saw on arrival.
pub fn canonical_bitflip_rank(
    errors: &[BitVec],
    layout: &CodeLayout,
    gb: &GaugeBasis,
    unify: bool,
) -> Result<Vec<BitVec>> {
    let mut rc = RankCanonicalizer::new(layout, gb);
    let mut running = Vec::with_capacity(errors.len());
    for e in errors {
        running.push(rc.push(e)?);
    }
    Ok(if unify { rc.unified() } else { running })
}

/// Per-error canonicalizer for pipelines that handle one sample at a time.
/// The rank method is stream-based and is not available here.
#[derive(Clone, Debug)]
pub struct Canonicalizer {
    method: Method,
    d: usize,
    gb: Option<GaugeBasis>,
}

impl Canonicalizer {
    pub fn new(layout: &CodeLayout, method: Method) -> Result<Self> {
        let gb = match method {
            Method::Search | Method::Exact | Method::Rank => Some(GaugeBasis::bitflip(layout)?),
            Method::Phase | Method::None => None,
        };
        if method == Method::Search && gb.as_ref().is_some_and(|g| g.full_span().is_none()) {
            return Err(Error::SpanNotMaterialized {
                rows: layout.x_gauge_generators().len(),
            });
        }
        Ok(Canonicalizer {
            method,
            d: layout.d(),
            gb,
        })
    }

    pub fn identity(layout: &CodeLayout) -> Self {
        Canonicalizer {
            method: Method::None,
            d: layout.d(),
            gb: None,
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Canonical X component. The rank method maps to the exact projection,
    /// which is what its unified output equals.
    pub fn bitflip(&self, e: &BitVec) -> Result<BitVec> {
        match (self.method, &self.gb) {
            (Method::Search, Some(gb)) => canonical_bitflip_search(e, gb),
            (Method::Exact | Method::Rank, Some(gb)) => canonical_bitflip_exact(e, gb),
            _ => {
                check_len(e, self.d * self.d)?;
                Ok(e.clone())
            }
        }
    }

    /// Canonical Z component (column fold unless canonicalization is off).
    pub fn phaseflip(&self, e: &BitVec) -> Result<BitVec> {
        match self.method {
            Method::None => {
                check_len(e, self.d * self.d)?;
                Ok(e.clone())
            }
            _ => canonical_phaseflip(e, self.d),
        }
    }

    pub fn apply(&self, error_type: ErrorType, e: &BitVec) -> Result<BitVec> {
        match error_type {
            ErrorType::BitFlip => self.bitflip(e),
            ErrorType::PhaseFlip => self.phaseflip(e),
        }
    }
}

/// Number of inequivalent error classes: `2^((d²+1)/2)` for bit flips and
/// `2^d` for phase flips.
pub fn count_classes(layout: &CodeLayout, error_type: ErrorType) -> u128 {
    let d = layout.d() as u32;
    match error_type {
        ErrorType::BitFlip => 1u128 << ((d * d).div_ceil(2)),
        ErrorType::PhaseFlip => 1u128 << d,
    }
}
