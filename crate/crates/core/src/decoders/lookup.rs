//! Maximum-likelihood class lookup at d = 3, by exhaustive enumeration.

use std::collections::HashMap;

use crate::canonical::{canonical_bitflip_exact, canonical_phaseflip, GaugeBasis};
use crate::code::{CodeLayout, ErrorType};
use crate::error::{check_prob, Error, Result};
use crate::gf2::BitVec;

#[derive(Clone, Debug)]
pub struct LookupTable {
    error_type: ErrorType,
    table: HashMap<BitVec, BitVec>,
}

impl LookupTable {
    /// For every syndrome, the representative of the most probable class
    /// under i.i.d. errors of probability `q`; ties go to the smaller representative.
    pub fn new(layout: &CodeLayout, error_type: ErrorType, q: f64) -> Result<Self> {
        if layout.d() != 3 {
            return Err(Error::Invalid(format!(
                "lookup decoding enumerates all 2^(d²) errors and supports d = 3 only (got d = {})",
                layout.d()
            )));
        }
        check_prob(q)?;
        let n = layout.n_qubits();
        let gb = GaugeBasis::bitflip(layout)?;
        let mut mass: HashMap<(BitVec, BitVec), f64> = HashMap::new();
        for v in 0u64..1 << n {
            let e = BitVec::from_u64(n, v);
            let w = e.count_ones() as i32;
            let p = q.powi(w) * (1.0 - q).powi(n as i32 - w);
            let s = layout.syndrome_of(error_type, &e)?;
            let rep = match error_type {
                ErrorType::BitFlip => canonical_bitflip_exact(&e, &gb)?,
                ErrorType::PhaseFlip => canonical_phaseflip(&e, layout.d())?,
            };
            *mass.entry((s, rep)).or_default() += p;
        }
        let mut classes: Vec<_> = mass.into_iter().collect();
        // deterministic tie-breaking independent of hash order
        classes.sort_by(|a, b| a.0.cmp(&b.0));
        let mut table: HashMap<BitVec, (f64, BitVec)> = HashMap::new();
        for ((s, rep), p) in classes {
            match table.get(&s) {
                Some((best, _)) if *best >= p => {}
                _ => {
                    table.insert(s, (p, rep));
                }
            }
        }
        Ok(LookupTable {
            error_type,
            table: table.into_iter().map(|(s, (_, r))| (s, r)).collect(),
        })
    }

    pub fn error_type(&self) -> ErrorType {
        self.error_type
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn decode(&self, syndrome: &BitVec) -> Result<BitVec> {
        self.table
            .get(syndrome)
            .cloned()
            .ok_or_else(|| Error::Invalid(format!("syndrome {syndrome} not in lookup table")))
    }
}

pub fn lookup_decode(
    layout: &CodeLayout,
    syndrome: &BitVec,
    error_type: ErrorType,
    q: f64,
) -> Result<BitVec> {
    LookupTable::new(layout, error_type, q)?.decode(syndrome)
}
