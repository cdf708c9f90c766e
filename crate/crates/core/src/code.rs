//! Heavy hexagonal code layout: data-qubit grid, gauge generators,
//! stabilizers, logical operators and syndrome extraction.
//!
//! Qubit `(i, j)` (1-based row, column) has linear index `(i-1)·d + (j-1)`.
//! Weight-4 X gauge plaquettes sit at top-left corners with `i + j` odd and
//! weight-4 Z stabilizer plaquettes at `i + j` even.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gf2::{BitVec, Gf2Matrix};

/// Which Pauli component an error string describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorType {
    /// X errors (bit flips), detected by Z stabilizers.
    BitFlip,
    /// Z errors (phase flips), detected by X stabilizers.
    PhaseFlip,
}

/// Stabilizer measurement outcomes for one round.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Syndrome {
    /// Z-stabilizer outcomes, `(d²−1)/2` bits; these see bit flips.
    pub z_bits: BitVec,
    /// X-stabilizer outcomes, `d−1` bits; these see phase flips.
    pub x_bits: BitVec,
}

impl Syndrome {
    /// Full syndrome, Z bits first.
    pub fn concat(&self) -> BitVec {
        self.z_bits.concat(&self.x_bits)
    }

    pub fn is_trivial(&self) -> bool {
        self.z_bits.is_zero() && self.x_bits.is_zero()
    }
}

#[derive(Clone, Debug)]
pub struct CodeLayout {
    d: usize,
    x_gauge: Vec<BitVec>,
    z_gauge: Vec<BitVec>,
    z_stabilizers: Vec<BitVec>,
    x_stabilizers: Vec<BitVec>,
    logical_x: BitVec,
    logical_z: BitVec,
}

impl CodeLayout {
    pub fn new(d: usize) -> Result<Self> {
        if d < 3 || d.is_multiple_of(2) {
            return Err(Error::InvalidDistance(d));
        }
        let n = d * d;
        // 1-based (row, col) → linear index
        let q = |i: usize, j: usize| (i - 1) * d + (j - 1);
        let op = |idx: &[usize]| BitVec::from_indices(n, idx).expect("index inside lattice");

        let mut x_gauge = Vec::with_capacity((n - 1) / 2);
        for m in 1..=(d - 1) / 2 {
            x_gauge.push(op(&[q(1, 2 * m - 1), q(1, 2 * m)]));
        }
        for i in 1..d {
            for j in 1..d {
                if (i + j) % 2 == 1 {
                    x_gauge.push(op(&[q(i, j), q(i, j + 1), q(i + 1, j), q(i + 1, j + 1)]));
                }
            }
        }
        for m in 1..=(d - 1) / 2 {
            x_gauge.push(op(&[q(d, 2 * m), q(d, 2 * m + 1)]));
        }

        let mut z_gauge = Vec::with_capacity(d * (d - 1));
        for i in 1..d {
            for j in 1..=d {
                z_gauge.push(op(&[q(i, j), q(i + 1, j)]));
            }
        }

        let mut z_stabilizers = Vec::with_capacity((n - 1) / 2);
        for i in 1..d {
            for j in 1..d {
                if (i + j) % 2 == 0 {
                    z_stabilizers.push(op(&[q(i, j), q(i, j + 1), q(i + 1, j), q(i + 1, j + 1)]));
                }
            }
        }
        for m in 1..=(d - 1) / 2 {
            z_stabilizers.push(op(&[q(2 * m - 1, d), q(2 * m, d)]));
        }
        for m in 1..=(d - 1) / 2 {
            z_stabilizers.push(op(&[q(2 * m, 1), q(2 * m + 1, 1)]));
        }

        let x_stabilizers = (1..d)
            .map(|j| {
                let idx: Vec<usize> = (1..=d).flat_map(|i| [q(i, j), q(i, j + 1)]).collect();
                op(&idx)
            })
            .collect();

        let logical_x = op(&(1..=d).map(|i| q(i, 1)).collect::<Vec<_>>());
        let logical_z = op(&(1..=d).map(|j| q(1, j)).collect::<Vec<_>>());

        Ok(CodeLayout {
            d,
            x_gauge,
            z_gauge,
            z_stabilizers,
            x_stabilizers,
            logical_x,
            logical_z,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_qubits(&self) -> usize {
        self.d * self.d
    }

    pub fn qubit_index(&self, row: usize, col: usize) -> usize {
        assert!((1..=self.d).contains(&row) && (1..=self.d).contains(&col));
        (row - 1) * self.d + (col - 1)
    }

    pub fn x_gauge_generators(&self) -> &[BitVec] {
        &self.x_gauge
    }

    pub fn z_gauge_generators(&self) -> &[BitVec] {
        &self.z_gauge
    }

    /// Weight-4 plaquettes row-major, then right-boundary pairs, then left-boundary pairs.
    pub fn z_stabilizers(&self) -> &[BitVec] {
        &self.z_stabilizers
    }

    /// Two-column strips, left to right.
    pub fn x_stabilizers(&self) -> &[BitVec] {
        &self.x_stabilizers
    }

    pub fn logical_x(&self) -> &BitVec {
        &self.logical_x
    }

    pub fn logical_z(&self) -> &BitVec {
        &self.logical_z
    }

    pub fn logical_ops(&self) -> (BitVec, BitVec) {
        (self.logical_x.clone(), self.logical_z.clone())
    }

    pub fn n_z_syndrome_bits(&self) -> usize {
        self.z_stabilizers.len()
    }

    pub fn n_x_syndrome_bits(&self) -> usize {
        self.x_stabilizers.len()
    }

    pub fn x_gauge_matrix(&self) -> Gf2Matrix {
        Gf2Matrix::new(self.n_qubits(), self.x_gauge.clone()).expect("uniform widths")
    }

    pub fn z_gauge_matrix(&self) -> Gf2Matrix {
        Gf2Matrix::new(self.n_qubits(), self.z_gauge.clone()).expect("uniform widths")
    }

    fn check_error_len(&self, e: &BitVec) -> Result<()> {
        if e.len() != self.n_qubits() {
            return Err(Error::LengthMismatch {
                expected: self.n_qubits(),
                found: e.len(),
            });
        }
        Ok(())
    }

    fn measure(checks: &[BitVec], e: &BitVec) -> BitVec {
        let mut s = BitVec::zeros(checks.len());
        for (k, c) in checks.iter().enumerate() {
            if c.overlap_parity_unchecked(e) {
                s.set(k, true);
            }
        }
        s
    }

    /// Z-stabilizer syndrome of an X-type error string.
    pub fn syndrome_bitflip(&self, e: &BitVec) -> Result<BitVec> {
        self.check_error_len(e)?;
        Ok(Self::measure(&self.z_stabilizers, e))
    }

    /// X-stabilizer syndrome of a Z-type error string.
    pub fn syndrome_phaseflip(&self, e: &BitVec) -> Result<BitVec> {
        self.check_error_len(e)?;
        Ok(Self::measure(&self.x_stabilizers, e))
    }

    pub fn syndrome_of(&self, error_type: ErrorType, e: &BitVec) -> Result<BitVec> {
        match error_type {
            ErrorType::BitFlip => self.syndrome_bitflip(e),
            ErrorType::PhaseFlip => self.syndrome_phaseflip(e),
        }
    }

    pub fn syndrome(&self, e_x: &BitVec, e_z: &BitVec) -> Result<Syndrome> {
        Ok(Syndrome {
            z_bits: self.syndrome_bitflip(e_x)?,
            x_bits: self.syndrome_phaseflip(e_z)?,
        })
    }

    /// Syndrome bit count for the given error type.
    pub fn syndrome_len(&self, error_type: ErrorType) -> usize {
        match error_type {
            ErrorType::BitFlip => self.n_z_syndrome_bits(),
            ErrorType::PhaseFlip => self.n_x_syndrome_bits(),
        }
    }
}
