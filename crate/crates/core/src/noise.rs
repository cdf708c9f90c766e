//! Pauli-frame noise sampling on data qubits and syndrome bits.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::code::CodeLayout;
use crate::error::{check_prob, Error, Result};
use crate::gf2::BitVec;

/// Number of time steps in one heavy-hex error correction cycle (7 for X, 4 for Z).
pub const CYCLE_STEPS: u32 = 11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseModel {
    Bitflip,
    Phaseflip,
    Depolarizing,
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseModel::Bitflip => "bitflip",
            NoiseModel::Phaseflip => "phaseflip",
            NoiseModel::Depolarizing => "depolarizing",
        })
    }
}

impl FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bitflip" => Ok(NoiseModel::Bitflip),
            "phaseflip" => Ok(NoiseModel::Phaseflip),
            "depolarizing" => Ok(NoiseModel::Depolarizing),
            other => Err(Error::Invalid(format!(
                "unknown noise model {other:?} (expected bitflip, phaseflip or depolarizing)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub model: NoiseModel,
    pub p_step: f64,
    pub steps: u32,
    pub syndrome_noise: bool,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn new(model: NoiseModel, p_step: f64, seed: u64) -> Self {
        NoiseConfig {
            model,
            p_step,
            steps: CYCLE_STEPS,
            syndrome_noise: false,
            seed,
        }
    }

    /// Config whose per-cycle probability equals `q` (inverse of the cycle aggregation).
    pub fn with_effective(model: NoiseModel, q: f64, seed: u64) -> Result<Self> {
        check_prob(q)?;
        let p_step = step_prob_for_cycle(q, CYCLE_STEPS)?;
        Ok(NoiseConfig::new(model, p_step, seed))
    }

    pub fn validate(&self) -> Result<()> {
        check_prob(self.p_step)?;
        if self.steps == 0 {
            return Err(Error::Invalid("steps must be at least 1".into()));
        }
        Ok(())
    }

    pub fn effective(&self) -> Result<f64> {
        effective_cycle_prob(self.p_step, self.steps)
    }
}

/// `1 − (1 − p)^steps`, evaluated as `−expm1(steps · ln(1 − p))`.
pub fn effective_cycle_prob(p_step: f64, steps: u32) -> Result<f64> {
    check_prob(p_step)?;
    if steps == 0 {
        return Err(Error::Invalid("steps must be at least 1".into()));
    }
    Ok((-(steps as f64 * (-p_step).ln_1p()).exp_m1()).clamp(0.0, 1.0))
}

/// Inverse of [`effective_cycle_prob`].
pub fn step_prob_for_cycle(q: f64, steps: u32) -> Result<f64> {
    check_prob(q)?;
    if steps == 0 {
        return Err(Error::Invalid("steps must be at least 1".into()));
    }
    Ok((-((-q).ln_1p() / steps as f64).exp_m1()).clamp(0.0, 1.0))
}

/// X and Z components of a sampled Pauli error; a Y sets both.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliSample {
    pub e_x: BitVec,
    pub e_z: BitVec,
}

impl PauliSample {
    pub fn identity(n: usize) -> Self {
        PauliSample {
            e_x: BitVec::zeros(n),
            e_z: BitVec::zeros(n),
        }
    }
}

/// Independent generator for `(seed, stream)`; ChaCha streams do not overlap.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn bernoulli_vec<R: Rng + ?Sized>(n: usize, q: f64, rng: &mut R) -> BitVec {
    let mut v = BitVec::zeros(n);
    for i in 0..n {
        if rng.gen::<f64>() < q {
            v.set(i, true);
        }
    }
    v
}

pub fn sample_bitflip<R: Rng + ?Sized>(layout: &CodeLayout, q: f64, rng: &mut R) -> PauliSample {
    let n = layout.n_qubits();
    PauliSample {
        e_x: bernoulli_vec(n, q, rng),
        e_z: BitVec::zeros(n),
    }
}

pub fn sample_phaseflip<R: Rng + ?Sized>(layout: &CodeLayout, q: f64, rng: &mut R) -> PauliSample {
    let n = layout.n_qubits();
    PauliSample {
        e_x: BitVec::zeros(n),
        e_z: bernoulli_vec(n, q, rng),
    }
}

pub fn sample_depolarizing<R: Rng + ?Sized>(
    layout: &CodeLayout,
    q: f64,
    rng: &mut R,
) -> PauliSample {
    let n = layout.n_qubits();
    let mut s = PauliSample::identity(n);
    for i in 0..n {
        let u = rng.gen::<f64>();
        if u < q {
            // X, Y, Z in equal thirds of [0, q)
            let which = (3.0 * u / q) as u32;
            if which != 2 {
                s.e_x.set(i, true);
            }
            if which != 0 {
                s.e_z.set(i, true);
            }
        }
    }
    s
}

pub fn sample<R: Rng + ?Sized>(
    layout: &CodeLayout,
    model: NoiseModel,
    q: f64,
    rng: &mut R,
) -> PauliSample {
    match model {
        NoiseModel::Bitflip => sample_bitflip(layout, q, rng),
        NoiseModel::Phaseflip => sample_phaseflip(layout, q, rng),
        NoiseModel::Depolarizing => sample_depolarizing(layout, q, rng),
    }
}

/// Flips each syndrome bit independently with probability `q`.
pub fn apply_syndrome_noise<R: Rng + ?Sized>(s: &BitVec, q: f64, rng: &mut R) -> BitVec {
    let mut out = s.clone();
    for i in 0..s.len() {
        if rng.gen::<f64>() < q {
            out.flip(i);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d3() -> CodeLayout {
        CodeLayout::new(3).unwrap()
    }

    #[test]
    fn cycle_probability() {
        assert_eq!(effective_cycle_prob(0.0, 11).unwrap(), 0.0);
        assert_eq!(effective_cycle_prob(1.0, 11).unwrap(), 1.0);
        let direct = 1.0 - (1.0f64 - 0.001).powi(11);
        let q = effective_cycle_prob(0.001, 11).unwrap();
        assert!((q - direct).abs() < 1e-12);
        assert!((q - 0.010945).abs() < 1e-6);
        assert!(effective_cycle_prob(-0.1, 11).is_err());
        assert!(effective_cycle_prob(1.5, 11).is_err());
        assert!(effective_cycle_prob(0.1, 0).is_err());
    }

    #[test]
    fn cycle_probability_monotone() {
        let mut last = 0.0;
        for k in 0..=100 {
            let q = effective_cycle_prob(k as f64 / 100.0, 11).unwrap();
            assert!(q >= last);
            last = q;
        }
        for steps in 1..20 {
            assert!(
                effective_cycle_prob(0.01, steps + 1).unwrap()
                    > effective_cycle_prob(0.01, steps).unwrap()
            );
        }
    }

    #[test]
    fn step_prob_inverts_cycle_prob() {
        for &q in &[0.0, 1e-4, 0.01, 0.2, 0.9] {
            let p = step_prob_for_cycle(q, 11).unwrap();
            assert!((effective_cycle_prob(p, 11).unwrap() - q).abs() < 1e-12);
        }
    }

    #[test]
    fn bitflip_extremes_and_mean() {
        let l = d3();
        let mut rng = stream_rng(1, 0);
        let s = sample_bitflip(&l, 0.0, &mut rng);
        assert!(s.e_x.is_zero() && s.e_z.is_zero());
        let s = sample_bitflip(&l, 1.0, &mut rng);
        assert_eq!(s.e_x.count_ones(), 9);
        assert!(s.e_z.is_zero());

        let trials = 100_000;
        let total: usize = (0..trials)
            .map(|_| sample_bitflip(&l, 0.1, &mut rng).e_x.count_ones())
            .sum();
        let mean = total as f64 / trials as f64;
        assert!((mean - 0.9).abs() < 0.03, "mean {mean}");
    }

    #[test]
    fn depolarizing_marginals() {
        let l = d3();
        let mut rng = stream_rng(2, 0);
        assert_eq!(sample_depolarizing(&l, 0.0, &mut rng), PauliSample::identity(9));

        let trials = 100_000;
        let mut x_hits = 0usize;
        for _ in 0..trials {
            x_hits += sample_depolarizing(&l, 0.3, &mut rng).e_x.get(0) as usize;
        }
        let f = x_hits as f64 / trials as f64;
        assert!((f - 0.2).abs() < 0.01, "P(x) = {f}");

        let mut both = 0usize;
        for _ in 0..trials {
            let s = sample_depolarizing(&l, 1.0, &mut rng);
            for i in 0..9 {
                assert!(s.e_x.get(i) || s.e_z.get(i));
            }
            both += (s.e_x.get(4) && s.e_z.get(4)) as usize;
        }
        let fy = both as f64 / trials as f64;
        assert!((fy - 1.0 / 3.0).abs() < 0.01, "P(y) = {fy}");
    }

    #[test]
    fn syndrome_noise() {
        let mut rng = stream_rng(3, 0);
        let s: BitVec = "1010".parse().unwrap();
        assert_eq!(apply_syndrome_noise(&s, 0.0, &mut rng), s);
        assert_eq!(apply_syndrome_noise(&s, 1.0, &mut rng).to_string(), "0101");
        let one = BitVec::zeros(1);
        let trials = 100_000;
        let flips = (0..trials)
            .filter(|_| apply_syndrome_noise(&one, 0.5, &mut rng).get(0))
            .count();
        let f = flips as f64 / trials as f64;
        assert!((f - 0.5).abs() < 0.01);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let l = CodeLayout::new(5).unwrap();
        let draw = |seed, stream| {
            let mut rng = stream_rng(seed, stream);
            (0..50)
                .map(|_| sample_depolarizing(&l, 0.2, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(9, 0), draw(9, 0));
        assert_ne!(draw(9, 0), draw(9, 1));
        assert_ne!(draw(9, 0), draw(10, 0));
    }

    #[test]
    fn model_names_round_trip() {
        for m in [NoiseModel::Bitflip, NoiseModel::Phaseflip, NoiseModel::Depolarizing] {
            assert_eq!(m.to_string().parse::<NoiseModel>().unwrap(), m);
        }
        assert!("amplitude".parse::<NoiseModel>().is_err());
    }
}
