//! Decoders under comparison and the common [`Decoder`] interface.

pub mod lookup;
pub mod matching;
pub mod mlp;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::canonical::{Canonicalizer, Method};
use crate::code::{CodeLayout, ErrorType, Syndrome};
use crate::dataset::{Dataset, LabelField};
use crate::error::{Error, Result};
use crate::gf2::BitVec;
use crate::noise::{NoiseModel, PauliSample};

pub use lookup::{lookup_decode, LookupTable};
pub use matching::{mwpm_decode_bitflip, mwpm_decode_phaseflip, BitflipMatcher, MatchOutcome};
pub use mlp::{MlpModel, TrainConfig};

/// Decoder families a sweep can compare.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    Ffnn,
    Mwpm,
    Lookup,
}

impl std::fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DecoderKind::Ffnn => "ffnn",
            DecoderKind::Mwpm => "mwpm",
            DecoderKind::Lookup => "lookup",
        })
    }
}

impl std::str::FromStr for DecoderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ffnn" => Ok(DecoderKind::Ffnn),
            "mwpm" => Ok(DecoderKind::Mwpm),
            "lookup" => Ok(DecoderKind::Lookup),
            other => Err(Error::Invalid(format!(
                "unknown decoder {other:?} (expected ffnn, mwpm or lookup)"
            ))),
        }
    }
}

/// Maps a measured syndrome to a Pauli correction.
pub trait Decoder: Send + Sync {
    fn name(&self) -> String;
    fn decode(&self, s: &Syndrome) -> Result<PauliSample>;
}

/// Matching baseline for both error types.
#[derive(Clone, Debug)]
pub struct MatchingDecoder {
    layout: CodeLayout,
    bitflip: BitflipMatcher,
}

impl MatchingDecoder {
    pub fn new(layout: &CodeLayout) -> Self {
        MatchingDecoder {
            layout: layout.clone(),
            bitflip: BitflipMatcher::new(layout),
        }
    }
}

impl Decoder for MatchingDecoder {
    fn name(&self) -> String {
        "mwpm".into()
    }

    fn decode(&self, s: &Syndrome) -> Result<PauliSample> {
        Ok(PauliSample {
            e_x: self.bitflip.decode(&s.z_bits)?.correction,
            e_z: mwpm_decode_phaseflip(&self.layout, &s.x_bits)?,
        })
    }
}

/// Maximum-likelihood class decoder at d = 3.
#[derive(Clone, Debug)]
pub struct LookupDecoder {
    n: usize,
    x: Option<LookupTable>,
    z: Option<LookupTable>,
}

impl LookupDecoder {
    /// Tables for the components `model` can corrupt. Depolarizing noise
    /// uses the marginal X (or Z) probability `2q/3` for each table.
    pub fn for_noise(layout: &CodeLayout, model: NoiseModel, q: f64) -> Result<Self> {
        let (x, z) = match model {
            NoiseModel::Bitflip => (Some(LookupTable::new(layout, ErrorType::BitFlip, q)?), None),
            NoiseModel::Phaseflip => (None, Some(LookupTable::new(layout, ErrorType::PhaseFlip, q)?)),
            NoiseModel::Depolarizing => {
                let m = 2.0 * q / 3.0;
                (
                    Some(LookupTable::new(layout, ErrorType::BitFlip, m)?),
                    Some(LookupTable::new(layout, ErrorType::PhaseFlip, m)?),
                )
            }
        };
        Ok(LookupDecoder {
            n: layout.n_qubits(),
            x,
            z,
        })
    }
}

impl Decoder for LookupDecoder {
    fn name(&self) -> String {
        "lookup".into()
    }

    fn decode(&self, s: &Syndrome) -> Result<PauliSample> {
        Ok(PauliSample {
            e_x: match &self.x {
                Some(t) => t.decode(&s.z_bits)?,
                None => BitVec::zeros(self.n),
            },
            e_z: match &self.z {
                Some(t) => t.decode(&s.x_bits)?,
                None => BitVec::zeros(self.n),
            },
        })
    }
}

/// What a network sees: the Z-stabilizer bits, the X-stabilizer bits, or
/// the full syndrome (Z bits then X bits).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Zbits,
    Xbits,
    Full,
}

impl InputKind {
    pub fn for_noise(model: NoiseModel) -> Self {
        match model {
            NoiseModel::Bitflip => InputKind::Zbits,
            NoiseModel::Phaseflip => InputKind::Xbits,
            NoiseModel::Depolarizing => InputKind::Full,
        }
    }

    pub fn dim(&self, layout: &CodeLayout) -> usize {
        match self {
            InputKind::Zbits => layout.n_z_syndrome_bits(),
            InputKind::Xbits => layout.n_x_syndrome_bits(),
            InputKind::Full => layout.n_z_syndrome_bits() + layout.n_x_syndrome_bits(),
        }
    }

    pub fn encode(&self, s: &Syndrome) -> BitVec {
        match self {
            InputKind::Zbits => s.z_bits.clone(),
            InputKind::Xbits => s.x_bits.clone(),
            InputKind::Full => s.concat(),
        }
    }

    /// Error components predicted by networks fed this input.
    pub fn targets(&self) -> &'static [ErrorType] {
        match self {
            InputKind::Zbits => &[ErrorType::BitFlip],
            InputKind::Xbits => &[ErrorType::PhaseFlip],
            InputKind::Full => &[ErrorType::BitFlip, ErrorType::PhaseFlip],
        }
    }
}

/// One trained instance: an X predictor and/or a Z predictor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeuralInstance {
    pub x: Option<MlpModel>,
    pub z: Option<MlpModel>,
    pub loss_x: Vec<f64>,
    pub loss_z: Vec<f64>,
}

pub const MODEL_FORMAT: &str = "heavyhex-ffnn";
pub const MODEL_VERSION: u32 = 1;

/// Model file: one or more independently seeded instances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeuralModelFile {
    pub format: String,
    pub version: u32,
    pub d: usize,
    pub input: InputKind,
    pub labels: LabelField,
    pub train: TrainConfig,
    pub instances: Vec<NeuralInstance>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<String>,
}

impl NeuralModelFile {
    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(f, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        let m: NeuralModelFile = serde_json::from_reader(f)?;
        if m.format != MODEL_FORMAT || m.version != MODEL_VERSION {
            return Err(Error::Invalid(format!(
                "unsupported model format {} v{}",
                m.format, m.version
            )));
        }
        for inst in &m.instances {
            for net in inst.x.iter().chain(&inst.z) {
                net.validate()?;
            }
        }
        Ok(m)
    }

    pub fn decoders(&self, layout: &CodeLayout) -> Result<Vec<NeuralDecoder>> {
        self.instances
            .iter()
            .map(|inst| NeuralDecoder::new(layout, self.input, self.labels, inst.x.clone(), inst.z.clone()))
            .collect()
    }
}

/// Feed-forward decoder; predictions are thresholded at 0.5 and, when the
/// networks were trained on canonical labels, passed through the canonicalizer.
#[derive(Clone, Debug)]
pub struct NeuralDecoder {
    n: usize,
    input: InputKind,
    labels: LabelField,
    x: Option<MlpModel>,
    z: Option<MlpModel>,
    canon: Canonicalizer,
}

impl NeuralDecoder {
    pub fn new(
        layout: &CodeLayout,
        input: InputKind,
        labels: LabelField,
        x: Option<MlpModel>,
        z: Option<MlpModel>,
    ) -> Result<Self> {
        let n = layout.n_qubits();
        let in_dim = input.dim(layout);
        for m in x.iter().chain(&z) {
            m.validate()?;
            if m.in_dim != in_dim || m.out_dim != n {
                return Err(Error::Invalid(format!(
                    "network is {}→{} but d = {} with {:?} input needs {in_dim}→{n}",
                    m.in_dim,
                    m.out_dim,
                    layout.d(),
                    input
                )));
            }
        }
        let canon = match labels {
            LabelField::Raw => Canonicalizer::identity(layout),
            LabelField::Canonical => Canonicalizer::new(layout, Method::Exact)?,
        };
        Ok(NeuralDecoder {
            n,
            input,
            labels,
            x,
            z,
            canon,
        })
    }

    pub fn labels(&self) -> LabelField {
        self.labels
    }

    /// Thresholded network output passed through the canonicalizer.
    pub fn predict(&self, error_type: ErrorType, s: &Syndrome) -> Result<BitVec> {
        let net = match error_type {
            ErrorType::BitFlip => &self.x,
            ErrorType::PhaseFlip => &self.z,
        };
        match net {
            Some(m) => {
                let raw = m.predict_bits(&self.input.encode(s))?;
                self.canon.apply(error_type, &raw)
            }
            None => Ok(BitVec::zeros(self.n)),
        }
    }
}

impl Decoder for NeuralDecoder {
    fn name(&self) -> String {
        "ffnn".into()
    }

    fn decode(&self, s: &Syndrome) -> Result<PauliSample> {
        Ok(PauliSample {
            e_x: self.predict(ErrorType::BitFlip, s)?,
            e_z: self.predict(ErrorType::PhaseFlip, s)?,
        })
    }
}

/// Network inputs and labels drawn from a dataset.
pub fn training_pairs(
    ds: &Dataset,
    input: InputKind,
    target: ErrorType,
    field: LabelField,
) -> (Vec<BitVec>, Vec<BitVec>) {
    ds.records
        .iter()
        .map(|r| {
            let s = Syndrome {
                z_bits: r.syndrome_z.clone(),
                x_bits: r.syndrome_x.clone(),
            };
            (input.encode(&s), r.label(target, field).clone())
        })
        .unzip()
}

/// Trains `cfg.instances` independently seeded instances on `ds`.
/// Instance `i` uses seed `cfg.seed + i` for both initialization and shuffling.
pub fn train_decoder(ds: &Dataset, field: LabelField, cfg: &TrainConfig) -> Result<NeuralModelFile> {
    if cfg.instances == 0 {
        return Err(Error::Invalid("instances must be at least 1".into()));
    }
    let layout = CodeLayout::new(ds.header.d)?;
    let input = InputKind::for_noise(ds.header.noise.model);
    let in_dim = input.dim(&layout);
    let n = layout.n_qubits();
    let sets: Vec<(ErrorType, Vec<BitVec>, Vec<BitVec>)> = input
        .targets()
        .iter()
        .map(|&t| {
            let (xs, ys) = training_pairs(ds, input, t, field);
            (t, xs, ys)
        })
        .collect();

    let train_one = |i: usize| -> Result<NeuralInstance> {
        let seed = cfg.seed.wrapping_add(i as u64);
        let icfg = TrainConfig { seed, ..cfg.clone() };
        let mut inst = NeuralInstance {
            x: None,
            z: None,
            loss_x: Vec::new(),
            loss_z: Vec::new(),
        };
        for (t, xs, ys) in &sets {
            // distinct init streams for the X and Z networks
            let init_seed = seed.wrapping_mul(2).wrapping_add(*t as u64);
            let mut m = MlpModel::init(in_dim, cfg.hidden_dim, n, init_seed)?;
            let trace = mlp::train(&mut m, xs, ys, &icfg)?;
            match t {
                ErrorType::BitFlip => {
                    inst.x = Some(m);
                    inst.loss_x = trace;
                }
                ErrorType::PhaseFlip => {
                    inst.z = Some(m);
                    inst.loss_z = trace;
                }
            }
        }
        Ok(inst)
    };

    #[cfg(feature = "parallel")]
    let instances = {
        use rayon::prelude::*;
        (0..cfg.instances)
            .into_par_iter()
            .map(train_one)
            .collect::<Result<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let instances = (0..cfg.instances).map(train_one).collect::<Result<Vec<_>>>()?;

    Ok(NeuralModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        d: ds.header.d,
        input,
        labels: field,
        train: cfg.clone(),
        instances,
        provenance: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate;
    use crate::noise::NoiseConfig;

    #[test]
    fn input_dims() {
        let l3 = CodeLayout::new(3).unwrap();
        let l5 = CodeLayout::new(5).unwrap();
        assert_eq!(InputKind::Zbits.dim(&l3), 4);
        assert_eq!(InputKind::Full.dim(&l5), 16);
        assert_eq!(InputKind::for_noise(NoiseModel::Depolarizing), InputKind::Full);
    }

    #[test]
    fn neural_decoder_checks_dims() {
        let l = CodeLayout::new(3).unwrap();
        let good = MlpModel::init(4, 8, 9, 1).unwrap();
        let bad = MlpModel::init(6, 8, 9, 1).unwrap();
        assert!(NeuralDecoder::new(&l, InputKind::Zbits, LabelField::Raw, Some(good), None).is_ok());
        assert!(NeuralDecoder::new(&l, InputKind::Zbits, LabelField::Raw, Some(bad), None).is_err());
    }

    #[test]
    fn canonical_prediction_is_a_fixed_point() {
        let l = CodeLayout::new(3).unwrap();
        let m = MlpModel::init(4, 16, 9, 5).unwrap();
        let dec = NeuralDecoder::new(&l, InputKind::Zbits, LabelField::Canonical, Some(m), None).unwrap();
        let canon = Canonicalizer::new(&l, Method::Exact).unwrap();
        for v in 0u64..16 {
            let s = Syndrome {
                z_bits: BitVec::from_u64(4, v),
                x_bits: BitVec::zeros(2),
            };
            let p = dec.decode(&s).unwrap().e_x;
            assert_eq!(canon.bitflip(&p).unwrap(), p);
        }
    }

    #[test]
    fn matching_and_lookup_reproduce_syndromes() {
        let l = CodeLayout::new(3).unwrap();
        let mw = MatchingDecoder::new(&l);
        let lk = LookupDecoder::for_noise(&l, NoiseModel::Depolarizing, 0.03).unwrap();
        for v in 0u64..16 {
            for w in 0u64..4 {
                let s = Syndrome {
                    z_bits: BitVec::from_u64(4, v),
                    x_bits: BitVec::from_u64(2, w),
                };
                for dec in [&mw as &dyn Decoder, &lk] {
                    let c = dec.decode(&s).unwrap();
                    assert_eq!(l.syndrome(&c.e_x, &c.e_z).unwrap(), s, "{}", dec.name());
                }
            }
        }
    }

    #[test]
    fn model_file_round_trip() {
        let l = CodeLayout::new(3).unwrap();
        let noise = NoiseConfig::new(NoiseModel::Depolarizing, 0.005, 2);
        let ds = generate(&l, &noise, 200, Method::Exact).unwrap();
        let cfg = TrainConfig {
            batch_size: 50,
            epochs: 2,
            learning_rate: 0.1,
            instances: 2,
            seed: 3,
            hidden_dim: 8,
        };
        let file = train_decoder(&ds, LabelField::Canonical, &cfg).unwrap();
        assert_eq!(file.instances.len(), 2);
        assert!(file.instances[0].x.is_some() && file.instances[0].z.is_some());
        assert_ne!(file.instances[0], file.instances[1]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        file.save(&path).unwrap();
        let back = NeuralModelFile::load(&path).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.decoders(&l).unwrap().len(), 2);
    }
}
