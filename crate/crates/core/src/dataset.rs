//! Labeled syndrome/error datasets stored as JSON lines.
//!
//! The first line is a [`DatasetHeader`]; every following line is one
//! [`DatasetRecord`]. Bit strings are '0'/'1' text with qubit 0 leftmost.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::canonical::{canonical_phaseflip, Canonicalizer, GaugeBasis, Method};
use crate::code::{CodeLayout, ErrorType};
use crate::error::{Error, Result};
use crate::gf2::BitVec;
use crate::noise::{self, NoiseConfig};

pub const FORMAT_NAME: &str = "heavyhex-dataset";
pub const FORMAT_VERSION: u32 = 1;

/// Records generated per RNG stream; shard `k` draws from stream `k`.
const SHARD: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub version: u32,
    pub d: usize,
    pub noise: NoiseConfig,
    pub n: usize,
    pub seed: u64,
    pub canonical: Method,
    /// Resolved run configuration of the producing command, one `key = value` per entry.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub syndrome_z: BitVec,
    pub syndrome_x: BitVec,
    pub error_x: BitVec,
    pub error_z: BitVec,
    pub canon_x: BitVec,
    pub canon_z: BitVec,
}

/// Which error field a decoder is trained against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelField {
    Raw,
    Canonical,
}

impl std::str::FromStr for LabelField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(LabelField::Raw),
            "canonical" => Ok(LabelField::Canonical),
            other => Err(Error::Invalid(format!(
                "unknown label field {other:?} (expected raw or canonical)"
            ))),
        }
    }
}

impl std::fmt::Display for LabelField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LabelField::Raw => "raw",
            LabelField::Canonical => "canonical",
        })
    }
}

impl DatasetRecord {
    pub fn label(&self, error_type: ErrorType, field: LabelField) -> &BitVec {
        match (error_type, field) {
            (ErrorType::BitFlip, LabelField::Raw) => &self.error_x,
            (ErrorType::BitFlip, LabelField::Canonical) => &self.canon_x,
            (ErrorType::PhaseFlip, LabelField::Raw) => &self.error_z,
            (ErrorType::PhaseFlip, LabelField::Canonical) => &self.canon_z,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub records: Vec<DatasetRecord>,
}

fn sample_shard(
    layout: &CodeLayout,
    noise: &NoiseConfig,
    q: f64,
    shard: usize,
    count: usize,
) -> Vec<(BitVec, BitVec, BitVec, BitVec)> {
    let mut rng = noise::stream_rng(noise.seed, shard as u64);
    (0..count)
        .map(|_| {
            let s = noise::sample(layout, noise.model, q, &mut rng);
            let mut sz = layout.syndrome_bitflip(&s.e_x).expect("sized by layout");
            let mut sx = layout.syndrome_phaseflip(&s.e_z).expect("sized by layout");
            if noise.syndrome_noise {
                sz = noise::apply_syndrome_noise(&sz, q, &mut rng);
                sx = noise::apply_syndrome_noise(&sx, q, &mut rng);
            }
            (sz, sx, s.e_x, s.e_z)
        })
        .collect()
}

/// Samples `n` records and attaches canonical labels. Output depends only on
/// `(layout, noise, n, method)`.
pub fn generate(
    layout: &CodeLayout,
    noise: &NoiseConfig,
    n: usize,
    method: Method,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Invalid("record count must be at least 1".into()));
    }
    noise.validate()?;
    let q = noise.effective()?;
    // fail early on methods the distance cannot support
    let canon = Canonicalizer::new(layout, method)?;

    let shards: Vec<(usize, usize)> = (0..n.div_ceil(SHARD))
        .map(|k| (k, SHARD.min(n - k * SHARD)))
        .collect();
    #[cfg(feature = "parallel")]
    let raw: Vec<_> = {
        use rayon::prelude::*;
        shards
            .par_iter()
            .map(|&(k, c)| sample_shard(layout, noise, q, k, c))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let raw: Vec<_> = shards
        .iter()
        .map(|&(k, c)| sample_shard(layout, noise, q, k, c))
        .collect();

    let samples: Vec<_> = raw.into_iter().flatten().collect();
    let canon_x: Vec<BitVec> = match method {
        Method::Rank => {
            let gb = GaugeBasis::bitflip(layout)?;
            let errs: Vec<BitVec> = samples.iter().map(|s| s.2.clone()).collect();
            crate::canonical::canonical_bitflip_rank(&errs, layout, &gb, true)?
        }
        _ => samples
            .iter()
            .map(|s| canon.bitflip(&s.2))
            .collect::<Result<_>>()?,
    };

    let records = samples
        .into_iter()
        .zip(canon_x)
        .map(|((sz, sx, ex, ez), cx)| {
            let cz = canon.phaseflip(&ez)?;
            Ok(DatasetRecord {
                syndrome_z: sz,
                syndrome_x: sx,
                error_x: ex,
                error_z: ez,
                canon_x: cx,
                canon_z: cz,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Dataset {
        header: DatasetHeader {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            d: layout.d(),
            noise: noise.clone(),
            n,
            seed: noise.seed,
            canonical: method,
            provenance: Vec::new(),
        },
        records,
    })
}

/// Recomputes the canonical labels of an existing dataset with `method`.
pub fn recanonicalize(ds: &Dataset, method: Method) -> Result<Dataset> {
    let layout = CodeLayout::new(ds.header.d)?;
    let canon = Canonicalizer::new(&layout, method)?;
    let canon_x: Vec<BitVec> = match method {
        Method::Rank => {
            let gb = GaugeBasis::bitflip(&layout)?;
            let errs: Vec<BitVec> = ds.records.iter().map(|r| r.error_x.clone()).collect();
            crate::canonical::canonical_bitflip_rank(&errs, &layout, &gb, true)?
        }
        _ => ds
            .records
            .iter()
            .map(|r| canon.bitflip(&r.error_x))
            .collect::<Result<_>>()?,
    };
    let records = ds
        .records
        .iter()
        .zip(canon_x)
        .map(|(r, cx)| {
            Ok(DatasetRecord {
                canon_x: cx,
                canon_z: canon.phaseflip(&r.error_z)?,
                ..r.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut header = ds.header.clone();
    header.canonical = method;
    Ok(Dataset { header, records })
}

impl Dataset {
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, &self.header)?;
        w.write_all(b"\n")?;
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }

    pub fn read<R: BufRead>(r: R, verify: bool) -> Result<Dataset> {
        let mut reader = DatasetReader::new(r, verify)?;
        let header = reader.header().clone();
        let records = reader.by_ref().collect::<Result<Vec<_>>>()?;
        Ok(Dataset { header, records })
    }

    pub fn load(path: &Path, verify: bool) -> Result<Dataset> {
        Self::read(BufReader::new(File::open(path)?), verify)
    }
}

/// Streaming reader; yields records and reports a count mismatch at the end.
pub struct DatasetReader<R> {
    lines: std::io::Lines<R>,
    header: DatasetHeader,
    line_no: usize,
    seen: usize,
    verifier: Option<Verifier>,
    done: bool,
}

struct Verifier {
    layout: CodeLayout,
    gb: GaugeBasis,
    method: Method,
    syndrome_noise: bool,
}

impl Verifier {
    fn check(&self, r: &DatasetRecord) -> std::result::Result<(), String> {
        let l = &self.layout;
        let n = l.n_qubits();
        for (name, v, len) in [
            ("syndrome_z", &r.syndrome_z, l.n_z_syndrome_bits()),
            ("syndrome_x", &r.syndrome_x, l.n_x_syndrome_bits()),
            ("error_x", &r.error_x, n),
            ("error_z", &r.error_z, n),
            ("canon_x", &r.canon_x, n),
            ("canon_z", &r.canon_z, n),
        ] {
            if v.len() != len {
                return Err(format!("{name} has length {}, expected {len}", v.len()));
            }
        }
        let sx_err = l.syndrome_bitflip(&r.error_x).map_err(|e| e.to_string())?;
        let sz_err = l.syndrome_phaseflip(&r.error_z).map_err(|e| e.to_string())?;
        if !self.syndrome_noise {
            if r.syndrome_z != sx_err {
                return Err("syndrome_z does not match error_x".into());
            }
            if r.syndrome_x != sz_err {
                return Err("syndrome_x does not match error_z".into());
            }
        }
        let want_x = match self.method {
            Method::Search | Method::Rank | Method::Exact => self
                .gb
                .reduced()
                .project_to_leader(&r.error_x)
                .map_err(|e| e.to_string())?,
            Method::Phase | Method::None => r.error_x.clone(),
        };
        if r.canon_x != want_x {
            return Err(format!("canon_x {} is not the canonical form {want_x}", r.canon_x));
        }
        let want_z = match self.method {
            Method::None => r.error_z.clone(),
            _ => canonical_phaseflip(&r.error_z, l.d()).map_err(|e| e.to_string())?,
        };
        if r.canon_z != want_z {
            return Err(format!("canon_z {} is not the canonical form {want_z}", r.canon_z));
        }
        Ok(())
    }
}

impl<R: BufRead> DatasetReader<R> {
    pub fn new(r: R, verify: bool) -> Result<Self> {
        let mut lines = r.lines();
        let first = lines.next().ok_or(Error::Malformed {
            line: 1,
            msg: "missing header".into(),
        })??;
        let header: DatasetHeader = serde_json::from_str(&first).map_err(|e| Error::Malformed {
            line: 1,
            msg: format!("bad header: {e}"),
        })?;
        if header.format != FORMAT_NAME || header.version != FORMAT_VERSION {
            return Err(Error::Malformed {
                line: 1,
                msg: format!(
                    "unsupported format {} v{} (expected {FORMAT_NAME} v{FORMAT_VERSION})",
                    header.format, header.version
                ),
            });
        }
        let verifier = if verify {
            let layout = CodeLayout::new(header.d)?;
            let gb = GaugeBasis::bitflip(&layout)?;
            Some(Verifier {
                layout,
                gb,
                method: header.canonical,
                syndrome_noise: header.noise.syndrome_noise,
            })
        } else {
            None
        };
        Ok(DatasetReader {
            lines,
            header,
            line_no: 1,
            seen: 0,
            verifier,
            done: false,
        })
    }

    pub fn header(&self) -> &DatasetHeader {
        &self.header
    }
}

impl<R: BufRead> Iterator for DatasetReader<R> {
    type Item = Result<DatasetRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            let Some(line) = self.lines.next() else {
                self.done = true;
                if self.seen != self.header.n {
                    return Some(Err(Error::CountMismatch {
                        expected: self.header.n,
                        found: self.seen,
                    }));
                }
                return None;
            };
            self.line_no += 1;
            let line = match line {
                Ok(l) => l,
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            let rec: DatasetRecord = match serde_json::from_str(&line) {
                Ok(r) => r,
                Err(e) => {
                    self.done = true;
                    return Some(Err(Error::Malformed {
                        line: self.line_no,
                        msg: e.to_string(),
                    }));
                }
            };
            let index = self.seen;
            self.seen += 1;
            if let Some(v) = &self.verifier {
                if let Err(msg) = v.check(&rec) {
                    self.done = true;
                    return Some(Err(Error::Verify { index, msg }));
                }
            }
            return Some(Ok(rec));
        }
    }
}
