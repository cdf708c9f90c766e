//! Browser bindings: draw a code, place errors and watch their syndrome and
//! canonical form, decode them, and estimate logical error rates.
//!
//! Every export takes and returns plain strings; results are JSON.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use heavyhex::canonical::{canonical_bitflip_exact, canonical_phaseflip, GaugeBasis};
use heavyhex::decoders::{Decoder, LookupDecoder, MatchingDecoder};
use heavyhex::eval::{logical_error_rate, FailureCheck, Target};
use heavyhex::{BitVec, CodeLayout, NoiseConfig, NoiseModel, PauliSample, Syndrome};

type Res<T> = Result<T, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// "3, 4,7" → qubit set of a distance-`d` code.
fn parse_qubits(layout: &CodeLayout, list: &str) -> Res<BitVec> {
    let idx: Vec<usize> = list
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| format!("bad qubit index {s:?}")))
        .collect::<Res<_>>()?;
    BitVec::from_indices(layout.n_qubits(), &idx).map_err(err)
}

fn ones(v: &BitVec) -> Vec<usize> {
    v.iter_ones().collect()
}

fn to_json<T: Serialize>(v: &T) -> Res<String> {
    serde_json::to_string(v).map_err(err)
}

#[derive(Serialize)]
struct LayoutView {
    d: usize,
    x_gauge: Vec<Vec<usize>>,
    z_gauge: Vec<Vec<usize>>,
    z_stabilizers: Vec<Vec<usize>>,
    x_stabilizers: Vec<Vec<usize>>,
}

pub fn layout_json(d: usize) -> Res<String> {
    let l = CodeLayout::new(d).map_err(err)?;
    let sets = |v: &[BitVec]| v.iter().map(ones).collect::<Vec<_>>();
    to_json(&LayoutView {
        d,
        x_gauge: sets(l.x_gauge_generators()),
        z_gauge: sets(l.z_gauge_generators()),
        z_stabilizers: sets(l.z_stabilizers()),
        x_stabilizers: sets(l.x_stabilizers()),
    })
}

#[derive(Serialize)]
struct Inspection {
    syndrome_z: String,
    syndrome_x: String,
    canon_x: Vec<usize>,
    canon_z: Vec<usize>,
}

/// Syndromes and canonical representatives of an X error and a Z error.
pub fn inspect_json(d: usize, x_errors: &str, z_errors: &str) -> Res<String> {
    let l = CodeLayout::new(d).map_err(err)?;
    let ex = parse_qubits(&l, x_errors)?;
    let ez = parse_qubits(&l, z_errors)?;
    let gb = GaugeBasis::new(l.x_gauge_matrix(), 0).map_err(err)?;
    let s = l.syndrome(&ex, &ez).map_err(err)?;
    to_json(&Inspection {
        syndrome_z: s.z_bits.to_string(),
        syndrome_x: s.x_bits.to_string(),
        canon_x: ones(&canonical_bitflip_exact(&ex, &gb).map_err(err)?),
        canon_z: ones(&canonical_phaseflip(&ez, d).map_err(err)?),
    })
}

fn decoder_for(l: &CodeLayout, name: &str, q: f64) -> Res<Box<dyn Decoder>> {
    match name {
        "mwpm" => Ok(Box::new(MatchingDecoder::new(l))),
        "lookup" => Ok(Box::new(
            LookupDecoder::for_noise(l, NoiseModel::Depolarizing, q).map_err(err)?,
        )),
        other => Err(format!("unknown decoder {other:?} (mwpm or lookup)")),
    }
}

#[derive(Serialize)]
struct Decoded {
    correction_x: Vec<usize>,
    correction_z: Vec<usize>,
    x_ok: bool,
    z_ok: bool,
}

/// Decodes the syndrome of the given errors and judges the correction.
/// `q` is the per-cycle probability the lookup tables assume.
pub fn decode_json(d: usize, x_errors: &str, z_errors: &str, decoder: &str, q: f64) -> Res<String> {
    let l = CodeLayout::new(d).map_err(err)?;
    let actual = PauliSample {
        e_x: parse_qubits(&l, x_errors)?,
        e_z: parse_qubits(&l, z_errors)?,
    };
    let s: Syndrome = l.syndrome(&actual.e_x, &actual.e_z).map_err(err)?;
    let dec = decoder_for(&l, decoder, q)?;
    let guess = dec.decode(&s).map_err(err)?;
    let check = FailureCheck::new(&l, Target::Any).map_err(err)?;
    to_json(&Decoded {
        correction_x: ones(&guess.e_x),
        correction_z: ones(&guess.e_z),
        x_ok: !check.x_fails(&actual.e_x, &guess.e_x).map_err(err)?,
        z_ok: !check.z_fails(&actual.e_z, &guess.e_z).map_err(err)?,
    })
}

/// Monte Carlo logical error rate at per-cycle probability `q`.
pub fn simulate_json(d: usize, model: &str, q: f64, trials: u32, seed: u32, decoder: &str) -> Res<String> {
    let l = CodeLayout::new(d).map_err(err)?;
    let model: NoiseModel = model.parse().map_err(err)?;
    let noise = NoiseConfig::with_effective(model, q, seed as u64).map_err(err)?;
    let dec: Box<dyn Decoder> = match decoder {
        "lookup" => Box::new(LookupDecoder::for_noise(&l, model, q).map_err(err)?),
        other => decoder_for(&l, other, q)?,
    };
    let p = logical_error_rate(dec.as_ref(), &l, &noise, trials as u64, Target::for_noise(model))
        .map_err(err)?;
    to_json(&p)
}

#[wasm_bindgen]
pub fn layout(d: usize) -> Result<String, JsValue> {
    layout_json(d).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn inspect(d: usize, x_errors: &str, z_errors: &str) -> Result<String, JsValue> {
    inspect_json(d, x_errors, z_errors).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn decode(d: usize, x_errors: &str, z_errors: &str, decoder: &str, q: f64) -> Result<String, JsValue> {
    decode_json(d, x_errors, z_errors, decoder, q).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn simulate(d: usize, model: &str, q: f64, trials: u32, seed: u32, decoder: &str) -> Result<String, JsValue> {
    simulate_json(d, model, q, trials, seed, decoder).map_err(|e| JsValue::from_str(&e))
}
