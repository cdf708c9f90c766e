//! Monte Carlo logical error rates, pseudo-thresholds, thresholds and the
//! gauge-canonicalization timing benchmark.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::canonical::{canonical_bitflip_rank, canonical_phaseflip, Canonicalizer, GaugeBasis, Method};
use crate::code::{CodeLayout, Syndrome};
use crate::decoders::Decoder;
use crate::error::{Error, Result};
use crate::gf2::BitVec;
use crate::noise::{self, NoiseConfig, NoiseModel, PauliSample};

/// Trials per independently seeded chunk. Chunk `k` draws from stream
/// `EVAL_STREAM_BASE + k`, so counts do not depend on the worker count.
pub const CHUNK: usize = 2048;
/// Evaluation streams start here, away from the streams dataset generation uses.
pub const EVAL_STREAM_BASE: u64 = 1 << 40;

const Z95: f64 = 1.959_963_984_540_054;

/// Which logical component a trial is judged on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    X,
    Z,
    /// Failure if either component fails.
    Any,
}

impl Target {
    pub fn for_noise(model: NoiseModel) -> Self {
        match model {
            NoiseModel::Bitflip => Target::X,
            NoiseModel::Phaseflip => Target::Z,
            NoiseModel::Depolarizing => Target::Any,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::X => "x",
            Target::Z => "z",
            Target::Any => "any",
        })
    }
}

impl FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Target::X),
            "z" => Ok(Target::Z),
            "any" => Ok(Target::Any),
            other => Err(Error::Invalid(format!("unknown target {other:?} (expected x, z or any)"))),
        }
    }
}

/// Judges a correction: the residual `actual ⊕ predicted` must have a zero
/// exact canonical form on every component under test.
#[derive(Clone, Debug)]
pub struct FailureCheck {
    d: usize,
    gb: GaugeBasis,
    target: Target,
}

impl FailureCheck {
    pub fn new(layout: &CodeLayout, target: Target) -> Result<Self> {
        Ok(FailureCheck {
            d: layout.d(),
            gb: GaugeBasis::new(layout.x_gauge_matrix(), 0)?,
            target,
        })
    }

    pub fn x_fails(&self, actual: &BitVec, predicted: &BitVec) -> Result<bool> {
        let mut r = actual.xor(predicted)?;
        self.gb.reduced().project_in_place(&mut r);
        Ok(!r.is_zero())
    }

    pub fn z_fails(&self, actual: &BitVec, predicted: &BitVec) -> Result<bool> {
        Ok(!canonical_phaseflip(&actual.xor(predicted)?, self.d)?.is_zero())
    }

    pub fn fails(&self, actual: &PauliSample, predicted: &PauliSample) -> Result<bool> {
        Ok(match self.target {
            Target::X => self.x_fails(&actual.e_x, &predicted.e_x)?,
            Target::Z => self.z_fails(&actual.e_z, &predicted.e_z)?,
            Target::Any => {
                self.x_fails(&actual.e_x, &predicted.e_x)?
                    || self.z_fails(&actual.e_z, &predicted.e_z)?
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub d: usize,
    pub p_step: f64,
    pub q_effective: f64,
    pub trials: u64,
    pub failures: u64,
    pub logical_error_rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub ci_halfwidth: f64,
    pub decoder: String,
    pub labels: String,
}

impl CurvePoint {
    pub fn new(d: usize, p_step: f64, q_effective: f64, trials: u64, failures: u64) -> Self {
        let (ci_lo, ci_hi) = wilson_interval(failures, trials);
        CurvePoint {
            d,
            p_step,
            q_effective,
            trials,
            failures,
            logical_error_rate: if trials == 0 { 0.0 } else { failures as f64 / trials as f64 },
            ci_lo,
            ci_hi,
            ci_halfwidth: (ci_hi - ci_lo) / 2.0,
            decoder: String::new(),
            labels: "-".into(),
        }
    }

    pub fn labelled(mut self, decoder: &str, labels: &str) -> Self {
        self.decoder = decoder.into();
        self.labels = labels.into();
        self
    }
}

/// 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = Z95 * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

fn run_chunk(
    decoder: &dyn Decoder,
    layout: &CodeLayout,
    noise: &NoiseConfig,
    q: f64,
    check: &FailureCheck,
    chunk: usize,
    count: usize,
) -> Result<u64> {
    let mut rng = noise::stream_rng(noise.seed, EVAL_STREAM_BASE + chunk as u64);
    let mut failures = 0;
    for _ in 0..count {
        let e = noise::sample(layout, noise.model, q, &mut rng);
        let mut s = layout.syndrome(&e.e_x, &e.e_z)?;
        if noise.syndrome_noise {
            s = Syndrome {
                z_bits: noise::apply_syndrome_noise(&s.z_bits, q, &mut rng),
                x_bits: noise::apply_syndrome_noise(&s.x_bits, q, &mut rng),
            };
        }
        let guess = decoder.decode(&s)?;
        if check.fails(&e, &guess)? {
            failures += 1;
        }
    }
    Ok(failures)
}

/// Fraction of `trials` noisy cycles the decoder fails to correct.
/// The sample stream is fixed by `noise.seed`.
pub fn logical_error_rate(
    decoder: &dyn Decoder,
    layout: &CodeLayout,
    noise: &NoiseConfig,
    trials: u64,
    target: Target,
) -> Result<CurvePoint> {
    if trials == 0 {
        return Err(Error::Invalid("trials must be at least 1".into()));
    }
    noise.validate()?;
    let q = noise.effective()?;
    let check = FailureCheck::new(layout, target)?;
    let n_chunks = (trials as usize).div_ceil(CHUNK);
    let size = |k: usize| CHUNK.min(trials as usize - k * CHUNK);

    #[cfg(feature = "parallel")]
    let counts: Vec<u64> = {
        use rayon::prelude::*;
        (0..n_chunks)
            .into_par_iter()
            .map(|k| run_chunk(decoder, layout, noise, q, &check, k, size(k)))
            .collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let counts: Vec<u64> = (0..n_chunks)
        .map(|k| run_chunk(decoder, layout, noise, q, &check, k, size(k)))
        .collect::<Result<_>>()?;

    Ok(
        CurvePoint::new(layout.d(), noise.p_step, q, trials, counts.iter().sum())
            .labelled(&decoder.name(), "-"),
    )
}

/// Crossing of a logical error curve with the line `rate = q_effective`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PseudoThreshold {
    Crossing {
        q_effective: f64,
        p_step: f64,
        /// Indices of the bracketing points in the sorted input.
        lo: usize,
        hi: usize,
        /// Number of sign changes found; the first is reported.
        crossings: usize,
    },
    /// The curve coincides with the identity line; the first bracket midpoint is reported.
    Degenerate { q_effective: f64, p_step: f64 },
    OutsideRange { above_identity: bool },
}

impl PseudoThreshold {
    pub fn q_effective(&self) -> Option<f64> {
        match self {
            PseudoThreshold::Crossing { q_effective, .. } | PseudoThreshold::Degenerate { q_effective, .. } => {
                Some(*q_effective)
            }
            PseudoThreshold::OutsideRange { .. } => None,
        }
    }
}

// Zero counts have no logarithm; half a failure keeps them finite and below
// any observed rate of the same trial count.
fn log_rate(p: &CurvePoint) -> f64 {
    if p.logical_error_rate > 0.0 {
        p.logical_error_rate.ln()
    } else {
        (0.5 / p.trials.max(1) as f64).ln()
    }
}

fn sorted_points(points: &[CurvePoint]) -> Result<Vec<&CurvePoint>> {
    let mut v: Vec<&CurvePoint> = points.iter().collect();
    if v.iter().any(|p| !(p.q_effective > 0.0 && p.q_effective <= 1.0)) {
        return Err(Error::Invalid("curve points need q_effective in (0, 1]".into()));
    }
    v.sort_by(|a, b| a.q_effective.total_cmp(&b.q_effective));
    Ok(v)
}

// the curve's own p_step ↔ q_effective mapping, read off a point
fn step_for(points: &[&CurvePoint], q: f64) -> f64 {
    let steps = points
        .iter()
        .find(|p| p.p_step > 0.0 && p.p_step < 1.0 && p.q_effective < 1.0)
        .map(|p| (-p.q_effective).ln_1p() / (-p.p_step).ln_1p())
        .unwrap_or(1.0);
    -((-q).ln_1p() / steps).exp_m1()
}

/// Log-log interpolated crossing of one curve with the identity line.
pub fn pseudo_threshold(points: &[CurvePoint]) -> Result<PseudoThreshold> {
    if points.len() < 2 {
        return Err(Error::Invalid("pseudo-threshold needs at least two points".into()));
    }
    let pts = sorted_points(points)?;
    let f: Vec<f64> = pts.iter().map(|p| log_rate(p) - p.q_effective.ln()).collect();
    if f.iter().all(|v| v.abs() < 1e-12) {
        let q = (pts[0].q_effective.ln() + pts[1].q_effective.ln()) / 2.0;
        let q = q.exp();
        return Ok(PseudoThreshold::Degenerate {
            q_effective: q,
            p_step: step_for(&pts, q),
        });
    }
    let mut first = None;
    let mut crossings = 0;
    for i in 0..pts.len() - 1 {
        let (a, b) = (f[i], f[i + 1]);
        let changes = (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0) || (a == 0.0 && b != 0.0 && i == 0);
        if changes {
            crossings += 1;
            if first.is_none() {
                let t = if a == b { 0.0 } else { a / (a - b) };
                let (x0, x1) = (pts[i].q_effective.ln(), pts[i + 1].q_effective.ln());
                first = Some((i, (x0 + t * (x1 - x0)).exp()));
            }
        }
    }
    Ok(match first {
        Some((i, q)) => PseudoThreshold::Crossing {
            q_effective: q,
            p_step: step_for(&pts, q),
            lo: i,
            hi: i + 1,
            crossings,
        },
        None => PseudoThreshold::OutsideRange {
            above_identity: f[0] > 0.0,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PairCrossing {
    Crossing { q_effective: f64, p_step: f64 },
    NoCrossing { note: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairThreshold {
    pub d_small: usize,
    pub d_large: usize,
    pub result: PairCrossing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub pairs: Vec<PairThreshold>,
    /// Mean over the pairs that cross, in q_effective.
    pub mean_q_effective: Option<f64>,
    pub mean_p_step: Option<f64>,
}

// log-log interpolation of a sorted curve at ln q (inside its range)
fn interp(pts: &[&CurvePoint], x: f64) -> f64 {
    let xs: Vec<f64> = pts.iter().map(|p| p.q_effective.ln()).collect();
    let i = match xs.iter().position(|&v| v >= x) {
        Some(0) => return log_rate(pts[0]),
        Some(i) => i,
        None => return log_rate(pts[pts.len() - 1]),
    };
    let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    log_rate(pts[i - 1]) + t * (log_rate(pts[i]) - log_rate(pts[i - 1]))
}

fn pair_crossing(small: &[&CurvePoint], large: &[&CurvePoint]) -> PairCrossing {
    let lo = small[0].q_effective.max(large[0].q_effective).ln();
    let hi = small[small.len() - 1]
        .q_effective
        .min(large[large.len() - 1].q_effective)
        .ln();
    if lo >= hi {
        return PairCrossing::NoCrossing {
            note: "sweep ranges do not overlap".into(),
        };
    }
    // both interpolants are linear between consecutive knots of the union grid
    let mut grid: Vec<f64> = small
        .iter()
        .chain(large)
        .map(|p| p.q_effective.ln())
        .filter(|&x| x >= lo && x <= hi)
        .collect();
    grid.push(lo);
    grid.push(hi);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let g: Vec<f64> = grid.iter().map(|&x| interp(large, x) - interp(small, x)).collect();
    if g.iter().all(|v| v.abs() < 1e-12) {
        return PairCrossing::NoCrossing {
            note: "curves coincide over the sweep".into(),
        };
    }
    // below threshold the larger code is better (g < 0); look for g turning non-negative
    for i in 0..grid.len() - 1 {
        if g[i] < 0.0 && g[i + 1] >= 0.0 {
            let t = g[i] / (g[i] - g[i + 1]);
            let x = grid[i] + t * (grid[i + 1] - grid[i]);
            let q = x.exp();
            let pts: Vec<&CurvePoint> = small.iter().chain(large).copied().collect();
            return PairCrossing::Crossing {
                q_effective: q,
                p_step: step_for(&pts, q),
            };
        }
    }
    let note = if g.iter().all(|&v| v >= 0.0) {
        "larger distance is worse over the whole sweep; threshold lies below the smallest sampled probability"
    } else {
        "larger distance is better over the whole sweep; threshold lies above the largest sampled probability"
    };
    PairCrossing::NoCrossing { note: note.into() }
}

/// Crossings of the curves of adjacent distances. `curves` need not be sorted.
pub fn threshold(curves: &[(usize, Vec<CurvePoint>)]) -> Result<ThresholdEstimate> {
    if curves.len() < 2 {
        return Err(Error::Invalid("threshold needs curves for at least two distances".into()));
    }
    let mut order: Vec<&(usize, Vec<CurvePoint>)> = curves.iter().collect();
    order.sort_by_key(|c| c.0);
    let mut pairs = Vec::new();
    for w in order.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.1.len() < 2 || b.1.len() < 2 {
            return Err(Error::Invalid("each curve needs at least two points".into()));
        }
        let sa = sorted_points(&a.1)?;
        let sb = sorted_points(&b.1)?;
        pairs.push(PairThreshold {
            d_small: a.0,
            d_large: b.0,
            result: pair_crossing(&sa, &sb),
        });
    }
    let found: Vec<(f64, f64)> = pairs
        .iter()
        .filter_map(|p| match p.result {
            PairCrossing::Crossing { q_effective, p_step } => Some((q_effective, p_step)),
            PairCrossing::NoCrossing { .. } => None,
        })
        .collect();
    let mean = |f: fn(&(f64, f64)) -> f64| {
        (!found.is_empty()).then(|| found.iter().map(f).sum::<f64>() / found.len() as f64)
    };
    Ok(ThresholdEstimate {
        pairs,
        mean_q_effective: mean(|v| v.0),
        mean_p_step: mean(|v| v.1),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: Method,
    pub n: usize,
    pub seconds: f64,
}

/// Wall-clock time for canonicalizing the same `n` sampled bit-flip errors
/// (per-cycle probability `q`) with each method. `Method::Rank` times the
/// batch class-table route with unification.
pub fn bench_gauge(
    layout: &CodeLayout,
    n: usize,
    methods: &[Method],
    q: f64,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let canons: Vec<Canonicalizer> = methods
        .iter()
        .map(|&m| match m {
            Method::Rank => Ok(Canonicalizer::identity(layout)),
            m => Canonicalizer::new(layout, m),
        })
        .collect::<Result<_>>()?;
    let gb = GaugeBasis::new(layout.x_gauge_matrix(), 0)?;
    let mut rng = noise::stream_rng(seed, 0);
    let errors: Vec<BitVec> = (0..n)
        .map(|_| noise::sample_bitflip(layout, q, &mut rng).e_x)
        .collect();
    let mut rows = Vec::new();
    for (&method, canon) in methods.iter().zip(&canons) {
        let start = Instant::now();
        let out = match method {
            Method::Rank => canonical_bitflip_rank(&errors, layout, &gb, true)?,
            _ => errors.iter().map(|e| canon.bitflip(e)).collect::<Result<Vec<_>>>()?,
        };
        let seconds = start.elapsed().as_secs_f64();
        std::hint::black_box(out);
        rows.push(BenchRow { method, n, seconds });
    }
    Ok(rows)
}

pub const CSV_HEADER: &str = "d,p_step,q_effective,trials,failures,rate,ci_lo,ci_hi,decoder,labels";

/// Writes the points as CSV, preceded by `# `-prefixed provenance lines.
pub fn write_csv<W: Write>(mut w: W, provenance: &[String], points: &[CurvePoint]) -> Result<()> {
    for line in provenance {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "{CSV_HEADER}")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            p.d,
            p.p_step,
            p.q_effective,
            p.trials,
            p.failures,
            p.logical_error_rate,
            p.ci_lo,
            p.ci_hi,
            p.decoder,
            p.labels
        )?;
    }
    Ok(())
}

/// Reads CSV written by [`write_csv`]; comment lines are skipped.
pub fn read_csv(text: &str) -> Result<Vec<CurvePoint>> {
    let mut out = Vec::new();
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !seen_header {
            if line != CSV_HEADER {
                return Err(Error::Malformed {
                    line: line_no,
                    msg: format!("expected header {CSV_HEADER:?}"),
                });
            }
            seen_header = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(Error::Malformed {
                line: line_no,
                msg: format!("expected 10 fields, found {}", f.len()),
            });
        }
        let bad = |msg: &str| Error::Malformed {
            line: line_no,
            msg: msg.into(),
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
        let int = |s: &str| s.parse::<u64>().map_err(|_| bad("bad integer"));
        let mut p = CurvePoint::new(
            int(f[0])? as usize,
            num(f[1])?,
            num(f[2])?,
            int(f[3])?,
            int(f[4])?,
        );
        p.logical_error_rate = num(f[5])?;
        p.ci_lo = num(f[6])?;
        p.ci_hi = num(f[7])?;
        p.ci_halfwidth = (p.ci_hi - p.ci_lo) / 2.0;
        p.decoder = f[8].into();
        p.labels = f[9].into();
        out.push(p);
    }
    Ok(out)
}

/// Log-log chart of logical error rate against q_effective, one polyline
/// per (decoder, labels, d), with the identity line dashed.
pub fn render_svg(points: &[CurvePoint]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const M: f64 = 60.0;
    const COLORS: [&str; 8] = [
        "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    ];
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    );
    let qs: Vec<f64> = points.iter().map(|p| p.q_effective).filter(|&q| q > 0.0).collect();
    if qs.is_empty() {
        s.push_str("</svg>\n");
        return s;
    }
    let floor = points
        .iter()
        .map(|p| 0.5 / p.trials.max(1) as f64)
        .fold(f64::INFINITY, f64::min);
    let x_lo = qs.iter().copied().fold(f64::INFINITY, f64::min).log10().floor();
    let x_hi = qs.iter().copied().fold(0.0, f64::max).log10().ceil().max(x_lo + 1.0);
    let y_lo = points
        .iter()
        .map(|p| p.logical_error_rate.max(floor))
        .chain(qs.iter().copied())
        .fold(f64::INFINITY, f64::min)
        .log10()
        .floor();
    let y_hi = 0.0f64;
    let px = |q: f64| M + (q.log10() - x_lo) / (x_hi - x_lo) * (W - 2.0 * M);
    let py = |r: f64| H - M - (r.max(floor).log10() - y_lo) / (y_hi - y_lo) * (H - 2.0 * M);

    s.push_str(&format!(
        "<rect x=\"{M}\" y=\"{M}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        W - 2.0 * M,
        H - 2.0 * M
    ));
    for e in x_lo as i32..=x_hi as i32 {
        let x = px(10f64.powi(e));
        s.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\">1e{e}</text>\n",
            H - M + 16.0
        ));
    }
    for e in y_lo as i32..=y_hi as i32 {
        let y = py(10f64.powi(e));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{y:.1}\" text-anchor=\"end\">1e{e}</text>\n",
            M - 6.0
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">physical error probability per cycle</text>\n",
        W / 2.0,
        H - 18.0
    ));
    s.push_str(&format!(
        "<text x=\"16\" y=\"{}\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\">logical error rate</text>\n",
        H / 2.0,
        H / 2.0
    ));
    let (a, b) = (10f64.powf(x_lo.max(y_lo)), 10f64.powf(x_hi.min(y_hi)));
    s.push_str(&format!(
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n",
        px(a),
        py(a),
        px(b),
        py(b)
    ));

    let mut series: Vec<(String, String, usize)> = Vec::new();
    for p in points {
        let key = (p.decoder.clone(), p.labels.clone(), p.d);
        if !series.contains(&key) {
            series.push(key);
        }
    }
    for (k, (dec, lab, d)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut pts: Vec<&CurvePoint> = points
            .iter()
            .filter(|p| &p.decoder == dec && &p.labels == lab && p.d == *d && p.q_effective > 0.0)
            .collect();
        pts.sort_by(|a, b| a.q_effective.total_cmp(&b.q_effective));
        let path: Vec<String> = pts
            .iter()
            .map(|p| format!("{:.1},{:.1}", px(p.q_effective), py(p.logical_error_rate)))
            .collect();
        s.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\"/>\n",
            path.join(" ")
        ));
        for p in &pts {
            s.push_str(&format!(
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"2.5\" fill=\"{color}\"/>\n",
                px(p.q_effective),
                py(p.logical_error_rate)
            ));
        }
        let label = if lab == "-" { format!("{dec} d={d}") } else { format!("{dec} ({lab}) d={d}") };
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{label}</text>\n",
            M + 8.0,
            M + 14.0 + 13.0 * k as f64
        ));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoders::{LookupDecoder, MatchingDecoder};

    struct Fixed(PauliSample);
    impl Decoder for Fixed {
        fn name(&self) -> String {
            "fixed".into()
        }
        fn decode(&self, _: &Syndrome) -> Result<PauliSample> {
            Ok(self.0.clone())
        }
    }

    fn point(q: f64, rate: f64) -> CurvePoint {
        let mut p = CurvePoint::new(3, q, q, 1_000_000, (rate * 1e6).round() as u64);
        p.logical_error_rate = rate;
        p
    }

    #[test]
    fn failure_examples() {
        let l = CodeLayout::new(3).unwrap();
        let c = FailureCheck::new(&l, Target::X).unwrap();
        let e = |ix: &[usize]| BitVec::from_indices(9, ix).unwrap();
        // residual {3,4,6,7} is a gauge plaquette
        assert!(!c.x_fails(&e(&[4]), &e(&[3, 6, 7])).unwrap());
        assert!(c.x_fails(&e(&[0]), &e(&[])).unwrap());
        assert!(!c.x_fails(&e(&[0]), &e(&[0])).unwrap());
        // symmetric in its arguments
        for v in 0u64..512 {
            let a = BitVec::from_u64(9, v);
            let b = BitVec::from_u64(9, (v * 37 + 11) % 512);
            assert_eq!(c.x_fails(&a, &b).unwrap(), c.x_fails(&b, &a).unwrap());
            assert_eq!(c.z_fails(&a, &b).unwrap(), c.z_fails(&b, &a).unwrap());
        }
        // a Z residual is harmless exactly when each row pair cancels
        assert!(!c.z_fails(&e(&[0]), &e(&[3])).unwrap());
        assert!(c.z_fails(&e(&[0]), &e(&[1])).unwrap());
    }

    #[test]
    fn zero_noise_never_fails() {
        let l = CodeLayout::new(3).unwrap();
        let dec = MatchingDecoder::new(&l);
        let noise = NoiseConfig::new(NoiseModel::Depolarizing, 0.0, 1);
        let p = logical_error_rate(&dec, &l, &noise, 5000, Target::Any).unwrap();
        assert_eq!(p.failures, 0);
        assert_eq!(p.logical_error_rate, 0.0);
        assert!(p.ci_hi > 0.0 && p.ci_lo == 0.0);
        assert!(logical_error_rate(&dec, &l, &noise, 0, Target::X).is_err());
    }

    #[test]
    fn doing_nothing_fails_when_error_is_logical() {
        // with q = 1 every qubit flips: a full bit-flip error is one logical X
        // times gauge elements, so the identity decoder always fails at odd d
        let l = CodeLayout::new(3).unwrap();
        let dec = Fixed(PauliSample::identity(9));
        let noise = NoiseConfig::new(NoiseModel::Bitflip, 1.0, 1);
        let p = logical_error_rate(&dec, &l, &noise, 100, Target::X).unwrap();
        assert_eq!(p.failures, 100);
    }

    #[test]
    fn uniform_noise_gives_half() {
        let l = CodeLayout::new(3).unwrap();
        let dec = LookupDecoder::for_noise(&l, NoiseModel::Bitflip, 0.5).unwrap();
        let noise = NoiseConfig::new(NoiseModel::Bitflip, 0.5, 3);
        let noise = NoiseConfig { steps: 1, ..noise };
        let p = logical_error_rate(&dec, &l, &noise, 20_000, Target::X).unwrap();
        assert!(p.ci_lo <= 0.5 && 0.5 <= p.ci_hi, "{p:?}");
    }

    #[test]
    fn rate_is_reproducible() {
        let l = CodeLayout::new(5).unwrap();
        let dec = MatchingDecoder::new(&l);
        let noise = NoiseConfig::new(NoiseModel::Bitflip, 0.004, 9);
        let a = logical_error_rate(&dec, &l, &noise, 5000, Target::X).unwrap();
        let b = logical_error_rate(&dec, &l, &noise, 5000, Target::X).unwrap();
        assert_eq!(a, b);
        assert!(a.failures > 0);
    }

    #[test]
    fn wilson_matches_closed_form() {
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        // for k = 0 the upper limit is z²/(n + z²)
        let z2 = Z95 * Z95;
        assert!((hi - z2 / (100.0 + z2)).abs() < 1e-12);
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo + hi - 1.0).abs() < 1e-12);
        assert!((hi - 0.596_164).abs() < 1e-5);
    }

    fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if (f(a) < 0.0) == (f(m) < 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn pseudo_threshold_two_point_example() {
        let pts = [point(0.004, 0.002), point(0.008, 0.012)];
        // the log-log segment through both points, minus the identity line
        let f = |q: f64| {
            let t = (q.ln() - 0.004f64.ln()) / (0.008f64.ln() - 0.004f64.ln());
            (0.002f64.ln() + t * (0.012f64.ln() - 0.002f64.ln())) - q.ln()
        };
        let want = bisect(f, 0.004, 0.008);
        match pseudo_threshold(&pts).unwrap() {
            PseudoThreshold::Crossing { q_effective, lo, hi, crossings, .. } => {
                assert!((q_effective - want).abs() < 1e-12, "{q_effective} vs {want}");
                assert_eq!((lo, hi, crossings), (0, 1, 1));
                assert!(q_effective > 0.004 && q_effective < 0.008);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pseudo_threshold_special_cases() {
        let identity: Vec<_> = [0.001, 0.01, 0.1].iter().map(|&q| point(q, q)).collect();
        assert!(matches!(
            pseudo_threshold(&identity).unwrap(),
            PseudoThreshold::Degenerate { .. }
        ));
        let above: Vec<_> = [0.001, 0.01, 0.1].iter().map(|&q| point(q, 2.0 * q)).collect();
        assert_eq!(
            pseudo_threshold(&above).unwrap(),
            PseudoThreshold::OutsideRange { above_identity: true }
        );
        let below: Vec<_> = [0.001, 0.01, 0.1].iter().map(|&q| point(q, q * q)).collect();
        assert_eq!(
            pseudo_threshold(&below).unwrap(),
            PseudoThreshold::OutsideRange { above_identity: false }
        );
        // input order does not matter
        let mut pts = vec![point(0.008, 0.012), point(0.004, 0.002)];
        let a = pseudo_threshold(&pts).unwrap();
        pts.reverse();
        assert_eq!(a, pseudo_threshold(&pts).unwrap());
    }

    #[test]
    fn pseudo_threshold_reports_step_probability() {
        let mk = |q: f64, r: f64| {
            let p = noise::step_prob_for_cycle(q, 11).unwrap();
            let mut c = CurvePoint::new(3, p, q, 1000, 1);
            c.logical_error_rate = r;
            c
        };
        let pts = [mk(0.004, 0.002), mk(0.008, 0.012)];
        let PseudoThreshold::Crossing { q_effective, p_step, .. } = pseudo_threshold(&pts).unwrap() else {
            panic!()
        };
        assert!((noise::effective_cycle_prob(p_step, 11).unwrap() - q_effective).abs() < 1e-12);
    }

    fn synthetic(d: usize, pth: f64) -> Vec<CurvePoint> {
        let e = (d as f64 + 1.0) / 2.0;
        (0..8)
            .map(|k| {
                let q = 0.005 * 1.25f64.powi(k);
                let mut c = point(q, (q / pth).powf(e) * pth);
                c.d = d;
                c
            })
            .collect()
    }

    #[test]
    fn threshold_recovers_synthetic_family() {
        let curves: Vec<_> = [3, 5, 7].iter().map(|&d| (d, synthetic(d, 0.015))).collect();
        let t = threshold(&curves).unwrap();
        assert_eq!(t.pairs.len(), 2);
        let m = t.mean_q_effective.unwrap();
        assert!((m - 0.015).abs() / 0.015 < 1e-9, "{m}");
    }

    #[test]
    fn threshold_special_cases() {
        let a = synthetic(3, 0.015);
        let t = threshold(&[(3, a.clone()), (5, a.clone())]).unwrap();
        assert!(matches!(t.pairs[0].result, PairCrossing::NoCrossing { .. }));
        assert_eq!(t.mean_q_effective, None);
        // threshold far below the sampled range: the larger code is worse everywhere
        let t = threshold(&[(3, synthetic(3, 0.001)), (5, synthetic(5, 0.001))]).unwrap();
        match &t.pairs[0].result {
            PairCrossing::NoCrossing { note } => assert!(note.contains("below")),
            other => panic!("{other:?}"),
        }
        let t = threshold(&[(3, synthetic(3, 0.5)), (5, synthetic(5, 0.5))]).unwrap();
        match &t.pairs[0].result {
            PairCrossing::NoCrossing { note } => assert!(note.contains("above")),
            other => panic!("{other:?}"),
        }
        assert!(threshold(&[(3, a)]).is_err());
    }

    #[test]
    fn bench_gauge_table() {
        let l = CodeLayout::new(3).unwrap();
        assert!(bench_gauge(&l, 0, &[Method::Search], 0.05, 1).unwrap().is_empty());
        let rows = bench_gauge(&l, 500, &[Method::None, Method::Search, Method::Rank], 0.05, 1).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.n == 500 && r.seconds >= 0.0));
        let l7 = CodeLayout::new(7).unwrap();
        assert!(bench_gauge(&l7, 10, &[Method::Search], 0.05, 1).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let pts = vec![
            CurvePoint::new(3, 0.001, 0.010945, 1000, 7).labelled("ffnn", "canonical"),
            CurvePoint::new(5, 0.002, 0.0218, 1000, 0).labelled("mwpm", "-"),
        ];
        let mut buf = Vec::new();
        write_csv(&mut buf, &["seed = 1".into()], &pts).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# seed = 1\nd,p_step"));
        assert_eq!(read_csv(&text).unwrap(), pts);
        assert!(read_csv("d,p\n").is_err());
    }

    #[test]
    fn svg_has_one_series_per_curve() {
        let mut pts = synthetic(3, 0.015);
        pts.extend(synthetic(5, 0.015));
        for p in &mut pts {
            p.decoder = "mwpm".into();
        }
        let svg = render_svg(&pts);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(render_svg(&[]).ends_with("</svg>\n"));
    }
}
