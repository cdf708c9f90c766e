//! Sweeps over distance and noise strength: generate, train, evaluate,
//! then locate pseudo-thresholds and thresholds.

use serde::{Deserialize, Serialize};

use crate::code::CodeLayout;
use crate::config::RunConfig;
use crate::dataset::generate;
use crate::decoders::{train_decoder, DecoderKind, LookupDecoder, MatchingDecoder, NeuralModelFile};
use crate::error::Result;
use crate::eval::{
    logical_error_rate, pseudo_threshold, threshold, CurvePoint, PseudoThreshold, Target,
    ThresholdEstimate,
};
use crate::noise::NoiseConfig;

/// Seed for one sub-task, mixed from the run seed and a tag path (splitmix64).
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    let mix = |mut z: u64| {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    tags.iter().fold(mix(seed), |acc, &t| mix(acc ^ mix(t)))
}

/// Stage tags for [`derive_seed`]: dataset sampling, evaluation trials, training.
pub const DATA: u64 = 1;
pub const EVAL: u64 = 2;
pub const TRAIN: u64 = 3;

/// Evaluates every instance of a trained model on the same trial stream
/// and pools the counts, so the rate is the mean over instances.
pub fn evaluate_instances(
    model: &NeuralModelFile,
    layout: &CodeLayout,
    noise: &NoiseConfig,
    trials: u64,
    target: Target,
) -> Result<CurvePoint> {
    let decoders = model.decoders(layout)?;
    let mut total = 0;
    let mut failures = 0;
    for dec in &decoders {
        let p = logical_error_rate(dec, layout, noise, trials, target)?;
        total += p.trials;
        failures += p.failures;
    }
    Ok(CurvePoint::new(layout.d(), noise.p_step, noise.effective()?, total, failures)
        .labelled("ffnn", &model.labels.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoEntry {
    pub decoder: String,
    pub labels: String,
    pub d: usize,
    pub result: PseudoThreshold,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEntry {
    pub decoder: String,
    pub labels: String,
    pub estimate: ThresholdEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<CurvePoint>,
    pub pseudo_thresholds: Vec<PseudoEntry>,
    pub thresholds: Vec<ThresholdEntry>,
    pub notes: Vec<String>,
}

impl SweepResult {
    /// Curve keys in first-appearance order.
    fn series(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        for p in &self.points {
            let k = (p.decoder.clone(), p.labels.clone());
            if !out.contains(&k) {
                out.push(k);
            }
        }
        out
    }

    fn analyse(&mut self) -> Result<()> {
        for (dec, lab) in self.series() {
            let mut curves: Vec<(usize, Vec<CurvePoint>)> = Vec::new();
            for p in self.points.iter().filter(|p| p.decoder == dec && p.labels == lab) {
                match curves.iter_mut().find(|c| c.0 == p.d) {
                    Some(c) => c.1.push(p.clone()),
                    None => curves.push((p.d, vec![p.clone()])),
                }
            }
            for (d, pts) in &curves {
                if pts.len() >= 2 {
                    self.pseudo_thresholds.push(PseudoEntry {
                        decoder: dec.clone(),
                        labels: lab.clone(),
                        d: *d,
                        result: pseudo_threshold(pts)?,
                    });
                }
            }
            if curves.len() >= 2 && curves.iter().all(|c| c.1.len() >= 2) {
                self.thresholds.push(ThresholdEntry {
                    decoder: dec.clone(),
                    labels: lab.clone(),
                    estimate: threshold(&curves)?,
                });
            }
        }
        Ok(())
    }
}

/// Runs the configured sweep. `progress` sees each point as it is produced.
pub fn run_sweep(cfg: &RunConfig, progress: &mut dyn FnMut(&CurvePoint)) -> Result<SweepResult> {
    cfg.validate()?;
    let target = cfg.target();
    let p_steps = cfg.sweep_p_steps()?;
    let mut res = SweepResult {
        points: Vec::new(),
        pseudo_thresholds: Vec::new(),
        thresholds: Vec::new(),
        notes: Vec::new(),
    };
    for d in cfg.distances() {
        let layout = CodeLayout::new(d)?;
        let matcher = MatchingDecoder::new(&layout);
        if d != 3 && cfg.decoders.contains(&DecoderKind::Lookup) {
            res.notes.push(format!("lookup decoder skipped at d = {d} (d = 3 only)"));
        }
        for (k, &p) in p_steps.iter().enumerate() {
            let tag = [d as u64, k as u64];
            let noise = |stage: u64| NoiseConfig {
                seed: derive_seed(cfg.seed, &[stage, tag[0], tag[1]]),
                p_step: p,
                ..cfg.noise()
            };
            let eval_noise = noise(EVAL);
            let mut push = |pt: CurvePoint, res: &mut SweepResult| {
                progress(&pt);
                res.points.push(pt);
            };
            for kind in &cfg.decoders {
                match kind {
                    DecoderKind::Mwpm => {
                        let pt = logical_error_rate(&matcher, &layout, &eval_noise, cfg.trials, target)?;
                        push(pt, &mut res);
                    }
                    DecoderKind::Lookup => {
                        if d != 3 {
                            continue;
                        }
                        let dec = LookupDecoder::for_noise(&layout, cfg.model, eval_noise.effective()?)?;
                        let pt = logical_error_rate(&dec, &layout, &eval_noise, cfg.trials, target)?;
                        push(pt, &mut res);
                    }
                    DecoderKind::Ffnn => {
                        let ds = generate(&layout, &noise(DATA), cfg.n, cfg.canonical)?;
                        let mut tcfg = cfg.train_config(d);
                        tcfg.seed = derive_seed(cfg.seed, &[TRAIN, tag[0], tag[1]]);
                        for &field in &cfg.labels {
                            let model = train_decoder(&ds, field, &tcfg)?;
                            let pt = evaluate_instances(&model, &layout, &eval_noise, cfg.trials, target)?;
                            push(pt, &mut res);
                        }
                    }
                }
            }
        }
    }
    res.analyse()?;
    Ok(res)
}
