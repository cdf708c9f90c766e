//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
//! Reference values are computed here by brute force, independently of the
//! library routines under test.

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use heavyhex::canonical::{
    canonical_bitflip_exact, canonical_bitflip_rank, canonical_bitflip_search, canonical_phaseflip,
    GaugeBasis, Method,
};
use heavyhex::dataset::{generate, LabelField};
use heavyhex::decoders::mlp::{Group, MlpModel};
use heavyhex::decoders::{train_decoder, Decoder, LookupDecoder, MatchingDecoder, TrainConfig};
use heavyhex::eval::{
    bench_gauge, logical_error_rate, pseudo_threshold, threshold, CurvePoint, PseudoThreshold, Target,
};
use heavyhex::noise::{effective_cycle_prob, stream_rng, NoiseConfig, NoiseModel};
use heavyhex::sweep::evaluate_instances;
use heavyhex::{BitVec, CodeLayout};
use rand::Rng;

// pinned tolerances
const EFFECTIVE_TOL: f64 = 1e-6;
const GRAD_EPS: f64 = 1e-4;
const GRAD_REL_TOL: f64 = 1e-4;
const THRESHOLD_REL_TOL: f64 = 0.02;

// decoder study settings
const TRAIN_SAMPLES: usize = 100_000;
const EVAL_TRIALS: u64 = 100_000;
const EPOCHS: usize = 200;
const SEEDS: usize = 5;
const BATCH: usize = 100;
const LR: f64 = 0.3;

type Outcome = (bool, String);

fn bits(v: &BitVec) -> u64 {
    v.iter_ones().fold(0, |acc, i| acc | 1 << i)
}

/// Every element of the span of `gens`, as integers with bit k = qubit k.
fn span_ints(gens: &[BitVec]) -> Vec<u64> {
    let g: Vec<u64> = gens.iter().map(bits).collect();
    let mut out = vec![0u64];
    for x in g {
        let more: Vec<u64> = out.iter().map(|s| s ^ x).collect();
        out.extend(more);
    }
    out.sort_unstable();
    out.dedup();
    out
}

// with bit k weighted 2^k, lexicographic weight order is integer order
fn brute_coset_min(e: u64, span: &[u64]) -> u64 {
    span.iter().map(|s| e ^ s).min().unwrap()
}

fn c1_counts() -> Outcome {
    let mut ok = true;
    let mut msg = Vec::new();
    for (d, want) in [(3, [4, 6, 4, 2]), (5, [12, 20, 12, 4])] {
        let l = CodeLayout::new(d).unwrap();
        let got = [
            l.x_gauge_generators().len(),
            l.z_gauge_generators().len(),
            l.z_stabilizers().len(),
            l.x_stabilizers().len(),
        ];
        ok &= got == want;
        msg.push(format!("d={d} {got:?}"));
    }
    (ok, msg.join(", "))
}

fn c2_classes() -> Outcome {
    let l = CodeLayout::new(3).unwrap();
    // classes = 2^9 / |gauge group|
    let bit = 512 / span_ints(l.x_gauge_generators()).len();
    let phase = 512 / span_ints(l.z_gauge_generators()).len();
    let gb = GaugeBasis::bitflip(&l).unwrap();
    let reps_b: HashSet<_> = (0u64..512)
        .map(|v| canonical_bitflip_search(&BitVec::from_u64(9, v), &gb).unwrap())
        .collect();
    let reps_p: HashSet<_> = (0u64..512)
        .map(|v| canonical_phaseflip(&BitVec::from_u64(9, v), 3).unwrap())
        .collect();
    let ok = bit == 32 && phase == 8 && reps_b.len() == 32 && reps_p.len() == 8;
    (
        ok,
        format!(
            "bit flip {bit} (distinct reps {}), phase flip {phase} (distinct reps {})",
            reps_b.len(),
            reps_p.len()
        ),
    )
}

fn c3_oracles() -> Outcome {
    let mut mismatches = 0;
    // d = 3: every input, against a brute-force coset minimum
    let l3 = CodeLayout::new(3).unwrap();
    let gb3 = GaugeBasis::bitflip(&l3).unwrap();
    let span3 = span_ints(l3.x_gauge_generators());
    let all: Vec<BitVec> = (0u64..512).map(|v| BitVec::from_u64(9, v)).collect();
    let rank3 = canonical_bitflip_rank(&all, &l3, &gb3, true).unwrap();
    for (e, r) in all.iter().zip(&rank3) {
        let want = brute_coset_min(bits(e), &span3);
        let s = canonical_bitflip_search(e, &gb3).unwrap();
        let x = canonical_bitflip_exact(e, &gb3).unwrap();
        if bits(&s) != want || bits(&x) != want || bits(r) != want {
            mismatches += 1;
        }
    }
    // d = 5: 10^3 random inputs
    let l5 = CodeLayout::new(5).unwrap();
    let gb5 = GaugeBasis::bitflip(&l5).unwrap();
    let span5 = span_ints(l5.x_gauge_generators());
    let mut rng = stream_rng(2024, 0);
    let errs: Vec<BitVec> = (0..1000)
        .map(|_| BitVec::from_u64(25, rng.gen::<u64>() & ((1 << 25) - 1)))
        .collect();
    let rank5 = canonical_bitflip_rank(&errs, &l5, &gb5, true).unwrap();
    for (e, r) in errs.iter().zip(&rank5) {
        let want = brute_coset_min(bits(e), &span5);
        let s = canonical_bitflip_search(e, &gb5).unwrap();
        let x = canonical_bitflip_exact(e, &gb5).unwrap();
        if bits(&s) != want || bits(&x) != want || bits(r) != want {
            mismatches += 1;
        }
    }
    (
        mismatches == 0,
        format!("512 d=3 + 1000 d=5 inputs, {mismatches} disagreements among search/rank/exact/brute force"),
    )
}

fn c4_worked() -> Outcome {
    let l = CodeLayout::new(3).unwrap();
    let gb = GaugeBasis::bitflip(&l).unwrap();
    let e = |ix: &[usize]| BitVec::from_indices(9, ix).unwrap();
    let a = canonical_bitflip_exact(&e(&[3, 6, 7]), &gb).unwrap();
    let b = canonical_bitflip_exact(&e(&[4]), &gb).unwrap();
    let za = canonical_phaseflip(&e(&[6]), 3).unwrap();
    let zb = canonical_phaseflip(&e(&[0]), 3).unwrap();
    let ok = a == b && b == e(&[4]) && za == zb && zb == e(&[0]);
    (ok, format!("X{{3,6,7}} -> {a}, X{{4}} -> {b}, Z{{6}} -> {za}, Z{{0}} -> {zb}"))
}

fn c5_invariance() -> Outcome {
    let mut bad = 0;
    let mut total = 0;
    for d in [3usize, 5, 7] {
        let l = CodeLayout::new(d).unwrap();
        let n = d * d;
        let gb = GaugeBasis::new(l.x_gauge_matrix(), 0).unwrap();
        let mut rng = stream_rng(55, d as u64);
        let random_gauge = |gens: &[BitVec], rng: &mut rand_chacha::ChaCha8Rng| {
            let mut g = BitVec::zeros(n);
            for v in gens {
                if rng.gen::<bool>() {
                    g = g.xor(v).unwrap();
                }
            }
            g
        };
        for _ in 0..10_000 {
            let e = BitVec::from_bools(&(0..n).map(|_| rng.gen::<bool>()).collect::<Vec<_>>());
            let gx = random_gauge(l.x_gauge_generators(), &mut rng);
            let gz = random_gauge(l.z_gauge_generators(), &mut rng);
            let ex = e.xor(&gx).unwrap();
            let ez = e.xor(&gz).unwrap();
            total += 1;
            let same = l.syndrome_bitflip(&e).unwrap() == l.syndrome_bitflip(&ex).unwrap()
                && l.syndrome_phaseflip(&e).unwrap() == l.syndrome_phaseflip(&ez).unwrap()
                && canonical_bitflip_exact(&e, &gb).unwrap() == canonical_bitflip_exact(&ex, &gb).unwrap()
                && canonical_phaseflip(&e, d).unwrap() == canonical_phaseflip(&ez, d).unwrap();
            if !same {
                bad += 1;
            }
        }
    }
    (bad == 0, format!("{total} (error, gauge) pairs at d=3,5,7, {bad} changed syndrome or class"))
}

fn c6_gradient() -> Outcome {
    let m = MlpModel::init(4, 2, 3, 6).unwrap();
    let data = [
        ([1.0, 0.0, 1.0, 1.0], [1.0, 0.0, 0.0]),
        ([0.0, 1.0, 0.0, 1.0], [0.0, 1.0, 1.0]),
        ([1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0]),
        ([0.0, 0.0, 1.0, 0.0], [1.0, 1.0, 0.0]),
    ];
    let groups: Vec<Group> = data
        .iter()
        .map(|(x, y)| Group {
            x: x.to_vec(),
            count: 1.0,
            target_sum: y.to_vec(),
        })
        .collect();
    // mean per-bit binary cross-entropy, written out directly
    let loss = |m: &MlpModel| -> f64 {
        let mut s = 0.0;
        for (x, y) in &data {
            let p = m.forward(x).unwrap();
            for (pi, yi) in p.iter().zip(y) {
                s -= yi * pi.ln() + (1.0 - yi) * (1.0 - pi).ln();
            }
        }
        s / (data.len() * 3) as f64
    };
    let (_, g) = m.loss_and_grad(&groups, data.len() as f64);
    let mut worst = 0.0f64;
    for which in 0..4 {
        let len = [m.w1.len(), m.b1.len(), m.w2.len(), m.b2.len()][which];
        for i in 0..len {
            let at = |delta: f64| {
                let mut c = m.clone();
                [&mut c.w1, &mut c.b1, &mut c.w2, &mut c.b2][which][i] += delta;
                loss(&c)
            };
            let numeric = (at(GRAD_EPS) - at(-GRAD_EPS)) / (2.0 * GRAD_EPS);
            let analytic = [&g.w1, &g.b1, &g.w2, &g.b2][which][i];
            let rel = (numeric - analytic).abs() / (numeric.abs() + analytic.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    (
        worst < GRAD_REL_TOL,
        format!("4-2-3 network, eps {GRAD_EPS}, max relative error {worst:.2e} (tolerance {GRAD_REL_TOL:e})"),
    )
}

fn c7_effective() -> Outcome {
    let q = effective_cycle_prob(0.001, 11).unwrap();
    // direct product form as the reference
    let want = 1.0 - 0.999f64.powi(11);
    let ok = (q - 0.010945).abs() <= EFFECTIVE_TOL && (q - want).abs() < 1e-15;
    (ok, format!("p_step 0.001, 11 steps -> {q:.8} (target 0.010945 +/- {EFFECTIVE_TOL:e})"))
}

fn c8_timing() -> Outcome {
    let l = CodeLayout::new(5).unwrap();
    let rows = bench_gauge(&l, 10_000, &[Method::Search, Method::Rank], 0.05, 8).unwrap();
    let search = rows[0].seconds;
    let rank = rows[1].seconds;
    (
        rank < search,
        format!("d=5, N=10000: search {search:.3}s, rank {rank:.3}s"),
    )
}

fn not_worse(a: &CurvePoint, b: &CurvePoint) -> bool {
    a.logical_error_rate <= b.logical_error_rate + a.ci_halfwidth + b.ci_halfwidth
}

fn c9_ordering() -> Outcome {
    let l = CodeLayout::new(3).unwrap();
    let mut ok = true;
    let mut msg = Vec::new();
    for (k, q) in [0.02, 0.05].into_iter().enumerate() {
        let data = NoiseConfig::with_effective(NoiseModel::Bitflip, q, 100 + k as u64).unwrap();
        let eval = NoiseConfig::with_effective(NoiseModel::Bitflip, q, 200 + k as u64).unwrap();
        let ds = generate(&l, &data, TRAIN_SAMPLES, Method::Exact).unwrap();
        let cfg = TrainConfig {
            batch_size: BATCH,
            epochs: EPOCHS,
            learning_rate: LR,
            instances: SEEDS,
            seed: 300 + k as u64,
            hidden_dim: 128,
        };
        let ffnn = |field| {
            let m = train_decoder(&ds, field, &cfg).unwrap();
            evaluate_instances(&m, &l, &eval, EVAL_TRIALS, Target::X).unwrap()
        };
        let raw = ffnn(LabelField::Raw);
        let canon = ffnn(LabelField::Canonical);
        let rate = |dec: &dyn Decoder| logical_error_rate(dec, &l, &eval, EVAL_TRIALS, Target::X).unwrap();
        let mwpm = rate(&MatchingDecoder::new(&l));
        let lookup = rate(&LookupDecoder::for_noise(&l, NoiseModel::Bitflip, q).unwrap());

        let a = not_worse(&canon, &raw);
        let b_raw = not_worse(&raw, &mwpm);
        let b_canon = not_worse(&canon, &mwpm);
        let b_lookup = not_worse(&lookup, &mwpm);
        let c = [&raw, &canon, &mwpm].iter().all(|o| not_worse(&lookup, o));
        ok &= a && b_raw && b_canon && b_lookup && c;
        let flag = |v: bool| if v { "ok" } else { "FAIL" };
        msg.push(format!(
            "q={q}: raw {:.5}±{:.5}, canonical {:.5}±{:.5}, mwpm {:.5}±{:.5}, lookup {:.5}±{:.5}; \
             (a) {} (b) raw {} canonical {} lookup {} (c) {}",
            raw.logical_error_rate,
            raw.ci_halfwidth,
            canon.logical_error_rate,
            canon.ci_halfwidth,
            mwpm.logical_error_rate,
            mwpm.ci_halfwidth,
            lookup.logical_error_rate,
            lookup.ci_halfwidth,
            flag(a),
            flag(b_raw),
            flag(b_canon),
            flag(b_lookup),
            flag(c)
        ));
    }
    (ok, msg.join(" | "))
}

fn c10_pseudo() -> Outcome {
    let l = CodeLayout::new(3).unwrap();
    let qs: Vec<f64> = (0..8).map(|k| 0.001 * 100f64.powf(k as f64 / 7.0)).collect();
    let mut points = Vec::new();
    for (k, &q) in qs.iter().enumerate() {
        let data = NoiseConfig::with_effective(NoiseModel::Bitflip, q, 400 + k as u64).unwrap();
        let eval = NoiseConfig::with_effective(NoiseModel::Bitflip, q, 500 + k as u64).unwrap();
        let ds = generate(&l, &data, TRAIN_SAMPLES, Method::Exact).unwrap();
        let cfg = TrainConfig {
            batch_size: BATCH,
            epochs: EPOCHS,
            learning_rate: LR,
            instances: SEEDS,
            seed: 600 + k as u64,
            hidden_dim: 128,
        };
        let m = train_decoder(&ds, LabelField::Canonical, &cfg).unwrap();
        points.push(evaluate_instances(&m, &l, &eval, EVAL_TRIALS, Target::X).unwrap());
    }
    let curve: Vec<String> = points
        .iter()
        .map(|p| format!("{:.4}:{:.2e}", p.q_effective, p.logical_error_rate))
        .collect();
    match pseudo_threshold(&points).unwrap() {
        PseudoThreshold::Crossing {
            q_effective,
            p_step,
            lo,
            hi,
            crossings,
        } => {
            let ok = crossings == 1 && (0.002..=0.02).contains(&p_step);
            (
                ok,
                format!(
                    "{crossings} crossing(s); first at q_eff {q_effective:.5} (p_step {p_step:.5}) between \
                     q_eff {:.4} and {:.4}; curve [{}]",
                    points[lo].q_effective,
                    points[hi].q_effective,
                    curve.join(", ")
                ),
            )
        }
        other => (false, format!("{other:?}; curve [{}]", curve.join(", "))),
    }
}

fn c11_synthetic() -> Outcome {
    let pth = 0.015;
    let curves: Vec<(usize, Vec<CurvePoint>)> = [3usize, 5, 7]
        .iter()
        .map(|&d| {
            let e = (d as f64 + 1.0) / 2.0;
            let pts = (0..9)
                .map(|k| {
                    let q = 0.005 * 1.2f64.powi(k);
                    let mut c = CurvePoint::new(d, q, q, 1_000_000, 0);
                    c.logical_error_rate = (q / pth).powf(e) * pth;
                    c
                })
                .collect();
            (d, pts)
        })
        .collect();
    let t = threshold(&curves).unwrap();
    let m = t.mean_q_effective.unwrap_or(f64::NAN);
    let ok = t.pairs.len() == 2 && (m - pth).abs() <= THRESHOLD_REL_TOL * pth;
    (ok, format!("recovered {m:.6} from pairs (3,5),(5,7) (target {pth} +/- 2%)"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("structure counts", c1_counts),
        ("class counts", c2_classes),
        ("oracle equivalence", c3_oracles),
        ("worked equivalences", c4_worked),
        ("gauge invariance", c5_invariance),
        ("gradient check", c6_gradient),
        ("effective cycle probability", c7_effective),
        ("timing direction", c8_timing),
        ("decoder ordering", c9_ordering),
        ("pseudo-threshold existence", c10_pseudo),
        ("synthetic threshold recovery", c11_synthetic),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let why = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {why}"))
        });
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {} {name}: {detail} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion(s) failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
