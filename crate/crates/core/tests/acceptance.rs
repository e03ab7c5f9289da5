//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.
//!
//! Thresholds are pinned here; nothing reads them from the library.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use radial_attention::analysis::{
    decay_curves_of, doubling_profile, error_bound, fit_exponential, match_budgets, region_zero_bounds,
    verify_error_bound, ErrorBoundConfig,
};
use radial_attention::attention::{row_l1_error, synth_decay_instance, DecayMode};
use radial_attention::blocksparse::{deserialize, serialize};
use radial_attention::oracle::{radial_count, radial_mask_matches};
use radial_attention::presets::preset;
use radial_attention::{
    attention_flops, blockify, count_kept, dense_attention, masked_attention, materialize_mask, sparsity,
    AttentionInstance, DecayParams, GridShape, PatternKind, PatternSpec,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn shape(f: usize, s: usize) -> GridShape {
    GridShape::new(f, s).unwrap()
}

fn mask_oracle() -> Verdict {
    let mut mismatches = Vec::new();
    for f in 1..=12 {
        for s in 1..=12 {
            for sink in [false, true] {
                let g = shape(f, s);
                let spec = PatternSpec::radial().with_sink(sink);
                let streamed = count_kept(&g, &spec).unwrap();
                let mask = materialize_mask(&g, &spec).unwrap();
                let brute = radial_count(f, s, sink);
                if streamed != brute || mask.kept_count() != brute || !radial_mask_matches(&mask, sink) {
                    mismatches.push(format!("f={f} s={s} sink={sink}"));
                }
            }
        }
    }
    verdict(
        mismatches.is_empty(),
        format!("288 configurations, {} mismatches {:?}", mismatches.len(), mismatches),
    )
}

fn complexity_bounds() -> Verdict {
    let frames: Vec<usize> = (2..=10).map(|e| 1usize << e).collect();
    let mut region_failures = Vec::new();
    let mut headline_failures = Vec::new();
    let mut growth_failures = Vec::new();
    for s in [4usize, 16, 64] {
        let profile = doubling_profile(s, &frames).unwrap();
        for step in &profile {
            let f = step.frames;
            let bounds = region_zero_bounds(&shape(f, s));
            if step.kept > bounds.total {
                region_failures.push(format!("s={s} f={f}"));
            }
            let headline = 4 * (s * s * f) as u128 * u128::from(f.ilog2());
            if f >= 2 * s && step.kept > headline {
                headline_failures.push(format!("s={s} f={f}"));
            }
            if let Some(r) = step.ratio {
                if r > 2.3 {
                    growth_failures.push(format!("s={s} f={}->{f}: {r:.3}", f / 2));
                }
            }
        }
    }
    verdict(
        region_failures.is_empty() && headline_failures.is_empty() && growth_failures.is_empty(),
        format!(
            "region violations {region_failures:?}; headline violations {headline_failures:?}; \
             doublings above 2.3 {growth_failures:?}"
        ),
    )
}

fn error_bound_trials() -> Verdict {
    let mut cfg = ErrorBoundConfig::new(shape(64, 16), 1000, 7);
    cfg.alpha_range = (0.1, 2.0);
    cfg.beta_range = (0.1, 2.0);
    let r = verify_error_bound(&cfg).unwrap();
    let worst = r.worst_case.worst.unwrap();
    verdict(
        r.all_within_bound() && r.max_discrepancy <= 1e-10,
        format!(
            "violations: worst-case {}/1000, random {}/1000; max ratio {:.3} \
             (alpha={:.3} beta={:.3}); identity gap {:.2e}",
            r.worst_case.violations,
            r.random.violations,
            r.worst_case.max_ratio.max(r.random.max_ratio),
            worst.alpha,
            worst.beta,
            r.max_discrepancy
        ),
    )
}

fn bound_point_value() -> Verdict {
    let v = error_bound(1.0, 1.0, 1.0, 8).unwrap();
    verdict((v - 0.1366).abs() <= 1e-3, format!("error_bound(1, 1, s=8, 1) = {v:.6}"))
}

fn dense_identity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut shapes = Vec::new();
    for trial in 0..20u64 {
        let (f, s) = if trial == 0 {
            (64, 64)
        } else {
            (rng.random_range(1..=32), rng.random_range(1..=64))
        };
        let g = shape(f, s);
        let inst = AttentionInstance::random(g, rng.random_range(1..=32), trial).unwrap();
        let dense = dense_attention(&inst);
        let layout = blockify(&g, &PatternSpec::dense(), 16).unwrap();
        let masked = masked_attention(&inst, &layout).unwrap();
        let gap = dense
            .as_slice()
            .iter()
            .zip(masked.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(gap);
        shapes.push(g.total_tokens());
    }
    verdict(
        worst <= 1e-12,
        format!("20 instances, n up to {}, max |diff| {worst:.2e}", shapes.iter().max().unwrap()),
    )
}

fn preset_layout(name: &str) -> (f64, f64) {
    let p = preset(name).unwrap();
    let layout = blockify(&p.shape(), &PatternSpec::radial(), p.block_size()).unwrap();
    let flops = attention_flops(&layout, 128, 1).unwrap();
    (sparsity(&layout), flops.reduction_ratio)
}

fn flops_reduction() -> Verdict {
    let (_, reduction) = preset_layout("hunyuan-509");
    verdict(
        (7.0..=11.0).contains(&reduction),
        format!("hunyuan-509 (f=128, s=3600, B=128, sink): reduction {reduction:.3}, want [7, 11]"),
    )
}

fn sparsity_trend() -> Verdict {
    let targets = [("wan-161", 0.736), ("hunyuan-253", 0.808), ("hunyuan-509", 0.883)];
    let measured: Vec<f64> = targets.iter().map(|(name, _)| preset_layout(name).0).collect();
    let within = targets
        .iter()
        .zip(&measured)
        .all(|((_, want), got)| (got - want).abs() <= 0.05);
    let increasing = measured.windows(2).all(|w| w[0] < w[1]);
    let listing: Vec<String> = targets
        .iter()
        .zip(&measured)
        .map(|((name, want), got)| format!("{name} {:.1}% (want {:.1}%)", got * 100.0, want * 100.0))
        .collect();
    verdict(
        within && increasing,
        format!("{}; strictly increasing: {increasing}", listing.join(", ")),
    )
}

fn regression() -> Verdict {
    let exact: Vec<(f64, f64)> = (0..20).map(|x| (x as f64, (-0.5 * x as f64 + 1.0).exp())).collect();
    let fit = fit_exponential(&exact).unwrap();
    let exact_ok = (fit.a - 0.5).abs() < 1e-12 && (fit.b - 1.0).abs() < 1e-12 && (fit.r2 - 1.0).abs() < 1e-12;

    let params = DecayParams::new(0.5, 0.8, 1.0).unwrap();
    let inst = synth_decay_instance(&shape(16, 16), &params, DecayMode::WorstCase, 4, 3).unwrap();
    let curves = decay_curves_of(&inst).unwrap();
    let t = fit_exponential(&curves.temporal_points()).unwrap();
    let s = fit_exponential(&curves.spatial_points()).unwrap();
    verdict(
        exact_ok && t.r2 >= 0.985 && s.r2 >= 0.985,
        format!(
            "noiseless a={:.6} b={:.6} r2={:.6}; A1 curves r2 temporal {:.4} spatial {:.4}",
            fit.a, fit.b, fit.r2, t.r2, s.r2
        ),
    )
}

fn comparative_error() -> Verdict {
    let g = shape(32, 16);
    let block = 1;
    let matched = match_budgets(&[PatternSpec::radial(), PatternSpec::sta(2, 2).with_sink(true)], &g, block).unwrap();
    let radial = blockify(&g, &matched[0].pattern, block).unwrap();
    let sta = blockify(&g, &matched[1].pattern, block).unwrap();
    let params = DecayParams::new(0.05, 1.0, 1.0).unwrap();
    let (mut radial_sum, mut sta_sum, mut radial_wins) = (0.0, 0.0, 0);
    let trials = 100;
    for trial in 0..trials {
        let inst = synth_decay_instance(&g, &params, DecayMode::Random, 1, 1000 + trial).unwrap();
        let mean = |layout| {
            (0..g.total_tokens())
                .map(|u| row_l1_error(&inst, layout, u).unwrap().value())
                .sum::<f64>()
                / g.total_tokens() as f64
        };
        let (r, s) = (mean(&radial), mean(&sta));
        radial_sum += r;
        sta_sum += s;
        radial_wins += usize::from(r < s);
    }
    let (r, s) = (radial_sum / trials as f64, sta_sum / trials as f64);
    verdict(
        r < s,
        format!(
            "B=1, kept blocks radial {} vs {} {}; mean l1 radial {r:.4} vs sta {s:.4}; radial lower in {radial_wins}/{trials}",
            matched[0].kept_blocks, matched[1].pattern, matched[1].kept_blocks
        ),
    )
}

fn serialization() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut round_trip_failures = 0;
    for _ in 0..200 {
        let g = shape(rng.random_range(1..=40), rng.random_range(1..=40));
        let kind = PatternKind::ALL[rng.random_range(0..PatternKind::ALL.len())];
        let mut spec = PatternSpec::with_default_windows(kind).with_sink(rng.random());
        spec.temporal_window = spec.temporal_window.map(|_| rng.random_range(0..6));
        spec.spatial_window = spec.spatial_window.map(|_| rng.random_range(0..6));
        let layout = blockify(&g, &spec, rng.random_range(1..=24)).unwrap();
        let bytes = serialize(&layout);
        match deserialize(&bytes) {
            Ok(back) if back == layout && serialize(&back) == bytes => {}
            _ => round_trip_failures += 1,
        }
    }

    let layout = blockify(&shape(12, 10), &PatternSpec::radial(), 4).unwrap();
    let bytes = serialize(&layout);
    let header_len = 4 + 2 + 4 * 3 + 2 + 4;
    let mut crashes = 0;
    let mut silent = 0;
    let mut structured = 0;
    let mut corrupted = Vec::new();
    for pos in 0..header_len {
        for flip in [0x01u8, 0x80, 0xff] {
            let mut b = bytes.clone();
            b[pos] ^= flip;
            corrupted.push(b);
        }
    }
    corrupted.extend((0..bytes.len()).map(|len| bytes[..len].to_vec()));
    for b in &corrupted {
        match catch_unwind(AssertUnwindSafe(|| deserialize(b))) {
            Err(_) => crashes += 1,
            Ok(Err(_)) => structured += 1,
            Ok(Ok(back)) if back == layout => silent += 1,
            // a flip can land on another valid header (e.g. frames 12 -> 13)
            Ok(Ok(_)) => {}
        }
    }
    verdict(
        round_trip_failures == 0 && crashes == 0 && silent == 0,
        format!(
            "200 layouts, {round_trip_failures} round-trip failures; {} corrupted inputs: \
             {structured} structured errors, {crashes} panics, {silent} accepted unchanged",
            corrupted.len()
        ),
    )
}

type Criterion = (u32, &'static str, fn() -> Verdict, Option<Duration>);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "mask oracle equivalence", mask_oracle, Some(Duration::from_secs(30))),
        (2, "complexity bounds", complexity_bounds, Some(Duration::from_secs(60))),
        (3, "error bound trials", error_bound_trials, Some(Duration::from_secs(60))),
        (4, "bound point value", bound_point_value, None),
        (5, "dense-mask identity", dense_identity, Some(Duration::from_secs(30))),
        (6, "FLOPs reduction", flops_reduction, Some(Duration::from_secs(120))),
        (7, "sparsity trend", sparsity_trend, None),
        (8, "regression", regression, None),
        (9, "comparative error direction", comparative_error, None),
        (10, "serialization", serialization, None),
    ];
    let mut failed = Vec::new();
    for (id, name, check, limit) in criteria {
        let start = Instant::now();
        let v = check();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let pass = v.pass && in_time;
        let timing = match limit {
            Some(l) => format!("{:.2}s of {}s", elapsed.as_secs_f64(), l.as_secs()),
            None => format!("{:.2}s", elapsed.as_secs_f64()),
        };
        println!(
            "{} criterion {id:>2} {name}: {} [{timing}]",
            if pass { "PASS" } else { "FAIL" },
            v.detail
        );
        if !pass {
            failed.push(id);
        }
    }
    println!("acceptance: {} of 10 passed; failing {:?}", 10 - failed.len(), failed);
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
