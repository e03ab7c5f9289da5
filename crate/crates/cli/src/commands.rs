use std::fs;
use std::io::Read;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use radial_attention::analysis::{
    compare_patterns, decay_curves_of, fit_exponential, verify_complexity, verify_error_bound, ErrorBoundConfig,
};
use radial_attention::attention::synth_decay_instance;
use radial_attention::blocksparse::{deserialize, render_pgm, serialize};
use radial_attention::mask::DEFAULT_MATERIALIZATION_CAP;
use radial_attention::oracle::{radial_count, radial_mask_matches};
use radial_attention::{
    attention_flops, blockify, count_kept, dense_attention, masked_attention, materialize_mask, sparsity,
    AttentionInstance, BlockLayout, DecayParams, Error, GridShape, PatternKind, PatternSpec,
};

use crate::args::{
    usage, Axis, BenchArgs, CompareArgs, CurvesArgs, DecayArgs, FitArgs, MaskArgs, StatsArgs, VerifyArgs,
};
use crate::output::{json, table};
use crate::{Failure, Outcome};

/// Largest grid for commands that hold a dense `n x n` logit matrix.
const MAX_SYNTHETIC_TOKENS: usize = 4096;

fn write_file(path: &Path, bytes: &[u8]) -> Outcome {
    fs::write(path, bytes).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

#[derive(Serialize)]
struct MaskReport {
    f: usize,
    s: usize,
    #[serde(rename = "B")]
    block: usize,
    pattern: String,
    kept_blocks: u64,
    sparsity: f64,
}

pub fn mask(args: MaskArgs, pretty: bool) -> Outcome {
    let (shape, block) = args.grid.resolve()?;
    let pattern = args.pattern.resolve()?;
    let layout = blockify(&shape, &pattern, block)?;
    // render before writing anything so an oversized image leaves no files behind
    let image = args.pgm.as_ref().map(|_| render_pgm(&layout)).transpose()?;
    write_file(&args.out, &serialize(&layout))?;
    if let (Some(path), Some(image)) = (&args.pgm, image) {
        write_file(path, &image)?;
    }
    json(
        &MaskReport {
            f: shape.frames(),
            s: shape.tokens_per_frame(),
            block,
            pattern: pattern.to_string(),
            kept_blocks: layout.kept_blocks(),
            sparsity: sparsity(&layout),
        },
        pretty,
    )
}

#[derive(Serialize)]
struct StatsReport {
    f: usize,
    s: usize,
    #[serde(rename = "B")]
    block: usize,
    kept_blocks: u64,
    sparsity: f64,
    dense_flops: u128,
    sparse_flops: u128,
    reduction: f64,
}

fn read_layout(path: &Path) -> Result<BlockLayout, Failure> {
    let bytes = fs::read(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    deserialize(&bytes).map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub fn stats(args: StatsArgs, pretty: bool) -> Outcome {
    let layout = match &args.mask {
        Some(path) => read_layout(path)?,
        None => {
            let (shape, block) = args.grid.resolve()?;
            blockify(&shape, &args.pattern.resolve()?, block)?
        }
    };
    let flops = attention_flops(&layout, args.head_dim, args.heads)?;
    json(
        &StatsReport {
            f: layout.shape().frames(),
            s: layout.shape().tokens_per_frame(),
            block: layout.block_size(),
            kept_blocks: layout.kept_blocks(),
            sparsity: sparsity(&layout),
            dense_flops: flops.dense_flops,
            sparse_flops: flops.sparse_flops,
            reduction: flops.reduction_ratio,
        },
        pretty,
    )
}

#[derive(Serialize)]
struct ComplexitySection {
    f: usize,
    s: usize,
    actual_zeros: u128,
    region_total: u128,
    region_limit: u128,
    pass_region: bool,
    headline_bound: f64,
    headline_limit: u128,
    /// `null` when f < 2s.
    pass_headline: Option<bool>,
    pass: bool,
}

#[derive(Serialize)]
struct ErrorBoundSection {
    f: usize,
    s: usize,
    trials: usize,
    seed: u64,
    violations_worst_case: usize,
    violations_random: usize,
    max_ratio: f64,
    mean_ratio_worst_case: f64,
    mean_ratio_random: f64,
    max_discrepancy: f64,
    pass: bool,
}

#[derive(Serialize)]
struct OracleSection {
    max_frames: usize,
    max_tokens: usize,
    configurations: usize,
    mismatches: Vec<String>,
    pass: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    pass: bool,
    complexity: Option<ComplexitySection>,
    error_bound: Option<ErrorBoundSection>,
    oracle: Option<OracleSection>,
}

fn verify_shape(args: &VerifyArgs, default: (usize, usize)) -> Result<GridShape, Failure> {
    Ok(GridShape::new(args.frames.unwrap_or(default.0), args.tokens.unwrap_or(default.1))?)
}

fn oracle_sweep(max_frames: usize, max_tokens: usize) -> Result<OracleSection, Failure> {
    if max_frames == 0 || max_tokens == 0 {
        return Err(usage("--max-frames and --max-tokens must be at least 1"));
    }
    let mut mismatches = Vec::new();
    let mut configurations = 0;
    for f in 1..=max_frames {
        for s in 1..=max_tokens {
            for sink in [false, true] {
                let shape = GridShape::new(f, s)?;
                let spec = PatternSpec::radial().with_sink(sink);
                let mask = materialize_mask(&shape, &spec)?;
                let brute = radial_count(f, s, sink);
                if count_kept(&shape, &spec)? != brute || mask.kept_count() != brute || !radial_mask_matches(&mask, sink)
                {
                    mismatches.push(format!("f={f},s={s},sink={sink}"));
                }
                configurations += 1;
            }
        }
    }
    Ok(OracleSection {
        max_frames,
        max_tokens,
        configurations,
        pass: mismatches.is_empty(),
        mismatches,
    })
}

pub fn verify(args: VerifyArgs, pretty: bool) -> Outcome {
    let all = !(args.complexity || args.error_bound || args.oracle);
    let complexity = if all || args.complexity {
        let shape = verify_shape(&args, (512, 64))?;
        let r = verify_complexity(&shape)?;
        Some(ComplexitySection {
            f: shape.frames(),
            s: shape.tokens_per_frame(),
            actual_zeros: r.actual_zeros,
            region_total: r.bounds.total,
            region_limit: r.region_limit,
            pass_region: r.pass_region,
            headline_bound: r.bounds.headline,
            headline_limit: r.headline_limit,
            pass_headline: r.pass_headline,
            pass: r.passed(),
        })
    } else {
        None
    };
    let error_bound = if all || args.error_bound {
        let shape = verify_shape(&args, (64, 16))?;
        let mut cfg = ErrorBoundConfig::new(shape, args.trials, args.seed);
        cfg.alpha_range = (args.alpha_min, args.alpha_max);
        cfg.beta_range = (args.beta_min, args.beta_max);
        cfg.c_rel = args.c_rel;
        let r = verify_error_bound(&cfg)?;
        Some(ErrorBoundSection {
            f: shape.frames(),
            s: shape.tokens_per_frame(),
            trials: r.trials,
            seed: args.seed,
            violations_worst_case: r.worst_case.violations,
            violations_random: r.random.violations,
            max_ratio: r.worst_case.max_ratio.max(r.random.max_ratio),
            mean_ratio_worst_case: r.worst_case.mean_ratio,
            mean_ratio_random: r.random.mean_ratio,
            max_discrepancy: r.max_discrepancy,
            pass: r.all_within_bound() && r.max_discrepancy <= 1e-10,
        })
    } else {
        None
    };
    let oracle = if all || args.oracle {
        Some(oracle_sweep(args.max_frames, args.max_tokens)?)
    } else {
        None
    };
    let pass = complexity.as_ref().is_none_or(|c| c.pass)
        && error_bound.as_ref().is_none_or(|e| e.pass)
        && oracle.as_ref().is_none_or(|o| o.pass);
    json(
        &VerifyReport {
            pass,
            complexity,
            error_bound,
            oracle,
        },
        pretty,
    )?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn synthetic_instance(shape: &GridShape, decay: &DecayArgs, head_dim: usize) -> Result<AttentionInstance, Failure> {
    if shape.total_tokens() > MAX_SYNTHETIC_TOKENS {
        return Err(usage(format!(
            "synthetic instances hold an n x n logit matrix; {} tokens exceeds the limit of {MAX_SYNTHETIC_TOKENS}",
            shape.total_tokens()
        )));
    }
    let params = DecayParams::new(decay.alpha, decay.beta, decay.c_rel)?;
    Ok(synth_decay_instance(shape, &params, decay.mode.into(), head_dim, decay.seed)?)
}

pub fn compare(args: CompareArgs, pretty: bool) -> Outcome {
    let (shape, block) = args.grid.resolve()?;
    let mut patterns = Vec::with_capacity(args.patterns.len());
    for name in &args.patterns {
        let kind: PatternKind = name.trim().parse()?;
        let spec = PatternSpec::with_default_windows(kind);
        patterns.push(if matches!(kind, PatternKind::Radial | PatternKind::Dense) {
            spec
        } else {
            spec.with_sink(!args.no_baseline_sink)
        });
    }
    if patterns.is_empty() {
        return Err(usage("--patterns is empty"));
    }
    let inst = synthetic_instance(&shape, &args.decay, args.head_dim)?;
    let rows = compare_patterns(&inst, &patterns, block)?;
    for row in &rows {
        let kind = row.matched.pattern.kind;
        if !row.matched.tuned && kind != PatternKind::Radial {
            eprintln!("note: `{kind}` has no tunable window and runs without budget matching");
        }
    }
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.matched.pattern.to_string(),
                r.matched.kept_blocks.to_string(),
                r.sparsity.to_string(),
                r.error.mean_l1.to_string(),
                r.error.max_l1.to_string(),
                r.error.output_mse.to_string(),
            ]
        })
        .collect();
    table(
        &["pattern", "kept_blocks", "sparsity", "mean_l1", "max_l1", "output_mse"],
        &cells,
        pretty,
    )
}

pub fn curves(args: CurvesArgs, pretty: bool) -> Outcome {
    let shape = GridShape::new(args.frames, args.tokens)?;
    let inst = synthetic_instance(&shape, &args.decay, 1)?;
    let c = decay_curves_of(&inst)?;
    let curve = match args.axis {
        Axis::Temporal => c.temporal,
        Axis::Spatial => c.spatial,
    };
    let cells: Vec<Vec<String>> = curve.iter().map(|(x, y)| vec![x.to_string(), y.to_string()]).collect();
    table(&["x", "y"], &cells, pretty)
}

#[derive(Serialize)]
struct FitReport {
    a: f64,
    b: f64,
    r2: f64,
    r2_linear: f64,
}

/// `(line, x, y)` triples from x,y CSV. A first line that does not parse as
/// numbers is taken as a header.
fn read_points(text: &str) -> Result<Vec<(u64, f64, f64)>, Failure> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| usage(format!("reading CSV: {e}")))?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 2 {
            return Err(usage(format!("line {line}: expected 2 fields (x,y), found {}", record.len())));
        }
        let x = record[0].parse::<f64>();
        let y = record[1].parse::<f64>();
        match (x, y) {
            (Ok(x), Ok(y)) => points.push((line, x, y)),
            _ if i == 0 => {}
            _ => return Err(usage(format!("line {line}: `{}` is not a pair of numbers", record.iter().collect::<Vec<_>>().join(",")))),
        }
    }
    Ok(points)
}

pub fn fit(args: FitArgs, pretty: bool) -> Outcome {
    let text = if args.input.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| usage(format!("reading standard input: {e}")))?;
        s
    } else {
        fs::read_to_string(&args.input).map_err(|e| usage(format!("cannot read {}: {e}", args.input.display())))?
    };
    let points = read_points(&text)?;
    let xy: Vec<(f64, f64)> = points.iter().map(|&(_, x, y)| (x, y)).collect();
    let f = fit_exponential(&xy).map_err(|e| match e {
        Error::BadSample { row, reason } => usage(format!("line {}: {reason}", points[row].0)),
        other => other.into(),
    })?;
    json(
        &FitReport {
            a: f.a,
            b: f.b,
            r2: f.r2,
            r2_linear: f.r2_linear,
        },
        pretty,
    )
}

#[derive(Serialize)]
struct BenchReport {
    dense_seconds: f64,
    masked_seconds: f64,
    speedup: f64,
    flops_reduction: f64,
}

fn fastest<T>(repeats: usize, mut run: impl FnMut() -> T) -> (f64, T) {
    let mut best = f64::INFINITY;
    let mut last = None;
    for _ in 0..repeats {
        let start = Instant::now();
        let out = run();
        best = best.min(start.elapsed().as_secs_f64());
        last = Some(out);
    }
    (best, last.expect("at least one repeat"))
}

pub fn bench(args: BenchArgs, pretty: bool) -> Outcome {
    let (shape, block) = args.grid.resolve()?;
    if shape.total_tokens() > DEFAULT_MATERIALIZATION_CAP {
        return Err(Error::MaterializationCap {
            tokens: shape.total_tokens(),
            cap: DEFAULT_MATERIALIZATION_CAP,
            bytes: (shape.total_tokens() as u128).pow(2) * 8,
        }
        .into());
    }
    if args.repeats == 0 {
        return Err(usage("--repeats must be at least 1"));
    }
    let pattern = args.pattern.resolve()?;
    let layout = blockify(&shape, &pattern, block)?;
    let inst = AttentionInstance::random(shape, args.head_dim, args.seed)?;
    let (dense_seconds, _) = fastest(args.repeats, || dense_attention(&inst));
    let (masked_seconds, masked) = fastest(args.repeats, || masked_attention(&inst, &layout));
    masked?;
    let flops = attention_flops(&layout, args.head_dim, 1)?;
    json(
        &BenchReport {
            dense_seconds,
            masked_seconds,
            speedup: dense_seconds / masked_seconds,
            flops_reduction: flops.reduction_ratio,
        },
        pretty,
    )
}
