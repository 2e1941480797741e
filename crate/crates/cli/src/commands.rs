//! Subcommand implementations.

use std::io::Write;
use std::path::Path;

use pointmut::analysis::{
    categorical_jacobian, frobenius_relative_error, log_grid, per_site_entropy, sampling_error_curves,
    selection_score,
};
use pointmut::estimation::{fit, generate_dataset, Estimator, TrainingConfig, TransitionDataset};
use pointmut::generators::{FactorizedModel, Model};
use pointmut::harness::{
    epistasis_truth, random_tree, run_epistasis_sweep, run_sampling_comparison, run_tree_fidelity, SamplingConfig,
    SweepConfig,
};
use pointmut::rng::{self, derive_seed};
use pointmut::samplers::{
    fixed_step_gillespie, jsonl, sample_factorized, simulate, simulate_tree, EdgeSampler, FitnessOracle,
    GuidanceConfig, GuidanceMode, Guide, LinearOracle, OracleFile, SigmaAt, Trajectory, Tree, DEFAULT_MAX_JUMPS,
};
use pointmut::state_space::{Sequence, StateSpace};
use pointmut::{Error, Result};

use crate::args::*;
use crate::context::{fmt, read_model, sampling_model, Context};

const BUNDLED_TREE: &str = include_str!("../data/test_tree.nwk");

pub fn run(cli: Cli) -> Result<()> {
    set_threads(cli.global.threads)?;
    let g = &cli.global;
    let name = cli.command.name();
    match &cli.command {
        Command::GenTruth(a) => gen_truth(Context::new(g, name, a)?, a),
        Command::GenData(a) => gen_data(Context::new(g, name, a)?, a),
        Command::Fit(a) => fit_cmd(Context::new(g, name, a)?, a),
        Command::EvalCurves(a) => eval_curves(Context::new(g, name, a)?, a),
        Command::Sweep(a) => sweep(Context::new(g, name, a)?, a),
        Command::Sample(a) => sample(Context::new(g, name, a)?, a, None),
        Command::Guide(a) => sample(Context::new(g, name, a)?, &a.sample, Some(&a.guidance)),
        Command::TreeSim(a) => tree_sim(Context::new(g, name, a)?, a),
        Command::Jacobian(a) => jacobian(Context::new(g, name, a)?, a),
        Command::Score(a) => score(Context::new(g, name, a)?, a),
        Command::Entropy(a) => entropy(Context::new(g, name, a)?, a),
    }
}

#[cfg(feature = "parallel")]
fn set_threads(n: usize) -> Result<()> {
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("cannot size the thread pool: {e}")))?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn set_threads(_: usize) -> Result<()> {
    Ok(())
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in [0, 1], got {eps}")));
    }
    Ok(())
}

fn gen_truth(mut ctx: Context, a: &GenTruthArgs) -> Result<()> {
    check_epsilon(a.epsilon)?;
    let q = epistasis_truth(&StateSpace::codons(), ctx.seed, a.replicate, a.epsilon)?;
    ctx.write_model("truth.json", &Model::Full(q), Some(a.epsilon))?;
    ctx.finish()
}

fn gen_data(mut ctx: Context, a: &GenDataArgs) -> Result<()> {
    let (model, file) = read_model(&a.truth)?;
    let q = model.to_full()?;
    let n = ctx.samples(a.samples);
    let mut ds = generate_dataset(&q, n, a.branch_rate, a.bins, ctx.seed, &ctx.expm)?;
    ds.header.truth_seed = file.header.seed;
    ds.header.epsilon = file.header.epsilon;
    ds.header.manifest_hash = Some(ctx.hash().to_string());
    let path = ctx.artifact("data.jsonl");
    ds.write_jsonl(std::io::BufWriter::new(std::fs::File::create(path)?))?;
    ctx.finish()
}

fn training_config(t: &TrainingArgs, seed: u64, epsilon: Option<f64>) -> Result<TrainingConfig> {
    let estimator: Estimator = t.estimator.parse()?;
    let mut cfg = TrainingConfig::new(estimator, seed);
    if let Some(lr) = t.lr {
        cfg.learning_rate = lr;
    }
    if t.patience == 0 {
        return Err(Error::InvalidArgument("patience must be at least 1".into()));
    }
    cfg.max_epochs = t.max_epochs;
    cfg.patience = t.patience;
    cfg.batch_size = t.batch_size;
    cfg.validation_fraction = t.validation_fraction;
    cfg.snr_delta = match (t.snr_delta, epsilon) {
        (Some(d), _) => d,
        (None, Some(e)) => 1.0 - e,
        (None, None) => 0.5,
    };
    if !(0.0..=1.0).contains(&cfg.snr_delta) {
        return Err(Error::InvalidArgument(format!("SNR offset must lie in [0, 1], got {}", cfg.snr_delta)));
    }
    Ok(cfg)
}

fn fit_cmd(mut ctx: Context, a: &FitArgs) -> Result<()> {
    let data = TransitionDataset::read_jsonl(std::io::BufReader::new(std::fs::File::open(&a.data)?))?;
    let mut cfg = training_config(&a.training, ctx.seed, data.header.epsilon)?;
    cfg.truncation_tol = ctx.expm.truncation_tol;
    let result = fit(&data, &cfg)?;
    ctx.write_model("model.json", &result.model, data.header.epsilon)?;
    let rows: Vec<[String; 3]> = result
        .train_loss
        .iter()
        .zip(&result.val_loss)
        .enumerate()
        .map(|(e, (t, v))| [e.to_string(), fmt(*t), fmt(*v)])
        .collect();
    ctx.csv("loss.csv", "loss=mean_nll_nats", &["epoch", "train_loss", "val_loss"], rows)?;
    println!(
        "estimator={} epochs={} best_epoch={} val_loss={}",
        cfg.estimator,
        result.epochs_run,
        result.best_epoch,
        result.val_loss[result.best_epoch]
    );
    if let Some(t) = &a.truth {
        let truth = read_model(t)?.0.to_full()?;
        println!("frobenius_relative_error={}", frobenius_relative_error(&result.model.to_full()?, &truth)?);
    }
    ctx.finish()
}

fn curve_rows(points: &[pointmut::analysis::CurvePoint]) -> Vec<[String; 3]> {
    points.iter().map(|p| [fmt(p.t), fmt(p.kl_gillespie), fmt(p.kl_matexp)]).collect()
}

const CURVE_UNITS: &str = "t=branch_length,kl=nats";

fn eval_curves(mut ctx: Context, a: &EvalCurvesArgs) -> Result<()> {
    let truth = read_model(&a.truth)?.0.to_full()?;
    let model = read_model(&a.model)?.0.to_factorized()?;
    let grid = log_grid(a.t_min, a.t_max, a.points)?;
    let points = sampling_error_curves(&truth, &model, &grid, &ctx.expm)?;
    ctx.csv("curves.csv", CURVE_UNITS, &["t", "kl_gillespie", "kl_matexp"], curve_rows(&points))?;
    ctx.finish()
}

fn sweep(mut ctx: Context, a: &SweepArgs) -> Result<()> {
    let estimators = a.estimators.iter().map(|e| e.parse()).collect::<Result<Vec<Estimator>>>()?;
    let cfg = SweepConfig {
        epsilon_levels: a.epsilons.clone(),
        replicates: a.replicates,
        samples: ctx.samples(a.samples),
        branch_rate: a.branch_rate,
        bins: a.bins,
        estimators,
        master_seed: ctx.seed,
        snr_delta: a.snr_delta,
        max_epochs: a.max_epochs,
        patience: a.patience,
        batch_size: a.batch_size,
        expm: ctx.expm,
    };
    let rows = run_epistasis_sweep(&cfg)?;
    let table: Vec<[String; 8]> = rows
        .iter()
        .map(|r| {
            [
                fmt(r.epsilon),
                r.replicate.to_string(),
                r.estimator.to_string(),
                r.error.map(fmt).unwrap_or_default(),
                r.samples.to_string(),
                r.seed.to_string(),
                r.epochs.to_string(),
                r.reason.clone().unwrap_or_default(),
            ]
        })
        .collect();
    ctx.csv(
        "sweep.csv",
        "error=relative_frobenius",
        &["epsilon", "replicate", "estimator", "error", "samples", "seed", "epochs", "reason"],
        table,
    )?;
    for r in rows.iter().filter(|r| r.error.is_none()) {
        eprintln!(
            "warning: cell epsilon={} replicate={} estimator={} failed: {}",
            r.epsilon,
            r.replicate,
            r.estimator,
            r.reason.as_deref().unwrap_or("")
        );
    }
    if a.sampling {
        let curves = run_sampling_comparison(&SamplingConfig {
            sweep: cfg,
            ..SamplingConfig::default()
        })?;
        for c in curves {
            ctx.csv(
                &format!("curves_eps{}.csv", c.epsilon),
                CURVE_UNITS,
                &["t", "kl_gillespie", "kl_matexp"],
                curve_rows(&c.points),
            )?;
        }
    }
    ctx.finish()
}

fn load_oracle(path: Option<&Path>, space: &StateSpace, seed: u64) -> Result<Box<dyn FitnessOracle>> {
    match path {
        Some(p) => {
            let file: OracleFile = serde_json::from_str(&std::fs::read_to_string(p)?)?;
            let oracle = file.into_oracle()?;
            space.ensure_same(oracle.space())?;
            Ok(oracle)
        }
        None => Ok(Box::new(LinearOracle::random(
            space.clone(),
            1.0,
            0.5,
            &mut rng::seeded(derive_seed(seed, &[u64::from(u32::MAX)])),
        )?)),
    }
}

fn guidance_config(g: &GuidanceArgs) -> Result<GuidanceConfig> {
    let mode: GuidanceMode = g.mode.parse()?;
    let cfg = GuidanceConfig::new(g.gamma, mode)?;
    Ok(if g.sigma_at_child {
        cfg.with_sigma_at(SigmaAt::Child)
    } else {
        cfg
    })
}

fn parse_mask(mask: &str, length: usize) -> Result<Vec<bool>> {
    let m: Vec<bool> = mask
        .chars()
        .map(|c| match c {
            '1' => Ok(true),
            '0' => Ok(false),
            _ => Err(Error::InvalidArgument(format!("mask must consist of 0 and 1, got {mask:?}"))),
        })
        .collect::<Result<_>>()?;
    if m.len() != length {
        return Err(Error::LengthMismatch {
            expected: length,
            found: m.len(),
        });
    }
    Ok(m)
}

fn sample(mut ctx: Context, a: &SampleArgs, guidance: Option<&GuidanceArgs>) -> Result<()> {
    let model = sampling_model(a.model.as_deref(), a.epsilon)?;
    let space = model.space().clone();
    let start = space.parse(&a.start)?;
    let oracle = guidance
        .map(|g| load_oracle(g.oracle.as_deref(), &space, ctx.seed))
        .transpose()?;
    let gcfg = guidance.map(guidance_config).transpose()?;
    let guide = match (&oracle, &gcfg) {
        (Some(o), Some(c)) => Some(Guide {
            oracle: o.as_ref(),
            config: c,
        }),
        _ => None,
    };
    let matexp = match a.method.as_str() {
        "gillespie" => false,
        "matexp" => true,
        other => return Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
    };
    if matexp && (guide.is_some() || a.fixed_steps.is_some()) {
        return Err(Error::InvalidArgument("matexp sampling supports neither guidance nor fixed steps".into()));
    }
    let mask = a.mask.as_deref().map(|m| parse_mask(m, space.length())).transpose()?;
    if mask.is_some() && a.fixed_steps.is_none() {
        return Err(Error::InvalidArgument("--mask requires --fixed-steps".into()));
    }

    let mut ends = Vec::with_capacity(a.n);
    let mut trajectories: Vec<Trajectory> = Vec::new();
    for i in 0..a.n {
        let mut r = rng::stream(ctx.seed, i as u64);
        let (end, jumps) = if let Some(steps) = a.fixed_steps {
            (fixed_step_gillespie(&model, guide, &start, steps, mask.as_deref(), &mut r)?, steps)
        } else if matexp {
            let y = sample_factorized(&model, &start, a.t, &ctx.expm, &mut r)?;
            let d = pointmut::state_space::hamming_distance(&y, &start)?;
            (y, d)
        } else {
            let (y, traj) = simulate(&model, guide, &start, a.t, DEFAULT_MAX_JUMPS, &mut r)?;
            let n = traj.jumps.len();
            if a.trajectories {
                trajectories.push(traj);
            }
            (y, n)
        };
        ends.push((end, jumps));
    }

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for (end, _) in &ends {
        writeln!(out, "{}", space.format(end))?;
    }
    let rows: Vec<[String; 4]> = ends
        .iter()
        .enumerate()
        .map(|(i, (end, jumps))| [i.to_string(), a.start.clone(), space.format(end), jumps.to_string()])
        .collect();
    ctx.csv("samples.csv", "jumps=count", &["sample", "start", "end", "jumps"], rows)?;
    if a.trajectories && !trajectories.is_empty() {
        let path = ctx.artifact("trajectories.jsonl");
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        for (i, traj) in trajectories.iter().enumerate() {
            let header = jsonl::TrajectoryHeader {
                seed: ctx.seed,
                model_ref: a.model.as_ref().map_or_else(|| format!("truth:epsilon={}", a.epsilon), |p| p.display().to_string()),
                t: a.t,
                gamma: gcfg.map_or(0.0, |c| c.gamma),
                mode: gcfg.map_or_else(|| "none".to_string(), |c| c.mode.to_string()),
                start: format!("{}#{i}", a.start),
            };
            jsonl::write_trajectory(&mut w, &header, &space, traj)?;
        }
        w.flush()?;
    }
    ctx.finish()
}

fn tree_sim(mut ctx: Context, a: &TreeSimArgs) -> Result<()> {
    let tree = match &a.tree {
        Some(p) => Tree::parse_newick(&std::fs::read_to_string(p)?)?,
        None => Tree::parse_newick(BUNDLED_TREE)?,
    };
    let model = sampling_model(a.model.as_deref(), a.epsilon)?;
    let space = model.space().clone();
    let root = space.parse(&a.root)?;
    let oracle = if a.guided {
        Some(load_oracle(a.guidance.oracle.as_deref(), &space, ctx.seed)?)
    } else {
        None
    };
    let gcfg = guidance_config(&a.guidance)?;
    let guide = oracle.as_ref().map(|o| Guide {
        oracle: o.as_ref(),
        config: &gcfg,
    });
    let sampler = match a.method.as_str() {
        "gillespie" => EdgeSampler::Gillespie(guide),
        "matexp" if guide.is_none() => EdgeSampler::MatrixExponential(&ctx.expm),
        "matexp" => return Err(Error::InvalidArgument("guidance requires the gillespie method".into())),
        other => return Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
    };
    let mut rows = Vec::new();
    for rep in 0..a.replicates {
        let seqs = simulate_tree(&model, &root, &tree, derive_seed(ctx.seed, &[rep as u64]), sampler)?;
        for (i, node) in tree.nodes().iter().enumerate() {
            let oracle_mean = match &oracle {
                Some(o) => fmt(o.mean(&seqs[i])?),
                None => String::new(),
            };
            rows.push([
                rep.to_string(),
                i.to_string(),
                node.name.clone().unwrap_or_default(),
                fmt(tree.depth(i)),
                node.children.is_empty().to_string(),
                space.format(&seqs[i]),
                oracle_mean,
            ]);
        }
    }
    ctx.csv(
        "nodes.csv",
        "depth=branch_length",
        &["replicate", "node", "name", "depth", "is_leaf", "sequence", "oracle_mean"],
        rows,
    )?;

    if a.fidelity_trees > 0 {
        check_epsilon(a.epsilon)?;
        let truth = epistasis_truth(&space, 0, 0, a.epsilon)?;
        let mut r = rng::seeded(derive_seed(ctx.seed, &[u64::from(u32::MAX), 1]));
        let trees = (0..a.fidelity_trees)
            .map(|_| random_tree(tree.leaves().len().max(2), 0.1, &mut r))
            .collect::<Result<Vec<_>>>()?;
        let summary = run_tree_fidelity(&truth, &model, &root, &trees, ctx.seed, &ctx.expm)?;
        let closer = |c| serde_json::to_value(c).map(|v| v.as_str().unwrap_or_default().to_string());
        let rows = summary
            .rows
            .iter()
            .map(|l| {
                Ok([
                    l.tree.to_string(),
                    l.node.to_string(),
                    fmt(l.depth),
                    l.d_gillespie.to_string(),
                    l.d_matexp.to_string(),
                    closer(l.closer)?,
                    l.root_reference.to_string(),
                    l.root_gillespie.to_string(),
                    l.root_matexp.to_string(),
                ])
            })
            .collect::<Result<Vec<_>>>()?;
        ctx.csv(
            "fidelity.csv",
            "distance=hamming",
            &["tree", "node", "depth", "d_gillespie", "d_matexp", "closer", "root_reference", "root_gillespie", "root_matexp"],
            rows,
        )?;
        let opt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), fmt);
        println!(
            "gillespie_closer={} matexp_closer={} ties={} corr_gillespie={} corr_matexp={}",
            summary.frac_gillespie_closer,
            summary.frac_matexp_closer,
            summary.frac_tie,
            opt(summary.corr_gillespie),
            opt(summary.corr_matexp)
        );
    }
    ctx.finish()
}

fn jacobian(mut ctx: Context, a: &JacobianArgs) -> Result<()> {
    let model = read_model(&a.model)?.0.to_factorized()?;
    let x = model.space().parse(&a.context)?;
    let j = categorical_jacobian(&model, &x)?;
    let s = &j.sensitivity;
    let rows: Vec<[String; 3]> = (0..s.nrows())
        .flat_map(|i| (0..s.ncols()).map(move |k| [i.to_string(), k.to_string(), fmt(s[(i, k)])]))
        .collect();
    ctx.csv("jacobian.csv", "s=frobenius_rate", &["i", "j", "s_ij"], rows)?;
    ctx.finish()
}

fn score(mut ctx: Context, a: &ScoreArgs) -> Result<()> {
    let model = read_model(&a.model)?.0;
    let baseline = read_model(&a.baseline)?.0;
    let space = model.space().clone();
    let x = space.parse(&a.x)?;
    let ys: Vec<Sequence> = match &a.y {
        Some(y) => vec![space.parse(y)?],
        None => space.hamming_neighbors(&x)?.into_iter().map(|n| n.sequence).collect(),
    };
    let rows = ys
        .iter()
        .map(|y| {
            let s = selection_score(&model, &baseline, &x, y, a.t, &ctx.expm)?;
            Ok([a.x.clone(), space.format(y), fmt(a.t), fmt(s)])
        })
        .collect::<Result<Vec<_>>>()?;
    ctx.csv("scores.csv", "t=branch_length,score=nats", &["x", "y", "t", "score"], rows)?;
    ctx.finish()
}

fn entropy(mut ctx: Context, a: &EntropyArgs) -> Result<()> {
    let model: FactorizedModel = read_model(&a.model)?.0.to_factorized()?;
    let x = model.space().parse(&a.x)?;
    let mut rows = Vec::new();
    for &t in &a.t {
        for (site, h) in per_site_entropy(&model, &x, t, &ctx.expm)?.into_iter().enumerate() {
            rows.push([fmt(t), site.to_string(), fmt(h)]);
        }
    }
    ctx.csv("entropy.csv", "t=branch_length,entropy=nats", &["t", "site", "entropy"], rows)?;
    ctx.finish()
}
