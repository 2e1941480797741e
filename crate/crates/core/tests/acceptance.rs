//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;

use pointmut::analysis::stats::{mean, spearman, variance, welch_greater};
use pointmut::analysis::{categorical_jacobian, default_t_grid, log_grid, selection_score};
use pointmut::estimation::{generate_dataset, nll_factorized_with_gradient, nll_full_with_gradient, Estimator};
use pointmut::generators::{
    build_state_dependent_truth, halpern_bruno_generator, link, tabular_index, FactorizedModel, FixationParams,
    Model, SiteRateMatrix,
};
use pointmut::harness::{
    epistasis_truth, run_epistasis_sweep, run_sampling_comparison, write_csv, SamplingConfig, SweepConfig, SweepRow,
};
use pointmut::kernels::{
    expm_entry_gradient, expm_generator, expm_taylor, factorized_distribution, frechet_derivative, transition_matrix,
    ExpmConfig, TransitionDistribution,
};
use pointmut::rng;
use pointmut::samplers::{
    exact_guided_distribution, simulate, simulate_tree, tilt_factors, EdgeSampler, FitnessOracle, GuidanceConfig,
    GuidanceMode, Guide, LinearOracle, TabularOracle, Tree, DEFAULT_MAX_JUMPS,
};
use pointmut::state_space::StateSpace;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn codons() -> StateSpace {
    StateSpace::codons()
}

/// Least-squares slope of ln y on ln x.
fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (mean(&lx), mean(&ly));
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}

fn c1_local_bound() -> Check {
    let space = codons();
    let cfg = ExpmConfig::default();
    let grid = log_grid(1e-3, 1.0, 10).map_err(err)?;
    let mut violations = 0;
    let mut min_slope = f64::INFINITY;
    for &eps in &[0.0, 0.25, 0.5, 0.75, 1.0] {
        for truth_id in 0..20 {
            let q = epistasis_truth(&space, 1000, truth_id, eps).map_err(err)?;
            let model = FactorizedModel::matched_to_truth(&q).map_err(err)?;
            let lambda = q.max_exit_rate();
            let mut worst = Vec::with_capacity(grid.len());
            for &t in &grid {
                let p = transition_matrix(&q, t, &cfg).map_err(err)?;
                let mut w: f64 = 0.0;
                for (x, seq) in space.sequences().enumerate() {
                    let exact = TransitionDistribution::new(space.clone(), p.row(x).iter().copied().collect())
                        .map_err(err)?;
                    let approx = factorized_distribution(&model, &seq, t, &cfg).map_err(err)?;
                    let l1 = exact.l1_distance(&approx).map_err(err)?;
                    if l1 > (lambda * t).powi(2) {
                        violations += 1;
                    }
                    w = w.max(l1);
                }
                worst.push(w);
            }
            // Without epistasis the error is round-off and carries no slope.
            if eps > 0.0 {
                min_slope = min_slope.min(loglog_slope(&grid[..4], &worst[..4]));
            }
        }
    }
    verdict(
        violations == 0 && min_slope >= 1.7,
        format!("violations={violations} min_small_t_slope={min_slope:.3}"),
    )
}

fn c2_gillespie_exact() -> Check {
    let space = codons();
    let cfg = ExpmConfig::default();
    let q = epistasis_truth(&space, 2000, 0, 1.0).map_err(err)?;
    let model = FactorizedModel::matched_to_truth(&q).map_err(err)?;
    let x = space.parse("ACG").map_err(err)?;
    let xi = space.state_index(&x).map_err(err)?;
    let n = 200_000;
    let mut worst: f64 = 0.0;
    for (k, &t) in [0.1, 1.0].iter().enumerate() {
        let p = transition_matrix(&q, t, &cfg).map_err(err)?;
        let oracle = TransitionDistribution::new(space.clone(), p.row(xi).iter().copied().collect()).map_err(err)?;
        let mut ends = Vec::with_capacity(n);
        for i in 0..n {
            let mut r = rng::stream(2000 + k as u64, i as u64);
            let (y, _) = simulate(&model, None, &x, t, DEFAULT_MAX_JUMPS, &mut r).map_err(err)?;
            ends.push(space.state_index(&y).map_err(err)?);
        }
        let empirical = TransitionDistribution::empirical(space.clone(), ends).map_err(err)?;
        worst = worst.max(empirical.total_variation(&oracle).map_err(err)?);
    }
    verdict(worst < 0.01, format!("max_tv={worst:.5} samples={n}"))
}

fn random_generator<R: Rng>(n: usize, r: &mut R) -> DMatrix<f64> {
    SiteRateMatrix::random_uniform(n, r).matrix().clone()
}

fn c3_kronecker() -> Check {
    let cfg = ExpmConfig::default();
    let mut r = rng::seeded(3000);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (na, nb) = (r.random_range(2..=4), r.random_range(2..=16));
        let a = random_generator(na, &mut r);
        let b = random_generator(nb, &mut r);
        let t = r.random_range(0.05..2.0);
        let sum = a.kronecker(&DMatrix::identity(nb, nb)) + DMatrix::identity(na, na).kronecker(&b);
        let lhs = expm_generator(&sum, t, &cfg).map_err(err)?;
        let rhs = expm_generator(&a, t, &cfg).map_err(err)?.kronecker(&expm_generator(&b, t, &cfg).map_err(err)?);
        worst = worst.max((lhs - rhs).amax());
    }
    verdict(worst <= 1e-10, format!("pairs=50 max_abs={worst:.3e}"))
}

/// max|analytic − fd| / max|fd| over the checked coordinates.
fn relative_gap(analytic: &[f64], fd: &[f64]) -> f64 {
    let gap = analytic.iter().zip(fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = fd.iter().map(|v| v.abs()).fold(0.0, f64::max);
    gap / scale
}

fn c4_gradients() -> Check {
    let cfg = ExpmConfig::default();
    let h = 1e-5;
    let mut r = rng::seeded(4000);
    let mut gaps = Vec::new();

    // Fréchet derivative against a directional difference of exp.
    let a = DMatrix::from_fn(6, 6, |_, _| r.random_range(-1.0..1.0));
    let e = DMatrix::from_fn(6, 6, |_, _| r.random_range(-1.0..1.0));
    let l = frechet_derivative(&a, &e, &cfg).map_err(err)?;
    let fd = (expm_taylor(&(&a + &e * h), &cfg).map_err(err)? - expm_taylor(&(&a - &e * h), &cfg).map_err(err)?)
        / (2.0 * h);
    gaps.push(("frechet", relative_gap(l.as_slice(), fd.as_slice())));

    // Entry gradient of exp(tQ)_xy in every entry of Q.
    let q = random_generator(5, &mut r);
    let (t, x, y) = (0.7, 1, 3);
    let g = expm_entry_gradient(&q, t, x, y, &cfg).map_err(err)?;
    let mut fd = DMatrix::zeros(5, 5);
    for u in 0..5 {
        for v in 0..5 {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[(u, v)] += h;
            qm[(u, v)] -= h;
            let p = expm_taylor(&(qp * t), &cfg).map_err(err)?[(x, y)];
            let m = expm_taylor(&(qm * t), &cfg).map_err(err)?[(x, y)];
            fd[(u, v)] = (p - m) / (2.0 * h);
        }
    }
    gaps.push(("entry", relative_gap(g.as_slice(), fd.as_slice())));

    let space = codons();
    let truth = epistasis_truth(&space, 4000, 0, 0.5).map_err(err)?;
    let data = generate_dataset(&truth, 400, 0.5, 8, 4001, &cfg).map_err(err)?;
    let tol = 1e-13;

    let phi: Vec<f64> = truth.all_neighbor_rates().iter().map(|&v| link::softplus_inv(v)).collect();
    let full = nll_full_with_gradient(&phi, &data, tol).map_err(err)?.gradient.expect("gradient requested");
    let coords: Vec<usize> = (0..24).map(|_| r.random_range(0..phi.len())).collect();
    let fd: Vec<f64> = coords
        .iter()
        .map(|&i| {
            let mut p = phi.clone();
            let mut m = phi.clone();
            p[i] += h;
            m[i] -= h;
            let lp = nll_full_with_gradient(&p, &data, tol)?.loss;
            let lm = nll_full_with_gradient(&m, &data, tol)?.loss;
            Ok((lp - lm) / (2.0 * h))
        })
        .collect::<pointmut::Result<_>>()
        .map_err(err)?;
    let an: Vec<f64> = coords.iter().map(|&i| full[i]).collect();
    gaps.push(("nll_full", relative_gap(&an, &fd)));

    let model = FactorizedModel::random_tabular(space.clone(), 0.5, &mut r).map_err(err)?;
    let theta = model.theta().expect("tabular").to_vec();
    for (name, delta) in [("nll_factorized", None), ("nll_factorized_snr", Some(0.0))] {
        let grad = nll_factorized_with_gradient(&theta, &data, delta, tol)
            .map_err(err)?
            .gradient
            .expect("gradient requested");
        // Only coordinates touched by some record carry signal.
        let coords: Vec<usize> = data
            .records()
            .iter()
            .take(24)
            .map(|rec| {
                let xi = space.state_index(&rec.parent).expect("valid");
                let site = r.random_range(0..space.length());
                let from = rec.parent.0[site];
                let to = (from + r.random_range(1..4u8)) % 4;
                tabular_index(&space, xi, site, from, to)
            })
            .collect();
        let fd: Vec<f64> = coords
            .iter()
            .map(|&i| {
                let mut p = theta.clone();
                let mut m = theta.clone();
                p[i] += h;
                m[i] -= h;
                let lp = nll_factorized_with_gradient(&p, &data, delta, tol)?.loss;
                let lm = nll_factorized_with_gradient(&m, &data, delta, tol)?.loss;
                Ok((lp - lm) / (2.0 * h))
            })
            .collect::<pointmut::Result<_>>()
            .map_err(err)?;
        let an: Vec<f64> = coords.iter().map(|&i| grad[i]).collect();
        gaps.push((name, relative_gap(&an, &fd)));
    }

    let ok = gaps.iter().all(|(_, g)| *g <= 1e-4);
    let detail = gaps.iter().map(|(n, g)| format!("{n}={g:.2e}")).collect::<Vec<_>>().join(" ");
    verdict(ok, detail)
}

fn c5_sampling_curves() -> Check {
    let cfg = SamplingConfig {
        sweep: SweepConfig {
            epsilon_levels: vec![0.0, 1.0],
            samples: 100_000,
            ..SweepConfig::default()
        },
        grid: default_t_grid(),
    };
    let curves = run_sampling_comparison(&cfg).map_err(err)?;
    let (eps0, eps1) = (&curves[0], &curves[1]);

    let late: Vec<_> = eps1.points.iter().filter(|p| p.t >= 0.1).collect();
    let gillespie_wins = late.iter().filter(|p| p.kl_gillespie < p.kl_matexp).count();

    let small: Vec<_> = eps1.points.iter().filter(|p| p.t >= 0.01 - 1e-12 && p.t <= 0.1 + 1e-12).collect();
    let ts: Vec<f64> = small.iter().map(|p| p.t).collect();
    let kls: Vec<f64> = small.iter().map(|p| p.kl_matexp).collect();
    let slope = loglog_slope(&ts, &kls);

    let peak = eps0.points.iter().map(|p| p.kl_gillespie.max(p.kl_matexp)).fold(0.0, f64::max);
    let gap = eps0.points.iter().map(|p| (p.kl_gillespie - p.kl_matexp).abs()).fold(0.0, f64::max);

    verdict(
        gillespie_wins == late.len() && (slope - 2.0).abs() <= 0.3 && gap <= 0.05 * peak,
        format!(
            "eps1: gillespie<matexp at {gillespie_wins}/{} points t>=0.1, matexp slope={slope:.3}; \
             eps0: max gap/peak={:.4}",
            late.len(),
            gap / peak
        ),
    )
}

fn mean_error(rows: &[SweepRow], eps: f64, est: Estimator) -> (f64, f64) {
    let errs: Vec<f64> = rows
        .iter()
        .filter(|r| r.epsilon == eps && r.estimator == est)
        .filter_map(|r| r.error)
        .collect();
    (mean(&errs), variance(&errs).sqrt())
}

fn c6_snr_weighting() -> Check {
    let cfg = SweepConfig {
        epsilon_levels: vec![0.0, 1.0],
        replicates: 3,
        samples: 100_000,
        estimators: vec![Estimator::Factorized, Estimator::FactorizedSnr],
        snr_delta: Some(0.0),
        ..SweepConfig::default()
    };
    let rows = run_epistasis_sweep(&cfg).map_err(err)?;
    if let Some(bad) = rows.iter().find(|r| r.error.is_none()) {
        return Err(format!("cell failed: {:?}", bad.reason));
    }
    let (f1, _) = mean_error(&rows, 1.0, Estimator::Factorized);
    let (s1, _) = mean_error(&rows, 1.0, Estimator::FactorizedSnr);
    let (f0, sd_f0) = mean_error(&rows, 0.0, Estimator::Factorized);
    let (s0, sd_s0) = mean_error(&rows, 0.0, Estimator::FactorizedSnr);
    let sd = sd_f0.max(sd_s0);
    verdict(
        s1 < f1 && (s0 - f0).abs() <= sd,
        format!("eps1: snr={s1:.4} factorized={f1:.4}; eps0: snr={s0:.4} factorized={f0:.4} sd={sd:.4}"),
    )
}

fn c7_guidance() -> Check {
    let space = codons();
    let cfg = ExpmConfig::default();
    let q = epistasis_truth(&space, 7000, 0, 1.0).map_err(err)?;
    let model = FactorizedModel::matched_to_truth(&q).map_err(err)?;
    let x = space.parse("GAT").map_err(err)?;
    let mut r = rng::seeded(7000);
    let mut notes = Vec::new();
    let mut ok = true;

    // (a) γ = 0 consumes the same random numbers as unguided sampling.
    let linear = LinearOracle::random(space.clone(), 1.0, 0.5, &mut r).map_err(err)?;
    let off = GuidanceConfig::new(0.0, GuidanceMode::Exact).map_err(err)?;
    let guide0 = Guide {
        oracle: &linear,
        config: &off,
    };
    let identical = (0..200u64).all(|s| {
        let a = simulate(&model, None, &x, 2.0, DEFAULT_MAX_JUMPS, &mut rng::stream(7001, s));
        let b = simulate(&model, Some(guide0), &x, 2.0, DEFAULT_MAX_JUMPS, &mut rng::stream(7001, s));
        matches!((a, b), (Ok(a), Ok(b)) if a == b)
    });
    ok &= identical;
    notes.push(format!("a:identical={identical}"));

    // (b) For a linear mean the gradient step is exact.
    let exact = GuidanceConfig::new(2.0, GuidanceMode::Exact).map_err(err)?;
    let tag = GuidanceConfig::new(2.0, GuidanceMode::Tag).map_err(err)?;
    let (mut fe, mut ft) = (Vec::new(), Vec::new());
    let mut gap: f64 = 0.0;
    for (xi, seq) in space.sequences().enumerate() {
        tilt_factors(&linear, &exact, &seq, &mut fe).map_err(err)?;
        tilt_factors(&linear, &tag, &seq, &mut ft).map_err(err)?;
        for ((rate, a), b) in q.neighbor_rates(xi).iter().zip(&fe).zip(&ft) {
            gap = gap.max((rate * a - rate * b).abs());
        }
    }
    ok &= gap <= 1e-12;
    notes.push(format!("b:max_rate_gap={gap:.1e}"));

    // (c) Guided Gillespie against the tilted generator's kernel.
    let tabular = TabularOracle::random(space.clone(), 1.0, 0.5, &mut r).map_err(err)?;
    let guide2 = Guide {
        oracle: &tabular,
        config: &exact,
    };
    let target = exact_guided_distribution(&model.assemble_full().map_err(err)?, &tabular, &exact, &x, 0.5, &cfg)
        .map_err(err)?;
    let n = 200_000;
    let ends = (0..n)
        .map(|i| {
            let (y, _) = simulate(&model, Some(guide2), &x, 0.5, DEFAULT_MAX_JUMPS, &mut rng::stream(7002, i))?;
            space.state_index(&y)
        })
        .collect::<pointmut::Result<Vec<_>>>()
        .map_err(err)?;
    let tv = TransitionDistribution::empirical(space.clone(), ends)
        .and_then(|e| e.total_variation(&target))
        .map_err(err)?;
    ok &= tv < 0.015;
    notes.push(format!("c:tv={tv:.5}"));

    // (d) Strong guidance raises the oracle mean of independent leaves.
    let leaves = 500;
    let mut parents = vec![None];
    parents.extend(std::iter::repeat_n(Some(0), leaves));
    let mut lengths = vec![0.0];
    lengths.extend(std::iter::repeat_n(0.5, leaves));
    let star = Tree::from_parents(vec![None; leaves + 1], &parents, &lengths).map_err(err)?;
    let strong = GuidanceConfig::new(5.0, GuidanceMode::Exact).map_err(err)?;
    let leaf_means = |sampler| -> pointmut::Result<Vec<f64>> {
        let seqs = simulate_tree(&model, &x, &star, 7003, sampler)?;
        seqs[1..].iter().map(|s| tabular.mean(s)).collect()
    };
    let guided = leaf_means(EdgeSampler::Gillespie(Some(Guide {
        oracle: &tabular,
        config: &strong,
    })))
    .map_err(err)?;
    let unguided = leaf_means(EdgeSampler::Gillespie(None)).map_err(err)?;
    let (_, p) = welch_greater(&guided, &unguided).map_err(err)?;
    let shifted = mean(&guided) > mean(&unguided) && p < 0.01;
    ok &= shifted;
    notes.push(format!(
        "d:guided_mean={:.4} unguided_mean={:.4} p={p:.2e}",
        mean(&guided),
        mean(&unguided)
    ));

    verdict(ok, notes.join(" "))
}

fn c8_selection_score() -> Check {
    let space = codons();
    let cfg = ExpmConfig::default();
    let mu = build_state_dependent_truth(&space, 8000).map_err(err)?;
    let mut r = rng::seeded(8001);
    let fitness: Vec<f64> = (0..space.num_states()).map(|_| r.random_range(-0.5..0.5)).collect();
    let params = FixationParams::neutral_scaled(10.0).map_err(err)?;
    let q = halpern_bruno_generator(&mu, &fitness, &params).map_err(err)?;
    let (model, baseline) = (Model::Full(q), Model::Full(mu));
    let (mut scores, mut s) = (Vec::new(), Vec::new());
    for (xi, x) in space.sequences().enumerate() {
        for nb in space.hamming_neighbors(&x).map_err(err)? {
            let yi = space.state_index(&nb.sequence).map_err(err)?;
            scores.push(selection_score(&model, &baseline, &x, &nb.sequence, 0.01, &cfg).map_err(err)?);
            s.push(fitness[yi] - fitness[xi]);
        }
    }
    let rho = spearman(&scores, &s).map_err(err)?;
    verdict(
        scores.len() == 576 && rho >= 0.95,
        format!("transitions={} spearman={rho:.4}", scores.len()),
    )
}

/// Sensitivity recomputed entry by entry straight from θ.
fn direct_sensitivity(space: &StateSpace, theta: &[f64], x: &[u8]) -> DMatrix<f64> {
    let (l, a) = (space.length(), space.alphabet_size());
    let index = |s: &[u8]| s.iter().fold(0usize, |acc, &c| acc * a + c as usize);
    let rate = |ctx: usize, site: usize, from: usize, to: usize| {
        if from == to {
            let exit: f64 = (0..a)
                .filter(|&b| b != from)
                .map(|b| link::rate(theta[tabular_index(space, ctx, site, from as u8, b as u8)]))
                .sum();
            -exit
        } else {
            link::rate(theta[tabular_index(space, ctx, site, from as u8, to as u8)])
        }
    };
    DMatrix::from_fn(l, l, |i, j| {
        let base = index(x);
        let mut total = 0.0;
        for alt in (0..a as u8).filter(|&b| b != x[i]) {
            let mut y = x.to_vec();
            y[i] = alt;
            let pert = index(&y);
            let mut sq = 0.0;
            for from in 0..a {
                for to in 0..a {
                    sq += (rate(base, j, from, to) - rate(pert, j, from, to)).powi(2);
                }
            }
            total += sq.sqrt();
        }
        total / (a - 1) as f64
    })
}

fn c9_jacobian() -> Check {
    let space = codons();
    let mut r = rng::seeded(9000);
    let mut notes = Vec::new();

    let sites = (0..3).map(|_| SiteRateMatrix::random_uniform(4, &mut r)).collect();
    let free = FactorizedModel::context_free(space.clone(), sites).map_err(err)?;
    let zero = space
        .sequences()
        .map(|x| categorical_jacobian(&free, &x).map(|j| j.sensitivity.amax()))
        .collect::<pointmut::Result<Vec<_>>>()
        .map_err(err)?
        .into_iter()
        .fold(0.0, f64::max);
    notes.push(format!("context_free_max={zero:e}"));

    // Site j reads only the symbol at position (j + 1) mod 3.
    let designed = FactorizedModel::tabular_from_fn(space.clone(), |s, site, from, to| {
        0.4 * s[(site + 1) % 3] as f64 + 0.1 * (from * 4 + to) as f64 - 1.0
    })
    .map_err(err)?;
    let mut localized = true;
    for x in space.sequences() {
        let s = categorical_jacobian(&designed, &x).map_err(err)?.sensitivity;
        for i in 0..3 {
            for j in 0..3 {
                let on = i == (j + 1) % 3;
                localized &= if on { s[(i, j)] > 0.0 } else { s[(i, j)] == 0.0 };
            }
        }
    }
    notes.push(format!("localized={localized}"));

    let random = FactorizedModel::random_tabular(space.clone(), 1.0, &mut r).map_err(err)?;
    let theta = random.theta().expect("tabular");
    let mut gap: f64 = 0.0;
    for x in space.sequences() {
        let s = categorical_jacobian(&random, &x).map_err(err)?.sensitivity;
        gap = gap.max((s - direct_sensitivity(&space, theta, x.symbols())).amax());
    }
    notes.push(format!("direct_gap={gap:.1e}"));

    verdict(zero == 0.0 && localized && gap <= 1e-12, notes.join(" "))
}

fn sweep_csv(dir: &std::path::Path, cfg: &SweepConfig) -> pointmut::Result<Vec<u8>> {
    let rows = run_epistasis_sweep(cfg)?;
    let path = dir.join("sweep.csv");
    let table = rows.iter().map(|r| {
        vec![
            r.epsilon.to_string(),
            r.replicate.to_string(),
            r.estimator.to_string(),
            r.error.map(|e| e.to_string()).unwrap_or_default(),
            r.seed.to_string(),
            r.epochs.to_string(),
        ]
    });
    write_csv(&path, "-", "error=relative_frobenius", &["epsilon", "replicate", "estimator", "error", "seed", "epochs"], table)?;
    Ok(std::fs::read(path)?)
}

fn c10_determinism() -> Check {
    let cfg = SweepConfig {
        epsilon_levels: vec![0.0, 1.0],
        replicates: 2,
        samples: 2_000,
        bins: 32,
        max_epochs: 20,
        master_seed: 10_000,
        ..SweepConfig::default()
    };
    let (a, b) = (tempfile::tempdir().map_err(err)?, tempfile::tempdir().map_err(err)?);
    let first = sweep_csv(a.path(), &cfg).map_err(err)?;
    let second = sweep_csv(b.path(), &cfg).map_err(err)?;
    verdict(first == second, format!("bytes={} identical={}", first.len(), first == second))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 local factorization bound", c1_local_bound),
        ("2 gillespie exactness", c2_gillespie_exact),
        ("3 kronecker identity", c3_kronecker),
        ("4 gradient suite", c4_gradients),
        ("5 sampling-error curves", c5_sampling_curves),
        ("6 snr weighting", c6_snr_weighting),
        ("7 guidance", c7_guidance),
        ("8 selection score", c8_selection_score),
        ("9 categorical jacobian", c9_jacobian),
        ("10 sweep determinism", c10_determinism),
    ];
    let only: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, check) in criteria {
        let id = name.split(' ').next().unwrap_or_default();
        if !only.is_empty() && !only.iter().any(|o| o == id) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} ({secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail} ({secs:.1}s)");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
