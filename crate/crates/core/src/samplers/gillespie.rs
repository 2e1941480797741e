//! Exact jump-process simulation of factorized point-mutation models.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::guidance::{tilt_factors, GuidanceConfig};
use super::oracle::FitnessOracle;
use crate::error::{Error, Result};
use crate::generators::FactorizedModel;
use crate::state_space::{slot_to_mutation, Sequence, StateSpace};

/// Runaway guard on the number of jumps along one branch.
pub const DEFAULT_MAX_JUMPS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub time: f64,
    pub site: usize,
    pub from_symbol: u8,
    pub to_symbol: u8,
}

/// A start state plus the jumps taken from it, in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub start: Sequence,
    pub jumps: Vec<Jump>,
}

impl Trajectory {
    /// (time, state) pairs beginning with (0, start).
    pub fn states(&self) -> Vec<(f64, Sequence)> {
        let mut cur = self.start.clone();
        let mut out = vec![(0.0, cur.clone())];
        for j in &self.jumps {
            cur.0[j.site] = j.to_symbol;
            out.push((j.time, cur.clone()));
        }
        out
    }

    pub fn end(&self) -> Sequence {
        let mut cur = self.start.clone();
        for j in &self.jumps {
            cur.0[j.site] = j.to_symbol;
        }
        cur
    }
}

/// Guidance applied on top of the model's rates.
#[derive(Clone, Copy)]
pub struct Guide<'a> {
    pub oracle: &'a dyn FitnessOracle,
    pub config: &'a GuidanceConfig,
}

/// Rates out of `x` (in neighbor order) after optional tilting.
pub fn candidate_rates(
    model: &FactorizedModel,
    guide: Option<Guide<'_>>,
    x: &Sequence,
    rates: &mut Vec<f64>,
    tilt: &mut Vec<f64>,
) -> Result<f64> {
    let idx = model.index_for_rates(x.symbols());
    let mut exit = model.neighbor_rates_into(x.symbols(), idx, rates);
    if let Some(g) = guide {
        if g.config.gamma != 0.0 {
            tilt_factors(g.oracle, g.config, x, tilt)?;
            exit = 0.0;
            for (r, f) in rates.iter_mut().zip(tilt.iter()) {
                *r *= f;
                exit += *r;
            }
        }
    }
    if !exit.is_finite() || rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::NonFiniteRate(model.space().format(x)));
    }
    Ok(exit)
}

/// Slot chosen by scanning cumulative rates against u·total.
fn choose(rates: &[f64], total: f64, u: f64) -> usize {
    let target = u * total;
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (k, &r) in rates.iter().enumerate() {
        if r > 0.0 {
            cum += r;
            last_positive = k;
            if cum > target {
                return k;
            }
        }
    }
    last_positive
}

fn apply(space: &StateSpace, x: &mut Sequence, slot: usize) -> (usize, u8, u8) {
    let (site, to) = slot_to_mutation(space.alphabet_size(), &x.0, slot);
    let from = x.0[site];
    x.0[site] = to;
    (site, from, to)
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("branch length must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// Simulates the jump process for time `t`; guided and unguided runs share
/// this loop, so they consume the random stream identically.
pub fn simulate<R: Rng + ?Sized>(
    model: &FactorizedModel,
    guide: Option<Guide<'_>>,
    x0: &Sequence,
    t: f64,
    max_jumps: usize,
    rng: &mut R,
) -> Result<(Sequence, Trajectory)> {
    check_time(t)?;
    let space = model.space();
    space.check(x0)?;
    if let Some(g) = guide {
        space.ensure_same(g.oracle.space())?;
    }
    let mut x = x0.clone();
    let mut jumps = Vec::new();
    let (mut rates, mut tilt) = (Vec::new(), Vec::new());
    let mut now = 0.0;
    loop {
        let exit = candidate_rates(model, guide, &x, &mut rates, &mut tilt)?;
        if exit == 0.0 {
            break;
        }
        let u: f64 = rng.random();
        let tau = -(-u).ln_1p() / exit;
        if now + tau > t {
            break;
        }
        now += tau;
        if jumps.len() == max_jumps {
            return Err(Error::RunawayTrajectory {
                jumps: max_jumps,
                state: space.format(&x),
                exit_rate: exit,
            });
        }
        let slot = choose(&rates, exit, rng.random());
        let (site, from_symbol, to_symbol) = apply(space, &mut x, slot);
        jumps.push(Jump {
            time: now,
            site,
            from_symbol,
            to_symbol,
        });
    }
    Ok((
        x,
        Trajectory {
            start: x0.clone(),
            jumps,
        },
    ))
}

pub fn gillespie<R: Rng + ?Sized>(
    model: &FactorizedModel,
    x0: &Sequence,
    t: f64,
    rng: &mut R,
) -> Result<(Sequence, Trajectory)> {
    simulate(model, None, x0, t, DEFAULT_MAX_JUMPS, rng)
}

pub fn guided_gillespie<R: Rng + ?Sized>(
    model: &FactorizedModel,
    oracle: &dyn FitnessOracle,
    cfg: &GuidanceConfig,
    x0: &Sequence,
    t: f64,
    rng: &mut R,
) -> Result<(Sequence, Trajectory)> {
    simulate(model, Some(Guide { oracle, config: cfg }), x0, t, DEFAULT_MAX_JUMPS, rng)
}

/// Exactly `n_steps` jump-chain draws with no holding times. Sites outside
/// `mask` (when given) never mutate.
pub fn fixed_step_gillespie<R: Rng + ?Sized>(
    model: &FactorizedModel,
    guide: Option<Guide<'_>>,
    x0: &Sequence,
    n_steps: usize,
    mask: Option<&[bool]>,
    rng: &mut R,
) -> Result<Sequence> {
    let space = model.space();
    space.check(x0)?;
    if let Some(m) = mask {
        if m.len() != space.length() {
            return Err(Error::LengthMismatch {
                expected: space.length(),
                found: m.len(),
            });
        }
    }
    let per_site = space.alphabet_size() - 1;
    let mut x = x0.clone();
    let (mut rates, mut tilt) = (Vec::new(), Vec::new());
    for _ in 0..n_steps {
        let mut total = candidate_rates(model, guide, &x, &mut rates, &mut tilt)?;
        if let Some(m) = mask {
            for (k, r) in rates.iter_mut().enumerate() {
                if !m[k / per_site] {
                    *r = 0.0;
                }
            }
            total = rates.iter().sum();
        }
        if total <= 0.0 {
            return Err(Error::NoCandidates(space.format(&x)));
        }
        let slot = choose(&rates, total, rng.random());
        apply(space, &mut x, slot);
    }
    Ok(x)
}
