//! Antithetic Monte Carlo benchmark for two-asset spread calls.
//!
//! Work is split into batches of `batch_size` pairs. Batch `b` draws from
//! counter stream `b` under key `seed`, and batch statistics are merged in a
//! fixed pairwise tree over batch index, so estimates are bit-identical for
//! any number of worker threads.

use rayon::prelude::*;

use crate::analytic::{validate_maturity, Contract, MarketInputs};
use crate::error::{Error, Result};
use crate::normal::{norm_quantile, two_sided_z};
use crate::rng::CounterRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    /// Number of antithetic pairs `M`. Plain sampling uses `2·M` independent draws.
    pub n_pairs: u64,
    pub seed: u64,
    pub antithetic: bool,
    pub batch_size: usize,
}

impl McConfig {
    pub const DEFAULT_SEED: u64 = 20_170_601;

    pub fn new(n_pairs: u64, seed: u64) -> Self {
        McConfig {
            n_pairs,
            seed,
            ..McConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pairs == 0 {
            return Err(Error::invalid("pairs", 0.0, ">= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size", 0.0, ">= 1"));
        }
        Ok(())
    }

    /// Payoff evaluations consumed by one estimate.
    pub fn total_payoffs(&self) -> u64 {
        2 * self.n_pairs
    }
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_pairs: 100_000,
            seed: Self::DEFAULT_SEED,
            antithetic: true,
            batch_size: 16_384,
        }
    }
}

/// Independent standard normal vectors `w` and `z` of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalDraws {
    pub w: Vec<f64>,
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// Number of averaged values: pairs when antithetic, single payoffs otherwise.
    pub n_effective: u64,
}

#[inline]
fn normal_pair(rng: &CounterRng, stream: u64, index: u64) -> (f64, f64) {
    let (u1, u2) = rng.uniform_pair(stream, index);
    (norm_quantile(u1), norm_quantile(u2))
}

/// `batch_size` normal pairs from stream `stream_index` under `config.seed`.
pub fn draw_normals(config: &McConfig, stream_index: u64) -> NormalDraws {
    let rng = CounterRng::new(config.seed);
    let (w, z) = (0..config.batch_size as u64)
        .map(|i| normal_pair(&rng, stream_index, i))
        .unzip();
    NormalDraws { w, z }
}

/// `ρ·w + sqrt(1 − ρ²)·z`.
pub fn correlate(w: f64, z: f64, rho: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::invalid("rho", rho, "in [-1, 1]"));
    }
    Ok(rho * w + (1.0 - rho * rho).sqrt() * z)
}

/// Geometric Brownian motion sampled at maturity.
#[derive(Debug, Clone, Copy)]
struct Gbm {
    spot: f64,
    drift: f64,
    diffusion: f64,
}

impl Gbm {
    fn new(spot: f64, sigma: f64, r: f64, maturity: f64) -> Self {
        Gbm {
            spot,
            drift: (r - 0.5 * sigma * sigma) * maturity,
            diffusion: sigma * maturity.sqrt(),
        }
    }

    #[inline]
    fn at(&self, shock: f64) -> f64 {
        self.spot * (self.drift + self.diffusion * shock).exp()
    }
}

/// `spot·exp((r − σ²/2)·T + σ·√T·shock)`.
pub fn terminal_value(spot: f64, sigma: f64, r: f64, maturity: f64, shock: f64) -> f64 {
    Gbm::new(spot, sigma, r, maturity).at(shock)
}

/// `max(s1 − s2 − K, 0)`.
#[inline]
pub fn spread_payoff(s1: f64, s2: f64, strike: f64) -> f64 {
    (s1 - s2 - strike).max(0.0)
}

/// Count, sum and centred sum of squares of a block of values.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Moments {
    n: u64,
    sum: f64,
    m2: f64,
}

impl Moments {
    fn of(values: &[f64]) -> Self {
        let n = values.len() as u64;
        if n == 0 {
            return Moments {
                n: 0,
                sum: 0.0,
                m2: 0.0,
            };
        }
        let sum = pairwise_sum(values);
        let mean = sum / n as f64;
        let m2 = pairwise_sum_by(values, |x| (x - mean) * (x - mean));
        Moments { n, sum, m2 }
    }

    fn merge(a: Moments, b: Moments) -> Moments {
        if a.n == 0 {
            return b;
        }
        if b.n == 0 {
            return a;
        }
        let n = a.n + b.n;
        let delta = b.sum / b.n as f64 - a.sum / a.n as f64;
        Moments {
            n,
            sum: a.sum + b.sum,
            m2: a.m2 + b.m2 + delta * delta * (a.n as f64 * b.n as f64 / n as f64),
        }
    }

    /// Merges in a balanced tree over slice order.
    fn merge_tree(parts: &[Moments]) -> Moments {
        match parts.len() {
            0 => Moments::of(&[]),
            1 => parts[0],
            len => {
                let (lo, hi) = parts.split_at(len / 2);
                Moments::merge(Moments::merge_tree(lo), Moments::merge_tree(hi))
            }
        }
    }
}

const PAIRWISE_BLOCK: usize = 32;

/// Pairwise (cascade) summation with a fixed split order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    pairwise_sum_by(values, |x| x)
}

fn pairwise_sum_by(values: &[f64], f: impl Fn(f64) -> f64 + Copy) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        return values.iter().fold(0.0, |acc, &x| acc + f(x));
    }
    let (lo, hi) = values.split_at(values.len() / 2);
    pairwise_sum_by(lo, f) + pairwise_sum_by(hi, f)
}

/// Terminal prices of both assets for one scenario.
#[derive(Debug, Clone, Copy)]
struct Scenario {
    s1: f64,
    s2: f64,
}

struct Simulator {
    rng: CounterRng,
    asset1: Gbm,
    asset2: Gbm,
    rho: f64,
    rho_perp: f64,
    antithetic: bool,
}

impl Simulator {
    fn new(market: &MarketInputs, maturity: f64, config: &McConfig) -> Self {
        Simulator {
            rng: CounterRng::new(config.seed),
            asset1: Gbm::new(market.s1_0, market.sigma1, market.r, maturity),
            asset2: Gbm::new(market.s2_0, market.sigma2, market.r, maturity),
            rho: market.rho,
            rho_perp: (1.0 - market.rho * market.rho).sqrt(),
            antithetic: config.antithetic,
        }
    }

    #[inline]
    fn scenario(&self, w: f64, z: f64) -> Scenario {
        let b = self.rho * w + self.rho_perp * z;
        Scenario {
            s1: self.asset1.at(w),
            s2: self.asset2.at(b),
        }
    }

    /// Scenarios of batch `stream` holding `pairs` pairs, two per pair.
    ///
    /// Antithetic: one draw `(w, z)` and its negation `(−w, −z)`.
    /// Plain: two independent draws.
    fn batch(&self, stream: u64, pairs: usize) -> Vec<(Scenario, Scenario)> {
        (0..pairs as u64)
            .map(|i| {
                if self.antithetic {
                    let (w, z) = normal_pair(&self.rng, stream, i);
                    (self.scenario(w, z), self.scenario(-w, -z))
                } else {
                    let (w1, z1) = normal_pair(&self.rng, stream, 2 * i);
                    let (w2, z2) = normal_pair(&self.rng, stream, 2 * i + 1);
                    (self.scenario(w1, z1), self.scenario(w2, z2))
                }
            })
            .collect()
    }
}

/// Monte Carlo estimates for several strikes on the same draws.
///
/// Every strike sees identical scenarios, so the means are non-increasing in
/// strike exactly.
pub fn mc_price_strikes(
    market: &MarketInputs,
    maturity: f64,
    strikes: &[f64],
    config: &McConfig,
) -> Result<Vec<PriceEstimate>> {
    market.validate()?;
    validate_maturity(maturity)?;
    config.validate()?;
    for &k in strikes {
        Contract::new(k, maturity)?;
    }

    let sim = Simulator::new(market, maturity, config);
    let batch_size = config.batch_size as u64;
    let n_batches = config.n_pairs.div_ceil(batch_size);

    let per_batch: Vec<Vec<Moments>> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let pairs = batch_size.min(config.n_pairs - b * batch_size) as usize;
            let scenarios = sim.batch(b, pairs);
            let mut values = Vec::with_capacity(2 * pairs);
            strikes
                .iter()
                .map(|&k| {
                    values.clear();
                    if config.antithetic {
                        values.extend(scenarios.iter().map(|(up, down)| {
                            0.5 * (spread_payoff(up.s1, up.s2, k)
                                + spread_payoff(down.s1, down.s2, k))
                        }));
                    } else {
                        for (a, b) in &scenarios {
                            values.push(spread_payoff(a.s1, a.s2, k));
                            values.push(spread_payoff(b.s1, b.s2, k));
                        }
                    }
                    Moments::of(&values)
                })
                .collect()
        })
        .collect();

    let discount = (-market.r * maturity).exp();
    Ok((0..strikes.len())
        .map(|j| {
            let parts: Vec<Moments> = per_batch.iter().map(|m| m[j]).collect();
            let total = Moments::merge_tree(&parts);
            let n = total.n as f64;
            let variance = if total.n > 1 {
                total.m2 / (n - 1.0)
            } else {
                0.0
            };
            PriceEstimate {
                mean: discount * (total.sum / n),
                std_error: discount * (variance / n).sqrt(),
                n_effective: total.n,
            }
        })
        .collect())
}

/// Monte Carlo estimate of one spread call.
pub fn mc_price(
    market: &MarketInputs,
    contract: &Contract,
    config: &McConfig,
) -> Result<PriceEstimate> {
    contract.validate()?;
    let mut out = mc_price_strikes(market, contract.maturity, &[contract.strike], config)?;
    Ok(out.remove(0))
}

/// Two-sided normal confidence interval `mean ± z·std_error`.
pub fn confidence_interval(estimate: &PriceEstimate, level: f64) -> Result<(f64, f64)> {
    let z = two_sided_z(level)?;
    let half = z * estimate.std_error;
    Ok((estimate.mean - half, estimate.mean + half))
}
