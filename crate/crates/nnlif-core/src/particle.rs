//! Monte Carlo simulation of the interacting neuron system.
//!
//! Each neuron follows `dV = (-V + b0 + b N̂(t - D)) dt + sqrt(2a) dW` and is
//! reset to `V_R` when it reaches `V_F`. `N̂` is the binned spike count per
//! neuron per unit time. Neurons are split into fixed chunks, each with its own
//! ChaCha stream, so a run depends on the seed and not on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{invalid, NnlifError, Result};
use crate::fp::InitialHistory;
use crate::grid::Grid;
use crate::model::ModelParams;

/// Neurons per RNG stream.
const CHUNK: usize = 4096;
/// Smallest ensemble accepted.
pub const MIN_NEURONS: usize = 1000;
/// Largest ensemble accepted, about 400 MB of potentials.
pub const MAX_NEURONS: usize = 50_000_000;
/// Steps must stay below this fraction of the unit leak time.
const MAX_DT: f64 = 0.1;
/// Bridge crossings with probability below `exp(-BRIDGE_CUTOFF)` are dropped.
const BRIDGE_CUTOFF: f64 = 30.0;
/// RNG stream used for the initial sample.
const INITIAL_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleOptions {
    pub n_neurons: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Rate bin width; `None` means `10 dt`. Rounded to a whole number of steps.
    pub bandwidth: Option<f64>,
    pub seed: u64,
    /// Number of histogram bins on `[v_min, V_F]`.
    pub histogram_bins: usize,
    /// Keep every spike in [`Ensemble::spike_log`].
    pub log_spikes: bool,
    /// Also count crossings between grid times, drawn with the Brownian bridge
    /// probability `exp(-(V_F - v0)(V_F - v1) / (a dt))`. Without it the rate
    /// is biased low by `O(sqrt(dt))`.
    pub bridge_crossings: bool,
}

impl Default for ParticleOptions {
    fn default() -> Self {
        Self {
            n_neurons: 10_000,
            dt: 1e-3,
            t_end: 1.0,
            bandwidth: None,
            seed: 0,
            histogram_bins: 100,
            log_spikes: true,
            bridge_crossings: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spike {
    /// End of the step in which the neuron crossed.
    pub t: f64,
    pub neuron: u32,
}

/// Rate estimate on `[t_start, t_end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBin {
    pub t_start: f64,
    pub t_end: f64,
    pub n_hat: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub potentials: Vec<f64>,
    pub t: f64,
    pub spike_log: Vec<Spike>,
    pub rate_estimate: Vec<RateBin>,
}

/// Empirical density on equal bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    /// Fraction of neurons per bin divided by the bin width.
    pub density: Vec<f64>,
    /// Neurons below the first edge.
    pub below: usize,
    pub total: usize,
}

impl Histogram {
    pub fn new(potentials: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(hi > lo) {
            return Err(invalid(format!(
                "bad histogram range [{lo}, {hi}] with {bins} bins"
            )));
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        let mut below = 0;
        for &v in potentials {
            if v < lo {
                below += 1;
            } else {
                counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
            }
        }
        let total = potentials.len();
        let edges = (0..=bins).map(|k| lo + k as f64 * width).collect();
        let density = counts
            .iter()
            .map(|&c| c as f64 / (total as f64 * width))
            .collect();
        Ok(Self {
            edges,
            density,
            below,
            total,
        })
    }

    /// `L^1` distance to the piecewise-constant density `rho` on `grid`,
    /// including the mass either side leaves outside the histogram range.
    pub fn l1_distance(&self, rho: &[f64], grid: &Grid) -> Result<f64> {
        grid.check_len(rho.len())?;
        let lo = self.edges[0];
        let hi = self.edges[self.edges.len() - 1];
        let mut dist = 0.0;
        for (k, w) in self.edges.windows(2).enumerate() {
            dist += (self.density[k] * (w[1] - w[0]) - cell_mass(rho, grid, w[0], w[1])).abs();
        }
        let pde_outside = grid.mass(rho) - cell_mass(rho, grid, lo, hi);
        Ok(dist + (self.below as f64 / self.total as f64 - pde_outside).abs())
    }

    /// Expected `L^1` noise of a histogram of this size, `sqrt(bins / n)`.
    pub fn noise_level(&self) -> f64 {
        (self.density.len() as f64 / self.total as f64).sqrt()
    }
}

/// `∫_{a}^{b} rho dv` for cell averages `rho`.
fn cell_mass(rho: &[f64], grid: &Grid, a: f64, b: f64) -> f64 {
    rho.iter()
        .enumerate()
        .map(|(i, r)| {
            let overlap = b.min(grid.edge(i + 1)) - a.max(grid.edge(i));
            r * overlap.max(0.0)
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleRun {
    pub ensemble: Ensemble,
    pub histogram: Histogram,
    /// Effective bin width after rounding to whole steps.
    pub bandwidth: f64,
    /// Most spikes in a single step, the size of the largest synchronous cascade.
    pub largest_cascade: usize,
}

impl ParticleRun {
    /// Mean of `N̂` over the bins inside `[t0, t_end]` with a batch-means
    /// standard error from `batches` contiguous groups.
    pub fn mean_rate(&self, t0: f64, batches: usize) -> Option<(f64, f64)> {
        let bins: Vec<f64> = self
            .ensemble
            .rate_estimate
            .iter()
            .filter(|b| b.t_start >= t0)
            .map(|b| b.n_hat)
            .collect();
        if batches < 2 || bins.len() < batches {
            return None;
        }
        let size = bins.len() / batches;
        let means: Vec<f64> = bins
            .chunks_exact(size)
            .take(batches)
            .map(|c| c.iter().sum::<f64>() / size as f64)
            .collect();
        let k = means.len() as f64;
        let mean = means.iter().sum::<f64>() / k;
        let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1.0);
        Some((mean, (var / k).sqrt()))
    }
}

/// Draws `n` potentials from the cell averages `rho`, uniformly within cells.
pub fn sample_density(rho: &[f64], grid: &Grid, n: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    grid.check_len(rho.len())?;
    if rho.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(invalid("density must be finite and non-negative"));
    }
    let mut cdf = Vec::with_capacity(rho.len());
    let mut acc = 0.0;
    for r in rho {
        acc += r;
        cdf.push(acc);
    }
    if !(acc > 0.0) {
        return Err(invalid("density has no mass"));
    }
    Ok((0..n)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            let i = cdf.partition_point(|&c| c <= u).min(rho.len() - 1);
            grid.edge(i) + rng.random::<f64>() * grid.dv
        })
        .collect())
}

struct Chunk {
    rng: ChaCha8Rng,
    start: usize,
}

/// Euler-Maruyama run from `rho0`, with `initial` supplying `N(t - D)` for `t < D`.
///
/// `grid` fixes `V_R`, `V_F` and the histogram range; the potentials are not
/// confined to it.
pub fn particle_simulate(
    params: &ModelParams,
    grid: &Grid,
    rho0: &[f64],
    initial: &InitialHistory,
    opts: &ParticleOptions,
) -> Result<ParticleRun> {
    params.validate()?;
    let n = opts.n_neurons;
    if n < MIN_NEURONS {
        return Err(NnlifError::Config(format!(
            "need at least {MIN_NEURONS} neurons, got {n}"
        )));
    }
    if n > MAX_NEURONS {
        return Err(NnlifError::Config(format!(
            "{n} neurons exceed the limit of {MAX_NEURONS}"
        )));
    }
    if !(opts.dt > 0.0 && opts.dt < MAX_DT) {
        return Err(invalid(format!(
            "dt must lie in (0, {MAX_DT}), got {}",
            opts.dt
        )));
    }
    if !(opts.t_end > 0.0) || !opts.t_end.is_finite() {
        return Err(invalid(format!(
            "horizon must be positive, got {}",
            opts.t_end
        )));
    }
    let bandwidth = opts.bandwidth.unwrap_or(10.0 * opts.dt);
    if !(bandwidth > opts.dt) {
        return Err(invalid(format!(
            "bandwidth {bandwidth} must exceed dt = {}",
            opts.dt
        )));
    }
    if params.d > 0.0 && initial.times[0] > -params.d + 1e-12 {
        return Err(invalid("initial history must cover [-D, 0]"));
    }

    let dt = opts.dt;
    let steps_per_bin = (bandwidth / dt).round().max(2.0) as usize;
    let h = steps_per_bin as f64 * dt;
    let steps = (opts.t_end / dt).round().max(1.0) as usize;

    let mut init_rng = ChaCha8Rng::seed_from_u64(opts.seed);
    init_rng.set_stream(INITIAL_STREAM);
    let mut potentials = sample_density(rho0, grid, n, &mut init_rng)?;
    let mut chunks: Vec<Chunk> = (0..n.div_ceil(CHUNK))
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(k as u64);
            Chunk {
                rng,
                start: k * CHUNK,
            }
        })
        .collect();

    let (v_f, v_r) = (params.v_f, params.v_r);
    let noise = (2.0 * params.a * dt).sqrt();
    let bridge = opts.bridge_crossings.then(|| 1.0 / (params.a * dt));
    let mut spike_log = Vec::new();
    let mut rate_estimate: Vec<RateBin> = Vec::new();
    let mut bin_count = 0usize;
    let mut largest_cascade = 0;

    for k in 0..steps {
        let t = k as f64 * dt;
        let mu = params.b0 + params.b * delayed_rate(t - params.d, &rate_estimate, h, initial);
        let t_next = (k + 1) as f64 * dt;

        let spikes: Vec<Vec<u32>> = potentials
            .par_chunks_mut(CHUNK)
            .zip(chunks.par_iter_mut())
            .map(|(vs, chunk)| {
                let mut fired = Vec::new();
                for (j, v) in vs.iter_mut().enumerate() {
                    let z: f64 = chunk.rng.sample(StandardNormal);
                    let before = *v;
                    *v += (mu - *v) * dt + noise * z;
                    let crossed = *v >= v_f
                        || bridge.is_some_and(|k| {
                            let exponent = (v_f - before) * (v_f - *v) * k;
                            // Skip the draw when the crossing is out of reach.
                            exponent < BRIDGE_CUTOFF
                                && chunk.rng.random::<f64>() < (-exponent).exp()
                        });
                    if crossed {
                        *v = v_r;
                        fired.push((chunk.start + j) as u32);
                    }
                }
                fired
            })
            .collect();

        let count: usize = spikes.iter().map(Vec::len).sum();
        largest_cascade = largest_cascade.max(count);
        bin_count += count;
        if opts.log_spikes {
            spike_log.extend(
                spikes
                    .into_iter()
                    .flatten()
                    .map(|neuron| Spike { t: t_next, neuron }),
            );
        }
        if (k + 1) % steps_per_bin == 0 {
            let t_start = rate_estimate.len() as f64 * h;
            let n_hat = bin_count as f64 / (n as f64 * h);
            rate_estimate.push(RateBin {
                t_start,
                t_end: t_start + h,
                n_hat,
            });
            bin_count = 0;
        }
    }

    let histogram = Histogram::new(&potentials, grid.v_min, grid.v_max, opts.histogram_bins)?;
    Ok(ParticleRun {
        ensemble: Ensemble {
            potentials,
            t: steps as f64 * dt,
            spike_log,
            rate_estimate,
        },
        histogram,
        bandwidth: h,
        largest_cascade,
    })
}

/// `N̂(s)` from the completed bins, `N0(s)` for `s < 0`. A bin still being
/// filled is not read; the last completed one stands in for it.
fn delayed_rate(s: f64, bins: &[RateBin], h: f64, initial: &InitialHistory) -> f64 {
    if s < 0.0 {
        return initial.at(s);
    }
    let j = (s / h).floor() as usize;
    match bins.get(j).or(bins.last()) {
        Some(bin) => bin.n_hat,
        None => initial.at_zero(),
    }
}
