//! One replication of the event loop.
//!
//! Event rules, with competing exponential clocks:
//! * job arrival at workstation `i` (rate `λ_i`): `K_i += 1`;
//! * packet arrival at store `i` (rate `γ p_i`): `B_i += 1`;
//! * store departure when `B_i > 0` (rate `w_i + δ_i`), `B_i -= 1`, then with
//!   probability `δ_i / (w_i + δ_i)` the packet leaks, otherwise it is delivered:
//!   an idle workstation wastes it, a busy one loses `min(K_i, b)` jobs with
//!   `b` drawn from the batch distribution.
//!
//! The next event is picked by scanning pairs in index order (job, packet,
//! store departure), which fixes the outcome for a given random stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::model::BatchDistribution;

use super::{SimConfig, REMOVAL_BUCKETS};

pub(super) struct Replication {
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub response_time: f64,
    pub leak_rate: Vec<f64>,
    pub idle_rate: Vec<f64>,
    pub useful_rate: Vec<f64>,
    pub job_throughput: f64,
    pub harvest_rate: f64,
    pub state_time: Vec<f64>,
    pub deep_removals: Vec<Vec<u64>>,
    pub drifting: bool,
}

pub(super) fn decode_state(mut idx: usize, base: u32, dims: usize) -> Vec<u32> {
    let base = base as usize;
    let mut digits = vec![0u32; dims];
    for d in digits.iter_mut() {
        *d = (idx % base) as u32;
        idx /= base;
    }
    digits
}

fn encode_state(k: &[u64], b: &[u64], cap: u64) -> Option<usize> {
    let base = cap as usize + 1;
    let mut idx = 0usize;
    let mut mult = 1usize;
    for &x in k.iter().chain(b) {
        if x > cap {
            return None;
        }
        idx += x as usize * mult;
        mult *= base;
    }
    Some(idx)
}

enum BatchSampler {
    /// `ln u`, for inversion of the geometric tail `P[b > s] = u^s`.
    Geometric { ln_u: f64 },
    General {
        sizes: Vec<u64>,
        cumulative: Vec<f64>,
    },
}

impl BatchSampler {
    fn new(batch: &BatchDistribution) -> Self {
        match batch {
            BatchDistribution::Geometric { u } => BatchSampler::Geometric { ln_u: u.ln() },
            BatchDistribution::General { pmf } => {
                let mut acc = 0.0;
                let cumulative = pmf
                    .iter()
                    .map(|&(_, p)| {
                        acc += p;
                        acc
                    })
                    .collect();
                BatchSampler::General {
                    sizes: pmf.iter().map(|&(s, _)| s as u64).collect(),
                    cumulative,
                }
            }
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
        match self {
            BatchSampler::Geometric { ln_u } => {
                let v: f64 = 1.0 - rng.random::<f64>();
                1 + (v.ln() / ln_u).floor() as u64
            }
            BatchSampler::General { sizes, cumulative } => {
                let v: f64 = rng.random::<f64>() * cumulative[cumulative.len() - 1];
                let i = cumulative.partition_point(|&c| c <= v).min(sizes.len() - 1);
                sizes[i]
            }
        }
    }
}

/// Time-average of a population over a window, for drift detection.
struct Window {
    start: f64,
    end: f64,
    area: f64,
}

impl Window {
    fn add(&mut self, lo: f64, hi: f64, level: f64) {
        let a = lo.max(self.start);
        let b = hi.min(self.end);
        if b > a {
            self.area += level * (b - a);
        }
    }

    fn average(&self) -> f64 {
        self.area / (self.end - self.start)
    }
}

/// Upward drift: the final tenth of the run holds more than twice the
/// population of the first tenth after warmup (plus one, for near-empty systems).
fn drifted(early: &Window, late: &Window) -> bool {
    late.average() > 2.0 * early.average() + 1.0
}

pub(super) fn replicate(sim: &SimConfig, rep: u64, tracked: Option<usize>) -> Replication {
    let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
    rng.set_stream(rep);

    let stations = &sim.model.stations;
    let n = stations.len();
    let gamma = sim.model.gamma;
    let lambda: Vec<f64> = stations.iter().map(|s| s.lambda).collect();
    let harvest: Vec<f64> = sim.alloc.iter().map(|p| gamma * p).collect();
    let service: Vec<f64> = stations.iter().map(|s| s.w + s.delta).collect();
    let leak_prob: Vec<f64> = stations.iter().map(|s| s.delta / (s.w + s.delta)).collect();
    let samplers: Vec<BatchSampler> = stations
        .iter()
        .map(|s| BatchSampler::new(&s.batch))
        .collect();
    let fixed_rate: f64 = lambda.iter().sum::<f64>() + harvest.iter().sum::<f64>();

    let horizon = sim.horizon;
    let warmup = sim.warmup;
    let span = horizon - warmup;
    let cap = sim.state_cap as u64;
    let deep = sim.deep_queue as u64;

    let mut k = vec![0u64; n];
    let mut b = vec![0u64; n];
    let mut total_k = 0u64;
    let mut total_b = 0u64;
    let mut service_rate = 0.0;

    let mut busy_time = vec![0.0; n];
    let mut stocked_time = vec![0.0; n];
    let mut jobs_area = 0.0;
    let mut state_time = vec![0.0; tracked.unwrap_or(0)];
    let mut leaks = vec![0u64; n];
    let mut idle = vec![0u64; n];
    let mut useful = vec![0u64; n];
    let mut removed = 0u64;
    let mut harvested = 0u64;
    let mut deep_removals = vec![vec![0u64; REMOVAL_BUCKETS]; n];

    let tenth = 0.1 * span;
    let mut jobs_early = Window {
        start: warmup,
        end: warmup + tenth,
        area: 0.0,
    };
    let mut jobs_late = Window {
        start: horizon - tenth,
        end: horizon,
        area: 0.0,
    };
    let mut packets_early = Window {
        start: warmup,
        end: warmup + tenth,
        area: 0.0,
    };
    let mut packets_late = Window {
        start: horizon - tenth,
        end: horizon,
        area: 0.0,
    };

    let mut t = 0.0;
    loop {
        let total_rate = fixed_rate + service_rate;
        let next = if total_rate > 0.0 {
            let e: f64 = rng.sample(Exp1);
            t + e / total_rate
        } else {
            f64::INFINITY
        };

        let hi = next.min(horizon);
        let lo = t.max(warmup);
        if hi > lo {
            let dt = hi - lo;
            for i in 0..n {
                if k[i] > 0 {
                    busy_time[i] += dt;
                }
                if b[i] > 0 {
                    stocked_time[i] += dt;
                }
            }
            jobs_area += total_k as f64 * dt;
            if tracked.is_some() {
                if let Some(idx) = encode_state(&k, &b, cap) {
                    state_time[idx] += dt;
                }
            }
            jobs_early.add(lo, hi, total_k as f64);
            jobs_late.add(lo, hi, total_k as f64);
            packets_early.add(lo, hi, total_b as f64);
            packets_late.add(lo, hi, total_b as f64);
        }
        if next >= horizon {
            break;
        }
        t = next;
        let counting = t >= warmup;

        let mut pick = rng.random::<f64>() * total_rate;
        let mut handled = false;
        for i in 0..n {
            if pick < lambda[i] {
                k[i] += 1;
                total_k += 1;
                handled = true;
                break;
            }
            pick -= lambda[i];
            if pick < harvest[i] {
                if b[i] == 0 {
                    service_rate += service[i];
                }
                b[i] += 1;
                total_b += 1;
                if counting {
                    harvested += 1;
                }
                handled = true;
                break;
            }
            pick -= harvest[i];
            if b[i] > 0 {
                if pick < service[i] {
                    depart(
                        i,
                        &mut rng,
                        &mut b,
                        &mut k,
                        &mut total_b,
                        &mut total_k,
                        &mut service_rate,
                        service[i],
                        leak_prob[i],
                        &samplers[i],
                    )
                    .record(
                        counting,
                        deep,
                        &mut leaks[i],
                        &mut idle[i],
                        &mut useful[i],
                        &mut removed,
                        &mut deep_removals[i],
                    );
                    handled = true;
                    break;
                }
                pick -= service[i];
            }
        }
        if !handled {
            // rounding left `pick` past the last clock: charge the last active one
            let i = (0..n).rev().find(|&i| b[i] > 0);
            match i {
                Some(i) => depart(
                    i,
                    &mut rng,
                    &mut b,
                    &mut k,
                    &mut total_b,
                    &mut total_k,
                    &mut service_rate,
                    service[i],
                    leak_prob[i],
                    &samplers[i],
                )
                .record(
                    counting,
                    deep,
                    &mut leaks[i],
                    &mut idle[i],
                    &mut useful[i],
                    &mut removed,
                    &mut deep_removals[i],
                ),
                None => {
                    let i = (0..n)
                        .rev()
                        .find(|&i| harvest[i] > 0.0 || lambda[i] > 0.0)
                        .unwrap_or(0);
                    if harvest[i] > 0.0 {
                        if b[i] == 0 {
                            service_rate += service[i];
                        }
                        b[i] += 1;
                        total_b += 1;
                        if counting {
                            harvested += 1;
                        }
                    } else {
                        k[i] += 1;
                        total_k += 1;
                    }
                }
            }
        }
        if total_b == 0 {
            // resynchronise the running sum to avoid accumulated rounding
            service_rate = 0.0;
        }
    }

    let per_sec = |c: u64| c as f64 / span;
    let lambda_plus: f64 = lambda.iter().sum();
    Replication {
        q1: busy_time.iter().map(|x| x / span).collect(),
        q2: stocked_time.iter().map(|x| x / span).collect(),
        response_time: if lambda_plus > 0.0 {
            jobs_area / span / lambda_plus
        } else {
            0.0
        },
        leak_rate: leaks.iter().map(|&c| per_sec(c)).collect(),
        idle_rate: idle.iter().map(|&c| per_sec(c)).collect(),
        useful_rate: useful.iter().map(|&c| per_sec(c)).collect(),
        job_throughput: per_sec(removed),
        harvest_rate: per_sec(harvested),
        state_time: state_time.iter().map(|x| x / span).collect(),
        deep_removals,
        drifting: drifted(&jobs_early, &jobs_late) || drifted(&packets_early, &packets_late),
    }
}

enum Departure {
    Leak,
    Idle,
    Served { before: u64, removed: u64 },
}

impl Departure {
    #[allow(clippy::too_many_arguments)]
    fn record(
        self,
        counting: bool,
        deep: u64,
        leaks: &mut u64,
        idle: &mut u64,
        useful: &mut u64,
        removed_total: &mut u64,
        deep_hist: &mut [u64],
    ) {
        if !counting {
            return;
        }
        match self {
            Departure::Leak => *leaks += 1,
            Departure::Idle => *idle += 1,
            Departure::Served { before, removed } => {
                *useful += 1;
                *removed_total += removed;
                if before >= deep {
                    let bucket = (removed as usize).min(REMOVAL_BUCKETS) - 1;
                    deep_hist[bucket] += 1;
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn depart(
    i: usize,
    rng: &mut ChaCha8Rng,
    b: &mut [u64],
    k: &mut [u64],
    total_b: &mut u64,
    total_k: &mut u64,
    service_rate: &mut f64,
    rate: f64,
    leak_prob: f64,
    sampler: &BatchSampler,
) -> Departure {
    b[i] -= 1;
    *total_b -= 1;
    if b[i] == 0 {
        *service_rate -= rate;
    }
    if rng.random::<f64>() < leak_prob {
        return Departure::Leak;
    }
    if k[i] == 0 {
        return Departure::Idle;
    }
    let before = k[i];
    let removed = sampler.sample(rng).min(before);
    k[i] -= removed;
    *total_k -= removed;
    Departure::Served { before, removed }
}
