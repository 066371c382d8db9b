use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::model::{Configuration, TailCounts};
use crate::rates::{b1_term, b2_term, yellow_term, RateInputs, Relation};
use crate::sim::{route_shortest, sample_zeta, QueueSystem, SystemParams};

/// Which of the three Poisson streams are active.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamMask {
    /// Shared by both systems, rate `lambda N - (D-1) lambda`.
    pub yellow: bool,
    /// `N`-system only, rate `(D-1) lambda`.
    pub red: bool,
    /// `N+1`-system only, rate `lambda D`; always samples the extra server.
    pub blue: bool,
}

impl Default for StreamMask {
    fn default() -> Self {
        Self { yellow: true, red: true, blue: true }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StreamCounts {
    pub yellow: u64,
    pub red: u64,
    pub blue: u64,
    /// Arrivals received by each system.
    pub to_small: u64,
    pub to_large: u64,
}

/// Arrivals to server 0 of the `N + 1` system split by stream, against the
/// integrated yellow, `B1` and `B2` rates. Blue entries are indexed by the
/// relation of the extra server's length to the level of server 0, in the
/// order of [`Relation::ALL`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TaggedDecomposition {
    pub yellow_count: u64,
    pub yellow_compensator: f64,
    pub blue_count: [u64; 3],
    pub blue_compensator: [f64; 3],
    pub time_by_relation: [f64; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoupledRun {
    pub times: Vec<f64>,
    pub small: Vec<TailCounts>,
    pub large: Vec<TailCounts>,
    /// Server 0 lengths in the `N` and `N + 1` systems at each sample time.
    pub tagged: Vec<(usize, usize)>,
    pub counts: StreamCounts,
    pub decomposition: TaggedDecomposition,
    /// Yellow arrivals routed to the same server in both systems.
    pub shared_service: u64,
}

fn relation_index(r: Relation) -> usize {
    match r {
        Relation::Below => 0,
        Relation::Equal => 1,
        Relation::Above => 2,
    }
}

struct Intensity {
    yellow: f64,
    blue: f64,
    relation: usize,
}

/// Rates to server 0 of the `N + 1` system in its current state.
fn intensity(params: &SystemParams, large: &QueueSystem) -> Intensity {
    let n = params.n;
    let k = large.len(0);
    let extra = large.len(n);
    let tail = large.tail();
    let at = |j: usize| tail.get(j).copied().unwrap_or(0) as usize;
    // tail counts over the first N servers only
    let pi_k = at(k) - (extra >= k) as usize;
    let pi_k1 = at(k + 1) - (extra > k) as usize;
    let input = RateInputs { n, d: params.d, lambda: params.lambda, pi_k, pi_k1 };
    let relation = Relation::of(extra, k);
    let blue = match relation {
        Relation::Below => 0.0,
        Relation::Equal => b2_term(&input),
        Relation::Above => b1_term(&input),
    };
    Intensity { yellow: yellow_term(&input), blue, relation: relation_index(relation) }
}

/// Drive the `N`-server system with yellow + red arrivals and the
/// `N + 1`-server system with yellow + blue arrivals. Jobs of a yellow
/// arrival that lands on the same server in both systems share their
/// service requirement.
pub fn run_coupled<R: Rng + ?Sized>(
    params: &SystemParams,
    init: &Configuration,
    extra_init: usize,
    horizon: f64,
    sample_times: &[f64],
    mask: StreamMask,
    rng: &mut R,
) -> Result<CoupledRun> {
    params.validate()?;
    let (n, d, lambda) = (params.n, params.d, params.lambda);
    if init.n() != n {
        return Err(Error::SizeMismatch { expected: n, found: init.n() });
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::param("horizon", format!("must be finite and positive, got {horizon}")));
    }
    if sample_times.windows(2).any(|w| w[1] <= w[0]) || sample_times.iter().any(|t| !(*t >= 0.0 && *t <= horizon)) {
        return Err(Error::param("sample_times", "must increase strictly within [0, horizon]"));
    }

    let mut large_servers = init.servers().to_vec();
    large_servers.push(Configuration::from_lengths_with(&[extra_init], |_, _| params.service.sample(rng))?.into_servers().remove(0));
    let mut small = QueueSystem::new(init.clone(), params.discipline);
    let mut large = QueueSystem::new(Configuration::new(large_servers)?, params.discipline);

    let rates = [
        if mask.yellow { lambda * n as f64 - (d as f64 - 1.0) * lambda } else { 0.0 },
        if mask.red { (d as f64 - 1.0) * lambda } else { 0.0 },
        if mask.blue { lambda * d as f64 } else { 0.0 },
    ];
    let total: f64 = rates.iter().sum();
    let clock = (total > 0.0).then(|| Exp::new(total).expect("positive rate"));
    let mut next_arrival = clock.as_ref().map_or(f64::INFINITY, |c| c.sample(rng));

    let mut out = CoupledRun {
        times: Vec::with_capacity(sample_times.len()),
        small: Vec::with_capacity(sample_times.len()),
        large: Vec::with_capacity(sample_times.len()),
        tagged: Vec::with_capacity(sample_times.len()),
        counts: StreamCounts::default(),
        decomposition: TaggedDecomposition::default(),
        shared_service: 0,
    };
    let mut samples = sample_times.iter().copied().peekable();
    let mut mark = 0.0;
    let mut current = intensity(params, &large);

    loop {
        let dep_small = small.next_departure().unwrap_or(f64::INFINITY);
        let dep_large = large.next_departure().unwrap_or(f64::INFINITY);
        let event = next_arrival.min(dep_small).min(dep_large);
        while let Some(s) = samples.next_if(|&s| s < event) {
            out.times.push(s);
            out.small.push(small.tail_counts());
            out.large.push(large.tail_counts());
            out.tagged.push((small.len(0), large.len(0)));
        }
        let until = event.min(horizon);
        let dt = until - mark;
        let dec = &mut out.decomposition;
        dec.yellow_compensator += current.yellow * dt;
        dec.blue_compensator[current.relation] += current.blue * dt;
        dec.time_by_relation[current.relation] += dt;
        mark = until;
        if event > horizon {
            break;
        }

        if dep_small <= dep_large && dep_small <= next_arrival {
            small.depart();
        } else if dep_large <= next_arrival {
            large.depart();
        } else {
            let u = rng.gen::<f64>() * total;
            let t = next_arrival;
            if u < rates[0] {
                out.counts.yellow += 1;
                let zeta = sample_zeta(n, d, rng);
                let a = route_shortest(&zeta, |i| small.len(i), rng);
                let b = route_shortest(&zeta, |i| large.len(i), rng);
                let work = params.service.sample(rng);
                small.arrive(t, a, work);
                if a == b {
                    out.shared_service += 1;
                    large.arrive(t, b, work);
                } else {
                    large.arrive(t, b, params.service.sample(rng));
                }
                if b == 0 {
                    out.decomposition.yellow_count += 1;
                }
                out.counts.to_small += 1;
                out.counts.to_large += 1;
            } else if u < rates[0] + rates[1] {
                out.counts.red += 1;
                let zeta = sample_zeta(n, d, rng);
                let a = route_shortest(&zeta, |i| small.len(i), rng);
                small.arrive(t, a, params.service.sample(rng));
                out.counts.to_small += 1;
            } else {
                out.counts.blue += 1;
                let mut zeta = sample_zeta(n, d - 1, rng);
                zeta.push(n);
                let b = route_shortest(&zeta, |i| large.len(i), rng);
                if b == 0 {
                    out.decomposition.blue_count[current.relation] += 1;
                }
                large.arrive(t, b, params.service.sample(rng));
                out.counts.to_large += 1;
            }
            next_arrival += clock.as_ref().expect("arrivals imply a clock").sample(rng);
        }
        current = intensity(params, &large);
    }
    for s in samples {
        out.times.push(s);
        out.small.push(small.tail_counts());
        out.large.push(large.tail_counts());
        out.tagged.push((small.len(0), large.len(0)));
    }
    Ok(out)
}
