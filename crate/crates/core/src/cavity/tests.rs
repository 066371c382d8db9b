use super::*;
use crate::discipline::Discipline;
use crate::estimators::{mean_ci, Confidence};
use crate::model::{Configuration, TailCounts};
use crate::rates::{asymptotic_profile, cavity_rate};
use crate::rng::RngStream;
use crate::service::ServiceDistribution;
use crate::sim::{replicate, run, RunOptions, SystemParams};

#[test]
fn tv_examples() {
    assert_eq!(tv_distance(&[0.2, 0.3, 0.5], &[0.2, 0.3, 0.5]).unwrap(), 0.0);
    assert_eq!(tv_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
    assert_eq!(tv_distance(&[1.0], &[0.0, 0.0, 1.0]).unwrap(), 1.0);
    assert_eq!(tv_distance(&[0.5, 0.5], &[0.75, 0.25]).unwrap(), 0.25);
    assert_eq!(tv_distance(&[0.5, 0.6], &[1.0]), Err(Error::NotNormalized(1.1)));
    assert!(tv_distance(&[1.5, -0.5], &[1.0]).is_err());
}

#[test]
fn overflow_atom_keeps_mass() {
    let law = [0.5, 0.25, 0.125, 0.0625, 0.0625];
    assert_eq!(truncate_with_overflow(&law, 2), vec![0.5, 0.25, 0.25]);
    assert_eq!(truncate_with_overflow(&law[..2], 3), vec![0.5, 0.25, 0.0, 0.0]);
    assert_eq!(histogram([0, 2, 2, 1]), vec![0.25, 0.25, 0.5]);
}

#[test]
fn profile_lookup() {
    let p = TailProfile::empirical(&[0.0, 1.0, 2.0], vec![vec![1.0, 0.2], vec![1.0, 0.4, 0.1], vec![1.0, 0.5]]).unwrap();
    assert_eq!(p.p(0.4, 1), 0.2);
    assert_eq!(p.p(0.6, 1), 0.4);
    assert_eq!(p.p(1.2, 2), 0.1);
    assert_eq!(p.p(9.0, 1), 0.5);
    assert_eq!(p.p(9.0, 7), 0.0);
    assert!(TailProfile::empirical(&[0.0], vec![vec![0.9, 0.2]]).is_err());
    assert!(TailProfile::empirical(&[0.0], vec![vec![1.0, 0.2, 0.3]]).is_err());
    let s = TailProfile::stationary(2, 0.5);
    assert_eq!(s.p(3.0, 2), 0.125);
    assert_eq!(s.rate(2, 0.5, 0.0, 1), cavity_rate(2, 0.5, 0.5, 0.125));
}

#[test]
fn profile_from_trajectories_averages() {
    let a = Trajectory {
        times: vec![0.5, 1.5],
        snapshots: vec![TailCounts::from_counts(vec![4, 2, 0]).unwrap(), TailCounts::from_counts(vec![4, 4, 1, 0]).unwrap()],
        watched: vec![vec![0], vec![0]],
    };
    let b = Trajectory {
        times: vec![0.5, 1.5],
        snapshots: vec![TailCounts::from_counts(vec![4, 0]).unwrap(), TailCounts::from_counts(vec![4, 2, 1, 0]).unwrap()],
        watched: vec![vec![0], vec![0]],
    };
    let p = TailProfile::from_trajectories(&[&a, &b]).unwrap();
    assert_eq!(p.p(0.0, 1), 0.25);
    assert_eq!(p.p(1.2, 1), 0.75);
    assert_eq!(p.p(1.2, 2), 0.25);
}

#[test]
fn zero_profile_blocks_arrivals_above_level_zero() {
    let profile = TailProfile::empirical(&[0.0], vec![vec![1.0, 0.0]]).unwrap();
    let mut rng = RngStream::new(41).rng();
    let out = run_cavity(2, 0.5, &profile, &ServiceDistribution::exponential(), Discipline::Fifo, 1, 50.0, &[], &mut rng).unwrap();
    assert!(out.up.iter().skip(1).all(|&u| u == 0));
    assert!(out.occupancy.len() <= 2);
}

#[test]
fn crossings_balance_along_each_path() {
    let profile = TailProfile::stationary(3, 0.8);
    for seed in 0..10 {
        let mut rng = RngStream::new(seed).rng();
        let initial = (seed % 4) as usize;
        let out = run_cavity(3, 0.8, &profile, &ServiceDistribution::exponential(), Discipline::ProcessorSharing, initial, 200.0, &[200.0], &mut rng).unwrap();
        let last = out.lengths[0];
        let depth = out.up.len().max(out.down.len()).max(initial + 1);
        for k in 0..depth {
            let up = out.up.get(k).copied().unwrap_or(0) as i64;
            let down = out.down.get(k).copied().unwrap_or(0) as i64;
            assert_eq!(up - down, (last > k) as i64 - (initial > k) as i64, "k={k}");
        }
        assert!((out.occupancy.iter().sum::<f64>() - 200.0).abs() < 1e-9);
    }
}

fn tail_fractions(run: &CavityRun, k_max: usize) -> Vec<f64> {
    let total: f64 = run.occupancy.iter().sum();
    (0..=k_max).map(|k| run.occupancy.iter().skip(k).sum::<f64>() / total).collect()
}

fn cavity_tail(profile: &TailProfile, d: usize, lambda: f64, service: ServiceDistribution, disc: Discipline, seed: u64) -> Vec<(f64, f64)> {
    let root = RngStream::new(seed);
    let runs = replicate(40, &root, |_, s| {
        let r = run_cavity(d, lambda, profile, &service, disc, 0, 5_000.0, &[], &mut s.rng()).unwrap();
        tail_fractions(&r, 4)
    });
    (0..=4)
        .map(|k| {
            let e = mean_ci(&runs.iter().map(|r| r[k]).collect::<Vec<_>>(), Confidence::P99);
            (e.value, e.half_width)
        })
        .collect()
}

#[test]
fn stationary_profile_reproduces_fixed_point() {
    let profile = TailProfile::stationary(2, 0.5);
    let tail = cavity_tail(&profile, 2, 0.5, ServiceDistribution::exponential(), Discipline::Fifo, 42);
    let expected = asymptotic_profile(2, 0.5, 4);
    assert!((expected[3] - 0.0078125).abs() < 1e-15);
    for k in 1..4 {
        let (p, hw) = tail[k];
        assert!((p - expected[k]).abs() <= hw.max(1e-3), "k={k}: {p} ± {hw} vs {}", expected[k]);
    }
}

#[test]
fn thinning_matches_birth_death_chain() {
    let tails = vec![1.0, 0.7, 0.35, 0.1, 0.02];
    let profile = TailProfile::empirical(&[0.0], vec![tails.clone()]).unwrap();
    let (d, lambda) = (3, 0.6);
    let rates: Vec<f64> = (0..8).map(|k| profile.rate(d, lambda, 0.0, k)).collect();
    let mut weights = vec![1.0];
    for k in 0..7 {
        weights.push(weights[k] * rates[k]);
    }
    let z: f64 = weights.iter().sum();
    let exact_tail: Vec<f64> = (0..=4).map(|k| weights[k..].iter().sum::<f64>() / z).collect();
    let tail = cavity_tail(&profile, d, lambda, ServiceDistribution::exponential(), Discipline::Fifo, 43);
    for k in 1..=4 {
        let (p, hw) = tail[k];
        assert!((p - exact_tail[k]).abs() <= hw.max(1e-3), "k={k}: {p} ± {hw} vs {}", exact_tail[k]);
    }
}

#[test]
fn symmetric_discipline_is_insensitive() {
    let profile = TailProfile::stationary(2, 0.7);
    let exp = cavity_tail(&profile, 2, 0.7, ServiceDistribution::exponential(), Discipline::ProcessorSharing, 44);
    let det = cavity_tail(&profile, 2, 0.7, ServiceDistribution::deterministic(), Discipline::ProcessorSharing, 45);
    for k in 1..4 {
        let joint = (exp[k].1.powi(2) + det[k].1.powi(2)).sqrt();
        assert!((exp[k].0 - det[k].0).abs() <= joint.max(1e-3), "k={k}: {:?} {:?}", exp[k], det[k]);
    }
}

#[test]
fn up_flux_matches_exponential_down_flux() {
    let profile = TailProfile::stationary(2, 0.6);
    let mut rng = RngStream::new(46).rng();
    let horizon = 50_000.0;
    let out = run_cavity(2, 0.6, &profile, &ServiceDistribution::exponential(), Discipline::Fifo, 0, horizon, &[], &mut rng).unwrap();
    for k in 0..3 {
        let up = out.up[k] as f64 / horizon;
        // exponential departures leave level k + 1 at rate 1
        let down = out.occupancy[k + 1] / horizon;
        let predicted: f64 = out.occupancy[k] / horizon * profile.rate(2, 0.6, 0.0, k);
        // Poisson noise on counts of order sqrt(count)
        let tol = 4.0 * (up / horizon).sqrt();
        assert!((up - down).abs() < tol, "k={k}: {up} {down}");
        assert!((up - predicted).abs() < tol, "k={k}: {up} {predicted}");
    }
}

fn params(n: usize, d: usize, lambda: f64) -> SystemParams {
    SystemParams::new(n, d, lambda, ServiceDistribution::exponential(), Discipline::Fifo).unwrap()
}

#[test]
fn coupled_stream_rates() {
    let (n, d, lambda, horizon) = (20, 3, 0.7, 10.0);
    let p = params(n, d, lambda);
    let init = Configuration::empty(n).unwrap();
    let root = RngStream::new(47);
    let runs = replicate(200, &root, |_, s| run_coupled(&p, &init, 0, horizon, &[], StreamMask::default(), &mut s.rng()).unwrap().counts);
    let large: Vec<f64> = runs.iter().map(|c| c.to_large as f64).collect();
    let small: Vec<f64> = runs.iter().map(|c| c.to_small as f64).collect();
    let mean_large = large.iter().sum::<f64>() / 200.0;
    let mean_small = small.iter().sum::<f64>() / 200.0;
    let expected_large = lambda * (n + 1) as f64 * horizon;
    let expected_small = lambda * n as f64 * horizon;
    assert!((mean_large - expected_large).abs() < 3.0 * (expected_large / 200.0).sqrt(), "{mean_large}");
    assert!((mean_small - expected_small).abs() < 3.0 * (expected_small / 200.0).sqrt(), "{mean_small}");
    assert!(runs.iter().all(|c| c.to_large == c.yellow + c.blue && c.to_small == c.yellow + c.red));
}

#[test]
fn red_only_leaves_the_larger_system_alone() {
    let p = params(10, 2, 0.5);
    let init = Configuration::from_lengths(&[1; 10], 1.0).unwrap();
    let mask = StreamMask { yellow: false, red: true, blue: false };
    let mut rng = RngStream::new(48).rng();
    let times: Vec<f64> = (0..=20).map(|i| i as f64).collect();
    let out = run_coupled(&p, &init, 2, 20.0, &times, mask, &mut rng).unwrap();
    assert_eq!(out.counts.to_large, 0);
    assert!(out.counts.red > 0);
    let totals: Vec<u32> = out.large.iter().map(|s| s.as_slice()[1..].iter().sum()).collect();
    assert!(totals.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(totals[0], 12);
}

#[test]
fn coupled_small_system_has_the_plain_law() {
    let (n, d, lambda, t) = (10, 2, 0.8, 3.0);
    let p = params(n, d, lambda);
    let init = Configuration::empty(n).unwrap();
    let reps = 3000;
    let coupled = replicate(reps, &RngStream::new(49), |_, s| {
        let out = run_coupled(&p, &init, 0, t, &[t], StreamMask::default(), &mut s.rng()).unwrap();
        (out.small[0].get(1) as f64, out.large[0].get(1) as f64)
    });
    let plain = replicate(reps, &RngStream::new(50), |_, s| {
        run(&p, &init, t, &[t], &RunOptions::new(), &mut s.rng()).unwrap().trajectory.snapshots[0].get(1) as f64
    });
    let p_plain = params(n + 1, d, lambda);
    let init_large = Configuration::empty(n + 1).unwrap();
    let plain_large = replicate(reps, &RngStream::new(51), |_, s| {
        run(&p_plain, &init_large, t, &[t], &RunOptions::new(), &mut s.rng()).unwrap().trajectory.snapshots[0].get(1) as f64
    });
    let a = mean_ci(&coupled.iter().map(|c| c.0).collect::<Vec<_>>(), Confidence::P99);
    let b = mean_ci(&plain, Confidence::P99);
    assert!((a.value - b.value).abs() < a.half_width + b.half_width, "{a:?} {b:?}");
    let a = mean_ci(&coupled.iter().map(|c| c.1).collect::<Vec<_>>(), Confidence::P99);
    let b = mean_ci(&plain_large, Confidence::P99);
    assert!((a.value - b.value).abs() < a.half_width + b.half_width, "{a:?} {b:?}");
}

#[test]
fn tagged_arrivals_follow_the_rate_decomposition() {
    let (n, d, lambda, horizon) = (8, 3, 0.8, 100.0);
    let p = params(n, d, lambda);
    let init = Configuration::empty(n).unwrap();
    let runs = replicate(100, &RngStream::new(52), |_, s| {
        run_coupled(&p, &init, 0, horizon, &[], StreamMask::default(), &mut s.rng()).unwrap().decomposition
    });
    let yc: f64 = runs.iter().map(|r| r.yellow_count as f64).sum();
    let ya: f64 = runs.iter().map(|r| r.yellow_compensator).sum();
    assert!((yc - ya).abs() < 4.0 * ya.sqrt(), "{yc} {ya}");
    for rel in 0..3 {
        let c: f64 = runs.iter().map(|r| r.blue_count[rel] as f64).sum();
        let a: f64 = runs.iter().map(|r| r.blue_compensator[rel]).sum();
        assert!((c - a).abs() < 4.0 * a.sqrt().max(1.0), "relation {rel}: {c} {a}");
    }
    assert_eq!(runs.iter().map(|r| r.blue_count[0]).sum::<u64>(), 0);
    let time: f64 = runs[0].time_by_relation.iter().sum();
    assert!((time - horizon).abs() < 1e-9);
}
