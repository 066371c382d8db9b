use super::*;
use crate::rng::RngStream;
use crate::service::ServiceDistribution;

fn params(n: usize, d: usize, lambda: f64) -> SystemParams {
    SystemParams::new(n, d, lambda, ServiceDistribution::exponential(), Discipline::Fifo).unwrap()
}

#[test]
fn routes_to_unique_minimum() {
    let config = Configuration::from_lengths(&[3, 1, 2], 1.0).unwrap();
    let mut rng = RngStream::new(1).rng();
    assert_eq!(jsq_route(&config, &[0, 1], &mut rng), 1);
    assert_eq!(jsq_route(&config, &[0, 2], &mut rng), 2);
    assert_eq!(jsq_route(&config, &[2], &mut rng), 2);
}

#[test]
fn ties_split_evenly() {
    let config = Configuration::from_lengths(&[2, 2], 1.0).unwrap();
    let mut rng = RngStream::new(2).rng();
    let trials = 100_000;
    let first = (0..trials).filter(|_| jsq_route(&config, &[0, 1], &mut rng) == 0).count() as f64;
    let sigma = (trials as f64 * 0.25).sqrt();
    assert!((first - trials as f64 / 2.0).abs() < 3.0 * sigma, "{first}");
}

#[test]
fn three_way_ties_split_evenly() {
    let config = Configuration::from_lengths(&[1, 1, 1, 0], 1.0).unwrap();
    let mut rng = RngStream::new(3).rng();
    let mut hits = [0usize; 3];
    let trials = 90_000;
    for _ in 0..trials {
        hits[jsq_route(&config, &[2, 0, 1], &mut rng)] += 1;
    }
    let sigma = (trials as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
    for h in hits {
        assert!((h as f64 - trials as f64 / 3.0).abs() < 3.5 * sigma, "{hits:?}");
    }
}

#[test]
fn zeta_is_a_subset_without_replacement() {
    let mut rng = RngStream::new(4).rng();
    for _ in 0..1000 {
        let mut z = sample_zeta(10, 4, &mut rng);
        z.sort_unstable();
        z.dedup();
        assert_eq!(z.len(), 4);
        assert!(z.iter().all(|&i| i < 10));
    }
}

#[test]
fn arrival_count_is_poisson() {
    let p = params(100, 2, 0.5);
    let init = Configuration::empty(100).unwrap();
    let root = RngStream::new(5);
    let counts = replicate(200, &root, |_, s| {
        run(&p, &init, 10.0, &[], &RunOptions::default(), &mut s.rng()).unwrap().arrivals as f64
    });
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    // 3 standard errors of the replication mean
    assert!((mean - 500.0).abs() < 3.0 * (500.0f64 / 200.0).sqrt(), "{mean}");
    assert!((mean - 500.0).abs() < 3.0 * 500.0f64.sqrt());
}

#[test]
fn full_jsq_single_arrival_lands_anywhere() {
    let n = 5;
    let p = SystemParams::new(n, n, 0.5, ServiceDistribution::deterministic(), Discipline::Fifo).unwrap();
    let init = Configuration::empty(n).unwrap();
    let mut seen = vec![false; n];
    for seed in 0..200 {
        let mut rng = RngStream::new(seed).rng();
        let out = run(&p, &init, 0.5, &[], &RunOptions::new().with_log(LogLevel::Arrivals), &mut rng).unwrap();
        if let Some(first) = out.log.arrivals.first() {
            seen[first.routed_to] = true;
        }
    }
    assert!(seen.iter().all(|&s| s));
}

#[test]
fn logged_arrivals_follow_the_routing_rule() {
    let p = params(20, 3, 0.9);
    let init = Configuration::empty(20).unwrap();
    let mut rng = RngStream::new(6).rng();
    let out = run(&p, &init, 30.0, &[], &RunOptions::new().with_log(LogLevel::Full), &mut rng).unwrap();
    let log = &out.log;
    assert!(log.arrivals.windows(2).all(|w| w[0].time < w[1].time));
    assert!(log.arrivals.iter().all(|a| a.time >= 0.0 && a.time <= 30.0 && a.zeta.len() == 3));
    assert!(log.departures.iter().all(|d| d.time <= 30.0));

    // replay lengths from the log
    let mut lengths = [0usize; 20];
    let mut dep = log.departures.iter().peekable();
    for a in &log.arrivals {
        while let Some(d) = dep.next_if(|d| d.time <= a.time) {
            lengths[d.server] -= 1;
        }
        let best = a.zeta.iter().map(|&i| lengths[i]).min().unwrap();
        assert!(a.zeta.contains(&a.routed_to));
        assert_eq!(lengths[a.routed_to], best);
        lengths[a.routed_to] += 1;
    }
}

#[test]
fn replay_is_bit_identical() {
    let p = SystemParams::new(30, 2, 0.8, ServiceDistribution::exponential(), Discipline::ProcessorSharing).unwrap();
    let init = Configuration::empty(30).unwrap();
    let times: Vec<f64> = (0..=10).map(|i| i as f64).collect();
    let go = || {
        let mut rng = RngStream::new(7).child("rep", 3).rng();
        run(&p, &init, 10.0, &times, &RunOptions::new().with_log(LogLevel::Full), &mut rng).unwrap()
    };
    let (a, b) = (go(), go());
    assert_eq!(a.log, b.log);
    assert_eq!(a.trajectory, b.trajectory);
    let mut buf_a = Vec::new();
    let mut buf_b = Vec::new();
    write_event_log_csv(&a.log, &mut buf_a).unwrap();
    write_event_log_csv(&b.log, &mut buf_b).unwrap();
    assert_eq!(buf_a, buf_b);
}

#[test]
fn snapshots_match_initial_state_and_are_monotone() {
    let lengths = [0, 1, 4, 2, 2, 0, 3];
    let init = Configuration::from_lengths(&lengths, 1.0).unwrap();
    let p = params(7, 2, 0.5);
    let times = [0.0, 0.5, 1.0, 2.0];
    let mut rng = RngStream::new(8).rng();
    let out = run(&p, &init, 2.0, &times, &RunOptions::new(), &mut rng).unwrap();
    let at0 = out.trajectory.snapshot(0.0).unwrap();
    assert_eq!(at0.as_slice()[..5], [7, 5, 4, 2, 1]);
    for &t in &times {
        let s = snapshot(&out.trajectory, t).unwrap();
        assert_eq!(s.get(0), 7);
        assert!(s.as_slice().windows(2).all(|w| w[0] >= w[1]));
        let m = crate::model::measure_from_tail(s);
        assert!((m.total() - 1.0).abs() < 1e-12);
    }
    assert_eq!(out.trajectory.snapshot(0.25), Err(Error::NotSampled(0.25)));
    assert_eq!(out.trajectory.tagged_queue()[0], 0);
}

#[test]
fn rejects_bad_inputs() {
    let p = params(4, 2, 0.5);
    let init = Configuration::empty(4).unwrap();
    let mut rng = RngStream::new(9).rng();
    let opts = RunOptions::new();
    assert!(run(&p, &init, f64::NAN, &[], &opts, &mut rng).is_err());
    assert!(run(&p, &init, 0.0, &[], &opts, &mut rng).is_err());
    assert!(run(&p, &init, 1.0, &[f64::INFINITY], &opts, &mut rng).is_err());
    assert!(run(&p, &init, 1.0, &[0.5, 0.2], &opts, &mut rng).is_err());
    let wrong = Configuration::empty(5).unwrap();
    assert_eq!(run(&p, &wrong, 1.0, &[], &opts, &mut rng).unwrap_err(), Error::SizeMismatch { expected: 4, found: 5 });
    assert!(SystemParams::new(4, 5, 0.5, ServiceDistribution::exponential(), Discipline::Fifo).is_err());
    assert!(SystemParams::new(4, 2, 1.0, ServiceDistribution::exponential(), Discipline::Fifo).is_err());
    let plan = BatchPlan { warmup: 1.0, batch_len: 1.0, n_batches: 5, k_max: 3 };
    assert!(matches!(
        run(&p, &init, 3.0, &[], &RunOptions::new().with_batches(plan), &mut rng),
        Err(Error::HorizonTooShort { .. })
    ));
}

#[test]
fn work_drains_at_busy_server_count() {
    for disc in [Discipline::Fifo, Discipline::ProcessorSharing, Discipline::LifoPreemptiveResume] {
        let init = Configuration::from_lengths_with(&[3, 0, 2, 1], |s, j| 0.3 + 0.2 * s as f64 + 0.1 * j as f64).unwrap();
        let mut sys = QueueSystem::new(init, disc);
        let mut t = 0.0;
        let mut work = sys.configuration(0.0).servers().iter().map(|s| s.work()).sum::<f64>();
        while let Some(next) = sys.next_departure() {
            let busy = sys.lengths().iter().filter(|&&l| l > 0).count() as f64;
            let mid = 0.5 * (t + next);
            let w_mid: f64 = sys.configuration(mid).servers().iter().map(|s| s.work()).sum();
            assert!((work - w_mid - busy * (mid - t)).abs() < 1e-9, "{disc:?}");
            sys.depart();
            t = next;
            work = sys.configuration(t).servers().iter().map(|s| s.work()).sum();
        }
        assert!(work.abs() < 1e-9);
        assert_eq!(sys.tail(), &[4, 0]);
    }
}

#[test]
fn deterministic_collisions_resolve_departure_first() {
    // job at server 0 completes at t = 1 exactly when the next job arrives
    let mut sys = QueueSystem::new(Configuration::from_lengths(&[1, 0], 1.0).unwrap(), Discipline::Fifo);
    assert_eq!(sys.next_departure(), Some(1.0));
    let (t, s) = sys.depart().unwrap();
    assert_eq!((t, s), (1.0, 0));
    sys.arrive(1.0, 0, 1.0);
    assert_eq!(sys.tail(), &[2, 1, 0]);
}

#[test]
fn simultaneous_departures_go_by_server_index() {
    let mut sys = QueueSystem::new(Configuration::from_lengths(&[0, 1, 1, 1], 0.5).unwrap(), Discipline::Fifo);
    let order: Vec<usize> = std::iter::from_fn(|| sys.depart().map(|(_, s)| s)).collect();
    assert_eq!(order, vec![1, 2, 3]);
}

#[test]
fn batch_means_average_tail_fractions() {
    let p = params(50, 2, 0.6);
    let init = Configuration::empty(50).unwrap();
    let plan = BatchPlan { warmup: 5.0, batch_len: 5.0, n_batches: 4, k_max: 4 };
    let mut rng = RngStream::new(10).rng();
    let out = run(&p, &init, plan.end(), &[], &RunOptions::new().with_batches(plan), &mut rng).unwrap();
    let means = out.batch_means.unwrap();
    assert_eq!(means.len(), 4);
    for batch in &means {
        assert!((batch[0] - 1.0).abs() < 1e-12);
        assert!(batch.windows(2).all(|w| w[0] >= w[1] - 1e-12));
        assert!(batch.iter().all(|&v| (0.0..=1.0 + 1e-12).contains(&v)));
    }
}

#[test]
fn batch_means_of_a_frozen_state() {
    // no arrivals to speak of and no service: jobs with huge residuals stay put
    let p = SystemParams::new(4, 1, 1e-12, ServiceDistribution::deterministic(), Discipline::Fifo).unwrap();
    let init = Configuration::from_lengths(&[2, 1, 0, 0], 1e9).unwrap();
    let plan = BatchPlan { warmup: 1.0, batch_len: 2.0, n_batches: 3, k_max: 3 };
    let mut rng = RngStream::new(11).rng();
    let out = run(&p, &init, 7.0, &[3.5], &RunOptions::new().with_batches(plan), &mut rng).unwrap();
    for batch in out.batch_means.unwrap() {
        assert_eq!(batch, vec![1.0, 0.5, 0.25, 0.0]);
    }
}

#[test]
fn stationary_mean_queue_is_bounded() {
    let p = params(100, 2, 0.7);
    let init = Configuration::empty(100).unwrap();
    let times: Vec<f64> = (1..=100).map(|i| i as f64 * 100.0).collect();
    let mut rng = RngStream::new(12).rng();
    let out = run(&p, &init, 10_000.0, &times, &RunOptions::new(), &mut rng).unwrap();
    let per_server: Vec<f64> = out
        .trajectory
        .snapshots
        .iter()
        .map(|s| s.as_slice()[1..].iter().map(|&v| v as f64).sum::<f64>() / 100.0)
        .collect();
    let first: f64 = per_server[..50].iter().sum::<f64>() / 50.0;
    let second: f64 = per_server[50..].iter().sum::<f64>() / 50.0;
    // sum_k P_k for D = 2, lambda = 0.7 is about 1.2
    assert!(first < 2.0 && second < 2.0, "{first} {second}");
    assert!((first - second).abs() < 0.2);
}

#[test]
fn tagged_arrivals_match_the_compensator() {
    let p = params(20, 2, 0.8);
    let init = Configuration::empty(20).unwrap();
    let root = RngStream::new(13);
    let runs = replicate(40, &root, |_, s| {
        run(&p, &init, 200.0, &[], &RunOptions::new().with_tagged_intensity(), &mut s.rng()).unwrap().tagged.unwrap()
    });
    for k in 0..3 {
        let count: f64 = runs.iter().map(|r| r.arrivals.get(k).copied().unwrap_or(0) as f64).sum();
        let comp: f64 = runs.iter().map(|r| r.compensator.get(k).copied().unwrap_or(0.0)).sum();
        // counting-process martingale: variance of N - A equals E[A]
        assert!((count - comp).abs() < 4.0 * comp.sqrt(), "k={k} {count} {comp}");
    }
    let occ: f64 = runs[0].occupancy.iter().sum();
    assert!((occ - 200.0).abs() < 1e-9);
}

#[test]
fn exchangeable_marginals() {
    let p = params(10, 2, 0.8);
    let init = Configuration::empty(10).unwrap();
    let root = RngStream::new(14);
    let reps = 4000;
    let finals = replicate(reps, &root, |_, s| {
        let opts = RunOptions::new().with_watch(vec![0, 1]);
        run(&p, &init, 5.0, &[5.0], &opts, &mut s.rng()).unwrap().trajectory.watched[0].clone()
    });
    let mut hist = [[0f64; 8]; 2];
    for w in &finals {
        for (i, h) in hist.iter_mut().enumerate() {
            h[w[i].min(7)] += 1.0 / reps as f64;
        }
    }
    let tv: f64 = 0.5 * (0..8).map(|k| (hist[0][k] - hist[1][k]).abs()).sum::<f64>();
    // each bin differs by O(sqrt(2p/reps)); summing gives a loose noise scale
    let noise: f64 = 0.5 * (0..8).map(|k| 3.0 * (2.0 * hist[0][k] / reps as f64).sqrt()).sum::<f64>();
    assert!(tv < noise, "{tv} {noise}");
}

#[test]
fn init_profiles() {
    let p = params(1000, 2, 0.5);
    let mut rng = RngStream::new(15).rng();
    let g = InitProfile::Geometric.build(&p, &mut rng).unwrap();
    let tail = crate::model::tail_counts(&g, 6).unwrap();
    assert_eq!(tail.get(1), 500);
    assert_eq!(tail.get(2), 125);
    assert_eq!(tail.get(3), 8);
    let a = InitProfile::AllAt { level: 2 }.build(&p, &mut rng).unwrap();
    assert_eq!(a.total_jobs(), 2000);
    let s = InitProfile::Stationary { warmup: Some(20.0) }.build(&p, &mut rng).unwrap();
    assert!(s.total_jobs() > 0);
    assert!(InitProfile::Geometric.is_deterministic());
}

#[test]
fn csv_dumps() {
    let mut log = EventLog { horizon: 2.0, n: 3, d: 2, ..EventLog::default() };
    log.arrivals.push(ArrivalEvent { time: 0.5, zeta: vec![1, 2], routed_to: 2 });
    log.arrivals.push(ArrivalEvent { time: 1.5, zeta: vec![0, 2], routed_to: 0 });
    log.departures.push(DepartureEvent { time: 1.0, server: 2 });
    let mut buf = Vec::new();
    write_event_log_csv(&log, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "time,kind,server,zeta\n0.5,A,2,1|2\n1,D,2,\n1.5,A,0,0|2\n");

    let traj = Trajectory {
        times: vec![0.0],
        snapshots: vec![TailCounts::from_counts(vec![3, 2, 1, 0]).unwrap()],
        watched: vec![vec![2]],
    };
    let mut buf = Vec::new();
    write_trajectory_csv(&traj, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "t,k,pi_k\n0,1,2\n0,2,1\n");
}
