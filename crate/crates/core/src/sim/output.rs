use std::io::{self, Write};

use super::{EventLog, Trajectory};

/// `time,kind,server,zeta` rows with `kind` in `A`, `D`; `zeta` lists the sampled servers joined by `|`.
pub fn write_event_log_csv<W: Write>(log: &EventLog, mut out: W) -> io::Result<()> {
    writeln!(out, "time,kind,server,zeta")?;
    let mut arrivals = log.arrivals.iter().peekable();
    let mut departures = log.departures.iter().peekable();
    loop {
        let take_departure = match (arrivals.peek(), departures.peek()) {
            (None, None) => break,
            (Some(_), None) => false,
            (None, Some(_)) => true,
            (Some(a), Some(d)) => d.time <= a.time,
        };
        if take_departure {
            let d = departures.next().unwrap();
            writeln!(out, "{},D,{},", d.time, d.server)?;
        } else {
            let a = arrivals.next().unwrap();
            let zeta: Vec<String> = a.zeta.iter().map(usize::to_string).collect();
            writeln!(out, "{},A,{},{}", a.time, a.routed_to, zeta.join("|"))?;
        }
    }
    Ok(())
}

/// Long format `t,k,pi_k` for `k >= 1` up to the last non-zero level.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut out: W) -> io::Result<()> {
    writeln!(out, "t,k,pi_k")?;
    for (t, snap) in traj.times.iter().zip(&traj.snapshots) {
        for (k, pi) in snap.as_slice().iter().enumerate().skip(1) {
            if *pi == 0 {
                break;
            }
            writeln!(out, "{t},{k},{pi}")?;
        }
    }
    Ok(())
}
