use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::discipline::Discipline;
use crate::model::{Configuration, Job, ServerState, TailCounts};

#[derive(Clone, Copy, Debug)]
struct Pending {
    time: f64,
    server: usize,
    stamp: u64,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // reversed so that BinaryHeap pops the earliest, then lowest server
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.server.cmp(&self.server))
    }
}

/// Server queues with lazily updated residuals and a departure calendar.
#[derive(Clone, Debug)]
pub struct QueueSystem {
    discipline: Discipline,
    servers: Vec<ServerState>,
    synced_at: Vec<f64>,
    stamp: Vec<u64>,
    calendar: BinaryHeap<Pending>,
    /// `tail[k]` servers hold at least `k` jobs; the last entry is 0.
    tail: Vec<u32>,
    now: f64,
    next_id: u64,
}

impl QueueSystem {
    pub fn new(init: Configuration, discipline: Discipline) -> Self {
        let n = init.n();
        let mut tail = vec![0u32; init.max_len() + 2];
        for s in init.servers() {
            for k in 0..=s.len() {
                tail[k] += 1;
            }
        }
        let servers = init.into_servers();
        let next_id = servers.iter().flat_map(|s| s.jobs()).map(|j| j.id + 1).max().unwrap_or(0);
        let mut sys = Self {
            discipline,
            servers,
            synced_at: vec![0.0; n],
            stamp: vec![0; n],
            calendar: BinaryHeap::with_capacity(2 * n),
            tail,
            now: 0.0,
            next_id,
        };
        for i in 0..n {
            sys.schedule(i);
        }
        sys
    }

    pub fn n(&self) -> usize {
        self.servers.len()
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn len(&self, server: usize) -> usize {
        self.servers[server].len()
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.servers.iter().map(ServerState::len).collect()
    }

    /// `pi_0, pi_1, ...` up to and including the first zero.
    pub fn tail(&self) -> &[u32] {
        &self.tail
    }

    pub fn tail_counts(&self) -> TailCounts {
        TailCounts { pi: self.tail.clone() }
    }

    fn sync(&mut self, server: usize, t: f64) {
        let dt = t - self.synced_at[server];
        self.discipline.serve(&mut self.servers[server], dt);
        self.synced_at[server] = t;
    }

    fn schedule(&mut self, server: usize) {
        self.stamp[server] += 1;
        if let Some(dt) = self.discipline.time_to_departure(&self.servers[server]) {
            let time = self.synced_at[server] + dt.max(0.0);
            self.calendar.push(Pending { time: time.max(self.now), server, stamp: self.stamp[server] });
        }
    }

    /// Time of the earliest pending departure.
    pub fn next_departure(&mut self) -> Option<f64> {
        while let Some(top) = self.calendar.peek() {
            if top.stamp == self.stamp[top.server] {
                return Some(top.time);
            }
            self.calendar.pop();
        }
        None
    }

    /// Complete the earliest pending departure; returns its time and server.
    pub fn depart(&mut self) -> Option<(f64, usize)> {
        self.next_departure()?;
        let Pending { time, server, .. } = self.calendar.pop()?;
        self.now = time;
        self.sync(server, time);
        let q = self.servers[server].len();
        self.discipline.complete(&mut self.servers[server]);
        self.tail[q] -= 1;
        if self.tail.len() > 2 && self.tail[self.tail.len() - 2] == 0 {
            self.tail.pop();
        }
        self.schedule(server);
        Some((time, server))
    }

    /// Add a job of `work` units to `server` at time `t`.
    pub fn arrive(&mut self, t: f64, server: usize, work: f64) {
        self.now = t;
        self.sync(server, t);
        let q = self.servers[server].len();
        self.servers[server].push(Job { id: self.next_id, residual: work, arrived_at: t });
        self.next_id += 1;
        if q + 2 >= self.tail.len() {
            self.tail.push(0);
        }
        self.tail[q + 1] += 1;
        self.schedule(server);
    }

    /// Snapshot of all queues with residuals brought up to `t >= now`.
    pub fn configuration(&self, t: f64) -> Configuration {
        let servers = self
            .servers
            .iter()
            .zip(&self.synced_at)
            .map(|(s, &at)| {
                let mut s = s.clone();
                self.discipline.serve(&mut s, t - at);
                s
            })
            .collect();
        Configuration::new(servers).expect("at least one server")
    }
}
