//! Work-conserving scheduling at a single server.

use serde::{Deserialize, Serialize};

use crate::model::{Job, ServerState};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Discipline {
    /// Head of line served at rate 1.
    #[default]
    #[serde(rename = "FIFO")]
    Fifo,
    /// Each of `n` jobs served at rate `1/n`.
    #[serde(rename = "PS")]
    ProcessorSharing,
    /// Most recent arrival served at rate 1, preempted work resumes later.
    #[serde(rename = "LIFO_PR")]
    LifoPreemptiveResume,
}

impl Discipline {
    pub fn label(self) -> &'static str {
        match self {
            Discipline::Fifo => "FIFO",
            Discipline::ProcessorSharing => "PS",
            Discipline::LifoPreemptiveResume => "LIFO_PR",
        }
    }

    /// Symmetric disciplines have insensitive stationary laws.
    pub fn is_symmetric(self) -> bool {
        !matches!(self, Discipline::Fifo)
    }

    /// Position (in arrival order) of the job that completes next if no
    /// further arrivals occur.
    fn next_out(self, server: &ServerState) -> Option<usize> {
        let jobs = &server.jobs;
        if jobs.is_empty() {
            return None;
        }
        Some(match self {
            Discipline::Fifo => 0,
            Discipline::LifoPreemptiveResume => jobs.len() - 1,
            Discipline::ProcessorSharing => {
                let mut best = 0;
                for (i, job) in jobs.iter().enumerate().skip(1) {
                    if job.residual < jobs[best].residual {
                        best = i;
                    }
                }
                best
            }
        })
    }

    /// Time until the next completion absent arrivals.
    pub fn time_to_departure(self, server: &ServerState) -> Option<f64> {
        let pos = self.next_out(server)?;
        let residual = server.jobs[pos].residual;
        Some(match self {
            Discipline::ProcessorSharing => residual * server.len() as f64,
            _ => residual,
        })
    }

    /// Serve the queue for `dt` time units with no arrivals or completions
    /// in between.
    pub fn serve(self, server: &mut ServerState, dt: f64) {
        if dt <= 0.0 || server.is_empty() {
            return;
        }
        match self {
            Discipline::Fifo => server.jobs[0].residual -= dt,
            Discipline::LifoPreemptiveResume => {
                let last = server.jobs.len() - 1;
                server.jobs[last].residual -= dt;
            }
            Discipline::ProcessorSharing => {
                let share = dt / server.len() as f64;
                for job in server.jobs.iter_mut() {
                    job.residual -= share;
                }
            }
        }
    }

    /// Remove the job completing now.
    pub fn complete(self, server: &mut ServerState) -> Option<Job> {
        let pos = self.next_out(server)?;
        server.jobs.remove(pos)
    }
}

/// Service rate given to each job, in arrival order.
pub fn allocate_service(disc: Discipline, server: &ServerState) -> Vec<f64> {
    let n = server.len();
    let mut rates = vec![0.0; n];
    match disc {
        Discipline::Fifo if n > 0 => rates[0] = 1.0,
        Discipline::LifoPreemptiveResume if n > 0 => rates[n - 1] = 1.0,
        Discipline::ProcessorSharing => rates.iter_mut().for_each(|r| *r = 1.0 / n as f64),
        _ => {}
    }
    rates
}
