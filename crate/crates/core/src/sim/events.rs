//! Next-event simulation of birth–death queues with a server schedule.
//!
//! All clocks are exponential, so after every event a single departure clock
//! at the total rate `μ·busy + θ·waiting` is redrawn. Arrivals come either
//! from a Poisson clock or from a precomputed list of times. The number of
//! active servers follows a schedule. A drop in the level never interrupts a
//! job: busy servers above the level retire when they finish.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::Exp1;

use super::rng::{stream, Purpose};
use crate::time_varying::StaffingSchedule;

pub(crate) enum Servers<'a> {
    Fixed(u64),
    Schedule(&'a StaffingSchedule),
}

impl Servers<'_> {
    fn level_at(&self, t: f64) -> u64 {
        match self {
            Servers::Fixed(s) => *s,
            Servers::Schedule(sched) => sched.level_at(t),
        }
    }

    fn next_change(&self, t: f64) -> f64 {
        match self {
            Servers::Fixed(_) => f64::INFINITY,
            Servers::Schedule(sched) => {
                let i = sched.grid.partition_point(|&g| g <= t);
                sched.grid.get(i).copied().unwrap_or(f64::INFINITY)
            }
        }
    }
}

pub(crate) enum Arrivals<'a> {
    Poisson(f64),
    Times(&'a [f64]),
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Stop {
    Time(f64),
    /// Number of arrivals counted after the warm-up.
    Arrivals(u64),
}

pub(crate) struct EventSpec<'a> {
    pub mu: f64,
    pub theta: f64,
    pub capacity: Option<u64>,
    pub servers: Servers<'a>,
    pub arrivals: Arrivals<'a>,
    pub stop: Stop,
    pub warmup: f64,
    pub initial: u64,
    pub record_path: bool,
    /// Cell edges on which the all-servers-busy time fraction is tracked.
    pub profile: Option<&'a [f64]>,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct EventStats {
    pub arrivals: u64,
    pub admitted: u64,
    pub delayed: u64,
    pub blocked: u64,
    pub abandoned: u64,
    pub wait_sum: f64,
    pub wait_count: u64,
    pub observed: f64,
    pub time_empty: f64,
    pub queue_area: f64,
    pub time_above: f64,
    pub profile_busy: Vec<f64>,
    pub profile_time: Vec<f64>,
    pub path_times: Vec<f64>,
    pub path_counts: Vec<f64>,
    pub path_levels: Vec<f64>,
}

struct Profile<'a> {
    edges: &'a [f64],
    cursor: usize,
}

impl Profile<'_> {
    fn add(&mut self, busy_acc: &mut [f64], time_acc: &mut [f64], t0: f64, t1: f64, busy: bool) {
        let cells = self.edges.len() - 1;
        while self.cursor < cells && self.edges[self.cursor + 1] <= t0 {
            self.cursor += 1;
        }
        let mut i = self.cursor;
        while i < cells {
            let a = t0.max(self.edges[i]);
            let b = t1.min(self.edges[i + 1]);
            if b > a {
                time_acc[i] += b - a;
                if busy {
                    busy_acc[i] += b - a;
                }
            }
            if t1 <= self.edges[i + 1] {
                break;
            }
            i += 1;
        }
    }
}

pub(crate) fn run(spec: &EventSpec<'_>, seed: u64, replication: u64) -> EventStats {
    let mut arr_rng = stream(seed, replication, Purpose::Arrivals);
    let mut svc_rng = stream(seed, replication, Purpose::Services);
    let mut sel_rng = stream(seed, replication, Purpose::Selection);
    let exp = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 { rng.sample(Exp1) };

    let mut stats = EventStats::default();
    let mut profile = spec.profile.filter(|e| e.len() >= 2).map(|edges| {
        stats.profile_busy = vec![0.0; edges.len() - 1];
        stats.profile_time = vec![0.0; edges.len() - 1];
        Profile { edges, cursor: 0 }
    });

    let mut t = 0.0f64;
    let mut level = spec.servers.level_at(0.0);
    let mut busy = spec.initial.min(level);
    // (arrival time, counts towards statistics)
    let mut queue: VecDeque<(f64, bool)> = (busy..spec.initial).map(|_| (0.0, false)).collect();

    let mut arrival_idx = 0usize;
    let mut next_arrival = match spec.arrivals {
        Arrivals::Poisson(rate) => exp(&mut arr_rng) / rate,
        Arrivals::Times(ts) => ts.first().copied().unwrap_or(f64::INFINITY),
    };
    let t_end = match spec.stop {
        Stop::Time(h) => h,
        Stop::Arrivals(_) => f64::INFINITY,
    };
    let record = |stats: &mut EventStats, t: f64, n: usize, level: u64| {
        stats.path_times.push(t);
        stats.path_counts.push(n as f64);
        stats.path_levels.push(level as f64);
    };
    if spec.record_path {
        record(&mut stats, 0.0, busy as usize + queue.len(), level);
    }

    loop {
        let waiting = queue.len();
        let out_rate = spec.mu * busy as f64 + spec.theta * waiting as f64;
        let t_dep = if out_rate > 0.0 {
            t + exp(&mut svc_rng) / out_rate
        } else {
            f64::INFINITY
        };
        let t_lvl = spec.servers.next_change(t);
        let t_next = next_arrival.min(t_dep).min(t_lvl);
        let t1 = t_next.min(t_end);

        let n = busy + waiting as u64;
        if t1 > spec.warmup {
            let dt = t1 - t.max(spec.warmup);
            stats.observed += dt;
            stats.queue_area += waiting as f64 * dt;
            if n == 0 {
                stats.time_empty += dt;
            }
            if n > level {
                stats.time_above += dt;
            }
        }
        if let Some(p) = profile.as_mut() {
            p.add(&mut stats.profile_busy, &mut stats.profile_time, t, t1, busy >= level);
        }
        if t_next >= t_end {
            if spec.record_path {
                record(&mut stats, t_end, n as usize, level);
            }
            break;
        }
        t = t_next;

        if t_next == next_arrival {
            let counted = t >= spec.warmup;
            if counted {
                stats.arrivals += 1;
            }
            if spec.capacity.is_some_and(|cap| n >= cap) {
                if counted {
                    stats.blocked += 1;
                }
            } else {
                if counted {
                    stats.admitted += 1;
                }
                if busy < level {
                    busy += 1;
                    if counted {
                        stats.wait_count += 1;
                    }
                } else {
                    queue.push_back((t, counted));
                    if counted {
                        stats.delayed += 1;
                    }
                }
            }
            next_arrival = match spec.arrivals {
                Arrivals::Poisson(rate) => t + exp(&mut arr_rng) / rate,
                Arrivals::Times(ts) => {
                    arrival_idx += 1;
                    ts.get(arrival_idx).copied().unwrap_or(f64::INFINITY)
                }
            };
        } else if t_next == t_lvl {
            level = spec.servers.level_at(t);
        } else {
            let service = sel_rng.random::<f64>() * out_rate < spec.mu * busy as f64;
            if service {
                busy -= 1;
            } else {
                let victim = sel_rng.random_range(0..waiting);
                if let Some((_, true)) = queue.remove(victim) {
                    stats.abandoned += 1;
                }
            }
        }
        while busy < level {
            let Some((arrived, counted)) = queue.pop_front() else { break };
            busy += 1;
            if counted {
                stats.wait_sum += t - arrived;
                stats.wait_count += 1;
            }
        }
        if spec.record_path {
            record(&mut stats, t, busy as usize + queue.len(), level);
        }
        if let Stop::Arrivals(limit) = spec.stop {
            if stats.arrivals >= limit {
                break;
            }
        }
    }
    stats
}
