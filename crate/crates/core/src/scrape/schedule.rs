use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

/// One planned page fetch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchTask {
    pub url: String,
    pub worker: usize,
    /// Earliest dispatch time relative to the start of the run.
    pub dispatch_offset: Duration,
}

/// Round-robin plan: url `i` goes to worker `i % workers` at
/// `(i / workers) * min_delay`. A worker count of zero is treated as one.
pub fn schedule_fetches<S: AsRef<str>>(urls: &[S], workers: usize, min_delay: Duration) -> Vec<FetchTask> {
    let workers = workers.max(1);
    urls.iter()
        .enumerate()
        .map(|(i, url)| FetchTask {
            url: url.as_ref().to_string(),
            worker: i % workers,
            dispatch_offset: min_delay * u32::try_from(i / workers).unwrap_or(u32::MAX),
        })
        .collect()
}

pub trait Clock {
    /// Time since the run started.
    fn now(&self) -> Duration;
    fn sleep_until(&mut self, t: Duration);
}

/// Time that only moves when slept on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VirtualClock {
    now: Duration,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> Duration {
        self.now
    }

    fn sleep_until(&mut self, t: Duration) {
        self.now = self.now.max(t);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SystemClock {
    start: Instant,
}

impl SystemClock {
    pub fn starting_at(start: Instant) -> Self {
        Self { start }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.start.elapsed()
    }

    fn sleep_until(&mut self, t: Duration) {
        let now = self.now();
        if t > now {
            thread::sleep(t - now);
        }
    }
}

/// A task as it actually went out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dispatch<R> {
    /// Position of the task in the plan.
    pub index: usize,
    pub task: FetchTask,
    pub at: Duration,
    pub result: R,
}

/// Runs one worker's tasks in order. Each dispatch waits for both its planned
/// offset and `min_delay` after the previous dispatch, so slow fetches never
/// compress the spacing. `latency` advances the clock after each fetch.
fn run_worker<C, R>(
    clock: &mut C,
    tasks: &[(usize, &FetchTask)],
    min_delay: Duration,
    latency: &dyn Fn(&FetchTask) -> Duration,
    fetch: &mut dyn FnMut(&FetchTask) -> R,
) -> Vec<Dispatch<R>>
where
    C: Clock,
{
    let mut last: Option<Duration> = None;
    let mut out = Vec::with_capacity(tasks.len());
    for &(index, task) in tasks {
        let target = match last {
            Some(prev) => task.dispatch_offset.max(prev + min_delay),
            None => task.dispatch_offset,
        };
        clock.sleep_until(target);
        let at = clock.now();
        last = Some(at);
        let result = fetch(task);
        let done = clock.now() + latency(task);
        clock.sleep_until(done);
        out.push(Dispatch {
            index,
            task: task.clone(),
            at,
            result,
        });
    }
    out
}

fn by_worker(plan: &[FetchTask]) -> Vec<Vec<(usize, &FetchTask)>> {
    let n = plan.iter().map(|t| t.worker + 1).max().unwrap_or(0);
    let mut groups = vec![Vec::new(); n];
    for (i, t) in plan.iter().enumerate() {
        groups[t.worker].push((i, t));
    }
    groups
}

fn sorted<R>(mut all: Vec<Dispatch<R>>) -> Vec<Dispatch<R>> {
    all.sort_by_key(|d| (d.at, d.task.worker, d.index));
    all
}

/// Single-threaded execution against per-worker virtual clocks.
/// Dispatches come back ordered by `(at, worker)`.
pub fn execute_plan<R>(
    plan: &[FetchTask],
    min_delay: Duration,
    latency: impl Fn(&FetchTask) -> Duration,
    mut fetch: impl FnMut(&FetchTask) -> R,
) -> Vec<Dispatch<R>> {
    let mut all = Vec::with_capacity(plan.len());
    for tasks in by_worker(plan) {
        let mut clock = VirtualClock::new();
        all.extend(run_worker(&mut clock, &tasks, min_delay, &latency, &mut fetch));
    }
    sorted(all)
}

/// One thread per worker against the wall clock.
pub fn execute_plan_threaded<R, F>(plan: &[FetchTask], min_delay: Duration, fetch: &F) -> Vec<Dispatch<R>>
where
    R: Send,
    F: Fn(&FetchTask) -> R + Sync,
{
    let start = Instant::now();
    let results = Mutex::new(Vec::with_capacity(plan.len()));
    let groups = by_worker(plan);
    thread::scope(|s| {
        for tasks in &groups {
            let results = &results;
            s.spawn(move || {
                let mut clock = SystemClock::starting_at(start);
                let mut call = |t: &FetchTask| fetch(t);
                let done = run_worker(&mut clock, tasks, min_delay, &|_| Duration::ZERO, &mut call);
                results.lock().expect("result lock").extend(done);
            });
        }
    });
    sorted(results.into_inner().expect("result lock"))
}
