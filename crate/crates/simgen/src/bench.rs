//! Thread-pooled driver for the generalisability experiment.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use simgen_core::analysis::experiment::{aggregate, cells, check_settings, run_trial};
use simgen_core::analysis::{DegradationTable, ExperimentSettings};
use simgen_core::{Result, SimulationConfig};

pub const THREADS_VAR: &str = "SIMGEN_THREADS";

/// Worker count from `SIMGEN_THREADS`; unset, empty or unparsable means 1.
pub fn thread_count_from(value: Option<&str>) -> usize {
    value
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(1)
}

pub fn thread_count() -> usize {
    thread_count_from(std::env::var(THREADS_VAR).ok().as_deref())
}

/// Run every (grid value, trial) cell on up to `threads` workers.
///
/// Each cell derives its own seeds, and records are aggregated in canonical
/// order, so the table does not depend on `threads`. The first error in
/// canonical order is returned.
pub fn run_experiment(
    base: &SimulationConfig,
    settings: &ExperimentSettings,
    threads: usize,
) -> Result<DegradationTable> {
    check_settings(base, settings)?;
    let work = cells(settings);
    let slots: Vec<Mutex<Option<Result<_>>>> = work.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = threads.clamp(1, work.len().max(1));

    let job = || loop {
        let k = next.fetch_add(1, Ordering::Relaxed);
        let Some(&(sd, trial)) = work.get(k) else {
            break;
        };
        let result = run_trial(base, settings, sd, trial);
        *slots[k].lock().unwrap() = Some(result);
    };
    if workers == 1 {
        job();
    } else {
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(job);
            }
        });
    }

    let mut records = Vec::new();
    for slot in slots {
        records.extend(slot.into_inner().unwrap().expect("every cell ran")?);
    }
    Ok(aggregate(settings, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_count_parsing() {
        assert_eq!(thread_count_from(None), 1);
        assert_eq!(thread_count_from(Some("")), 1);
        assert_eq!(thread_count_from(Some("0")), 1);
        assert_eq!(thread_count_from(Some("x")), 1);
        assert_eq!(thread_count_from(Some(" 4 ")), 4);
    }
}
