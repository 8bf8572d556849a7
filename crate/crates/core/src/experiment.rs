//! Orchestration of cases x drops.
//!
//! Infrastructure is built once; each drop re-drops UEs and re-samples
//! shadowing from a per-drop seed, and the link table of a drop is shared by
//! all cases. Drops run on the rayon pool and are merged in drop order, so
//! results do not depend on the number of worker threads.

use rayon::prelude::*;

use crate::association::LinkTable;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::metrics::MetricStore;
use crate::propagation::mix_seed;
use crate::scheduler::{run_drop_with, DropContext, RelayCase};
use crate::topology::{build_infrastructure, GridScene};

/// Seed of drop `drop` of an experiment seeded with `seed`.
pub fn drop_seed(seed: u64, drop: usize) -> u64 {
    mix_seed(&[seed, drop as u64])
}

/// Infrastructure-only scene for a configuration.
pub fn base_scene(cfg: &ScenarioConfig) -> Result<GridScene> {
    Ok(GridScene {
        spec: cfg.grid.clone(),
        nodes: build_infrastructure(&cfg.grid)?,
        ues: Vec::new(),
    })
}

fn run_one_drop(
    cfg: &ScenarioConfig,
    base: &GridScene,
    cases: &[RelayCase],
    drop: usize,
) -> Result<Vec<MetricStore>> {
    let seed = drop_seed(cfg.seed, drop);
    let scene = base.with_ues(seed);
    let links = LinkTable::build(&scene, &cfg.radio, seed).map_err(|e| Error::Drop {
        case: "all".into(),
        drop,
        source: Box::new(e),
    })?;
    let law = cfg.capacity_law();
    Ok(cases
        .iter()
        .map(|case| {
            let mut ctx = DropContext::new(
                &scene,
                &links,
                &cfg.radio,
                case.profile(&cfg.relay),
                law,
                seed,
            );
            ctx.interference = cfg.interference;
            let store = run_drop_with(&ctx, cfg.slots);
            log::debug!(
                "drop {drop} {case}: {} of {} UEs indirect",
                store.indirect_count,
                store.ue_count
            );
            store
        })
        .collect())
}

/// Runs every case over `cfg.drops` drops on the current rayon pool.
pub fn run_experiment(
    cfg: &ScenarioConfig,
    cases: &[RelayCase],
) -> Result<Vec<(RelayCase, MetricStore)>> {
    cfg.validate()?;
    let base = base_scene(cfg)?;
    log::info!(
        "{} gNBs, {} relays, {} UEs per drop, {} drops x {} slots, cases: {}",
        base.gnb_count(),
        base.relay_count(),
        cfg.grid.ue_count,
        cfg.drops,
        cfg.slots,
        cases.iter().map(|c| c.name()).collect::<Vec<_>>().join(",")
    );
    let per_drop: Vec<Vec<MetricStore>> = (0..cfg.drops)
        .into_par_iter()
        .map(|d| run_one_drop(cfg, &base, cases, d))
        .collect::<Result<_>>()?;

    let mut out: Vec<(RelayCase, MetricStore)> =
        cases.iter().map(|&c| (c, MetricStore::default())).collect();
    for stores in per_drop {
        for ((_, acc), store) in out.iter_mut().zip(stores) {
            acc.merge(store);
        }
    }
    Ok(out)
}

/// Same as [`run_experiment`] on a dedicated pool of `threads` workers.
pub fn run_experiment_on(
    cfg: &ScenarioConfig,
    cases: &[RelayCase],
    threads: usize,
) -> Result<Vec<(RelayCase, MetricStore)>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_experiment(cfg, cases))
}
