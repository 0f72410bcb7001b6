//! Per-event dispatch overhead across an increasing number of deployed
//! modules.
//!
//! Each configuration is timed over repeated in-memory scenario runs
//! against the enforcement-off baseline. Wall-clock numbers vary by host;
//! what the harness pins down is the relative growth as modules are added.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::Serialize;

use crate::engine::Session;
use crate::model::EnforcementModel;
use crate::spec_io::ApiCatalog;

use super::{run_with_session, session_config, Scenario, SimError};

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub n_modules: usize,
    pub mean_us_per_event: f64,
    pub overhead_pct: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub scenario: String,
    pub repetitions: usize,
    pub events_per_run: usize,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n_modules,mean_us_per_event,overhead_pct\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.4},{:.2}\n",
                r.n_modules, r.mean_us_per_event, r.overhead_pct
            ));
        }
        out
    }

    pub fn overhead_for(&self, n_modules: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.n_modules == n_modules).map(|r| r.overhead_pct)
    }
}

/// Clones the base models round-robin into `n` distinctly named variants.
pub fn replicate_models(base: &[EnforcementModel], n: usize) -> Vec<EnforcementModel> {
    (0..n)
        .map(|i| {
            let mut m = base[i % base.len()].clone();
            m.name = format!("{}Rep{i:02}", m.name);
            m
        })
        .collect()
}

/// Measures mean per-event dispatch time for 0..=`max_modules` deployed
/// modules on one scenario. The row for n=0 is the enforcement-off
/// baseline, overhead 0 by definition. Measurement order is shuffled by
/// `seed` so slow host drift does not bias one configuration.
pub fn bench_overhead(
    scenario: &Scenario,
    base_models: &[EnforcementModel],
    catalog: &ApiCatalog,
    max_modules: usize,
    repetitions: usize,
    seed: u64,
) -> Result<BenchReport, SimError> {
    if base_models.is_empty() {
        return Err(SimError::Scenario("bench needs at least one base model".to_string()));
    }
    let reps = repetitions.max(1);

    let mut sessions: BTreeMap<usize, Session> = BTreeMap::new();
    for n in 1..=max_modules {
        let models = replicate_models(base_models, n);
        sessions.insert(n, Session::new(models, session_config(scenario, catalog))?);
    }

    let probe = run_with_session(scenario, catalog, None)?;
    let events_per_run = probe.trace_in.len().max(1);

    // size each timing cell to a few milliseconds so Instant resolution
    // and scheduler noise stay negligible
    let t0 = Instant::now();
    run_with_session(scenario, catalog, None)?;
    let one = t0.elapsed().as_secs_f64().max(1e-7);
    let iters = ((2e-3 / one).ceil() as usize).clamp(8, 20_000);

    let mut cells: Vec<(usize, usize)> = Vec::new();
    for n in 0..=max_modules {
        for rep in 0..reps {
            cells.push((n, rep));
        }
    }
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    cells.shuffle(&mut rng);

    let mut samples: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (n, _rep) in cells {
        let start = Instant::now();
        if n == 0 {
            for _ in 0..iters {
                run_with_session(scenario, catalog, None)?;
            }
        } else {
            let session = sessions.get_mut(&n).expect("session prepared");
            for _ in 0..iters {
                run_with_session(scenario, catalog, Some(session))?;
            }
        }
        let us_per_event =
            start.elapsed().as_secs_f64() * 1e6 / (iters as f64 * events_per_run as f64);
        samples.entry(n).or_default().push(us_per_event);
    }

    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let baseline = mean(&samples[&0]);
    let rows = samples
        .iter()
        .map(|(n, xs)| {
            let m = mean(xs);
            BenchRow {
                n_modules: *n,
                mean_us_per_event: m,
                overhead_pct: if *n == 0 { 0.0 } else { (m - baseline) / baseline * 100.0 },
            }
        })
        .collect();
    Ok(BenchReport { scenario: scenario.name.clone(), repetitions: reps, events_per_run, rows })
}
