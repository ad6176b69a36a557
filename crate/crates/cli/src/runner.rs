use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use twostage_core::algorithms::{
    dal_run, ial_precompute, ial_run, AlgoKind, EpisodeLog, IalPrecomputation,
};
use twostage_core::benchmark::{fluid_opt, hindsight_opt, report};
use twostage_core::model::{validate_instance, FirstStageSet, ProblemInstance};
use twostage_core::scenarios::{make_experiment, Scenario};

use crate::config::{BenchmarkMode, RunConfig};
use crate::error::CliError;

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub replication: u64,
    pub algorithm: String,
    pub case: String,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub alg_value: f64,
    pub benchmark_value: f64,
    pub regret: f64,
    pub relative_regret: Option<f64>,
    pub max_violation: f64,
    pub tau: usize,
    #[serde(rename = "W_theta")]
    pub w_theta: Option<usize>,
    pub wall_ms: u64,
}

pub struct Episode {
    pub algorithm: String,
    pub replication: u64,
    pub log: EpisodeLog,
}

pub struct RunOutput {
    /// Rows per benchmark; the first set goes to `summary.csv`.
    pub summaries: Vec<(&'static str, Vec<SummaryRow>)>,
    pub episodes: Vec<Episode>,
    pub beta: Vec<f64>,
}

fn check_algorithm(kind: AlgoKind, inst: &ProblemInstance) -> Result<(), CliError> {
    let finite = matches!(inst.first_stage_set, FirstStageSet::Finite { .. });
    let wants_finite = matches!(kind, AlgoKind::IalFiniteC | AlgoKind::DalFiniteC);
    if finite != wants_finite {
        return Err(CliError::Config(format!(
            "algorithm `{}` does not match a {} first-stage set",
            kind.name(),
            if finite { "finite" } else { "box" }
        )));
    }
    Ok(())
}

fn run_one(
    kind: AlgoKind,
    scenario: &Scenario,
    pre: Option<&IalPrecomputation>,
    cfg: &RunConfig,
    rep: u64,
    stream: &twostage_core::scenarios::RealizedStream,
) -> Result<(EpisodeLog, u64), CliError> {
    let inst = &scenario.instance;
    let start = Instant::now();
    let log = match kind {
        AlgoKind::Ial | AlgoKind::IalFiniteC => ial_run(
            inst,
            pre.expect("precomputed for IAL"),
            stream.as_stream(),
            &cfg.algo,
            cfg.seed,
            rep,
        )?,
        AlgoKind::Dal | AlgoKind::DalFiniteC => {
            dal_run(inst, stream.as_stream(), &cfg.algo, cfg.seed, rep)?
        }
    };
    let wall = if cfg.record_wall_ms {
        start.elapsed().as_millis() as u64
    } else {
        0
    };
    Ok((log, wall))
}

/// Runs every replication and algorithm; nothing is written here.
pub fn execute(cfg: &RunConfig, progress: bool) -> Result<RunOutput, CliError> {
    let scenario = make_experiment(&cfg.scenario)?;
    let inst = &scenario.instance;
    for kind in &cfg.algorithms {
        check_algorithm(*kind, inst)?;
    }
    if progress {
        for v in validate_instance(inst) {
            eprintln!("note: {} ({})", v.clause, v.detail);
        }
    }
    let needs_ial = cfg
        .algorithms
        .iter()
        .any(|k| matches!(k, AlgoKind::Ial | AlgoKind::IalFiniteC));
    let pre = if needs_ial {
        Some(ial_precompute(inst, &cfg.algo)?)
    } else {
        None
    };
    let fluid = match cfg.benchmark {
        BenchmarkMode::Hindsight => None,
        _ => Some(
            fluid_opt(
                inst,
                &inst.distribution,
                cfg.fluid_samples,
                cfg.seed,
                cfg.algo.dual_solver,
                &cfg.algo.search,
            )?
            .value,
        ),
    };
    let hindsight = cfg.benchmark != BenchmarkMode::Fluid;
    let case = cfg.scenario.case.label().to_string();
    let w_t = (cfg.scenario.w_t > 0.0).then_some(cfg.scenario.w_t);

    let threads = if cfg.parallelism == 0 {
        rayon::current_num_threads()
    } else {
        cfg.parallelism
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    type RepResult = (Vec<(SummaryRow, Option<SummaryRow>)>, Vec<Episode>);
    let per_rep: Vec<Result<RepResult, CliError>> = pool.install(|| {
        (0..cfg.reps as u64)
            .into_par_iter()
            .map(|rep| {
                let stream = scenario.realize(cfg.seed, rep)?;
                let hv = if hindsight {
                    Some(hindsight_opt(&stream.types, inst, &cfg.hindsight)?.value)
                } else {
                    None
                };
                let mut rows = Vec::new();
                let mut episodes = Vec::new();
                for &kind in &cfg.algorithms {
                    let (log, wall_ms) = run_one(kind, &scenario, pre.as_ref(), cfg, rep, &stream)?;
                    let row = |bench: f64| -> Result<SummaryRow, CliError> {
                        let r = report(&log, bench, inst, w_t)?;
                        Ok(SummaryRow {
                            replication: rep,
                            algorithm: log.algorithm.name().to_string(),
                            case: case.clone(),
                            horizon: inst.horizon,
                            alg_value: r.algorithm_value,
                            benchmark_value: r.benchmark_value,
                            regret: r.regret,
                            relative_regret: r.relative_regret,
                            max_violation: r.max_violation,
                            tau: log.tau,
                            w_theta: stream.w_theta,
                            wall_ms,
                        })
                    };
                    let (primary, secondary) = match (fluid, hv) {
                        (Some(f), Some(h)) => (row(f)?, Some(row(h)?)),
                        (Some(f), None) => (row(f)?, None),
                        (None, Some(h)) => (row(h)?, None),
                        (None, None) => unreachable!("some benchmark is always selected"),
                    };
                    rows.push((primary, secondary));
                    if cfg.dump_trajectories {
                        episodes.push(Episode {
                            algorithm: log.algorithm.name().to_string(),
                            replication: rep,
                            log,
                        });
                    }
                }
                if progress {
                    eprintln!("replication {} done", rep + 1);
                }
                Ok((rows, episodes))
            })
            .collect()
    });

    let mut primary = Vec::new();
    let mut secondary = Vec::new();
    let mut episodes = Vec::new();
    for res in per_rep {
        let (rows, eps) = res?;
        for (p, s) in rows {
            primary.push(p);
            secondary.extend(s);
        }
        episodes.extend(eps);
    }
    let summaries = match cfg.benchmark {
        BenchmarkMode::Fluid => vec![("fluid", primary)],
        BenchmarkMode::Hindsight => vec![("hindsight", primary)],
        BenchmarkMode::Both => vec![("fluid", primary), ("hindsight", secondary)],
    };
    Ok(RunOutput {
        summaries,
        episodes,
        beta: inst.beta.clone(),
    })
}
