//! One function per subcommand. Each parses its config, applies the seed
//! override, echoes the effective config and writes its results.

use std::path::Path;

use gradcomp::cgd::{run_cgd, CgdConfig};
use gradcomp::classes::{table1, verify_membership, ClassParams, VectorSampler};
use gradcomp::compressors::{Compressor, CompressorSpec};
use gradcomp::distributed::{run_dcgd_naive, run_ef_sgd, EfConfig, NaiveConfig, NoiseModel, ScheduleKind};
use gradcomp::problems::{counterexample_general, example1};
use gradcomp::stats::{
    curve_csv, empirical_savings, expected_savings, table2, table2_csv, variance_bits_curve, Distribution,
    gaussian_top_k_savings, OrderMode, SavingsReport, Table2Cell, TABLE2_DIMS, TABLE2_KS,
};
use gradcomp::trace::{csv_string, fmt_f64};
use gradcomp::DenseVector;
use log::info;
use serde::Serialize;

use crate::config::*;
use crate::output::{Provenance, RunDir};
use crate::Status;

pub struct Args<'a> {
    pub name: &'static str,
    pub text: &'a str,
    pub seed: Option<u64>,
    pub out: &'a Path,
}

fn setup<C: Config>(args: &Args) -> anyhow::Result<(C, RunDir)> {
    let mut cfg = C::parse(args.text)?;
    if let Some(seed) = args.seed {
        *cfg.seed_mut() = seed;
    }
    let text = cfg.to_text();
    let seed = *cfg.seed_mut();
    let dir = RunDir::create(args.out, Provenance::new(args.name, &text, seed), &text)?;
    println!("{}", dir.provenance.header());
    Ok((cfg, dir))
}

fn file_stem(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' }).collect()
}

#[derive(Serialize)]
struct ClaimOutcome {
    operator: String,
    claimed: String,
    estimated: Option<String>,
    violations: usize,
    report: String,
}

pub fn verify(args: &Args) -> anyhow::Result<Status> {
    let (cfg, dir): (VerifyConfig, _) = setup(args)?;
    let claims: Vec<(String, Compressor, ClassParams)> = if cfg.operators.is_empty() {
        table1(cfg.dim)
            .into_iter()
            .flat_map(|row| {
                row.claims.iter().map(|c| (row.name.to_string(), row.compressor_for(c), c.params)).collect::<Vec<_>>()
            })
            .collect()
    } else {
        cfg.operators.iter().map(|o| (o.name.clone(), o.compressor.clone(), o.claim)).collect()
    };
    let sampler = VectorSampler::default_for(cfg.dim, cfg.n_vectors);
    let mut outcomes = Vec::with_capacity(claims.len());
    for (i, (name, compressor, claim)) in claims.iter().enumerate() {
        let report = verify_membership(compressor, claim, &sampler, cfg.expectation, cfg.seed)?;
        let file = format!("reports/{i:02}_{}_{:?}.json", file_stem(name), claim.tag());
        dir.write(&file, &(report.to_json() + "\n"))?;
        let status = if report.passed() { "ok" } else { "VIOLATED" };
        println!("{status:>8}  {name:<28} {claim}  ({} violations)", report.violations);
        outcomes.push(ClaimOutcome {
            operator: name.clone(),
            claimed: claim.to_string(),
            estimated: report.estimated.map(|p| p.to_string()),
            violations: report.violations,
            report: file,
        });
    }
    let violated = outcomes.iter().filter(|o| o.violations > 0).count();
    #[derive(Serialize)]
    struct Summary<'a> {
        claims: usize,
        violated: usize,
        outcomes: &'a [ClaimOutcome],
    }
    dir.write_summary(&Summary { claims: outcomes.len(), violated, outcomes: &outcomes })?;
    println!("{} claims, {violated} violated", outcomes.len());
    Ok(if violated == 0 { Status::Ok } else { Status::Violation })
}

pub fn cgd(args: &Args) -> anyhow::Result<Status> {
    let (cfg, dir): (CgdCliConfig, _) = setup(args)?;
    let problem = cfg.problem.build()?;
    let mut run = CgdConfig::new(cfg.step, cfg.iterations).with_seed(cfg.seed);
    run.class_params = cfg.class;
    run.x0 = cfg.x0.clone();
    let trace = run_cgd(&*problem.aggregate, &cfg.compressor, &run)?;
    dir.write("trace.csv", &trace.to_csv())?;
    dir.write("trace.json", &(trace.to_json() + "\n"))?;
    let last = trace.records.last().expect("a trace has the initial row");
    #[derive(Serialize)]
    struct Summary {
        operator: String,
        step_size: String,
        iterations_run: usize,
        final_f_gap: String,
        first_below_1e_6: Option<usize>,
        bits_cumulative: u64,
        diverged: bool,
    }
    dir.write_summary(&Summary {
        operator: trace.operator.clone(),
        step_size: fmt_f64(trace.step_size),
        iterations_run: last.k,
        final_f_gap: fmt_f64(last.f_gap),
        first_below_1e_6: trace.first_below(1e-6),
        bits_cumulative: last.bits_cumulative,
        diverged: trace.diverged,
    })?;
    println!("{}: f_gap {} after {} iterations", trace.operator, fmt_f64(last.f_gap), last.k);
    Ok(if trace.diverged { Status::Diverged } else { Status::Ok })
}

fn start_point(x0: &Option<DenseVector>, start: f64, dim: usize) -> DenseVector {
    x0.clone().unwrap_or_else(|| DenseVector::filled(dim, start))
}

pub fn distributed(args: &Args) -> anyhow::Result<Status> {
    let (cfg, dir): (DistributedCliConfig, _) = setup(args)?;
    let problem = cfg.problem.build()?;
    let x0 = start_point(&cfg.x0, cfg.start, problem.dim());
    #[derive(Serialize)]
    struct Summary {
        mode: &'static str,
        operator: String,
        n: usize,
        iterations_run: usize,
        final_f_gap_iterate: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        final_f_gap_ergodic: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        max_virtual_residual: Option<String>,
        bits_cumulative: u64,
        diverged: bool,
    }
    let summary = if cfg.naive {
        let eta = cfg.eta.ok_or_else(|| anyhow::anyhow!("naive runs need an explicit eta"))?;
        let run = NaiveConfig { eta, iterations: cfg.k, seed: cfg.seed, x0: Some(x0), store_iterates: false };
        let trace = run_dcgd_naive(&problem, &cfg.compressor, &run)?;
        dir.write("trace.csv", &trace.to_csv())?;
        dir.write("trace.json", &(trace.to_json() + "\n"))?;
        let last = trace.records.last().expect("a trace has the initial row");
        Summary {
            mode: "naive",
            operator: trace.operator.clone(),
            n: problem.n(),
            iterations_run: last.k,
            final_f_gap_iterate: fmt_f64(last.f_gap),
            final_f_gap_ergodic: None,
            max_virtual_residual: None,
            bits_cumulative: last.bits_cumulative,
            diverged: trace.diverged,
        }
    } else {
        let kind = ScheduleKind::from_number(cfg.schedule_kind)?;
        let mut run = EfConfig::new(kind, NoiseModel::new(cfg.b, cfg.c)?, cfg.k);
        run.eta = cfg.eta;
        run.seed = cfg.seed;
        run.x0 = Some(x0);
        let trace = run_ef_sgd(&problem, &cfg.compressor, &cfg.class, &run)?;
        dir.write("trace.csv", &trace.to_csv())?;
        dir.write("trace.json", &(trace.to_json() + "\n"))?;
        let last = trace.last();
        Summary {
            mode: "error_feedback",
            operator: trace.effective_operator.clone(),
            n: trace.n,
            iterations_run: last.k,
            final_f_gap_iterate: fmt_f64(last.f_gap_iterate),
            final_f_gap_ergodic: Some(fmt_f64(last.f_gap_ergodic)),
            max_virtual_residual: Some(fmt_f64(trace.max_virtual_residual())),
            bits_cumulative: last.bits_cumulative,
            diverged: trace.diverged,
        }
    };
    println!(
        "{} ({}, n = {}): f_gap {} after {} rounds{}",
        summary.operator,
        summary.mode,
        summary.n,
        summary.final_f_gap_iterate,
        summary.iterations_run,
        if summary.diverged { ", diverged" } else { "" }
    );
    let diverged = summary.diverged;
    dir.write_summary(&summary)?;
    Ok(if diverged { Status::Diverged } else { Status::Ok })
}

pub fn counterexample(args: &Args) -> anyhow::Result<Status> {
    let (cfg, dir): (CounterexampleConfig, _) = setup(args)?;
    let (problem, d1, predicted) = match cfg.family {
        Family::Example1 => (example1()?, 1, 1.0 + 11.0 * cfg.eta / 6.0),
        Family::Subsets => {
            let ce = counterexample_general(cfg.dim, cfg.d1)?;
            let f = ce.divergence_factor(cfg.eta);
            (ce.objective, cfg.d1, f)
        }
    };
    let x0 = DenseVector::filled(problem.dim(), cfg.start);
    let run = NaiveConfig { eta: cfg.eta, iterations: cfg.iterations, seed: cfg.seed, x0: Some(x0.clone()), store_iterates: true };
    let top = Compressor::new(CompressorSpec::TopK { k: d1 });
    let trace = run_dcgd_naive(&problem, &top, &run)?;
    let iterates = trace.iterates.as_ref().expect("iterates were requested");
    let steps = iterates.len() - 1;
    anyhow::ensure!(steps > 0 && !x0.is_zero(), "need at least one step from a nonzero start");
    let observed = (iterates[steps].norm2() / x0.norm2()).powf(1.0 / steps as f64);
    let max_rel_error = iterates
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let want = x0.scaled(predicted.powi(k as i32));
            x.sub(&want).norm2() / want.norm2()
        })
        .fold(0.0, f64::max);
    dir.write("trace.csv", &trace.to_csv())?;
    println!("predicted factor {predicted:.12}");
    println!("observed factor  {observed:.12}");
    println!("max relative deviation from the closed form over {steps} steps: {max_rel_error:.3e}");
    #[derive(Serialize)]
    struct Summary {
        n: usize,
        dim: usize,
        eta: String,
        steps: usize,
        predicted_factor: String,
        observed_factor: String,
        max_rel_error: String,
        diverged: bool,
    }
    dir.write_summary(&Summary {
        n: problem.n(),
        dim: problem.dim(),
        eta: fmt_f64(cfg.eta),
        steps,
        predicted_factor: fmt_f64(predicted),
        observed_factor: fmt_f64(observed),
        max_rel_error: fmt_f64(max_rel_error),
        diverged: trace.diverged,
    })?;
    // Divergence is the expected outcome here.
    Ok(Status::Ok)
}

/// Rows s_rnd and s_top per distribution, columns k × d, two decimals.
fn table2_layout(cells: &[Table2Cell]) -> String {
    let mut header = vec!["distribution".to_string(), "saving".to_string()];
    for k in TABLE2_KS {
        for d in TABLE2_DIMS {
            header.push(format!("top{k}_d{d}"));
        }
    }
    let mut labels: Vec<String> = Vec::new();
    for c in cells {
        let l = c.distribution.label();
        if !labels.contains(&l) {
            labels.push(l);
        }
    }
    let rows = labels.iter().flat_map(|label| {
        let of = |pick: fn(&Table2Cell) -> f64| {
            let mut row = vec![label.clone(), String::new()];
            for k in TABLE2_KS {
                for d in TABLE2_DIMS {
                    let c = cells.iter().find(|c| &c.distribution.label() == label && c.k == k && c.d == d);
                    row.push(c.map_or(String::new(), |c| format!("{:.2}", pick(c))));
                }
            }
            row
        };
        let mut rnd = of(|c| c.s_rnd);
        rnd[1] = "s_rnd".into();
        let mut top = of(|c| c.s_top);
        top[1] = "s_top".into();
        [rnd, top]
    });
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    csv_string(&header, rows)
}

pub fn stats(args: &Args) -> anyhow::Result<Status> {
    let (cfg, dir): (StatsConfig, _) = setup(args)?;
    match cfg.table {
        StatsTable::Table2 => {
            let cells = table2(cfg.order)?;
            let layout = table2_layout(&cells);
            dir.write("table2.csv", &layout)?;
            dir.write("table2_long.csv", &table2_csv(&cells))?;
            print!("{layout}");
            #[derive(Serialize)]
            struct Summary {
                cells: usize,
                order: OrderMode,
            }
            dir.write_summary(&Summary { cells: cells.len(), order: cfg.order })?;
        }
        StatsTable::Savings => {
            let report = match (cfg.n_mc, cfg.distribution) {
                (Some(n), dist) => empirical_savings(dist, cfg.d, cfg.k, n, cfg.seed)?,
                (None, dist @ Distribution::Gaussian { mean, sigma }) if cfg.order == OrderMode::Signed => {
                    let mut r = expected_savings(dist, cfg.d, cfg.k)?;
                    r.s_top = gaussian_top_k_savings(cfg.d, cfg.k, mean, sigma, OrderMode::Signed)?;
                    r.omega_top = r.energy - r.s_top;
                    r
                }
                (None, dist) => expected_savings(dist, cfg.d, cfg.k)?,
            };
            let csv = csv_string(&SavingsReport::CSV_HEADER, std::iter::once(report.csv_row()));
            dir.write("savings.csv", &csv)?;
            print!("{csv}");
            println!("variance ratio {:.6}, saving ratio {:.6}", report.variance_ratio(), report.saving_ratio());
            dir.write_summary(&report)?;
        }
    }
    Ok(Status::Ok)
}

pub fn bench_bits(args: &Args) -> anyhow::Result<Status> {
    let (cfg, dir): (BenchBitsConfig, _) = setup(args)?;
    let operators = if cfg.operators.is_empty() { default_sweep(cfg.dim) } else { cfg.operators.clone() };
    info!("{} operators at d = {}", operators.len(), cfg.dim);
    let points = variance_bits_curve(&operators, cfg.dim, cfg.n_vectors, cfg.seed)?;
    dir.write("curve.csv", &curve_csv(&points))?;
    for p in &points {
        println!("{:<36} {:>8.3} bits/coord  variance {:.4}", p.operator, p.bits_per_coord, p.normalized_variance);
    }
    #[derive(Serialize)]
    struct Summary {
        operators: usize,
        dim: usize,
    }
    dir.write_summary(&Summary { operators: points.len(), dim: cfg.dim })?;
    Ok(Status::Ok)
}
