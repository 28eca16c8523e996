mod args;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use amdpkit::algorithms::{plan_with, run_plan, PlanOptions, PLAN_CONSTANT};
use amdpkit::experiments::{
    eps_sweep, svg_plot, tminorize_sweep, write_csv, EpsSweepConfig, ExperimentRecord, PlotSeries,
    SweepOutcome, TminorizeSweepConfig,
};
use amdpkit::{
    average_reward, hard_instance, mdp_ergodicity, optimal_average_reward, pmbp,
    random_ergodic_mdp, solve_bellman, GenerativeModel, HardInstanceSpec, Sizing, TabularMdp,
};

use args::{Cli, Command, Experiment, SweepAlgo, TMinorize};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GenInstance(a) => gen_instance(a),
        Command::Ergodicity(a) => ergodicity(a),
        Command::SolveDmdp(a) => solve_dmdp(a),
        Command::SolveAmdp(a) => solve_amdp(a),
        Command::Experiment(Experiment::EpsSweep(a)) => run_eps_sweep(a),
        Command::Experiment(Experiment::TminorizeSweep(a)) => run_tminorize_sweep(a),
    }
}

fn load_mdp(path: &Path) -> Result<TabularMdp> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let (mdp, warnings) = TabularMdp::from_json_reader(BufReader::new(file))
        .with_context(|| format!("cannot read MDP from {}", path.display()))?;
    // rows off by rounding only; the file itself is still accepted
    for w in warnings {
        log::info!("{w}");
    }
    Ok(mdp)
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn gen_instance(a: args::GenInstance) -> Result<()> {
    let mdp = match a.random_states {
        Some(states) => random_ergodic_mdp(states, a.actions, a.seed, a.min_prob)?,
        None => hard_instance(&HardInstanceSpec::calibrated(
            a.tminorize,
            a.kappa,
            a.actions,
        )?)?,
    };
    std::fs::write(&a.out, mdp.to_json() + "\n")
        .with_context(|| format!("cannot write {}", a.out.display()))?;
    println!(
        "wrote {} ({} states, {} actions)",
        a.out.display(),
        mdp.n_states(),
        mdp.n_actions()
    );
    Ok(())
}

fn ergodicity(a: args::Ergodicity) -> Result<()> {
    let mdp = load_mdp(&a.mdp)?;
    let report = mdp_ergodicity(&mdp, a.m_max)?;
    let mut value = serde_json::to_value(&report)?;
    value["sandwich_holds"] = json!(report.sandwich_holds());
    print_json(&value)
}

fn solve_dmdp(a: args::SolveDmdp) -> Result<()> {
    let mdp = load_mdp(&a.mdp)?;
    match a.n {
        None => {
            let sol = solve_bellman(&mdp, None, a.gamma, a.tol)?;
            print_json(&json!({
                "policy": sol.policy,
                "value": sol.value,
                "iterations": sol.iterations,
                "residual": sol.residual,
            }))
        }
        Some(n) => {
            let gm = GenerativeModel::new(mdp, a.seed);
            let learned = pmbp(&gm, a.gamma, a.zeta, n, a.seed, a.tol)?;
            print_json(&json!({
                "policy": learned.policy,
                "empirical_value": learned.empirical_value,
                "samples_used": learned.samples_used,
                "seed": learned.seed,
            }))
        }
    }
}

fn solve_amdp(a: args::SolveAmdp) -> Result<()> {
    let mdp = load_mdp(&a.mdp)?;
    let t_minorize = match a.tminorize {
        TMinorize::Value(t) => t,
        TMinorize::Auto => mdp_ergodicity(&mdp, amdpkit::ergodicity::DEFAULT_M_MAX)?.t_minorize,
    };
    let constant = a.constant.unwrap_or(if a.full_scale {
        PLAN_CONSTANT
    } else {
        PLAN_CONSTANT * 1e-4
    });
    let options = PlanOptions {
        constant,
        enforce_gate: true,
    };
    let plan = plan_with(
        a.eps,
        a.delta,
        t_minorize,
        mdp.n_states(),
        mdp.n_actions(),
        a.algo.into(),
        &options,
    )?;
    if !a.full_scale && plan.total_samples > a.budget {
        bail!(
            "plan needs {} samples, above the budget {} (raise --budget, lower --C or pass --full-scale)",
            plan.total_samples,
            a.budget
        );
    }
    let gm = GenerativeModel::new(mdp.clone(), a.seed);
    let learned = run_plan(&gm, &plan, a.seed)?;
    let alpha_hat = average_reward(&mdp.induce(&learned.policy)?)?;
    let optimal = optimal_average_reward(&mdp).ok().map(|(g, _)| g);
    print_json(&json!({
        "plan": plan,
        "policy": learned.policy,
        "alpha_hat": alpha_hat,
        "optimal_gain": optimal,
        "samples_used": learned.samples_used,
    }))
}

fn write_outputs(
    output: &args::SweepOutput,
    records: &[ExperimentRecord],
    series: &[PlotSeries],
    title: &str,
    x_label: &str,
) -> Result<()> {
    if let Some(path) = &output.out {
        let file =
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut writer = BufWriter::new(file);
        write_csv(&mut writer, records)?;
        writer.flush()?;
    }
    if let Some(path) = &output.plot {
        let svg = svg_plot(title, x_label, "mean error", series);
        std::fs::write(path, svg).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn report(
    label: &str,
    outcome: &SweepOutcome,
    x: impl Fn(&amdpkit::experiments::SweepPoint) -> f64,
) -> PlotSeries {
    for p in &outcome.points {
        println!(
            "{label}: x={:.6e} epsilon={:.6} n_per_sa={} mean_error={:.6e}",
            x(p),
            p.epsilon_target,
            p.n_per_sa,
            p.mean_error
        );
    }
    match &outcome.regression {
        Some(r) => println!(
            "{label}: slope={:.6} intercept={:.6} r2={:.4}",
            r.slope, r.intercept, r.r_squared
        ),
        None => println!("{label}: slope undefined"),
    }
    PlotSeries {
        label: label.to_string(),
        points: outcome
            .points
            .iter()
            .map(|p| (x(p).log10(), p.mean_error.log10()))
            .collect(),
        fit: outcome.regression.as_ref().map(|r| (r.slope, r.intercept)),
    }
}

fn run_eps_sweep(a: args::EpsSweep) -> Result<()> {
    let algos: &[Sizing] = match a.algo {
        SweepAlgo::Ours => &[Sizing::Ours],
        SweepAlgo::Baseline => &[Sizing::Baseline],
        SweepAlgo::Both => &[Sizing::Ours, Sizing::Baseline],
    };
    let mut records = Vec::new();
    let mut series = Vec::new();
    for &algo in algos {
        let mut cfg = if a.full_scale {
            EpsSweepConfig::full_scale(algo)?
        } else {
            EpsSweepConfig::desk(algo)
        };
        cfg.t_minorize = a.tminorize;
        cfg.delta = a.delta;
        cfg.seed = a.seed;
        if let Some(reps) = a.reps {
            cfg.reps = reps;
        }
        if let Some(c) = a.constant {
            cfg.plan.constant = c;
        }
        if let Some(budget) = a.budget {
            cfg.budget_cap = budget;
        }
        if let Some(grid) = a.grid {
            cfg.budgets = grid.values().iter().map(|b| b.round() as u64).collect();
        }
        let outcome = eps_sweep(&cfg)?;
        series.push(report(algo.name(), &outcome, |p| p.total_samples as f64));
        records.extend(outcome.records);
    }
    write_outputs(
        &a.output,
        &records,
        &series,
        "error vs total samples",
        "total samples",
    )
}

fn run_tminorize_sweep(a: args::TminorizeSweep) -> Result<()> {
    let mut cfg = if a.full_scale {
        TminorizeSweepConfig::full_scale()
    } else {
        TminorizeSweepConfig::desk()
    };
    if let Some(targets) = a.targets {
        cfg.targets = targets.values();
    }
    if let Some(reps) = a.reps {
        cfg.reps = reps;
    }
    cfg.c_samples = a.c_samples;
    cfg.seed = a.seed;
    cfg.epsilon = a.eps;
    cfg.delta = a.delta;
    let outcome = tminorize_sweep(&cfg)?;
    let series = report("ours", &outcome, |p| p.t_minorize);
    write_outputs(
        &a.output,
        &outcome.records,
        &[series],
        "error vs minorization time",
        "minorization time",
    )
}
