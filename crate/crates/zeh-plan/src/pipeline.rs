//! Mode dispatch: ingest or generate data, draw scenarios, solve, and write
//! artifacts. Every run emits `report.json`; tabular modes add `costs.csv`
//! and `decisions.csv`, `samplesize` adds `samplesize.csv`, and `synth`
//! adds the generated `data.csv`.

use std::path::Path;

use zeh_core::game::{compare_models, solve_game, verify_equilibrium};
use zeh_core::saa::{
    bootstrap_scenarios, bounds_individual, bounds_manager, bounds_user, sample_size,
    synthetic_neighborhood, HistoricalData,
};
use zeh_core::solver::{solve_global, solve_individual_all};
use zeh_core::{ChargeProfile, ScenarioSet};

use crate::config::RunConfig;
use crate::epigraph::{export_epigraph, EpigraphModel};
use crate::report::{
    out_path, write_csv, write_report, CostRow, DecisionRow, Report, SampleSizeRow, SynthSummary,
};
use crate::CliError;

/// What to compute; mirrors the CLI's first argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    /// Optimal panels and private battery per household.
    Individual,
    /// One pooled neighborhood investment.
    Global,
    /// The shared-storage game between users and a manager.
    Game,
    /// Baseline, individual, pooled, and game variants side by side.
    Compare,
    /// Monte Carlo sample counts for the requested accuracy.
    Samplesize,
    /// Generate and save a synthetic dataset, nothing else.
    Synth,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Individual => "individual",
            Mode::Global => "global",
            Mode::Game => "game",
            Mode::Compare => "compare",
            Mode::Samplesize => "samplesize",
            Mode::Synth => "synth",
        }
    }
}

/// Flags that shape a run without being part of the configuration.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Suppress the stdout summary.
    pub quiet: bool,
    /// Also export the sampled problem as an LP file.
    pub export_lp: bool,
}

fn say(quiet: bool, line: impl AsRef<str>) {
    if !quiet {
        println!("{}", line.as_ref());
    }
}

/// Scenario seed, decorrelated from the data-generation seed.
fn scenario_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

fn load_data(config: &RunConfig) -> Result<(HistoricalData, String), CliError> {
    match &config.data {
        Some(path) => {
            let data = HistoricalData::read_csv_path(path)
                .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
            Ok((data, format!("csv({})", path.display())))
        }
        None => {
            let s = &config.synth;
            let data = synthetic_neighborhood(s.n_users, s.t_days, &s.params, config.seed)?;
            Ok((data, format!("synthetic(n={}, days={}, seed={})", s.n_users, s.t_days, config.seed)))
        }
    }
}

fn scenarios(config: &RunConfig, data: &HistoricalData) -> Result<ScenarioSet, CliError> {
    Ok(bootstrap_scenarios(
        data,
        config.n_samples,
        config.horizon_days,
        config.window_days,
        scenario_seed(config.seed),
    )?)
}

/// Runs one mode end to end and returns the report that was written.
pub fn run(
    mode: Mode,
    config: &RunConfig,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<Report, CliError> {
    config.validate()?;
    if opts.export_lp && !matches!(mode, Mode::Individual | Mode::Global | Mode::Game) {
        return Err(CliError::config(
            "--export-lp applies to the individual, global, and game modes",
        ));
    }
    let report = match mode {
        Mode::Synth => run_synth(config, out_dir, opts)?,
        Mode::Samplesize => run_samplesize(config, out_dir, opts)?,
        Mode::Individual | Mode::Global | Mode::Game | Mode::Compare => {
            run_solve(mode, config, out_dir, opts)?
        }
    };
    let path = out_path(out_dir, "report.json")?;
    write_report(&path, &report)?;
    say(opts.quiet, format!("wrote {}", path.display()));
    Ok(report)
}

fn run_synth(config: &RunConfig, out_dir: &Path, opts: &RunOptions) -> Result<Report, CliError> {
    let s = &config.synth;
    let data = synthetic_neighborhood(s.n_users, s.t_days, &s.params, config.seed)?;
    let path = out_path(out_dir, "data.csv")?;
    data.write_csv_path(&path)?;
    say(opts.quiet, format!("wrote {}", path.display()));

    let mut x_sum = 0.0;
    let mut y_sum = 0.0;
    let mut count = 0usize;
    for user in 0..data.n_users() {
        for day in 0..data.t_hist() {
            if let Some(rec) = data.record(user, day) {
                x_sum += rec.consumption;
                y_sum += rec.generation;
                count += 1;
            }
        }
    }
    let mut report = Report::new(
        "synth",
        config.seed,
        &format!("synthetic(n={}, days={}, seed={})", s.n_users, s.t_days, config.seed),
        data.n_users(),
        0,
        0,
        config.clone(),
    );
    report.synth = Some(SynthSummary {
        n_users: data.n_users(),
        t_days: data.t_hist(),
        mean_consumption_kwh: x_sum / count as f64,
        mean_generation_kwh_m2: y_sum / count as f64,
    });
    say(
        opts.quiet,
        format!(
            "synth: {} users x {} days, mean consumption {:.2} kWh/day",
            data.n_users(),
            data.t_hist(),
            x_sum / count as f64
        ),
    );
    Ok(report)
}

fn run_samplesize(config: &RunConfig, out_dir: &Path, opts: &RunOptions) -> Result<Report, CliError> {
    let (data, provenance) = load_data(config)?;
    let n = data.n_users();
    let a_max = config.a_max.resolve(n, "a_max")?;
    let c_max = config.c_max.resolve(n, "c_max")?;
    let game_bounds = config.game_bounds(n)?;
    let t = config.horizon_days;
    let beta = vec![config.beta; t];
    let beta_a = vec![config.beta_a; t];

    let mut rows = Vec::new();
    for i in 0..n {
        let mean_y = data.window_mean_generation_sum(i, t, config.window_days)?;
        let inputs = bounds_individual(a_max[i], c_max[i], &config.tariff, &beta, mean_y, &config.accuracy)?;
        rows.push(SampleSizeRow {
            model: "individual".into(),
            user: Some(i),
            inputs,
            result: sample_size(&inputs)?,
        });
        let inputs = bounds_user(game_bounds.a_max()[i], &config.tariff, mean_y, &config.accuracy)?;
        rows.push(SampleSizeRow {
            model: "user".into(),
            user: Some(i),
            inputs,
            result: sample_size(&inputs)?,
        });
    }
    let inputs = bounds_manager(game_bounds.c_max(), &config.tariff, &beta_a, &config.accuracy)?;
    rows.push(SampleSizeRow { model: "manager".into(), user: None, inputs, result: sample_size(&inputs)? });

    #[derive(serde::Serialize)]
    struct CsvRow<'a> {
        model: &'a str,
        user: Option<usize>,
        r: usize,
        diameter: f64,
        lipschitz: f64,
        sigma2: f64,
        required: f64,
        n: u64,
        vacuous: bool,
        capped: bool,
    }
    let csv_rows: Vec<CsvRow> = rows
        .iter()
        .map(|row| CsvRow {
            model: &row.model,
            user: row.user,
            r: row.inputs.r,
            diameter: row.inputs.diameter,
            lipschitz: row.inputs.lipschitz,
            sigma2: row.inputs.sigma2,
            required: row.result.required,
            n: row.result.n,
            vacuous: row.result.vacuous,
            capped: row.result.capped,
        })
        .collect();
    let path = out_path(out_dir, "samplesize.csv")?;
    write_csv(&path, &csv_rows)?;
    say(opts.quiet, format!("wrote {}", path.display()));

    let worst = rows.iter().map(|r| r.result.n).max().unwrap_or(1);
    say(
        opts.quiet,
        format!("samplesize: {} problems, largest recommended N = {worst}", rows.len()),
    );
    let mut report = Report::new(
        "samplesize",
        config.seed,
        &provenance,
        n,
        config.n_samples,
        t,
        config.clone(),
    );
    report.samplesize = Some(rows);
    Ok(report)
}

fn run_solve(
    mode: Mode,
    config: &RunConfig,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<Report, CliError> {
    let (data, _) = load_data(config)?;
    let n = data.n_users();
    let ss = scenarios(config, &data)?;
    let t = ss.n_days();
    let profile = ChargeProfile::constant(n, t, config.beta, config.beta_a)?;
    let bounds = config.bounds(n)?;

    let mut report = Report::new(
        mode.name(),
        config.seed,
        ss.provenance(),
        n,
        ss.n_samples(),
        t,
        config.clone(),
    );
    let mut costs: Vec<CostRow> = Vec::new();
    let mut decisions: Vec<DecisionRow> = Vec::new();

    match mode {
        Mode::Individual => {
            let solves = solve_individual_all(&ss, &config.tariff, &profile, &bounds, &config.solver)?;
            let total: f64 = solves.iter().map(|s| s.objective).sum();
            let pv: f64 = solves.iter().map(|s| s.decision.a[0]).sum();
            let batt: f64 = solves.iter().map(|s| s.decision.c[0]).sum();
            for (i, s) in solves.iter().enumerate() {
                costs.push(CostRow::from_breakdown("individual", i.to_string(), &s.breakdown));
                decisions.push(DecisionRow {
                    model: "individual".into(),
                    user: i,
                    pv_m2: s.decision.a[0],
                    battery_kwh: s.decision.c[0],
                });
            }
            say(
                opts.quiet,
                format!("individual: total {total:.1}, pv {pv:.1} m^2, battery {batt:.1} kWh"),
            );
            report.individual = Some(solves);
        }
        Mode::Global => {
            let solve = solve_global(&ss, &config.tariff, &profile, &bounds, &config.solver)?;
            costs.push(CostRow::from_breakdown("global", "all".into(), &solve.breakdown));
            for i in 0..n {
                decisions.push(DecisionRow {
                    model: "global".into(),
                    user: i,
                    pv_m2: solve.decision.a[i],
                    battery_kwh: 0.0,
                });
            }
            decisions.push(DecisionRow {
                model: "global-pool".into(),
                user: 0,
                pv_m2: 0.0,
                battery_kwh: solve.decision.c[0],
            });
            say(
                opts.quiet,
                format!(
                    "global: total {:.1}, pv {:.1} m^2, pooled battery {:.1} kWh",
                    solve.objective,
                    solve.decision.pv_total(),
                    solve.decision.c[0]
                ),
            );
            report.global = Some(solve);
        }
        Mode::Game => {
            let game_bounds = config.game_bounds(n)?;
            let eq = solve_game(&ss, &config.tariff, &profile, &game_bounds, &config.game)?;
            let tol = 10.0 * config.game.solver.stop_tol * (1.0 + eq.total_cost.abs());
            let check =
                verify_equilibrium(&ss, &config.tariff, &profile, &game_bounds, &eq.state, tol, 101)?;
            for (i, uc) in eq.user_costs.iter().enumerate() {
                costs.push(CostRow::total_only("game", i.to_string(), *uc));
                decisions.push(DecisionRow {
                    model: "game".into(),
                    user: i,
                    pv_m2: eq.state.a[i],
                    battery_kwh: eq.state.c[i],
                });
            }
            costs.push(CostRow::total_only("game", "manager".into(), eq.manager_cost));
            costs.push(CostRow::total_only("game", "all".into(), eq.total_cost));
            say(
                opts.quiet,
                format!(
                    "game: total {:.1} after {} rounds (converged: {}, equilibrium check: {})",
                    eq.total_cost,
                    eq.rounds,
                    eq.converged,
                    if check.passed { "pass" } else { "fail" }
                ),
            );
            report.game_check = Some(check);
            report.game = Some(eq);
        }
        Mode::Compare => {
            let baseline_a = vec![config.synth.params.baseline_pv_m2; n];
            let cmp = compare_models(
                &ss,
                &config.tariff,
                &config.compare_pi_in,
                &profile,
                &bounds,
                &config.solver,
                &config.game,
                &baseline_a,
            )?;
            let mut summaries = vec![&cmp.baseline, &cmp.individual, &cmp.global];
            summaries.extend(cmp.game.iter());
            for s in summaries {
                costs.push(CostRow::total_only(&s.label, "all".into(), s.total_cost));
            }
            for (i, s) in cmp.individual_details.iter().enumerate() {
                costs.push(CostRow::from_breakdown("individual", i.to_string(), &s.breakdown));
                decisions.push(DecisionRow {
                    model: "individual".into(),
                    user: i,
                    pv_m2: s.decision.a[0],
                    battery_kwh: s.decision.c[0],
                });
            }
            costs.push(CostRow::from_breakdown(
                "global",
                "all".into(),
                &cmp.global_detail.breakdown,
            ));
            for i in 0..n {
                decisions.push(DecisionRow {
                    model: "global".into(),
                    user: i,
                    pv_m2: cmp.global_detail.decision.a[i],
                    battery_kwh: 0.0,
                });
            }
            for (variant, eq) in cmp.game.iter().zip(&cmp.game_details) {
                for i in 0..n {
                    costs.push(CostRow::total_only(&variant.label, i.to_string(), eq.user_costs[i]));
                    decisions.push(DecisionRow {
                        model: variant.label.clone(),
                        user: i,
                        pv_m2: eq.state.a[i],
                        battery_kwh: eq.state.c[i],
                    });
                }
                costs.push(CostRow::total_only(&variant.label, "manager".into(), eq.manager_cost));
            }
            for s in [&cmp.baseline, &cmp.individual, &cmp.global].into_iter().chain(&cmp.game) {
                say(
                    opts.quiet,
                    format!(
                        "compare[{}]: total {:.1}, pv {:.1} m^2, battery {:.1} kWh",
                        s.label, s.total_cost, s.pv_total_m2, s.battery_total_kwh
                    ),
                );
            }
            report.compare = Some(cmp);
        }
        Mode::Synth | Mode::Samplesize => unreachable!("handled in run()"),
    }

    if opts.export_lp {
        let path = out_path(out_dir, "epigraph.lp")?;
        let file = std::fs::File::create(&path)
            .map_err(|e| CliError::io(format!("cannot create {}: {e}", path.display())))?;
        let w = std::io::BufWriter::new(file);
        match mode {
            Mode::Individual => {
                let model = EpigraphModel::Individual { user: 0, beta: profile.user(0) };
                export_epigraph(&ss, &config.tariff, &model, &bounds, w)?;
            }
            Mode::Global => {
                let model = EpigraphModel::Global { profile: &profile };
                export_epigraph(&ss, &config.tariff, &model, &bounds, w)?;
            }
            Mode::Game => {
                // The manager problem at the warm-start panel areas.
                let a = match &config.game.start {
                    Some(d) => d.a.clone(),
                    None => vec![0.0; n],
                };
                let model = EpigraphModel::Manager { beta_a: profile.manager(), a: &a };
                export_epigraph(&ss, &config.tariff, &model, &config.game_bounds(n)?, w)?;
            }
            _ => {
                return Err(CliError::config(
                    "--export-lp applies to the individual, global, and game modes",
                ))
            }
        }
        say(opts.quiet, format!("wrote {}", path.display()));
    }

    let path = out_path(out_dir, "costs.csv")?;
    write_csv(&path, &costs)?;
    say(opts.quiet, format!("wrote {}", path.display()));
    let path = out_path(out_dir, "decisions.csv")?;
    write_csv(&path, &decisions)?;
    say(opts.quiet, format!("wrote {}", path.display()));

    Ok(report)
}
