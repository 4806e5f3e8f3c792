//! Command execution. Every number a command emits comes straight from a
//! library call — this layer only orchestrates, formats, and writes files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use blockcalc::conflict_model::{
    key_collision_prob, model_success_rate, pairwise_failure_probs, AccessPattern,
    KeyDistribution,
};
use blockcalc::distributions::{overlap_area, zipf_pmf, ZipfSpec};
use blockcalc::latency_model::{
    expected_latency, fit_linear_coeffs, read_measurements, saturation_check,
    wait_time, BlockDesign, EnvironmentParams, FittedLatencyModel,
    LatencyMeasurement,
};
use blockcalc::simulator::{
    run_experiment, run_trial_traced, write_trace_csv, ClientBehavior,
    PercentileSummary, SimConfig,
};

use crate::plot;
use crate::spec::{self, Experiment, Fixed, Kind, Parameter};
use crate::{
    Cli, CliError, Command, DistKind, ExperimentArgs, FitArgs, LatencyArgs,
    ModelCommand, OverlapArgs, SimulateArgs, SuccessArgs,
};

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Model(ModelCommand::Success(args)) => model_success(args),
        Command::Model(ModelCommand::Latency(args)) => model_latency(args),
        Command::Simulate(args) => simulate(args),
        Command::Experiment(args) => experiment(args),
        Command::Fit(args) => fit(args),
        Command::Overlap(args) => overlap(args),
    }
}

fn key_dist(kind: DistKind, range: u32, alpha: f64) -> Result<KeyDistribution, CliError> {
    let spec = match kind {
        DistKind::Forward => ZipfSpec::forward(range, alpha),
        DistKind::Reversed => ZipfSpec::reversed(range, alpha),
    };
    Ok(KeyDistribution::from_zipf(&spec)?)
}

/// Arrival rate wrapped in environment parameters; the capacity fields are
/// unused by the fitted-latency and saturation paths.
fn env_for_rate(arrival_rate: f64) -> Result<EnvironmentParams, CliError> {
    Ok(EnvironmentParams::new(arrival_rate, 1.0, 1.0, 1.0, 1.0)?)
}

fn check_bp_rate(bp_rate: f64) -> Result<(), CliError> {
    if !bp_rate.is_finite() || bp_rate <= 0.0 {
        return Err(CliError::Config(format!(
            "bp_rate must be positive, got {bp_rate}"
        )));
    }
    Ok(())
}

fn model_success(args: SuccessArgs) -> Result<(), CliError> {
    let pattern = AccessPattern::new(
        args.rp,
        key_dist(args.read_dist, args.range, args.alpha)?,
        key_dist(args.write_dist, args.range, args.alpha)?,
    )?;
    let fp = pairwise_failure_probs(&pattern);
    println!("p_rw = {:.6}", fp.p_rw);
    println!("p_wr = {:.6}", fp.p_wr);
    println!("p_ww = {:.6}", fp.p_ww);
    println!("p_b_fail = {:.6}", fp.p_b_fail);
    println!("success_rate = {:.6}", model_success_rate(&pattern, args.bs));
    Ok(())
}

fn model_latency(args: LatencyArgs) -> Result<(), CliError> {
    let design = BlockDesign::new(args.bs, args.bto)?;
    let env = env_for_rate(args.rate)?;
    let fitted = FittedLatencyModel::new(args.c0, args.c1);
    println!("wait_seconds = {:.6}", wait_time(&design, args.rate));
    println!("latency_seconds = {:.6}", expected_latency(&env, &design, &fitted));
    if let Some(bp_rate) = args.bp_rate {
        check_bp_rate(bp_rate)?;
        let diag = saturation_check(&env, &design, bp_rate);
        println!("saturated = {}", diag.saturated);
        println!("load_margin = {:.6}", diag.margin);
    }
    Ok(())
}

fn behavior_for_case(
    case_kind: Kind,
    fx: &Fixed,
) -> Result<ClientBehavior, CliError> {
    let forward = || key_dist(DistKind::Forward, fx.range, fx.alpha);
    Ok(match case_kind {
        Kind::Case1AllWrite => ClientBehavior::all_write(forward()?),
        Kind::Case2ReadWrite => ClientBehavior::read_then_write_retry(forward()?),
        Kind::Case3SplitRw => ClientBehavior::independent(
            fx.rp,
            forward()?,
            key_dist(DistKind::Reversed, fx.range, fx.alpha)?,
        )?,
        Kind::LatencySweep | Kind::OverlapTable => unreachable!("not a case study"),
    })
}

fn sim_config(behavior: ClientBehavior, fx: &Fixed) -> SimConfig {
    let mut config = SimConfig::new(behavior, fx.bs);
    config.seed = fx.seed;
    config.total_operations = fx.ops;
    if let Some(n) = fx.num_clients {
        config.num_clients = n;
    }
    config
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let case_kind = match args.case {
        1 => Kind::Case1AllWrite,
        2 => Kind::Case2ReadWrite,
        _ => Kind::Case3SplitRw,
    };
    let fx = Fixed {
        alpha: args.alpha,
        bs: args.bs,
        range: args.range,
        rp: args.rp,
        trials: args.trials,
        ops: args.ops,
        seed: args.seed,
        num_clients: args.clients,
        ..Fixed::default()
    };
    let behavior = behavior_for_case(case_kind, &fx)?;
    let model = model_success_rate(behavior.pattern(), fx.bs);
    let config = sim_config(behavior, &fx);
    if let Some(path) = &args.trace {
        let (summary, traces) = run_trial_traced(&config)?;
        write_trace_csv(&traces, BufWriter::new(File::create(path)?))?;
        println!("trace_trial_rate = {:.6}", summary.rate);
        println!("wrote {}", path.display());
    }
    let band = run_experiment(&config, fx.trials)?;
    println!("model = {model:.6}");
    println!("p1 = {:.6}", band.p1);
    println!("p50 = {:.6}", band.p50);
    println!("p99 = {:.6}", band.p99);
    Ok(())
}

fn overlap(args: OverlapArgs) -> Result<(), CliError> {
    let forward = zipf_pmf(&ZipfSpec::forward(args.range, args.alpha))?;
    let reversed = zipf_pmf(&ZipfSpec::reversed(args.range, args.alpha))?;
    println!("overlap_area = {:.6}", overlap_area(&forward, &reversed)?);
    println!(
        "p_wwfail = {:.6}",
        key_collision_prob(&KeyDistribution::from_pmf(&reversed))
    );
    Ok(())
}

fn fit(args: FitArgs) -> Result<(), CliError> {
    if let Some(bp_rate) = args.bp_rate {
        check_bp_rate(bp_rate)?;
    }
    let samples = read_measurements(&args.file)?;
    let fitted = fit_linear_coeffs(&samples)?;
    println!("c0 = {}", fitted.c0);
    println!("c1 = {}", fitted.c1);
    println!("rmse_seconds = {}", fitted.fit_residual);

    let mut table = String::from("bs,measured,predicted,rel_error,saturated\n");
    for s in &samples {
        let design = BlockDesign::new(s.batch_size, s.batch_timeout)?;
        let env = env_for_rate(s.arrival_rate)?;
        let predicted = expected_latency(&env, &design, &fitted);
        let rel_error = (predicted - s.latency) / s.latency;
        let saturated = args
            .bp_rate
            .map(|bp| saturation_check(&env, &design, bp).saturated.to_string())
            .unwrap_or_default();
        table.push_str(&format!(
            "{},{:.6},{predicted:.6},{rel_error:.6},{saturated}\n",
            s.batch_size, s.latency
        ));
    }
    match &args.out {
        Some(path) => {
            fs::write(path, table)?;
            println!("wrote {}", path.display());
        }
        None => print!("{table}"),
    }
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<(), CliError> {
    let mut bundle = spec::resolve(&args.target)?;
    for exp in &mut bundle {
        if let Some(seed) = args.seed {
            exp.fixed.seed = seed;
        }
        if let Some(trials) = args.trials {
            exp.fixed.trials = trials;
        }
        if let Some(ops) = args.ops {
            exp.fixed.ops = ops;
        }
        if let Some(out) = &args.out {
            exp.output_dir = out.clone();
        }
        exp.validate()?;
    }
    for exp in &bundle {
        execute(exp)?;
    }
    Ok(())
}

pub fn execute(exp: &Experiment) -> Result<(), CliError> {
    fs::create_dir_all(&exp.output_dir)?;
    match exp.kind {
        Kind::Case1AllWrite | Kind::Case2ReadWrite | Kind::Case3SplitRw => {
            case_study(exp)
        }
        Kind::LatencySweep => latency_sweep(exp),
        Kind::OverlapTable => overlap_table(exp),
    }
}

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

fn case_study(exp: &Experiment) -> Result<(), CliError> {
    let mut rows: Vec<(f64, f64, PercentileSummary)> = Vec::new();
    for &value in &exp.values {
        let fx = exp.fixed.with(exp.parameter, value);
        let behavior = behavior_for_case(exp.kind, &fx)?;
        let model = model_success_rate(behavior.pattern(), fx.bs);
        let band = run_experiment(&sim_config(behavior, &fx), fx.trials)?;
        rows.push((value, model, band));
    }

    let csv_path = exp.output_dir.join(format!("{}.csv", exp.name));
    let mut out = BufWriter::new(File::create(&csv_path)?);
    writeln!(out, "value,model,p1,p50,p99")?;
    for (value, model, band) in &rows {
        writeln!(
            out,
            "{value},{model:.6},{:.6},{:.6},{:.6}",
            band.p1, band.p50, band.p99
        )?;
    }
    out.flush()?;
    announce(&csv_path);

    let py_path = exp.output_dir.join(format!("{}.py", exp.name));
    fs::write(
        &py_path,
        plot::case_plot(
            &format!("{}.csv", exp.name),
            &format!("{}.png", exp.name),
            exp.parameter.name(),
            &format!("{} - success rate vs {}", exp.kind.label(), exp.parameter.name()),
            exp.parameter == Parameter::Bs,
        ),
    )?;
    announce(&py_path);
    Ok(())
}

fn overlap_table(exp: &Experiment) -> Result<(), CliError> {
    let csv_path = exp.output_dir.join(format!("{}.csv", exp.name));
    let mut out = BufWriter::new(File::create(&csv_path)?);
    writeln!(out, "alpha,p_wwfail,overlap")?;
    for &alpha in &exp.values {
        let forward = zipf_pmf(&ZipfSpec::forward(exp.fixed.range, alpha))?;
        let reversed = zipf_pmf(&ZipfSpec::reversed(exp.fixed.range, alpha))?;
        let collision = key_collision_prob(&KeyDistribution::from_pmf(&reversed));
        let overlap = overlap_area(&forward, &reversed)?;
        writeln!(out, "{alpha},{collision:.6},{overlap:.6}")?;
    }
    out.flush()?;
    announce(&csv_path);
    Ok(())
}

/// Synthesize `reps` noisy measurements per sweep value from the fixed
/// coefficients; deterministic in the seed.
fn synthesize_measurements(exp: &Experiment) -> Result<Vec<LatencyMeasurement>, CliError> {
    let fx = &exp.fixed;
    let truth = FittedLatencyModel::new(fx.c0, fx.c1);
    let noise = Normal::new(0.0, fx.noise_sigma)
        .map_err(|e| CliError::Config(format!("invalid noise_sigma: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(fx.seed);
    let mut samples = Vec::new();
    for &value in &exp.values {
        let point = fx.with(exp.parameter, value);
        let design = BlockDesign::new(point.bs, point.bto)?;
        let env = env_for_rate(point.arrival_rate)?;
        for _ in 0..point.reps {
            samples.push(LatencyMeasurement {
                batch_size: point.bs,
                batch_timeout: point.bto,
                arrival_rate: point.arrival_rate,
                latency: expected_latency(&env, &design, &truth) + noise.sample(&mut rng),
            });
        }
    }
    Ok(samples)
}

fn write_measurements(path: &Path, samples: &[LatencyMeasurement]) -> Result<(), CliError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "bs,bto_seconds,arrival_rate,measured_latency_seconds")?;
    for s in samples {
        writeln!(
            out,
            "{},{},{},{}",
            s.batch_size, s.batch_timeout, s.arrival_rate, s.latency
        )?;
    }
    out.flush()?;
    Ok(())
}

fn latency_sweep(exp: &Experiment) -> Result<(), CliError> {
    let fx = &exp.fixed;
    let samples = match &fx.measurements {
        Some(path) => read_measurements(path)?,
        None => {
            let samples = synthesize_measurements(exp)?;
            let path = exp.output_dir.join(format!("{}_measurements.csv", exp.name));
            write_measurements(&path, &samples)?;
            announce(&path);
            samples
        }
    };
    let fitted = fit_linear_coeffs(&samples)?;
    println!("c0 = {}", fitted.c0);
    println!("c1 = {}", fitted.c1);
    println!("rmse_seconds = {}", fitted.fit_residual);

    // One output row per sweep value: measured is the mean of that
    // value's samples, predicted comes from the fitted model.
    let csv_path = exp.output_dir.join(format!("{}.csv", exp.name));
    let mut out = BufWriter::new(File::create(&csv_path)?);
    writeln!(out, "value,measured,predicted,rel_error,saturated")?;
    for &value in &exp.values {
        let point = fx.with(exp.parameter, value);
        let matching: Vec<&LatencyMeasurement> = samples
            .iter()
            .filter(|s| {
                s.batch_size == point.bs && s.arrival_rate == point.arrival_rate
            })
            .collect();
        if matching.is_empty() {
            return Err(CliError::Data(format!(
                "{}: no measurements for {} = {value}",
                exp.name,
                exp.parameter.name()
            )));
        }
        let measured =
            matching.iter().map(|s| s.latency).sum::<f64>() / matching.len() as f64;
        let design = BlockDesign::new(point.bs, point.bto)?;
        let env = env_for_rate(point.arrival_rate)?;
        let predicted = expected_latency(&env, &design, &fitted);
        let rel_error = (predicted - measured) / measured;
        let saturated = saturation_check(&env, &design, point.bp_rate).saturated;
        writeln!(
            out,
            "{value},{measured:.6},{predicted:.6},{rel_error:.6},{saturated}"
        )?;
    }
    out.flush()?;
    announce(&csv_path);

    let py_path = exp.output_dir.join(format!("{}.py", exp.name));
    fs::write(
        &py_path,
        plot::latency_plot(
            &format!("{}.csv", exp.name),
            &format!("{}.png", exp.name),
            exp.parameter.name(),
            &format!("average transaction latency vs {}", exp.parameter.name()),
            exp.parameter == Parameter::Bs,
        ),
    )?;
    announce(&py_path);
    Ok(())
}
