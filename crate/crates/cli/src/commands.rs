use anyhow::Result;
use serde_json::{json, Value};

use tasep::analytic::{
    blockage_current_closed_form, current_closed_form, current_finite_l, maximize_blockage_saddle,
    maximize_saddle_f,
};
use tasep::lattice::train_count_table;
use tasep::montecarlo::{self, DensityMode, SimulationSpec};
use tasep::oracle::{
    check_global_balance, exact_current, rational, stationary_distribution,
    verify_weight_stationarity, ExactChain,
};
use tasep::{KernelParams, RingGeometry};

use crate::grid::parse_grid;
use crate::output::{csv_writer, num, write_manifest, write_pgm};
use crate::{
    ArgError, DensityArgs, ExactCommand, Mode, OracleArgs, RunArgs, SimulateArgs, SweepArgs,
    ThresholdArgs,
};

const RUN_HEADER: [&str; 9] = [
    "p",
    "eps",
    "L",
    "burnin",
    "measure_steps",
    "replicas",
    "seed",
    "current_mean",
    "current_stderr",
];

pub fn exact(cmd: ExactCommand) -> Result<()> {
    match cmd {
        ExactCommand::Current { omega } => println!("{}", current_closed_form(omega)?),
        ExactCommand::BlockageCurrent { eps } => println!("{}", blockage_current_closed_form(eps)?),
        ExactCommand::FiniteCurrent { half, omega } => {
            println!("{}", current_finite_l(half, omega)?)
        }
        ExactCommand::Nl { half } => {
            let mut out = csv_writer(None)?;
            out.write_record(["l", "count"])?;
            for l in 1..=half {
                out.write_record([l.to_string(), train_count_table(half, l)?.to_string()])?;
            }
            out.flush()?;
        }
        ExactCommand::Saddle { omega, eps } => {
            let result = match (omega, eps) {
                (Some(w), _) => maximize_saddle_f(w)?,
                (None, Some(e)) => maximize_blockage_saddle(e)?,
                (None, None) => return Err(ArgError("need --omega or --eps".into()).into()),
            };
            let mut out = csv_writer(None)?;
            out.write_record(["argmax", "value", "tolerance"])?;
            out.write_record([num(result.argmax), num(result.value), num(result.tolerance)])?;
            out.flush()?;
        }
    }
    Ok(())
}

pub fn oracle(args: OracleArgs) -> Result<()> {
    let geometry = RingGeometry::with_sites(args.sites)?;
    let params = match (args.rule184, args.omega) {
        (true, _) => KernelParams::rule184(args.eps)?,
        (false, Some(w)) => KernelParams::from_omega(w, args.eps)?,
        (false, None) => return Err(ArgError("need --omega or --rule184".into()).into()),
    }
    .with_semantics(args.semantics.into());
    let chain = ExactChain::build(geometry, args.particles, params)?;
    let pi = stationary_distribution(&chain)?;
    let current = exact_current(&chain, &pi);

    let mut out = csv_writer(args.out.as_deref())?;
    out.write_record([
        "state_index",
        "bitstring",
        "engine_count",
        "stationary_prob",
        "in_ph",
        "in_omega_inf",
    ])?;
    for (i, (s, &p)) in chain.states().iter().zip(&pi.probabilities).enumerate() {
        out.write_record([
            i.to_string(),
            s.to_string(),
            s.engine_count().to_string(),
            num(p),
            s.is_ph_symmetric().to_string(),
            s.is_in_omega_inf().to_string(),
        ])?;
    }
    out.flush()?;
    drop(out);

    let mut summary = json!({
        "states": chain.len(),
        "recurrent_class_size": pi.recurrent.len(),
        "residual": pi.residual,
        "engine_fraction": current.engine_fraction,
        "first_half_fraction": current.first_half_fraction,
    });
    if let Some(w) = args.omega {
        let report = check_global_balance(
            geometry,
            args.particles,
            &rational(w)?,
            &rational(args.eps)?,
        )?;
        summary["balance_violation"] = json!(report.max_violation_f64());
        if args.eps == 0.0 {
            summary["max_weight_error"] =
                json!(verify_weight_stationarity(geometry, args.particles, w)?);
        }
    }
    if let Some(map) = summary.as_object() {
        for (k, v) in map {
            eprintln!("# {k}: {v}");
        }
    }
    if let Some(path) = &args.out {
        let parameters = json!({
            "sites": args.sites,
            "particles": args.particles,
            "omega": args.omega,
            "rule184": args.rule184,
            "eps": args.eps,
            "semantics": format!("{:?}", params.semantics()),
            "summary": summary,
        });
        write_manifest(path, "oracle", parameters)?;
    }
    Ok(())
}

fn template(run: &RunArgs, p: f64, eps: f64) -> Result<SimulationSpec> {
    let geometry = RingGeometry::new(run.half)?;
    let params = KernelParams::from_p(p, eps)?.with_semantics(run.semantics.into());
    let mut spec = SimulationSpec::new(geometry, params);
    spec.burn_in = run.burnin;
    spec.measure_steps = run.measure_steps;
    spec.replicas = run.replicas;
    spec.master_seed = run.seed;
    spec.initial_state = run.init.into();
    Ok(spec)
}

fn run_parameters(run: &RunArgs) -> Value {
    json!({
        "L": run.half,
        "burnin": run.burnin,
        "measure_steps": run.measure_steps,
        "replicas": run.replicas,
        "seed": run.seed,
        "initial_state": format!("{:?}", tasep::montecarlo::InitialState::from(run.init)),
        "semantics": format!("{:?}", tasep::BlockageSemantics::from(run.semantics)),
    })
}

fn estimate_row(p: f64, eps: f64, run: &RunArgs, est: &montecarlo::CurrentEstimate) -> Vec<String> {
    vec![
        num(p),
        num(eps),
        run.half.to_string(),
        est.burn_in.to_string(),
        run.measure_steps.to_string(),
        run.replicas.to_string(),
        run.seed.to_string(),
        num(est.mean),
        num(est.std_error),
    ]
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let spec = template(&args.run, args.p, args.eps)?;
    let est = montecarlo::run_current(&spec)?;
    let mut out = csv_writer(args.run.out.as_deref())?;
    out.write_record(RUN_HEADER)?;
    out.write_record(estimate_row(args.p, args.eps, &args.run, &est))?;
    out.flush()?;
    if let Some(path) = &args.run.out {
        let mut parameters = run_parameters(&args.run);
        parameters["p"] = json!(args.p);
        parameters["eps"] = json!(args.eps);
        parameters["burnin_resolved"] = json!(est.burn_in);
        write_manifest(path, "simulate", parameters)?;
    }
    Ok(())
}

pub fn sweep(args: SweepArgs) -> Result<()> {
    let p_grid = parse_grid(&args.p)?;
    let eps_grid = parse_grid(&args.eps)?;
    let spec = template(&args.run, 1.0, 0.0)?;
    let cells = montecarlo::sweep(&p_grid, &eps_grid, &spec)?;
    let mut out = csv_writer(args.run.out.as_deref())?;
    out.write_record(RUN_HEADER)?;
    for c in &cells {
        out.write_record(estimate_row(c.p, c.epsilon, &args.run, &c.estimate))?;
    }
    out.flush()?;
    if let Some(path) = &args.run.out {
        let mut parameters = run_parameters(&args.run);
        parameters["p_grid"] = json!(p_grid);
        parameters["eps_grid"] = json!(eps_grid);
        write_manifest(path, "sweep", parameters)?;
    }
    Ok(())
}

pub fn density(args: DensityArgs) -> Result<()> {
    let eps_grid = parse_grid(&args.eps)?;
    let mode = match args.mode {
        Mode::Snapshot => DensityMode::Snapshot,
        Mode::Average => DensityMode::TimeReplicaAverage,
    };
    let mut out = csv_writer(args.run.out.as_deref())?;
    out.write_record([
        "p",
        "eps",
        "L",
        "mode",
        "bin_index",
        "site_lo",
        "site_hi",
        "density",
    ])?;
    let mut image = Vec::with_capacity(eps_grid.len());
    for &eps in &eps_grid {
        let spec = template(&args.run, args.p, eps)?;
        let profile = montecarlo::density_profile(&spec, args.bin_width, mode)?;
        for (i, &d) in profile.values.iter().enumerate() {
            let (lo, hi) = profile.bin_sites(i);
            out.write_record([
                num(args.p),
                num(eps),
                args.run.half.to_string(),
                mode.name().to_string(),
                i.to_string(),
                (lo + 1).to_string(),
                hi.to_string(),
                num(d),
            ])?;
        }
        image.push(profile.values);
    }
    out.flush()?;
    if let Some(path) = &args.heatmap {
        write_pgm(path, &image)?;
    }
    if let Some(path) = &args.run.out {
        let mut parameters = run_parameters(&args.run);
        parameters["p"] = json!(args.p);
        parameters["eps_grid"] = json!(eps_grid);
        parameters["mode"] = json!(mode.name());
        parameters["bin_width"] = json!(args.bin_width);
        parameters["heatmap"] = json!(args.heatmap.as_ref().map(|p| p.display().to_string()));
        write_manifest(path, "density", parameters)?;
    }
    Ok(())
}

pub fn threshold(args: ThresholdArgs) -> Result<()> {
    let p_grid = parse_grid(&args.p)?;
    let mut out = csv_writer(args.run.out.as_deref())?;
    out.write_record(["p", "eps_star", "tolerance", "noise_floor"])?;
    for &p in &p_grid {
        let spec = template(&args.run, p, 0.0)?;
        let result = montecarlo::threshold_scan(p, args.tolerance, &spec)?;
        let eps_star = result.eps_star.map_or_else(|| "none".to_string(), num);
        out.write_record([
            num(p),
            eps_star,
            num(args.tolerance),
            num(result.noise_floor),
        ])?;
        out.flush()?;
    }
    if let Some(path) = &args.run.out {
        let mut parameters = run_parameters(&args.run);
        parameters["p_grid"] = json!(p_grid);
        parameters["tolerance"] = json!(args.tolerance);
        write_manifest(path, "threshold", parameters)?;
    }
    Ok(())
}
