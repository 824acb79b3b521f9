use std::fmt::Write;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde_json::{json, Value};
use straingrid_core::config::ModelConfig;
use straingrid_core::full::{simulate_full, MASS_DEFECT, MIN_ENTRY};
use straingrid_core::model::FullState;
use straingrid_core::reduction::{drift_matrix, migration_matrix};
use straingrid_core::replicator::{
    simulate_replicator, ReplicatorSetup, MIN_FREQUENCY, SIMPLEX_DEFECT,
};
use straingrid_core::validator::{convergence_study, TauWindow, ValidationOptions};

use crate::error::CliError;
use crate::output::{num, sig15, write_output, Manifest};
use crate::svg::{loglog, Series};
use crate::Mode;

/// Raw document (for hashing) and its typed form.
pub fn load_config(path: &Path) -> Result<(Value, ModelConfig), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let raw: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: invalid JSON: {e}", path.display())))?;
    let cfg =
        parse_config(&raw).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok((raw, cfg))
}

pub fn parse_config(raw: &Value) -> Result<ModelConfig, String> {
    serde_json::from_value(raw.clone()).map_err(|e| format!("invalid config: {e}"))
}

pub fn ensure_valid(cfg: &ModelConfig) -> Result<(), CliError> {
    let issues = cfg.validate();
    if issues.is_empty() {
        Ok(())
    } else {
        Err(CliError::Domain(format!(
            "invalid configuration:\n{}",
            issues
                .iter()
                .map(|i| format!("  - {i}"))
                .collect::<Vec<_>>()
                .join("\n")
        )))
    }
}

pub fn validate(path: &Path) -> Result<(), CliError> {
    let (_, cfg) = load_config(path)?;
    ensure_valid(&cfg)?;
    let plural = |k: usize, word: &str| format!("{k} {word}{}", if k == 1 { "" } else { "s" });
    println!(
        "{}: ok ({}, {})",
        path.display(),
        plural(cfg.patch_count(), "patch").replace("patchs", "patches"),
        plural(cfg.strains.n, "strain")
    );
    Ok(())
}

fn matrix_json(m: &nalgebra::DMatrix<f64>) -> Value {
    Value::from(
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| sig15(m[(i, j)])).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    )
}

fn print_json(v: &Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(v).expect("JSON values serialize")
    );
}

pub fn equilibria(path: &Path) -> Result<(), CliError> {
    let (_, cfg) = load_config(path)?;
    ensure_valid(&cfg)?;
    let model = cfg.build_model()?;
    let patches: Vec<Value> = model
        .reductions()?
        .iter()
        .zip(model.params())
        .enumerate()
        .map(|(p, (red, params))| {
            let eq = red.equilibrium;
            let a = drift_matrix(&eq, params);
            json!({
                "patch": p,
                "R0": sig15(params.r0()),
                "S": sig15(eq.s),
                "I": sig15(eq.i),
                "D": sig15(eq.d),
                "T": sig15(eq.t),
                "omega": [sig15(red.omega.phi), sig15(red.omega.psi)],
                "drift_matrix": [[sig15(a[(0, 0)]), sig15(a[(0, 1)])], [sig15(a[(1, 0)]), sig15(a[(1, 1)])]],
                "drift_trace": sig15(a.trace()),
            })
        })
        .collect();
    print_json(&json!({ "patches": patches }));
    Ok(())
}

pub fn fitness(path: &Path) -> Result<(), CliError> {
    let (_, cfg) = load_config(path)?;
    ensure_valid(&cfg)?;
    let model = cfg.build_model()?;
    let setup = ReplicatorSetup::from_model(&model)?;
    let red = model.reductions()?;
    let patches: Vec<Value> = red
        .iter()
        .zip(&setup.lambdas)
        .enumerate()
        .map(|(p, (r, l))| {
            json!({
                "patch": p,
                "Theta": sig15(r.speed.theta),
                "Theta_components": r.speed.components.map(sig15),
                "theta": r.speed.weights.map(sig15),
                "lambda": matrix_json(l),
            })
        })
        .collect();
    let eqs: Vec<_> = red.iter().map(|r| r.equilibrium).collect();
    let oms: Vec<_> = red.iter().map(|r| r.omega).collect();
    let m = migration_matrix(model.connectivity(), &eqs, &oms)?;
    print_json(&json!({
        "strains": model.strains(),
        "d": sig15(setup.d),
        "patches": patches,
        "connectivity": matrix_json(model.connectivity().matrix()),
        "migration": matrix_json(&m.entries),
        "advection": matrix_json(&m.advection),
    }));
    Ok(())
}

/// Trajectory CSV plus summary figures of one simulation.
pub struct SimulationOutput {
    pub file_name: &'static str,
    pub csv: String,
    pub final_time: f64,
    pub max_defect: f64,
    pub min_value: f64,
}

fn header(first: &str, names: &[String], last: &str) -> String {
    let mut h = format!("{first},patch");
    for n in names {
        h.push(',');
        h.push_str(n);
    }
    h.push(',');
    h.push_str(last);
    h.push('\n');
    h
}

/// Slow-time horizon for reduced runs and comparisons.
pub fn tau_window(cfg: &ModelConfig, setup: &ReplicatorSetup) -> Result<TauWindow, CliError> {
    let tau_end = cfg
        .run
        .tau_end
        .unwrap_or_else(|| TauWindow::default_for(setup).tau_end);
    Ok(TauWindow::new(cfg.run.tau0_fraction * tau_end, tau_end)?)
}

pub fn run_simulation(cfg: &ModelConfig, mode: Mode) -> Result<SimulationOutput, CliError> {
    let model = cfg.build_model()?;
    let (np, n) = (model.patches(), model.strains());
    match mode {
        Mode::Full => {
            let eqs: Vec<_> = model.reductions()?.iter().map(|r| r.equilibrium).collect();
            let y0 = cfg.initial_full_state(Some(&eqs))?;
            let traj = simulate_full(&model, &y0, &cfg.run.integrator(cfg.run.t_end))?;
            let mut names = vec!["S".to_string()];
            names.extend((1..=n).map(|i| format!("I_{i}")));
            let sep = if n > 9 { "_" } else { "" };
            for i in 1..=n {
                names.extend((1..=n).map(|j| format!("D_{i}{sep}{j}")));
            }
            let mut csv = header("t", &names, "mass_defect");
            for (t, y) in traj.times.iter().zip(&traj.states) {
                let state = FullState::from_vec(np, n, y.clone())?;
                for p in 0..np {
                    let _ = write!(csv, "{},{p}", num(*t));
                    for v in state.block(p) {
                        let _ = write!(csv, ",{}", num(*v));
                    }
                    let _ = writeln!(csv, ",{}", num((state.patch_mass(p) - 1.0).abs()));
                }
            }
            Ok(SimulationOutput {
                file_name: "trajectory_full.csv",
                csv,
                final_time: *traj.times.last().unwrap_or(&0.0),
                max_defect: traj.monitor_max[traj.monitor_index(MASS_DEFECT).unwrap()],
                min_value: traj.monitor_min[traj.monitor_index(MIN_ENTRY).unwrap()],
            })
        }
        Mode::Reduced => {
            let setup = ReplicatorSetup::from_model(&model)?;
            let window = tau_window(cfg, &setup)?;
            let z0 = cfg.initial_frequencies()?;
            let traj = simulate_replicator(&setup, &z0, &cfg.run.integrator(window.tau_end))?;
            let names: Vec<String> = (1..=n).map(|i| format!("z_{i}")).collect();
            let mut csv = header("tau", &names, "simplex_defect");
            for (tau, z) in traj.times.iter().zip(&traj.states) {
                for p in 0..np {
                    let row = &z[p * n..(p + 1) * n];
                    let _ = write!(csv, "{},{p}", num(*tau));
                    for v in row {
                        let _ = write!(csv, ",{}", num(*v));
                    }
                    let _ = writeln!(csv, ",{}", num((row.iter().sum::<f64>() - 1.0).abs()));
                }
            }
            Ok(SimulationOutput {
                file_name: "trajectory_reduced.csv",
                csv,
                final_time: *traj.times.last().unwrap_or(&0.0),
                max_defect: traj.monitor_max[traj.monitor_index(SIMPLEX_DEFECT).unwrap()],
                min_value: traj.monitor_min[traj.monitor_index(MIN_FREQUENCY).unwrap()],
            })
        }
    }
}

pub fn simulate(path: &Path, mode: Mode, out: &Path) -> Result<(), CliError> {
    let start = Instant::now();
    let (raw, cfg) = load_config(path)?;
    ensure_valid(&cfg)?;
    let sim = run_simulation(&cfg, mode)?;
    let csv_path = out.join(sim.file_name);
    write_output(&csv_path, sim.csv.as_bytes())?;
    let mut manifest = Manifest::new(
        &format!("simulate --mode {}", mode.as_str()),
        &raw,
        cfg.initial.seed,
    );
    manifest.outputs.push(sim.file_name.to_string());
    manifest.wall_time_seconds = start.elapsed().as_secs_f64();
    let manifest_path = out.join(format!("manifest_simulate_{}.json", mode.as_str()));
    manifest.write(&manifest_path)?;
    println!(
        "wrote {} (final time {}, max defect {:e}, min value {:e})",
        csv_path.display(),
        num(sim.final_time),
        sim.max_defect,
        sim.min_value
    );
    println!("wrote {}", manifest_path.display());
    Ok(())
}

pub fn compare(path: &Path, eps: &[f64], out: &Path) -> Result<(), CliError> {
    let start = Instant::now();
    if eps.len() < 3 {
        return Err(CliError::Usage(format!(
            "--eps needs at least 3 values, got {}",
            eps.len()
        )));
    }
    if eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(CliError::Usage("--eps values must be positive".into()));
    }
    let (raw, cfg) = load_config(path)?;
    ensure_valid(&cfg)?;
    let model = cfg.build_model()?;
    let setup = ReplicatorSetup::from_model(&model)?;
    let window = tau_window(&cfg, &setup)?;
    let opts = ValidationOptions {
        rel_tol: cfg.run.rel_tol,
        abs_tol: cfg.run.abs_tol,
        samples: cfg.run.samples,
    };
    let report = convergence_study(
        &model,
        &cfg.initial_frequencies()?,
        eps,
        Some(window),
        &opts,
    )?;

    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    write_output(&out.join("report.json"), json.as_bytes())?;

    let mut csv = String::from("eps,error,aggregate_deviation\n");
    for ((e, err), agg) in report
        .eps_values
        .iter()
        .zip(&report.errors)
        .zip(&report.aggregate_deviations)
    {
        let _ = writeln!(csv, "{},{},{}", num(*e), num(*err), num(*agg));
    }
    write_output(&out.join("convergence.csv"), csv.as_bytes())?;

    // First-order guide through the largest-ε error.
    let guide: Vec<f64> = report
        .eps_values
        .iter()
        .map(|e| report.errors[0] * e / report.eps_values[0])
        .collect();
    let svg = loglog(
        "Full system vs replicator reduction",
        "eps",
        "sup-norm deviation",
        &[
            Series {
                label: "frequency error",
                color: "#1f77b4",
                xs: &report.eps_values,
                ys: &report.errors,
                dashed: false,
            },
            Series {
                label: "sup |S - S*|",
                color: "#d62728",
                xs: &report.eps_values,
                ys: &report.aggregate_deviations,
                dashed: false,
            },
            Series {
                label: "slope 1",
                color: "#7f7f7f",
                xs: &report.eps_values,
                ys: &guide,
                dashed: true,
            },
        ],
    );
    write_output(&out.join("convergence.svg"), svg.as_bytes())?;

    let mut manifest = Manifest::new("compare", &raw, cfg.initial.seed);
    manifest.outputs = vec![
        "report.json".into(),
        "convergence.csv".into(),
        "convergence.svg".into(),
    ];
    manifest.wall_time_seconds = start.elapsed().as_secs_f64();
    manifest.write(&out.join("manifest_compare.json"))?;

    match report.fitted_order {
        Some(order) if report.slope_applicable => println!("fitted order {order:.4}"),
        _ => println!("fitted order not applicable (errors at integration-noise level)"),
    }
    for ((e, err), agg) in report
        .eps_values
        .iter()
        .zip(&report.errors)
        .zip(&report.aggregate_deviations)
    {
        println!("eps {e:<10} error {err:.6e}  aggregate {agg:.6e}");
    }
    println!("wrote {}", out.display());
    Ok(())
}
