//! One simulation per value of a scalar config field, run on a bounded
//! worker pool.

use std::fmt::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::Value;

use crate::commands::{parse_config, run_simulation, SimulationOutput};
use crate::error::CliError;
use crate::output::{csv_field, num, write_output, Manifest};
use crate::Mode;

/// Mutable reference to the number at a dotted path such as `scale.d` or
/// `patches.1.beta`.
fn locate<'a>(root: &'a mut Value, path: &str) -> Result<&'a mut Value, CliError> {
    let mut cur = root;
    for key in path.split('.') {
        cur = match cur {
            Value::Object(map) => map.get_mut(key),
            Value::Array(items) => key.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| CliError::Usage(format!("config has no field '{path}'")))?;
    }
    if cur.is_number() {
        Ok(cur)
    } else {
        Err(CliError::Usage(format!("'{path}' is not a scalar number")))
    }
}

pub fn with_value(template: &Value, path: &str, value: f64) -> Result<Value, CliError> {
    let mut doc = template.clone();
    let slot = locate(&mut doc, path)?;
    *slot = if (slot.is_u64() || slot.is_i64()) && value.fract() == 0.0 && value.abs() < 9e15 {
        Value::from(value as i64)
    } else {
        serde_json::Number::from_f64(value)
            .map(Value::Number)
            .ok_or_else(|| CliError::Usage(format!("value {value} is not finite")))?
    };
    Ok(doc)
}

struct Row {
    value: f64,
    outcome: Result<SimulationOutput, String>,
}

fn run_point(template: &Value, path: &str, value: f64, mode: Mode) -> (Value, Option<u64>, Row) {
    let doc = with_value(template, path, value).expect("path checked before the sweep");
    let cfg = match parse_config(&doc) {
        Ok(c) => c,
        Err(e) => {
            return (
                doc,
                None,
                Row {
                    value,
                    outcome: Err(e),
                },
            )
        }
    };
    let seed = cfg.initial.seed;
    let issues = cfg.validate();
    let outcome = if issues.is_empty() {
        run_simulation(&cfg, mode).map_err(|e| e.to_string())
    } else {
        Err(issues.join("; "))
    };
    (doc, seed, Row { value, outcome })
}

pub fn sweep(
    template: &Value,
    axis: &str,
    values: &[f64],
    jobs: usize,
    mode: Mode,
    out: &Path,
) -> Result<(), CliError> {
    if values.is_empty() {
        return Err(CliError::Usage(
            "--values must list at least one value".into(),
        ));
    }
    if jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    with_value(template, axis, values[0])?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Domain(format!("cannot start worker pool: {e}")))?;
    let width = values.len().saturating_sub(1).to_string().len().max(3);

    let results: Vec<Result<Row, CliError>> = pool.install(|| {
        values
            .par_iter()
            .enumerate()
            .map(|(k, &value)| {
                let start = Instant::now();
                let (doc, seed, row) = run_point(template, axis, value, mode);
                let dir = out.join(format!("run_{k:0width$}"));
                let mut manifest =
                    Manifest::new(&format!("sweep {axis}={}", num(value)), &doc, seed);
                match &row.outcome {
                    Ok(sim) => {
                        write_output(&dir.join(sim.file_name), sim.csv.as_bytes())?;
                        manifest.outputs.push(sim.file_name.to_string());
                    }
                    Err(e) => manifest.error = Some(e.clone()),
                }
                manifest.wall_time_seconds = start.elapsed().as_secs_f64();
                manifest.write(&dir.join("manifest.json"))?;
                Ok(row)
            })
            .collect()
    });

    let mut csv = format!(
        "index,{},status,final_time,max_defect,min_value,message\n",
        csv_field(axis)
    );
    let mut failed = 0;
    for (k, res) in results.into_iter().enumerate() {
        let row = res?;
        match &row.outcome {
            Ok(sim) => {
                let _ = writeln!(
                    csv,
                    "{k},{},ok,{},{},{},",
                    num(row.value),
                    num(sim.final_time),
                    num(sim.max_defect),
                    num(sim.min_value)
                );
            }
            Err(e) => {
                failed += 1;
                let _ = writeln!(csv, "{k},{},failed,,,,{}", num(row.value), csv_field(e));
            }
        }
    }
    write_output(&out.join("sweep.csv"), csv.as_bytes())?;
    println!(
        "sweep over {axis}: {} runs, {failed} failed; wrote {}",
        values.len(),
        out.join("sweep.csv").display()
    );
    if failed > 0 {
        Err(CliError::Domain(format!(
            "{failed} of {} sweep runs failed",
            values.len()
        )))
    } else {
        Ok(())
    }
}
