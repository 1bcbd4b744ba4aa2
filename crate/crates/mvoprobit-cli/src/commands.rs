//! Implementations behind the CLI subcommands.

use crate::config::{parse_config, effective_config, RunConfig};
use crate::error::{CliError, Result};
use crate::table::{load_covariate_table, load_table, write_table_csv};
use crate::Command;
use mvoprobit::estimate::{fit, FitResult};
use mvoprobit::features::{
    assign_stage_bikeshare, assign_stage_walk_cycle, hhi, merge_stages, sei, BandMidpoints,
    BehaviorStatus, BikeshareAnswers, MergeMap, UseDuration, WalkCycleAnswers,
};
use mvoprobit::model::ParameterSet;
use mvoprobit::mvn::{rectangle_prob, Corr3};
use mvoprobit::predict::{contour_grid, marginal_stage_probs, render_contour_svg};
use mvoprobit::simulate::sample_dataset;
use std::path::{Path, PathBuf};

pub fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Fit { config, strict } => cmd_fit(&config, strict),
        Command::Simulate { config } => cmd_simulate(&config),
        Command::Predict {
            config,
            params,
            output,
        } => cmd_predict(&config, &params, output.as_deref()),
        Command::Contour { config, params } => cmd_contour(&config, params.as_deref()),
        Command::Stage {
            input,
            instrument,
            merge,
            output,
        } => cmd_stage(&input, &instrument, merge.as_deref(), &output),
        Command::Sei {
            input,
            modes,
            bands,
            output,
        } => cmd_sei(&input, &modes, bands.as_deref(), &output),
        Command::Mvnprob { upper, lower, rho } => cmd_mvnprob(&upper, lower.as_deref(), &rho),
    }
}

fn read_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_config(&text)
}

fn write_artifact(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::Io {
                path: parent.to_path_buf(),
                source: e,
            })?;
        }
    }
    std::fs::write(path, content).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn output_prefix(config: &RunConfig) -> Result<&str> {
    config
        .output
        .as_deref()
        .ok_or_else(|| CliError::Usage("config is missing the `output` path prefix".into()))
}

fn input_path(config: &RunConfig) -> Result<PathBuf> {
    Ok(PathBuf::from(config.input.as_deref().ok_or_else(|| {
        CliError::Usage("config is missing the `input` CSV path".into())
    })?))
}

fn apply_thread_cap(config: &RunConfig) {
    if let Some(n) = config.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn read_fit_result(path: &Path) -> Result<FitResult> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!(
        "cannot parse fit result {}: {e}",
        path.display()
    )))
}

fn cmd_fit(config_path: &Path, strict: bool) -> Result<i32> {
    let config = read_config(config_path)?;
    apply_thread_cap(&config);
    let spec = config.model.to_spec();
    let loaded = load_table(&input_path(&config)?, &spec)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    let result = fit(&spec, &loaded.table, &config.fit)?;

    let prefix = output_prefix(&config)?;
    let mut json = serde_json::to_string_pretty(&result).expect("fit result serializes");
    json.push('\n');
    write_artifact(Path::new(&format!("{prefix}.fit.json")), &json)?;
    write_artifact(Path::new(&format!("{prefix}.summary.txt")), &result.summary())?;
    write_artifact(
        Path::new(&format!("{prefix}.config.json")),
        &effective_config(&config),
    )?;
    print!("{}", result.summary());
    if !result.converged {
        eprintln!(
            "warning: optimizer did not converge after {} iterations (|grad| = {:.3e})",
            result.iterations, result.grad_inf_norm
        );
        if strict {
            return Ok(2);
        }
    }
    Ok(0)
}

fn cmd_simulate(config_path: &Path) -> Result<i32> {
    let config = read_config(config_path)?;
    apply_thread_cap(&config);
    let spec = config.model.to_spec();
    let sim = config.simulate.as_ref().ok_or_else(|| {
        CliError::Usage("config is missing the `simulate` block".into())
    })?;
    let gen = sim.generator()?;
    let table = sample_dataset(&spec, &sim.parameters, sim.n, &gen, config.seed)?;

    let prefix = output_prefix(&config)?;
    let data_path = format!("{prefix}.data.csv");
    if let Some(parent) = Path::new(&data_path).parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::Io {
                path: parent.to_path_buf(),
                source: e,
            })?;
        }
    }
    write_table_csv(&table, Path::new(&data_path))?;
    write_artifact(
        Path::new(&format!("{prefix}.config.json")),
        &effective_config(&config),
    )?;
    println!("wrote {} rows to {data_path}", table.n_rows());
    Ok(0)
}

fn cmd_predict(config_path: &Path, params_path: &Path, output: Option<&Path>) -> Result<i32> {
    let config = read_config(config_path)?;
    apply_thread_cap(&config);
    let spec = config.model.to_spec();
    let fit_result = read_fit_result(params_path)?;
    if fit_result.spec != spec {
        return Err(CliError::Usage(
            "the fit result was estimated under a different model specification".into(),
        ));
    }
    let loaded = load_covariate_table(&input_path(&config)?, &spec)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }

    let params = &fit_result.params;
    let mut out = String::new();
    let mut header: Vec<String> = Vec::new();
    for eq in &spec.equations {
        for j in 0..eq.n_stages {
            header.push(format!("{}_p{}", eq.name, j));
        }
        header.push(format!("{}_argmax", eq.name));
    }
    out.push_str(&header.join(","));
    out.push('\n');

    let n = loaded.table.n_rows();
    let cols: Vec<Vec<&[f64]>> = spec
        .equations
        .iter()
        .map(|eq| {
            eq.covariates
                .iter()
                .map(|c| loaded.table.column(c).expect("validated"))
                .collect()
        })
        .collect();
    let mut x = Vec::new();
    for i in 0..n {
        let mut fields: Vec<String> = Vec::new();
        for (e, eq) in spec.equations.iter().enumerate() {
            x.clear();
            x.extend(cols[e].iter().map(|col| col[i]));
            let probs = marginal_stage_probs(params, &spec, &eq.name, &x)?;
            let argmax = probs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite"))
                .map(|(j, _)| j)
                .unwrap_or(0);
            for p in &probs {
                fields.push(p.to_string());
            }
            fields.push(argmax.to_string());
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }

    let out_path = match output {
        Some(p) => p.to_path_buf(),
        None => PathBuf::from(format!("{}.predictions.csv", output_prefix(&config)?)),
    };
    write_artifact(&out_path, &out)?;
    println!("wrote {n} prediction rows to {}", out_path.display());
    Ok(0)
}

fn cmd_contour(config_path: &Path, params_path: Option<&Path>) -> Result<i32> {
    let config = read_config(config_path)?;
    apply_thread_cap(&config);
    let spec = config.model.to_spec();
    let contour_cfg = config.contour.as_ref().ok_or_else(|| {
        CliError::Usage("config is missing the `contour` block".into())
    })?;
    let params: ParameterSet = match params_path {
        Some(p) => {
            let fr = read_fit_result(p)?;
            if fr.spec != spec {
                return Err(CliError::Usage(
                    "the fit result was estimated under a different model specification".into(),
                ));
            }
            fr.params
        }
        None => contour_cfg.parameters.clone().ok_or_else(|| {
            CliError::Usage(
                "provide --params or an inline `contour.parameters` block".into(),
            )
        })?,
    };

    let req = contour_cfg.request();
    let grid = contour_grid(&params, &spec, &req)?;

    // Long-format CSV: one row per node, equation, and stage.
    let mut out = String::from("var_a,var_b,equation,stage,probability,is_argmax\n");
    let res = req.resolution;
    for ib in 0..res {
        for ia in 0..res {
            let node = ib * res + ia;
            for eqc in &grid.equations {
                for (j, p) in eqc.probs[node].iter().enumerate() {
                    out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        grid.axis_a[ia],
                        grid.axis_b[ib],
                        eqc.name,
                        j,
                        p,
                        (eqc.argmax[node] == j) as u8
                    ));
                }
            }
        }
    }
    let prefix = output_prefix(&config)?;
    write_artifact(Path::new(&format!("{prefix}.contour.csv")), &out)?;
    write_artifact(
        Path::new(&format!("{prefix}.config.json")),
        &effective_config(&config),
    )?;
    if contour_cfg.svg {
        for eqc in &grid.equations {
            let svg = render_contour_svg(&grid, &eqc.name)?;
            write_artifact(Path::new(&format!("{prefix}.{}.svg", eqc.name)), &svg)?;
        }
    }
    println!(
        "wrote {res}x{res} contour grid for {} equations to {prefix}.contour.csv",
        grid.equations.len()
    );
    Ok(0)
}

fn parse_yes_no(cell: &str) -> Result<Option<bool>> {
    let c = cell.trim().to_ascii_lowercase();
    match c.as_str() {
        "" => Ok(None),
        "yes" | "true" | "1" => Ok(Some(true)),
        "no" | "false" | "0" => Ok(Some(false)),
        other => Err(CliError::Usage(format!(
            "cannot interpret {other:?} as yes/no"
        ))),
    }
}

fn cmd_stage(input: &Path, instrument: &str, merge: Option<&str>, output: &Path) -> Result<i32> {
    let merge_map: MergeMap = match (instrument, merge) {
        (_, Some(name)) => MergeMap::preset(name)?,
        ("walk_cycle", None) => MergeMap::walk_cycle_four_stage(),
        ("bikeshare", None) => MergeMap::bikeshare_four_stage(),
        (other, None) => {
            return Err(CliError::Usage(format!(
                "unknown instrument {other:?}; expected walk_cycle or bikeshare"
            )))
        }
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(input)
        .map_err(|e| CliError::Csv {
            path: input.to_path_buf(),
            source: Box::new(e),
        })?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Csv {
            path: input.to_path_buf(),
            source: Box::new(e),
        })?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Usage(format!("required column {name:?} is missing")))
    };

    let mut out = String::new();
    out.push_str(&headers.join(","));
    out.push_str(",label,stage\n");

    let cell_err = |row: usize, column: &str, e: mvoprobit::Error| CliError::Cell {
        row,
        column: column.to_string(),
        message: e.to_string(),
    };

    match instrument {
        "walk_cycle" => {
            let c_status = col("behavior_status")?;
            let c_realistic = col("realistic")?;
            let c_expect = col("expect_near_future")?;
            let c_duration = col("duration")?;
            for (line, record) in reader.records().enumerate() {
                let row = line + 1;
                let record = record.map_err(|e| CliError::Csv {
                    path: input.to_path_buf(),
                    source: Box::new(e),
                })?;
                let get = |i: usize| record.get(i).unwrap_or("").trim();
                let status = match get(c_status) {
                    "never_contemplated" => BehaviorStatus::NeverContemplated,
                    "contemplated" => BehaviorStatus::Contemplated,
                    "uses_mode" => BehaviorStatus::UsesMode,
                    other => {
                        return Err(CliError::Cell {
                            row,
                            column: "behavior_status".into(),
                            message: format!(
                                "{other:?} is not one of never_contemplated, contemplated, uses_mode"
                            ),
                        })
                    }
                };
                let duration = match get(c_duration) {
                    "" => None,
                    "under_one_year" => Some(UseDuration::UnderOneYear),
                    "one_year_or_more" => Some(UseDuration::OneYearOrMore),
                    other => {
                        return Err(CliError::Cell {
                            row,
                            column: "duration".into(),
                            message: format!(
                                "{other:?} is not one of under_one_year, one_year_or_more"
                            ),
                        })
                    }
                };
                let answers = WalkCycleAnswers {
                    behavior_status: status,
                    realistic: parse_yes_no(get(c_realistic))?,
                    expect_near_future: parse_yes_no(get(c_expect))?,
                    duration,
                };
                let label = assign_stage_walk_cycle(&answers)
                    .map_err(|e| cell_err(row, "behavior_status", e))?;
                let stage = merge_stages(label, &merge_map)
                    .map_err(|e| cell_err(row, "behavior_status", e))?;
                out.push_str(&record.iter().collect::<Vec<_>>().join(","));
                out.push_str(&format!(",{},{stage}\n", label.as_str()));
            }
        }
        "bikeshare" => {
            let c_weekly = col("weekly_use_expected")?;
            let c_contemplate = col("would_contemplate")?;
            let c_access = col("accessible")?;
            let c_likert = col("likelihood_6mo")?;
            for (line, record) in reader.records().enumerate() {
                let row = line + 1;
                let record = record.map_err(|e| CliError::Csv {
                    path: input.to_path_buf(),
                    source: Box::new(e),
                })?;
                let get = |i: usize| record.get(i).unwrap_or("").trim();
                let weekly = parse_yes_no(get(c_weekly))?.ok_or_else(|| CliError::Cell {
                    row,
                    column: "weekly_use_expected".into(),
                    message: "answer is required".into(),
                })?;
                let likert = match get(c_likert) {
                    "" => None,
                    other => Some(other.parse::<u8>().map_err(|_| CliError::Cell {
                        row,
                        column: "likelihood_6mo".into(),
                        message: format!("{other:?} is not an integer"),
                    })?),
                };
                let answers = BikeshareAnswers {
                    weekly_use_expected: weekly,
                    would_contemplate: parse_yes_no(get(c_contemplate))?,
                    accessible: parse_yes_no(get(c_access))?,
                    likelihood_6mo: likert,
                };
                let label = assign_stage_bikeshare(&answers)
                    .map_err(|e| cell_err(row, "weekly_use_expected", e))?;
                let stage = merge_stages(label, &merge_map)
                    .map_err(|e| cell_err(row, "weekly_use_expected", e))?;
                out.push_str(&record.iter().collect::<Vec<_>>().join(","));
                out.push_str(&format!(",{},{stage}\n", label.as_str()));
            }
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown instrument {other:?}; expected walk_cycle or bikeshare"
            )))
        }
    }

    write_artifact(output, &out)?;
    println!("wrote staged labels to {}", output.display());
    Ok(0)
}

fn cmd_sei(input: &Path, modes: &str, bands: Option<&Path>, output: &Path) -> Result<i32> {
    let mode_cols: Vec<&str> = modes.split(',').map(|s| s.trim()).collect();
    if mode_cols.is_empty() || mode_cols.iter().any(|s| s.is_empty()) {
        return Err(CliError::Usage(
            "--modes must be a comma-separated list of column names".into(),
        ));
    }
    let band_map = match bands {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io {
                path: p.to_path_buf(),
                source: e,
            })?;
            let map: std::collections::BTreeMap<String, f64> = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("cannot parse band map: {e}")))?;
            let bm = BandMidpoints {
                bands: map.into_iter().collect(),
            };
            bm.validate()?;
            bm
        }
        None => BandMidpoints::default(),
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(input)
        .map_err(|e| CliError::Csv {
            path: input.to_path_buf(),
            source: Box::new(e),
        })?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Csv {
            path: input.to_path_buf(),
            source: Box::new(e),
        })?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let idx: Vec<usize> = mode_cols
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h == c)
                .ok_or_else(|| CliError::Usage(format!("mode column {c:?} is missing")))
        })
        .collect::<Result<_>>()?;

    let mut out = String::new();
    out.push_str(&headers.join(","));
    out.push_str(",sei,hhi\n");
    for (line, record) in reader.records().enumerate() {
        let row = line + 1;
        let record = record.map_err(|e| CliError::Csv {
            path: input.to_path_buf(),
            source: Box::new(e),
        })?;
        let mut freqs = Vec::with_capacity(idx.len());
        for (&i, name) in idx.iter().zip(&mode_cols) {
            let cell = record.get(i).unwrap_or("").trim();
            // Band labels take precedence; plain numbers are accepted too.
            let value = match band_map.midpoint(cell) {
                Ok(v) => v,
                Err(_) => cell.parse::<f64>().map_err(|_| CliError::Cell {
                    row,
                    column: name.to_string(),
                    message: format!("{cell:?} is neither a known band nor a number"),
                })?,
            };
            freqs.push(value);
        }
        let s = sei(&freqs).map_err(|e| CliError::Cell {
            row,
            column: mode_cols.join("+"),
            message: e.to_string(),
        })?;
        let h = hhi(&freqs).map_err(|e| CliError::Cell {
            row,
            column: mode_cols.join("+"),
            message: e.to_string(),
        })?;
        out.push_str(&record.iter().collect::<Vec<_>>().join(","));
        out.push_str(&format!(",{s},{h}\n"));
    }

    write_artifact(output, &out)?;
    println!("wrote multimodality indices to {}", output.display());
    Ok(0)
}

fn parse_triple(text: &str, what: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = text.split(',').map(|s| s.trim()).collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!(
            "{what} must be three comma-separated numbers, got {text:?}"
        )));
    }
    let mut out = [0.0; 3];
    for (slot, p) in out.iter_mut().zip(&parts) {
        *slot = p.parse::<f64>().map_err(|_| {
            CliError::Usage(format!("cannot parse {p:?} in {what} as a number"))
        })?;
    }
    Ok(out)
}

fn cmd_mvnprob(upper: &str, lower: Option<&str>, rho: &str) -> Result<i32> {
    let upper = parse_triple(upper, "--upper")?;
    let lower = match lower {
        Some(l) => parse_triple(l, "--lower")?,
        None => [f64::NEG_INFINITY; 3],
    };
    let r = parse_triple(rho, "--rho")?;
    let corr = Corr3::new(r[0], r[1], r[2])?;
    let p = rectangle_prob(lower, upper, corr)?;
    println!("{p}");
    Ok(0)
}
