use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use levy_mellin::estimators::linspace;
use levy_mellin::io::{fmt_f64, read_sample_csv, write_csv, write_density_csv, write_json, write_laplace_curve_csv, write_sample_csv};
use levy_mellin::kernels::{KernelSpec, WeightKind};
use levy_mellin::mellin::laplace_curve;
use levy_mellin::rates::{median, run_replicates, DecayClass};
use levy_mellin::sampling::sample_stationary;
use levy_mellin::{
    rate_study as run_rate_study, run_algorithm2, Complex64, EstimationConfig, LaplaceCurve, RateStudyConfig,
    SubordinatorModel,
};
use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::manifest::RunManifest;
use crate::{Common, EstimationArgs, ModelArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] levy_mellin::Error),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Io(_) => 4,
            CliError::Core(levy_mellin::Error::Io(_)) => 4,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 2,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

const DEFAULT_SEED: u64 = 20240101;

fn load_config(path: Option<&Path>) -> CliResult<Map<String, Value>> {
    let Some(path) = path else {
        return Ok(Map::new());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(CliError::Input(format!("{}: config must be a JSON object", path.display()))),
        Err(e) => Err(CliError::Input(format!("{}: {e}", path.display()))),
    }
}

/// Overwrites the keys of `base` with those of `layer` (one level deep).
fn overlay(base: &mut Value, layer: Option<&Value>) -> CliResult<()> {
    match (base, layer) {
        (_, None) => Ok(()),
        (Value::Object(b), Some(Value::Object(l))) => {
            for (k, v) in l {
                b.insert(k.clone(), v.clone());
            }
            Ok(())
        }
        (_, Some(_)) => Err(CliError::Input("config section must be a JSON object".into())),
    }
}

fn parse<T: serde::de::DeserializeOwned>(value: Value, what: &str) -> CliResult<T> {
    serde_json::from_value(value).map_err(|e| CliError::Input(format!("{what}: {e}")))
}

fn get<T: serde::de::DeserializeOwned>(file: &Map<String, Value>, key: &str) -> CliResult<Option<T>> {
    file.get(key).map(|v| parse(v.clone(), key)).transpose()
}

fn check_keys(file: &Map<String, Value>, allowed: &[&str]) -> CliResult<()> {
    match file.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(CliError::Input(format!("unknown config key '{k}' (expected one of {allowed:?})"))),
        None => Ok(()),
    }
}

fn seed(common: &Common, file: &Map<String, Value>) -> CliResult<u64> {
    Ok(match common.seed {
        Some(s) => s,
        None => get(file, "seed")?.unwrap_or(DEFAULT_SEED),
    })
}

fn default_cp_exp() -> SubordinatorModel {
    SubordinatorModel::CpExp { mu: 1.8, a: 0.7, b: 0.2 }
}

fn default_trunc_norm() -> SubordinatorModel {
    SubordinatorModel::TruncNormCp { lambda: 1.0, q: 0.5, alpha: 0.1 }
}

fn resolve_model(file: Option<&Value>, flags: &ModelArgs) -> CliResult<SubordinatorModel> {
    let mut value = serde_json::to_value(default_cp_exp()).expect("model serializes");
    if let Some(layer) = file {
        if let Some(kind) = layer.get("model").and_then(Value::as_str) {
            value = kind_default(kind)?;
        }
        overlay(&mut value, Some(layer))?;
    }
    if let Some(kind) = &flags.model {
        if value.get("model").and_then(Value::as_str) != Some(kind.as_str()) {
            value = kind_default(kind)?;
        }
    }
    let kind = value["model"].as_str().unwrap_or_default().to_string();
    let params: [(&str, Option<f64>, &str); 6] = [
        ("mu", flags.mu, "cp_exp"),
        ("a", flags.a, "cp_exp"),
        ("b", flags.b, "cp_exp"),
        ("lambda", flags.lambda, "trunc_norm_cp"),
        ("q", flags.q, "trunc_norm_cp"),
        ("alpha", flags.alpha, "trunc_norm_cp"),
    ];
    for (name, flag, owner) in params {
        if let Some(x) = flag {
            if owner != kind {
                return Err(CliError::Input(format!("--{name} does not apply to model {kind}")));
            }
            value[name] = json!(x);
        }
    }
    let model: SubordinatorModel = parse(value, "model")?;
    model.validate()?;
    Ok(model)
}

fn kind_default(kind: &str) -> CliResult<Value> {
    let model = match kind {
        "cp_exp" => default_cp_exp(),
        "trunc_norm_cp" => default_trunc_norm(),
        other => return Err(CliError::Input(format!("unknown model '{other}' (expected cp_exp or trunc_norm_cp)"))),
    };
    Ok(serde_json::to_value(model).expect("model serializes"))
}

fn resolve_estimation(file: Option<&Value>, flags: &EstimationArgs, base: EstimationConfig) -> CliResult<EstimationConfig> {
    let mut value = serde_json::to_value(base).expect("config serializes");
    overlay(&mut value, file)?;
    let set = |value: &mut Value, key: &str, x: Option<Value>| {
        if let Some(x) = x {
            value[key] = x;
        }
    };
    set(&mut value, "u0", flags.u0.map(|x| json!(x)));
    set(&mut value, "vn", flags.vn.map(|x| json!(x)));
    set(&mut value, "eps", flags.eps.map(|x| json!(x)));
    set(&mut value, "grid_m", flags.grid_m.map(|x| json!(x)));
    set(&mut value, "density_grid_m", flags.density_grid_m.map(|x| json!(x)));
    if let Some(w) = &flags.weight {
        let w: WeightKind = w.parse()?;
        value["weight"] = serde_json::to_value(w).expect("weight serializes");
    }
    if let Some(k) = &flags.kernel {
        let k: KernelSpec = k.parse()?;
        value["kernel"] = serde_json::to_value(k).expect("kernel serializes");
    }
    if flags.positive_part {
        value["positive_part"] = json!(true);
    }
    let config: EstimationConfig = parse(value, "estimation")?;
    config.validate()?;
    Ok(config)
}

fn record(manifest: &mut RunManifest, path: PathBuf) -> PathBuf {
    manifest.outputs.push(path.clone());
    path
}

/// CSV with free-form string cells.
fn write_text_csv(path: &Path, headers: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", headers.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

fn write_curve_with_theory(path: &Path, curve: &LaplaceCurve, model: &SubordinatorModel) -> CliResult<()> {
    let mut rows = Vec::with_capacity(curve.len());
    for k in 0..curve.len() {
        let y = curve.values[k];
        let phi = model.laplace_exponent(Complex64::new(curve.u0, curve.v[k]))?;
        let ill = if curve.ill_conditioned[k] { 1.0 } else { 0.0 };
        rows.push(vec![curve.v[k], y.re, y.im, phi.re, phi.im, curve.denominator_ratio[k], ill]);
    }
    write_csv(path, &["v", "re_Y", "im_Y", "re_phi", "im_phi", "denom_ratio", "ill_flag"], &rows)?;
    Ok(())
}

/// Grid `-half, ..., half` with step `step`, exact at zero.
fn centered_grid(half_steps: i64, step_denominator: f64) -> Vec<f64> {
    (-half_steps..=half_steps).map(|i| i as f64 / step_denominator).collect()
}

pub fn simulate(common: &Common, flags: &ModelArgs, n: Option<usize>, manifest: &mut RunManifest) -> CliResult<()> {
    let file = load_config(common.config.as_deref())?;
    check_keys(&file, &["model", "n", "seed"])?;
    let model = resolve_model(file.get("model"), flags)?;
    let n = match n {
        Some(n) => n,
        None => get(&file, "n")?.unwrap_or(10_000),
    };
    let seed = seed(common, &file)?;
    manifest.config = json!({ "model": model, "n": n });
    manifest.seeds = vec![seed];

    let sample = sample_stationary(&model, n, seed)?;
    write_sample_csv(&record(manifest, common.out.join("sample.csv")), &sample)?;
    let meta = json!({
        "model": model,
        "n": sample.len(),
        "seed": seed,
        "spacing": sample.spacing,
        "mean": sample.mean(),
        "max": sample.max(),
    });
    write_json(&record(manifest, common.out.join("sample.json")), &meta)?;
    Ok(())
}

#[derive(Serialize)]
struct TripletSummary {
    mu_hat: f64,
    lambda_hat: f64,
    n: usize,
    ill_conditioned_count: usize,
    grid_points: usize,
    degenerate_sample: bool,
    config: EstimationConfig,
}

pub fn estimate(common: &Common, input: Option<&Path>, flags: &EstimationArgs, manifest: &mut RunManifest) -> CliResult<()> {
    let file = load_config(common.config.as_deref())?;
    check_keys(&file, &["input", "spacing", "estimation", "x_min", "x_max", "x_points", "seed"])?;
    let input: PathBuf = match input {
        Some(p) => p.to_path_buf(),
        None => get(&file, "input")?.ok_or_else(|| CliError::Input("no sample file given (--input)".into()))?,
    };
    let spacing: f64 = get(&file, "spacing")?.unwrap_or(1.0);
    let config = resolve_estimation(file.get("estimation"), flags, EstimationConfig::default())?;
    let x_min = flags.x_min.map_or_else(|| get(&file, "x_min").map(|v| v.unwrap_or(0.0)), Ok)?;
    let x_max = flags.x_max.map_or_else(|| get(&file, "x_max").map(|v| v.unwrap_or(3.0)), Ok)?;
    let x_points = flags.x_points.map_or_else(|| get(&file, "x_points").map(|v| v.unwrap_or(301)), Ok)?;
    if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) || x_points < 2 {
        return Err(CliError::Input(format!("bad x grid: [{x_min}, {x_max}] with {x_points} points")));
    }
    manifest.config = json!({
        "input": input, "spacing": spacing, "estimation": config,
        "x_min": x_min, "x_max": x_max, "x_points": x_points,
    });
    if let Some(s) = common.seed {
        manifest.seeds = vec![s];
    }

    let sample = match read_sample_csv(&input, spacing) {
        Err(levy_mellin::Error::Io(msg)) => return Err(CliError::Io(format!("{}: {msg}", input.display()))),
        other => other?,
    };
    let x = linspace(x_min, x_max, x_points);
    let (triplet, density) = run_algorithm2(&sample, &config, &x)?;
    let summary = TripletSummary {
        mu_hat: triplet.mu_hat,
        lambda_hat: triplet.lambda_hat,
        n: sample.len(),
        ill_conditioned_count: triplet.ill_conditioned_count,
        grid_points: triplet.curve.len(),
        degenerate_sample: triplet.degenerate_sample,
        config,
    };
    write_json(&record(manifest, common.out.join("triplet.json")), &summary)?;
    write_laplace_curve_csv(&record(manifest, common.out.join("laplace_curve.csv")), &triplet.curve)?;
    write_density_csv(&record(manifest, common.out.join("levy_density.csv")), &density)?;
    Ok(())
}

pub fn experiment1(common: &Common, manifest: &mut RunManifest) -> CliResult<()> {
    let file = load_config(common.config.as_deref())?;
    check_keys(&file, &["n", "replicates", "n_ladder", "vn", "seed"])?;
    let seed = seed(common, &file)?;
    let n: usize = get(&file, "n")?.unwrap_or(10_000);
    let replicates: usize = get(&file, "replicates")?.unwrap_or(25);
    let ladder: Vec<usize> = get(&file, "n_ladder")?.unwrap_or_else(|| vec![1_000, 10_000, 100_000]);
    let vn: f64 = get(&file, "vn")?.unwrap_or(30.0);
    if ladder.is_empty() || ladder.contains(&0) || replicates == 0 {
        return Err(CliError::Input("n_ladder and replicates must be nonempty and positive".into()));
    }
    let model = default_cp_exp();
    let u0 = 29.0;
    let config = EstimationConfig { u0, vn, ..Default::default() };
    config.validate()?;
    manifest.config = json!({
        "model": model, "n": n, "u0": u0, "v_range": [-30.0, 30.0],
        "replicates": replicates, "n_ladder": ladder, "estimation": config,
    });
    manifest.seeds = vec![seed];

    let sample = sample_stationary(&model, n, seed)?;
    let curve = laplace_curve(&sample, u0, &centered_grid(300, 10.0), config.floor)?;
    write_curve_with_theory(&record(manifest, common.out.join("laplace_curve.csv")), &curve, &model)?;

    let records = run_replicates(&model, &ladder, replicates, seed, |_| Ok(vn), &config, None);
    let truth = [("mu", model.drift()), ("lambda", model.total_mass())];
    let mut rows = Vec::new();
    for (name, true_value) in truth {
        for r in &records {
            let est = if name == "mu" { r.mu_hat } else { r.lambda_hat };
            let est = est.unwrap_or(f64::NAN);
            rows.push(vec![
                name.to_string(),
                r.n.to_string(),
                r.replicate.to_string(),
                r.seed.to_string(),
                fmt_f64(est),
                fmt_f64(true_value),
                fmt_f64((est - true_value).abs()),
            ]);
        }
    }
    write_text_csv(
        &record(manifest, common.out.join("replicate_estimates.csv")),
        &["parameter", "n", "replicate", "seed", "estimate", "truth", "abs_error"],
        &rows,
    )?;

    let mut summary = Vec::new();
    for &n in &ladder {
        let cell: Vec<_> = records.iter().filter(|r| r.n == n).collect();
        let errs = |pick: fn(&levy_mellin::rates::ReplicateRecord) -> Option<f64>, truth: f64| -> Vec<f64> {
            cell.iter().filter_map(|r| pick(r)).map(|e| (e - truth).abs()).collect()
        };
        let mu = errs(|r| r.mu_hat, truth[0].1);
        let lambda = errs(|r| r.lambda_hat, truth[1].1);
        let failures = cell.iter().filter(|r| r.error.is_some()).count();
        summary.push(vec![n as f64, median_or_nan(&mu), median_or_nan(&lambda), failures as f64]);
    }
    write_csv(
        &record(manifest, common.out.join("replicate_summary.csv")),
        &["n", "median_abs_err_mu", "median_abs_err_lambda", "failures"],
        &summary,
    )?;
    Ok(())
}

fn median_or_nan(values: &[f64]) -> f64 {
    if values.is_empty() {
        f64::NAN
    } else {
        median(values)
    }
}

pub fn experiment2(common: &Common, manifest: &mut RunManifest) -> CliResult<()> {
    let file = load_config(common.config.as_deref())?;
    check_keys(&file, &["n", "vn", "seed"])?;
    let seed = seed(common, &file)?;
    let n: usize = get(&file, "n")?.unwrap_or(10_000);
    let vn: f64 = get(&file, "vn")?.unwrap_or(5.0);
    let model = default_trunc_norm();
    let u0 = 1.0;
    let config = EstimationConfig { u0, vn, ..Default::default() };
    config.validate()?;
    let x = linspace(0.0, 3.0, 301);
    manifest.config = json!({
        "model": model, "n": n, "u0": u0, "v_range": [-5.0, 5.0],
        "x_range": [0.0, 3.0], "x_points": x.len(), "estimation": config,
    });
    manifest.seeds = vec![seed];

    let sample = sample_stationary(&model, n, seed)?;
    let curve = laplace_curve(&sample, u0, &centered_grid(50, 10.0), config.floor)?;
    write_curve_with_theory(&record(manifest, common.out.join("laplace_curve.csv")), &curve, &model)?;

    let (triplet, est) = run_algorithm2(&sample, &config, &x)?;
    let rows: Vec<Vec<f64>> = (0..x.len())
        .map(|k| {
            let xk = x[k];
            vec![
                xk,
                est.nu_hat[k],
                est.nu_bar_hat[k],
                est.imag_residual[k],
                model.levy_density(xk),
                model.levy_density_bar(xk, u0),
                model.jump_law_density(xk),
            ]
        })
        .collect();
    write_csv(
        &record(manifest, common.out.join("levy_density.csv")),
        &["x", "nu_hat", "nu_bar_hat", "imag_residual", "nu_true", "nu_bar_true", "jump_law_density"],
        &rows,
    )?;
    let summary = json!({
        "mu_hat": triplet.mu_hat,
        "lambda_hat": triplet.lambda_hat,
        "mu_true": model.drift(),
        "lambda_true": model.total_mass(),
        "ill_conditioned_count": triplet.ill_conditioned_count,
    });
    write_json(&record(manifest, common.out.join("triplet.json")), &summary)?;
    Ok(())
}

fn parse_ladder(text: &str) -> CliResult<Vec<usize>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<usize>().map_err(|e| CliError::Input(format!("n ladder entry '{t}': {e}"))))
        .collect()
}

fn default_study() -> RateStudyConfig {
    RateStudyConfig {
        smoothness: 0,
        beta: 0.7 / 1.8,
        alpha: 1.0,
        class: DecayClass::Polynomial,
        replicates: 25,
        n_ladder: vec![1_000, 10_000, 100_000],
        radius: 1.0,
        x_range: (0.0, 3.0),
        x_points: 301,
        seed: DEFAULT_SEED,
    }
}

pub fn rate_study(
    common: &Common,
    n_ladder: Option<String>,
    replicates: Option<usize>,
    manifest: &mut RunManifest,
) -> CliResult<()> {
    let file = load_config(common.config.as_deref())?;
    check_keys(&file, &["study", "model", "estimation", "seed"])?;
    let mut study = serde_json::to_value(default_study()).expect("study serializes");
    overlay(&mut study, file.get("study"))?;
    if let Some(s) = common.seed.or(get(&file, "seed")?) {
        study["seed"] = json!(s);
    }
    if let Some(text) = n_ladder {
        study["n_ladder"] = json!(parse_ladder(&text)?);
    }
    if let Some(r) = replicates {
        study["replicates"] = json!(r);
    }
    let study: RateStudyConfig = parse(study, "study")?;
    let model = resolve_model(file.get("model"), &ModelArgs::default())?;
    let template = resolve_estimation(
        file.get("estimation"),
        &EstimationArgs::default(),
        EstimationConfig { u0: 29.0, ..Default::default() },
    )?;
    manifest.config = json!({ "study": study, "model": model, "estimation": template });
    manifest.seeds = vec![study.seed];

    let report = run_rate_study(&study, &model, &template)?;
    write_json(&record(manifest, common.out.join("mise_report.json")), &report)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_parsing_skips_blanks_and_rejects_garbage() {
        assert_eq!(parse_ladder("1000, 10000,").unwrap(), vec![1000, 10000]);
        assert!(parse_ladder("").unwrap().is_empty());
        assert_eq!(parse_ladder("10,x").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(CliError::from(levy_mellin::Error::Truncation { terms: 5, ratio: 1.0 }).exit_code(), 3);
        assert_eq!(CliError::from(levy_mellin::Error::DegenerateWeights("zero")).exit_code(), 3);
        assert_eq!(CliError::from(levy_mellin::Error::InvalidSample("empty".into())).exit_code(), 2);
        assert_eq!(CliError::from(levy_mellin::Error::Io("disk".into())).exit_code(), 4);
    }

    #[test]
    fn estimation_flags_win_over_file_values() {
        let file = json!({"u0": 3.0, "vn": 8.0, "weight": "epanechnikov"});
        let flags = EstimationArgs { vn: Some(12.0), ..Default::default() };
        let c = resolve_estimation(Some(&file), &flags, EstimationConfig::default()).unwrap();
        assert_eq!((c.u0, c.vn, c.weight), (3.0, 12.0, WeightKind::Epanechnikov));
        let typo = json!({"vnn": 1.0});
        assert_eq!(resolve_estimation(Some(&typo), &EstimationArgs::default(), EstimationConfig::default()).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn model_kind_switch_resets_parameters() {
        let flags = ModelArgs { model: Some("trunc_norm_cp".into()), q: Some(0.3), ..Default::default() };
        let m = resolve_model(None, &flags).unwrap();
        assert_eq!(m, SubordinatorModel::TruncNormCp { lambda: 1.0, q: 0.3, alpha: 0.1 });
        let bad = ModelArgs { model: Some("levy".into()), ..Default::default() };
        assert!(resolve_model(None, &bad).is_err());
    }
}
