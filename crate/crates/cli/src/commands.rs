use std::fs;
use std::path::{Path, PathBuf};

use symrom::numcore::{dist2, RngStream};
use symrom::rom::{
    energy_trace, evaluate_mse, hamiltonian_trace, latent_defect, load_checkpoint, save_checkpoint,
    train, CotangentLift, ModelConfig, RomModel, TrainData, TrainError, INIT_STREAM,
};
use symrom::systems::{
    generate_dataset, initial_state, integrate, HamiltonianSystem, NewtonSettings, PdeSystem,
    SnapshotDataset, SystemSpec,
};

use crate::config::RunConfig;
use crate::csv::{states_csv, trace_csv, TraceReference};
use crate::error::CliError;
use crate::{with_threads, TraceMode, Variant};

const AUDIT_POINTS: usize = 100;
const AUDIT_STREAM: u64 = 4;

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn load_dataset(path: &Path) -> Result<SnapshotDataset, CliError> {
    SnapshotDataset::load(path)
        .map_err(|e| CliError::Validation(format!("cannot load dataset {}: {e}", path.display())))
}

/// Generates the configured dataset; returns its path.
pub fn cmd_datagen(
    config: &Path,
    dataset: Option<&Path>,
    seed: Option<u64>,
    threads: Option<usize>,
) -> Result<PathBuf, CliError> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(s) = seed {
        cfg.sampling.seed = s;
    }
    let path = dataset.map_or_else(|| cfg.io.dataset.clone(), Path::to_path_buf);
    let ds = with_threads(threads, || Ok(generate_dataset(&cfg.system, &cfg.sampling)?))?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    ds.save(&path)?;
    println!(
        "wrote {}: {} trajectories x {} snapshots ({} system)",
        path.display(),
        ds.n_traj(),
        ds.snapshots_per_trajectory(),
        ds.spec.kind()
    );
    let mut worst: f64 = 0.0;
    for i in 0..ds.n_traj() {
        let drift = ds.energy_drift(i)?;
        worst = worst.max(drift);
        println!("  trajectory {i}: max relative H drift {drift:.3e}");
    }
    println!("max relative H drift over all trajectories: {worst:.3e}");
    Ok(path)
}

pub struct TrainOptions {
    pub dataset: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub epochs: Option<usize>,
    pub variant: Variant,
    /// Record wall-clock seconds in loss.csv.
    pub timing: bool,
}

fn apply_variant(model: &ModelConfig, variant: Variant) -> ModelConfig {
    let mut m = model.clone();
    match variant {
        Variant::Full => {}
        Variant::HenonOnly => m.reflectors = 0,
        Variant::GreflectorOnly => m.henon_layers = 0,
    }
    m
}

/// Largest finite-difference defect of `f_dec ∘ flow` over random latent points.
fn audit(model: &RomModel, seed: u64) -> Result<f64, CliError> {
    let mut rng = RngStream::with_stream(seed, AUDIT_STREAM);
    let mut worst: f64 = 0.0;
    for _ in 0..AUDIT_POINTS {
        let y: Vec<f64> = (0..2 * model.k()).map(|_| rng.uniform(-1.0, 1.0)).collect();
        worst = worst.max(latent_defect(model, &y, 1, 1e-6)?);
    }
    Ok(worst)
}

/// Trains a model; returns the output directory.
pub fn cmd_train(config: &Path, opts: &TrainOptions) -> Result<PathBuf, CliError> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(s) = opts.seed {
        cfg.training.seed = s;
    }
    if let Some(e) = opts.epochs {
        cfg.training.epochs = e;
    }
    cfg.model = apply_variant(&cfg.model, opts.variant);
    cfg.validate()?;
    let ds_path = opts.dataset.clone().unwrap_or_else(|| cfg.io.dataset.clone());
    let ds = load_dataset(&ds_path)?;
    if ds.spec != cfg.system {
        return Err(CliError::Validation(format!(
            "dataset {} was generated for {:?}, config has {:?}",
            ds_path.display(),
            ds.spec,
            cfg.system
        )));
    }
    if ds.n_steps < cfg.training.unroll {
        return Err(CliError::Validation(format!(
            "unroll {} exceeds the dataset's {} steps",
            cfg.training.unroll, ds.n_steps
        )));
    }
    let out = opts.out.clone().unwrap_or_else(|| cfg.io.out_dir.clone());
    ensure_dir(&out)?;
    fs::write(out.join("config.toml"), cfg.to_toml())?;

    let n = cfg.system.grid_points();
    let mut rng = RngStream::with_stream(cfg.training.seed, INIT_STREAM);
    let model = RomModel::init(n, &cfg.model, &mut rng)?;
    let data = TrainData::from_dataset(&ds)?;
    println!(
        "training {} model: n = {n}, k = {}, {} windows of length {}, {} epochs",
        cfg.model.variant(),
        cfg.model.latent_dim,
        data.lengths().iter().map(|l| l - cfg.training.unroll).sum::<usize>(),
        cfg.training.unroll,
        cfg.training.epochs
    );
    let ckpt = out.join("model.ckpt");
    let loss_path = out.join("loss.csv");
    let result = with_threads(opts.threads, || {
        Ok(train(model, &data, &cfg.training, |e| {
            let p = e.parts;
            println!(
                "epoch {:>4}  L_r {:.4e}  L_f {:.4e}  L_ham {:.4e}  L_total {:.4e}",
                e.epoch, p.l_r, p.l_f, p.l_ham, p.l_total
            );
        }))
    })?;
    match result {
        Ok((trained, report)) => {
            save_checkpoint(&ckpt, &trained, &cfg.model)?;
            fs::write(&loss_path, report.to_csv(opts.timing))?;
            let defect = audit(&trained, cfg.training.seed)?;
            println!("symplecticity defect of decoder after flow ({AUDIT_POINTS} points): {defect:.3e}");
            println!("wrote {} and {}", ckpt.display(), loss_path.display());
            Ok(out)
        }
        Err(TrainError::Diverged { epoch, last_good, report }) => {
            save_checkpoint(&ckpt, &last_good, &cfg.model)?;
            fs::write(&loss_path, report.to_csv(opts.timing))?;
            Err(CliError::Diverged(format!(
                "non-finite loss in epoch {epoch}; last good model kept at {}",
                ckpt.display()
            )))
        }
        Err(TrainError::Invalid(e)) => Err(e.into()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub method: String,
    pub k: usize,
    pub mse: f64,
}

fn method_name(variant: &str) -> &'static str {
    match variant {
        "henon+greflector" => "sym",
        "henon-only" => "henon-only",
        "greflector-only" => "greflector-only",
        _ => "inclusion-only",
    }
}

/// Reconstruction MSE of every requested method on the whole dataset.
pub fn cmd_eval(
    dataset: &Path,
    checkpoints: &[PathBuf],
    methods: Option<&[String]>,
    out: Option<&Path>,
    threads: Option<usize>,
) -> Result<Vec<EvalRow>, CliError> {
    const KNOWN: [&str; 4] = ["sym", "henon-only", "greflector-only", "cotangent"];
    if let Some(ms) = methods {
        if let Some(bad) = ms.iter().find(|m| !KNOWN.contains(&m.as_str())) {
            return Err(CliError::Validation(format!("unknown method {bad:?}")));
        }
    }
    let wanted = |m: &str| methods.is_none_or(|ms| ms.iter().any(|x| x == m));
    let ds = load_dataset(dataset)?;
    let n = ds.spec.grid_points();
    let mut models = Vec::new();
    for path in checkpoints {
        let (model, cfg) = load_checkpoint(path)
            .map_err(|e| CliError::Validation(format!("cannot load checkpoint {}: {e}", path.display())))?;
        if model.n() != n {
            return Err(CliError::Validation(format!(
                "{} has n = {}, dataset has n = {n}",
                path.display(),
                model.n()
            )));
        }
        models.push((method_name(cfg.variant()), model));
    }
    let k = models[0].1.k();
    if models.iter().any(|(_, m)| m.k() != k) {
        return Err(CliError::Validation("checkpoints disagree on the latent dimension".into()));
    }
    if let Some(ms) = methods {
        for m in ms.iter().filter(|m| *m != "cotangent") {
            if !models.iter().any(|(name, _)| name == m) {
                return Err(CliError::Validation(format!("no checkpoint for method {m}")));
            }
        }
    }
    let trajs: Vec<Vec<&[f64]>> = (0..ds.n_traj()).map(|i| ds.trajectory(i)).collect();
    let rows = with_threads(threads, || {
        let mut rows = Vec::new();
        if wanted("cotangent") {
            let all: Vec<&[f64]> = trajs.iter().flatten().copied().collect();
            let lift = CotangentLift::fit(&all, k)?;
            rows.push(EvalRow { method: "cotangent".into(), k, mse: evaluate_mse(&lift, &trajs)? });
        }
        for (name, model) in &models {
            if wanted(name) {
                rows.push(EvalRow { method: name.to_string(), k, mse: evaluate_mse(model, &trajs)? });
            }
        }
        Ok(rows)
    })?;
    let mut csv = String::from("method,k,mse\n");
    println!("{:<18} {:>4} {:>14}", "method", "k", "mse");
    for r in &rows {
        csv.push_str(&format!("{},{},{:.16e}\n", r.method, r.k, r.mse));
        println!("{:<18} {:>4} {:>14.6e}", r.method, r.k, r.mse);
    }
    let dir = out.map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    ensure_dir(&dir)?;
    fs::write(dir.join("metrics.csv"), csv)?;
    Ok(rows)
}

pub enum TraceSource {
    Dataset { path: PathBuf, trajectory: usize },
    Params { config: PathBuf, params: Vec<f64> },
}

fn warn_out_of_range(cfg: &RunConfig, params: &[f64]) {
    let s = &cfg.sampling;
    let outside = |v: f64, r: [f64; 2]| v < r[0] || v > r[1];
    let off = match cfg.system {
        SystemSpec::Wave { .. } => outside(params[0], s.a0_range) || outside(params[1], s.x0_range),
        SystemSpec::ParamWave { .. } => params.iter().any(|w| outside(*w, [0.0, 1.0])),
        SystemSpec::Nls { .. } => outside(params[0], s.eps_range),
    };
    if off {
        eprintln!("warning: parameters {params:?} lie outside the training range");
    }
}

/// Writes `trace.csv`; returns the rows as (t, H, dH) records.
pub fn cmd_trace(
    checkpoint: &Path,
    source: &TraceSource,
    steps: Option<usize>,
    mode: TraceMode,
    out: Option<&Path>,
) -> Result<Vec<symrom::rom::TraceRecord>, CliError> {
    let (model, _) = load_checkpoint(checkpoint)
        .map_err(|e| CliError::Validation(format!("cannot load checkpoint {}: {e}", checkpoint.display())))?;
    let (spec, sys, stored): (SystemSpec, PdeSystem, Option<Vec<Vec<f64>>>) = match source {
        TraceSource::Dataset { path, trajectory } => {
            let ds = load_dataset(path)?;
            if *trajectory >= ds.n_traj() {
                return Err(CliError::Validation(format!(
                    "trajectory {trajectory} out of range (dataset has {})",
                    ds.n_traj()
                )));
            }
            let states = ds.trajectory(*trajectory).iter().map(|x| x.to_vec()).collect();
            (ds.spec.clone(), ds.system(*trajectory)?, Some(states))
        }
        TraceSource::Params { config, params } => {
            let cfg = RunConfig::load(config)?;
            if params.len() != cfg.system.param_len() {
                return Err(CliError::Validation(format!(
                    "{} system needs {} parameters, got {}",
                    cfg.system.kind(),
                    cfg.system.param_len(),
                    params.len()
                )));
            }
            warn_out_of_range(&cfg, params);
            let sys = PdeSystem::new(&cfg.system, params)?;
            (cfg.system, sys, None)
        }
    };
    if model.n() != spec.grid_points() {
        return Err(CliError::Validation(format!(
            "checkpoint has n = {}, system has N = {}",
            model.n(),
            spec.grid_points()
        )));
    }
    let dt = spec.dt();
    let (records, reference) = match mode {
        TraceMode::Rollout => {
            let x0 = match (&stored, source) {
                (Some(s), _) => s[0].clone(),
                (None, TraceSource::Params { params, .. }) => initial_state(&spec, params)?,
                _ => unreachable!("dataset source always has stored states"),
            };
            let steps = steps.or(stored.as_ref().map(|s| s.len() - 1)).unwrap_or(0);
            let records = hamiltonian_trace(&model, &x0, steps, dt, &sys)?;
            let states = if steps == 0 {
                vec![x0.clone()]
            } else {
                model.rollout(&x0, steps, symrom::rom::Space::Latent)?
            };
            let reference = integrate(&sys, &x0, dt, steps, &NewtonSettings::default())?;
            (records, Some(reference_columns(&sys, &states, &reference)?))
        }
        TraceMode::Reconstruct => {
            let Some(stored) = stored else {
                return Err(CliError::Validation("reconstruct mode needs --dataset".into()));
            };
            let count = steps.map_or(stored.len(), |s| s + 1);
            if count > stored.len() {
                return Err(CliError::Validation(format!(
                    "reconstruct mode covers at most {} steps",
                    stored.len() - 1
                )));
            }
            let recon = stored[..count]
                .iter()
                .map(|x| model.reconstruct(x))
                .collect::<Result<Vec<_>, _>>()?;
            let records = energy_trace(&recon, dt, &sys)?;
            (records, Some(reference_columns(&sys, &recon, &stored[..count])?))
        }
    };
    let dir = out.map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    ensure_dir(&dir)?;
    fs::write(dir.join("trace.csv"), trace_csv(&records, reference.as_ref()))?;
    let worst = records.iter().fold(0.0f64, |m, r| m.max(r.dh.abs()));
    let h0 = records.first().map_or(0.0, |r| r.h);
    println!(
        "{} rows, max |H - H0| = {worst:.4e} (relative {:.4e})",
        records.len(),
        if h0 != 0.0 { worst / h0.abs() } else { worst }
    );
    Ok(records)
}

fn reference_columns(
    sys: &PdeSystem,
    states: &[Vec<f64>],
    reference: &[Vec<f64>],
) -> Result<TraceReference, CliError> {
    let h = reference.iter().map(|x| sys.hamiltonian(x)).collect::<Result<Vec<_>, _>>()?;
    let state_error = states.iter().zip(reference).map(|(a, b)| dist2(a, b).sqrt()).collect();
    Ok(TraceReference { h, state_error })
}

/// Writes `traj_XXXX.csv` per trajectory; returns the written paths.
pub fn cmd_export(dataset: &Path, format: &str, out: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    if format != "csv" {
        return Err(CliError::Validation(format!("unknown export format {format:?} (supported: csv)")));
    }
    let ds = load_dataset(dataset)?;
    let dir = out.map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    ensure_dir(&dir)?;
    let times = ds.times();
    let mut paths = Vec::with_capacity(ds.n_traj());
    for i in 0..ds.n_traj() {
        let path = dir.join(format!("traj_{i:04}.csv"));
        fs::write(&path, states_csv(&times, &ds.trajectory(i)))?;
        paths.push(path);
    }
    println!("exported {} trajectories to {}", paths.len(), dir.display());
    Ok(paths)
}
