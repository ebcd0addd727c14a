use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use mlcp_core::{
    add_mixed_noise, ergas, gen_lowrank, gen_mask, load_tensor, lrtc_solve, parse_key_values, psnr,
    rescale_unit, save_tensor, ssim, trpca_solve, tubal_rank, DenseTensor, NoiseSpec,
    RecoveryReport, SamplingMask, ShrinkRule, SolverConfig,
};

use crate::{
    parse_fraction, parse_nonneg, parse_range, CompleteArgs, DenoiseArgs, EvalArgs, SolverFlags,
    SynthArgs,
};

/// Bad flags or config values; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

/// Solver config plus the run keys (`seed`, `sr`, ...) found in the config file.
struct Resolved {
    cfg: SolverConfig,
    run: BTreeMap<String, String>,
}

fn resolve(flags: &SolverFlags, run_keys: &[&str]) -> Result<Resolved> {
    let mut cfg = SolverConfig::default();
    let mut run = BTreeMap::new();
    if let Some(path) = &flags.config {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let pairs =
            parse_key_values(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
        for (k, v) in pairs {
            if run_keys.contains(&k.as_str()) {
                run.insert(k, v);
            } else {
                cfg.set(&k, &v)
                    .map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
            }
        }
    }
    let f = flags;
    for (key, val) in [
        ("gamma", f.gamma),
        ("epsilon", f.epsilon),
        ("mu0", f.mu0),
        ("rho0", f.rho0),
        ("gamma1", f.gamma1),
        ("growth", f.growth),
        ("tol", f.tol),
        ("tau0", f.tau0),
        ("tau1", f.tau1),
        ("tau1_scale", f.tau1_scale),
        ("tau2", f.tau2),
    ] {
        if let Some(v) = val {
            cfg.set(key, &v.to_string())
                .map_err(|e| UsageError(e.to_string()))?;
        }
    }
    if let Some(n) = f.max_iter {
        cfg.max_iter = n;
    }
    if let Some(b) = &f.beta {
        cfg.set("beta", b).map_err(|e| UsageError(e.to_string()))?;
    }
    if f.strict_prox {
        cfg.shrink_rule = ShrinkRule::Strict;
    }
    cfg.validate().map_err(|e| UsageError(e.to_string()))?;
    Ok(Resolved { cfg, run })
}

fn run_value<T>(
    flag: Option<T>,
    run: &BTreeMap<String, String>,
    key: &str,
    check: impl Fn(&str) -> std::result::Result<T, String>,
) -> Result<Option<T>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match run.get(key) {
        None => Ok(None),
        Some(v) => check(v)
            .map(Some)
            .map_err(|e| UsageError(format!("config key {key}: {e}")).into()),
    }
}

fn parse_u64(s: &str) -> std::result::Result<u64, String> {
    s.parse().map_err(|e| format!("{s:?}: {e}"))
}

fn parse_sr(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{s:?}: {e}"))?;
    if !(v > 0.0 && v <= 1.0) {
        return Err(format!("sampling rate must be in (0, 1], got {v}"));
    }
    Ok(v)
}

fn fmt_metric(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else if v.is_nan() {
        "n/a".into()
    } else {
        format!("{v:.6}")
    }
}

const METRICS_HEADER: &str = "method,sr_or_noise,psnr,ssim,fsim,ergas";

/// One metrics row; FSIM is not computed and ERGAS is `n/a` for zero-mean bands.
fn metrics_row(
    method: &str,
    setting: &str,
    x: &DenseTensor,
    reference: &DenseTensor,
    peak: Option<f64>,
    ratio: f64,
) -> Result<String> {
    let peak = peak.unwrap_or_else(|| {
        let m = reference.max_abs();
        if m > 0.0 {
            m
        } else {
            1.0
        }
    });
    let p = psnr(x, reference, peak)?;
    let s = ssim(x, reference, peak)?;
    let e = ergas(x, reference, ratio).unwrap_or(f64::NAN);
    Ok(format!(
        "{method},{setting},{},{},n/a,{}",
        fmt_metric(p),
        fmt_metric(s),
        fmt_metric(e)
    ))
}

struct Manifest {
    info: Vec<(String, String)>,
    settings: Vec<(String, String)>,
}

impl Manifest {
    fn new(command: &str) -> Self {
        Self {
            info: vec![
                ("command".into(), command.into()),
                ("version".into(), env!("CARGO_PKG_VERSION").into()),
            ],
            settings: Vec::new(),
        }
    }

    fn info(&mut self, k: &str, v: impl ToString) {
        self.info.push((k.into(), v.to_string()));
    }

    fn setting(&mut self, k: &str, v: impl ToString) {
        self.settings.push((k.into(), v.to_string()));
    }

    fn solver(&mut self, cfg: &SolverConfig) {
        self.settings.extend(cfg.to_key_values());
    }

    /// Settings are plain `key = value` lines so the manifest can be passed
    /// back as `--config`; everything else is commented.
    fn write(&self, path: &Path) -> Result<()> {
        let mut s = String::from("# mlcp run manifest\n");
        for (k, v) in &self.info {
            let _ = writeln!(s, "# {k} = {v}");
        }
        for (k, v) in &self.settings {
            let _ = writeln!(s, "{k} = {v}");
        }
        fs::write(path, s).with_context(|| format!("writing {}", path.display()))
    }
}

fn load(path: &Path) -> Result<DenseTensor> {
    load_tensor(path).with_context(|| format!("reading {}", path.display()))
}

fn save(path: &Path, t: &DenseTensor) -> Result<()> {
    save_tensor(path, t).with_context(|| format!("writing {}", path.display()))
}

fn write_trace(path: &Path, rep: &RecoveryReport, cfg: &SolverConfig) -> Result<()> {
    let mut buf = Vec::new();
    rep.write_trace_csv(&mut buf, cfg.shrink_rule == ShrinkRule::Strict)?;
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

fn finish(rep: &RecoveryReport, cfg: &SolverConfig, allow_unconverged: bool) -> ExitCode {
    if cfg.max_iter == 0 {
        eprintln!("warning: max_iter = 0, returning the initialization");
        return ExitCode::SUCCESS;
    }
    if rep.converged && rep.iterations == 1 {
        eprintln!("warning: stopped after one sweep; the shrinkage may have zeroed every slice, try larger mu0 and rho0 for this data scale");
    }
    if rep.converged {
        eprintln!(
            "converged after {} iterations in {:.2?}",
            rep.iterations, rep.wall_time
        );
        ExitCode::SUCCESS
    } else if allow_unconverged {
        eprintln!("warning: not converged after {} iterations", rep.iterations);
        ExitCode::SUCCESS
    } else {
        eprintln!(
            "error: not converged after {} iterations (pass --allow-unconverged to accept)",
            rep.iterations
        );
        ExitCode::from(3)
    }
}

fn out_dir(path: &PathBuf) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

pub fn synth(a: &SynthArgs) -> Result<ExitCode> {
    let start = Instant::now();
    let mut t = gen_lowrank(&a.shape, a.rank, a.seed).map_err(|e| UsageError(e.to_string()))?;
    if a.unit {
        t = rescale_unit(&t);
    }
    save(&a.out, &t)?;
    let mut m = Manifest::new("synth");
    m.info("output", a.out.display());
    m.info(
        "tubal_rank",
        if t.ndim() == 3 {
            tubal_rank(&t)?.to_string()
        } else {
            "n/a".into()
        },
    );
    m.info(
        "wall_time_seconds",
        format!("{:.3}", start.elapsed().as_secs_f64()),
    );
    m.setting(
        "shape",
        a.shape
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    m.setting("rank", a.rank);
    m.setting("seed", a.seed);
    m.setting("unit", a.unit);
    let mut name = a.out.clone().into_os_string();
    name.push(".manifest.txt");
    m.write(Path::new(&name))?;
    Ok(ExitCode::SUCCESS)
}

pub fn complete(a: &CompleteArgs) -> Result<ExitCode> {
    let Resolved { cfg, run } = resolve(&a.solver, &["seed", "sr"])?;
    let input = load(&a.input)?;
    let seed = run_value(a.seed, &run, "seed", parse_u64)?.unwrap_or(0);
    let sr = run_value(a.sr, &run, "sr", parse_sr)?;
    let mask = match (&a.mask, sr) {
        (Some(path), _) => {
            let m = load(path)?;
            if m.shape() != input.shape() {
                bail!(
                    "mask shape {:?} does not match input shape {:?}",
                    m.shape(),
                    input.shape()
                );
            }
            SamplingMask::from_tensor(&m)
        }
        (None, Some(sr)) => {
            gen_mask(input.shape(), sr, seed).map_err(|e| UsageError(e.to_string()))?
        }
        (None, None) => return usage("complete needs --sr (with --seed) or --mask"),
    };
    out_dir(&a.out)?;
    let rep = lrtc_solve(&input, &mask, &cfg)?;
    save(&a.out.join("recovered.tns"), &rep.low_rank)?;
    write_trace(&a.out.join("trace.csv"), &rep, &cfg)?;

    let reference = match (&a.truth, &a.mask) {
        (Some(p), _) => Some(load(p)?),
        (None, None) => Some(input.clone()),
        (None, Some(_)) => None,
    };
    let observed = mask.count() as f64 / input.len() as f64;
    if let Some(r) = &reference {
        let row = metrics_row(
            "mlcp-completion",
            &format!("sr={observed}"),
            &rep.low_rank,
            r,
            a.peak,
            1.0,
        )?;
        fs::write(
            a.out.join("metrics.csv"),
            format!("{METRICS_HEADER}\n{row}\n"),
        )?;
        println!("{row}");
        eprintln!("relative error {:.3e}", rep.low_rank.relative_error(r));
    }

    let mut m = Manifest::new("complete");
    m.info("input", a.input.display());
    if let Some(p) = &a.mask {
        m.info("mask", p.display());
    }
    if let Some(p) = &a.truth {
        m.info("truth", p.display());
    }
    m.info("output_dir", a.out.display());
    m.info("observed_fraction", observed);
    m.info("converged", rep.converged);
    m.info("iterations", rep.iterations);
    m.info(
        "wall_time_seconds",
        format!("{:.3}", rep.wall_time.as_secs_f64()),
    );
    for n in &rep.notes {
        m.info("note", n);
    }
    m.setting("seed", seed);
    if a.mask.is_none() {
        m.setting("sr", sr.unwrap_or(1.0));
    }
    m.solver(&cfg);
    m.write(&a.out.join("manifest.txt"))?;
    Ok(finish(&rep, &cfg, a.solver.allow_unconverged))
}

pub fn denoise(a: &DenoiseArgs) -> Result<ExitCode> {
    let Resolved { cfg, run } = resolve(&a.solver, &["seed", "sp", "gaussian", "noniid"])?;
    let input = load(&a.input)?;
    let seed = run_value(a.seed, &run, "seed", parse_u64)?.unwrap_or(0);
    let sp = run_value(a.sp, &run, "sp", parse_fraction)?;
    let gaussian = run_value(a.gaussian, &run, "gaussian", parse_nonneg)?;
    let noniid = run_value(a.noniid, &run, "noniid", parse_range)?;
    if gaussian.is_some_and(|g| g > 1.0) {
        return usage("--gaussian is a standard deviation for data in [0, 1] and must be <= 1");
    }
    let corrupt = sp.is_some() || gaussian.is_some() || noniid.is_some();
    let spec = NoiseSpec {
        sp_fraction: sp.unwrap_or(0.0),
        gaussian_sigma: gaussian.unwrap_or(0.0),
        noniid,
        seed,
    };
    spec.validate().map_err(|e| UsageError(e.to_string()))?;
    out_dir(&a.out)?;
    let observed = if corrupt {
        let noisy = add_mixed_noise(&input, &spec)?;
        save(&a.out.join("noisy.tns"), &noisy)?;
        noisy
    } else {
        input.clone()
    };
    let rep = trpca_solve(&observed, &cfg)?;
    save(&a.out.join("low_rank.tns"), &rep.low_rank)?;
    save(
        &a.out.join("sparse.tns"),
        rep.sparse.as_ref().expect("robust PCA returns E"),
    )?;
    save(
        &a.out.join("noise.tns"),
        rep.noise.as_ref().expect("robust PCA returns N"),
    )?;
    write_trace(&a.out.join("trace.csv"), &rep, &cfg)?;

    let reference = match &a.truth {
        Some(p) => Some(load(p)?),
        None if corrupt => Some(input.clone()),
        None => None,
    };
    let setting = match noniid {
        Some((lo, hi)) => format!("sp=U({lo};{hi});nu={}", spec.gaussian_sigma),
        None => format!("sp={};nu={}", spec.sp_fraction, spec.gaussian_sigma),
    };
    if let Some(r) = &reference {
        let row = metrics_row("mlcp-robust-pca", &setting, &rep.low_rank, r, a.peak, 1.0)?;
        fs::write(
            a.out.join("metrics.csv"),
            format!("{METRICS_HEADER}\n{row}\n"),
        )?;
        println!("{row}");
        eprintln!("relative error {:.3e}", rep.low_rank.relative_error(r));
    }

    let mut m = Manifest::new("denoise");
    m.info("input", a.input.display());
    if let Some(p) = &a.truth {
        m.info("truth", p.display());
    }
    m.info("output_dir", a.out.display());
    m.info("converged", rep.converged);
    m.info("iterations", rep.iterations);
    m.info("tau1_resolved", cfg.resolve_tau1(input.shape()));
    m.info("tau2_resolved", cfg.resolve_tau2(input.shape()));
    m.info(
        "wall_time_seconds",
        format!("{:.3}", rep.wall_time.as_secs_f64()),
    );
    for n in &rep.notes {
        m.info("note", n);
    }
    m.setting("seed", seed);
    if let Some(v) = sp {
        m.setting("sp", v);
    }
    if let Some(v) = gaussian {
        m.setting("gaussian", v);
    }
    if let Some((lo, hi)) = noniid {
        m.setting("noniid", format!("{lo},{hi}"));
    }
    m.solver(&cfg);
    m.write(&a.out.join("manifest.txt"))?;
    Ok(finish(&rep, &cfg, a.solver.allow_unconverged))
}

pub fn eval(a: &EvalArgs) -> Result<ExitCode> {
    if a.ratio.is_nan() || a.ratio <= 0.0 {
        return usage(format!("--ratio must be > 0, got {}", a.ratio));
    }
    let x = load(&a.a)?;
    let r = load(&a.b)?;
    if x.shape() != r.shape() {
        bail!("shape mismatch: {:?} vs {:?}", x.shape(), r.shape());
    }
    let row = metrics_row("eval", "n/a", &x, &r, a.peak, a.ratio)?;
    println!("{METRICS_HEADER}\n{row}");
    if let Some(p) = &a.out {
        fs::write(p, format!("{METRICS_HEADER}\n{row}\n"))
            .with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}
