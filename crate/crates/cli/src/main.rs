//! `necklace`: experiments on films over random substrates.
//!
//! Exit codes: 0 success, 2 bad arguments, 3 numerical failure, 1 I/O.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use necklace_core::density::{
    cone_density_exact, cone_density_lower, cone_density_upper, empirical_density, parabola_density_upper,
};
use necklace_core::film::{compare_film_to_necklace, film_heat_bath_run, EnvelopeSource, DEFAULT_EXCLUSION, FALLBACK_GRID_STEP};
use necklace_core::gibbs::{empirical_signature_frequencies, partition_function, signature_probabilities};
use necklace_core::necklace::{contact_set, envelope_bruteforce, periodic_contact_set};
use necklace_core::seed::derive_seed;
use necklace_core::shapes::{DEFAULT_PROFILE_NODES, DEFAULT_PROFILE_TOLERANCE};
use necklace_core::substrate::{gen_iid_exponential, gen_sos_substrate, SosParams};
use necklace_core::{Boundary, Error, ShapeModel, Substrate, WulffProfile};

use output::{sibling, write_csv, write_json, Meta};

#[derive(Parser)]
#[command(name = "necklace", version, about = "Films over random substrates as necklaces of Wulff shapes")]
struct Cli {
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, global = true, env = "NECKLACE_WORKERS", default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random substrate; CSV `i,h`.
    GenSubstrate(GenSubstrateArgs),
    /// Tabulate the SOS Wulff shape; CSV `x,W,slope`.
    WulffProfile(WulffProfileArgs),
    /// Contact set and envelope of a random substrate; CSV `n,b,h` plus `<stem>.envelope.csv` with `x,I`.
    Necklace(NecklaceArgs),
    /// Empirical contact density against the exact value and bounds; JSON.
    DensityScan(DensityScanArgs),
    /// Partition function and gap-signature probabilities against direct simulation; JSON.
    GibbsCheck(GibbsCheckArgs),
    /// Heat-bath film over an SOS substrate compared with the necklace; CSV `i,h1,h2_avg,I,d` plus `<stem>.summary.json`.
    FilmMc(FilmMcArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ShapeName {
    Cone,
    Parabola,
    Semicircle,
    SosWulff,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Generator {
    /// iid Exponential(1) heights on a window.
    Iid,
    /// Heat-bath SOS chain with periodic boundary.
    Sos,
}

#[derive(Args, Serialize)]
struct ShapeArgs {
    #[arg(long, value_enum)]
    shape: ShapeName,
    /// Shape parameter for cone, parabola and semicircle.
    #[arg(long)]
    lambda: Option<f64>,
    /// Film coupling for the SOS Wulff shape.
    #[arg(long)]
    j2: Option<f64>,
    /// Film pressure for the SOS Wulff shape.
    #[arg(long)]
    k2: Option<f64>,
}

impl ShapeArgs {
    fn build(&self) -> necklace_core::Result<ShapeModel> {
        build_shape(self.shape, self.lambda, self.j2, self.k2)
    }
}

fn build_shape(shape: ShapeName, lambda: Option<f64>, j2: Option<f64>, k2: Option<f64>) -> necklace_core::Result<ShapeModel> {
    let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| Error::InvalidArgument(format!("--{flag} is required for this shape")));
    match shape {
        ShapeName::Cone => ShapeModel::cone(need(lambda, "lambda")?),
        ShapeName::Parabola => ShapeModel::parabola(need(lambda, "lambda")?),
        ShapeName::Semicircle => ShapeModel::semicircle(need(lambda, "lambda")?),
        ShapeName::SosWulff => ShapeModel::sos_wulff(need(j2, "j2")?, need(k2, "k2")?),
    }
}

#[derive(Args, Serialize)]
struct SubstrateArgs {
    #[arg(long, value_enum, default_value = "iid")]
    generator: Generator,
    /// Number of sites.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    j1: f64,
    #[arg(long, default_value_t = 0.5)]
    k1: f64,
    /// Discarded sweeps before the SOS substrate is read off.
    #[arg(long, default_value_t = SosParams::DEFAULT_BURN_IN)]
    substrate_burn_in: usize,
}

impl SubstrateArgs {
    fn generate(&self, seed: u64) -> necklace_core::Result<Substrate> {
        match self.generator {
            Generator::Iid => gen_iid_exponential(self.n, seed),
            Generator::Sos => gen_sos_substrate(self.n, self.sos_params(), seed),
        }
    }

    fn sos_params(&self) -> SosParams {
        SosParams { j1: self.j1, k1: self.k1, sweeps: 1, burn_in: self.substrate_burn_in }
    }
}

#[derive(Args, Serialize)]
struct GenSubstrateArgs {
    #[command(flatten)]
    substrate: SubstrateArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct WulffProfileArgs {
    #[arg(long)]
    j2: f64,
    #[arg(long)]
    k2: f64,
    #[arg(long, default_value_t = DEFAULT_PROFILE_NODES)]
    nodes: usize,
    /// Largest accepted relative interpolation error.
    #[arg(long, default_value_t = DEFAULT_PROFILE_TOLERANCE)]
    tolerance: f64,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct NecklaceArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    #[command(flatten)]
    substrate: SubstrateArgs,
    /// Spacing of the envelope samples.
    #[arg(long, default_value_t = 0.25)]
    envelope_step: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct DensityScanArgs {
    #[arg(long, value_enum)]
    shape: ShapeName,
    /// One or more comma-separated values; each uses its own seed stream.
    #[arg(long, value_delimiter = ',', required = true)]
    lambda: Vec<f64>,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct GibbsCheckArgs {
    #[arg(long, value_enum)]
    shape: ShapeName,
    #[arg(long)]
    lambda: f64,
    /// Partition functions are computed for L = 1..=max_l.
    #[arg(long, default_value_t = 4)]
    max_l: usize,
    /// Window length of the gap-signature comparison.
    #[arg(long, default_value_t = 5)]
    signature_l: usize,
    #[arg(long, default_value_t = 200_000)]
    mc_samples: usize,
    /// Directly simulated substrates for the signature frequencies.
    #[arg(long, default_value_t = 1_000_000)]
    direct_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct FilmMcArgs {
    #[arg(long, default_value_t = 512)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    j1: f64,
    #[arg(long, default_value_t = 0.5)]
    k1: f64,
    #[arg(long, default_value_t = 1000)]
    substrate_burn_in: usize,
    #[arg(long, default_value_t = 30.0)]
    j2: f64,
    #[arg(long, default_value_t = 2.0)]
    k2: f64,
    #[arg(long, default_value_t = 10_000)]
    burn_in: usize,
    #[arg(long, default_value_t = 100_000)]
    measure: usize,
    /// Sites with I(i) - h1_i below this are left out of the restricted statistics.
    #[arg(long, default_value_t = DEFAULT_EXCLUSION)]
    exclusion: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(&cli.command)) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::InvalidArgument(_)) => 2,
        Some(_) => 3,
        None => 1,
    }
}

fn run(command: &Command) -> Result<Value> {
    match command {
        Command::GenSubstrate(a) => gen_substrate(a),
        Command::WulffProfile(a) => wulff_profile(a),
        Command::Necklace(a) => necklace(a),
        Command::DensityScan(a) => density_scan(a),
        Command::GibbsCheck(a) => gibbs_check(a),
        Command::FilmMc(a) => film_mc(a),
    }
}

fn summary(command: &str, outputs: &[&Path], results: Value) -> Value {
    json!({
        "command": command,
        "status": "ok",
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "results": results,
    })
}

fn gen_substrate(a: &GenSubstrateArgs) -> Result<Value> {
    let s = a.substrate.generate(a.seed)?;
    let meta = Meta::new("gen-substrate", Some(a.seed), a)?;
    let h = s.heights();
    write_csv(&a.out, &meta, "i,h", h.iter().enumerate().map(|(i, h)| format!("{i},{h}")))?;
    let mean = h.iter().sum::<f64>() / h.len() as f64;
    let max = h.iter().copied().fold(0.0, f64::max);
    Ok(summary("gen-substrate", &[&a.out], json!({ "n": h.len(), "mean": mean, "max": max })))
}

fn wulff_profile(a: &WulffProfileArgs) -> Result<Value> {
    let p = WulffProfile::build(a.j2, a.k2, a.nodes)?;
    let err = p.max_interpolation_error();
    if err > a.tolerance {
        return Err(Error::ProfileTooCoarse { achieved: err, tolerance: a.tolerance }.into());
    }
    let meta = Meta::new("wulff-profile", None, a)?;
    let rows = p.nodes().zip(p.slopes()).map(|((x, w), t)| format!("{x},{w},{t}"));
    write_csv(&a.out, &meta, "x,W,slope", rows)?;
    Ok(summary(
        "wulff-profile",
        &[&a.out],
        json!({
            "support_radius": p.x_max(),
            "nominal_support": p.nominal_support(),
            "nodes": p.len(),
            "max_interpolation_error": err,
        }),
    ))
}

fn necklace(a: &NecklaceArgs) -> Result<Value> {
    if !(a.envelope_step > 0.0 && a.envelope_step.is_finite()) {
        return Err(Error::InvalidArgument("--envelope-step must be positive".into()).into());
    }
    let shape = a.shape.build()?;
    let s = a.substrate.generate(a.seed)?;
    let n = s.len();
    let x_end = match s.boundary() {
        Boundary::Window => (n - 1) as f64,
        Boundary::Periodic => n as f64,
    };
    let steps = (x_end / a.envelope_step).floor() as usize;
    let mut xs: Vec<f64> = (0..=steps).map(|k| k as f64 * a.envelope_step).collect();
    if steps as f64 * a.envelope_step < x_end {
        xs.push(x_end);
    }

    let exact = match s.boundary() {
        Boundary::Window => contact_set(&s, &shape),
        Boundary::Periodic => periodic_contact_set(&s, &shape),
    }
    .and_then(|nk| {
        let env = xs.iter().map(|&x| nk.envelope_eval(x)).collect::<necklace_core::Result<Vec<f64>>>()?;
        Ok((nk.contacts().iter().map(|c| (c.site, c.height)).collect::<Vec<_>>(), env))
    });
    let (contacts, envelope, source) = match exact {
        Ok((c, e)) => (c, e, EnvelopeSource::Necklace),
        // some gap is wider than the shape can span: use lowered translates
        Err(Error::UnreachablePair { .. }) => {
            let h = s.heights();
            let (base, offset) = match s.boundary() {
                Boundary::Window => (s.clone(), 0),
                Boundary::Periodic => {
                    let tiled: Vec<f64> = h.iter().chain(h).chain(h).copied().collect();
                    (Substrate::from_heights(tiled, Boundary::Window)?, n)
                }
            };
            let sampled = envelope_bruteforce(&base, &shape, FALLBACK_GRID_STEP)?;
            let contacts = (0..n)
                .filter(|&i| (sampled.eval((i + offset) as f64) - h[i]).abs() <= 1e-9)
                .map(|i| (i, h[i]))
                .collect();
            let env = xs.iter().map(|&x| sampled.eval(x + offset as f64)).collect();
            (contacts, env, EnvelopeSource::Sampled)
        }
        Err(e) => return Err(e.into()),
    };

    let meta = Meta::new("necklace", Some(a.seed), a)?;
    let rows = contacts.iter().enumerate().map(|(i, (b, h))| format!("{i},{b},{h}"));
    write_csv(&a.out, &meta, "n,b,h", rows)?;
    let env_path = sibling(&a.out, "envelope.csv");
    write_csv(&env_path, &meta, "x,I", xs.iter().zip(&envelope).map(|(x, i)| format!("{x},{i}")))?;
    let gaps: Vec<usize> = contacts.windows(2).map(|w| w[1].0 - w[0].0).collect();
    Ok(summary(
        "necklace",
        &[&a.out, &env_path],
        json!({
            "sites": n,
            "envelope_source": source,
            "contacts": contacts.len(),
            "mean_gap": gaps.iter().sum::<usize>() as f64 / gaps.len().max(1) as f64,
            "max_gap": gaps.iter().copied().max().unwrap_or(0),
        }),
    ))
}

fn density_scan(a: &DensityScanArgs) -> Result<Value> {
    let mut results = Vec::with_capacity(a.lambda.len());
    for (idx, &lambda) in a.lambda.iter().enumerate() {
        let shape = build_shape(a.shape, Some(lambda), None, None)?;
        let est = empirical_density(&shape, a.n, a.samples, derive_seed(a.seed, idx as u64))?;
        let mut row = serde_json::to_value(&est)?;
        row["p_hat_over_sqrt_lambda"] = json!(est.p_hat / lambda.sqrt());
        if let ShapeName::Cone = a.shape {
            let exact = cone_density_exact(lambda)?;
            row["exact"] = json!(exact);
            row["z"] = json!((est.p_hat - exact) / est.se);
            row["upper"] = json!(cone_density_upper(lambda)?);
            row["lower"] = json!(cone_density_lower(lambda).ok());
        }
        if let ShapeName::Parabola = a.shape {
            row["upper"] = json!(parabola_density_upper(lambda).ok());
        }
        results.push(row);
    }
    let results = Value::Array(results);
    let meta = Meta::new("density-scan", Some(a.seed), a)?;
    write_json(&a.out, &meta, results.clone())?;
    let brief: Vec<Value> = results
        .as_array()
        .into_iter()
        .flatten()
        .map(|r| json!({ "lambda": r["lambda"], "p_hat": r["p_hat"], "se": r["se"], "exact": r.get("exact") }))
        .collect();
    Ok(summary("density-scan", &[&a.out], Value::Array(brief)))
}

fn gibbs_check(a: &GibbsCheckArgs) -> Result<Value> {
    let shape = build_shape(a.shape, Some(a.lambda), None, None)?;
    let mut partition = Vec::new();
    let mut worst_partition_z: f64 = 0.0;
    for l in 1..=a.max_l {
        let z = partition_function(&shape, l, a.mc_samples, derive_seed(a.seed, l as u64))?;
        let score = if z.se > 0.0 { (z.value - 1.0) / z.se } else if z.value == 1.0 { 0.0 } else { f64::INFINITY };
        worst_partition_z = worst_partition_z.max(score.abs());
        partition.push(json!({ "l": l, "value": z.value, "se": z.se, "z": score }));
    }
    let (total, gibbs) = signature_probabilities(&shape, a.signature_l, a.mc_samples, derive_seed(a.seed, 1000))?;
    let direct = empirical_signature_frequencies(&shape, a.signature_l, a.direct_samples, derive_seed(a.seed, 1001))?;
    let mut signatures = Vec::with_capacity(gibbs.len());
    let mut worst_signature_z: f64 = 0.0;
    for (g, (gaps, d)) in gibbs.iter().zip(&direct) {
        debug_assert_eq!(&g.gaps, gaps);
        let se = g.gibbs.se.hypot(d.se);
        let score = if se > 0.0 { (g.gibbs.value - d.value) / se } else { 0.0 };
        worst_signature_z = worst_signature_z.max(score.abs());
        signatures.push(json!({ "gaps": gaps, "gibbs": g.gibbs, "direct": d, "z": score }));
    }
    let results = json!({
        "partition": partition,
        "signature_l": a.signature_l,
        "signature_total": total,
        "signatures": signatures,
        "max_abs_z_partition": worst_partition_z,
        "max_abs_z_signature": worst_signature_z,
    });
    let meta = Meta::new("gibbs-check", Some(a.seed), a)?;
    write_json(&a.out, &meta, results)?;
    Ok(summary(
        "gibbs-check",
        &[&a.out],
        json!({ "max_abs_z_partition": worst_partition_z, "max_abs_z_signature": worst_signature_z }),
    ))
}

fn film_mc(a: &FilmMcArgs) -> Result<Value> {
    let params = SosParams { j1: a.j1, k1: a.k1, sweeps: 1, burn_in: a.substrate_burn_in };
    let s = gen_sos_substrate(a.n, params, derive_seed(a.seed, 0))?;
    let film = film_heat_bath_run(&s, a.j2, a.k2, a.burn_in, a.measure, derive_seed(a.seed, 1))?;
    let shape = ShapeModel::sos_wulff(a.j2, a.k2)?;
    let report = compare_film_to_necklace(&film, &shape, a.exclusion)?;

    let meta = Meta::new("film-mc", Some(a.seed), a)?;
    let rows = (0..a.n).map(|i| {
        format!("{i},{},{},{},{}", report.h1[i], report.h2_avg[i], report.envelope[i], report.deviation[i])
    });
    write_csv(&a.out, &meta, "i,h1,h2_avg,I,d", rows)?;
    let min_clearance = film.min_clearance().iter().copied().fold(f64::INFINITY, f64::min);
    let results = json!({
        "envelope_source": report.envelope_source,
        "contacts": report.contacts,
        "exclusion_threshold": report.exclusion_threshold,
        "uncovered": report.uncovered,
        "all": report.all,
        "outside_exclusion": report.outside_exclusion,
        "mean_film_height": report.mean_film_height,
        "min_clearance": min_clearance,
        "sweeps": film.sweeps(),
    });
    let summary_path = sibling(&a.out, "summary.json");
    write_json(&summary_path, &meta, results.clone())?;
    Ok(summary("film-mc", &[&a.out, &summary_path], results))
}
