//! `rmt`: generate metrics, run every construction in the library, verify
//! serialized artifacts, and emit machine-readable reports.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 violated mathematical
//! guarantee, so CI can tell misuse from a broken invariant.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use ramsey_core::analysis::{distortion_report, partial_report};
use ramsey_core::bundle::{build_partition_bundle, verify_bundle, PartitionBundle};
use ramsey_core::cover::{load_oracle, oracle_build, oracle_stats, save_oracle, CoverBuilder};
use ramsey_core::embedding::{
    partial_ramsey_embed, ramsey_embed, scaling_ramsey_embed, RamseyEmbedding,
};
use ramsey_core::error::{Error, Result};
use ramsey_core::fixtures::{generate, FixtureSpec};
use ramsey_core::hst::LcaIndex;
use ramsey_core::io::{load_metric, matrix_csv_string};
use ramsey_core::lp::deterministic_lp_embed;
use ramsey_core::metric::{MetricSpace, WeightFunction};
use ramsey_core::multi::{build_multi_embedding, path_distortion_report, MultiEmbedding};
use ramsey_core::ramsey::{
    partial_ramsey, ramsey_subspace, scaling_ramsey, RamseyParams, RamseyResult,
};
use ramsey_core::schedule::ScalingSchedule;

#[derive(Parser)]
#[command(name = "rmt", version, about = "metric Ramsey toolkit")]
struct Cli {
    /// seed recorded in the run manifest and driving all sampling
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a fixture metric as a distance-matrix CSV
    Gen {
        /// descriptor, either compact (C2x2x10, U16, L64, planar16s7,
        /// graph64s1) or space-separated (C 2 2 10)
        #[arg(long, num_args = 1..=4, required = true)]
        fixture: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Worst-case Ramsey subspace with ultrametric tree
    Ramsey {
        #[arg(long)]
        t: usize,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Partial variant: bound on all but an eps fraction of pairs
    Partial {
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scaling variant: per-pair bound improving with the pair's weight rank
    Scaling {
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        schedule: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Whole-space ultrametric embedding with a bounded-distortion core
    Embed {
        #[arg(long)]
        t: Option<usize>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        schedule: Option<String>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Ramsey cover persisted as an oracle directory
    Cover {
        #[arg(long)]
        t: Option<usize>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        schedule: Option<String>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Approximate distance oracle operations
    Oracle {
        #[command(subcommand)]
        cmd: OracleCmd,
    },
    /// Multi-embedding into an ultrametric with path guarantees
    Multiembed {
        #[arg(long)]
        eps: f64,
        /// sample this many seeded paths into a path-distortion report
        #[arg(long, default_value_t = 0)]
        paths: usize,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Padded partition bundle at one distance scale
    Bundle {
        #[arg(long)]
        delta_hat: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Multi-scale coordinate embedding (CSV rows plus a meta JSON)
    Lpembed {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Distortion statistics of a serialized tree artifact against a metric
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        artifact: PathBuf,
        /// l_q exponents, comma separated
        #[arg(long, default_value = "1,2")]
        q: String,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-check every invariant of an artifact from its serialized form
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        metric: PathBuf,
    },
}

#[derive(Subcommand)]
enum OracleCmd {
    Build {
        #[arg(long)]
        t: Option<usize>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        schedule: Option<String>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the oracle's answer for one pair
    Query { dir: PathBuf, a: usize, b: usize },
    /// Benchmark table: n, t, build time, space, max/avg/l2 stretch
    Bench {
        #[arg(long = "in")]
        input: PathBuf,
        /// comma-separated list of t values
        #[arg(long, default_value = "2,3,4")]
        t: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

/// One record per invocation, written next to the main artifact. Re-running
/// the same command line reproduces byte-identical artifacts; the manifest
/// itself carries wall-clock timings and is not reproducible.
#[derive(Serialize)]
struct RunManifest {
    command: Vec<String>,
    input: Option<FileDigest>,
    params: serde_json::Value,
    seed: u64,
    version: String,
    outputs: Vec<FileDigest>,
    build_ms: u128,
    total_ms: u128,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(e) if e.is_guarantee_violation() => {
            eprintln!("{e}");
            std::process::exit(2);
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    }
}

fn sha256_file(path: &Path) -> Result<FileDigest> {
    let bytes = fs::read(path)?;
    let mut h = Sha256::new();
    h.update(&bytes);
    Ok(FileDigest { path: path.display().to_string(), sha256: format!("{:x}", h.finalize()) })
}

/// Digest of a single file, or of every regular file in a directory in
/// sorted order.
fn digest_outputs(path: &Path) -> Result<Vec<FileDigest>> {
    if path.is_dir() {
        let mut names: Vec<PathBuf> = fs::read_dir(path)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_file())
            .collect();
        names.sort();
        names.iter().map(|p| sha256_file(p)).collect()
    } else {
        Ok(vec![sha256_file(path)?])
    }
}

fn write_manifest(
    artifact: &Path,
    input: Option<&Path>,
    params: serde_json::Value,
    seed: u64,
    build_ms: u128,
    started: Instant,
) -> Result<()> {
    let manifest = RunManifest {
        command: std::env::args().collect(),
        input: input.map(sha256_file).transpose()?,
        params,
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: digest_outputs(artifact)?,
        build_ms,
        total_ms: started.elapsed().as_millis(),
    };
    let path = if artifact.is_dir() {
        artifact.join("run.json")
    } else {
        PathBuf::from(format!("{}.run.json", artifact.display()))
    };
    fs::write(path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

fn load_weights(n: usize, path: Option<&Path>) -> Result<WeightFunction> {
    match path {
        None => Ok(WeightFunction::unit(n)),
        Some(p) => {
            let text = fs::read_to_string(p)?;
            let vals: std::result::Result<Vec<f64>, _> = text
                .split_whitespace()
                .map(|f| f.parse::<f64>())
                .collect();
            let vals = vals.map_err(|e| Error::MalformedInput(format!("weights: {e}")))?;
            if vals.len() != n {
                return Err(Error::MalformedInput(format!(
                    "{} weights for {n} points",
                    vals.len()
                )));
            }
            WeightFunction::new(vals)
        }
    }
}

/// Variant flags shared by embed / cover / oracle build.
fn builder_from_flags(
    t: Option<usize>,
    delta: Option<f64>,
    eps: Option<f64>,
    schedule: Option<&str>,
) -> Result<CoverBuilder> {
    match (t, delta, eps, schedule) {
        (Some(t), None, None, None) => Ok(CoverBuilder::Basic { t }),
        (None, Some(delta), Some(eps), None) => Ok(CoverBuilder::Partial { delta, eps }),
        (None, Some(delta), None, Some(s)) => {
            Ok(CoverBuilder::Scaling { delta, schedule: ScalingSchedule::parse(s)? })
        }
        _ => Err(Error::InvalidParameters(
            "pick one variant: --t | --delta --eps | --delta --schedule".into(),
        )),
    }
}

fn run(cli: Cli) -> Result<()> {
    let started = Instant::now();
    let seed = cli.seed;
    match cli.cmd {
        Cmd::Gen { fixture, out } => {
            let desc = if fixture.len() == 1 {
                fixture[0].clone()
            } else {
                format!("{}{}", fixture[0], fixture[1..].join("x"))
            };
            let spec = FixtureSpec::parse(&desc)?;
            let t0 = Instant::now();
            let m = generate(&spec)?;
            let build_ms = t0.elapsed().as_millis();
            fs::write(&out, matrix_csv_string(&m))?;
            write_manifest(
                &out,
                None,
                serde_json::json!({ "fixture": desc }),
                seed,
                build_ms,
                started,
            )?;
        }
        Cmd::Ramsey { t, input, weights, out } => {
            let x = load_metric(&input)?;
            let w = load_weights(x.n(), weights.as_deref())?;
            let t0 = Instant::now();
            let r = ramsey_subspace(&x, &w, t)?;
            let build_ms = t0.elapsed().as_millis();
            fs::write(&out, serde_json::to_string_pretty(&r.to_json())?)?;
            write_manifest(&out, Some(&input), serde_json::json!({ "t": t }), seed, build_ms, started)?;
        }
        Cmd::Partial { delta, eps, input, weights, out } => {
            let x = load_metric(&input)?;
            let w = load_weights(x.n(), weights.as_deref())?;
            let t0 = Instant::now();
            let r = partial_ramsey(&x, &w, delta, eps)?;
            let build_ms = t0.elapsed().as_millis();
            fs::write(&out, serde_json::to_string_pretty(&r.to_json())?)?;
            write_manifest(
                &out,
                Some(&input),
                serde_json::json!({ "delta": delta, "eps": eps }),
                seed,
                build_ms,
                started,
            )?;
        }
        Cmd::Scaling { delta, schedule, input, weights, out } => {
            let sched = ScalingSchedule::parse(&schedule)?;
            let x = load_metric(&input)?;
            let w = load_weights(x.n(), weights.as_deref())?;
            let t0 = Instant::now();
            let r = scaling_ramsey(&x, &w, delta, sched)?;
            let build_ms = t0.elapsed().as_millis();
            fs::write(&out, serde_json::to_string_pretty(&r.to_json())?)?;
            write_manifest(
                &out,
                Some(&input),
                serde_json::json!({ "delta": delta, "schedule": schedule }),
                seed,
                build_ms,
                started,
            )?;
        }
        Cmd::Embed { t, delta, eps, schedule, input, weights, out } => {
            let builder = builder_from_flags(t, delta, eps, schedule.as_deref())?;
            let x = load_metric(&input)?;
            let w = load_weights(x.n(), weights.as_deref())?;
            let t0 = Instant::now();
            let e = match builder {
                CoverBuilder::Basic { t } => ramsey_embed(&x, &w, t)?,
                CoverBuilder::Partial { delta, eps } => partial_ramsey_embed(&x, &w, delta, eps)?,
                CoverBuilder::Scaling { delta, schedule } => {
                    scaling_ramsey_embed(&x, &w, delta, schedule)?
                }
            };
            let build_ms = t0.elapsed().as_millis();
            fs::write(&out, serde_json::to_string_pretty(&e.to_json())?)?;
            write_manifest(
                &out,
                Some(&input),
                serde_json::to_value(&builder)?,
                seed,
                build_ms,
                started,
            )?;
        }
        Cmd::Cover { t, delta, eps, schedule, input, weights, out }
        | Cmd::Oracle {
            cmd: OracleCmd::Build { t, delta, eps, schedule, input, weights, out },
        } => {
            let builder = builder_from_flags(t, delta, eps, schedule.as_deref())?;
            let x = load_metric(&input)?;
            let w = load_weights(x.n(), weights.as_deref())?;
            let t0 = Instant::now();
            let o = oracle_build(&x, &w, builder)?;
            let build_ms = t0.elapsed().as_millis();
            save_oracle(&o, &out)?;
            let stats = oracle_stats(&o, &x)?;
            fs::write(out.join("stats.json"), serde_json::to_string_pretty(&stats)?)?;
            write_manifest(
                &out,
                Some(&input),
                serde_json::to_value(&builder)?,
                seed,
                build_ms,
                started,
            )?;
        }
        Cmd::Oracle { cmd: OracleCmd::Query { dir, a, b } } => {
            let o = load_oracle(&dir)?;
            println!("{}", o.query(a, b)?);
        }
        Cmd::Oracle { cmd: OracleCmd::Bench { input, t, out } } => {
            let x = load_metric(&input)?;
            let w = WeightFunction::unit(x.n());
            let ts: std::result::Result<Vec<usize>, _> =
                t.split(',').map(|f| f.trim().parse::<usize>()).collect();
            let ts = ts.map_err(|e| Error::MalformedInput(format!("--t list: {e}")))?;
            let mut csv = String::from("n,t,build_ms,space,max_stretch,avg_stretch,l2_stretch\n");
            let t_all = Instant::now();
            for t in &ts {
                let t0 = Instant::now();
                let o = oracle_build(&x, &w, CoverBuilder::Basic { t: *t })?;
                let build_ms = t0.elapsed().as_millis();
                let stats = oracle_stats(&o, &x)?;
                let n = x.n();
                let mut sq = 0.0;
                let mut pairs = 0usize;
                for a in 0..n {
                    for b in a + 1..n {
                        let s = o.query(a, b)? / x.dist(a, b);
                        sq += s * s;
                        pairs += 1;
                    }
                }
                let l2 = if pairs > 0 { (sq / pairs as f64).sqrt() } else { 1.0 };
                csv.push_str(&format!(
                    "{n},{t},{build_ms},{},{},{},{l2}\n",
                    stats.space, stats.max_stretch, stats.avg_stretch
                ));
            }
            let build_ms = t_all.elapsed().as_millis();
            fs::write(&out, csv)?;
            write_manifest(
                &out,
                Some(&input),
                serde_json::json!({ "t": ts }),
                seed,
                build_ms,
                started,
            )?;
        }
        Cmd::Multiembed { eps, paths, max_len, input, weights, out } => {
            let x = load_metric(&input)?;
            let w = load_weights(x.n(), weights.as_deref())?;
            let t0 = Instant::now();
            let me = build_multi_embedding(&x, &w, eps)?;
            let build_ms = t0.elapsed().as_millis();
            let mut v = me.to_json();
            if paths > 0 {
                let report = path_distortion_report(&me, &x, paths, max_len, seed)?;
                v.as_object_mut()
                    .unwrap()
                    .insert("path_report".into(), serde_json::to_value(&report)?);
            }
            fs::write(&out, serde_json::to_string_pretty(&v)?)?;
            write_manifest(
                &out,
                Some(&input),
                serde_json::json!({ "eps": eps, "paths": paths, "max_len": max_len }),
                seed,
                build_ms,
                started,
            )?;
        }
        Cmd::Bundle { delta_hat, delta, input, weights, out } => {
            let x = load_metric(&input)?;
            let w = load_weights(x.n(), weights.as_deref())?;
            let t0 = Instant::now();
            let b = build_partition_bundle(&x, &w, delta_hat, delta)?;
            let build_ms = t0.elapsed().as_millis();
            fs::write(&out, serde_json::to_string_pretty(&serde_json::to_value(&b)?)?)?;
            write_manifest(
                &out,
                Some(&input),
                serde_json::json!({ "delta_hat": delta_hat, "delta": delta }),
                seed,
                build_ms,
                started,
            )?;
        }
        Cmd::Lpembed { p, delta, input, out } => {
            let x = load_metric(&input)?;
            let t0 = Instant::now();
            let e = deterministic_lp_embed(&x, p, delta)?;
            let build_ms = t0.elapsed().as_millis();
            fs::write(&out, e.to_csv_string())?;
            let mut meta = e.manifest_json();
            let (expand, contract, total) = e.measured_distortion(&x);
            meta.as_object_mut().unwrap().insert(
                "measured".into(),
                serde_json::json!({
                    "expansion": expand,
                    "contraction": contract,
                    "distortion": total,
                }),
            );
            fs::write(
                format!("{}.meta.json", out.display()),
                serde_json::to_string_pretty(&meta)?,
            )?;
            write_manifest(
                &out,
                Some(&input),
                serde_json::json!({ "p": p, "delta": delta }),
                seed,
                build_ms,
                started,
            )?;
        }
        Cmd::Analyze { input, artifact, q, eps, out } => {
            let x = load_metric(&input)?;
            let qs: std::result::Result<Vec<f64>, _> =
                q.split(',').map(|f| f.trim().parse::<f64>()).collect();
            let qs = qs.map_err(|e| Error::MalformedInput(format!("--q list: {e}")))?;
            let t0 = Instant::now();
            let report = analyze_artifact(&x, &artifact, &qs, eps)?;
            let build_ms = t0.elapsed().as_millis();
            fs::write(&out, serde_json::to_string_pretty(&report)?)?;
            write_manifest(
                &out,
                Some(&input),
                serde_json::json!({ "artifact": artifact.display().to_string(), "q": qs, "eps": eps }),
                seed,
                build_ms,
                started,
            )?;
        }
        Cmd::Verify { input, metric } => {
            let x = load_metric(&metric)?;
            verify_artifact(&x, &input)?;
            println!("ok");
        }
    }
    Ok(())
}

/// Distortion report of a tree artifact; subspace artifacts are measured
/// over their own pair universe, whole-space embeddings over all pairs plus
/// the (core, anything) worst case.
fn analyze_artifact(
    x: &MetricSpace,
    artifact: &Path,
    qs: &[f64],
    eps: Option<f64>,
) -> Result<serde_json::Value> {
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(artifact)?)?;
    if v.get("subspace").is_some() {
        let r = RamseyResult::from_json(&v)?;
        let ids = r.subspace.ids().to_vec();
        let rows: Vec<Vec<f64>> = ids
            .iter()
            .map(|&a| ids.iter().map(|&b| x.dist(a, b)).collect())
            .collect();
        let sub = MetricSpace::from_matrix(rows)?;
        let idx = LcaIndex::build(&r.tree);
        let mapped =
            |a: usize, b: usize| r.tree.point_distance(&idx, ids[a], ids[b]).unwrap();
        let rep = distortion_report(&sub, &mapped, qs, true)?;
        let mut out = serde_json::json!({
            "pair_universe": "subspace pairs",
            "report": rep,
        });
        if let Some(eps) = eps {
            let p = partial_report(&sub, &mapped, eps, true)?;
            out.as_object_mut().unwrap().insert("partial".into(), serde_json::to_value(&p)?);
        }
        Ok(out)
    } else if v.get("core").is_some() {
        let e = RamseyEmbedding::from_json(&v)?;
        let idx = LcaIndex::build(&e.tree);
        let mapped = |a: usize, b: usize| e.tree.point_distance(&idx, a, b).unwrap();
        let rep = distortion_report(x, &mapped, qs, true)?;
        let mut core_worst: f64 = 1.0;
        for a in e.core.iter() {
            for b in 0..x.n() {
                if a != b {
                    core_worst = core_worst.max(mapped(a, b) / x.dist(a, b));
                }
            }
        }
        let mut out = serde_json::json!({
            "pair_universe": "all pairs",
            "report": rep,
            "core_worst_case": core_worst,
        });
        if let Some(eps) = eps {
            let p = partial_report(x, &mapped, eps, true)?;
            out.as_object_mut().unwrap().insert("partial".into(), serde_json::to_value(&p)?);
        }
        Ok(out)
    } else {
        Err(Error::MalformedInput("artifact is not a tree result".into()))
    }
}

/// Re-derive the invariants of a serialized artifact with no access to the
/// construction that produced it. Dispatch is structural: an oracle is a
/// directory, a bundle has rounds, a multi-embedding has images, an
/// embedding has a core, a subspace result has a subspace.
fn verify_artifact(x: &MetricSpace, path: &Path) -> Result<()> {
    if path.is_dir() {
        let o = load_oracle(path)?;
        let n = x.n();
        if o.n() != n {
            return Err(Error::MalformedInput(format!("oracle over {} points, metric has {n}", o.n())));
        }
        for a in 0..n {
            for b in a + 1..n {
                let ans = o.query(a, b)?;
                let d = x.dist(a, b);
                if ans < d {
                    return Err(Error::guarantee(format!("oracle({a},{b}) >= d"), ans, d));
                }
                if ans > o.alpha * d {
                    return Err(Error::guarantee(
                        format!("oracle({a},{b}) <= alpha d"),
                        ans,
                        o.alpha * d,
                    ));
                }
            }
        }
        return Ok(());
    }
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    if v.get("rounds").is_some() {
        let b: PartitionBundle = serde_json::from_value(v)?;
        return verify_bundle(x, &b, x.n());
    }
    if v.get("images").is_some() {
        let me = MultiEmbedding::from_json(&v)?;
        check_tree(&me.tree)?;
        // re-runs the structural split audit; zero sampled paths
        path_distortion_report(&me, x, 0, 2, 0)?;
        let t = me.t as u32;
        let leaves = me.leaf_count() as u128;
        if (leaves - 1).pow(t) >= (x.n() as u128).pow(t + 1) {
            return Err(Error::guarantee(
                "leaf count <= ceil(n^(1+1/t))",
                leaves as f64,
                (x.n() as f64).powf(1.0 + 1.0 / t as f64),
            ));
        }
        return Ok(());
    }
    if v.get("core").is_some() {
        let e = RamseyEmbedding::from_json(&v)?;
        check_tree(&e.tree)?;
        let idx = LcaIndex::build(&e.tree);
        let bound = e.bound();
        for a in e.core.iter() {
            for b in 0..x.n() {
                if a == b {
                    continue;
                }
                if e.pair_in_star(a, b) {
                    continue;
                }
                let du = e.tree.point_distance(&idx, a, b)?;
                let d = x.dist(a, b);
                if du < d {
                    return Err(Error::guarantee(format!("no contraction on ({a},{b})"), du, d));
                }
                if bound.is_finite() && du > bound * d {
                    return Err(Error::guarantee(
                        format!("core stretch on ({a},{b})"),
                        du / d,
                        bound,
                    ));
                }
            }
        }
        return Ok(());
    }
    if v.get("subspace").is_some() {
        let r = RamseyResult::from_json(&v)?;
        check_tree(&r.tree)?;
        let idx = LcaIndex::build(&r.tree);
        let bound = match r.params {
            RamseyParams::Basic { t } => Some(8.0 * t as f64),
            RamseyParams::Partial { t_p, .. } => Some(8.0 * t_p as f64),
            RamseyParams::Scaling { .. } => None,
        };
        let ids = r.subspace.ids();
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                let du = r.tree.point_distance(&idx, a, b)?;
                let d = x.dist(a, b);
                if du < d {
                    return Err(Error::guarantee(format!("no contraction on ({a},{b})"), du, d));
                }
                if let Some(bound) = bound {
                    if !r.pair_in_star(a, b) && du > bound * d {
                        return Err(Error::guarantee(
                            format!("stretch on ({a},{b})"),
                            du / d,
                            bound,
                        ));
                    }
                }
            }
        }
        return Ok(());
    }
    Err(Error::MalformedInput("unrecognized artifact shape".into()))
}

fn check_tree(tree: &ramsey_core::hst::HstTree) -> Result<()> {
    let violations = tree.validate(1.0);
    if let Some(first) = violations.first() {
        return Err(Error::guarantee(
            format!("tree validity: {first:?} ({} violations)", violations.len()),
            violations.len() as f64,
            0.0,
        ));
    }
    Ok(())
}
