use crate::config::{ConfigFile, Resolved};
use crate::manifest::Manifest;
use crate::svg::{line_chart, Series};
use crate::{
    CmdError, CompareArgs, GaussianArgs, LadderArgs, OracleArgs, SimulateArgs, TableArgs,
    TraceCheckArgs,
};
use serde::Serialize;
use std::path::{Path, PathBuf};
use treecover_core::analysis::{
    growth_rate_plot_data, ks_critical, ks_two_sample, p_norm, preregistered_ks_tolerance,
    regime_table, EmpiricalDistribution,
};
use treecover_core::gaussian::{concentration_tail_check, estimate_esup, gamma2_upper};
use treecover_core::limit::{rescale_cover, sample_limit_cover, sample_tilde_covers, LadderSpec};
use treecover_core::network::{
    bar_sigma_indices, build_tree_network, commute_identity_check, exact_expected_cover_time,
    expected_hitting_time, level_range_indices, trace_network_with_report,
};
use treecover_core::samples::{ladder_to_csv, run_records_to_csv, CsvTable};
use treecover_core::tree::Params;
use treecover_core::walk::{sample_covers, sample_tree_covers, Family, RunRecord, SampleMeta};

fn usage(m: impl Into<String>) -> CmdError {
    CmdError::Usage(m.into())
}

fn out_dir(r: &mut Resolved, cfg: &ConfigFile, flag: Option<PathBuf>, default: &str) -> Result<PathBuf, CmdError> {
    let dir = r
        .resolve(cfg, "out", flag.map(|p| p.display().to_string()), default.to_string())
        .map_err(usage)?;
    let dir = PathBuf::from(dir);
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn empirical(values: Vec<f64>, tag: &str) -> Result<EmpiricalDistribution, CmdError> {
    Ok(EmpiricalDistribution::new(values, tag)?)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CmdError> {
    let text = serde_json::to_string_pretty(value).expect("serializable report");
    std::fs::write(dir.join(name), text + "\n")?;
    Ok(())
}

pub fn simulate(cfg: &ConfigFile, args: SimulateArgs) -> Result<(), CmdError> {
    let mut r = Resolved::new("simulate");
    let lambda = r.resolve_required(cfg, "lambda", args.lambda).map_err(usage)?;
    let depth = r.resolve_required(cfg, "depth", args.depth).map_err(usage)?;
    let family_text = r.resolve(cfg, "family", args.family, "raw".to_string()).map_err(usage)?;
    let family = Family::parse(&family_text).map_err(|e| usage(e.to_string()))?;
    let samples = r.resolve(cfg, "samples", args.samples, 1000).map_err(usage)?;
    let seed = r.resolve(cfg, "seed", args.seed, 0).map_err(usage)?;
    let dir = out_dir(&mut r, cfg, args.out, "out/simulate")?;

    let p = Params::new(lambda, depth)?;
    let meta = SampleMeta { family, lambda, n: depth, seed };
    let records: Vec<RunRecord> = match family {
        Family::Raw => sample_tree_covers(&p, &meta, samples),
        Family::Tilde => sample_tilde_covers(&p, seed, samples)?,
        Family::Bar => {
            let net = build_tree_network(&p)?;
            let keep = bar_sigma_indices(depth);
            let measure: Vec<f64> = keep.iter().map(|&k| net.measure()[k as usize]).collect();
            let traced = treecover_core::network::trace_network(&net, &keep, &measure)?;
            let engine = treecover_core::walk::JumpChainEngine::new(&traced)?;
            // by symmetry any window-floor vertex is an equivalent start
            sample_covers(&engine, 0, &meta, samples)
        }
    };
    let rescaled: Vec<f64> = records
        .iter()
        .map(|rec| rescale_cover(rec.tau, family, &p).value)
        .collect();
    std::fs::write(dir.join("samples.csv"), run_records_to_csv(&records, Some(&rescaled)))?;
    Manifest::new("simulate", r.values.clone(), vec!["samples.csv".into()]).write(&dir)?;

    let taus = empirical(records.iter().map(|rec| rec.tau).collect(), "tau")?;
    let resc = empirical(rescaled, "rescaled")?;
    let (p1, p1se) = p_norm(&resc, 1.0)?;
    let (p2, p2se) = p_norm(&resc, 2.0)?;
    println!(
        "simulate family={} lambda={lambda} n={depth} samples={samples} seed={seed}",
        family.text()
    );
    println!("  mean tau        {:.6e} (se {:.2e})", taus.mean(), taus.standard_error());
    println!("  rescaled mean   {:.6} (se {:.4})", resc.mean(), resc.standard_error());
    println!("  rescaled p-norms p1 {p1:.6} (se {p1se:.4}), p2 {p2:.6} (se {p2se:.4})");
    println!("  wrote {}", dir.join("samples.csv").display());
    Ok(())
}

#[derive(Serialize)]
struct CompareReport {
    a: String,
    b: String,
    n_a: usize,
    n_b: usize,
    statistic: f64,
    critical_1pct: f64,
    critical_5pct: f64,
    tolerance: f64,
    pass: bool,
}

pub fn compare(cfg: &ConfigFile, args: CompareArgs) -> Result<(), CmdError> {
    let mut r = Resolved::new("compare");
    let a_path = r
        .resolve_required(cfg, "a", args.a.map(|p| p.display().to_string()))
        .map_err(usage)?;
    let b_path = r
        .resolve_required(cfg, "b", args.b.map(|p| p.display().to_string()))
        .map_err(usage)?;
    let read = |path: &str| -> Result<Vec<f64>, CmdError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CmdError::Runtime(format!("cannot read {path}: {e}")))?;
        Ok(CsvTable::parse(&text)?.sample_column()?)
    };
    let a = empirical(read(&a_path)?, "a")?;
    let b = empirical(read(&b_path)?, "b")?;
    let tolerance = r
        .resolve(cfg, "tolerance", args.tolerance, preregistered_ks_tolerance(a.len(), b.len()))
        .map_err(usage)?;
    let dir = out_dir(&mut r, cfg, args.out, "out/compare")?;

    let statistic = ks_two_sample(&a, &b);
    let report = CompareReport {
        a: a_path,
        b: b_path,
        n_a: a.len(),
        n_b: b.len(),
        statistic,
        critical_1pct: ks_critical(0.01, a.len(), b.len()),
        critical_5pct: ks_critical(0.05, a.len(), b.len()),
        tolerance,
        pass: statistic < tolerance,
    };
    write_json(&dir, "report.json", &report)?;
    Manifest::new("compare", r.values.clone(), vec!["report.json".into()]).write(&dir)?;
    println!(
        "compare: KS = {statistic:.4} (1% critical {:.4}, 5% critical {:.4}, tolerance {tolerance:.4}) -> {}",
        report.critical_1pct,
        report.critical_5pct,
        if report.pass { "PASS" } else { "FAIL" }
    );
    if report.pass {
        Ok(())
    } else {
        Err(CmdError::Runtime(format!(
            "KS statistic {statistic:.4} exceeds tolerance {tolerance:.4}"
        )))
    }
}

pub fn ladder(cfg: &ConfigFile, args: LadderArgs) -> Result<(), CmdError> {
    let mut r = Resolved::new("ladder");
    let lambda = r.resolve_required(cfg, "lambda", args.lambda).map_err(usage)?;
    let depth: u32 = r.resolve_required(cfg, "depth", args.depth).map_err(usage)?;
    let default_levels = LadderSpec::default_levels(depth)
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(",");
    let levels_text = r.resolve(cfg, "levels", args.levels, default_levels).map_err(usage)?;
    let levels: Vec<u32> = levels_text
        .split(',')
        .map(|s| s.trim().parse::<u32>().map_err(|e| usage(format!("bad level {s:?}: {e}"))))
        .collect::<Result<_, _>>()?;
    let samples = r.resolve(cfg, "samples", args.samples, 1000).map_err(usage)?;
    let seed = r.resolve(cfg, "seed", args.seed, 0).map_err(usage)?;
    let dir = out_dir(&mut r, cfg, args.out, "out/ladder")?;

    let spec = LadderSpec::new(lambda, depth, levels, samples, seed)?;
    let out = sample_limit_cover(&spec)?;
    std::fs::write(
        dir.join("ladder.csv"),
        ladder_to_csv(lambda, depth, seed, &out.levels, &out.taus),
    )?;
    Manifest::new("ladder", r.values.clone(), vec!["ladder.csv".into()]).write(&dir)?;

    let means = out.level_means();
    println!("ladder lambda={lambda} n={depth} samples={samples} seed={seed}");
    for (level, mean) in out.levels.iter().zip(&means) {
        println!("  level {level:>2}: mean nested cover {mean:.6}");
    }
    for w in means.windows(2).zip(out.levels.windows(2)) {
        println!("  increment {}->{}: {:.6}", w.1[0], w.1[1], w.0[1] - w.0[0]);
    }
    println!("  wrote {}", dir.join("ladder.csv").display());
    Ok(())
}

#[derive(Serialize)]
struct GaussianReport {
    lambda: f64,
    n: u32,
    estimate: f64,
    stderr: f64,
    samples: usize,
    seed: u64,
    gamma2_upper: f64,
    tail_c: Option<f64>,
    tail_amplitude: Option<f64>,
}

pub fn gaussian(cfg: &ConfigFile, args: GaussianArgs) -> Result<(), CmdError> {
    let mut r = Resolved::new("gaussian");
    let lambda = r.resolve_required(cfg, "lambda", args.lambda).map_err(usage)?;
    let depth = r.resolve_required(cfg, "depth", args.depth).map_err(usage)?;
    let samples = r.resolve(cfg, "samples", args.samples, 2000).map_err(usage)?;
    let seed = r.resolve(cfg, "seed", args.seed, 0).map_err(usage)?;
    let tail_from = args
        .tail_from
        .map(|p| p.display().to_string())
        .or_else(|| cfg.get("gaussian", "tail_from").map(str::to_string));
    if let Some(t) = &tail_from {
        r.note("tail_from", t);
    }
    let dir = out_dir(&mut r, cfg, args.out, "out/gaussian")?;

    let p = Params::new(lambda, depth)?;
    let (estimate, stderr) = estimate_esup(&p, samples, seed)?;
    let g2 = gamma2_upper(&p);
    let mut outputs = vec!["gaussian.json".to_string()];
    let mut tail_c = None;
    let mut tail_amp = None;
    if let Some(path) = &tail_from {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CmdError::Runtime(format!("cannot read {path}: {e}")))?;
        let taus = CsvTable::parse(&text)?.f64_column("tau")?;
        let fit = concentration_tail_check(&taus, &p)?;
        let mut csv = String::from("u,exceedance,fitted\n");
        for (u, emp, fitted) in &fit.points {
            csv.push_str(&format!("{u},{emp},{fitted}\n"));
        }
        std::fs::write(dir.join("tail.csv"), csv)?;
        outputs.push("tail.csv".to_string());
        tail_c = Some(fit.c);
        tail_amp = Some(fit.amplitude());
    }
    let report = GaussianReport {
        lambda,
        n: depth,
        estimate,
        stderr,
        samples,
        seed,
        gamma2_upper: g2,
        tail_c,
        tail_amplitude: tail_amp,
    };
    write_json(&dir, "gaussian.json", &report)?;
    Manifest::new("gaussian", r.values.clone(), outputs).write(&dir)?;
    println!("gaussian lambda={lambda} n={depth}: E sup = {estimate:.6} (se {stderr:.4}), gamma2 upper = {g2:.6}");
    if let Some(c) = tail_c {
        println!("  tail fit: c = {c:.4}");
    }
    Ok(())
}

pub fn table(cfg: &ConfigFile, args: TableArgs) -> Result<(), CmdError> {
    let mut r = Resolved::new("table");
    let lambdas_text = r
        .resolve(cfg, "lambdas", args.lambdas, "0.5,1,1.5,2,3".to_string())
        .map_err(usage)?;
    let lambdas: Vec<f64> = lambdas_text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| usage(format!("bad lambda {s:?}: {e}"))))
        .collect::<Result<_, _>>()?;
    let depths_text = r.resolve(cfg, "depths", args.depths, "5:9".to_string()).map_err(usage)?;
    let (lo, hi) = depths_text
        .split_once(':')
        .ok_or_else(|| usage(format!("bad depth range {depths_text:?}, expected lo:hi")))?;
    let lo: u32 = lo.trim().parse().map_err(|e| usage(format!("bad depth {lo:?}: {e}")))?;
    let hi: u32 = hi.trim().parse().map_err(|e| usage(format!("bad depth {hi:?}: {e}")))?;
    let samples = r.resolve(cfg, "samples", args.samples, 200).map_err(usage)?;
    let seed = r.resolve(cfg, "seed", args.seed, 0).map_err(usage)?;
    let dir = out_dir(&mut r, cfg, args.out, "out/table")?;

    let rows = regime_table(&lambdas, lo..=hi, samples, seed)?;
    let mut csv = String::from(
        "lambda,classification,res_diam_rate,total_cond_rate,cover_rate,\
         predicted_res_diam_rate,predicted_total_cond_rate,predicted_cover_rate,\
         cover_poly_degree,mc_samples\n",
    );
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            row.lambda,
            row.classification,
            row.res_diam_rate,
            row.total_cond_rate,
            row.cover_rate,
            row.predicted_res_diam_rate,
            row.predicted_total_cond_rate,
            row.predicted_cover_rate,
            row.cover_poly_degree,
            row.mc_samples
        ));
    }
    std::fs::write(dir.join("regime.csv"), csv)?;

    let growth = growth_rate_plot_data(&lambdas, lo..=hi, samples, seed)?;
    let mut gcsv = String::from("lambda,geometric_factor,cover_poly_degree\n");
    for g in &growth {
        gcsv.push_str(&format!("{},{},{}\n", g.lambda, g.geometric_factor, g.cover_poly_degree));
    }
    std::fs::write(dir.join("growth.csv"), gcsv)?;
    let svg = line_chart(
        "Geometric growth rate of the mean cover time",
        "lambda",
        "exp(rate)",
        false,
        &[Series {
            name: "fitted".to_string(),
            points: growth.iter().map(|g| (g.lambda, g.geometric_factor)).collect(),
        }],
    );
    std::fs::write(dir.join("growth.svg"), svg)?;
    Manifest::new(
        "table",
        r.values.clone(),
        vec!["regime.csv".into(), "growth.csv".into(), "growth.svg".into()],
    )
    .write(&dir)?;

    println!("regime table (fitted vs predicted log-rates per level):");
    println!("  lambda  class   diam        cond        cover       poly");
    for row in &rows {
        println!(
            "  {:<7} {:<7} {:>5.3}/{:<5.3} {:>5.3}/{:<5.3} {:>5.3}/{:<5.3} n^{}",
            row.lambda,
            row.classification,
            row.res_diam_rate,
            row.predicted_res_diam_rate,
            row.total_cond_rate,
            row.predicted_total_cond_rate,
            row.cover_rate,
            row.predicted_cover_rate,
            row.cover_poly_degree
        );
    }
    println!("  wrote {}", dir.join("regime.csv").display());
    Ok(())
}

#[derive(Serialize)]
struct TraceCheckReport {
    lambda: f64,
    n: u32,
    keep: String,
    kept: usize,
    eliminated: usize,
    max_fill_in: usize,
    residual_asymmetry: f64,
    pairs_checked: usize,
    max_resistance_rel_dev: f64,
    composability_max_rel_dev: f64,
    pass: bool,
}

pub fn trace_check(cfg: &ConfigFile, args: TraceCheckArgs) -> Result<(), CmdError> {
    let mut r = Resolved::new("trace-check");
    let lambda = r.resolve(cfg, "lambda", args.lambda, 0.5).map_err(usage)?;
    let depth = r.resolve_required(cfg, "depth", args.depth).map_err(usage)?;
    let keep_kind = r.resolve(cfg, "keep", args.keep, "bar".to_string()).map_err(usage)?;
    let dir = out_dir(&mut r, cfg, args.out, "out/trace-check")?;

    let p = Params::new(lambda, depth)?;
    let net = build_tree_network(&p)?;
    let keep = match keep_kind.as_str() {
        "bar" => bar_sigma_indices(depth),
        "tilde" => level_range_indices(depth, depth),
        other => return Err(usage(format!("keep must be bar or tilde, got {other:?}"))),
    };
    let measure: Vec<f64> = keep.iter().map(|&k| net.measure()[k as usize]).collect();
    let (traced, report) = trace_network_with_report(&net, &keep, &measure)?;
    let orig = treecover_core::network::ResistanceSolver::new(&net)?;
    let red = treecover_core::network::ResistanceSolver::new(&traced)?;
    let mut worst = 0.0f64;
    let mut pairs_checked = 0usize;
    for a in 0..keep.len() {
        for b in (a + 1)..keep.len() {
            let r0 = orig.resistance(keep[a], keep[b]);
            let r1 = red.resistance(a as u32, b as u32);
            worst = worst.max((r0 - r1).abs() / r0);
            pairs_checked += 1;
        }
    }
    // composability: trace the already-traced network onto the leaf level
    let sub_global = level_range_indices(depth, depth);
    let sub_local: Vec<u32> = sub_global
        .iter()
        .map(|g| keep.iter().position(|k| k == g).expect("subset of keep") as u32)
        .collect();
    let sub_measure = vec![1.0; sub_local.len()];
    let via = treecover_core::network::trace_network(&traced, &sub_local, &sub_measure)?;
    let direct = treecover_core::network::trace_network(&net, &sub_global, &sub_measure)?;
    let mut comp_dev = 0.0f64;
    for (x, y) in via.edges().iter().zip(direct.edges()) {
        comp_dev = comp_dev.max((x.2 - y.2).abs() / y.2.abs());
    }
    let pass = worst <= 1e-9 && comp_dev <= 1e-9;
    let rep = TraceCheckReport {
        lambda,
        n: depth,
        keep: keep_kind,
        kept: report.kept,
        eliminated: report.eliminated,
        max_fill_in: report.max_fill_in,
        residual_asymmetry: report.residual_asymmetry,
        pairs_checked,
        max_resistance_rel_dev: worst,
        composability_max_rel_dev: comp_dev,
        pass,
    };
    write_json(&dir, "report.json", &rep)?;
    Manifest::new("trace-check", r.values.clone(), vec!["report.json".into()]).write(&dir)?;
    println!(
        "trace-check lambda={lambda} n={depth} keep={} : max resistance deviation {worst:.3e} over {pairs_checked} pairs, composability {comp_dev:.3e} -> {}",
        rep.keep,
        if pass { "PASS" } else { "FAIL" }
    );
    if pass {
        Ok(())
    } else {
        Err(CmdError::Runtime(format!("trace deviation {worst:.3e} above 1e-9")))
    }
}

#[derive(Serialize)]
struct OracleReport {
    lambda: f64,
    n: u32,
    expected_cover_from_root: f64,
    expected_hit_root_to_leaf: f64,
    commute_max_rel_err: f64,
}

pub fn oracle(cfg: &ConfigFile, args: OracleArgs) -> Result<(), CmdError> {
    let mut r = Resolved::new("oracle");
    let lambda = r.resolve(cfg, "lambda", args.lambda, 0.5).map_err(usage)?;
    let depth = r.resolve_required(cfg, "depth", args.depth).map_err(usage)?;
    let dir = out_dir(&mut r, cfg, args.out, "out/oracle")?;

    let p = Params::new(lambda, depth)?;
    let net = build_tree_network(&p)?;
    let cover = exact_expected_cover_time(&net, 0)?;
    let leaf = net.len() as u32 - 1;
    let hit = expected_hitting_time(&net, 0, leaf)?;
    let commute = commute_identity_check(&net, 20, 1)?;
    let rep = OracleReport {
        lambda,
        n: depth,
        expected_cover_from_root: cover,
        expected_hit_root_to_leaf: hit,
        commute_max_rel_err: commute,
    };
    write_json(&dir, "oracle.json", &rep)?;
    Manifest::new("oracle", r.values.clone(), vec!["oracle.json".into()]).write(&dir)?;
    println!("oracle lambda={lambda} n={depth}:");
    println!("  E[cover from root]      = {cover:.12}");
    println!("  E[hit last leaf | root] = {hit:.12}");
    println!("  commute identity max rel err = {commute:.3e}");
    Ok(())
}
