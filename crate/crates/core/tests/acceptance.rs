//! End-to-end acceptance run: one line per criterion, nonzero exit if any
//! criterion fails. Criterion 9 reruns the stochastic criteria on a
//! different thread count and compares their CSV outputs byte for byte.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use monoboot::bootstrap::{fit, resample, BootstrapScheme, Fitted, IntervalKind, SchemeOptions};
use monoboot::empirical::{edf, Sample};
use monoboot::experiments::{
    coverage_study, simulate_delta, write_csv, write_values_csv, CoverageRow, ExperimentConfig,
    OracleOptions, CHERNOFF_Q95,
};
use monoboot::lcm::{grenander, lcm_of_points};
use monoboot::limitsim::{chernoff_draws, limit_pair_draws};
use monoboot::model::TrueModel;
use monoboot::rng::RngStream;
use monoboot::smoothing::{GaussianKernel, SmoothedCdf};
use monoboot::stats::{correlation, kolmogorov_critical, ks_one_sample, quantile};
use rand::Rng;
use serde::Serialize;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Majorant at each abscissa as the maximum over all chords spanning it.
fn chord_majorant(points: &[(f64, f64)]) -> Vec<f64> {
    (0..points.len())
        .map(|i| {
            let x = points[i].0;
            let mut best = points[i].1;
            for j in 0..i {
                for k in i + 1..points.len() {
                    let (x0, y0) = points[j];
                    let (x1, y1) = points[k];
                    best = best.max(y0 + (y1 - y0) * (x - x0) / (x1 - x0));
                }
            }
            best
        })
        .collect()
}

fn lcm_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = RngStream::new(1, 0).rng();
    let mut worst = 0.0_f64;
    for trial in 0..1000 {
        let n = rng.random_range(1..=12);
        let points: Vec<(f64, f64)> = if trial % 2 == 0 {
            let sample = TrueModel::exp1().sample(n, &mut rng).unwrap();
            let f = edf(&sample);
            std::iter::once((0.0, 0.0))
                .chain(
                    f.jump_points()
                        .iter()
                        .copied()
                        .zip(f.cum_probs().iter().copied()),
                )
                .collect()
        } else {
            let mut x = 0.0;
            (0..n.max(2))
                .map(|_| {
                    x += rng.random_range(0.01..1.0);
                    (x, rng.random_range(-1.0..1.0))
                })
                .collect()
        };
        let hull = lcm_of_points(&points).unwrap();
        for ((x, _), want) in points.iter().zip(chord_majorant(&points)) {
            worst = worst.max((hull.eval(*x) - want).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-12 && secs < 10.0,
        format!("max deviation {worst:.1e}, {secs:.2}s"),
    )
}

fn grenander_validity() -> Outcome {
    let model = TrueModel::exp1();
    let mut failures = Vec::new();
    for i in 0..200 {
        let sample = model.sample(100, &mut RngStream::new(2, i).rng()).unwrap();
        let (cdf, density) = grenander(&sample).unwrap();
        if !density.heights().windows(2).all(|w| w[0] >= w[1]) {
            failures.push(format!("sample {i}: density increases"));
        }
        if (density.integral() - 1.0).abs() > 1e-12 {
            failures.push(format!("sample {i}: integral {}", density.integral()));
        }
        let lhs = cdf.sup_distance_concave(|x| model.cdf(x));
        let rhs = edf(&sample).sup_distance(|x| model.cdf(x));
        if lhs > rhs + 1e-12 {
            failures.push(format!("sample {i}: Marshall {lhs} > {rhs}"));
        }
    }
    let detail = if failures.is_empty() {
        "200 samples monotone, normalised, Marshall holds".to_string()
    } else {
        failures.join("; ")
    };
    outcome(failures.is_empty(), detail)
}

fn limit_law(out: &Path) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (model, target, seed) in [
        (TrueModel::exp1(), 0.6887, 3),
        (TrueModel::half_normal(), 0.8269, 4),
    ] {
        let d = simulate_delta(&model, 10_000, 1.0, 10_000, seed).unwrap();
        write_values_csv(out.join(format!("delta_{}.csv", model.name())), "delta", &d).unwrap();
        let q = quantile(&d, 0.95);
        pass &= (q - target).abs() <= 0.03;
        parts.push(format!("{} q95 {q:.4} (target {target})", model.name()));
    }
    outcome(pass, parts.join(", "))
}

fn chernoff_quantile(out: &Path) -> Outcome {
    let d = chernoff_draws(100_000, 4.0, 0.001, 5).unwrap();
    write_values_csv(out.join("chernoff.csv"), "draw", &d).unwrap();
    let q = quantile(&d, 0.95);
    outcome(
        (q - CHERNOFF_Q95).abs() <= 0.02,
        format!("q95 {q:.4} (target {CHERNOFF_Q95})"),
    )
}

fn coverage_config(
    scheme: &str,
    sizes: Vec<usize>,
    intervals: usize,
    seed: u64,
) -> ExperimentConfig {
    ExperimentConfig {
        model: "exp1".into(),
        t0: 1.0,
        scheme: scheme.into(),
        scheme_options: SchemeOptions::default(),
        interval: IntervalKind::Basic,
        sample_sizes: sizes,
        n_intervals: intervals,
        n_boot: 1000,
        level: 0.95,
        master_seed: seed,
        oracle: OracleOptions::default(),
    }
}

fn run_coverage(
    tag: &str,
    scheme: &str,
    sizes: Vec<usize>,
    intervals: usize,
    seed: u64,
    out: &Path,
) -> Vec<CoverageRow> {
    let rows = coverage_study(&coverage_config(scheme, sizes, intervals, seed))
        .unwrap()
        .rows;
    write_csv(out.join(format!("{tag}_{scheme}.csv")), &rows).unwrap();
    rows
}

fn naive_coverage(out: &Path) -> Outcome {
    let sizes = vec![50, 100, 200, 500];
    let targets = [
        ("edf", [0.747, 0.776, 0.802, 0.832]),
        ("npmle", [0.720, 0.755, 0.780, 0.797]),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (scheme, want) in targets {
        let rows = run_coverage("naive_coverage", scheme, sizes.clone(), 1000, 2024, out);
        let got: Vec<String> = rows.iter().map(|r| format!("{:.3}", r.coverage)).collect();
        pass &= rows
            .iter()
            .zip(want)
            .all(|(r, w)| (r.coverage - w).abs() <= 0.05);
        parts.push(format!("{scheme} [{}] vs {want:?}", got.join(", ")));
    }
    outcome(pass, parts.join("; "))
}

#[derive(Serialize)]
struct PairRow {
    slope_z: f64,
    slope_z20: f64,
}

fn correlation_refutation(out: &Path) -> Outcome {
    let draws = limit_pair_draws(1.0, -2.0, 4.0, 0.001, 10_000, 6).unwrap();
    let rows: Vec<PairRow> = draws
        .iter()
        .map(|d| PairRow {
            slope_z: d.slope_z,
            slope_z20: d.slope_z20,
        })
        .collect();
    write_csv(out.join("limit_pairs.csv"), &rows).unwrap();
    let xs: Vec<f64> = draws.iter().map(|d| d.slope_z).collect();
    let ys: Vec<f64> = draws.iter().map(|d| d.slope_z20).collect();
    let r = correlation(&xs, &ys);
    // Fisher z statistic for H0: ρ = 0; two-sided 0.001 critical value.
    let z = r.atanh() * (draws.len() as f64 - 3.0).sqrt();
    let pass = (r + 0.2999).abs() <= 0.04 && z.abs() > 3.2905;
    outcome(
        pass,
        format!("correlation {r:.4} (target -0.2999), Fisher z {z:.1}"),
    )
}

fn consistent_schemes(out: &Path) -> Outcome {
    let coverage = |scheme: &str| {
        run_coverage("consistent_coverage", scheme, vec![2000], 500, 7, out)[0].coverage
    };
    let naive = [coverage("edf"), coverage("npmle")];
    let best_naive = naive[0].max(naive[1]);
    let mut pass = true;
    let mut parts = vec![format!("naive edf {:.3}, npmle {:.3}", naive[0], naive[1])];
    for scheme in ["smoothed", "m-of-n-edf", "m-of-n-npmle"] {
        let c = coverage(scheme);
        let ok = c >= 0.88 && c > best_naive;
        pass &= ok;
        parts.push(format!(
            "{scheme} {c:.3}{}",
            if ok { "" } else { " (below 0.88)" }
        ));
    }
    outcome(pass, parts.join(", "))
}

fn smoothed_sampler_fidelity() -> Outcome {
    let draws = 1_000_000;
    let crit = kolmogorov_critical(0.001) / (draws as f64).sqrt();
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, seed) in [(100usize, 8u64), (1000, 9)] {
        let sample: Sample = TrueModel::exp1()
            .sample(n, &mut RngStream::new(seed, 0).rng())
            .unwrap();
        let Fitted::Npmle(base) = fit(&BootstrapScheme::npmle(), &sample).unwrap() else {
            unreachable!()
        };
        for h in [0.05, 0.2] {
            let s = SmoothedCdf::new(base.clone(), Arc::new(GaussianKernel), h).unwrap();
            let fitted = Fitted::Smoothed(s.clone());
            let r = resample(
                &fitted,
                draws,
                &mut RngStream::new(seed, 1 + h.to_bits()).rng(),
            )
            .unwrap();
            let d = ks_one_sample(r.values(), |x| s.quadrature_cdf(x).unwrap());
            pass &= d < crit;
            parts.push(format!("n={n} h={h}: {d:.5}"));
        }
    }
    outcome(
        pass,
        format!("KS {} (critical {crit:.5})", parts.join(", ")),
    )
}

type Criterion<'a> = (u8, &'static str, Box<dyn Fn() -> Outcome + Sync + 'a>);

/// The stochastic criteria, writing their CSVs into `out`.
fn stochastic(out: &Path) -> Vec<Criterion<'_>> {
    vec![
        (
            3,
            "limit law of the Grenander estimator",
            Box::new(move || limit_law(out)),
        ),
        (
            4,
            "Chernoff quantile",
            Box::new(move || chernoff_quantile(out)),
        ),
        (
            5,
            "naive bootstrap coverage",
            Box::new(move || naive_coverage(out)),
        ),
        (
            6,
            "limit slope correlation",
            Box::new(move || correlation_refutation(out)),
        ),
        (
            7,
            "consistent scheme coverage",
            Box::new(move || consistent_schemes(out)),
        ),
    ]
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    files
}

fn determinism(first: &Path, second: &Path) -> Outcome {
    let a = csv_files(first);
    let b = csv_files(second);
    let names = |v: &[PathBuf]| {
        v.iter()
            .map(|p| p.file_name().unwrap().to_owned())
            .collect::<Vec<_>>()
    };
    if names(&a) != names(&b) {
        return outcome(false, "runs produced different file sets".into());
    }
    let differing: Vec<String> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| std::fs::read(x).unwrap() != std::fs::read(y).unwrap())
        .map(|(x, _)| x.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    if differing.is_empty() {
        outcome(
            true,
            format!("{} CSV files identical on 1 and 3 threads", a.len()),
        )
    } else {
        outcome(false, format!("differ: {}", differing.join(", ")))
    }
}

/// Runs one criterion, prints its line and returns whether it passed.
fn run(id: u8, name: &str, f: &dyn Fn() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let status = if o.pass { "PASS" } else { "FAIL" };
    println!(
        "criterion {id} [{name}]: {status} - {} ({:.1}s)",
        o.detail,
        start.elapsed().as_secs_f64()
    );
    o.pass
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let pool = |k| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .unwrap()
    };

    let mut passed = vec![
        run(1, "majorant oracle", &lcm_oracle),
        run(2, "Grenander validity", &grenander_validity),
    ];
    for (id, name, f) in stochastic(first.path()) {
        passed.push(pool(1).install(|| run(id, name, &*f)));
    }
    passed.push(run(
        8,
        "smoothed sampler fidelity",
        &smoothed_sampler_fidelity,
    ));
    passed.push(run(9, "determinism across thread counts", &|| {
        pool(3).install(|| {
            for (_, _, f) in stochastic(second.path()) {
                f();
            }
        });
        determinism(first.path(), second.path())
    }));

    if passed.iter().all(|&p| p) {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: some criteria failed");
        ExitCode::FAILURE
    }
}
