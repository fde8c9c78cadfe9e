use monoboot::limitsim::{argmax_drifted, brownian_path, chernoff_draws, ProcessPath};
use monoboot::rng::RngStream;
use monoboot::stats::{mean, quantile, variance};
use rayon::prelude::*;

const DRAWS: usize = 100_000;

struct Coupled {
    fine: f64,
    coarse: f64,
    short: f64,
    default_width: f64,
}

/// Argmaxes of `W(s) - s²` for one path on `[-5, 5]` at step 0.001, read at
/// step 0.002, and restricted to `[-3, 3]` and `[-4, 4]`.
fn coupled(i: usize) -> Coupled {
    let path: ProcessPath =
        brownian_path(1.0, 5.0, 0.001, &mut RngStream::new(31, i as u64).rng()).unwrap();
    Coupled {
        fine: argmax_drifted(&path),
        coarse: argmax_drifted(&path.decimate(2).unwrap()),
        short: argmax_drifted(&path.restrict(3.0).unwrap()),
        default_width: argmax_drifted(&path.restrict(4.0).unwrap()),
    }
}

#[test]
fn chernoff_grid_and_truncation_stability() {
    let draws: Vec<Coupled> = (0..DRAWS).into_par_iter().map(coupled).collect();
    let fine: Vec<f64> = draws.iter().map(|d| d.fine).collect();
    let coarse: Vec<f64> = draws.iter().map(|d| d.coarse).collect();
    let short: Vec<f64> = draws.iter().map(|d| d.short).collect();
    let default_width: Vec<f64> = draws.iter().map(|d| d.default_width).collect();

    for p in [0.05, 0.25, 0.5, 0.75, 0.95] {
        let (a, b) = (quantile(&fine, p), quantile(&coarse, p));
        assert!((a - b).abs() < 0.01, "p = {p}: {a} vs {b}");
    }

    // The argmax localises well inside [-3, 3]: truncating changes almost
    // no draws and leaves the 0.95 quantile within its Monte Carlo error.
    let changed = fine.iter().zip(&short).filter(|(a, b)| a != b).count();
    assert!(changed < DRAWS / 1000, "{changed} draws moved");
    let se_q95 = (0.95 * 0.05 / DRAWS as f64).sqrt() / 0.2;
    assert!((quantile(&fine, 0.95) - quantile(&short, 0.95)).abs() < 2.0 * se_q95);

    let sd = variance(&default_width).sqrt();
    assert!((sd - 0.52).abs() < 0.02, "sd {sd}");
    assert!(mean(&default_width).abs() < 5.0 * sd / (DRAWS as f64).sqrt());
}

#[test]
fn chernoff_draws_ignore_thread_count() {
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| chernoff_draws(2_000, 3.0, 0.005, 17).unwrap())
    };
    assert_eq!(run(1), run(4));
}
