//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::time::{Duration, Instant};

use dsel::{capacity_points, run_mse_surface, run_rate_section, run_to, CapacityPoint, Experiment, ExperimentConfig, Grid};
use dsel_core::rng::lane_rng;
use dsel_core::{
    empirical_corr, gen_field, mean_and_stderr, precoder, predictor_coeffs, rate_diff_1d, rate_diff_2d, rate_nondiff,
    snr_db_to_a2, svd_decompose, train_codebook, waterfill, CMatrix, ChaChaStreams, Codebook, CorrelationParams,
    ErgodicSetup, FeedbackCodebooks, FeedbackScheme, FieldDims, LloydSettings, PredictorKind, Real, VectorSet,
};
use num_complex::Complex;

type Outcome = Result<String, String>;

fn within(elapsed: Duration, limit: Duration, detail: String) -> Outcome {
    if elapsed <= limit {
        Ok(detail)
    } else {
        Err(format!("{detail}; too slow: {elapsed:.2?} > {limit:?}"))
    }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn predictor_point() -> Outcome {
    let start = Instant::now();
    let c = predictor_coeffs(0.75f64, 0.75, 1.0).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let err = (c.mse - 0.28).abs();
    check(err <= 1e-12, format!("mse = {} (error {err:.1e})", c.mse))?;
    within(elapsed, Duration::from_millis(1), format!("mse = {} in {elapsed:.1?}", c.mse))
}

fn mse_surface() -> Outcome {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::defaults(Experiment::MseSurface);
    cfg.grid = Grid::Values(vec![0.5, 0.75, 0.9, 0.95]);
    cfg.mc_samples = 100_000;
    cfg.field_dims = (32, 32);
    let t = run_mse_surface(&cfg).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for r in 0..t.rows().len() {
        let v = |c: &str| t.value(r, c).unwrap();
        let z = (v("mse_montecarlo") - v("mse_analytic")).abs() / v("mc_stderr");
        worst = worst.max(z);
        if z > 3.0 {
            bad.push(format!("({}, {}) z = {z:.2}", v("alpha_t"), v("alpha_f")));
        }
    }
    let detail = format!("{} grid points, worst deviation {worst:.2} SE", t.rows().len());
    check(bad.is_empty(), format!("{detail}; outside 3 SE: {}", bad.join(", ")))?;
    within(start.elapsed(), Duration::from_secs(60), detail)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn rate_boundaries() -> Outcome {
    let start = Instant::now();
    let (n_r, n_t, s2, d) = (2, 2, 1.0, 0.025);
    let non = rate_nondiff(n_r, n_t, s2, d).map_err(|e| e.to_string())?.bits_total;
    let zero = rate_diff_2d(n_r, n_t, s2, d, 0.0, 0.0).map_err(|e| e.to_string())?.bits_total;
    check(close(zero, non), format!("rate at (0, 0) {zero} vs non-differential {non}"))?;
    let mut checked = 0;
    for i in 0..20 {
        let at = i as f64 * 0.05;
        let two = rate_diff_2d(n_r, n_t, s2, d, at, 0.0).map_err(|e| e.to_string())?.bits_total;
        let one = rate_diff_1d(n_r, n_t, s2, d, at).map_err(|e| e.to_string())?.bits_total;
        check(close(two, one), format!("alpha_t = {at}: {two} vs {one}"))?;
        checked += 1;
    }
    within(start.elapsed(), Duration::from_secs(1), format!("{checked} grid points agree to 1e-9"))
}

fn dominance() -> Outcome {
    let start = Instant::now();
    let t = run_rate_section(&ExperimentConfig::defaults(Experiment::RateSection)).map_err(|e| e.to_string())?;
    for r in 0..t.rows().len() {
        let v = |c: &str| t.value(r, c).unwrap();
        let (a, two, one, non) = (v("alpha"), v("bits_2d"), v("bits_1d"), v("bits_nondiff"));
        let ok = if a >= 0.05 - 1e-12 {
            two < one && one < non
        } else {
            two <= one && one <= non
        };
        check(ok, format!("alpha = {a}: {two} / {one} / {non}"))?;
    }
    let last = t.rows().len() - 1;
    let detail = format!(
        "{} section points ordered; reduction at alpha = {} is {:.1}%",
        t.rows().len(),
        t.value(last, "alpha").unwrap(),
        100.0 * t.value(last, "reduction_2d_vs_1d").unwrap()
    );
    within(start.elapsed(), Duration::from_secs(1), detail)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

fn trace_monotone(cb: &Codebook<f64>) -> bool {
    cb.trace().windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12))
}

fn lloyd_oracle() -> Outcome {
    let start = Instant::now();
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mass = simpson(phi, 0.0, 12.0, 20_000);
    let level = simpson(|x| x * phi(x), 0.0, 12.0, 20_000) / mass;
    let dist = 2.0 * simpson(|x| (x - level).powi(2) * phi(x), 0.0, 12.0, 20_000);

    let mut rng = lane_rng(2024, 0);
    let mut set = VectorSet::with_capacity(1, 1_000_000);
    for _ in 0..1_000_000 {
        set.push(&[Complex::new(f64::standard_normal(&mut rng), 0.0)]).map_err(|e| e.to_string())?;
    }
    let cb = train_codebook(&set, 1, 200, 1e-9, 1).map_err(|e| e.to_string())?;
    let mut levels: Vec<f64> = cb.codewords().iter().map(|c| c[0].re).collect();
    levels.sort_by(f64::total_cmp);
    let detail = format!(
        "codewords ({:.4}, {:.4}) vs +-{level:.4}, distortion {:.4} vs {dist:.4}",
        levels[0],
        levels[1],
        cb.training_distortion()
    );
    let ok = (levels[0] + level).abs() <= 0.01
        && (levels[1] - level).abs() <= 0.01
        && (levels[0] + 0.798).abs() <= 0.01
        && (cb.training_distortion() - dist).abs() <= 0.01
        && (cb.training_distortion() - 0.3634).abs() <= 0.01;
    check(ok, detail.clone())?;

    let mut runs = vec![cb];
    let setup = ErgodicSetup {
        params: CorrelationParams::new(0.9, 0.9, 1.0).map_err(|e| e.to_string())?,
        n_r: 2,
        n_t: 2,
        field: (8, 8),
        snr_a2: snr_db_to_a2(5.0),
        trials: 1,
        lloyd: LloydSettings {
            training_size: 20_000,
            max_iter: 50,
            rel_tol: 1e-6,
            refine_passes: 2,
        },
    };
    let streams = ChaChaStreams::new(5);
    for bits in [2, 6] {
        for kind in [PredictorKind::TwoDim, PredictorKind::TimeOnly] {
            let books = FeedbackCodebooks::train(kind, &setup, bits, &streams, None).map_err(|e| e.to_string())?;
            runs.push(books.bootstrap);
            runs.push(books.differential);
        }
    }
    let monotone = runs.iter().filter(|cb| trace_monotone(cb)).count();
    check(monotone == runs.len(), format!("{detail}; {monotone}/{} traces monotone", runs.len()))?;
    within(
        start.elapsed(),
        Duration::from_secs(30),
        format!("{detail}; {} traces monotone", runs.len()),
    )
}

fn waterfilling() -> Outcome {
    let start = Instant::now();
    let hand = waterfill(&[1.0, 0.1], 1.0).map_err(|e| e.to_string())?;
    check(
        hand.z2 == vec![2.0, 0.0] && hand.mu == 3.0,
        format!("sigma (1, 0.1): {:?}, mu {}", hand.z2, hand.mu),
    )?;
    let hand = waterfill(&[2.0, 1.0], 1.0).map_err(|e| e.to_string())?;
    check(
        hand.z2 == vec![1.375, 0.625] && hand.mu == 1.625,
        format!("sigma (2, 1): {:?}, mu {}", hand.z2, hand.mu),
    )?;

    let mut rng = lane_rng(606, 0);
    let mut inactive = 0;
    for i in 0..1000 {
        let h = CMatrix::<f64>::complex_gaussian(2, 2, 1.0, &mut rng);
        let a2 = snr_db_to_a2(-10.0 + 30.0 * (i as f64 / 999.0));
        let svd = svd_decompose(&h).map_err(|e| e.to_string())?;
        let alloc = waterfill(&svd.sigma, a2).map_err(|e| e.to_string())?;
        let total: f64 = alloc.z2.iter().sum();
        check((total - 2.0).abs() <= 1e-10, format!("channel {i}: total power {total}"))?;
        for (z2, g) in alloc.z2.iter().zip(&svd.sigma) {
            let floor = 1.0 / (g * g * a2);
            if *z2 > 0.0 {
                check(
                    (z2 + floor - alloc.mu).abs() <= 1e-10 * alloc.mu.max(1.0),
                    format!("channel {i}: active mode off the water level"),
                )?;
            } else {
                inactive += 1;
                check(floor >= alloc.mu, format!("channel {i}: inactive mode above the cut-off"))?;
            }
        }
    }
    within(
        start.elapsed(),
        Duration::from_secs(5),
        format!("hand cases exact; 1000 channels conserve power and satisfy KKT ({inactive} inactive modes)"),
    )
}

fn effective_noise_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = lane_rng(707, 0);
    let h = CMatrix::<f64>::complex_gaussian(2, 2, 1.0, &mut rng);
    let (vz, alloc) = precoder(&h, snr_db_to_a2(5.0)).map_err(|e| e.to_string())?;
    let d = 0.025;
    let draws = 100_000;
    let mut acc = CMatrix::<f64>::zeros(2, 2);
    for _ in 0..draws {
        let j = CMatrix::complex_gaussian(2, 2, d, &mut rng).matmul(&vz).map_err(|e| e.to_string())?;
        acc = &acc + &j.matmul(&j.adjoint()).map_err(|e| e.to_string())?;
    }
    let avg = acc.scale(1.0 / draws as f64);
    let want = d * alloc.total_power();
    let mut worst = 0.0f64;
    for r in 0..2 {
        for c in 0..2 {
            let target = if r == c { want } else { 0.0 };
            worst = worst.max((avg[(r, c)] - Complex::new(target, 0.0)).norm() / want);
        }
    }
    let detail = format!("worst entrywise deviation {:.2}% of d*sum(z2) = {want}", 100.0 * worst);
    check(worst <= 0.02, detail.clone())?;
    within(start.elapsed(), Duration::from_secs(10), detail)
}

fn find(points: &[CapacityPoint], bits: u32, scheme: FeedbackScheme) -> &CapacityPoint {
    points.iter().find(|p| p.bits == bits && p.scheme == scheme).expect("capacity point")
}

/// Standard error of the mean of a per-trial linear combination.
fn paired_se(series: &[(&[f64], f64)]) -> f64 {
    let n = series[0].0.len();
    let combo: Vec<f64> = (0..n).map(|t| series.iter().map(|(xs, w)| w * xs[t]).sum()).collect();
    mean_and_stderr(&combo).1
}

fn capacity_ordering() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig::defaults(Experiment::Capacity);
    let points = capacity_points(&cfg, &ChaChaStreams::new(cfg.seed)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let bits = &cfg.bits_list;
    let mut failures = Vec::new();

    for &b in bits {
        let m = |s| find(&points, b, s).estimate.mean;
        if m(FeedbackScheme::Lloyd2d) < m(FeedbackScheme::Lloyd1d) {
            failures.push(format!("b={b}: lloyd_2d < lloyd_1d"));
        }
        if m(FeedbackScheme::Theory2d) < m(FeedbackScheme::Lloyd2d) {
            failures.push(format!("b={b}: theory_2d < lloyd_2d"));
        }
        if m(FeedbackScheme::Theory1d) < m(FeedbackScheme::Lloyd1d) {
            failures.push(format!("b={b}: theory_1d < lloyd_1d"));
        }
    }

    let top = *bits.last().unwrap();
    let l = &find(&points, top, FeedbackScheme::Lloyd2d).estimate;
    let p = &find(&points, top, FeedbackScheme::PerfectCsi).estimate;
    let gap = p.mean - l.mean;
    let se = (l.std_err.powi(2) + p.std_err.powi(2)).sqrt();
    let se_paired = paired_se(&[(&p.per_trial, 1.0), (&l.per_trial, -1.0)]);
    let gap_note = format!("gap to perfect CSI at b={top}: {gap:.4} bits ({:.1} SE, {:.1} paired SE)", gap / se, gap / se_paired);
    if gap.abs() > 3.0 * se {
        failures.push(format!("lloyd_2d at b={top} is not within 3 SE of perfect CSI"));
    }

    let mut worst_curv = f64::NEG_INFINITY;
    for scheme in [
        FeedbackScheme::Lloyd2d,
        FeedbackScheme::Lloyd1d,
        FeedbackScheme::Theory2d,
        FeedbackScheme::Theory1d,
    ] {
        for w in bits.windows(3) {
            let e: Vec<_> = w.iter().map(|&b| &find(&points, b, scheme).estimate).collect();
            let curvature = (e[2].mean - e[1].mean) - (e[1].mean - e[0].mean);
            let se = paired_se(&[(&e[0].per_trial, 1.0), (&e[1].per_trial, -2.0), (&e[2].per_trial, 1.0)]);
            worst_curv = worst_curv.max(curvature / se);
            if curvature > 2.0 * se {
                failures.push(format!(
                    "{} b={:?}: first difference grows by {curvature:.4} ({:.1} SE)",
                    scheme.name(),
                    w,
                    curvature / se
                ));
            }
        }
    }

    let summary: Vec<String> = bits
        .iter()
        .map(|&b| {
            let m = |s| find(&points, b, s).estimate.mean;
            format!(
                "b={b}: {:.3}/{:.3}/{:.3}/{:.3}",
                m(FeedbackScheme::Lloyd2d),
                m(FeedbackScheme::Lloyd1d),
                m(FeedbackScheme::Theory2d),
                m(FeedbackScheme::Theory1d)
            )
        })
        .collect();
    let detail = format!(
        "lloyd_2d/lloyd_1d/theory_2d/theory_1d {}; perfect {:.3}; {gap_note}; worst curvature {worst_curv:.1} SE; {elapsed:.0?}",
        summary.join(", "),
        p.mean
    );
    check(failures.is_empty(), format!("{}; {detail}", failures.join("; ")))?;
    within(elapsed, Duration::from_secs(600), detail)
}

fn channel_statistics() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (at, af) in [(0.9f64, 0.9f64), (0.75, 0.75)] {
        let params = CorrelationParams::new(at, af, 1.0).map_err(|e| e.to_string())?;
        let dims = FieldDims::new(32, 32, 2, 2);
        let lags = [(0, 0, 1.0), (1, 0, at), (0, 1, af), (1, 1, at * af)];
        let mut per_field = vec![Vec::new(); lags.len()];
        for seed in 0..200 {
            let f = gen_field(&params, dims, 50_000 + seed).map_err(|e| e.to_string())?;
            for (slot, (dm, dn, _)) in per_field.iter_mut().zip(lags) {
                slot.push(empirical_corr(&f, dm, dn).map_err(|e| e.to_string())?);
            }
        }
        for (xs, (dm, dn, want)) in per_field.iter().zip(lags) {
            let (mean, se) = mean_and_stderr(xs);
            let z = (mean - want).abs() / se;
            worst = worst.max(z);
            check(
                z <= 3.0,
                format!("alpha ({at}, {af}) lag ({dm}, {dn}): {mean:.4} vs {want}, {z:.2} SE"),
            )?;
        }
    }
    within(
        start.elapsed(),
        Duration::from_secs(60),
        format!("power and lags (1,0), (0,1), (1,1) at two settings; worst {worst:.2} SE"),
    )
}

fn determinism() -> Outcome {
    let mut configs = Vec::new();
    let mut mse = ExperimentConfig::defaults(Experiment::MseSurface);
    mse.grid = Grid::Values(vec![0.5, 0.9]);
    mse.mc_samples = 20_000;
    configs.push(mse);
    configs.push(ExperimentConfig::defaults(Experiment::RateSurface));
    configs.push(ExperimentConfig::defaults(Experiment::RateSection));
    let mut cap = ExperimentConfig::defaults(Experiment::Capacity);
    cap.bits_list = vec![2, 4];
    cap.trials = 100;
    cap.training_size = 5000;
    configs.push(cap);
    for cfg in &configs {
        let mut a = Vec::new();
        let mut b = Vec::new();
        run_to(cfg, &mut a).map_err(|e| e.to_string())?;
        run_to(cfg, &mut b).map_err(|e| e.to_string())?;
        check(a == b, format!("{} output differs between runs", cfg.experiment))?;
    }
    Ok(format!("{} experiments reproduce byte for byte", configs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("predictor point check", predictor_point),
        ("analytic vs Monte Carlo prediction error", mse_surface),
        ("rate boundary identities", rate_boundaries),
        ("rate dominance on the diagonal section", dominance),
        ("one-bit Lloyd-Max oracle", lloyd_oracle),
        ("water-filling correctness", waterfilling),
        ("effective-noise identity", effective_noise_identity),
        ("capacity ordering", capacity_ordering),
        ("channel statistics", channel_statistics),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {:>2} {name}: {detail} ({secs:.2}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {detail} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
