//! The four experiments. Each turns a validated config into a [`CsvTable`].

use rayon::prelude::*;

use dsel_core::{
    capacity_ergodic_with, field_prediction_mse, gen_field_with, mean_and_stderr, predictor_coeffs, rate_diff_1d,
    rate_diff_2d, rate_nondiff, snr_db_to_a2, ChaChaStreams, CorrelationParams, ErgodicEstimate, ErgodicSetup,
    FeedbackCodebooks, FeedbackScheme, FieldDims, LloydSettings, PredictorKind, StreamKind, StreamSource,
};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::RunError;
use crate::table::CsvTable;

pub fn run(cfg: &ExperimentConfig) -> Result<CsvTable, RunError> {
    match cfg.experiment {
        Experiment::MseSurface => run_mse_surface(cfg),
        Experiment::RateSurface => run_rate_surface(cfg),
        Experiment::RateSection => run_rate_section(cfg),
        Experiment::Capacity => run_capacity(cfg),
    }
}

/// Analytic vs Monte Carlo prediction error over the `(alpha_t, alpha_f)`
/// grid. The standard error comes from per-field means, since errors within
/// one field are correlated. Every grid point reuses the same field seeds.
pub fn run_mse_surface(cfg: &ExperimentConfig) -> Result<CsvTable, RunError> {
    let streams = ChaChaStreams::new(cfg.seed);
    let dims = FieldDims::new(cfg.field_dims.0, cfg.field_dims.1, cfg.n_r, cfg.n_t);
    let fields = cfg.mc_samples.div_ceil(dims.interior_points()).max(2) as u64;
    let grid = cfg.grid.points();
    let mut table = CsvTable::new(&["alpha_t", "alpha_f", "mse_analytic", "mse_montecarlo", "mc_stderr"]);
    for &at in &grid {
        for &af in &grid {
            let params = CorrelationParams::new(at, af, cfg.sigma2_h)?;
            let coeffs = predictor_coeffs(at, af, cfg.sigma2_h)?;
            let per_field: Vec<f64> = (0..fields)
                .into_par_iter()
                .map(|k| {
                    let f = gen_field_with(&params, dims, k, |lane| streams.stream(StreamKind::Field, k, lane))?;
                    field_prediction_mse(&f, &coeffs)
                })
                .collect::<Result<_, _>>()?;
            let (mean, se) = mean_and_stderr(&per_field);
            table.push(vec![at.into(), af.into(), coeffs.mse.into(), mean.into(), se.into()]);
        }
    }
    Ok(table)
}

/// Minimal two-dimensional differential rate over the grid.
pub fn run_rate_surface(cfg: &ExperimentConfig) -> Result<CsvTable, RunError> {
    let d = cfg.per_entry_distortion();
    let grid = cfg.grid.points();
    let mut table = CsvTable::new(&["alpha_t", "alpha_f", "bits_2d"]);
    for &at in &grid {
        for &af in &grid {
            let r = rate_diff_2d(cfg.n_r, cfg.n_t, cfg.sigma2_h, d, at, af)?;
            table.push(vec![at.into(), af.into(), r.bits_total.into()]);
        }
    }
    Ok(table)
}

/// Rates on the diagonal `alpha_t = alpha_f`.
pub fn run_rate_section(cfg: &ExperimentConfig) -> Result<CsvTable, RunError> {
    let d = cfg.per_entry_distortion();
    let mut table = CsvTable::new(&["alpha", "bits_2d", "bits_1d", "bits_nondiff", "reduction_2d_vs_1d"]);
    let non = rate_nondiff(cfg.n_r, cfg.n_t, cfg.sigma2_h, d)?.bits_total;
    for a in cfg.grid.points() {
        let two = rate_diff_2d(cfg.n_r, cfg.n_t, cfg.sigma2_h, d, a, a)?.bits_total;
        let one = rate_diff_1d(cfg.n_r, cfg.n_t, cfg.sigma2_h, d, a)?.bits_total;
        let reduction = if one > 0.0 { 1.0 - two / one } else { 0.0 };
        table.push(vec![a.into(), two.into(), one.into(), non.into(), reduction.into()]);
    }
    Ok(table)
}

/// One capacity estimate of the capacity experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct CapacityPoint {
    pub bits: u32,
    pub scheme: FeedbackScheme,
    pub estimate: ErgodicEstimate<f64>,
}

pub fn capacity_setup(cfg: &ExperimentConfig) -> Result<ErgodicSetup<f64>, RunError> {
    Ok(ErgodicSetup {
        params: CorrelationParams::new(cfg.alpha_t, cfg.alpha_f, cfg.sigma2_h)?,
        n_r: cfg.n_r,
        n_t: cfg.n_t,
        field: cfg.field_dims,
        snr_a2: snr_db_to_a2(cfg.snr_db),
        trials: cfg.trials,
        lloyd: LloydSettings {
            training_size: cfg.training_size,
            max_iter: cfg.lloyd_max_iter,
            rel_tol: cfg.lloyd_rel_tol,
            refine_passes: cfg.refine_passes,
        },
    })
}

/// Capacity of every scheme at every bit budget. All schemes evaluate the
/// same channel fields (trial `t` always uses field stream `t`), so the
/// comparison is paired. The perfect-CSI reference does not depend on the
/// bit budget and is computed once.
pub fn capacity_points<S: StreamSource>(cfg: &ExperimentConfig, streams: &S) -> Result<Vec<CapacityPoint>, RunError> {
    let setup = capacity_setup(cfg)?;
    let perfect = if cfg.perfect_csi {
        Some(capacity_ergodic_with(FeedbackScheme::PerfectCsi, &setup, cfg.bits_list[0], streams, None)?)
    } else {
        None
    };
    let mut points = Vec::new();
    for &bits in &cfg.bits_list {
        let two = FeedbackCodebooks::train(PredictorKind::TwoDim, &setup, bits, streams, None)?;
        let one = FeedbackCodebooks::train(PredictorKind::TimeOnly, &setup, bits, streams, Some(two.bootstrap.clone()))?;
        let runs = [
            (FeedbackScheme::Lloyd2d, Some(&two)),
            (FeedbackScheme::Lloyd1d, Some(&one)),
            (FeedbackScheme::Theory2d, None),
            (FeedbackScheme::Theory1d, None),
        ];
        for (scheme, books) in runs {
            let estimate = capacity_ergodic_with(scheme, &setup, bits, streams, books)?;
            points.push(CapacityPoint { bits, scheme, estimate });
        }
        if let Some(p) = &perfect {
            points.push(CapacityPoint {
                bits,
                scheme: FeedbackScheme::PerfectCsi,
                estimate: p.clone(),
            });
        }
    }
    Ok(points)
}

pub fn capacity_table(points: &[CapacityPoint]) -> CsvTable {
    let mut table = CsvTable::new(&["bits", "scheme", "capacity_mean", "stderr", "distortion"]);
    for p in points {
        table.push(vec![
            p.bits.into(),
            p.scheme.name().into(),
            p.estimate.mean.into(),
            p.estimate.std_err.into(),
            p.estimate.distortion.into(),
        ]);
    }
    table
}

/// Ergodic capacity vs feedback bits per channel matrix.
pub fn run_capacity(cfg: &ExperimentConfig) -> Result<CsvTable, RunError> {
    let streams = ChaChaStreams::new(cfg.seed);
    Ok(capacity_table(&capacity_points(cfg, &streams)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Grid;

    fn cfg(e: Experiment) -> ExperimentConfig {
        ExperimentConfig::defaults(e)
    }

    #[test]
    fn rate_section_rows() {
        let t = run_rate_section(&cfg(Experiment::RateSection)).unwrap();
        assert_eq!(t.rows().len(), 20);
        for c in ["bits_2d", "bits_1d", "bits_nondiff"] {
            assert!((t.value(0, c).unwrap() - 21.288).abs() < 1e-3);
        }
        assert!((t.value(19, "bits_2d").unwrap() - 5.425).abs() < 1e-3);
        assert!((t.value(19, "bits_1d").unwrap() - 9.056).abs() < 1e-3);
        assert!((t.value(19, "reduction_2d_vs_1d").unwrap() - 0.401).abs() < 1e-3);
    }

    #[test]
    fn rate_surface_rows() {
        let mut c = cfg(Experiment::RateSurface);
        c.grid = Grid::Values(vec![0.0, 0.9]);
        let t = run_rate_surface(&c).unwrap();
        assert_eq!(t.rows().len(), 4);
        assert!((t.value(0, "bits_2d").unwrap() - 21.288).abs() < 1e-3);
        assert!((t.value(3, "bits_2d").unwrap() - 8.934).abs() < 1e-3);
    }

    #[test]
    fn mse_surface_rows() {
        let mut c = cfg(Experiment::MseSurface);
        c.grid = Grid::Values(vec![0.0, 0.5, 0.999]);
        c.mc_samples = 5000;
        let t = run_mse_surface(&c).unwrap();
        assert_eq!(t.rows().len(), 9);
        let mut c2 = c.clone();
        c2.grid = Grid::Values(vec![0.75]);
        let t2 = run_mse_surface(&c2).unwrap();
        assert!((t2.value(0, "mse_analytic").unwrap() - 0.28).abs() < 1e-12);
    }

    #[test]
    fn capacity_rows_per_bit_and_scheme() {
        let mut c = cfg(Experiment::Capacity);
        c.bits_list = vec![2, 3];
        c.trials = 5;
        c.training_size = 2000;
        c.field_dims = (4, 4);
        let t = run_capacity(&c).unwrap();
        assert_eq!(t.rows().len(), 10);
        let schemes: Vec<String> = t.rows().iter().take(5).map(|r| format!("{:?}", r[1])).collect();
        assert!(schemes[0].contains("lloyd_2d") && schemes[4].contains("perfect_csi"));
        c.perfect_csi = false;
        assert_eq!(run_capacity(&c).unwrap().rows().len(), 8);
    }
}
