//! Experiment configuration: a flat `key = value` file.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are
//! comma-separated. Every key is optional; see [`ExperimentConfig`] for the
//! defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dsel_core::quantizer::MAX_BITS;

use crate::error::ConfigError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    MseSurface,
    RateSurface,
    RateSection,
    Capacity,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [
        Experiment::MseSurface,
        Experiment::RateSurface,
        Experiment::RateSection,
        Experiment::Capacity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::MseSurface => "mse_surface",
            Experiment::RateSurface => "rate_surface",
            Experiment::RateSection => "rate_section",
            Experiment::Capacity => "capacity",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment {s:?} (expected one of mse_surface, rate_surface, rate_section, capacity)"))
    }
}

/// Correlation grid for the surface and section experiments.
#[derive(Clone, Debug, PartialEq)]
pub enum Grid {
    Range { start: f64, stop: f64, step: f64 },
    Values(Vec<f64>),
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        match self {
            Grid::Range { start, stop, step } => {
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                (0..=n).map(|i| start + i as f64 * step).collect()
            }
            Grid::Values(v) => v.clone(),
        }
    }

    fn describe(&self) -> String {
        match self {
            Grid::Range { start, stop, step } => format!("grid_start={start} grid_stop={stop} grid_step={step}"),
            Grid::Values(v) => format!("grid={}", join(v)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub grid: Grid,
    pub n_r: usize,
    pub n_t: usize,
    pub sigma2_h: f64,
    /// Total distortion budget `D` per channel matrix.
    pub d_total: f64,
    pub snr_db: f64,
    /// Correlations for the capacity experiment.
    pub alpha_t: f64,
    pub alpha_f: f64,
    /// Feedback bits per channel matrix.
    pub bits_list: Vec<u32>,
    /// Channel fields averaged per capacity point.
    pub trials: usize,
    /// Interior grid points per mse_surface point.
    pub mc_samples: usize,
    /// Symbol intervals x subchannels per generated field.
    pub field_dims: (usize, usize),
    pub training_size: usize,
    pub lloyd_max_iter: usize,
    pub lloyd_rel_tol: f64,
    pub refine_passes: usize,
    pub perfect_csi: bool,
    pub seed: u64,
    pub out_path: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let field_dims = match experiment {
            Experiment::Capacity => (8, 8),
            _ => (32, 32),
        };
        Self {
            experiment,
            grid: Grid::Range {
                start: 0.0,
                stop: 0.95,
                step: 0.05,
            },
            n_r: 2,
            n_t: 2,
            sigma2_h: 1.0,
            d_total: 0.1,
            snr_db: 5.0,
            alpha_t: 0.9,
            alpha_f: 0.9,
            bits_list: vec![2, 4, 6, 8, 10, 12],
            trials: 2000,
            mc_samples: 100_000,
            field_dims,
            training_size: 100_000,
            lloyd_max_iter: 25,
            lloyd_rel_tol: 1e-4,
            refine_passes: 2,
            perfect_csi: true,
            seed: 1,
            out_path: None,
        }
    }

    /// Per-entry distortion `d = D / (N_r N_t)`.
    pub fn per_entry_distortion(&self) -> f64 {
        self.d_total / (self.n_r * self.n_t) as f64
    }

    /// Parses `text`, applying it over the defaults for `experiment`.
    pub fn parse(experiment: Experiment, text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::defaults(experiment);
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        let mut range_keys = false;
        let mut list_key = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::at(line_no, format!("expected key = value, got {line:?}")))?;
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim();
            if let Some(first) = seen.insert(key.clone(), line_no) {
                return Err(ConfigError::at(line_no, format!("duplicate key {key:?} (first set on line {first})")));
            }
            let err = |msg: String| ConfigError::field(line_no, &key, msg);
            match key.as_str() {
                "experiment" => {
                    let e: Experiment = value.parse().map_err(err)?;
                    if e != experiment {
                        return Err(err(format!("file is for {e}, but {experiment} was requested")));
                    }
                }
                "n_r" => cfg.n_r = parse_num(value).map_err(err)?,
                "n_t" => cfg.n_t = parse_num(value).map_err(err)?,
                "sigma2_h" => cfg.sigma2_h = parse_num(value).map_err(err)?,
                "d_total" => cfg.d_total = parse_num(value).map_err(err)?,
                "snr_db" => cfg.snr_db = parse_num(value).map_err(err)?,
                "alpha_t" => cfg.alpha_t = parse_num(value).map_err(err)?,
                "alpha_f" => cfg.alpha_f = parse_num(value).map_err(err)?,
                "bits_list" => cfg.bits_list = parse_list(value).map_err(err)?,
                "trials" => cfg.trials = parse_num(value).map_err(err)?,
                "mc_samples" => cfg.mc_samples = parse_num(value).map_err(err)?,
                "field_dims" => {
                    let (m, n) = value
                        .split_once('x')
                        .ok_or_else(|| err(format!("expected MxN, got {value:?}")))?;
                    cfg.field_dims = (parse_num(m.trim()).map_err(err)?, parse_num(n.trim()).map_err(err)?);
                }
                "training_size" => cfg.training_size = parse_num(value).map_err(err)?,
                "lloyd_max_iter" => cfg.lloyd_max_iter = parse_num(value).map_err(err)?,
                "lloyd_rel_tol" => cfg.lloyd_rel_tol = parse_num(value).map_err(err)?,
                "refine_passes" => cfg.refine_passes = parse_num(value).map_err(err)?,
                "perfect_csi" => cfg.perfect_csi = parse_num(value).map_err(err)?,
                "seed" => cfg.seed = parse_num(value).map_err(err)?,
                "out" => cfg.out_path = Some(PathBuf::from(value)),
                "grid" => {
                    cfg.grid = Grid::Values(parse_list(value).map_err(err)?);
                    list_key = true;
                }
                "grid_start" | "grid_stop" | "grid_step" => {
                    let v: f64 = parse_num(value).map_err(err)?;
                    let Grid::Range { start, stop, step } = &mut cfg.grid else {
                        return Err(ConfigError::field(
                            line_no,
                            "grid",
                            "cannot combine grid with grid_start/grid_stop/grid_step".into(),
                        ));
                    };
                    match key.as_str() {
                        "grid_start" => *start = v,
                        "grid_stop" => *stop = v,
                        _ => *step = v,
                    }
                    range_keys = true;
                }
                _ => return Err(ConfigError::at(line_no, format!("unknown key {key:?}"))),
            }
            if range_keys && list_key {
                return Err(ConfigError::field(
                    line_no,
                    "grid",
                    "cannot combine grid with grid_start/grid_stop/grid_step".into(),
                ));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(experiment: Experiment, path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::plain(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(experiment, &text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field: &str, msg: String| Err(ConfigError::named(field, msg));
        match &self.grid {
            Grid::Range { start, stop, step } => {
                if !(*step > 0.0) {
                    return bad("grid_step", format!("must be > 0, got {step}"));
                }
                if !(*start >= 0.0) {
                    return bad("grid_start", format!("must be >= 0, got {start}"));
                }
                if !(start <= stop) {
                    return bad("grid_stop", format!("must be >= grid_start, got {stop}"));
                }
                if !(*stop < 1.0) {
                    return bad("grid_stop", format!("must be < 1, got {stop}"));
                }
            }
            Grid::Values(v) => {
                if v.is_empty() {
                    return bad("grid", "needs at least one value".into());
                }
                if let Some(x) = v.iter().find(|x| !(**x >= 0.0 && **x < 1.0)) {
                    return bad("grid", format!("values must lie in [0, 1), got {x}"));
                }
            }
        }
        if self.n_r == 0 {
            return bad("n_r", "must be >= 1".into());
        }
        if self.n_t == 0 {
            return bad("n_t", "must be >= 1".into());
        }
        if !(self.sigma2_h > 0.0) || !self.sigma2_h.is_finite() {
            return bad("sigma2_h", format!("must be > 0, got {}", self.sigma2_h));
        }
        if !(self.d_total > 0.0) || !self.d_total.is_finite() {
            return bad("d_total", format!("must be > 0, got {}", self.d_total));
        }
        if self.per_entry_distortion() > self.sigma2_h {
            return bad(
                "d_total",
                format!(
                    "per-entry distortion {} exceeds sigma2_h = {}",
                    self.per_entry_distortion(),
                    self.sigma2_h
                ),
            );
        }
        if !self.snr_db.is_finite() {
            return bad("snr_db", "must be finite".into());
        }
        for (name, a) in [("alpha_t", self.alpha_t), ("alpha_f", self.alpha_f)] {
            if !(0.0..=1.0).contains(&a) {
                return bad(name, format!("must lie in [0, 1], got {a}"));
            }
        }
        if self.alpha_t == 1.0 && self.alpha_f == 1.0 {
            return bad("alpha_t", "alpha_t = alpha_f = 1 has no MMSE predictor".into());
        }
        if self.bits_list.is_empty() {
            return bad("bits_list", "needs at least one entry".into());
        }
        if let Some(b) = self.bits_list.iter().find(|b| **b == 0 || **b > MAX_BITS) {
            return bad("bits_list", format!("entries must lie in 1..={MAX_BITS}, got {b}"));
        }
        if self.trials < 2 {
            return bad("trials", "must be >= 2 for a standard error".into());
        }
        if self.mc_samples == 0 {
            return bad("mc_samples", "must be >= 1".into());
        }
        if self.field_dims.0 < 2 || self.field_dims.1 < 2 {
            return bad("field_dims", format!("both sides must be >= 2, got {:?}", self.field_dims));
        }
        if self.training_size == 0 {
            return bad("training_size", "must be >= 1".into());
        }
        if self.lloyd_max_iter == 0 {
            return bad("lloyd_max_iter", "must be >= 1".into());
        }
        if !(self.lloyd_rel_tol >= 0.0) {
            return bad("lloyd_rel_tol", format!("must be >= 0, got {}", self.lloyd_rel_tol));
        }
        Ok(())
    }

    /// One-line `key=value` echo of the resolved configuration, including
    /// the derived per-entry distortion.
    pub fn echo(&self) -> String {
        let mut s = format!("experiment={} {}", self.experiment, self.grid.describe());
        s += &format!(
            " n_r={} n_t={} sigma2_h={} d_total={} d={} snr_db={}",
            self.n_r,
            self.n_t,
            self.sigma2_h,
            self.d_total,
            self.per_entry_distortion(),
            self.snr_db
        );
        s += &format!(
            " alpha_t={} alpha_f={} bits_list={} bits_unit=per_matrix trials={} mc_samples={} field_dims={}x{}",
            self.alpha_t,
            self.alpha_f,
            join(&self.bits_list),
            self.trials,
            self.mc_samples,
            self.field_dims.0,
            self.field_dims.1
        );
        s += &format!(
            " training_size={} lloyd_max_iter={} lloyd_rel_tol={} refine_passes={} perfect_csi={} seed={}",
            self.training_size, self.lloyd_max_iter, self.lloyd_rel_tol, self.refine_passes, self.perfect_csi, self.seed
        );
        s
    }
}

fn parse_num<N: FromStr>(value: &str) -> Result<N, String>
where
    N::Err: fmt::Display,
{
    value.parse().map_err(|e| format!("cannot parse {value:?}: {e}"))
}

fn parse_list<N: FromStr>(value: &str) -> Result<Vec<N>, String>
where
    N::Err: fmt::Display,
{
    value.split(',').map(|v| parse_num(v.trim())).collect()
}

fn join<N: fmt::Display>(v: &[N]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg = ExperimentConfig::parse(Experiment::RateSection, "experiment = rate_section\n").unwrap();
        assert_eq!(cfg, ExperimentConfig::defaults(Experiment::RateSection));
        assert_eq!((cfg.n_r, cfg.n_t, cfg.sigma2_h, cfg.d_total, cfg.snr_db), (2, 2, 1.0, 0.1, 5.0));
        assert_eq!(cfg.grid.points().len(), 20);
        assert!((cfg.grid.points()[19] - 0.95).abs() < 1e-12);
        assert!(cfg.echo().contains(" d=0.025 "));
    }

    #[test]
    fn empty_file_is_fine() {
        assert!(ExperimentConfig::parse(Experiment::Capacity, "").is_ok());
    }

    #[test]
    fn overrides_and_comments() {
        let text = "# comment\n\nn_r = 4\nbits_list = 2, 3\ngrid = 0, 0.5, 0.999\nfield_dims = 4x6\nperfect_csi = false\n";
        let cfg = ExperimentConfig::parse(Experiment::Capacity, text).unwrap();
        assert_eq!(cfg.n_r, 4);
        assert_eq!(cfg.bits_list, vec![2, 3]);
        assert_eq!(cfg.grid.points(), vec![0.0, 0.5, 0.999]);
        assert_eq!(cfg.field_dims, (4, 6));
        assert!(!cfg.perfect_csi);
    }

    #[test]
    fn errors_name_the_line_and_field() {
        let e = ExperimentConfig::parse(Experiment::RateSurface, "grid_step = 0\n").unwrap_err();
        assert_eq!(e.field.as_deref(), Some("grid_step"));
        let e = ExperimentConfig::parse(Experiment::RateSurface, "n_r = 2\nn_t = two\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert_eq!(e.field.as_deref(), Some("n_t"));
        let e = ExperimentConfig::parse(Experiment::RateSurface, "\nbogus = 1\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = ExperimentConfig::parse(Experiment::RateSurface, "n_r 2\n").unwrap_err();
        assert_eq!(e.line, Some(1));
        let e = ExperimentConfig::parse(Experiment::RateSurface, "seed = 1\nseed = 2\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = ExperimentConfig::parse(Experiment::RateSurface, "experiment = capacity\n").unwrap_err();
        assert_eq!(e.field.as_deref(), Some("experiment"));
    }

    #[test]
    fn invariant_violations() {
        for (text, field) in [
            ("grid_stop = 1.0", "grid_stop"),
            ("grid_start = 0.5\ngrid_stop = 0.4", "grid_stop"),
            ("d_total = 0", "d_total"),
            ("d_total = 5", "d_total"),
            ("bits_list = 0", "bits_list"),
            ("trials = 1", "trials"),
            ("field_dims = 1x8", "field_dims"),
            ("alpha_t = 1.2", "alpha_t"),
            ("grid = 0.5, 1.0", "grid"),
            ("grid = 0.5\ngrid_step = 0.1", "grid"),
        ] {
            let e = ExperimentConfig::parse(Experiment::Capacity, text).unwrap_err();
            assert_eq!(e.field.as_deref(), Some(field), "{text}");
        }
    }

    #[test]
    fn grid_points_do_not_drift() {
        let g = Grid::Range {
            start: 0.0,
            stop: 0.95,
            step: 0.05,
        };
        let p = g.points();
        assert_eq!(p.len(), 20);
        assert_eq!(p[3], 3.0 * 0.05);
    }
}
