//! Resolved run configuration, flat `key = value` text form and seed
//! derivation.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::DEFAULT_TAUS;
use crate::hints::{NoiseConfig, SamplingConfig};
use crate::matcher::SgmConfig;
use crate::occlusion::OcclusionConfig;
use crate::patching::PatchConfig;
use crate::patterning::PatternConfig;
use crate::types::Calibration;

/// Seed for the stream called `label`, derived from the master seed.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub pattern: PatternConfig,
    pub patch: PatchConfig,
    pub occlusion: OcclusionConfig,
    pub sgm: SgmConfig,
    pub density: f64,
    pub noise: bool,
    pub noise_k: f64,
    pub focal_px: f64,
    pub baseline_m: f64,
    pub bins: usize,
    pub taus: Vec<f64>,
    /// Hint densities for a sweep; empty means a single run at `density`.
    pub densities: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            pattern: PatternConfig::default(),
            patch: PatchConfig::default(),
            occlusion: OcclusionConfig::default(),
            sgm: SgmConfig::default(),
            density: SamplingConfig::default().density,
            noise: false,
            noise_k: NoiseConfig::default().k,
            focal_px: 1000.0,
            baseline_m: 0.1,
            bins: 16,
            taus: DEFAULT_TAUS.to_vec(),
            densities: Vec::new(),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub const KEYS: &'static [&'static str] = &[
        "seed",
        "pattern",
        "alpha",
        "search_length",
        "patch_strategy",
        "n_max",
        "phi",
        "sigma_s",
        "sigma_c",
        "t_w",
        "uniform_fill",
        "lambda",
        "gamma",
        "occlusion_threshold",
        "window_x",
        "window_y",
        "policy",
        "max_disparity",
        "p1",
        "p2_min",
        "p2_alpha",
        "p2_gamma",
        "paths",
        "census_window",
        "lr_check",
        "lr_threshold",
        "speckle",
        "speckle_max_size",
        "speckle_tol",
        "fill_holes",
        "density",
        "noise",
        "noise_k",
        "focal_px",
        "baseline_m",
        "bins",
        "taus",
        "densities",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let k = key.as_str();
        match k {
            "seed" => self.seed = parse(k, value)?,
            "pattern" => self.pattern.kind = parse(k, value)?,
            "alpha" => self.pattern.alpha = parse(k, value)?,
            "search_length" => self.pattern.search_length = parse(k, value)?,
            "patch_strategy" => self.patch.strategy = parse(k, value)?,
            "n_max" => self.patch.n_max = parse(k, value)?,
            "phi" => self.patch.phi = parse(k, value)?,
            "sigma_s" => self.patch.sigma_s = parse(k, value)?,
            "sigma_c" => self.patch.sigma_c = parse(k, value)?,
            "t_w" => self.patch.t_w = parse(k, value)?,
            "uniform_fill" => self.patch.uniform_fill = parse(k, value)?,
            "lambda" => self.occlusion.lambda = parse(k, value)?,
            "gamma" => self.occlusion.gamma = parse(k, value)?,
            "occlusion_threshold" => self.occlusion.threshold = parse(k, value)?,
            "window_x" => self.occlusion.window_x = parse(k, value)?,
            "window_y" => self.occlusion.window_y = parse(k, value)?,
            "policy" => self.occlusion.policy = parse(k, value)?,
            "max_disparity" => self.sgm.max_disparity = parse(k, value)?,
            "p1" => self.sgm.p1 = parse(k, value)?,
            "p2_min" => self.sgm.p2_min = parse(k, value)?,
            "p2_alpha" => self.sgm.p2_alpha = parse(k, value)?,
            "p2_gamma" => self.sgm.p2_gamma = parse(k, value)?,
            "paths" => self.sgm.paths = parse(k, value)?,
            "census_window" => self.sgm.census_window = parse(k, value)?,
            "lr_check" => self.sgm.lr_check = parse(k, value)?,
            "lr_threshold" => self.sgm.lr_threshold = parse(k, value)?,
            "speckle" => self.sgm.speckle = parse(k, value)?,
            "speckle_max_size" => self.sgm.speckle_max_size = parse(k, value)?,
            "speckle_tol" => self.sgm.speckle_tol = parse(k, value)?,
            "fill_holes" => self.sgm.fill_holes = parse(k, value)?,
            "density" => self.density = parse(k, value)?,
            "noise" => self.noise = parse(k, value)?,
            "noise_k" => self.noise_k = parse(k, value)?,
            "focal_px" => self.focal_px = parse(k, value)?,
            "baseline_m" => self.baseline_m = parse(k, value)?,
            "bins" => self.bins = parse(k, value)?,
            "taus" => self.taus = parse_list(k, value)?,
            "densities" => self.densities = parse_list(k, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "seed" => self.seed.to_string(),
            "pattern" => self.pattern.kind.to_string(),
            "alpha" => self.pattern.alpha.to_string(),
            "search_length" => self.pattern.search_length.to_string(),
            "patch_strategy" => self.patch.strategy.to_string(),
            "n_max" => self.patch.n_max.to_string(),
            "phi" => self.patch.phi.to_string(),
            "sigma_s" => self.patch.sigma_s.to_string(),
            "sigma_c" => self.patch.sigma_c.to_string(),
            "t_w" => self.patch.t_w.to_string(),
            "uniform_fill" => self.patch.uniform_fill.to_string(),
            "lambda" => self.occlusion.lambda.to_string(),
            "gamma" => self.occlusion.gamma.to_string(),
            "occlusion_threshold" => self.occlusion.threshold.to_string(),
            "window_x" => self.occlusion.window_x.to_string(),
            "window_y" => self.occlusion.window_y.to_string(),
            "policy" => self.occlusion.policy.to_string(),
            "max_disparity" => self.sgm.max_disparity.to_string(),
            "p1" => self.sgm.p1.to_string(),
            "p2_min" => self.sgm.p2_min.to_string(),
            "p2_alpha" => self.sgm.p2_alpha.to_string(),
            "p2_gamma" => self.sgm.p2_gamma.to_string(),
            "paths" => self.sgm.paths.to_string(),
            "census_window" => self.sgm.census_window.to_string(),
            "lr_check" => self.sgm.lr_check.to_string(),
            "lr_threshold" => self.sgm.lr_threshold.to_string(),
            "speckle" => self.sgm.speckle.to_string(),
            "speckle_max_size" => self.sgm.speckle_max_size.to_string(),
            "speckle_tol" => self.sgm.speckle_tol.to_string(),
            "fill_holes" => self.sgm.fill_holes.to_string(),
            "density" => self.density.to_string(),
            "noise" => self.noise.to_string(),
            "noise_k" => self.noise_k.to_string(),
            "focal_px" => self.focal_px.to_string(),
            "baseline_m" => self.baseline_m.to_string(),
            "bins" => self.bins.to_string(),
            "taus" => join(&self.taus),
            "densities" => join(&self.densities),
            _ => return None,
        })
    }

    pub fn to_text(&self) -> String {
        Self::KEYS
            .iter()
            .map(|k| format!("{k} = {}\n", self.get(k).expect("every key has a value")))
            .collect()
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Format {
                    path: origin.into(),
                    line: n + 1,
                    message: format!("expected key = value, got {line:?}"),
                });
            };
            self.set(k, v).map_err(|e| Error::Format {
                path: origin.into(),
                line: n + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.pattern.validate()?;
        self.patch.validate()?;
        self.occlusion.validate()?;
        self.sgm.validate()?;
        self.calibration()?;
        if !(0.0..=1.0).contains(&self.density) {
            return Err(Error::Config(format!("density {} not in [0, 1]", self.density)));
        }
        if self.densities.iter().any(|d| !(0.0..=1.0).contains(d)) {
            return Err(Error::Config("densities must lie in [0, 1]".into()));
        }
        if !(self.noise_k >= 0.0) {
            return Err(Error::Config(format!("noise_k {} must be non-negative", self.noise_k)));
        }
        if self.bins == 0 {
            return Err(Error::Config("bins must be at least 1".into()));
        }
        if self.taus.is_empty() || self.taus.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("taus must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn calibration(&self) -> Result<Calibration> {
        Calibration::new(self.focal_px, self.baseline_m)
    }

    pub fn pattern_config(&self) -> PatternConfig {
        PatternConfig {
            seed: derive_seed(self.seed, "pattern"),
            ..self.pattern
        }
    }

    pub fn sampling_config(&self, density: f64) -> SamplingConfig {
        SamplingConfig {
            density,
            seed: derive_seed(self.seed, "sampling"),
        }
    }

    pub fn noise_config(&self) -> NoiseConfig {
        NoiseConfig {
            k: self.noise_k,
            seed: derive_seed(self.seed, "noise"),
        }
    }
}
