//! Run configuration shared by the library entry points and the command line.

use crate::error::{Error, Result};
use crate::field::{Grid, DEFAULT_PAIR_BUDGET};
use crate::oscillatory::OscOptions;
use serde::{Deserialize, Serialize};

pub const THREADS_ENV: &str = "TWISTLAB_THREADS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub k_max: usize,
    /// `0` means all available cores.
    pub threads: usize,
    /// Grid step is at most `grid_resolution / sqrt(mu)`.
    pub grid_resolution: f64,
    /// Extra half width beyond `2 sqrt(mu) + 4`.
    pub grid_margin: f64,
    pub pair_budget: f64,
    pub osc_tol: f64,
    pub osc_max_panels: usize,
    pub osc_phase_per_panel: f64,
    pub ascent_restarts: usize,
    pub ascent_max_iter: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let osc = OscOptions::default();
        RunConfig {
            seed: 0,
            k_max: 2000,
            threads: 0,
            grid_resolution: std::f64::consts::FRAC_PI_4,
            grid_margin: 0.0,
            pair_budget: DEFAULT_PAIR_BUDGET,
            osc_tol: osc.tol,
            osc_max_panels: osc.max_panels,
            osc_phase_per_panel: osc.phase_per_panel,
            ascent_restarts: 8,
            ascent_max_iter: 600,
        }
    }
}

impl RunConfig {
    /// Defaults, then the thread count from the environment.
    pub fn from_env() -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Ok(v) = std::env::var(THREADS_ENV) {
            cfg.threads = v
                .trim()
                .parse()
                .map_err(|_| Error::domain(format!("{THREADS_ENV}={v:?} is not a thread count")))?;
        }
        Ok(cfg)
    }

    /// Merge a JSON object of overrides into `self`.
    pub fn merge_json(&self, text: &str) -> Result<Self> {
        let mut base = serde_json::to_value(self).expect("config serializes");
        let over: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("config: {e}")))?;
        let (Some(b), Some(o)) = (base.as_object_mut(), over.as_object()) else {
            return Err(Error::Format("config must be a JSON object".into()));
        };
        for (k, v) in o {
            if !b.contains_key(k) {
                return Err(Error::Format(format!("unknown config key {k:?}")));
            }
            b.insert(k.clone(), v.clone());
        }
        let cfg: RunConfig =
            serde_json::from_value(base).map_err(|e| Error::Format(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_max == 0 {
            return Err(Error::domain("k_max must be positive"));
        }
        if !(self.grid_resolution > 0.0 && self.grid_resolution <= std::f64::consts::FRAC_PI_4) {
            return Err(Error::domain("grid_resolution must lie in (0, pi/4]"));
        }
        if !(self.osc_tol > 0.0) || !(self.osc_phase_per_panel > 0.0) || self.osc_max_panels == 0 {
            return Err(Error::domain("oscillatory quadrature settings must be positive"));
        }
        if !(self.pair_budget > 0.0) {
            return Err(Error::domain("pair_budget must be positive"));
        }
        Ok(())
    }

    pub fn check_k(&self, k: usize) -> Result<()> {
        if k > self.k_max {
            return Err(Error::domain(format!("k = {k} exceeds k_max = {}", self.k_max)));
        }
        Ok(())
    }

    /// Grid resolving `mu` under the configured step rule and margin.
    pub fn grid_for_mu(&self, d: u32, mu: f64) -> Result<Grid> {
        let r = 2.0 * mu.sqrt() + 4.0 + self.grid_margin;
        let h_max = (self.grid_resolution / mu.sqrt()).min(r / 64.0);
        let mut n = (2.0 * r / h_max).ceil() as usize;
        n += n % 2;
        Grid::new(d, r, n)
    }

    pub fn osc_options(&self) -> OscOptions {
        OscOptions {
            tol: self.osc_tol,
            max_panels: self.osc_max_panels,
            phase_per_panel: self.osc_phase_per_panel,
        }
    }

    /// Canonical JSON, the basis of the reproducibility hash.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Install the global thread pool. Later calls keep the first pool.
    pub fn init_threads(&self) {
        let mut b = rayon::ThreadPoolBuilder::new();
        if self.threads > 0 {
            b = b.num_threads(self.threads);
        }
        let _ = b.build_global();
    }
}
