use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use parcyl::conjugation::ChainOptions;
use parcyl::fatou::ScanWindow;
use parcyl::maps::{DEFAULT_DEGREE, DEFAULT_SERIES_RADIUS};
use parcyl::numeric::{Precision, C64};
use parcyl::rotation::{golden_rotation, RotationNumber};

/// Everything a run depends on. Missing fields take their defaults; unknown
/// fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `golden`, or `cf:a1,a2,...` for θ = [0; a1, a2, ...]. A trailing
    /// `...` repeats the block forever.
    pub theta: String,
    pub precision: Precision,
    /// Truncation degree L of the series for f and g.
    pub degree: usize,
    pub series_radius: f64,
    pub chain: ChainOptions,
    pub n_max: u64,
    pub tolerances: Tolerances,
    pub window: ScanWindow,
    /// Starting point (z, w) for orbit, fit-a and fatou.
    pub point: [C64; 2],
    /// Ladder rung used for calibrated seeds.
    pub delta: f64,
    pub z_in: f64,
    pub seed: u64,
    /// Size of random point clouds.
    pub samples: usize,
    /// Added to A after the chain is built.
    pub a_perturbation: C64,
    pub threads: Option<usize>,
    pub out: PathBuf,
    pub diophantine: DiophantineConfig,
    pub asymptotic: AsymptoticConfig,
    pub map_check: MapCheckConfig,
    pub limit_n: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub axis: f64,
    pub round_trip: f64,
    pub coefficient: f64,
    pub h_ratio: f64,
    pub lemma34_eps: f64,
    pub a_fit: f64,
    /// Gap between chain and orbit A that aborts a Fatou run.
    pub a_abort: f64,
    pub fatou_cauchy: f64,
    pub functional_equation: f64,
    pub asymptotic: f64,
    pub limit_eta: f64,
    /// Undecided fraction above which a raster counts as undecided.
    pub undecided: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            axis: 1e-9,
            round_trip: 1e-10,
            coefficient: 1e-6,
            h_ratio: 3.0,
            lemma34_eps: 0.1,
            a_fit: 1e-2,
            a_abort: 0.1,
            fatou_cauchy: 1e-2,
            functional_equation: 1e-3,
            asymptotic: 0.05,
            limit_eta: 0.01,
            undecided: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiophantineConfig {
    pub n_max: u64,
    pub big_n_max: u64,
    pub r: f64,
}

impl Default for DiophantineConfig {
    fn default() -> Self {
        Self {
            n_max: 64,
            big_n_max: 100_000,
            r: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoticConfig {
    pub n_max: u64,
    pub ray: Vec<f64>,
    pub w: Vec<C64>,
}

impl Default for AsymptoticConfig {
    fn default() -> Self {
        Self {
            n_max: 1_000_000,
            ray: vec![100.0, 200.0, 400.0, 800.0],
            w: vec![C64::new(0.0, 0.0)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapCheckConfig {
    pub axis_radius: f64,
    pub z_radius: f64,
    pub w_radius: f64,
    pub coefficient_radius: f64,
    pub boundary_w: C64,
}

impl Default for MapCheckConfig {
    fn default() -> Self {
        Self {
            axis_radius: 10.0,
            z_radius: 2.0,
            w_radius: 2.0,
            coefficient_radius: 2.0,
            boundary_w: C64::new(0.5, 0.0),
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            theta: "golden".into(),
            precision: Precision::Double,
            degree: DEFAULT_DEGREE,
            series_radius: DEFAULT_SERIES_RADIUS,
            chain: ChainOptions::default(),
            n_max: 10_000,
            tolerances: Tolerances::default(),
            window: ScanWindow::default(),
            point: [C64::new(-0.05, 0.0), C64::new(0.0, 0.0)],
            delta: 0.5,
            z_in: parcyl::orbits::DEFAULT_Z_IN,
            seed: 1,
            samples: 1000,
            a_perturbation: C64::new(0.0, 0.0),
            threads: None,
            out: PathBuf::from("out"),
            diophantine: DiophantineConfig::default(),
            asymptotic: AsymptoticConfig::default(),
            map_check: MapCheckConfig::default(),
            limit_n: 1000,
        }
    }
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self, String> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| format!("invalid config: {e}"))?;
        Ok(cfg)
    }

    #[cfg(test)]
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn rotation(&self) -> Result<RotationNumber, String> {
        parse_theta(&self.theta)
    }

    pub fn validate(&self) -> Result<(), String> {
        let finite_pos = |name: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(format!("{name} must be positive and finite, got {x}"))
            }
        };
        self.rotation()?;
        if !(4..=200).contains(&self.degree) {
            return Err(format!("degree must lie in 4..=200, got {}", self.degree));
        }
        finite_pos("series_radius", self.series_radius)?;
        if !(1..=1_000_000_000).contains(&self.n_max) {
            return Err(format!("n_max must lie in 1..=1e9, got {}", self.n_max));
        }
        if self.chain.k_sum < 16 || self.chain.h_ring < 8 || self.chain.fit_terms == 0 || self.chain.u_samples.len() < self.chain.fit_terms {
            return Err("chain options out of range".into());
        }
        let t = &self.tolerances;
        for (name, x) in [
            ("axis", t.axis),
            ("round_trip", t.round_trip),
            ("coefficient", t.coefficient),
            ("h_ratio", t.h_ratio),
            ("lemma34_eps", t.lemma34_eps),
            ("a_fit", t.a_fit),
            ("a_abort", t.a_abort),
            ("fatou_cauchy", t.fatou_cauchy),
            ("functional_equation", t.functional_equation),
            ("asymptotic", t.asymptotic),
            ("limit_eta", t.limit_eta),
            ("undecided", t.undecided),
        ] {
            finite_pos(&format!("tolerances.{name}"), x)?;
        }
        let w = &self.window;
        if w.nx == 0 || w.ny == 0 || w.nx > 4096 || w.ny > 4096 {
            return Err(format!("window resolution must lie in 1..=4096, got {}x{}", w.nx, w.ny));
        }
        if !(w.re[0] <= w.re[1] && w.im[0] <= w.im[1]) || w.re.iter().chain(&w.im).any(|x| !x.is_finite()) {
            return Err("window bounds must be finite and ordered".into());
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(format!("delta must lie in (0, 1], got {}", self.delta));
        }
        if !(self.z_in > 0.0 && self.z_in < 1.0) {
            return Err(format!("z_in must lie in (0, 1), got {}", self.z_in));
        }
        if !(1..=1_000_000).contains(&self.samples) {
            return Err(format!("samples must lie in 1..=1e6, got {}", self.samples));
        }
        if self.threads == Some(0) {
            return Err("threads must be at least 1".into());
        }
        let d = &self.diophantine;
        if d.n_max == 0 || d.big_n_max == 0 || !(d.r > 0.0) {
            return Err("diophantine ranges must be positive".into());
        }
        let a = &self.asymptotic;
        if a.ray.len() < 4 || a.ray.windows(2).any(|p| !(p[1] > p[0])) || !(a.ray[0] > 0.0) || a.w.is_empty() || a.n_max < 100 {
            return Err("asymptotic needs 4 or more increasing positive ray points, a w value and n_max >= 100".into());
        }
        let m = &self.map_check;
        for (name, x) in [
            ("axis_radius", m.axis_radius),
            ("z_radius", m.z_radius),
            ("w_radius", m.w_radius),
            ("coefficient_radius", m.coefficient_radius),
        ] {
            finite_pos(&format!("map_check.{name}"), x)?;
        }
        if self.limit_n == 0 {
            return Err("limit_n must be positive".into());
        }
        Ok(())
    }
}

pub fn parse_theta(s: &str) -> Result<RotationNumber, String> {
    if s == "golden" {
        return Ok(golden_rotation());
    }
    let Some(list) = s.strip_prefix("cf:") else {
        return Err(format!("theta must be `golden` or `cf:LIST`, got `{s}`"));
    };
    let (list, periodic) = match list.strip_suffix("...") {
        Some(l) => (l, true),
        None => (list, false),
    };
    let block: Vec<u64> = list
        .split(',')
        .map(|t| t.trim().parse::<u64>())
        .collect::<Result<_, _>>()
        .map_err(|e| format!("bad continued fraction `{list}`: {e}"))?;
    RotationNumber::from_cf(&block, periodic).map_err(|e| e.to_string())
}
