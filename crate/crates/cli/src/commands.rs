use std::cell::OnceCell;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use parcyl::conjugation::{calibrate, Calibration, CalibrationOptions, ChainManifest, ConjugationChain};
use parcyl::fatou::{
    basin_scan, cross_check_a, fatou_coordinate, functional_equation_residual, BasinClass, FatouEstimate,
    FatouOptions,
};
use parcyl::maps::{section5_map_with, AutomorphismSpec, ResolvedWord};
use parcyl::orbits::{estimate_a, iterate, IterateOptions, Ladder};
use parcyl::rotation::{diophantine_fit, verify_sum_bound, RotationNumber};
use parcyl::Error;

use crate::checks::{self, Check, Status};
use crate::config::RunConfig;

/// Why a run did not pass.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Check(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Check(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Check(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) => Failure::Io(e.to_string()),
            _ => Failure::Check(e.to_string()),
        }
    }
}

#[derive(Debug, Default, Serialize)]
pub struct Outcome {
    pub pass: bool,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
    pub outputs: Vec<String>,
    pub summary: Value,
}

struct Built {
    chain: ConjugationChain,
    cal: Calibration,
    ladder: Ladder,
}

pub struct Lab {
    pub cfg: RunConfig,
    pub rot: RotationNumber,
    spec: AutomorphismSpec,
    word: ResolvedWord,
    built: OnceCell<Result<Built, String>>,
}

impl Lab {
    pub fn new(cfg: RunConfig) -> Result<Self, Failure> {
        let rot = cfg.rotation().map_err(Failure::Usage)?;
        let (word, spec) = section5_map_with(&rot, cfg.degree, cfg.series_radius);
        let word = word.resolve(&rot);
        Ok(Self {
            cfg,
            rot,
            spec,
            word,
            built: OnceCell::new(),
        })
    }

    fn built(&self) -> Result<&Built, Failure> {
        self.built
            .get_or_init(|| {
                let chain = ConjugationChain::from_spec(self.spec.clone(), self.cfg.chain.clone()).map_err(|e| e.to_string())?;
                let chain = if self.cfg.a_perturbation.norm() > 0.0 {
                    chain.with_a_shift(self.cfg.a_perturbation)
                } else {
                    chain
                };
                let cal = calibrate(&chain, &CalibrationOptions::default()).map_err(|e| e.to_string())?;
                let ladder = Ladder::from_calibration(&cal, self.cfg.z_in);
                Ok(Built { chain, cal, ladder })
            })
            .as_ref()
            .map_err(|e| Failure::Check(format!("building the conjugation chain: {e}")))
    }

    /// Chain constants for the manifest, if the chain was built.
    pub fn chain_manifest(&self) -> Option<ChainManifest> {
        match self.built.get() {
            Some(Ok(b)) => Some(ChainManifest::new(&b.chain, Some(&b.cal))),
            _ => None,
        }
    }

    fn out(&self) -> &Path {
        &self.cfg.out
    }

    fn write(&self, outcome: &mut Outcome, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path: PathBuf = self.out().join(name);
        fs::write(&path, bytes).map_err(|e| Failure::Io(format!("writing {}: {e}", path.display())))?;
        outcome.outputs.push(name.into());
        Ok(())
    }
}

fn pretty<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s.into_bytes()
}

fn from_checks(list: Vec<Check>) -> Outcome {
    let mut o = Outcome {
        pass: list.iter().all(|c| c.status == Status::Pass),
        ..Outcome::default()
    };
    for c in &list {
        match c.status {
            Status::Pass => {}
            Status::Fail => o.failures.push(format!("{}: {}", c.name, c.detail)),
            Status::Undecided => o.warnings.push(format!("{} undecided: {}", c.name, c.detail)),
        }
    }
    o.summary = json!({ "checks": list });
    o
}

pub fn diophantine(lab: &Lab) -> Result<Outcome, Failure> {
    let d = &lab.cfg.diophantine;
    let bound = verify_sum_bound(&lab.rot, d.n_max, d.big_n_max);
    let (c, resonant) = match diophantine_fit(&lab.rot, d.r, d.big_n_max) {
        Ok(c) => (c, false),
        Err(Error::Resonant(c)) => (c, true),
        Err(e) => return Err(e.into()),
    };
    let pass = bound.pass && !resonant;
    let report = json!({
        "theta": lab.rot.theta.to_f64(),
        "r": d.r,
        "c": c,
        "resonant": resonant,
        "resonant_n": bound.resonant_n,
        "n_max": d.n_max,
        "big_n_max": d.big_n_max,
        "max_ratio": bound.max_ratio,
        "worst": { "n": bound.worst.0, "m": bound.worst.1, "big_n": bound.worst.2 },
        "pass": pass,
    });
    let mut o = Outcome {
        pass,
        ..Outcome::default()
    };
    if resonant {
        o.failures.push(format!("rotation is effectively resonant: c = {c:e}"));
    } else if !bound.pass {
        o.failures.push(format!("sum bound exceeded: max ratio {}", bound.max_ratio));
    }
    lab.write(&mut o, "diophantine.json", &pretty(&report))?;
    o.summary = report;
    Ok(o)
}

pub fn map_check(lab: &Lab) -> Result<Outcome, Failure> {
    let cfg = &lab.cfg;
    let list = vec![
        checks::map_axis(cfg, &lab.word, &lab.rot),
        checks::map_round_trip(cfg, &lab.word),
        checks::map_coefficients(cfg, &lab.word, &lab.spec),
        checks::map_boundary_growth(cfg, &lab.word, &lab.spec),
        checks::map_jacobian(&lab.word),
    ];
    let mut o = from_checks(list);
    let bytes = pretty(&o.summary);
    lab.write(&mut o, "map_check.json", &bytes)?;
    Ok(o)
}

pub fn orbit(lab: &Lab) -> Result<Outcome, Failure> {
    let b = lab.built()?;
    let cfg = &lab.cfg;
    let opts = IterateOptions {
        precision: cfg.precision,
        ..IterateOptions::default()
    };
    let p0 = parcyl::maps::Point2::new(cfg.point[0], cfg.point[1]);
    let rec = iterate(&b.chain, &b.ladder, p0, cfg.n_max, &opts)?;
    let mut csv = Vec::new();
    rec.write_csv(&mut csv)?;
    let mut o = Outcome {
        pass: true,
        summary: json!({ "status": rec.status, "n_done": rec.n_done, "stored": rec.indices.len() }),
        ..Outcome::default()
    };
    lab.write(&mut o, "orbit.csv", &csv)?;
    Ok(o)
}

pub fn fit_a(lab: &Lab) -> Result<Outcome, Failure> {
    let b = lab.built()?;
    let cfg = &lab.cfg;
    let opts = IterateOptions {
        precision: cfg.precision,
        ..IterateOptions::default()
    };
    let p0 = parcyl::maps::Point2::new(cfg.point[0], cfg.point[1]);
    let rec = iterate(&b.chain, &b.ladder, p0, cfg.n_max, &opts)?;
    let window = ((cfg.n_max / 10).max(10), cfg.n_max);
    let fit = estimate_a(&rec, window.0, window.1)?;
    let gap = (fit.a - b.chain.a).norm();
    let pass = gap <= cfg.tolerances.a_fit;
    let report = json!({
        "a": fit.a,
        "b": fit.b,
        "residual": fit.residual,
        "samples": fit.samples,
        "window": [window.0, window.1],
        "chain_a": b.chain.a,
        "gap": gap,
        "pass": pass,
    });
    let mut o = Outcome {
        pass,
        ..Outcome::default()
    };
    if !pass {
        o.failures.push(format!("orbit A = {} differs from chain A = {} by {gap:e}", fit.a, b.chain.a));
    }
    lab.write(&mut o, "fit_a.json", &pretty(&report))?;
    o.summary = report;
    Ok(o)
}

#[derive(Serialize)]
struct FatouReport<'a> {
    #[serde(flatten)]
    estimate: &'a FatouEstimate,
    functional_equation_residual: f64,
    orbit_a: parcyl::numeric::C64,
    pass: bool,
}

pub fn fatou(lab: &Lab) -> Result<Outcome, Failure> {
    let b = lab.built()?;
    let cfg = &lab.cfg;
    let p = parcyl::maps::Point2::new(cfg.point[0], cfg.point[1]);
    let fit = cross_check_a(&b.chain, &b.ladder, p, cfg.n_max.max(10_000), cfg.precision, cfg.tolerances.a_abort)?;
    let opts = FatouOptions {
        tol: cfg.tolerances.fatou_cauchy,
        precision: cfg.precision,
        ..FatouOptions::default()
    };
    let est = fatou_coordinate(&b.chain, &b.ladder, p, cfg.n_max, &opts)?;
    let r = functional_equation_residual(&b.chain, &b.ladder, p, cfg.n_max, &opts)?;
    let pass = est.converged && r <= cfg.tolerances.functional_equation;
    let mut o = Outcome {
        pass,
        ..Outcome::default()
    };
    if !est.converged {
        o.failures.push(format!("φ̂ not converged: last Cauchy difference {:e}", est.cauchy.last().copied().unwrap_or(f64::NAN)));
    }
    if r > cfg.tolerances.functional_equation {
        o.failures.push(format!("functional-equation residual {r:e}"));
    }
    let report = FatouReport {
        estimate: &est,
        functional_equation_residual: r,
        orbit_a: fit.a,
        pass,
    };
    lab.write(&mut o, "fatou.json", &pretty(&report))?;
    o.summary = json!({ "final": est.final_value, "converged": est.converged, "functional_equation_residual": r });
    Ok(o)
}

pub fn basin(lab: &Lab) -> Result<Outcome, Failure> {
    let b = lab.built()?;
    let cfg = &lab.cfg;
    let raster = basin_scan(b.chain.map(), &b.ladder, &cfg.window, cfg.n_max)?;
    let (_, components) = raster.inside_components();
    let undecided = raster.fraction(BasinClass::Undecided);
    let mut o = Outcome {
        pass: true,
        summary: json!({
            "inside": raster.fraction(BasinClass::Inside),
            "escaped": raster.fraction(BasinClass::Escaped),
            "undecided": undecided,
            "axis": raster.fraction(BasinClass::Axis),
            "inside_components": components,
            "component_left_of_origin": raster.component_left_of_origin(),
        }),
        ..Outcome::default()
    };
    if undecided > cfg.tolerances.undecided {
        o.warnings.push(format!("basin undecided: {:.1}% of pixels at n_max = {}", 100.0 * undecided, cfg.n_max));
    }
    lab.write(&mut o, "basin.pgm", &raster.to_pgm())?;
    Ok(o)
}

pub fn verify(lab: &Lab) -> Result<Outcome, Failure> {
    let cfg = &lab.cfg;
    let mut list = vec![
        checks::rotation_diophantine(cfg, &lab.rot),
        checks::rotation_sum_bound(cfg, &lab.rot),
        checks::rotation_small_divisor(&lab.rot),
        checks::map_axis(cfg, &lab.word, &lab.rot),
        checks::map_coefficients(cfg, &lab.word, &lab.spec),
        checks::map_boundary_growth(cfg, &lab.word, &lab.spec),
        checks::map_jacobian(&lab.word),
    ];
    match lab.built() {
        Ok(b) => {
            list.push(checks::calibration_check(&b.cal));
            list.extend(checks::conjugation_round_trips(&b.chain, &b.cal, cfg.delta));
            list.push(checks::h_residual(cfg, &b.chain));
            list.extend(checks::orbit_checks(cfg, &b.chain, &b.cal, &b.ladder));
            list.extend(checks::fatou_checks(cfg, &b.chain, &b.cal, &b.ladder));
        }
        Err(e) => list.push(Check {
            name: "conjugation.chain".into(),
            status: Status::Fail,
            detail: e.message().into(),
        }),
    }
    let mut o = from_checks(list);
    o.summary["warnings"] = json!(o.warnings);
    o.summary["pass"] = json!(o.pass);
    let bytes = pretty(&o.summary);
    lab.write(&mut o, "verify.json", &bytes)?;
    Ok(o)
}
