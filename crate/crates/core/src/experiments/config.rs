//! Line-oriented `section.key = value` run configuration.

use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{EdgeError, Result};
use crate::gmres::GmresConfig;
use crate::profile::Profile;
use crate::wall::{normalize_wall, DomainWall};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Evolve,
    Scaling,
    Berry,
    DispersionProbe,
    HierarchyCheck,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "evolve" => ExperimentKind::Evolve,
            "scaling" => ExperimentKind::Scaling,
            "berry" => ExperimentKind::Berry,
            "dispersion_probe" => ExperimentKind::DispersionProbe,
            "hierarchy_check" => ExperimentKind::HierarchyCheck,
            other => return Err(EdgeError::Config(format!("unknown experiment kind '{other}'"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Evolve => "evolve",
            ExperimentKind::Scaling => "scaling",
            ExperimentKind::Berry => "berry",
            ExperimentKind::DispersionProbe => "dispersion_probe",
            ExperimentKind::HierarchyCheck => "hierarchy_check",
        }
    }
}

/// Spinor carried by the initial Gaussian state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialData {
    /// The order-`m` ansatz at `t = 0`.
    Ansatz,
    /// Leading profile carried by `[e^(-i theta/2), e^(i theta/2)]`.
    Orthogonal,
    /// Leading profile carried by `[alpha1, alpha2]`.
    Mix { alpha: [Complex64; 2] },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub wall_family: String,
    pub wall_params: Vec<f64>,
    /// Tube half-width of the normalized wall, if normalization is requested.
    pub normalize: Option<f64>,
    pub epsilons: Vec<f64>,
    pub n1: usize,
    pub n2: usize,
    pub l1: f64,
    pub l2: f64,
    /// `dt = dt_factor * eps`.
    pub dt_factor: f64,
    pub t_end: f64,
    pub sample_times: Vec<f64>,
    pub order: usize,
    pub initial: InitialData,
    /// Start point (projected onto the interface); kind-specific default when unset.
    pub y0: Option<[f64; 2]>,
    pub profile: Profile,
    pub out_dir: PathBuf,
    /// Write a snapshot every this many steps (0 disables).
    pub snapshot_every: usize,
    pub heatmaps: bool,
    pub krylov: GmresConfig,
    pub drift_limit: f64,
    pub berry_radii: Vec<f64>,
    pub berry_marks: usize,
    pub probe_window: [f64; 2],
    pub hierarchy_orders: Vec<usize>,
    pub hierarchy_times: Vec<f64>,
    pub hierarchy_fd_step: f64,
    pub hierarchy_evolve: bool,
    /// Every accepted `(key, value)` in application order.
    pub entries: Vec<(String, String)>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::Evolve,
            seed: 0,
            wall_family: "tanh".into(),
            wall_params: Vec::new(),
            normalize: None,
            epsilons: vec![0.1],
            n1: 256,
            n2: 256,
            l1: 6.0,
            l2: 6.0,
            dt_factor: 0.05,
            t_end: 1.0,
            sample_times: Vec::new(),
            order: 0,
            initial: InitialData::Ansatz,
            y0: None,
            profile: Profile::gaussian(),
            out_dir: PathBuf::from("out"),
            snapshot_every: 0,
            heatmaps: false,
            krylov: GmresConfig::default(),
            drift_limit: 1e-8,
            berry_radii: Vec::new(),
            berry_marks: 16,
            probe_window: [0.5, 2.0],
            hierarchy_orders: vec![0, 1],
            hierarchy_times: vec![0.5, 1.0],
            hierarchy_fd_step: 1e-3,
            hierarchy_evolve: false,
            entries: Vec::new(),
        }
    }
}

fn cfg_err(key: &str, msg: impl std::fmt::Display) -> EdgeError {
    EdgeError::Config(format!("{key}: {msg}"))
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| cfg_err(key, format!("'{v}' is not a number")))?;
    if !x.is_finite() {
        return Err(cfg_err(key, "must be finite"));
    }
    Ok(x)
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_f64(key, s))
        .collect()
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse()
        .map_err(|_| cfg_err(key, format!("'{v}' is not a non-negative integer")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(cfg_err(key, format!("'{v}' is not a boolean"))),
    }
}

fn pair(key: &str, v: &str) -> Result<[f64; 2]> {
    let l = parse_list(key, v)?;
    if l.len() != 2 {
        return Err(cfg_err(key, "expected two numbers"));
    }
    Ok([l[0], l[1]])
}

/// Split `section.key = value` (comments with `#`). Blank lines give `None`.
pub fn parse_line(line: &str) -> Result<Option<(String, String)>> {
    let line = line.split('#').next().unwrap_or("").trim();
    if line.is_empty() {
        return Ok(None);
    }
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| EdgeError::Config(format!("expected 'section.key = value', got '{line}'")))?;
    let k = k.trim();
    match k.split_once('.') {
        Some((s, rest)) if !s.is_empty() && !rest.is_empty() && !rest.contains('.') => {}
        _ => return Err(EdgeError::Config(format!("key '{k}' must have the form section.key"))),
    }
    Ok(Some((k.to_string(), v.trim().to_string())))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (no, line) in text.lines().enumerate() {
            if let Some((k, v)) = parse_line(line).map_err(|e| EdgeError::Config(format!("line {}: {e}", no + 1)))? {
                cfg.set(&k, &v)?;
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EdgeError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Apply a `section.key=value` override.
    pub fn apply_override(&mut self, s: &str) -> Result<()> {
        match parse_line(s)? {
            Some((k, v)) => self.set(&k, &v),
            None => Err(EdgeError::Config("empty override".into())),
        }
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "experiment.kind" => self.kind = ExperimentKind::parse(v)?,
            "experiment.seed" => self.seed = v.parse().map_err(|_| cfg_err(key, "not a u64"))?,
            "wall.family" => self.wall_family = v.to_string(),
            "wall.params" => self.wall_params = parse_list(key, v)?,
            "wall.normalize" => {
                let h = parse_f64(key, v)?;
                self.normalize = if h > 0.0 { Some(h) } else { None };
            }
            "grid.n" => {
                self.n1 = parse_usize(key, v)?;
                self.n2 = self.n1;
            }
            "grid.n1" => self.n1 = parse_usize(key, v)?,
            "grid.n2" => self.n2 = parse_usize(key, v)?,
            "grid.half_extent" => {
                self.l1 = parse_f64(key, v)?;
                self.l2 = self.l1;
            }
            "grid.l1" => self.l1 = parse_f64(key, v)?,
            "grid.l2" => self.l2 = parse_f64(key, v)?,
            "time.epsilons" => self.epsilons = parse_list(key, v)?,
            "time.dt_factor" => self.dt_factor = parse_f64(key, v)?,
            "time.t_end" => self.t_end = parse_f64(key, v)?,
            "time.sample_times" => self.sample_times = parse_list(key, v)?,
            "ansatz.order" => self.order = parse_usize(key, v)?,
            "initial.kind" => {
                self.initial = match v {
                    "ansatz" => InitialData::Ansatz,
                    "ansatz-orthogonal" => InitialData::Orthogonal,
                    "mix" => match self.initial {
                        m @ InitialData::Mix { .. } => m,
                        _ => InitialData::Mix {
                            alpha: [Complex64::default(), Complex64::new(1.0, 0.0)],
                        },
                    },
                    other => return Err(cfg_err(key, format!("unknown initial data '{other}'"))),
                }
            }
            "initial.alpha" => {
                let l = parse_list(key, v)?;
                if l.len() != 4 {
                    return Err(cfg_err(key, "expected re1, im1, re2, im2"));
                }
                self.initial = InitialData::Mix {
                    alpha: [Complex64::new(l[0], l[1]), Complex64::new(l[2], l[3])],
                };
            }
            "initial.y0" => self.y0 = Some(pair(key, v)?),
            "initial.profile" => {
                let (width, n) = match self.profile {
                    Profile::Gaussian { width } | Profile::Bump { width } => (width, 0),
                    Profile::Hermite { n, width } => (width, n),
                };
                self.profile = Profile::from_spec(v, width, n)?;
            }
            "initial.width" => {
                let w = parse_f64(key, v)?;
                if w <= 0.0 {
                    return Err(cfg_err(key, "must be positive"));
                }
                self.profile = match self.profile {
                    Profile::Gaussian { .. } => Profile::Gaussian { width: w },
                    Profile::Hermite { n, .. } => Profile::Hermite { n, width: w },
                    Profile::Bump { .. } => Profile::Bump { width: w },
                };
            }
            "initial.hermite_n" => {
                let n = parse_usize(key, v)?;
                if let Profile::Hermite { width, .. } = self.profile {
                    self.profile = Profile::Hermite { n, width };
                } else {
                    return Err(cfg_err(key, "set initial.profile = hermite first"));
                }
            }
            "output.dir" => self.out_dir = PathBuf::from(v),
            "output.snapshot_every" => self.snapshot_every = parse_usize(key, v)?,
            "output.heatmaps" => self.heatmaps = parse_bool(key, v)?,
            "solver.tol" => self.krylov.tol = parse_f64(key, v)?,
            "solver.restart" => self.krylov.restart = parse_usize(key, v)?,
            "solver.max_iterations" => self.krylov.max_iterations = parse_usize(key, v)?,
            "solver.drift_limit" => self.drift_limit = parse_f64(key, v)?,
            "berry.radii" => self.berry_radii = parse_list(key, v)?,
            "berry.marks" => self.berry_marks = parse_usize(key, v)?,
            "probe.window" => self.probe_window = pair(key, v)?,
            "hierarchy.orders" => {
                self.hierarchy_orders = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse_usize(key, s))
                    .collect::<Result<_>>()?
            }
            "hierarchy.times" => self.hierarchy_times = parse_list(key, v)?,
            "hierarchy.fd_step" => self.hierarchy_fd_step = parse_f64(key, v)?,
            "hierarchy.evolve" => self.hierarchy_evolve = parse_bool(key, v)?,
            other => return Err(EdgeError::Config(format!("unknown key '{other}'"))),
        }
        self.entries.push((key.to_string(), v.to_string()));
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() {
            return Err(EdgeError::Config("time.epsilons must not be empty".into()));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return Err(EdgeError::Config(format!("time.epsilons: {e} not in (0, 1]")));
        }
        if !(self.dt_factor > 0.0) {
            return Err(EdgeError::Config("time.dt_factor must be positive".into()));
        }
        if !(self.t_end > 0.0) {
            return Err(EdgeError::Config("time.t_end must be positive".into()));
        }
        if self.sample_times.iter().any(|t| *t < 0.0 || *t > self.t_end + 1e-12) {
            return Err(EdgeError::Config("time.sample_times must lie in [0, t_end]".into()));
        }
        if self.order > 2 || self.hierarchy_orders.iter().any(|o| *o > 2) {
            return Err(EdgeError::Config("corrector orders must lie in {0, 1, 2}".into()));
        }
        if !(self.krylov.tol > 0.0 && self.krylov.tol <= 1e-6) {
            return Err(EdgeError::Config("solver.tol must lie in (0, 1e-6]".into()));
        }
        if !self.n1.is_power_of_two() || !self.n2.is_power_of_two() || self.n1 < 4 || self.n2 < 4 {
            return Err(EdgeError::Config("grid sizes must be powers of two >= 4".into()));
        }
        if !(self.l1 > 0.0 && self.l2 > 0.0) {
            return Err(EdgeError::Config("grid half-extents must be positive".into()));
        }
        self.wall()?;
        match self.kind {
            ExperimentKind::Scaling => {
                let lo = self.epsilons.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = self.epsilons.iter().copied().fold(0.0, f64::max);
                if self.epsilons.len() < 3 || hi < 4.0 * lo {
                    return Err(EdgeError::Config(
                        "scaling needs at least 3 epsilons spanning a factor >= 4".into(),
                    ));
                }
            }
            ExperimentKind::Berry => {
                if self.wall_family != "circle" {
                    return Err(EdgeError::Config("berry runs need wall.family = circle".into()));
                }
            }
            ExperimentKind::DispersionProbe => {
                let [a, b] = self.probe_window;
                if !(a >= 0.0 && b > a && b <= self.t_end + 1e-12) {
                    return Err(EdgeError::Config(
                        "probe.window must satisfy 0 <= start < end <= t_end".into(),
                    ));
                }
            }
            ExperimentKind::HierarchyCheck => {
                if self.hierarchy_orders.is_empty() || self.hierarchy_times.is_empty() {
                    return Err(EdgeError::Config(
                        "hierarchy.orders and hierarchy.times must be set".into(),
                    ));
                }
                if !(self.hierarchy_fd_step > 0.0) {
                    return Err(EdgeError::Config("hierarchy.fd_step must be positive".into()));
                }
            }
            ExperimentKind::Evolve => {}
        }
        Ok(())
    }

    /// The configured wall, normalized when requested.
    pub fn wall(&self) -> Result<DomainWall> {
        let w = DomainWall::from_spec(&self.wall_family, &self.wall_params)?;
        Ok(match self.normalize {
            Some(h) => normalize_wall(&w, h)?,
            None => w,
        })
    }

    /// Canonical text form: one `key = value` line per accepted entry.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let text = "# scaling study\nexperiment.kind = scaling\nwall.family = tanh  # default wall\n\ntime.epsilons = 0.2, 0.1, 0.05\ngrid.n = 128\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Scaling);
        assert_eq!(cfg.epsilons, vec![0.2, 0.1, 0.05]);
        assert_eq!((cfg.n1, cfg.n2), (128, 128));
        cfg.validate().unwrap();
        assert_eq!(cfg.entries.len(), 4);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(ExperimentConfig::parse("nonsense").is_err());
        assert!(ExperimentConfig::parse("a.b.c = 1").is_err());
        assert!(ExperimentConfig::parse("grid.color = blue").is_err());
        assert!(ExperimentConfig::parse("grid.n = -3").is_err());
    }

    #[test]
    fn validation_rules() {
        let mut cfg = ExperimentConfig {
            epsilons: vec![],
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        cfg.epsilons = vec![1.5];
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::parse("experiment.kind = scaling\ntime.epsilons = 0.2, 0.1").unwrap();
        assert!(cfg.validate().is_err());
        cfg.apply_override("time.epsilons=0.2,0.1,0.08").unwrap();
        assert!(cfg.validate().is_err());
        cfg.apply_override("time.epsilons=0.2,0.1,0.05").unwrap();
        cfg.validate().unwrap();
        let cfg = ExperimentConfig::parse("experiment.kind = berry").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn overrides_win_and_echo_round_trips() {
        let mut cfg =
            ExperimentConfig::parse("time.t_end = 1\ninitial.kind = mix\ninitial.alpha = 0, 0, 0.5, -0.5").unwrap();
        cfg.apply_override("time.t_end=2.5").unwrap();
        assert_eq!(cfg.t_end, 2.5);
        assert_eq!(
            cfg.initial,
            InitialData::Mix {
                alpha: [Complex64::default(), Complex64::new(0.5, -0.5)]
            }
        );
        let again = ExperimentConfig::parse(&cfg.echo()).unwrap();
        assert_eq!(again.t_end, 2.5);
        assert_eq!(again.initial, cfg.initial);
    }
}
