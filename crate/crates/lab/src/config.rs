//! Flat `key = value` experiment configuration with dotted section prefixes.
//!
//! ```text
//! # Gaussian weight, one cosine mode
//! grid.kind = truncated1d
//! grid.n = 600
//! grid.half_width = 9
//! weight.kind = gaussian
//! weight.sigma = 1
//! r = 2
//! initial.kind = cosine
//! initial.epsilon = 0.3
//! solver.t_end = 0.05
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown or repeated keys are
//! errors. [`ExperimentConfig::render`] writes every key back out, so the
//! copy stored in a run directory reproduces the run on its own.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ultrafast_core::weights::{check_exponent, default_half_width};
use ultrafast_core::{
    DensityField, Equilibrium, Error, Grid, GridKind, InitialData, Potential, Result, SolverConfig, Weight,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightSpec {
    Uniform,
    Gaussian { sigma: f64 },
    Power { alpha: f64 },
}

impl WeightSpec {
    pub fn potential(&self) -> Result<Potential> {
        match *self {
            WeightSpec::Uniform => Ok(Potential::Uniform),
            WeightSpec::Gaussian { sigma } => Potential::gaussian(sigma),
            WeightSpec::Power { alpha } => Potential::power(alpha),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Fixed(InitialData),
    /// Seeded cosine series, see [`random_field`].
    Random { modes: usize, amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSpec {
    pub t_end: Option<f64>,
    pub cfl_safety: f64,
    pub record_every: Option<f64>,
    pub dt_max: Option<f64>,
    pub positivity_floor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoincareSpec {
    pub tol: f64,
    pub ladder: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizeSpec {
    pub ladder: Vec<f64>,
    pub radius: f64,
    pub t_end: Option<f64>,
    /// Horizon of the probe run used when `t_end` is not given.
    pub probe_t_end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySpec {
    pub samples: usize,
    pub modes: usize,
    pub amplitude: f64,
    /// Exponents swept by `verify`; empty means just `r`.
    pub r_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub grid_kind: GridKind,
    pub grid_n: usize,
    pub half_width: Option<f64>,
    pub weight: WeightSpec,
    pub r: f64,
    pub initial: InitialSpec,
    pub solver: SolverSpec,
    pub poincare: PoincareSpec,
    pub localize: LocalizeSpec,
    pub verify: VerifySpec,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            grid_kind: GridKind::Truncated1D,
            grid_n: 600,
            half_width: None,
            weight: WeightSpec::Gaussian { sigma: 1.0 },
            r: 2.0,
            initial: InitialSpec::Fixed(InitialData::Cosine { epsilon: 0.3, mode: 1 }),
            solver: SolverSpec {
                t_end: None,
                cfl_safety: 0.4,
                record_every: None,
                dt_max: None,
                positivity_floor: 0.0,
            },
            poincare: PoincareSpec { tol: ultrafast_core::poincare::DEFAULT_TOL, ladder: vec![64, 128, 256] },
            localize: LocalizeSpec { ladder: vec![4.0, 6.0, 8.0, 10.0], radius: 3.0, t_end: None, probe_t_end: 1.0 },
            verify: VerifySpec { samples: 500, modes: 4, amplitude: 0.4, r_values: Vec::new() },
            seed: 0,
            output_dir: None,
        }
    }
}

fn bad(key: &str, value: &str, what: &str) -> Error {
    Error::Config(format!("{key} = {value}: {what}"))
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| bad(key, v, "expected a finite number"))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse().map_err(|_| bad(key, v, "expected a non-negative integer"))
}

fn parse_list<T>(key: &str, v: &str, item: impl Fn(&str, &str) -> Result<T>) -> Result<Vec<T>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| item(key, s.trim())).collect()
}

fn parse_grid_kind(v: &str) -> Result<GridKind> {
    match v {
        "periodic" | "periodic1d" => Ok(GridKind::Periodic1D),
        "truncated" | "truncated1d" => Ok(GridKind::Truncated1D),
        "tensor" | "tensor2d" => Ok(GridKind::Tensor2D),
        _ => Err(bad("grid.kind", v, "expected periodic1d, truncated1d or tensor2d")),
    }
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected key = value, got {line:?}", lineno + 1)));
            };
            let (k, v) = (k.trim(), v.trim());
            if kv.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Config(format!("line {}: key {k} given twice", lineno + 1)));
            }
        }
        Self::from_map(kv)
    }

    fn from_map(mut kv: BTreeMap<String, String>) -> Result<Self> {
        let mut c = Self::default();
        let mut take = |k: &str| kv.remove(k);

        if let Some(v) = take("grid.kind") {
            c.grid_kind = parse_grid_kind(&v)?;
        }
        if let Some(v) = take("grid.n") {
            c.grid_n = parse_usize("grid.n", &v)?;
        }
        if let Some(v) = take("grid.half_width") {
            c.half_width = if v == "auto" { None } else { Some(parse_f64("grid.half_width", &v)?) };
        }

        let weight_kind = take("weight.kind");
        let sigma = take("weight.sigma").map(|v| parse_f64("weight.sigma", &v)).transpose()?;
        let alpha = take("weight.alpha").map(|v| parse_f64("weight.alpha", &v)).transpose()?;
        c.weight = match weight_kind.as_deref().unwrap_or("gaussian") {
            "uniform" => WeightSpec::Uniform,
            "gaussian" => WeightSpec::Gaussian { sigma: sigma.unwrap_or(1.0) },
            "power" => WeightSpec::Power { alpha: alpha.unwrap_or(1.5) },
            other => return Err(bad("weight.kind", other, "expected uniform, gaussian or power")),
        };
        if let Some(v) = take("r") {
            c.r = parse_f64("r", &v)?;
        }

        let ik = take("initial.kind");
        let num = |k: &str, v: Option<String>, d: f64| v.map(|v| parse_f64(k, &v)).transpose().map(|x| x.unwrap_or(d));
        let epsilon = num("initial.epsilon", take("initial.epsilon"), 0.3)?;
        let mode = take("initial.mode").map(|v| parse_usize("initial.mode", &v)).transpose()?.unwrap_or(1);
        let left = num("initial.u_left", take("initial.u_left"), 1.5)?;
        let right = num("initial.u_right", take("initial.u_right"), 0.5)?;
        let shift = num("initial.shift", take("initial.shift"), 0.5)?;
        let c_min = num("initial.c_min", take("initial.c_min"), 0.5)?;
        let c_max = num("initial.c_max", take("initial.c_max"), 2.0)?;
        let modes = take("initial.modes").map(|v| parse_usize("initial.modes", &v)).transpose()?.unwrap_or(4);
        let amplitude = num("initial.amplitude", take("initial.amplitude"), 0.4)?;
        c.initial = match ik.as_deref().unwrap_or("cosine") {
            "equilibrium" => InitialSpec::Fixed(InitialData::Equilibrium),
            "cosine" => InitialSpec::Fixed(InitialData::Cosine { epsilon, mode }),
            "step" => InitialSpec::Fixed(InitialData::Step { left, right }),
            "tilt" => InitialSpec::Fixed(InitialData::Tilt { shift, c_min, c_max }),
            "random" => InitialSpec::Random { modes, amplitude },
            other => return Err(bad("initial.kind", other, "expected equilibrium, cosine, step, tilt or random")),
        };

        let opt = |k: &str, v: Option<String>| -> Result<Option<f64>> {
            match v.as_deref() {
                None | Some("auto") => Ok(None),
                Some(s) => parse_f64(k, s).map(Some),
            }
        };
        let s = &mut c.solver;
        s.t_end = opt("solver.t_end", take("solver.t_end"))?;
        s.record_every = opt("solver.record_every", take("solver.record_every"))?;
        s.dt_max = opt("solver.dt_max", take("solver.dt_max"))?;
        s.cfl_safety = num("solver.cfl_safety", take("solver.cfl_safety"), s.cfl_safety)?;
        s.positivity_floor = num("solver.positivity_floor", take("solver.positivity_floor"), s.positivity_floor)?;

        c.poincare.tol = num("poincare.tol", take("poincare.tol"), c.poincare.tol)?;
        if let Some(v) = take("poincare.ladder") {
            c.poincare.ladder = parse_list("poincare.ladder", &v, parse_usize)?;
        }

        if let Some(v) = take("localize.ladder") {
            c.localize.ladder = parse_list("localize.ladder", &v, parse_f64)?;
        }
        c.localize.radius = num("localize.radius", take("localize.radius"), c.localize.radius)?;
        c.localize.t_end = opt("localize.t_end", take("localize.t_end"))?;
        c.localize.probe_t_end = num("localize.probe_t_end", take("localize.probe_t_end"), c.localize.probe_t_end)?;

        if let Some(v) = take("verify.samples") {
            c.verify.samples = parse_usize("verify.samples", &v)?;
        }
        if let Some(v) = take("verify.modes") {
            c.verify.modes = parse_usize("verify.modes", &v)?;
        }
        c.verify.amplitude = num("verify.amplitude", take("verify.amplitude"), c.verify.amplitude)?;
        if let Some(v) = take("verify.r_values") {
            c.verify.r_values = parse_list("verify.r_values", &v, parse_f64)?;
        }

        if let Some(v) = take("seed") {
            c.seed = v.parse().map_err(|_| bad("seed", &v, "expected an unsigned integer"))?;
        }
        if let Some(v) = take("output.dir") {
            c.output_dir = Some(PathBuf::from(v));
        }

        if let Some(k) = kv.keys().next() {
            return Err(Error::Config(format!("unknown key {k}")));
        }
        c.validate()?;
        Ok(c)
    }

    /// Checks everything that can be checked without building a grid.
    pub fn validate(&self) -> Result<()> {
        check_exponent(self.r)?;
        self.weight.potential()?;
        if self.grid_n < Grid::MIN_CELLS {
            return Err(Error::Config(format!("grid.n must be at least {}, got {}", Grid::MIN_CELLS, self.grid_n)));
        }
        match (self.grid_kind, self.weight) {
            (GridKind::Periodic1D, WeightSpec::Uniform) => {}
            (GridKind::Periodic1D, _) | (_, WeightSpec::Uniform) => {
                return Err(Error::Config(
                    "the uniform weight goes with grid.kind = periodic1d and only there".into(),
                ))
            }
            _ => {}
        }
        if let Some(l) = self.half_width {
            if !(l > 0.0) {
                return Err(Error::Config(format!("grid.half_width must be positive, got {l}")));
            }
        }
        if let InitialSpec::Random { modes, amplitude } = self.initial {
            check_random(modes, amplitude, "initial")?;
        }
        check_random(self.verify.modes, self.verify.amplitude, "verify")?;
        if self.verify.samples == 0 {
            return Err(Error::Config("verify.samples must be at least 1".into()));
        }
        for &r in &self.verify.r_values {
            check_exponent(r)?;
        }
        if !(self.poincare.tol > 0.0) {
            return Err(Error::Config(format!("poincare.tol must be positive, got {}", self.poincare.tol)));
        }
        Ok(())
    }

    /// Every key with its effective value; `parse(render())` gives back `self`.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        let auto = |x: Option<f64>| x.map_or("auto".to_string(), |v| v.to_string());
        put("grid.kind", self.grid_kind.name().into());
        put("grid.n", self.grid_n.to_string());
        put("grid.half_width", auto(self.half_width));
        match self.weight {
            WeightSpec::Uniform => put("weight.kind", "uniform".into()),
            WeightSpec::Gaussian { sigma } => {
                put("weight.kind", "gaussian".into());
                put("weight.sigma", sigma.to_string());
            }
            WeightSpec::Power { alpha } => {
                put("weight.kind", "power".into());
                put("weight.alpha", alpha.to_string());
            }
        }
        put("r", self.r.to_string());
        match &self.initial {
            InitialSpec::Fixed(InitialData::Equilibrium) => put("initial.kind", "equilibrium".into()),
            InitialSpec::Fixed(InitialData::Cosine { epsilon, mode }) => {
                put("initial.kind", "cosine".into());
                put("initial.epsilon", epsilon.to_string());
                put("initial.mode", mode.to_string());
            }
            InitialSpec::Fixed(InitialData::Step { left, right }) => {
                put("initial.kind", "step".into());
                put("initial.u_left", left.to_string());
                put("initial.u_right", right.to_string());
            }
            InitialSpec::Fixed(InitialData::Tilt { shift, c_min, c_max }) => {
                put("initial.kind", "tilt".into());
                put("initial.shift", shift.to_string());
                put("initial.c_min", c_min.to_string());
                put("initial.c_max", c_max.to_string());
            }
            InitialSpec::Fixed(InitialData::CosineSeries { .. }) => unreachable!("not configurable"),
            InitialSpec::Random { modes, amplitude } => {
                put("initial.kind", "random".into());
                put("initial.modes", modes.to_string());
                put("initial.amplitude", amplitude.to_string());
            }
        }
        put("solver.t_end", auto(self.solver.t_end));
        put("solver.cfl_safety", self.solver.cfl_safety.to_string());
        put("solver.record_every", auto(self.solver.record_every));
        put("solver.dt_max", auto(self.solver.dt_max));
        put("solver.positivity_floor", self.solver.positivity_floor.to_string());
        put("poincare.tol", self.poincare.tol.to_string());
        put("poincare.ladder", join(&self.poincare.ladder));
        put("localize.ladder", join(&self.localize.ladder));
        put("localize.radius", self.localize.radius.to_string());
        put("localize.t_end", auto(self.localize.t_end));
        put("localize.probe_t_end", self.localize.probe_t_end.to_string());
        put("verify.samples", self.verify.samples.to_string());
        put("verify.modes", self.verify.modes.to_string());
        put("verify.amplitude", self.verify.amplitude.to_string());
        put("verify.r_values", join(&self.verify.r_values));
        put("seed", self.seed.to_string());
        if let Some(dir) = &self.output_dir {
            put("output.dir", dir.display().to_string());
        }
        s
    }

    pub fn potential(&self) -> Result<Potential> {
        self.weight.potential()
    }

    /// Grid with `n` cells per axis; the half-width defaults to the truncation
    /// radius of the weight at exponent `r`.
    pub fn grid_with(&self, n: usize) -> Result<Grid> {
        let half_width = match (self.grid_kind, self.half_width) {
            (GridKind::Periodic1D, _) => None,
            (_, Some(l)) => Some(l),
            (kind, None) => Some(default_half_width(&self.potential()?, self.r, kind.dim())),
        };
        Grid::new(self.grid_kind, n, half_width)
    }

    pub fn grid(&self) -> Result<Grid> {
        self.grid_with(self.grid_n)
    }

    pub fn weight_on(&self, grid: &Grid) -> Result<Weight> {
        Weight::new(grid, self.potential()?)
    }

    /// Initial field; random series are drawn from `seed`.
    pub fn initial_field(&self, weight: &Weight, eq: &Equilibrium) -> Result<DensityField> {
        match &self.initial {
            InitialSpec::Fixed(d) => d.build(weight, eq),
            &InitialSpec::Random { modes, amplitude } => random_field(weight, eq, modes, amplitude, self.seed),
        }
    }

    pub fn solver_config(&self, t_end: f64) -> SolverConfig {
        let mut cfg = SolverConfig::new(t_end);
        cfg.cfl_safety = self.solver.cfl_safety;
        if let Some(every) = self.solver.record_every {
            cfg.record_every = every;
        }
        cfg.dt_max = self.solver.dt_max;
        cfg.positivity_floor = self.solver.positivity_floor;
        cfg
    }
}

fn check_random(modes: usize, amplitude: f64, section: &str) -> Result<()> {
    if modes == 0 {
        return Err(Error::Config(format!("{section}.modes must be at least 1")));
    }
    if !(amplitude > 0.0 && amplitude < 1.0) {
        return Err(Error::Config(format!("{section}.amplitude must lie in (0, 1), got {amplitude}")));
    }
    Ok(())
}

/// Attempts before a random series is declared impossible to draw.
const MAX_DRAWS: usize = 1000;

/// Cosine series `u = 1 + Σ_k a_k φ_k + b_k χ_k` with `a_k, b_k` uniform in
/// `[-amplitude/k, amplitude/k]`, redrawn until `u > 0` on every cell.
pub fn random_field(weight: &Weight, eq: &Equilibrium, modes: usize, amplitude: f64, seed: u64) -> Result<DensityField> {
    check_random(modes, amplitude, "random")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> Vec<f64> {
        (1..=modes)
            .map(|k| {
                let a = amplitude / k as f64;
                rng.random_range(-a..=a)
            })
            .collect()
    };
    for _ in 0..MAX_DRAWS {
        let (cos, sin) = (draw(), draw());
        let u_min = 1.0 - cos.iter().chain(&sin).map(|x| x.abs()).sum::<f64>();
        match (InitialData::CosineSeries { cos, sin }).build(weight, eq) {
            Ok(f) => return Ok(f),
            // only a non-positive draw is worth another try
            Err(Error::Config(_)) if u_min <= 0.0 => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Config(format!(
        "no positive cosine series in {MAX_DRAWS} draws (amplitude {amplitude}, {modes} modes)"
    )))
}
