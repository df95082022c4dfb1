//! Experiment configuration in a flat `key = value` text format.
//!
//! Lists are comma separated, `#` starts a comment. Every key is optional;
//! missing keys take the defaults of the selected test.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{io_err, Result, ToolError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TestName {
    NoiseSweep,
    KdSweep,
    RuntimeSweep,
    CondSweep,
    InitStudy,
    AlphaSensitivity,
    NnCompare,
    DmfSynth,
    DcpdSynth,
    Completion,
    Denoise,
}

impl TestName {
    pub const ALL: &'static [TestName] = &[
        Self::NoiseSweep,
        Self::KdSweep,
        Self::RuntimeSweep,
        Self::CondSweep,
        Self::InitStudy,
        Self::AlphaSensitivity,
        Self::NnCompare,
        Self::DmfSynth,
        Self::DcpdSynth,
        Self::Completion,
        Self::Denoise,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::NoiseSweep => "noise_sweep",
            Self::KdSweep => "kd_sweep",
            Self::RuntimeSweep => "runtime_sweep",
            Self::CondSweep => "cond_sweep",
            Self::InitStudy => "init_study",
            Self::AlphaSensitivity => "alpha_sensitivity",
            Self::NnCompare => "nn_compare",
            Self::DmfSynth => "dmf_synth",
            Self::DcpdSynth => "dcpd_synth",
            Self::Completion => "completion",
            Self::Denoise => "denoise",
        }
    }
}

impl fmt::Display for TestName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestName {
    type Err = ToolError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|t| t.name() == s)
            .ok_or_else(|| ToolError::UnknownTest(s.to_string()))
    }
}

/// Regularization ratio of the convex solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum AlphaSpec {
    /// Tuned on three extra instances per grid point.
    Auto,
    Fixed(f64),
    /// Per solver, solvers not listed are tuned.
    PerSolver(Vec<(String, f64)>),
}

impl AlphaSpec {
    pub fn fixed_for(&self, solver: &str) -> Option<f64> {
        match self {
            Self::Auto => None,
            Self::Fixed(a) => Some(*a),
            Self::PerSolver(list) => list.iter().find(|(s, _)| s == solver).map(|(_, a)| *a),
        }
    }
}

impl fmt::Display for AlphaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Fixed(a) => write!(f, "{a:e}"),
            Self::PerSolver(list) => {
                let parts: Vec<String> = list.iter().map(|(s, a)| format!("{s}:{a:e}")).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

impl FromStr for AlphaSpec {
    type Err = ToolError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "auto" || s == "auto-grid" {
            return Ok(Self::Auto);
        }
        if !s.contains(':') {
            return parse_ratio(s).map(Self::Fixed);
        }
        s.split(',')
            .map(|part| {
                let (name, v) = part
                    .split_once(':')
                    .ok_or_else(|| ToolError::Config(format!("alpha entry '{part}' is not solver:value")))?;
                Ok((name.trim().to_string(), parse_ratio(v)?))
            })
            .collect::<Result<_>>()
            .map(Self::PerSolver)
    }
}

fn parse_ratio(s: &str) -> Result<f64> {
    let a: f64 = s.trim().parse().map_err(|e| ToolError::Config(format!("alpha '{s}': {e}")))?;
    if !(0.0..=1.0).contains(&a) {
        return Err(ToolError::Config(format!("alpha {a} outside [0, 1]")));
    }
    Ok(a)
}

/// All knobs of an experiment. Tensor tests read `m` as `m1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub test: TestName,
    pub n: usize,
    pub m: usize,
    pub m2: usize,
    pub d: usize,
    /// Atoms of the second-mode dictionary (denoise).
    pub d2: usize,
    pub k: usize,
    pub k2: usize,
    pub r: usize,
    pub snr_db: Vec<f64>,
    pub cond: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub m_grid: Vec<usize>,
    pub k_grid: Vec<usize>,
    pub d_grid: Vec<usize>,
    pub n_instances: usize,
    pub n_inits: usize,
    /// Solver or method names; empty means the test's full list.
    pub solvers: Vec<String>,
    pub alpha: AlphaSpec,
    pub alpha_grid: Vec<f64>,
    /// Relative deviations from the best ratio (alpha_sensitivity).
    pub deviations: Vec<f64>,
    pub tau: usize,
    pub max_iter: usize,
    pub rel_tol: f64,
    pub l_max: usize,
    pub ipalm_iters: usize,
    pub mu: f64,
    pub missing_fraction: f64,
    /// Synthetic generator of the completion test: `smooth` or `sparse`.
    pub generator: String,
    pub data: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

const AUTO_GRID: [f64; 5] = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1];

impl ExperimentConfig {
    /// Defaults of the given test.
    pub fn defaults(test: TestName) -> Self {
        let mut c = Self {
            test,
            n: 50,
            m: 50,
            m2: 0,
            d: 100,
            d2: 0,
            k: 5,
            k2: 0,
            r: 6,
            snr_db: vec![20.0],
            cond: vec![200.0],
            n_grid: Vec::new(),
            m_grid: Vec::new(),
            k_grid: Vec::new(),
            d_grid: Vec::new(),
            n_instances: 50,
            n_inits: 1,
            solvers: Vec::new(),
            alpha: AlphaSpec::Auto,
            alpha_grid: AUTO_GRID.to_vec(),
            deviations: Vec::new(),
            tau: 20,
            max_iter: 1000,
            rel_tol: 1e-6,
            l_max: 100,
            ipalm_iters: 1000,
            mu: 0.5,
            missing_fraction: 0.125,
            generator: "smooth".into(),
            data: None,
            mask: None,
            seed: 0,
            out: None,
        };
        match test {
            TestName::NoiseSweep | TestName::NnCompare => {
                c.snr_db = vec![1000.0, 100.0, 50.0, 40.0, 30.0, 20.0, 15.0, 10.0, 5.0, 2.0, 0.0];
            }
            TestName::KdSweep => {
                c.k_grid = vec![1, 2, 5, 10, 20];
                c.d_grid = vec![20, 50, 100, 200, 400];
            }
            TestName::RuntimeSweep => {
                c.n_instances = 10;
                c.n_grid = vec![10, 50, 1000];
                c.m_grid = vec![10, 50, 1000];
                c.k_grid = vec![5, 10, 30];
                c.d_grid = vec![50, 100, 1000];
            }
            TestName::CondSweep => {
                c.cond = vec![1.0, 10.0, 50.0, 100.0, 5e2, 1e3, 5e3, 1e4, 5e4, 1e5];
            }
            TestName::InitStudy => {
                c.n_instances = 10;
                c.n_inits = 10;
            }
            TestName::AlphaSensitivity => {
                c.n_instances = 200;
                c.alpha_grid = vec![0.0, 1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1];
                c.deviations = vec![-0.9, -0.5, -0.2, 0.0, 1.0, 4.0, 9.0];
            }
            TestName::DmfSynth => {
                c.n_instances = 100;
                c.d = 60;
                c.k = 8;
                c.snr_db = vec![100.0];
                c.alpha = AlphaSpec::Fixed(1e-2);
                c.mu = 0.5;
            }
            TestName::DcpdSynth => {
                c.n_instances = 100;
                c.n = 20;
                c.m = 21;
                c.m2 = 22;
                c.d = 30;
                c.k = 8;
                c.snr_db = vec![30.0];
                c.alpha = AlphaSpec::Fixed(1e-4);
                c.mu = 1.0;
            }
            TestName::Completion => {
                c.n_instances = 1;
                c.n_inits = 20;
                c.n = 20;
                c.m = 20;
                c.m2 = 162;
                c.d = 400;
                c.r = 4;
                c.k_grid = vec![10, 30, 50, 70, 100, 120, 150, 200, 250];
                c.snr_db = vec![f64::INFINITY];
                c.alpha = AlphaSpec::Fixed(5e-3);
            }
            TestName::Denoise => {
                c.n_instances = 1;
                c.n = 201;
                c.m = 61;
                c.m2 = 5;
                c.d = 180;
                c.d2 = 81;
                c.k = 6;
                c.k2 = 6;
                c.r = 3;
                c.snr_db = vec![-8.7];
                c.alpha = AlphaSpec::Fixed(1e-3);
                c.tau = 5;
            }
        }
        c
    }

    /// Parses config text; `test_name` must appear unless `default_test` is
    /// given.
    pub fn parse(text: &str, origin: &Path, default_test: Option<TestName>) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ToolError::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                msg: format!("expected key = value, got '{line}'"),
            })?;
            pairs.push((i + 1, key.trim().to_string(), value.trim().to_string()));
        }
        let test = match pairs.iter().find(|(_, k, _)| k == "test_name") {
            Some((_, _, v)) => v.parse()?,
            None => default_test.ok_or_else(|| ToolError::Config("test_name is missing".into()))?,
        };
        let mut c = Self::defaults(test);
        for (line, key, value) in pairs {
            c.set(&key, &value).map_err(|e| ToolError::Parse {
                path: origin.to_path_buf(),
                line,
                msg: e.to_string(),
            })?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path, default_test: Option<TestName>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text, path, default_test)
    }

    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "test_name" => {
                let t: TestName = value.parse()?;
                if t != self.test {
                    return Err(ToolError::Config(format!("test_name {t} conflicts with {}", self.test)));
                }
            }
            "n" => self.n = num(key, value)?,
            "m" | "m1" => self.m = num(key, value)?,
            "m2" => self.m2 = num(key, value)?,
            "d" => self.d = num(key, value)?,
            "d2" => self.d2 = num(key, value)?,
            "k" => self.k = num(key, value)?,
            "k2" => self.k2 = num(key, value)?,
            "r" => self.r = num(key, value)?,
            "snr_db" => self.snr_db = list(key, value)?,
            "cond" | "cond_b" => self.cond = list(key, value)?,
            "n_grid" => self.n_grid = list(key, value)?,
            "m_grid" => self.m_grid = list(key, value)?,
            "k_grid" => self.k_grid = list(key, value)?,
            "d_grid" => self.d_grid = list(key, value)?,
            "n_instances" => self.n_instances = num(key, value)?,
            "n_inits" => self.n_inits = num(key, value)?,
            "solvers" => {
                self.solvers = value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
            }
            "alpha" => self.alpha = value.parse()?,
            "alpha_grid" => self.alpha_grid = list(key, value)?,
            "deviations" => self.deviations = list(key, value)?,
            "tau" => self.tau = num(key, value)?,
            "max_iter" => self.max_iter = num(key, value)?,
            "rel_tol" => self.rel_tol = num(key, value)?,
            "l_max" => self.l_max = num(key, value)?,
            "ipalm_iters" => self.ipalm_iters = num(key, value)?,
            "mu" => self.mu = num(key, value)?,
            "missing_fraction" => self.missing_fraction = num(key, value)?,
            "generator" => self.generator = value.to_string(),
            "data" => self.data = path_value(value),
            "mask" => self.mask = path_value(value),
            "seed" | "seeds" => self.seed = num(key, value)?,
            "out" => self.out = path_value(value),
            _ => return Err(ToolError::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(ToolError::Config(msg.to_string()));
        if self.n_instances == 0 {
            return fail("n_instances must be at least 1");
        }
        if self.n_inits == 0 {
            return fail("n_inits must be at least 1");
        }
        if self.snr_db.is_empty() || self.cond.is_empty() || self.alpha_grid.is_empty() {
            return fail("grids must be nonempty");
        }
        if self.cond.iter().any(|c| c.is_nan() || *c < 1.0) {
            return fail("cond values must be at least 1");
        }
        if self.alpha_grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return fail("alpha_grid values must lie in [0, 1]");
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return fail("mu must lie in (0, 1]");
        }
        if !(0.0..1.0).contains(&self.missing_fraction) {
            return fail("missing_fraction must lie in [0, 1)");
        }
        if self.r == 0 || self.k == 0 {
            return fail("r and k must be positive");
        }
        let needs = |g: &Vec<usize>, name: &str| {
            if g.is_empty() {
                Err(ToolError::Config(format!("{name} must be nonempty for {}", self.test)))
            } else {
                Ok(())
            }
        };
        match self.test {
            TestName::KdSweep => {
                needs(&self.k_grid, "k_grid")?;
                needs(&self.d_grid, "d_grid")?;
            }
            TestName::RuntimeSweep => {
                for (g, name) in [(&self.n_grid, "n_grid"), (&self.m_grid, "m_grid"), (&self.k_grid, "k_grid"), (&self.d_grid, "d_grid")] {
                    needs(g, name)?;
                }
            }
            TestName::Completion => needs(&self.k_grid, "k_grid")?,
            TestName::AlphaSensitivity if self.deviations.is_empty() => return fail("deviations must be nonempty"),
            _ => {}
        }
        if self.test == TestName::Completion && !matches!(self.generator.as_str(), "smooth" | "sparse") {
            return fail("generator must be 'smooth' or 'sparse'");
        }
        Ok(())
    }

    /// Fully resolved configuration in the input format.
    pub fn to_text(&self) -> String {
        fn join<T: fmt::Display>(v: &[T]) -> String {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        }
        let opt = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("test_name", self.test.to_string());
        kv("n", self.n.to_string());
        kv("m", self.m.to_string());
        kv("m2", self.m2.to_string());
        kv("d", self.d.to_string());
        kv("d2", self.d2.to_string());
        kv("k", self.k.to_string());
        kv("k2", self.k2.to_string());
        kv("r", self.r.to_string());
        kv("snr_db", join(&self.snr_db));
        kv("cond", join(&self.cond));
        kv("n_grid", join(&self.n_grid));
        kv("m_grid", join(&self.m_grid));
        kv("k_grid", join(&self.k_grid));
        kv("d_grid", join(&self.d_grid));
        kv("n_instances", self.n_instances.to_string());
        kv("n_inits", self.n_inits.to_string());
        kv("solvers", self.solvers.join(","));
        kv("alpha", self.alpha.to_string());
        kv("alpha_grid", join(&self.alpha_grid));
        kv("deviations", join(&self.deviations));
        kv("tau", self.tau.to_string());
        kv("max_iter", self.max_iter.to_string());
        kv("rel_tol", self.rel_tol.to_string());
        kv("l_max", self.l_max.to_string());
        kv("ipalm_iters", self.ipalm_iters.to_string());
        kv("mu", self.mu.to_string());
        kv("missing_fraction", self.missing_fraction.to_string());
        kv("generator", self.generator.clone());
        kv("data", opt(&self.data));
        kv("mask", opt(&self.mask));
        kv("seed", self.seed.to_string());
        kv("out", opt(&self.out));
        s
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e| ToolError::Config(format!("{key} = '{value}': {e}")))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|v| num(key, v)).collect()
}

fn path_value(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_tests() {
        let c = ExperimentConfig::defaults(TestName::DcpdSynth);
        assert_eq!((c.n, c.m, c.m2, c.d, c.r, c.k), (20, 21, 22, 30, 6, 8));
        assert_eq!(c.snr_db, vec![30.0]);
        let c = ExperimentConfig::defaults(TestName::NoiseSweep);
        assert_eq!((c.n, c.m, c.d, c.k, c.r), (50, 50, 100, 5, 6));
        assert_eq!(c.snr_db.len(), 11);
        for t in TestName::ALL {
            ExperimentConfig::defaults(*t).validate().unwrap();
            assert_eq!(t.name().parse::<TestName>().unwrap(), *t);
        }
    }

    #[test]
    fn parse_and_round_trip() {
        let text = "test_name = noise_sweep\n# comment\nn_instances = 2\nsnr_db = 60, 0\nsolvers = homp,iht\nalpha = block_fista:1e-3\n";
        let c = ExperimentConfig::parse(text, Path::new("cfg"), None).unwrap();
        assert_eq!(c.n_instances, 2);
        assert_eq!(c.snr_db, vec![60.0, 0.0]);
        assert_eq!(c.solvers, vec!["homp", "iht"]);
        assert_eq!(c.alpha.fixed_for("block_fista"), Some(1e-3));
        assert_eq!(c.alpha.fixed_for("mixed_fista"), None);
        let again = ExperimentConfig::parse(&c.to_text(), Path::new("cfg"), None).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn errors() {
        let p = Path::new("cfg");
        assert!(matches!(ExperimentConfig::parse("test_name = nope", p, None), Err(ToolError::UnknownTest(_))));
        assert!(ExperimentConfig::parse("n = 5", p, None).is_err());
        assert!(ExperimentConfig::parse("test_name = kd_sweep\nwhat = 1", p, None).is_err());
        assert!(ExperimentConfig::parse("test_name = kd_sweep\nn_instances = 0", p, None).is_err());
        assert!(ExperimentConfig::parse("test_name = kd_sweep\nk_grid =", p, None).is_err());
        assert!(ExperimentConfig::parse("test_name = kd_sweep\nalpha = 2", p, None).is_err());
        assert!(matches!(ExperimentConfig::parse("test_name = kd_sweep\nn 5", p, None), Err(ToolError::Parse { line: 2, .. })));
    }
}
