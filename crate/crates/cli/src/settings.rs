//! Key-value settings for `kvdg run`: defaults, then a config file, then
//! flags, each layer overriding the previous one.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};
use kvdg::forms::Symmetry;
use kvdg::linalg::Preconditioning;
use kvdg::system::SolverConfig;

/// Every recognised key with its default, in manifest order.
pub const KEYS: &[(&str, &str)] = &[
    ("example", "1"),
    ("nu", "1"),
    ("kappa", "0.01"),
    ("sigma", "10"),
    ("symmetry", "sipg"),
    ("n", "8"),
    ("velocity_degree", "1"),
    ("pressure_degree", "0"),
    ("dt", "h2"),
    ("t_final", "1"),
    ("stokes", "false"),
    ("gmres_tol", "1e-10"),
    ("gmres_restart", "200"),
    ("gmres_max_iters", "5000"),
    ("preconditioner", "lagged-lu"),
    ("steady_tol", "none"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Default,
    File,
    Flag,
}

impl Origin {
    pub fn label(self) -> &'static str {
        match self {
            Origin::Default => "default",
            Origin::File => "file",
            Origin::Flag => "flag",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Settings {
    values: BTreeMap<&'static str, (String, Origin)>,
}

fn canonical(key: &str) -> Option<&'static str> {
    let key = key.trim().replace('-', "_");
    KEYS.iter().map(|(k, _)| *k).find(|k| *k == key)
}

impl Settings {
    pub fn defaults() -> Self {
        Self {
            values: KEYS
                .iter()
                .map(|(k, v)| (*k, (v.to_string(), Origin::Default)))
                .collect(),
        }
    }

    pub fn set(&mut self, key: &str, value: &str, origin: Origin) -> Result<()> {
        let k = canonical(key).ok_or_else(|| anyhow!("unknown setting `{key}`"))?;
        self.values.insert(k, (value.trim().to_string(), origin));
        Ok(())
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_file(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", i + 1))?;
            self.set(k, v, Origin::File)
                .with_context(|| format!("line {}", i + 1))?;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        &self.values[key].0
    }

    #[cfg(test)]
    pub fn origin(&self, key: &str) -> Origin {
        self.values[key].1
    }

    /// `(key, value, origin)` in the order of [`KEYS`].
    pub fn entries(&self) -> impl Iterator<Item = (&'static str, &str, Origin)> + '_ {
        KEYS.iter().map(|(k, _)| {
            let (v, o) = &self.values[k];
            (*k, v.as_str(), *o)
        })
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .parse()
            .map_err(|e| anyhow!("invalid value `{}` for {key}: {e}", self.get(key)))
    }

    pub fn example(&self) -> Result<u32> {
        match self.parse::<u32>("example")? {
            e @ (1 | 2) => Ok(e),
            e => bail!("example must be 1 or 2, got {e}"),
        }
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let mut c = SolverConfig::default();
        c.params.nu = self.parse("nu")?;
        c.params.kappa = self.parse("kappa")?;
        c.params.sigma_e = self.parse("sigma")?;
        c.params.symmetry = match self.get("symmetry") {
            "sipg" => Symmetry::Sipg,
            "nipg" => Symmetry::Nipg,
            other => bail!("symmetry must be sipg or nipg, got `{other}`"),
        };
        c.n = self.parse("n")?;
        c.velocity_degree = self.parse("velocity_degree")?;
        c.pressure_degree = self.parse("pressure_degree")?;
        c.dt = match self.get("dt") {
            "h2" => c.h() * c.h(),
            _ => self.parse("dt")?,
        };
        c.t_final = self.parse("t_final")?;
        c.stokes = self.parse("stokes")?;
        c.gmres.tol = self.parse("gmres_tol")?;
        c.gmres.restart = self.parse("gmres_restart")?;
        c.gmres.max_iters = self.parse("gmres_max_iters")?;
        c.preconditioning = match self.get("preconditioner") {
            "ilu0" => Preconditioning::Ilu0,
            "lagged-lu" => Preconditioning::default(),
            other => bail!("preconditioner must be ilu0 or lagged-lu, got `{other}`"),
        };
        c.steady_tol = match self.get("steady_tol") {
            "none" => None,
            _ => Some(self.parse("steady_tol")?),
        };
        Ok(c)
    }
}
