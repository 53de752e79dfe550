//! Run configuration: defaults, a flat TOML file, then command-line
//! overrides, in increasing precedence.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use crate::assembly::Penalties;
use crate::geometry::DomainSpec;
use crate::mesh::{load_mesh, Mesh};
use crate::morawetz::{Morawetz, Multiplier};
use crate::spaces::{SpaceConfig, SpaceKind};

#[derive(Clone, Debug, PartialEq)]
pub enum MeshSource {
    Level(usize),
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub space: SpaceKind,
    pub p: usize,
    pub penalties: Penalties,
    pub multiplier: Multiplier,
    pub d: f64,
    pub mesh: MeshSource,
    pub quad_order: Option<usize>,
    /// `None` keeps the default (on for p >= 5).
    pub orthonormalize: Option<bool>,
    pub out: Option<PathBuf>,
    /// Optional SVG chart for sweeps.
    pub svg: Option<PathBuf>,
    /// Refinement levels of an h-sweep.
    pub levels: Vec<usize>,
    /// Degrees of a p-sweep.
    pub p_range: (usize, usize),
    /// Side of the point-sample grid written by `solve` (0 disables it).
    pub samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            space: SpaceKind::QuasiTrefftz,
            p: 3,
            penalties: Penalties::default(),
            multiplier: Multiplier::default(),
            d: 0.5,
            mesh: MeshSource::Level(3),
            quad_order: None,
            orthonormalize: None,
            out: None,
            svg: None,
            levels: vec![3, 4, 5, 6],
            p_range: (2, 8),
            samples: 0,
        }
    }
}

/// Every key is optional; unknown keys are rejected.
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub space: Option<String>,
    pub p: Option<usize>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub gamma3: Option<f64>,
    pub gamma4: Option<f64>,
    pub multiplier: Option<Vec<f64>>,
    pub d: Option<f64>,
    pub level: Option<usize>,
    pub mesh: Option<PathBuf>,
    pub quad_order: Option<usize>,
    pub orthonormalize: Option<bool>,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub levels: Option<Vec<usize>>,
    pub p_min: Option<usize>,
    pub p_max: Option<usize>,
    pub samples: Option<usize>,
}

impl Overrides {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("config: malformed TOML")
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("config: cannot read {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("config: in {}", path.display()))
    }
}

pub fn parse_multiplier(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("config: bad multiplier entry `{t}`")))
        .collect()
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = &o.space {
            self.space = s.parse().context("config")?;
        }
        if let Some(p) = o.p {
            self.p = p;
        }
        let g = &mut self.penalties;
        g.gamma1 = o.gamma1.unwrap_or(g.gamma1);
        g.gamma2 = o.gamma2.unwrap_or(g.gamma2);
        g.gamma3 = o.gamma3.unwrap_or(g.gamma3);
        g.gamma4 = o.gamma4.unwrap_or(g.gamma4);
        if let Some(m) = &o.multiplier {
            if m.len() != 4 {
                bail!("config: multiplier needs 4 coefficients b0,b1,c0,c1, got {}", m.len());
            }
            self.multiplier = Multiplier::new(m[0], m[1], m[2], m[3]);
        }
        self.d = o.d.unwrap_or(self.d);
        match (o.level, &o.mesh) {
            (Some(_), Some(_)) => bail!("config: `level` and `mesh` are mutually exclusive"),
            (Some(l), None) => self.mesh = MeshSource::Level(l),
            (None, Some(path)) => self.mesh = MeshSource::File(path.clone()),
            (None, None) => {}
        }
        self.quad_order = o.quad_order.or(self.quad_order);
        self.orthonormalize = o.orthonormalize.or(self.orthonormalize);
        self.out = o.out.clone().or(self.out.take());
        self.svg = o.svg.clone().or(self.svg.take());
        if let Some(l) = &o.levels {
            self.levels = l.clone();
        }
        self.p_range = (o.p_min.unwrap_or(self.p_range.0), o.p_max.unwrap_or(self.p_range.1));
        self.samples = o.samples.unwrap_or(self.samples);
        Ok(())
    }

    /// Checks every setting against the module preconditions.
    pub fn validate(&self) -> Result<()> {
        self.spec()?;
        self.space_config()?;
        self.penalties.validate().context("config")?;
        self.morawetz()?;
        if let Some(q) = self.quad_order {
            if q < 2 * self.p + 1 {
                bail!("config: quadrature order {q} below 2p + 1 = {}", 2 * self.p + 1);
            }
        }
        if self.p_range.0 < 2 || self.p_range.0 > self.p_range.1 || self.p_range.1 > 8 {
            bail!("config: p-sweep range {:?} must satisfy 2 <= p_min <= p_max <= 8", self.p_range);
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<DomainSpec> {
        DomainSpec::tricomi(self.d).context("config")
    }

    pub fn space_config(&self) -> Result<SpaceConfig> {
        let mut c = SpaceConfig::new(self.space, self.p).context("config")?;
        if let Some(o) = self.orthonormalize {
            c.orthonormalize = o;
        }
        Ok(c)
    }

    pub fn morawetz(&self) -> Result<Morawetz> {
        Morawetz::new(self.multiplier, &self.spec()?).context("config")
    }

    pub fn level(&self) -> Option<usize> {
        match self.mesh {
            MeshSource::Level(l) => Some(l),
            MeshSource::File(_) => None,
        }
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        let spec = self.spec()?;
        match &self.mesh {
            MeshSource::Level(0) => Ok(Mesh::builtin_coarse(spec)),
            MeshSource::Level(l) => Ok(Mesh::builtin(spec, *l)),
            MeshSource::File(path) => {
                load_mesh(path, spec).with_context(|| format!("mesh: cannot load {}", path.display()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_flags_over_file_over_defaults() {
        let mut c = RunConfig::default();
        let file = Overrides::from_toml("space = \"et\"\np = 4\ngamma1 = 5.0\nlevels = [2, 3]\n").unwrap();
        c.apply(&file).unwrap();
        let flags = Overrides { p: Some(2), ..Default::default() };
        c.apply(&flags).unwrap();
        assert_eq!(c.space, SpaceKind::EmbeddedTrefftz);
        assert_eq!(c.p, 2);
        assert_eq!(c.penalties.gamma1, 5.0);
        assert_eq!(c.penalties.gamma2, 0.1);
        assert_eq!(c.levels, vec![2, 3]);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_settings() {
        assert!(Overrides::from_toml("unknown = 1").is_err());
        let mut c = RunConfig::default();
        assert!(c.apply(&Overrides { multiplier: Some(vec![1.0]), ..Default::default() }).is_err());
        assert!(c.apply(&Overrides { level: Some(1), mesh: Some("m".into()), ..Default::default() }).is_err());
        for o in [
            Overrides { gamma1: Some(0.0), ..Default::default() },
            Overrides { p: Some(1), ..Default::default() },
            Overrides { d: Some(0.9), ..Default::default() },
            Overrides { multiplier: Some(vec![2.0, 0.5, 1.0, 0.25]), ..Default::default() },
            Overrides { quad_order: Some(3), ..Default::default() },
        ] {
            let mut c = RunConfig::default();
            c.apply(&o).unwrap();
            assert!(c.validate().is_err(), "{o:?}");
        }
    }

    #[test]
    fn multiplier_string() {
        assert_eq!(parse_multiplier("-2, 0.5,1,0.25").unwrap(), vec![-2.0, 0.5, 1.0, 0.25]);
        assert!(parse_multiplier("a,b").is_err());
    }
}
