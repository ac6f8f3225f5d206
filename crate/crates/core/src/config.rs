//! TOML run configuration, validated at load time.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cloaking::{default_probes, CloakProblem, Probe};
use crate::composites::dtn_route;
use crate::geometry::{build_mesh, mark_obstacle, mark_region, Mesh, Rect};
use crate::materials::{build_law, LawSpec, PermittivityModel};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// DtN route used for `F`: `fem-schur` or `effective-lift`.
    #[serde(default = "default_route")]
    pub route: String,
    pub mesh: MeshSpec,
    #[serde(default)]
    pub obstacle: Option<ObstacleSpec>,
    pub materials: MaterialsSpec,
    pub frequency: FrequencySpec,
    #[serde(default)]
    pub potentials: PotentialSpec,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    #[serde(default)]
    pub checks: ChecksSpec,
    #[serde(default)]
    pub identities: IdentitySpec,
    #[serde(default)]
    pub benchmark: Option<BenchmarkSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_seed() -> u64 {
    7
}

fn default_route() -> String {
    "fem-schur".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default = "one")]
    pub height: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    pub rects: Vec<Rect>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialsSpec {
    #[serde(default = "one")]
    pub eps0: f64,
    #[serde(default)]
    pub obstacle: Option<LawSpec>,
    pub cloak: LawSpec,
    #[serde(default)]
    pub overlay: Vec<OverlaySpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlaySpec {
    pub label: String,
    pub rects: Vec<Rect>,
    pub law: LawSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencySpec {
    pub interval: [f64; 2],
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub omega0: Option<f64>,
    /// Subinterval for the lossy bound re-check; defaults to the middle 60%.
    #[serde(default)]
    pub subinterval: Option<[f64; 2]>,
    #[serde(default)]
    pub cplus: CplusSpec,
}

fn default_points() -> usize {
    100
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CplusSpec {
    pub re: [f64; 2],
    pub im: [f64; 2],
    pub n_re: usize,
    pub n_im: usize,
}

impl Default for CplusSpec {
    fn default() -> Self {
        CplusSpec { re: [0.1, 5.0], im: [0.01, 5.0], n_re: 10, n_im: 10 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default = "yes")]
    pub affine: bool,
    #[serde(default = "four")]
    pub random: usize,
}

fn yes() -> bool {
    true
}

fn four() -> usize {
    4
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec { affine: true, random: 4 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    /// Approximate-cloaking tolerance; the measured `eta*` when absent.
    #[serde(default)]
    pub eta: Option<f64>,
    /// Sum-rule `delta`; `max |H|` on the grid when absent.
    #[serde(default)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSpec {
    /// Names of checks to run; all registered checks when absent.
    #[serde(default)]
    pub run: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentitySpec {
    #[serde(default = "five")]
    pub fields: usize,
    #[serde(default = "five")]
    pub potentials: usize,
}

fn five() -> usize {
    5
}

impl Default for IdentitySpec {
    fn default() -> Self {
        IdentitySpec { fields: 5, potentials: 5 }
    }
}

/// Analytic `F` used by the `sumrule` command instead of a PDE sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BenchmarkSpec {
    /// `H(x) = f_inf (x - x0) + h0`.
    AffineH { f_inf: f64, x0: f64, h0: f64 },
    /// `F = f_inf - omega0^2 (f_inf - f0) / omega^2`.
    Drude { f_inf: f64, omega0: f64, f0: f64 },
    /// `F = f_inf + strength / (resonance^2 - omega^2 - i gamma omega)`.
    Lorentz { f_inf: f64, strength: f64, resonance: f64, gamma: f64 },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<String>,
    /// Also write the DtN matrices at `omega0` in Matrix Market format.
    #[serde(default)]
    pub dump_matrices: bool,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let [a, b] = self.frequency.interval;
        if !(0.0 < a && a < b && b.is_finite()) {
            return bad(format!("frequency.interval needs 0 < w- < w+, got [{a}, {b}]"));
        }
        if self.frequency.points < 3 {
            return bad(format!("frequency.points must be at least 3, got {}", self.frequency.points));
        }
        if let Some(w0) = self.frequency.omega0 {
            if !(a <= w0 && w0 <= b) {
                return bad(format!("frequency.omega0 = {w0} lies outside [{a}, {b}]"));
            }
        }
        if let Some([sa, sb]) = self.frequency.subinterval {
            if !(a <= sa && sa < sb && sb <= b) {
                return bad(format!("frequency.subinterval [{sa}, {sb}] is not inside [{a}, {b}]"));
            }
        }
        let c = &self.frequency.cplus;
        if !(0.0 < c.re[0] && c.re[0] <= c.re[1] && 0.0 < c.im[0] && c.im[0] <= c.im[1] && c.n_re > 0 && c.n_im > 0) {
            return bad("frequency.cplus needs positive increasing ranges and counts".into());
        }
        if let Some(e) = self.tolerances.eta {
            if !(e >= 0.0 && e.is_finite()) {
                return bad(format!("tolerances.eta must be non-negative, got {e}"));
            }
        }
        if let Some(d) = self.tolerances.delta {
            if !(d > 0.0 && d.is_finite()) {
                return bad(format!("tolerances.delta must be positive, got {d}"));
            }
        }
        if !(self.materials.eps0 > 0.0 && self.materials.eps0.is_finite()) {
            return bad(format!("materials.eps0 must be positive, got {}", self.materials.eps0));
        }
        if self.obstacle.is_some() != self.materials.obstacle.is_some() {
            return bad("obstacle rects and materials.obstacle must be given together".into());
        }
        if !self.potentials.affine && self.potentials.random == 0 {
            return bad("potential set is empty".into());
        }
        dtn_route(&self.route)?;
        if let Some(names) = &self.checks.run {
            let known = crate::checks::known_names();
            if let Some(n) = names.iter().find(|n| !known.contains(&n.as_str())) {
                return bad(format!("unknown check '{n}', known: {known:?}"));
            }
        }
        if let Some(bm) = &self.benchmark {
            let ok = match *bm {
                BenchmarkSpec::AffineH { f_inf, .. } => f_inf >= 0.0,
                BenchmarkSpec::Drude { f_inf, omega0, f0 } => f_inf >= 0.0 && omega0 > 0.0 && f0 <= f_inf,
                BenchmarkSpec::Lorentz { f_inf, strength, resonance, gamma } => {
                    f_inf >= 0.0 && strength >= 0.0 && resonance > 0.0 && gamma >= 0.0
                }
            };
            if !ok {
                return bad(format!("benchmark parameters violate passivity: {bm:?}"));
            }
        }
        Ok(())
    }

    pub fn mesh(&self) -> Result<Mesh> {
        build_mesh(self.mesh.nx, self.mesh.ny, self.mesh.width, self.mesh.height)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.frequency.interval[0], self.frequency.interval[1])
    }

    pub fn subinterval(&self) -> (f64, f64) {
        match self.frequency.subinterval {
            Some([a, b]) => (a, b),
            None => {
                let (a, b) = self.interval();
                (a + 0.2 * (b - a), b - 0.2 * (b - a))
            }
        }
    }

    pub fn build_problem(&self, seed: u64) -> Result<CloakProblem> {
        let mesh = self.mesh()?;
        let eps0 = self.materials.eps0;
        let cloak = build_law(&self.materials.cloak, eps0)?;
        let mut overlays = Vec::with_capacity(self.materials.overlay.len());
        for o in &self.materials.overlay {
            overlays.push((o.label.clone(), mark_region(&mesh, &o.rects)?, build_law(&o.law, eps0)?));
        }
        let (mask, model) = match (&self.obstacle, &self.materials.obstacle) {
            (Some(spec), Some(law)) => {
                let mask = mark_obstacle(&mesh, &spec.rects)?;
                let model = PermittivityModel::new(eps0, &mask, build_law(law, eps0)?, cloak, overlays)?;
                (Some(mask), model)
            }
            _ => {
                if !overlays.is_empty() {
                    return Err(Error::Config("overlays need an obstacle layout".into()));
                }
                (None, PermittivityModel::uniform(eps0, mesh.n_triangles(), cloak))
            }
        };
        let mut probes: Vec<Probe> = default_probes(&mesh, self.potentials.random, seed, !model.is_reciprocal());
        if !self.potentials.affine {
            probes.retain(|p| p.e0.is_none());
        }
        CloakProblem::new(mesh, mask, model, self.interval(), probes, self.tolerances.eta)
            .map_err(|e| match e {
                Error::Dimension(m) => Error::Config(m),
                other => other,
            })?
            .with_route(&self.route)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        [mesh]
        nx = 4
        ny = 4
        [obstacle]
        rects = [{ x0 = 0.25, y0 = 0.25, x1 = 0.75, y1 = 0.75 }]
        [materials]
        obstacle = { type = "constant", tensor = [[2.0, 0.0], [0.0, 2.0]] }
        cloak = { type = "lorentz", poles = [{ wp2 = 1.0, w0 = 2.0, gamma = 0.0 }] }
        [frequency]
        interval = [0.5, 1.0]
    "#;

    #[test]
    fn parses_and_builds() {
        let cfg = RunConfig::from_toml(BASE).unwrap();
        assert_eq!(cfg.frequency.points, 100);
        let p = cfg.build_problem(cfg.seed).unwrap();
        assert_eq!(p.probes.len(), 6);
    }

    #[test]
    fn rejects_reversed_interval_and_bad_delta() {
        let reversed = BASE.replace("interval = [0.5, 1.0]", "interval = [1.0, 0.5]");
        assert!(RunConfig::from_toml(&reversed).unwrap_err().is_config());
        let delta = format!("{BASE}\n[tolerances]\ndelta = 0.0\n");
        assert!(RunConfig::from_toml(&delta).unwrap_err().is_config());
        let unknown = format!("{BASE}\n[checks]\nrun = [\"nope\"]\n");
        assert!(RunConfig::from_toml(&unknown).unwrap_err().is_config());
    }
}
