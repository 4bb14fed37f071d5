//! Scenario files: which space, which domain and test function, which
//! checks, and the grids they run on.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use densitylab::geometry::preset;
use densitylab::{BallDomain, RadialProfile, RotSymSpace};
use serde::Serialize;

use crate::kv::KvFile;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    CdScan,
    BishopGromov,
    MeanCurvature,
    Avr,
    Neumann,
    Lemma1,
    Transport,
    Inclusion,
    Riccati,
    Sobolev,
    Isoperimetric,
    Explore,
}

impl Check {
    pub const ALL: [Check; 12] = [
        Check::CdScan,
        Check::BishopGromov,
        Check::MeanCurvature,
        Check::Avr,
        Check::Neumann,
        Check::Lemma1,
        Check::Transport,
        Check::Inclusion,
        Check::Riccati,
        Check::Sobolev,
        Check::Isoperimetric,
        Check::Explore,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::CdScan => "cd-scan",
            Check::BishopGromov => "bishop-gromov",
            Check::MeanCurvature => "mean-curvature",
            Check::Avr => "avr",
            Check::Neumann => "neumann",
            Check::Lemma1 => "lemma1",
            Check::Transport => "transport",
            Check::Inclusion => "inclusion",
            Check::Riccati => "riccati",
            Check::Sobolev => "sobolev",
            Check::Isoperimetric => "isoperimetric",
            Check::Explore => "explore",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            return Err("`all` must stand alone".into());
        }
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown check {s:?}"))
    }
}

/// A preset name with its numeric parameters and optional data file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSpec {
    pub preset: String,
    pub params: BTreeMap<String, f64>,
    pub file: Option<PathBuf>,
}

impl ProfileSpec {
    pub fn named(preset: &str) -> Self {
        Self {
            preset: preset.to_string(),
            params: BTreeMap::new(),
            file: None,
        }
    }

    pub fn build(&self) -> Result<RadialProfile, CliError> {
        preset(&self.preset, &self.params, self.file.as_deref()).map_err(CliError::from)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceSpec {
    pub m: usize,
    pub alpha: f64,
    pub r_max: f64,
    pub warp: ProfileSpec,
    pub density: ProfileSpec,
}

/// Grid and tolerance settings. Tolerances listed here are multiplied by
/// the run's tolerance scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grids {
    pub cd_points: usize,
    pub cd_lo_fraction: f64,
    pub cd_refine_points: usize,
    pub bg_points: usize,
    pub bg_r_min: f64,
    pub bg_r_max: f64,
    pub mc_points: usize,
    pub transport_bases: Vec<f64>,
    pub transport_r: f64,
    pub jacobi_step: f64,
    pub ar_radial: usize,
    pub ar_angular: usize,
    pub ar_refine_rounds: usize,
    pub inclusion_r: Vec<f64>,
    pub inclusion_targets: usize,
    pub sobolev_r: Vec<f64>,
    pub neumann_cells: usize,
    pub riccati_tol: f64,
    pub index_tol: f64,
    pub explore_budget: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub space: SpaceSpec,
    pub domain_radius: f64,
    pub f: ProfileSpec,
    pub checks: Vec<Check>,
    pub seed: u64,
    pub tol_scale: f64,
    /// Where the files go has no bearing on their contents.
    #[serde(skip)]
    pub output_dir: Option<PathBuf>,
    pub grids: Grids,
}

fn take_profile(
    kv: &mut KvFile,
    key: &str,
    default: &str,
    base_dir: &Path,
) -> Result<ProfileSpec, CliError> {
    let preset = kv
        .take_str(key)
        .map(|e| e.value)
        .unwrap_or_else(|| default.to_string());
    let params = kv.take_params(key)?;
    let file = kv
        .take_str(&format!("{key}.file"))
        .map(|e| base_dir.join(e.value));
    Ok(ProfileSpec { preset, params, file })
}

/// Key-to-line map so that validation errors can point into the file.
struct Lines(BTreeMap<String, usize>);

impl Lines {
    fn err(&self, key: &str, message: String) -> CliError {
        CliError::Config {
            line: self.0.get(key).copied(),
            field: Some(key.to_string()),
            message,
        }
    }

    fn positive(&self, value: f64, key: &str) -> Result<f64, CliError> {
        if value > 0.0 && value.is_finite() {
            Ok(value)
        } else {
            Err(self.err(key, format!("must be positive and finite, got {value}")))
        }
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fallback = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into());
        Self::parse(&text, base, &fallback)
    }

    /// Parses scenario text; relative data files resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path, fallback_name: &str) -> Result<Self, CliError> {
        let mut kv = KvFile::parse(text)?;
        let lines = Lines(kv.lines());
        let name = kv
            .take_str("name")
            .map(|e| e.value)
            .unwrap_or_else(|| fallback_name.to_string());
        let m: usize = kv
            .take("space.m")?
            .ok_or_else(|| lines.err("space.m", "required".into()))?;
        let alpha: f64 = kv
            .take("space.alpha")?
            .ok_or_else(|| lines.err("space.alpha", "required".into()))?;
        let r_max: f64 = kv.take_or("space.r_max", 1000.0)?;
        let warp = take_profile(&mut kv, "space.warp", "euclidean", base_dir)?;
        let density = take_profile(&mut kv, "space.density", "const", base_dir)?;
        let domain_radius = kv.take_or("domain.R", 1.0)?;
        let f = take_profile(&mut kv, "f", "const", base_dir)?;
        let checks = match kv.take_str("checks") {
            None => Check::ALL.iter().copied().filter(|&c| c != Check::Explore).collect(),
            Some(e) if e.value.trim() == "all" => Check::ALL.to_vec(),
            Some(e) => {
                let mut out = Vec::new();
                for item in e.value.split(',') {
                    let c: Check = item
                        .trim()
                        .parse()
                        .map_err(|msg| CliError::config(e.line, Some("checks"), msg))?;
                    if !out.contains(&c) {
                        out.push(c);
                    }
                }
                out
            }
        };
        let seed = kv.take_or("seed", 0u64)?;
        let tol_scale = lines.positive(kv.take_or("tol.scale", 1.0)?, "tol.scale")?;
        let output_dir = kv.take_str("output_dir").map(|e| base_dir.join(e.value));

        let transport_r = kv.take_or("transport.r", 2.0)?;
        let grids = Grids {
            cd_points: kv.take_or("grid.cd.points", 512)?,
            cd_lo_fraction: lines.positive(kv.take_or("grid.cd.lo_fraction", 1e-3)?, "grid.cd.lo_fraction")?,
            cd_refine_points: kv.take_or("grid.cd.refine_points", 64)?,
            bg_points: kv.take_or("grid.bg.points", 256)?,
            bg_r_min: lines.positive(kv.take_or("grid.bg.r_min", 1e-2)?, "grid.bg.r_min")?,
            bg_r_max: lines.positive(kv.take_or("grid.bg.r_max", r_max.min(50.0))?, "grid.bg.r_max")?,
            mc_points: kv.take_or("grid.mc.points", 512)?,
            transport_bases: kv
                .take_list("transport.base")?
                .unwrap_or_else(|| vec![0.25 * domain_radius, 0.5 * domain_radius, 0.75 * domain_radius]),
            transport_r,
            jacobi_step: lines.positive(kv.take_or("jacobi.step", 1e-3)?, "jacobi.step")?,
            ar_radial: kv.take_or("ar.radial", 64)?,
            ar_angular: kv.take_or("ar.angular", 32)?,
            ar_refine_rounds: kv.take_or("ar.refine_rounds", 2)?,
            inclusion_r: kv.take_list("inclusion.r")?.unwrap_or_else(|| vec![5.0, 10.0, 50.0]),
            inclusion_targets: kv.take_or("inclusion.targets", 64)?,
            sobolev_r: kv.take_list("sobolev.r")?.unwrap_or_else(|| vec![10.0, 100.0, 1000.0]),
            neumann_cells: kv.take_or("neumann.cells", 2048)?,
            riccati_tol: lines.positive(kv.take_or("tol.riccati", 1e-6)?, "tol.riccati")?,
            index_tol: lines.positive(kv.take_or("tol.index", 1e-9)?, "tol.index")?,
            explore_budget: kv.take_or("explore.budget", 8)?,
        };
        kv.finish()?;

        let scenario = Scenario {
            name,
            space: SpaceSpec {
                m,
                alpha,
                r_max,
                warp,
                density,
            },
            domain_radius,
            f,
            checks,
            seed,
            tol_scale,
            output_dir,
            grids,
        };
        scenario.validate(&lines)?;
        Ok(scenario)
    }

    fn validate(&self, lines: &Lines) -> Result<(), CliError> {
        let g = &self.grids;
        for (key, n, min) in [
            ("grid.cd.points", g.cd_points, 2),
            ("grid.bg.points", g.bg_points, 2),
            ("grid.mc.points", g.mc_points, 2),
            ("ar.radial", g.ar_radial, 2),
            ("ar.angular", g.ar_angular, 2),
            ("inclusion.targets", g.inclusion_targets, 1),
            ("neumann.cells", g.neumann_cells, 16),
            ("explore.budget", g.explore_budget, 1),
        ] {
            if n < min {
                return Err(lines.err(key, format!("must be at least {min}, got {n}")));
            }
        }
        if g.bg_r_min >= g.bg_r_max || g.bg_r_max > self.space.r_max {
            return Err(lines.err(
                "grid.bg.r_max",
                format!(
                    "need grid.bg.r_min < grid.bg.r_max <= space.r_max, got {} / {} / {}",
                    g.bg_r_min, g.bg_r_max, self.space.r_max
                ),
            ));
        }
        if !(self.domain_radius > 0.0 && self.domain_radius < self.space.r_max) {
            return Err(lines.err(
                "domain.R",
                format!("must lie in (0, space.r_max), got {}", self.domain_radius),
            ));
        }
        if let Some(&b) = g
            .transport_bases
            .iter()
            .find(|&&b| !(b >= 0.0 && b <= self.domain_radius))
        {
            return Err(lines.err("transport.base", format!("{b} is outside [0, domain.R]")));
        }
        if !(g.transport_r >= 0.0 && g.transport_r.is_finite()) {
            return Err(lines.err("transport.r", "must be nonnegative".into()));
        }
        for (key, list) in [("inclusion.r", &g.inclusion_r), ("sobolev.r", &g.sobolev_r)] {
            if list.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
                return Err(lines.err(key, "radii must be positive".into()));
            }
        }
        let s = &self.space;
        let warp = s.warp.build().map_err(|e| lines.err("space.warp", e.to_string()))?;
        let density = s.density.build().map_err(|e| lines.err("space.density", e.to_string()))?;
        RotSymSpace::new(s.m, s.alpha, warp, density, s.r_max)
            .map_err(|e| lines.err("space", e.to_string()))?;
        self.f.build().map_err(|e| lines.err("f", e.to_string()))?;
        Ok(())
    }

    pub fn space(&self) -> Result<RotSymSpace, CliError> {
        let s = &self.space;
        Ok(RotSymSpace::new(s.m, s.alpha, s.warp.build()?, s.density.build()?, s.r_max)?)
    }

    pub fn domain(&self, space: &RotSymSpace) -> Result<BallDomain, CliError> {
        Ok(BallDomain::new(space, self.domain_radius)?)
    }
}
