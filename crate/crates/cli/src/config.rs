//! Flat key-value run configuration. Keys carry their units in the name,
//! mirroring the dimensionless groups of the solver (L/ell, W/lambda, ...).
//! Validation collects every problem instead of stopping at the first.
//!
//! ```text
//! # Fig.-3-style waveguide scan
//! mode = waveguide
//! d = 2
//! W_over_lambda = 25.5
//! L_over_ell = 5
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use tevd_core::spectrum::Convention;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Validation(ValidationErrors),
}

#[derive(Debug)]
pub struct ValidationErrors(pub Vec<String>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} problems):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Waveguide,
    Slab,
    Quasiballistic,
    Saddle1d,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Waveguide => "waveguide",
            Mode::Slab => "slab",
            Mode::Quasiballistic => "quasiballistic",
            Mode::Saddle1d => "saddle1d",
        }
    }
}

/// A validated run configuration with defaults filled in.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub d: u32,
    pub w_over_lambda: Option<f64>,
    pub n_mu: Option<usize>,
    pub contour_a: f64,
    pub l_over_ell: f64,
    pub t_count: usize,
    pub t_cluster_exponent: f64,
    pub t_u_min: f64,
    pub t_u_max: f64,
    pub eta: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub mixing: f64,
    pub n_x: usize,
    #[serde(serialize_with = "ser_convention")]
    pub convention: Convention,
    pub qb_damping: f64,
    pub l_over_lambda: Option<f64>,
    pub varsigma_over_l: f64,
    pub gamma_re: f64,
    pub gamma_im: f64,
    pub points_per_lambda: usize,
    pub pad_over_lambda: f64,
    pub obstacle_gamma0: Option<f64>,
    pub obstacle_sigma_over_l: f64,
    pub obstacle_x0_over_l: f64,
}

fn ser_convention<S: serde::Serializer>(c: &Convention, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(match c {
        Convention::Sqrt => "sqrt",
        Convention::AOnly => "a_only",
    })
}

const KNOWN_KEYS: &[&str] = &[
    "mode",
    "d",
    "W_over_lambda",
    "N_mu",
    "contour_a",
    "L_over_ell",
    "T_count",
    "T_cluster_exponent",
    "T_u_min",
    "T_u_max",
    "eta",
    "tol",
    "max_iter",
    "mixing",
    "N_x",
    "convention",
    "qb_damping",
    "L_over_lambda",
    "varsigma_over_L",
    "gamma_re",
    "gamma_im",
    "points_per_lambda",
    "pad_over_lambda",
    "obstacle_gamma0",
    "obstacle_sigma_over_L",
    "obstacle_x0_over_L",
];

/// `key = value` lines, `#` comments, values unquoted (quotes tolerated).
fn parse_flat(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (lineno, raw_line) in text.lines().enumerate() {
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Parse(format!(
                "line {}: expected 'key = value', got '{line}'",
                lineno + 1
            )));
        };
        let key = key.trim().to_string();
        let value = value.trim().trim_matches('"').to_string();
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Parse(format!(
                "line {}: empty key or value in '{line}'",
                lineno + 1
            )));
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(ConfigError::Parse(format!("line {}: duplicate key '{key}'", lineno + 1)));
        }
    }
    Ok(map)
}

struct Raw {
    map: BTreeMap<String, String>,
    errors: Vec<String>,
}

impl Raw {
    fn float(&mut self, key: &str) -> Option<f64> {
        let v = self.map.get(key)?;
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Some(x),
            _ => {
                self.errors.push(format!("{key}: expected a number, got '{v}'"));
                None
            }
        }
    }

    fn integer(&mut self, key: &str) -> Option<i64> {
        let v = self.map.get(key)?;
        match v.parse::<i64>() {
            Ok(x) => Some(x),
            _ => {
                self.errors.push(format!("{key}: expected an integer, got '{v}'"));
                None
            }
        }
    }

    fn string(&mut self, key: &str) -> Option<String> {
        self.map.get(key).cloned()
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let map = parse_flat(text)?;
    let mut raw = Raw { map, errors: Vec::new() };

    for key in raw.map.keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            raw.errors.push(format!("unknown key: {key}"));
        }
    }

    let mode = match raw.string("mode").as_deref() {
        Some("waveguide") => Some(Mode::Waveguide),
        Some("slab") => Some(Mode::Slab),
        Some("quasiballistic") => Some(Mode::Quasiballistic),
        Some("saddle1d") => Some(Mode::Saddle1d),
        Some(other) => {
            raw.errors.push(format!(
                "mode: must be waveguide|slab|quasiballistic|saddle1d, got '{other}'"
            ));
            None
        }
        None => {
            raw.errors.push("mode: required".into());
            None
        }
    };

    let convention = match raw.string("convention").as_deref() {
        None | Some("sqrt") => Convention::Sqrt,
        Some("a_only") => Convention::AOnly,
        Some(other) => {
            raw.errors.push(format!("convention: must be sqrt|a_only, got '{other}'"));
            Convention::Sqrt
        }
    };

    let d = raw.integer("d").unwrap_or(2);
    let w_over_lambda = raw.float("W_over_lambda");
    let n_mu = raw.integer("N_mu");
    let contour_a = raw.float("contour_a").unwrap_or(tevd_core::dirset::DEFAULT_CONTOUR_A);
    let l_over_ell = raw.float("L_over_ell");
    let t_count = raw.integer("T_count").unwrap_or(199);
    let t_cluster_exponent = raw.float("T_cluster_exponent").unwrap_or(3.0);
    let t_u_min = raw.float("T_u_min").unwrap_or(0.001);
    let t_u_max = raw.float("T_u_max").unwrap_or(0.999);
    let eta = raw.float("eta").unwrap_or(1e-6);
    let tol = raw.float("tol").unwrap_or(1e-10);
    let max_iter = raw.integer("max_iter").unwrap_or(2000);
    let mixing = raw.float("mixing").unwrap_or(1.0);
    let n_x = raw.integer("N_x").unwrap_or(tevd_core::ray::DEFAULT_N_X as i64);
    let qb_damping = raw.float("qb_damping").unwrap_or(tevd_core::qb::DEFAULT_DAMPING);
    let l_over_lambda = raw.float("L_over_lambda");
    let varsigma_over_l = raw.float("varsigma_over_L").unwrap_or(0.0);
    let gamma_re = raw.float("gamma_re").unwrap_or(1.2);
    let gamma_im = raw.float("gamma_im").unwrap_or(1e-5);
    let points_per_lambda = raw.integer("points_per_lambda").unwrap_or(20);
    let pad_over_lambda = raw.float("pad_over_lambda").unwrap_or(2.0);
    let obstacle_gamma0 = raw.float("obstacle_gamma0");
    let obstacle_sigma_over_l = raw.float("obstacle_sigma_over_L").unwrap_or(0.0);
    let obstacle_x0_over_l = raw.float("obstacle_x0_over_L").unwrap_or(0.5);

    let mut errors = raw.errors;
    let transport = matches!(
        mode,
        Some(Mode::Waveguide) | Some(Mode::Slab) | Some(Mode::Quasiballistic)
    );

    match mode {
        Some(Mode::Waveguide) => {
            if w_over_lambda.is_none() {
                errors.push("W_over_lambda: required for mode=waveguide".into());
            }
        }
        Some(Mode::Slab) => {
            if n_mu.is_none() {
                errors.push("N_mu: required for mode=slab".into());
            }
        }
        Some(Mode::Quasiballistic) => match (w_over_lambda, n_mu) {
            (None, None) => errors.push(
                "mode=quasiballistic needs a geometry: W_over_lambda (waveguide) or N_mu (slab)"
                    .into(),
            ),
            (Some(_), Some(_)) => errors.push(
                "mode=quasiballistic: give either W_over_lambda or N_mu, not both".into(),
            ),
            _ => {}
        },
        Some(Mode::Saddle1d) if l_over_lambda.is_none() => {
            errors.push("L_over_lambda: required for mode=saddle1d".into());
        }
        _ => {}
    }

    if transport || mode == Some(Mode::Saddle1d) {
        match l_over_ell {
            None => errors.push("L_over_ell: required".into()),
            Some(l) if l < 0.0 => errors.push("L_over_ell: must be >= 0".into()),
            _ => {}
        }
    }
    if let Some(w) = w_over_lambda {
        if w <= 0.0 {
            errors.push("W_over_lambda: must be > 0".into());
        }
    }
    if let Some(n) = n_mu {
        if n < 2 {
            errors.push("N_mu: must be >= 2".into());
        }
    }
    if d < 2 {
        errors.push("d: must be >= 2".into());
    }
    if contour_a < 0.0 {
        errors.push("contour_a: must be >= 0".into());
    }
    if t_count < 2 {
        errors.push("T_count: must be >= 2".into());
    }
    if t_cluster_exponent < 1.0 {
        errors.push("T_cluster_exponent: must be >= 1".into());
    }
    if !(0.0 < t_u_min && t_u_min < t_u_max && t_u_max < 1.0) {
        errors.push("T grid bounds: need 0 < T_u_min < T_u_max < 1".into());
    }
    if eta <= 0.0 {
        errors.push("eta: must be > 0".into());
    }
    if tol <= 0.0 {
        errors.push("tol: must be > 0".into());
    }
    if max_iter < 1 {
        errors.push("max_iter: must be >= 1".into());
    }
    if !(0.0 < mixing && mixing <= 1.0) {
        errors.push("mixing: must lie in (0, 1]".into());
    }
    if n_x < 2 {
        errors.push("N_x: must be >= 2".into());
    }
    if !(0.0 < qb_damping && qb_damping <= 1.0) {
        errors.push("qb_damping: must lie in (0, 1]".into());
    }
    if mode == Some(Mode::Saddle1d) {
        if points_per_lambda < 20 {
            errors.push("points_per_lambda: must be >= 20 (grid spacing <= lambda/20)".into());
        }
        if pad_over_lambda < 2.0 {
            errors.push("pad_over_lambda: must be >= 2".into());
        }
        if let Some(l) = l_over_lambda {
            if l <= 0.0 {
                errors.push("L_over_lambda: must be > 0".into());
            }
        }
        if varsigma_over_l < 0.0 {
            errors.push("varsigma_over_L: must be >= 0".into());
        }
        if obstacle_sigma_over_l < 0.0 {
            errors.push("obstacle_sigma_over_L: must be >= 0".into());
        }
    }

    if !errors.is_empty() {
        return Err(ConfigError::Validation(ValidationErrors(errors)));
    }

    Ok(RunConfig {
        mode: mode.expect("validated above"),
        d: d as u32,
        w_over_lambda,
        n_mu: n_mu.map(|n| n as usize),
        contour_a,
        l_over_ell: l_over_ell.unwrap_or(0.0),
        t_count: t_count as usize,
        t_cluster_exponent,
        t_u_min,
        t_u_max,
        eta,
        tol,
        max_iter: max_iter as usize,
        mixing,
        n_x: n_x as usize,
        convention,
        qb_damping,
        l_over_lambda,
        varsigma_over_l,
        gamma_re,
        gamma_im,
        points_per_lambda: points_per_lambda as usize,
        pad_over_lambda,
        obstacle_gamma0,
        obstacle_sigma_over_l,
        obstacle_x0_over_l,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_waveguide_config_fills_defaults() {
        let cfg =
            parse_config("mode = waveguide\nd = 2\nW_over_lambda = 25.5\nL_over_ell = 5\n")
                .unwrap();
        assert_eq!(cfg.n_x, 1024);
        assert_eq!(cfg.eta, 1e-6);
        assert_eq!(cfg.tol, 1e-10);
        assert_eq!(cfg.t_count, 199);
        assert_eq!(cfg.t_cluster_exponent, 3.0);
        assert_eq!(cfg.mixing, 1.0);
        assert_eq!(cfg.convention, Convention::Sqrt);
    }

    #[test]
    fn comments_and_quotes_are_tolerated() {
        let cfg = parse_config(
            "# scan setup\nmode = \"waveguide\"  # geometry\nW_over_lambda = 5.5\nL_over_ell = 1\n",
        )
        .unwrap();
        assert_eq!(cfg.mode, Mode::Waveguide);
    }

    #[test]
    fn slab_without_n_mu_is_rejected_by_name() {
        let err = parse_config("mode = slab\nL_over_ell = 0.2\n").unwrap_err();
        match err {
            ConfigError::Validation(v) => {
                assert!(v.0.iter().any(|e| e.contains("N_mu")), "{v}");
            }
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn all_problems_are_collected() {
        let err =
            parse_config("mode = slab\nmixing = 0.0\ntol = -1\nbogus_key = 3\n").unwrap_err();
        match err {
            ConfigError::Validation(v) => {
                let text = v.to_string();
                for needle in ["N_mu", "mixing", "tol", "bogus_key", "L_over_ell"] {
                    assert!(text.contains(needle), "missing '{needle}' in: {text}");
                }
            }
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn cutoff_width_loads_fine() {
        // The grazing-mode failure surfaces at run time, not at parse time.
        let cfg = parse_config("mode = waveguide\nW_over_lambda = 1.0\nL_over_ell = 1\n").unwrap();
        assert_eq!(cfg.w_over_lambda, Some(1.0));
    }

    #[test]
    fn quasiballistic_needs_exactly_one_geometry() {
        assert!(parse_config("mode = quasiballistic\nL_over_ell = 0.5\n").is_err());
        assert!(parse_config(
            "mode = quasiballistic\nL_over_ell = 0.5\nW_over_lambda = 5.5\nN_mu = 16\n"
        )
        .is_err());
        assert!(
            parse_config("mode = quasiballistic\nL_over_ell = 0.5\nW_over_lambda = 5.5\n").is_ok()
        );
    }

    #[test]
    fn duplicate_keys_are_a_parse_error() {
        assert!(matches!(
            parse_config("mode = slab\nmode = waveguide\n"),
            Err(ConfigError::Parse(_))
        ));
    }
}
