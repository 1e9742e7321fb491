//! Run configuration: a flat `key = value` file with `[domain]`, `[point]`,
//! `[quadrature]` and `[run]` sections.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use sha2::{Digest, Sha256};
use szego_core::{ComplexPoint, Mapping, QuadratureSpec, ReinhardtDomain, Route};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("[{section}] {key}: {message}")]
    Value {
        section: String,
        key: String,
        message: String,
    },
    #[error("missing [{section}] {key}")]
    Missing { section: String, key: String },
    #[error("{0}")]
    Invalid(String),
}

/// Which routes a run computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum RouteChoice {
    Boundary,
    Projective,
    Both,
}

impl RouteChoice {
    pub fn routes(&self) -> Vec<Route> {
        match self {
            RouteChoice::Boundary => vec![Route::Boundary],
            RouteChoice::Projective => vec![Route::Projective],
            RouteChoice::Both => vec![Route::Boundary, Route::Projective],
        }
    }
}

#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub n: usize,
    pub l: f64,
    pub rho: String,
    pub u: String,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub point: Option<Vec<Complex64>>,
    pub quadrature: QuadratureSpec,
    pub k_min: usize,
    pub k_max: usize,
    pub route: RouteChoice,
    pub workers: usize,
    pub out: PathBuf,
    pub power_tol: f64,
    pub a0_tol: f64,
    pub a1_tol: Option<f64>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
    pub nodes: Option<usize>,
    pub route: Option<RouteChoice>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

type Sections = BTreeMap<String, BTreeMap<String, String>>;

const KNOWN: &[(&str, &[&str])] = &[
    ("domain", &["n", "l", "rho", "u"]),
    ("point", &["moduli", "phases", "re", "im"]),
    (
        "quadrature",
        &["nodes", "mapping", "refinement_levels", "target_rel_tol"],
    ),
    (
        "run",
        &[
            "k_min",
            "k_max",
            "route",
            "workers",
            "out",
            "power_tol",
            "a0_tol",
            "a1_tol",
        ],
    ),
];

fn parse_sections(text: &str) -> Result<Sections, ConfigError> {
    let mut sections = Sections::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                message: format!("malformed section header '{line}'"),
            })?;
            let name = name.trim();
            if !KNOWN.iter().any(|(s, _)| *s == name) {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    message: format!("unknown section [{name}]"),
                });
            }
            if sections.contains_key(name) {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    message: format!("duplicate section [{name}]"),
                });
            }
            sections.insert(name.to_string(), BTreeMap::new());
            current = Some(name.to_string());
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: line_no,
            message: format!("expected 'key = value', got '{line}'"),
        })?;
        let section = current.as_ref().ok_or_else(|| ConfigError::Syntax {
            line: line_no,
            message: "key outside of a section".into(),
        })?;
        let key = key.trim();
        let allowed = KNOWN
            .iter()
            .find(|(s, _)| s == section)
            .map(|(_, k)| *k)
            .unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(ConfigError::Syntax {
                line: line_no,
                message: format!("unknown key '{key}' in [{section}]"),
            });
        }
        let value = unquote(value.trim()).map_err(|message| ConfigError::Syntax {
            line: line_no,
            message,
        })?;
        let entries = sections.get_mut(section).expect("section was inserted");
        if entries.insert(key.to_string(), value).is_some() {
            return Err(ConfigError::Syntax {
                line: line_no,
                message: format!("duplicate key '{key}'"),
            });
        }
    }
    Ok(sections)
}

/// Drops a `#` comment that is not inside a quoted string.
fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn unquote(value: &str) -> Result<String, String> {
    if let Some(rest) = value.strip_prefix('"') {
        return rest
            .strip_suffix('"')
            .map(str::to_string)
            .ok_or_else(|| format!("unterminated string {value}"));
    }
    if value.contains('"') {
        return Err(format!("stray quote in {value}"));
    }
    Ok(value.to_string())
}

struct Reader<'a> {
    sections: &'a Sections,
}

impl Reader<'_> {
    fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    fn required(&self, section: &str, key: &str) -> Result<&str, ConfigError> {
        self.raw(section, key).ok_or_else(|| ConfigError::Missing {
            section: section.into(),
            key: key.into(),
        })
    }

    fn parse<T: std::str::FromStr>(
        &self,
        section: &str,
        key: &str,
    ) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(section, key)
            .map(|v| {
                v.parse::<T>().map_err(|e| ConfigError::Value {
                    section: section.into(),
                    key: key.into(),
                    message: format!("'{v}': {e}"),
                })
            })
            .transpose()
    }

    fn list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.raw(section, key)
            .map(|v| {
                v.split(',')
                    .map(|item| {
                        item.trim().parse::<f64>().map_err(|e| ConfigError::Value {
                            section: section.into(),
                            key: key.into(),
                            message: format!("'{}': {e}", item.trim()),
                        })
                    })
                    .collect()
            })
            .transpose()
    }
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, overrides)
    }

    pub fn parse(text: &str, overrides: &Overrides) -> Result<Self, ConfigError> {
        let sections = parse_sections(text)?;
        let r = Reader {
            sections: &sections,
        };

        let n: usize = r
            .parse("domain", "n")?
            .ok_or_else(|| ConfigError::Missing {
                section: "domain".into(),
                key: "n".into(),
            })?;
        let domain = DomainSpec {
            n,
            l: r.parse("domain", "l")?
                .ok_or_else(|| ConfigError::Missing {
                    section: "domain".into(),
                    key: "l".into(),
                })?,
            rho: r.required("domain", "rho")?.to_string(),
            u: r.raw("domain", "u").unwrap_or("0").to_string(),
        };

        let point = read_point(&r, n)?;

        let defaults = QuadratureSpec::default();
        let mapping = match r.raw("quadrature", "mapping") {
            None => defaults.mapping,
            Some(v) => v.parse::<Mapping>().map_err(|e| ConfigError::Value {
                section: "quadrature".into(),
                key: "mapping".into(),
                message: e.to_string(),
            })?,
        };
        let quadrature = QuadratureSpec {
            nodes_per_dim: overrides
                .nodes
                .or(r.parse("quadrature", "nodes")?)
                .unwrap_or(defaults.nodes_per_dim),
            mapping,
            refinement_levels: r
                .parse("quadrature", "refinement_levels")?
                .unwrap_or(defaults.refinement_levels),
            target_rel_tol: r
                .parse("quadrature", "target_rel_tol")?
                .unwrap_or(defaults.target_rel_tol),
        };
        quadrature
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let route = match overrides.route {
            Some(route) => route,
            None => match r.raw("run", "route") {
                None | Some("boundary") => RouteChoice::Boundary,
                Some("projective") => RouteChoice::Projective,
                Some("both") => RouteChoice::Both,
                Some(other) => {
                    return Err(ConfigError::Value {
                        section: "run".into(),
                        key: "route".into(),
                        message: format!("'{other}' is not boundary, projective or both"),
                    })
                }
            },
        };
        let k_min = overrides.k_min.or(r.parse("run", "k_min")?).unwrap_or(1);
        let k_max = overrides
            .k_max
            .or(r.parse("run", "k_max")?)
            .unwrap_or(k_min);
        if k_max < k_min {
            return Err(ConfigError::Invalid(format!(
                "k_max ({k_max}) is smaller than k_min ({k_min})"
            )));
        }
        let workers = overrides
            .workers
            .or(r.parse("run", "workers")?)
            .unwrap_or(1);
        if workers == 0 {
            return Err(ConfigError::Invalid("workers must be at least 1".into()));
        }
        let out = overrides
            .out
            .clone()
            .or_else(|| r.raw("run", "out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("szego-out"));

        Ok(Self {
            domain,
            point,
            quadrature,
            k_min,
            k_max,
            route,
            workers,
            out,
            power_tol: r.parse("run", "power_tol")?.unwrap_or(0.05),
            a0_tol: r.parse("run", "a0_tol")?.unwrap_or(0.02),
            a1_tol: r.parse("run", "a1_tol")?,
        })
    }

    pub fn build_domain(&self) -> Result<ReinhardtDomain, szego_core::Error> {
        ReinhardtDomain::from_text(
            self.domain.n,
            self.domain.l,
            &self.domain.rho,
            &self.domain.u,
        )
    }

    pub fn point(&self) -> Result<ComplexPoint, ConfigError> {
        self.point
            .clone()
            .map(ComplexPoint::new)
            .ok_or_else(|| ConfigError::Missing {
                section: "point".into(),
                key: "moduli".into(),
            })
    }

    pub fn ks(&self) -> Vec<usize> {
        (self.k_min..=self.k_max).collect()
    }

    /// SHA-256 over the settings that determine computed numbers: the
    /// domain in canonical printed form and the quadrature settings.
    pub fn config_hash(&self, domain: &ReinhardtDomain) -> String {
        let q = &self.quadrature;
        let canonical = format!(
            "n={}\nl={:?}\nrho={}\nu={}\nnodes={}\nmapping={:?}\nrefinement_levels={}\ntarget_rel_tol={:?}\n",
            domain.n(),
            domain.l(),
            domain.rho(),
            domain.u(),
            q.nodes_per_dim,
            q.mapping,
            q.refinement_levels,
            q.target_rel_tol,
        );
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

fn read_point(r: &Reader<'_>, n: usize) -> Result<Option<Vec<Complex64>>, ConfigError> {
    let check = |key: &str, v: &[f64]| {
        if v.len() != n + 1 {
            Err(ConfigError::Value {
                section: "point".into(),
                key: key.into(),
                message: format!("expected {} values, got {}", n + 1, v.len()),
            })
        } else {
            Ok(())
        }
    };
    if let Some(moduli) = r.list("point", "moduli")? {
        check("moduli", &moduli)?;
        if moduli.iter().any(|m| *m < 0.0) {
            return Err(ConfigError::Value {
                section: "point".into(),
                key: "moduli".into(),
                message: "moduli must be nonnegative".into(),
            });
        }
        let phases = r
            .list("point", "phases")?
            .unwrap_or_else(|| vec![0.0; n + 1]);
        check("phases", &phases)?;
        return Ok(Some(
            moduli
                .iter()
                .zip(&phases)
                .map(|(&m, &p)| Complex64::from_polar(m, p))
                .collect(),
        ));
    }
    match (r.list("point", "re")?, r.list("point", "im")?) {
        (None, None) => Ok(None),
        (re, im) => {
            let re = re.unwrap_or_else(|| vec![0.0; n + 1]);
            let im = im.unwrap_or_else(|| vec![0.0; n + 1]);
            check("re", &re)?;
            check("im", &im)?;
            Ok(Some(
                re.iter()
                    .zip(&im)
                    .map(|(&a, &b)| Complex64::new(a, b))
                    .collect(),
            ))
        }
    }
}
