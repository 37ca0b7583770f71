//! Run configuration: a TOML document with `[model]`, `[extension]`,
//! `[task]` and optional `[tolerances]` sections. Unknown keys are errors,
//! matrices are lists of rows, complex numbers are written `re+imi` (plain
//! numbers are accepted for real values).

use num_complex::Complex64;
use serde::Deserialize;

use crate::models::{Coordinate, SideRatio};
use crate::spectral::TailBound;

/// One parse or validation problem, with a line number when the underlying
/// TOML span is known.
#[derive(Debug, Clone)]
pub struct ConfigError {
    pub message: String,
    pub line: Option<usize>,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

#[derive(Debug, Clone)]
pub enum ModelSpec {
    Interval {
        a: f64,
        levels: usize,
    },
    Star {
        edges: usize,
        a: f64,
        levels: usize,
    },
    Seba {
        a: f64,
        b: f64,
        ratio: SideRatio,
        y1: Coordinate,
        y2: Coordinate,
        cutoff: f64,
    },
    RankOne {
        levels: Vec<f64>,
        traces: Vec<Vec<Complex64>>,
        tail: Option<TailBound>,
    },
}

#[derive(Debug, Clone)]
pub enum PiSpec {
    Full,
    Zero,
    Vectors(Vec<Vec<Complex64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parametrization {
    Theta,
    BoundaryB,
}

#[derive(Debug, Clone)]
pub struct ExtensionSpec {
    pub pi: PiSpec,
    pub matrix: Option<Vec<Vec<Complex64>>>,
    pub parametrization: Parametrization,
}

#[derive(Debug, Clone)]
pub enum LevelSelection {
    First(usize),
    Explicit(Vec<usize>),
}

#[derive(Debug, Clone)]
pub enum TaskSpec {
    Preserve {
        levels: LevelSelection,
    },
    NewEigenvalues {
        intervals: Vec<(f64, f64)>,
        plot_grid: usize,
    },
    ResolventProbe {
        z: Complex64,
        phi: Vec<(usize, usize, Complex64)>,
    },
    RenderBc,
    Eigenfunction {
        level: usize,
        samples: usize,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct ToleranceSpec {
    pub rank: f64,
    pub root: f64,
    pub trunc: usize,
    pub grid: usize,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        Self {
            rank: 1e-9,
            root: 1e-9,
            trunc: 2000,
            grid: 64,
        }
    }
}

/// Fully validated run description.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub extension: ExtensionSpec,
    pub task: TaskSpec,
    pub tolerances: ToleranceSpec,
    /// Non-fatal notes produced during validation (e.g. symmetrization).
    pub warnings: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    extension: RawExtension,
    task: RawTask,
    #[serde(default)]
    tolerances: RawTolerances,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    kind: String,
    a: Option<f64>,
    b: Option<f64>,
    levels: Option<usize>,
    edges: Option<usize>,
    side_ratio: Option<String>,
    y1: Option<toml::Value>,
    y2: Option<toml::Value>,
    cutoff: Option<f64>,
    levels_list: Option<Vec<f64>>,
    traces: Option<Vec<Vec<toml::Value>>>,
    tail_c: Option<f64>,
    tail_p: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExtension {
    pi: toml::Value,
    theta: Option<Vec<Vec<toml::Value>>>,
    b: Option<Vec<Vec<toml::Value>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTask {
    kind: String,
    levels: Option<Vec<usize>>,
    max_level: Option<usize>,
    intervals: Option<Vec<Vec<f64>>>,
    plot_grid: Option<usize>,
    z: Option<toml::Value>,
    phi: Option<Vec<RawPhiEntry>>,
    level: Option<usize>,
    samples: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhiEntry {
    level: usize,
    #[serde(default)]
    index: usize,
    value: toml::Value,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    rank: Option<f64>,
    root: Option<f64>,
    trunc: Option<usize>,
    grid: Option<usize>,
}

/// Parse `re`, `re+imi`, `re-imi`, `imi`, `i`, `-i`.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err("empty complex literal".into());
    }
    if !t.ends_with('i') {
        return t
            .parse::<f64>()
            .map(|re| Complex64::new(re, 0.0))
            .map_err(|_| format!("cannot parse '{s}' as a number"));
    }
    let body = &t[..t.len() - 1];
    // Find the split between real and imaginary parts: the last sign that is
    // neither leading nor part of an exponent.
    let bytes = body.as_bytes();
    let mut split = None;
    for i in (1..bytes.len()).rev() {
        let c = bytes[i] as char;
        if (c == '+' || c == '-') && !matches!(bytes[i - 1] as char, 'e' | 'E') {
            split = Some(i);
            break;
        }
    }
    let (re_str, im_str) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("", body),
    };
    let re = if re_str.is_empty() {
        0.0
    } else {
        re_str
            .parse::<f64>()
            .map_err(|_| format!("cannot parse real part of '{s}'"))?
    };
    let im = match im_str {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => other
            .parse::<f64>()
            .map_err(|_| format!("cannot parse imaginary part of '{s}'"))?,
    };
    Ok(Complex64::new(re, im))
}

fn value_to_complex(v: &toml::Value, context: &str) -> Result<Complex64, ConfigError> {
    match v {
        toml::Value::Integer(i) => Ok(Complex64::new(*i as f64, 0.0)),
        toml::Value::Float(f) => Ok(Complex64::new(*f, 0.0)),
        toml::Value::String(s) => parse_complex(s).map_err(|message| ConfigError {
            message: format!("{context}: {message}"),
            line: None,
        }),
        other => Err(ConfigError {
            message: format!("{context}: expected a number or complex string, got {other}"),
            line: None,
        }),
    }
}

fn matrix_from_rows(
    rows: &[Vec<toml::Value>],
    context: &str,
) -> Result<Vec<Vec<Complex64>>, ConfigError> {
    let mut out = Vec::with_capacity(rows.len());
    let width = rows.first().map(|r| r.len()).unwrap_or(0);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(ConfigError {
                message: format!(
                    "{context}: row {i} has {} entries, expected {width}",
                    row.len()
                ),
                line: None,
            });
        }
        let mut parsed = Vec::with_capacity(row.len());
        for (j, v) in row.iter().enumerate() {
            parsed.push(value_to_complex(v, &format!("{context}[{i}][{j}]"))?);
        }
        out.push(parsed);
    }
    Ok(out)
}

/// Coordinate grammar: `"p/q"`, `"irrational:VALUE"`, or a plain number.
fn parse_coordinate(v: &toml::Value, context: &str) -> Result<Coordinate, ConfigError> {
    let fail = |message: String| ConfigError {
        message: format!("{context}: {message}"),
        line: None,
    };
    match v {
        toml::Value::Float(f) => Ok(Coordinate::Numeric { value: *f }),
        toml::Value::String(s) => {
            if let Some(rest) = s.strip_prefix("irrational:") {
                let value = rest
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| fail(format!("cannot parse irrational value '{rest}'")))?;
                Ok(Coordinate::Irrational { value })
            } else if let Some((num, den)) = s.split_once('/') {
                let num = num
                    .trim()
                    .parse::<u32>()
                    .map_err(|_| fail(format!("bad fraction numerator '{num}'")))?;
                let den = den
                    .trim()
                    .parse::<u32>()
                    .map_err(|_| fail(format!("bad fraction denominator '{den}'")))?;
                Coordinate::rational(num, den).map_err(|e| fail(e.to_string()))
            } else {
                Err(fail(format!(
                    "expected 'p/q', 'irrational:VALUE' or a float, got '{s}'"
                )))
            }
        }
        other => Err(fail(format!("expected a string or float, got {other}"))),
    }
}

fn parse_side_ratio(s: &str, context: &str) -> Result<SideRatio, ConfigError> {
    match s {
        "irrational" => Ok(SideRatio::Irrational),
        "numeric" => Ok(SideRatio::Numeric),
        other => {
            if let Some((num, den)) = other.split_once('/') {
                let num: u32 = num.trim().parse().map_err(|_| ConfigError {
                    message: format!("{context}: bad ratio numerator '{num}'"),
                    line: None,
                })?;
                let den: u32 = den.trim().parse().map_err(|_| ConfigError {
                    message: format!("{context}: bad ratio denominator '{den}'"),
                    line: None,
                })?;
                Ok(SideRatio::Rational { num, den })
            } else {
                Err(ConfigError {
                    message: format!(
                        "{context}: expected 'p/q', 'irrational' or 'numeric', got '{other}'"
                    ),
                    line: None,
                })
            }
        }
    }
}

struct FieldGuard<'a> {
    kind: &'a str,
    errors: Vec<ConfigError>,
}

impl<'a> FieldGuard<'a> {
    fn require<T: Clone>(&mut self, field: &Option<T>, name: &str) -> Option<T> {
        match field {
            Some(v) => Some(v.clone()),
            None => {
                self.errors.push(ConfigError {
                    message: format!("[model] kind '{}' requires key '{name}'", self.kind),
                    line: None,
                });
                None
            }
        }
    }

    fn forbid<T>(&mut self, field: &Option<T>, name: &str) {
        if field.is_some() {
            self.errors.push(ConfigError {
                message: format!("[model] key '{name}' is not valid for kind '{}'", self.kind),
                line: None,
            });
        }
    }
}

fn validate_model(raw: &RawModel) -> Result<ModelSpec, Vec<ConfigError>> {
    let mut guard = FieldGuard {
        kind: &raw.kind,
        errors: Vec::new(),
    };
    let spec = match raw.kind.as_str() {
        "interval" => {
            let a = guard.require(&raw.a, "a");
            let levels = guard.require(&raw.levels, "levels");
            guard.forbid(&raw.b, "b");
            guard.forbid(&raw.edges, "edges");
            guard.forbid(&raw.side_ratio, "side_ratio");
            guard.forbid(&raw.y1, "y1");
            guard.forbid(&raw.y2, "y2");
            guard.forbid(&raw.cutoff, "cutoff");
            guard.forbid(&raw.levels_list, "levels_list");
            guard.forbid(&raw.traces, "traces");
            match (a, levels) {
                (Some(a), Some(levels)) => Some(ModelSpec::Interval { a, levels }),
                _ => None,
            }
        }
        "star" => {
            let a = guard.require(&raw.a, "a");
            let levels = guard.require(&raw.levels, "levels");
            let edges = guard.require(&raw.edges, "edges");
            guard.forbid(&raw.b, "b");
            guard.forbid(&raw.side_ratio, "side_ratio");
            guard.forbid(&raw.y1, "y1");
            guard.forbid(&raw.y2, "y2");
            guard.forbid(&raw.cutoff, "cutoff");
            guard.forbid(&raw.levels_list, "levels_list");
            guard.forbid(&raw.traces, "traces");
            match (a, levels, edges) {
                (Some(a), Some(levels), Some(edges)) => Some(ModelSpec::Star { edges, a, levels }),
                _ => None,
            }
        }
        "seba" => {
            let a = guard.require(&raw.a, "a");
            let b = guard.require(&raw.b, "b");
            let ratio = guard.require(&raw.side_ratio, "side_ratio");
            let y1 = guard.require(&raw.y1, "y1");
            let y2 = guard.require(&raw.y2, "y2");
            let cutoff = guard.require(&raw.cutoff, "cutoff");
            guard.forbid(&raw.levels, "levels");
            guard.forbid(&raw.edges, "edges");
            guard.forbid(&raw.levels_list, "levels_list");
            guard.forbid(&raw.traces, "traces");
            let ratio = ratio.and_then(|s| match parse_side_ratio(&s, "[model] side_ratio") {
                Ok(r) => Some(r),
                Err(e) => {
                    guard.errors.push(e);
                    None
                }
            });
            let y1 = y1.and_then(|v| match parse_coordinate(&v, "[model] y1") {
                Ok(c) => Some(c),
                Err(e) => {
                    guard.errors.push(e);
                    None
                }
            });
            let y2 = y2.and_then(|v| match parse_coordinate(&v, "[model] y2") {
                Ok(c) => Some(c),
                Err(e) => {
                    guard.errors.push(e);
                    None
                }
            });
            match (a, b, ratio, y1, y2, cutoff) {
                (Some(a), Some(b), Some(ratio), Some(y1), Some(y2), Some(cutoff)) => {
                    Some(ModelSpec::Seba {
                        a,
                        b,
                        ratio,
                        y1,
                        y2,
                        cutoff,
                    })
                }
                _ => None,
            }
        }
        "rank-one" => {
            let levels = guard.require(&raw.levels_list, "levels_list");
            let traces = guard.require(&raw.traces, "traces");
            guard.forbid(&raw.a, "a");
            guard.forbid(&raw.b, "b");
            guard.forbid(&raw.edges, "edges");
            guard.forbid(&raw.levels, "levels");
            guard.forbid(&raw.side_ratio, "side_ratio");
            guard.forbid(&raw.y1, "y1");
            guard.forbid(&raw.y2, "y2");
            guard.forbid(&raw.cutoff, "cutoff");
            let traces = traces.and_then(|rows| {
                let mut out = Vec::new();
                for (i, row) in rows.iter().enumerate() {
                    let mut parsed = Vec::new();
                    for (j, v) in row.iter().enumerate() {
                        match value_to_complex(v, &format!("[model] traces[{i}][{j}]")) {
                            Ok(c) => parsed.push(c),
                            Err(e) => {
                                guard.errors.push(e);
                                return None;
                            }
                        }
                    }
                    out.push(parsed);
                }
                Some(out)
            });
            let tail = match (raw.tail_c, raw.tail_p) {
                (Some(c), p) => Some(TailBound {
                    constant: c,
                    exponent: p.unwrap_or(1.0),
                }),
                (None, Some(_)) => {
                    guard.errors.push(ConfigError {
                        message: "[model] tail_p given without tail_c".into(),
                        line: None,
                    });
                    None
                }
                (None, None) => None,
            };
            match (levels, traces) {
                (Some(levels), Some(traces)) => Some(ModelSpec::RankOne {
                    levels,
                    traces,
                    tail,
                }),
                _ => None,
            }
        }
        other => {
            guard.errors.push(ConfigError {
                message: format!(
                    "[model] unknown kind '{other}' (expected interval | star | seba | rank-one)"
                ),
                line: None,
            });
            None
        }
    };
    if raw.kind != "rank-one" {
        if raw.tail_c.is_some() || raw.tail_p.is_some() {
            guard.errors.push(ConfigError {
                message: format!(
                    "[model] keys 'tail_c'/'tail_p' are not valid for kind '{}'",
                    raw.kind
                ),
                line: None,
            });
        }
    }
    match spec {
        Some(s) if guard.errors.is_empty() => Ok(s),
        _ => Err(guard.errors),
    }
}

fn validate_extension(
    raw: &RawExtension,
    warnings: &mut Vec<String>,
) -> Result<ExtensionSpec, Vec<ConfigError>> {
    let mut errors = Vec::new();
    let pi = match &raw.pi {
        toml::Value::String(s) => match s.as_str() {
            "full" => Some(PiSpec::Full),
            "zero" => Some(PiSpec::Zero),
            other => {
                errors.push(ConfigError {
                    message: format!(
                        "[extension] pi must be 'full', 'zero' or a list of vectors, got '{other}'"
                    ),
                    line: None,
                });
                None
            }
        },
        toml::Value::Array(rows) => {
            let rows: Vec<Vec<toml::Value>> = rows
                .iter()
                .map(|r| match r {
                    toml::Value::Array(inner) => Ok(inner.clone()),
                    other => Err(ConfigError {
                        message: format!("[extension] pi entries must be vectors, got {other}"),
                        line: None,
                    }),
                })
                .collect::<Result<_, _>>()
                .map_err(|e| vec![e])?;
            match matrix_from_rows(&rows, "[extension] pi") {
                Ok(vectors) => Some(PiSpec::Vectors(vectors)),
                Err(e) => {
                    errors.push(e);
                    None
                }
            }
        }
        other => {
            errors.push(ConfigError {
                message: format!("[extension] pi has unsupported type {other}"),
                line: None,
            });
            None
        }
    };

    let (matrix_raw, parametrization): (Option<(Vec<Vec<toml::Value>>, &str)>, Parametrization) =
        match (&raw.theta, &raw.b) {
            (Some(_), Some(_)) => {
                errors.push(ConfigError {
                    message: "[extension] give either 'theta' or 'b', not both".into(),
                    line: None,
                });
                (None, Parametrization::Theta)
            }
            (Some(t), None) => (Some((t.clone(), "theta")), Parametrization::Theta),
            (None, Some(b)) => (Some((b.clone(), "b")), Parametrization::BoundaryB),
            (None, None) => (None, Parametrization::Theta),
        };

    let matrix = matrix_raw.and_then(|(rows, which)| {
        match matrix_from_rows(&rows, &format!("[extension] {which}")) {
            Ok(mut m) => {
                // Hermitian symmetrization with a warning beyond 1e-12.
                let n = m.len();
                if m.iter().any(|r| r.len() != n) {
                    errors.push(ConfigError {
                        message: format!("[extension] {which} must be square"),
                        line: None,
                    });
                    return None;
                }
                let mut asym = 0.0f64;
                for i in 0..n {
                    for j in 0..n {
                        let d = (m[i][j] - m[j][i].conj()).norm();
                        asym = asym.max(d);
                    }
                }
                if asym > 1e-12 {
                    warnings.push(format!(
                        "[extension] {which} symmetrized: asymmetry {asym:.3e} exceeds 1e-12"
                    ));
                }
                for i in 0..n {
                    for j in 0..n {
                        let h = (m[i][j] + m[j][i].conj()) * 0.5;
                        m[i][j] = h;
                    }
                }
                for i in 0..n {
                    for j in 0..i {
                        m[i][j] = m[j][i].conj();
                    }
                }
                Some(m)
            }
            Err(e) => {
                errors.push(e);
                None
            }
        }
    });

    match pi {
        Some(pi) if errors.is_empty() => Ok(ExtensionSpec {
            pi,
            matrix,
            parametrization,
        }),
        _ => Err(errors),
    }
}

fn validate_task(raw: &RawTask) -> Result<TaskSpec, Vec<ConfigError>> {
    let mut errors = Vec::new();
    let fail = |msg: &str| ConfigError {
        message: format!("[task] {msg}"),
        line: None,
    };
    let spec = match raw.kind.as_str() {
        "preserve" => match (&raw.levels, raw.max_level) {
            (Some(_), Some(_)) => {
                errors.push(fail("give either 'levels' or 'max_level', not both"));
                None
            }
            (Some(levels), None) => Some(TaskSpec::Preserve {
                levels: LevelSelection::Explicit(levels.clone()),
            }),
            (None, Some(k)) => Some(TaskSpec::Preserve {
                levels: LevelSelection::First(k),
            }),
            (None, None) => {
                errors.push(fail("preserve needs 'levels' or 'max_level'"));
                None
            }
        },
        "new-eigenvalues" => match &raw.intervals {
            Some(list) if !list.is_empty() => {
                let mut intervals = Vec::new();
                for (i, pair) in list.iter().enumerate() {
                    if pair.len() != 2 {
                        errors.push(fail(&format!(
                            "intervals[{i}] must be a [lo, hi] pair, got {} entries",
                            pair.len()
                        )));
                    } else {
                        intervals.push((pair[0], pair[1]));
                    }
                }
                Some(TaskSpec::NewEigenvalues {
                    intervals,
                    plot_grid: raw.plot_grid.unwrap_or(0),
                })
            }
            _ => {
                errors.push(fail("new-eigenvalues needs a nonempty 'intervals' list"));
                None
            }
        },
        "resolvent-probe" => {
            let z = raw.z.as_ref().and_then(|v| {
                match value_to_complex(v, "[task] z") {
                    Ok(z) => Some(z),
                    Err(e) => {
                        errors.push(e);
                        None
                    }
                }
            });
            let phi = raw.phi.as_ref().map(|entries| {
                entries
                    .iter()
                    .enumerate()
                    .filter_map(|(i, e)| {
                        match value_to_complex(&e.value, &format!("[task] phi[{i}].value")) {
                            Ok(v) => Some((e.level, e.index, v)),
                            Err(err) => {
                                errors.push(err);
                                None
                            }
                        }
                    })
                    .collect::<Vec<_>>()
            });
            match (z, phi) {
                (Some(z), Some(phi)) if !phi.is_empty() => {
                    Some(TaskSpec::ResolventProbe { z, phi })
                }
                _ => {
                    errors.push(fail("resolvent-probe needs 'z' and a nonempty 'phi' list"));
                    None
                }
            }
        }
        "render-bc" => Some(TaskSpec::RenderBc),
        "eigenfunction" => match raw.level {
            Some(level) => Some(TaskSpec::Eigenfunction {
                level,
                samples: raw.samples.unwrap_or(200),
            }),
            None => {
                errors.push(fail("eigenfunction needs 'level'"));
                None
            }
        },
        other => {
            errors.push(fail(&format!(
                "unknown kind '{other}' (expected preserve | new-eigenvalues | resolvent-probe | render-bc | eigenfunction)"
            )));
            None
        }
    };
    match spec {
        Some(s) if errors.is_empty() => Ok(s),
        _ => Err(errors),
    }
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, Vec<ConfigError>> {
    let raw: RawConfig = match toml::from_str(text) {
        Ok(raw) => raw,
        Err(e) => {
            let line = e.span().map(|span| {
                text[..span.start.min(text.len())]
                    .bytes()
                    .filter(|&b| b == b'\n')
                    .count()
                    + 1
            });
            return Err(vec![ConfigError {
                message: e.message().to_string(),
                line,
            }]);
        }
    };
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    let model = validate_model(&raw.model).map_err(|mut e| errors.append(&mut e));
    let extension =
        validate_extension(&raw.extension, &mut warnings).map_err(|mut e| errors.append(&mut e));
    let task = validate_task(&raw.task).map_err(|mut e| errors.append(&mut e));
    if !errors.is_empty() {
        return Err(errors);
    }
    let tolerances = {
        let d = ToleranceSpec::default();
        ToleranceSpec {
            rank: raw.tolerances.rank.unwrap_or(d.rank),
            root: raw.tolerances.root.unwrap_or(d.root),
            trunc: raw.tolerances.trunc.unwrap_or(d.trunc),
            grid: raw.tolerances.grid.unwrap_or(d.grid),
        }
    };
    Ok(RunConfig {
        model: model.expect("validated"),
        extension: extension.expect("validated"),
        task: task.expect("validated"),
        tolerances,
        warnings,
    })
}
