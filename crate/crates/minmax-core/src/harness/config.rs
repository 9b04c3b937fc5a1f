//! Flat key-value experiment configuration with nested array literals for
//! matrices and a small grammar for feasible sets. Parsing is dependency-free
//! so experiment files stay diff-friendly.

use crate::matrix::Mat;
use crate::sets::FeasibleSet;
use crate::solvers::SolverKind;
use crate::zoo::{self, Family, ProblemSpec};
use crate::{Error, Result, SaddleProblem};
use std::collections::BTreeSet;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemRef {
    Named(String),
    Inline(Box<ProblemSpec>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// Metric series eligible for rate fitting in the summary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricName {
    Gap,
    Residual,
    StepNorm,
}

impl MetricName {
    pub const ALL: [MetricName; 3] = [MetricName::Gap, MetricName::Residual, MetricName::StepNorm];

    pub fn name(&self) -> &'static str {
        match self {
            MetricName::Gap => "gap",
            MetricName::Residual => "residual",
            MetricName::StepNorm => "step_norm",
        }
    }
}

impl FromStr for MetricName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gap" => Ok(MetricName::Gap),
            "residual" => Ok(MetricName::Residual),
            "step_norm" => Ok(MetricName::StepNorm),
            other => Err(Error::InvalidConfig(format!(
                "metrics: unknown metric {other:?}; available: gap, residual, step_norm"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub problem: ProblemRef,
    pub solvers: Vec<SolverKind>,
    pub t_horizon: usize,
    /// `None` means "auto" (`γ = 1/(2L)`).
    pub gamma: Option<f64>,
    /// `None` means "auto" (bounded/unbounded rule by set diameter).
    pub k: Option<u32>,
    /// Seeds comparator sampling and the power-iteration start vector.
    pub seed: u64,
    pub metrics: Vec<MetricName>,
    pub output: PathBuf,
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn problem_name(&self) -> String {
        match &self.problem {
            ProblemRef::Named(name) => name.clone(),
            ProblemRef::Inline(spec) => spec.name.clone(),
        }
    }

    pub fn resolve_problem(&self) -> Result<SaddleProblem> {
        match &self.problem {
            ProblemRef::Named(name) => zoo::builtin_spec(name)?.build_seeded(self.seed),
            ProblemRef::Inline(spec) => spec.build_seeded(self.seed),
        }
    }
}

/// Splits config text into ordered `key = value` entries. Rejects duplicate
/// keys and lines without `=`; `#` starts a comment.
pub fn parse_entries(text: &str) -> Result<Vec<(String, String)>> {
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(Error::InvalidConfig(format!(
                "line {}: expected `key = value`, got {line:?}",
                lineno + 1
            )));
        };
        let key = line[..eq].trim().to_string();
        let value = line[eq + 1..].trim().to_string();
        if key.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "line {}: empty key",
                lineno + 1
            )));
        }
        if !seen.insert(key.clone()) {
            return Err(Error::InvalidConfig(format!(
                "{key}: key appears more than once"
            )));
        }
        entries.push((key, value));
    }
    Ok(entries)
}

/// Parses a whole config file.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    build_config(&parse_entries(text)?)
}

/// Builds a config from entries (file entries plus any CLI overrides; later
/// duplicates are expected to have been merged by the caller).
pub fn build_config(entries: &[(String, String)]) -> Result<ExperimentConfig> {
    let mut known: BTreeSet<&str> = BTreeSet::new();
    let get = |key: &str| -> Option<&str> {
        entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    };

    for (key, _) in entries {
        let ok = matches!(
            key.as_str(),
            "problem" | "solvers" | "T" | "gamma" | "k" | "seed" | "metrics" | "output" | "format"
        ) || key.starts_with("problem.");
        if !ok {
            return Err(Error::InvalidConfig(format!("{key}: unknown key")));
        }
        known.insert(key.as_str());
    }

    let problem_value = get("problem")
        .ok_or_else(|| Error::InvalidConfig("problem: missing required key".into()))?;
    let problem = if problem_value == "inline" {
        ProblemRef::Inline(Box::new(parse_inline_problem(entries)?))
    } else {
        if entries.iter().any(|(k, _)| k.starts_with("problem.")) {
            return Err(Error::InvalidConfig(
                "problem.*: inline problem keys need `problem = inline`".into(),
            ));
        }
        ProblemRef::Named(problem_value.to_string())
    };

    let solvers_value = get("solvers")
        .ok_or_else(|| Error::InvalidConfig("solvers: missing required key".into()))?;
    let mut solvers = Vec::new();
    for part in solvers_value.split(',') {
        let name = part.trim();
        if name.is_empty() {
            continue;
        }
        let kind = SolverKind::from_str(name)
            .map_err(|e| Error::InvalidConfig(format!("solvers: {e}")))?;
        if solvers.contains(&kind) {
            return Err(Error::InvalidConfig(format!(
                "solvers: duplicate entry {name:?}"
            )));
        }
        solvers.push(kind);
    }
    if solvers.is_empty() {
        return Err(Error::InvalidConfig(
            "solvers: at least one solver required".into(),
        ));
    }

    let t_value = get("T").ok_or_else(|| Error::InvalidConfig("T: missing required key".into()))?;
    let t_horizon: usize = t_value.parse().map_err(|_| {
        Error::InvalidConfig(format!("T: expected a positive integer, got {t_value:?}"))
    })?;
    if t_horizon < 1 {
        return Err(Error::InvalidConfig("T: must be at least 1".into()));
    }

    let gamma = match get("gamma").unwrap_or("auto") {
        "auto" => None,
        v => Some(v.parse::<f64>().map_err(|_| {
            Error::InvalidConfig(format!("gamma: expected a number or \"auto\", got {v:?}"))
        })?),
    };

    let k = match get("k").unwrap_or("auto") {
        "auto" => None,
        v => Some(v.parse::<u32>().map_err(|_| {
            Error::InvalidConfig(format!(
                "k: expected a positive integer or \"auto\", got {v:?}"
            ))
        })?),
    };

    let seed = match get("seed") {
        None => 0,
        Some(v) => v
            .parse::<u64>()
            .map_err(|_| Error::InvalidConfig(format!("seed: expected an integer, got {v:?}")))?,
    };

    let metrics = match get("metrics") {
        None => MetricName::ALL.to_vec(),
        Some(v) => {
            let mut out = Vec::new();
            for part in v.split(',') {
                let name = part.trim();
                if name.is_empty() {
                    continue;
                }
                let metric = MetricName::from_str(name)?;
                if !out.contains(&metric) {
                    out.push(metric);
                }
            }
            out
        }
    };

    let output = PathBuf::from(get("output").unwrap_or("out"));

    let format = match get("format").unwrap_or("csv") {
        "csv" => OutputFormat::Csv,
        "json" => OutputFormat::Json,
        v => {
            return Err(Error::InvalidConfig(format!(
                "format: expected csv or json, got {v:?}"
            )))
        }
    };

    Ok(ExperimentConfig {
        problem,
        solvers,
        t_horizon,
        gamma,
        k,
        seed,
        metrics,
        output,
        format,
    })
}

fn parse_inline_problem(entries: &[(String, String)]) -> Result<ProblemSpec> {
    let get = |key: &str| -> Option<&str> {
        entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    };
    let family_kind = get("problem.family").ok_or_else(|| {
        Error::InvalidConfig("problem.family: required for inline problems".into())
    })?;
    let matrix = |key: &str| -> Result<Option<Mat>> {
        match get(key) {
            None => Ok(None),
            Some(text) => {
                let rows = parse_matrix(text).map_err(|e| prefix(key, e))?;
                Ok(Some(Mat::from_rows(&rows).map_err(|e| prefix(key, e))?))
            }
        }
    };

    let mut family = match family_kind {
        "bilinear" => {
            let a = matrix("problem.a")?.ok_or_else(|| {
                Error::InvalidConfig("problem.a: required for bilinear problems".into())
            })?;
            Family::Bilinear { a }
        }
        "quadratic" => {
            let p = matrix("problem.p")?.ok_or_else(|| {
                Error::InvalidConfig("problem.p: required for quadratic problems".into())
            })?;
            let a = matrix("problem.a")?.ok_or_else(|| {
                Error::InvalidConfig("problem.a: required for quadratic problems".into())
            })?;
            let q = matrix("problem.q")?.ok_or_else(|| {
                Error::InvalidConfig("problem.q: required for quadratic problems".into())
            })?;
            Family::Quadratic { p, a, q }
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "problem.family: expected bilinear or quadratic, got {other:?}"
            )))
        }
    };

    let (n, m) = family.dims();
    let set = match get("problem.set") {
        None => FeasibleSet::unconstrained(n + m),
        Some(text) => {
            let set = parse_set(text).map_err(|e| prefix("problem.set", e))?;
            if set.dim() != n + m {
                return Err(Error::InvalidConfig(format!(
                    "problem.set: dimension {} does not match n+m = {}",
                    set.dim(),
                    n + m
                )));
            }
            set
        }
    };

    if let Some(text) = get("problem.shift") {
        let shift = parse_vector(text).map_err(|e| prefix("problem.shift", e))?;
        if shift.len() != n + m {
            return Err(Error::InvalidConfig(format!(
                "problem.shift: expected {} entries, got {}",
                n + m,
                shift.len()
            )));
        }
        if !matches!(set, FeasibleSet::Unconstrained { .. }) {
            return Err(Error::InvalidConfig(
                "problem.shift: shifts need an unconstrained set".into(),
            ));
        }
        family = Family::Translated {
            base: Box::new(family),
            shift,
        };
    }

    let name = get("problem.name").unwrap_or("inline").to_string();
    let mut spec = ProblemSpec::new(name, family, set);
    if let Some(text) = get("problem.z0") {
        let z0 = parse_vector(text).map_err(|e| prefix("problem.z0", e))?;
        if z0.len() != n + m {
            return Err(Error::InvalidConfig(format!(
                "problem.z0: expected {} entries, got {}",
                n + m,
                z0.len()
            )));
        }
        spec = spec.with_start(z0);
    }
    Ok(spec)
}

fn prefix(key: &str, e: Error) -> Error {
    Error::InvalidConfig(format!("{key}: {e}"))
}

/// Nested array literal: numbers and bracketed lists.
#[derive(Clone, Debug)]
enum ArrayLit {
    Num(f64),
    List(Vec<ArrayLit>),
}

fn parse_array(text: &str) -> Result<ArrayLit> {
    let mut chars = text.char_indices().peekable();
    let lit = parse_array_inner(text, &mut chars)?;
    skip_ws(&mut chars);
    if let Some((pos, c)) = chars.next() {
        return Err(Error::InvalidConfig(format!(
            "unexpected {c:?} at byte {pos}"
        )));
    }
    Ok(lit)
}

type CharStream<'a> = std::iter::Peekable<std::str::CharIndices<'a>>;

fn skip_ws(chars: &mut CharStream) {
    while matches!(chars.peek(), Some((_, c)) if c.is_whitespace()) {
        chars.next();
    }
}

fn parse_array_inner(text: &str, chars: &mut CharStream) -> Result<ArrayLit> {
    skip_ws(chars);
    match chars.peek().copied() {
        Some((_, '[')) => {
            chars.next();
            let mut items = Vec::new();
            loop {
                skip_ws(chars);
                match chars.peek().copied() {
                    Some((_, ']')) => {
                        chars.next();
                        break;
                    }
                    Some(_) => {
                        items.push(parse_array_inner(text, chars)?);
                        skip_ws(chars);
                        if matches!(chars.peek(), Some((_, ','))) {
                            chars.next();
                        }
                    }
                    None => {
                        return Err(Error::InvalidConfig("unclosed `[`".into()));
                    }
                }
            }
            Ok(ArrayLit::List(items))
        }
        Some((start, _)) => {
            let mut end = start;
            while let Some((pos, c)) = chars.peek().copied() {
                if c == ',' || c == ']' || c == ')' || c.is_whitespace() {
                    break;
                }
                end = pos + c.len_utf8();
                chars.next();
            }
            let token = &text[start..end];
            let v: f64 = token
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("expected a number, got {token:?}")))?;
            Ok(ArrayLit::Num(v))
        }
        None => Err(Error::InvalidConfig("expected an array literal".into())),
    }
}

fn parse_vector(text: &str) -> Result<Vec<f64>> {
    match parse_array(text)? {
        ArrayLit::List(items) => items
            .into_iter()
            .map(|item| match item {
                ArrayLit::Num(v) => Ok(v),
                ArrayLit::List(_) => Err(Error::InvalidConfig("expected a flat vector".into())),
            })
            .collect(),
        ArrayLit::Num(v) => Ok(vec![v]),
    }
}

fn parse_matrix(text: &str) -> Result<Vec<Vec<f64>>> {
    match parse_array(text)? {
        ArrayLit::List(items) => {
            if items.iter().all(|i| matches!(i, ArrayLit::Num(_))) {
                // a flat list is a single row
                return Ok(vec![items
                    .into_iter()
                    .map(|i| match i {
                        ArrayLit::Num(v) => v,
                        _ => unreachable!(),
                    })
                    .collect()]);
            }
            items
                .into_iter()
                .enumerate()
                .map(|(r, row)| match row {
                    ArrayLit::List(cells) => cells
                        .into_iter()
                        .map(|c| match c {
                            ArrayLit::Num(v) => Ok(v),
                            ArrayLit::List(_) => {
                                Err(Error::InvalidConfig(format!("row {r}: nested too deep")))
                            }
                        })
                        .collect(),
                    ArrayLit::Num(_) => Err(Error::InvalidConfig(format!(
                        "row {r}: expected a bracketed row"
                    ))),
                })
                .collect()
        }
        ArrayLit::Num(v) => Ok(vec![vec![v]]),
    }
}

/// Set grammar: `unconstrained(d)`, `ball([c...], r)`, `box([l...], [u...])`,
/// `simplex(d)`, `product(set, set, ...)`.
pub(crate) fn parse_set(text: &str) -> Result<FeasibleSet> {
    let (set, rest) = parse_set_prefix(text.trim())?;
    if !rest.trim().is_empty() {
        return Err(Error::InvalidConfig(format!(
            "unexpected trailing input {rest:?}"
        )));
    }
    Ok(set)
}

fn parse_set_prefix(text: &str) -> Result<(FeasibleSet, &str)> {
    let text = text.trim_start();
    let open = text
        .find('(')
        .ok_or_else(|| Error::InvalidConfig(format!("expected `kind(...)`, got {text:?}")))?;
    let kind = text[..open].trim();
    let body_start = open + 1;
    // find the matching close paren
    let mut depth = 1usize;
    let mut close = None;
    for (i, c) in text[body_start..].char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    close = Some(body_start + i);
                    break;
                }
            }
            _ => {}
        }
    }
    let close = close.ok_or_else(|| Error::InvalidConfig(format!("unclosed `(` in {text:?}")))?;
    let body = &text[body_start..close];
    let rest = &text[close + 1..];

    let set = match kind {
        "unconstrained" => {
            let dim: usize = body.trim().parse().map_err(|_| {
                Error::InvalidConfig(format!("unconstrained: expected a dimension, got {body:?}"))
            })?;
            FeasibleSet::unconstrained(dim)
        }
        "simplex" => {
            let dim: usize = body.trim().parse().map_err(|_| {
                Error::InvalidConfig(format!("simplex: expected a dimension, got {body:?}"))
            })?;
            FeasibleSet::simplex(dim)?
        }
        "ball" => {
            let args = split_top_level(body);
            if args.len() != 2 {
                return Err(Error::InvalidConfig(format!(
                    "ball: expected (center, radius), got {body:?}"
                )));
            }
            let center = parse_vector(args[0])?;
            let radius: f64 = args[1].trim().parse().map_err(|_| {
                Error::InvalidConfig(format!("ball: expected a radius, got {:?}", args[1]))
            })?;
            FeasibleSet::ball(center, radius)?
        }
        "box" => {
            let args = split_top_level(body);
            if args.len() != 2 {
                return Err(Error::InvalidConfig(format!(
                    "box: expected (lower, upper), got {body:?}"
                )));
            }
            FeasibleSet::boxed(parse_vector(args[0])?, parse_vector(args[1])?)?
        }
        "product" => {
            let args = split_top_level(body);
            let mut parts = Vec::new();
            for arg in args {
                parts.push(parse_set(arg)?);
            }
            FeasibleSet::product(parts)?
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown set kind {other:?}; available: unconstrained, ball, box, simplex, product"
            )))
        }
    };
    Ok((set, rest))
}

/// Splits on commas that are not nested inside brackets or parens.
fn split_top_level(body: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in body.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(&body[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if !body[start..].trim().is_empty() {
        parts.push(&body[start..]);
    }
    parts
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# experiment
problem = MP
solvers = ceg, eg
T = 100
gamma = auto
k = auto
seed = 7
metrics = gap, residual
output = results
format = csv
";

    #[test]
    fn parses_a_full_config() {
        let cfg = parse_config(SAMPLE).unwrap();
        assert_eq!(cfg.problem, ProblemRef::Named("MP".into()));
        assert_eq!(cfg.solvers, vec![SolverKind::Ceg, SolverKind::Eg]);
        assert_eq!(cfg.t_horizon, 100);
        assert_eq!(cfg.gamma, None);
        assert_eq!(cfg.k, None);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.metrics, vec![MetricName::Gap, MetricName::Residual]);
        assert_eq!(cfg.format, OutputFormat::Csv);
        let p = cfg.resolve_problem().unwrap();
        assert_eq!(p.name(), "MP");
    }

    #[test]
    fn rejects_duplicate_solvers_naming_the_duplicate() {
        let text = "problem = MP\nsolvers = ceg, eg, ceg\nT = 10\n";
        let err = parse_config(text).unwrap_err().to_string();
        assert!(err.contains("duplicate entry \"ceg\""), "{err}");
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(
            parse_config("problem = MP\nsolvers = ceg\nT = 10\nbogus = 1\n")
                .unwrap_err()
                .to_string()
                .contains("bogus")
        );
        assert!(parse_config("problem = MP\nsolvers = ceg\nT = zero\n")
            .unwrap_err()
            .to_string()
            .contains("T:"));
        assert!(
            parse_config("problem = MP\nsolvers = ceg\nT = 10\nmetrics = speed\n")
                .unwrap_err()
                .to_string()
                .contains("speed")
        );
    }

    #[test]
    fn parses_inline_bilinear_with_sets() {
        let text = "\
problem = inline
problem.name = custom
problem.family = bilinear
problem.a = [[1, -1], [-1, 1]]
problem.set = product(simplex(2), simplex(2))
problem.z0 = [1, 0, 1, 0]
solvers = ceg
T = 10
";
        let cfg = parse_config(text).unwrap();
        let p = cfg.resolve_problem().unwrap();
        assert_eq!(p.name(), "custom");
        assert_eq!(p.split(), (2, 2));
        assert!((p.lipschitz() - 2.0).abs() < 1e-8);
        assert_eq!(p.start().coords(), &[1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn parses_inline_quadratic_and_shift() {
        let text = "\
problem = inline
problem.family = quadratic
problem.p = [[1]]
problem.a = [[1]]
problem.q = [[1]]
problem.shift = [2, 3]
solvers = pp
T = 5
";
        let cfg = parse_config(text).unwrap();
        let p = cfg.resolve_problem().unwrap();
        assert_eq!(p.saddle().unwrap().coords(), &[2.0, 3.0]);
    }

    #[test]
    fn set_grammar_round_trips() {
        let set = parse_set("product(ball([0, 0], 1.5), box([-1], [1]), simplex(3))").unwrap();
        assert_eq!(set.dim(), 6);
        assert!(parse_set("triangle(3)").is_err());
        assert!(parse_set("ball([0], 1) extra").is_err());
    }

    #[test]
    fn entry_parser_handles_comments_and_rejects_duplicates() {
        let entries = parse_entries("a = 1 # trailing\n# full line\n\nb = 2\n").unwrap();
        assert_eq!(
            entries,
            vec![("a".into(), "1".into()), ("b".into(), "2".into())]
        );
        assert!(parse_entries("a = 1\na = 2\n").is_err());
        assert!(parse_entries("just words\n").is_err());
    }

    #[test]
    fn matrix_literal_forms() {
        assert_eq!(
            parse_matrix("[[1, 2], [3, 4]]").unwrap(),
            vec![vec![1.0, 2.0], vec![3.0, 4.0]]
        );
        assert_eq!(parse_matrix("[1]").unwrap(), vec![vec![1.0]]);
        assert!(parse_matrix("[[1], 2]").is_err());
    }
}
