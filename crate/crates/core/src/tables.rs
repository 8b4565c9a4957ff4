//! Text formats for sum-function tables and interval-function instances,
//! plus atomic file output.
//!
//! Sum-function table:
//! ```text
//! # sum-function v1
//! <s> <value>
//! ```
//! Interval-function table:
//! ```text
//! # interval-fn2 v1
//! # dom1 <lo> <hi> <step>
//! # dom2 <lo> <hi> <step>
//! <p> <q> <value>
//! ```
//! Numbers are written in fixed decimal with 17 significant digits, which
//! round-trips every finite double.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::glue::{IntervalFn2, IntervalSpec};
use crate::model::{Interpolation, SumFunction};

pub const SUM_FUNCTION_HEADER: &str = "# sum-function v1";
pub const INTERVAL_FN2_HEADER: &str = "# interval-fn2 v1";

/// Fixed-decimal rendering with 17 significant digits.
pub fn fixed17(v: f64) -> String {
    if v == 0.0 {
        return format!("{:.16}", 0.0);
    }
    let sci = format!("{v:.16e}");
    let exp: i32 = sci
        .rsplit('e')
        .next()
        .and_then(|e| e.parse().ok())
        .unwrap_or(0);
    let decimals = (16 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn format_sum_function(phi: &SumFunction) -> String {
    let mut out = String::from(SUM_FUNCTION_HEADER);
    out.push('\n');
    for (s, v) in phi.knots().iter().zip(phi.values()) {
        out.push_str(&format!("{} {}\n", fixed17(*s), fixed17(*v)));
    }
    out
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_num(path: &Path, line: usize, tok: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(path, line, format!("`{tok}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("`{tok}` is not finite")));
    }
    Ok(v)
}

/// Data lines (1-based line number, tokens), skipping blanks and comments.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.trim();
        (!l.is_empty() && !l.starts_with('#')).then(|| (i + 1, l.split_whitespace().collect()))
    })
}

fn check_header(path: &Path, text: &str, header: &str) -> Result<()> {
    match text.lines().next() {
        Some(first) if first.trim() == header => Ok(()),
        _ => Err(parse_err(path, 1, format!("expected header `{header}`"))),
    }
}

/// Parses a sum-function table; `path` is used in error messages only.
pub fn parse_sum_function(path: &Path, text: &str, interpolation: Interpolation) -> Result<SumFunction> {
    check_header(path, text, SUM_FUNCTION_HEADER)?;
    let mut knots = Vec::new();
    let mut values = Vec::new();
    for (line, toks) in data_lines(text) {
        if toks.len() != 2 {
            return Err(parse_err(path, line, "expected `s value`"));
        }
        knots.push(parse_num(path, line, toks[0])?);
        values.push(parse_num(path, line, toks[1])?);
    }
    SumFunction::new(knots, values, interpolation).map_err(|e| parse_err(path, 0, e.to_string()))
}

pub fn format_interval_fn2(g: &IntervalFn2) -> String {
    let dom = |name: &str, d: &IntervalSpec| {
        format!("# {name} {} {} {}\n", fixed17(d.lo()), fixed17(d.hi()), fixed17(d.step()))
    };
    let mut out = format!("{INTERVAL_FN2_HEADER}\n");
    out.push_str(&dom("dom1", g.dom1()));
    out.push_str(&dom("dom2", g.dom2()));
    for i in 0..g.dom1().len() {
        for j in 0..g.dom2().len() {
            out.push_str(&format!(
                "{} {} {}\n",
                fixed17(g.dom1().point(i)),
                fixed17(g.dom2().point(j)),
                fixed17(g.at(i, j))
            ));
        }
    }
    out
}

fn parse_domain(path: &Path, text: &str, name: &str) -> Result<IntervalSpec> {
    let prefix = format!("# {name} ");
    let (idx, line) = text
        .lines()
        .enumerate()
        .find(|(_, l)| l.trim_start().starts_with(&prefix))
        .ok_or_else(|| parse_err(path, 0, format!("missing `# {name} lo hi step` line")))?;
    let toks: Vec<&str> = line.split_whitespace().skip(2).collect();
    if toks.len() != 3 {
        return Err(parse_err(path, idx + 1, format!("expected `# {name} lo hi step`")));
    }
    let nums: Vec<f64> = toks
        .iter()
        .map(|t| parse_num(path, idx + 1, t))
        .collect::<Result<_>>()?;
    IntervalSpec::new(nums[0], nums[1], nums[2]).map_err(|e| parse_err(path, idx + 1, e.to_string()))
}

/// Parses an interval-function table; every lattice pair must appear once.
pub fn parse_interval_fn2(path: &Path, text: &str) -> Result<IntervalFn2> {
    check_header(path, text, INTERVAL_FN2_HEADER)?;
    let dom1 = parse_domain(path, text, "dom1")?;
    let dom2 = parse_domain(path, text, "dom2")?;
    let total = dom1
        .len()
        .checked_mul(dom2.len())
        .filter(|t| *t <= 50_000_000)
        .ok_or_else(|| parse_err(path, 0, "lattice is too large"))?;
    let mut table: Vec<Option<f64>> = vec![None; total];
    for (line, toks) in data_lines(text) {
        if toks.len() != 3 {
            return Err(parse_err(path, line, "expected `p q value`"));
        }
        let p = parse_num(path, line, toks[0])?;
        let q = parse_num(path, line, toks[1])?;
        let v = parse_num(path, line, toks[2])?;
        let (i, j) = match (dom1.index_of(p), dom2.index_of(q)) {
            (Some(i), Some(j)) => (i, j),
            _ => return Err(parse_err(path, line, format!("({p}, {q}) is off the lattice"))),
        };
        let slot = &mut table[i * dom2.len() + j];
        if slot.is_some() {
            return Err(parse_err(path, line, format!("duplicate entry for ({p}, {q})")));
        }
        *slot = Some(v);
    }
    let missing = table.iter().filter(|v| v.is_none()).count();
    if missing > 0 {
        return Err(parse_err(path, 0, format!("{missing} lattice entries are missing")));
    }
    IntervalFn2::new(dom1, dom2, table.into_iter().flatten().collect())
        .map_err(|e| parse_err(path, 0, e.to_string()))
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// Writes `contents` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::usage(format!("`{}` is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp: PathBuf = path.with_file_name(tmp_name);
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(contents.as_bytes())?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(io_err(path, e));
    }
    Ok(())
}
