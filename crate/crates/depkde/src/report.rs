//! Output files. CSV numbers carry 17 significant digits so that values read
//! back are bit-identical; every file starts with `# key=value` lines echoing
//! the effective configuration.

use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use depkde_core::experiment::{MethodSummary, ReplicateRecord, ReplicateSummary, StudyMethod};
use depkde_core::selectors::{Boundary, SelectorResult};

use crate::error::{CliError, CliResult};

pub const RECORD_COLUMNS: [&str; 7] = ["method", "replicate", "h", "ise", "zeta", "acceptance", "iat"];
pub const SUMMARY_COLUMNS: [&str; 8] = [
    "method",
    "replicates",
    "failures",
    "mean_h",
    "se_h",
    "mean_ise",
    "se_ise",
    "mean_zeta",
];

/// Formats a float with 17 significant digits.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn write_header<W: Write + ?Sized>(w: &mut W, echo: &[(String, String)]) -> io::Result<()> {
    for (k, v) in echo {
        writeln!(w, "# {k}={v}")?;
    }
    Ok(())
}

/// `runs.csv` → `runs.summary.csv`.
pub fn summary_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = out
        .extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    out.with_file_name(format!("{stem}.summary.{ext}"))
}

pub fn write_records_csv<W: Write + ?Sized>(
    w: &mut W,
    echo: &[(String, String)],
    summary: &ReplicateSummary,
) -> io::Result<()> {
    write_header(w, echo)?;
    writeln!(w, "{}", RECORD_COLUMNS.join(","))?;
    for r in summary.records() {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.method,
            r.replicate,
            num(r.h),
            num(r.ise),
            num(r.zeta),
            num(r.acceptance),
            num(r.iat)
        )?;
    }
    Ok(())
}

pub fn write_summary_csv<W: Write + ?Sized>(
    w: &mut W,
    echo: &[(String, String)],
    summary: &ReplicateSummary,
) -> io::Result<()> {
    write_header(w, echo)?;
    writeln!(w, "{}", SUMMARY_COLUMNS.join(","))?;
    for m in &summary.methods {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            m.method,
            m.replicates,
            m.failures,
            num(m.mean_h),
            opt(m.se_h),
            num(m.mean_ise),
            opt(m.se_ise),
            num(m.mean_zeta)
        )?;
    }
    Ok(())
}

/// Failures go to their own lines after the summary, as comments.
pub fn write_failures<W: Write + ?Sized>(w: &mut W, summary: &ReplicateSummary) -> io::Result<()> {
    for o in &summary.outcomes {
        for f in &o.failures {
            writeln!(
                w,
                "# failure method={} replicate={} error={}",
                f.method, f.replicate, f.error
            )?;
        }
    }
    Ok(())
}

fn summary_json(m: &MethodSummary) -> Value {
    json!({
        "replicates": m.replicates,
        "failures": m.failures,
        "mean_h": m.mean_h,
        "se_h": m.se_h,
        "mean_ise": m.mean_ise,
        "se_ise": m.se_ise,
        "mean_zeta": m.mean_zeta,
    })
}

fn echo_json(echo: &[(String, String)]) -> Value {
    Value::Object(
        echo.iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect(),
    )
}

/// One object: the configuration, a summary keyed by method, one object per
/// record, and the failures.
pub fn study_json(echo: &[(String, String)], summary: &ReplicateSummary) -> Value {
    let mut by_method = Map::new();
    for m in &summary.methods {
        by_method.insert(m.method.to_string(), summary_json(m));
    }
    let records: Vec<Value> = summary
        .records()
        .map(|r| {
            json!({
                "method": r.method.name(),
                "replicate": r.replicate,
                "h": r.h,
                "ise": r.ise,
                "zeta": r.zeta,
                "acceptance": r.acceptance,
                "iat": r.iat,
            })
        })
        .collect();
    let failures: Vec<Value> = summary
        .outcomes
        .iter()
        .flat_map(|o| o.failures.iter())
        .map(|f| json!({"method": f.method.name(), "replicate": f.replicate, "error": f.error}))
        .collect();
    json!({
        "config": echo_json(echo),
        "summary": Value::Object(by_method),
        "records": records,
        "failures": failures,
    })
}

fn parse_err(source_name: &str, line: u64, message: impl Into<String>) -> CliError {
    CliError::Parse {
        source_name: source_name.to_string(),
        line,
        message: message.into(),
    }
}

/// Reads records written by [`write_records_csv`].
pub fn read_records_csv<R: Read>(reader: R, source_name: &str) -> CliResult<Vec<ReplicateRecord>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(source_name, 0, e.to_string()))?
        .clone();
    if headers.iter().ne(RECORD_COLUMNS.iter().copied()) {
        return Err(parse_err(
            source_name,
            0,
            format!("expected columns {}", RECORD_COLUMNS.join(",")),
        ));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(source_name, line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let float = |i: usize| {
            row[i]
                .parse::<f64>()
                .map_err(|e| parse_err(source_name, line, format!("{}: {e}", RECORD_COLUMNS[i])))
        };
        out.push(ReplicateRecord {
            method: row[0]
                .parse::<StudyMethod>()
                .map_err(|e| parse_err(source_name, line, e.to_string()))?,
            replicate: row[1]
                .parse()
                .map_err(|e| parse_err(source_name, line, format!("replicate: {e}")))?,
            h: float(2)?,
            ise: float(3)?,
            zeta: float(4)?,
            acceptance: float(5)?,
            iat: float(6)?,
        });
    }
    Ok(out)
}

fn boundary_name(b: Boundary) -> &'static str {
    match b {
        Boundary::None => "none",
        Boundary::Lo => "lo",
        Boundary::Hi => "hi",
    }
}

pub fn write_select_csv<W: Write + ?Sized>(
    w: &mut W,
    echo: &[(String, String)],
    n: usize,
    res: &SelectorResult,
) -> io::Result<()> {
    write_header(w, echo)?;
    writeln!(
        w,
        "method,n,h,zeta,objective,evaluations,converged,boundary,flags"
    )?;
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{}",
        res.method,
        n,
        num(res.h),
        num(res.zeta_at_h),
        num(res.objective_at_h),
        res.evaluations,
        res.converged,
        boundary_name(res.boundary_hit),
        res.flags.describe()
    )
}

pub fn select_json(echo: &[(String, String)], n: usize, res: &SelectorResult) -> Value {
    let objective = if res.objective_at_h.is_finite() {
        json!(res.objective_at_h)
    } else {
        Value::Null
    };
    json!({
        "config": echo_json(echo),
        "method": res.method.name(),
        "n": n,
        "h": res.h,
        "zeta": res.zeta_at_h,
        "objective": objective,
        "evaluations": res.evaluations,
        "converged": res.converged,
        "boundary": boundary_name(res.boundary_hit),
        "flags": res.flags.describe(),
    })
}

/// Grid points and density values, with an optional per-point IAT column.
pub struct Curve {
    pub h: f64,
    pub x: Vec<f64>,
    pub density: Vec<f64>,
    pub iat: Option<Vec<f64>>,
}

pub fn write_curve_csv<W: Write + ?Sized>(
    w: &mut W,
    echo: &[(String, String)],
    curve: &Curve,
) -> io::Result<()> {
    write_header(w, echo)?;
    writeln!(w, "# h={}", num(curve.h))?;
    match &curve.iat {
        Some(iat) => {
            writeln!(w, "x,density,iat")?;
            for ((x, d), t) in curve.x.iter().zip(&curve.density).zip(iat) {
                writeln!(w, "{},{},{}", num(*x), num(*d), num(*t))?;
            }
        }
        None => {
            writeln!(w, "x,density")?;
            for (x, d) in curve.x.iter().zip(&curve.density) {
                writeln!(w, "{},{}", num(*x), num(*d))?;
            }
        }
    }
    Ok(())
}

pub fn curve_json(echo: &[(String, String)], curve: &Curve) -> Value {
    let mut obj = json!({
        "config": echo_json(echo),
        "h": curve.h,
        "x": curve.x,
        "density": curve.density,
    });
    if let Some(iat) = &curve.iat {
        obj["iat"] = json!(iat);
    }
    obj
}
