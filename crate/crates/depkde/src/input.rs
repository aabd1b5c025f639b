//! Reading a series of draws: one real per line, or a single-column CSV
//! whose first row may be a header. Draws keep file order.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use depkde_core::Sample;

use crate::error::{CliError, CliResult};

fn looks_like_header(field: &str) -> bool {
    field
        .chars()
        .next()
        .is_some_and(|c| c.is_alphabetic() || c == '_' || c == '"')
}

/// Parses the draws in `reader`; `source_name` labels error messages.
pub fn parse_series<R: Read>(reader: R, source_name: &str) -> CliResult<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut first = true;
    loop {
        let more = rdr.read_record(&mut record).map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Parse {
                source_name: source_name.to_string(),
                line,
                message: e.to_string(),
            }
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        let err = |message: String| CliError::Parse {
            source_name: source_name.to_string(),
            line,
            message,
        };
        if record.len() != 1 {
            return Err(err(format!("expected one column, found {}", record.len())));
        }
        let field = &record[0];
        let was_first = std::mem::replace(&mut first, false);
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(_) => return Err(err(format!("value {field:?} is not finite"))),
            Err(_) if was_first && looks_like_header(field) => {}
            Err(_) => return Err(err(format!("cannot parse {field:?} as a number"))),
        }
    }
    Ok(values)
}

pub fn read_series(path: &Path) -> CliResult<Vec<f64>> {
    let file = File::open(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    parse_series(file, &path.display().to_string())
}

pub fn read_sample(path: &Path) -> CliResult<Sample> {
    let values = read_series(path)?;
    if values.is_empty() {
        return Err(CliError::input(format!("{}: no values", path.display())));
    }
    Sample::new(values).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> CliResult<Vec<f64>> {
        parse_series(text.as_bytes(), "test")
    }

    #[test]
    fn plain_lines() {
        assert_eq!(parse("1\n2.5\n-3e-2\n").unwrap(), vec![1.0, 2.5, -0.03]);
        assert_eq!(parse("1\n\n2\n").unwrap(), vec![1.0, 2.0]);
        assert_eq!(parse(" 4 \r\n5\r\n").unwrap(), vec![4.0, 5.0]);
    }

    #[test]
    fn optional_header() {
        assert_eq!(parse("x\n1\n2\n").unwrap(), vec![1.0, 2.0]);
        assert_eq!(parse("\"draw\"\n1\n").unwrap(), vec![1.0]);
        // only the first row may be a header
        let err = parse("1\nx\n").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse("1\n2\n3,4\n").unwrap_err() {
            CliError::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("one column"));
            }
            e => panic!("{e}"),
        }
        assert!(matches!(
            parse("1\nNaN\n").unwrap_err(),
            CliError::Parse { line: 2, .. }
        ));
        assert!(matches!(
            parse("1\n1.2.3\n").unwrap_err(),
            CliError::Parse { line: 2, .. }
        ));
        assert_eq!(parse("1\n1.2.3\n").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn empty_input() {
        assert!(parse("").unwrap().is_empty());
        assert!(parse("value\n").unwrap().is_empty());
    }
}
