//! CSV emission with per-command schemas.
//!
//! Output is deterministic: a header row always comes first, one record per
//! line, and numbers print as the shortest decimal that round-trips. Timing
//! columns are marked in the schema because their values vary run to run;
//! everything else is reproducible byte for byte under a fixed seed.

use std::fmt;

/// A typed CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Int(v) => write!(f, "{v}"),
            Field::Float(v) => write!(f, "{v}"),
            Field::Bool(v) => write!(f, "{v}"),
            Field::Str(v) => write!(f, "{v}"),
        }
    }
}

impl Field {
    /// Numeric view, for schema-agnostic comparisons.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Field::Int(v) => Some(*v as f64),
            Field::Float(v) => Some(*v),
            _ => None,
        }
    }

    fn parse(token: &str) -> Field {
        if let Ok(v) = token.parse::<i64>() {
            return Field::Int(v);
        }
        if let Ok(v) = token.parse::<f64>() {
            return Field::Float(v);
        }
        match token {
            "true" => Field::Bool(true),
            "false" => Field::Bool(false),
            _ => Field::Str(token.to_string()),
        }
    }
}

/// Ordered column names for one command's output, with the timing columns
/// (exempt from the byte-determinism guarantee) called out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schema {
    pub name: &'static str,
    pub columns: &'static [&'static str],
    pub timing_columns: &'static [&'static str],
}

impl Schema {
    pub fn is_timing_column(&self, name: &str) -> bool {
        self.timing_columns.contains(&name)
    }
}

/// `solve-dense` and `solve-iterative` rows.
pub const SOLVE_SCHEMA: Schema = Schema {
    name: "solve",
    columns: &[
        "mode",
        "n",
        "nnz",
        "backend",
        "iterations",
        "converged",
        "final_residual",
        "a_norm_est",
        "factor_seconds",
        "total_seconds",
    ],
    timing_columns: &["factor_seconds", "total_seconds"],
};

/// `cond-sweep` rows. `predicted_iters` is 0 when the iteration formula is
/// out of its validity range (`kappa * eps_s >= 1`).
pub const COND_SWEEP_SCHEMA: Schema = Schema {
    name: "cond-sweep",
    columns: &[
        "kappa",
        "n",
        "trials",
        "mean_iters",
        "failure_rate",
        "predicted_iters",
    ],
    timing_columns: &[],
};

/// `bench` rows; every column except `n` and `iterations` is timing-derived.
pub const BENCH_SCHEMA: Schema = Schema {
    name: "bench",
    columns: &[
        "n",
        "dp_seconds",
        "sp_seconds",
        "mixed_seconds",
        "speedup_mixed",
        "iterations",
    ],
    timing_columns: &["dp_seconds", "sp_seconds", "mixed_seconds", "speedup_mixed"],
};

#[derive(Debug, Clone, PartialEq)]
pub enum CsvError {
    /// A row's field count does not match the schema.
    SchemaMismatch(String),
}

impl fmt::Display for CsvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CsvError::SchemaMismatch(why) => write!(f, "schema mismatch: {why}"),
        }
    }
}

impl std::error::Error for CsvError {}

/// Render rows under a schema. The header row is always emitted.
pub fn write_csv(rows: &[Vec<Field>], schema: &Schema) -> Result<String, CsvError> {
    let mut out = schema.columns.join(",");
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        if row.len() != schema.columns.len() {
            return Err(CsvError::SchemaMismatch(format!(
                "row {i} has {} fields, schema \"{}\" has {} columns",
                row.len(),
                schema.name,
                schema.columns.len()
            )));
        }
        let mut first = true;
        for field in row {
            if !first {
                out.push(',');
            }
            out.push_str(&field.to_string());
            first = false;
        }
        out.push('\n');
    }
    Ok(out)
}

/// Parse text produced by [`write_csv`] under the same schema. The header
/// must match exactly.
pub fn parse_csv(text: &str, schema: &Schema) -> Result<Vec<Vec<Field>>, CsvError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CsvError::SchemaMismatch("empty document".into()))?;
    let expected = schema.columns.join(",");
    if header != expected {
        return Err(CsvError::SchemaMismatch(format!(
            "header \"{header}\" does not match schema \"{}\"",
            schema.name
        )));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<Field> = line.split(',').map(Field::parse).collect();
        if fields.len() != schema.columns.len() {
            return Err(CsvError::SchemaMismatch(format!(
                "row {i} has {} fields, schema \"{}\" has {} columns",
                fields.len(),
                schema.name,
                schema.columns.len()
            )));
        }
        rows.push(fields);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_rows_emit_header_only() {
        let text = write_csv(&[], &BENCH_SCHEMA).unwrap();
        assert_eq!(
            text,
            "n,dp_seconds,sp_seconds,mixed_seconds,speedup_mixed,iterations\n"
        );
    }

    #[test]
    fn one_row_two_lines() {
        let row = vec![
            Field::Int(256),
            Field::Float(0.5),
            Field::Float(0.25),
            Field::Float(0.3),
            Field::Float(0.5 / 0.3),
            Field::Int(4),
        ];
        let text = write_csv(&[row], &BENCH_SCHEMA).unwrap();
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn wrong_arity_is_schema_mismatch() {
        let row = vec![Field::Int(1)];
        assert!(matches!(
            write_csv(&[row], &BENCH_SCHEMA),
            Err(CsvError::SchemaMismatch(_))
        ));
    }

    #[test]
    fn write_parse_write_fixpoint() {
        let rows = vec![
            vec![
                Field::Float(1e1),
                Field::Int(200),
                Field::Int(50),
                Field::Float(2.02),
                Field::Float(0.0),
                Field::Int(3),
            ],
            vec![
                Field::Float(1e9),
                Field::Int(200),
                Field::Int(50),
                Field::Float(30.0),
                Field::Float(1.0),
                Field::Int(0),
            ],
        ];
        let text = write_csv(&rows, &COND_SWEEP_SCHEMA).unwrap();
        let parsed = parse_csv(&text, &COND_SWEEP_SCHEMA).unwrap();
        let text2 = write_csv(&parsed, &COND_SWEEP_SCHEMA).unwrap();
        assert_eq!(text, text2);
    }

    #[test]
    fn header_mismatch_rejected() {
        let text = "kappa,n\n1,2\n";
        assert!(parse_csv(text, &COND_SWEEP_SCHEMA).is_err());
    }

    #[test]
    fn floats_round_trip_shortest() {
        let v = 0.1 + 0.2;
        let text = write_csv(
            &[vec![
                Field::Float(v),
                Field::Int(1),
                Field::Int(1),
                Field::Float(f64::MIN_POSITIVE),
                Field::Float(1.0),
                Field::Int(0),
            ]],
            &COND_SWEEP_SCHEMA,
        )
        .unwrap();
        let rows = parse_csv(&text, &COND_SWEEP_SCHEMA).unwrap();
        assert_eq!(rows[0][0].as_f64().unwrap(), v);
        assert_eq!(rows[0][3].as_f64().unwrap(), f64::MIN_POSITIVE);
    }
}
