use std::fmt::Write as _;
use std::io::Write;

use thiserror::Error;

use super::Model;
use crate::numfmt::fmt_num;

#[derive(Debug, Error)]
pub enum WriteError {
    #[error("name `{0}` cannot be written in free-format MPS")]
    InvalidName(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn check(name: &str) -> Result<&str, WriteError> {
    if name.is_empty() || name.chars().any(char::is_whitespace) {
        Err(WriteError::InvalidName(name.to_string()))
    } else {
        Ok(name)
    }
}

/// Canonical free-format rendering: rows and columns in model order,
/// one coefficient per line.
pub fn write_mps_string(model: &Model) -> Result<String, WriteError> {
    let mut s = String::new();
    let name = model.name();
    if name.trim() != name {
        return Err(WriteError::InvalidName(name.to_string()));
    }
    if name.is_empty() {
        s.push_str("NAME\n");
    } else {
        let _ = writeln!(s, "NAME {name}");
    }
    let _ = writeln!(s, "OBJSENSE\n    {}", model.objective_sense());
    s.push_str("ROWS\n");
    for row in model.rows() {
        let _ = writeln!(s, " {} {}", row.sense.as_str(), check(&row.name)?);
    }
    s.push_str("COLUMNS\n");
    let obj_name = &model.objective().name;
    let mut in_int = false;
    for (var, col) in model.variables().iter().zip(model.columns()) {
        let name = check(&var.name)?;
        let integral = var.integrality.is_integral();
        if integral != in_int {
            let tag = if integral { "INTORG" } else { "INTEND" };
            let _ = writeln!(s, "    MARKER 'MARKER' '{tag}'");
            in_int = integral;
        }
        if col.is_empty() {
            let _ = writeln!(s, "    {name} {obj_name} 0");
        }
        for (i, a) in col {
            let _ = writeln!(s, "    {name} {} {}", model.rows()[i].name, fmt_num(a));
        }
    }
    if in_int {
        s.push_str("    MARKER 'MARKER' 'INTEND'\n");
    }
    s.push_str("RHS\n");
    for (i, row) in model.rows().iter().enumerate() {
        if i == model.objective_row() {
            if model.objective_constant() != 0.0 {
                let _ = writeln!(s, "    RHS {} {}", row.name, fmt_num(-model.objective_constant()));
            }
        } else if row.rhs != 0.0 {
            let _ = writeln!(s, "    RHS {} {}", row.name, fmt_num(row.rhs));
        }
    }
    if model.rows().iter().any(|r| r.range.is_some()) {
        s.push_str("RANGES\n");
        for row in model.rows() {
            if let Some(r) = row.range {
                let _ = writeln!(s, "    RNG {} {}", row.name, fmt_num(r));
            }
        }
    }
    s.push_str("BOUNDS\n");
    for var in model.variables() {
        let n = &var.name;
        let (lo, up) = (var.lower, var.upper);
        if lo == f64::NEG_INFINITY && up == f64::INFINITY {
            let _ = writeln!(s, " FR BND {n}");
            continue;
        }
        if lo == up {
            let _ = writeln!(s, " FX BND {n} {}", fmt_num(lo));
            continue;
        }
        if lo == f64::NEG_INFINITY {
            let _ = writeln!(s, " MI BND {n}");
        } else if lo != 0.0 {
            let _ = writeln!(s, " LO BND {n} {}", fmt_num(lo));
        }
        if up.is_finite() {
            let _ = writeln!(s, " UP BND {n} {}", fmt_num(up));
        } else if var.integrality.is_integral() {
            let _ = writeln!(s, " PL BND {n}");
        }
    }
    s.push_str("ENDATA\n");
    Ok(s)
}

pub fn write_mps<W: Write>(model: &Model, mut out: W) -> Result<(), WriteError> {
    let text = write_mps_string(model)?;
    out.write_all(text.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::{parse_mps_str, ModelParts, ObjectiveSense, ParseOptions, Row, RowSense, Variable};

    fn sample() -> Model {
        Model::from_parts(ModelParts {
            name: "s".into(),
            variables: vec![
                Variable::binary("b"),
                Variable::integer("n", -3.0, f64::INFINITY),
                Variable::continuous("f", f64::NEG_INFINITY, f64::INFINITY),
                Variable::continuous("m", f64::NEG_INFINITY, -1.5),
                Variable::continuous("z", 2.0, 2.0),
                Variable::continuous("unused", 0.0, 4.0),
            ],
            rows: vec![
                Row::new("c1", RowSense::L, 4.0, vec![(0, 1.0), (1, 0.1)]).with_range(2.0),
                Row::new("cost", RowSense::N, 0.0, vec![(0, 3.0), (3, -1.0)]),
                Row::new("c2", RowSense::E, -1.0, vec![(2, 1.0), (3, 2.0), (4, 1e-7)]),
            ],
            objective_row: 1,
            objective_sense: ObjectiveSense::Max,
            objective_constant: 2.5,
        })
        .unwrap()
    }

    #[test]
    fn round_trip_is_identity() {
        let m = sample();
        let text = write_mps_string(&m).unwrap();
        let back = parse_mps_str(&text, &ParseOptions::default()).unwrap();
        assert_eq!(back, m);
        assert_eq!(write_mps_string(&back).unwrap(), text);
    }

    #[test]
    fn whitespace_names_are_rejected() {
        let mut p = sample().into_parts();
        p.variables[0].name = "has space".into();
        let m = Model::from_parts(p).unwrap();
        assert!(matches!(write_mps_string(&m), Err(WriteError::InvalidName(_))));
    }
}
