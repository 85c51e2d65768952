use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use thiserror::Error;

use super::{Integrality, Model, ModelError, ModelParts, ObjectiveSense, Row, RowSense, Variable};

/// Bound magnitudes at or beyond this are read as infinite.
const INFINITY_THRESHOLD: f64 = 1e30;
/// Number of data lines inspected when sniffing the dialect.
const SNIFF_LINES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dialect {
    #[default]
    Auto,
    Fixed,
    Free,
}

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    pub dialect: Dialect,
    /// INTORG/INTEND variables without an upper bound get `[0, 1]` instead of `[0, +inf)`.
    pub legacy_int_bounds: bool,
    /// Accept end-of-stream in place of ENDATA.
    pub lenient_eof: bool,
    /// Overrides OBJSENSE (and the MIN default) when set.
    pub objective_sense: Option<ObjectiveSense>,
}

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("duplicate {kind} `{name}` at line {line}")]
    DuplicateName { kind: &'static str, name: String, line: usize },
    #[error("unknown row `{name}` referenced at line {line}")]
    UnknownRowReference { name: String, line: usize },
    #[error("unknown column `{name}` referenced at line {line}")]
    UnknownColumnReference { name: String, line: usize },
    #[error("unsupported section {section} at line {line}")]
    UnsupportedSection { section: String, line: usize },
    #[error("variable `{name}` has lower bound {lower} above upper bound {upper}")]
    InconsistentBounds { name: String, lower: f64, upper: f64 },
    #[error("invalid model: {0}")]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl MpsError {
    /// Stable upper-case code for diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            MpsError::Syntax { .. } => "SYNTAX",
            MpsError::DuplicateName { .. } => "DUPLICATE_NAME",
            MpsError::UnknownRowReference { .. } => "UNKNOWN_ROW_REFERENCE",
            MpsError::UnknownColumnReference { .. } => "UNKNOWN_COLUMN_REFERENCE",
            MpsError::UnsupportedSection { .. } => "UNSUPPORTED_SECTION",
            MpsError::InconsistentBounds { .. } => "INCONSISTENT_BOUNDS",
            MpsError::Model(_) => "INVALID_MODEL",
            MpsError::Io(_) => "IO",
        }
    }
}

pub fn parse_mps<R: Read>(mut input: R, options: &ParseOptions) -> Result<Model, MpsError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let text = String::from_utf8(bytes).map_err(|e| {
        let prefix = &e.as_bytes()[..e.utf8_error().valid_up_to()];
        let line = prefix.iter().filter(|&&b| b == b'\n').count() + 1;
        MpsError::Syntax { line, column: 1, message: "input is not valid UTF-8".into() }
    })?;
    parse_mps_str(&text, options)
}

/// Reads an `.mps` file, transparently decompressing `.gz`.
pub fn read_mps_file(path: &Path, options: &ParseOptions) -> Result<Model, MpsError> {
    let file = BufReader::new(File::open(path)?);
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("gz")) {
        parse_mps(flate2::read::GzDecoder::new(file), options)
    } else {
        parse_mps(file, options)
    }
}

pub fn parse_mps_str(text: &str, options: &ParseOptions) -> Result<Model, MpsError> {
    let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
    let dialect = match options.dialect {
        Dialect::Auto => sniff(&lines),
        d => d,
    };
    Parser::new(dialect, options).run(&lines)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
}

enum LineKind<'a> {
    Skip,
    Header { keyword: String, rest: &'a str },
    Data,
}

const UNSUPPORTED: &[&str] = &[
    "SOS", "QUADOBJ", "QMATRIX", "QSECTION", "QCMATRIX", "INDICATORS", "LAZYCONS", "USERCUTS",
    "CSECTION", "PWLOBJ", "PWLNAM", "GENCONS", "OBJNAME", "BRANCH",
];

fn classify(line: &str) -> LineKind<'_> {
    if line.trim().is_empty() || line.starts_with('*') {
        return LineKind::Skip;
    }
    if line.starts_with(|c: char| c.is_whitespace()) {
        return LineKind::Data;
    }
    let mut it = line.splitn(2, char::is_whitespace);
    let first = it.next().unwrap_or("");
    let rest = it.next().unwrap_or("").trim();
    let keyword = first.to_ascii_uppercase();
    let single = rest.is_empty();
    let known = match keyword.as_str() {
        "NAME" | "OBJSENSE" | "OBJSENS" => true,
        "ROWS" | "COLUMNS" | "RHS" | "RANGES" | "BOUNDS" | "ENDATA" => single,
        k => UNSUPPORTED.contains(&k),
    };
    if known {
        LineKind::Header { keyword, rest }
    } else {
        LineKind::Data
    }
}

fn section_of(keyword: &str, current: Section) -> Section {
    match keyword {
        "OBJSENSE" | "OBJSENS" => Section::ObjSense,
        "ROWS" => Section::Rows,
        "COLUMNS" => Section::Columns,
        "RHS" => Section::Rhs,
        "RANGES" => Section::Ranges,
        "BOUNDS" => Section::Bounds,
        _ => current,
    }
}

fn is_number(s: &str) -> bool {
    s.parse::<f64>().is_ok()
}

/// Free format is chosen unless one of the first data lines cannot be read
/// unambiguously by whitespace splitting.
fn sniff(lines: &[&str]) -> Dialect {
    let mut section = Section::None;
    let mut seen = 0;
    for line in lines {
        match classify(line) {
            LineKind::Skip => continue,
            LineKind::Header { keyword, .. } => {
                if keyword == "ENDATA" || UNSUPPORTED.contains(&keyword.as_str()) {
                    break;
                }
                section = section_of(&keyword, section);
            }
            LineKind::Data => {
                let t: Vec<&str> = line.split_whitespace().collect();
                let ok = match section {
                    Section::None => true,
                    Section::ObjSense => t.len() == 1,
                    Section::Rows => t.len() == 2,
                    Section::Columns => {
                        if t.len() == 3 && t[1].trim_matches('\'').eq_ignore_ascii_case("MARKER") {
                            true
                        } else {
                            (t.len() == 3 || t.len() == 5)
                                && is_number(t[2])
                                && (t.len() == 3 || is_number(t[4]))
                        }
                    }
                    Section::Rhs | Section::Ranges => match t.len() {
                        2 => is_number(t[1]),
                        3 => is_number(t[2]),
                        4 => is_number(t[1]) && is_number(t[3]),
                        5 => is_number(t[2]) && is_number(t[4]),
                        _ => false,
                    },
                    Section::Bounds => (2..=4).contains(&t.len()) && bound_kind(t[0]).is_some(),
                };
                if !ok {
                    return if fixed_line_ok(section, line) { Dialect::Fixed } else { Dialect::Free };
                }
                seen += 1;
                if seen >= SNIFF_LINES {
                    break;
                }
            }
        }
    }
    Dialect::Free
}

fn fixed_line_ok(section: Section, line: &str) -> bool {
    let f = fixed_fields(line);
    let num = |i: usize| is_number(f[i].text);
    let pair2 = f[4].text.is_empty() || num(5);
    match section {
        Section::None | Section::ObjSense => true,
        Section::Rows => matches!(f[0].text, "N" | "L" | "G" | "E" | "n" | "l" | "g" | "e") && !f[1].text.is_empty(),
        Section::Columns => {
            f[2].text.trim_matches('\'').eq_ignore_ascii_case("MARKER") || (!f[1].text.is_empty() && num(3) && pair2)
        }
        Section::Rhs | Section::Ranges => num(3) && pair2,
        Section::Bounds => bound_kind(f[0].text).is_some() && !f[2].text.is_empty(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BoundKind {
    Lo,
    Up,
    Fx,
    Fr,
    Mi,
    Pl,
    Bv,
    Li,
    Ui,
}

impl BoundKind {
    fn needs_value(self) -> bool {
        matches!(self, BoundKind::Lo | BoundKind::Up | BoundKind::Fx | BoundKind::Li | BoundKind::Ui)
    }
}

fn bound_kind(s: &str) -> Option<BoundKind> {
    Some(match s.to_ascii_uppercase().as_str() {
        "LO" => BoundKind::Lo,
        "UP" => BoundKind::Up,
        "FX" => BoundKind::Fx,
        "FR" => BoundKind::Fr,
        "MI" => BoundKind::Mi,
        "PL" => BoundKind::Pl,
        "BV" => BoundKind::Bv,
        "LI" => BoundKind::Li,
        "UI" => BoundKind::Ui,
        _ => return None,
    })
}

/// A field of a data line with its 1-based starting column.
#[derive(Debug, Clone, Copy)]
struct Field<'a> {
    text: &'a str,
    column: usize,
}

fn free_fields(line: &str) -> Vec<Field<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Field { text: &line[s..i], column: s + 1 });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Field { text: &line[s..], column: s + 1 });
    }
    out
}

/// Fixed MPS fields span columns 2-3, 5-12, 15-22, 25-36, 40-47, 50-61.
fn fixed_fields(line: &str) -> [Field<'_>; 6] {
    const SPANS: [(usize, usize); 6] = [(2, 3), (5, 12), (15, 22), (25, 36), (40, 47), (50, 61)];
    let bytes = line.len();
    SPANS.map(|(a, b)| {
        let lo = (a - 1).min(bytes);
        let hi = b.min(bytes);
        let raw = line.get(lo..hi).unwrap_or("");
        let lead = raw.len() - raw.trim_start().len();
        Field { text: raw.trim(), column: a + lead }
    })
}

struct VarState {
    name: String,
    lower: f64,
    upper: f64,
    lower_set: bool,
    integral: bool,
}

#[derive(Clone, Copy)]
enum RowSlot {
    Kept(usize),
    Dropped,
}

struct Parser<'o> {
    dialect: Dialect,
    options: &'o ParseOptions,
    line_no: usize,
    name: String,
    sense: Option<ObjectiveSense>,
    rows: Vec<Row>,
    row_slots: HashMap<String, RowSlot>,
    objective_row: Option<usize>,
    row_entries: Vec<Vec<(usize, f64, usize)>>,
    vars: Vec<VarState>,
    var_index: HashMap<String, usize>,
    in_intorg: bool,
    rhs_seen: Vec<bool>,
    range_seen: Vec<bool>,
    objective_constant: f64,
    rhs_set: Option<String>,
    range_set: Option<String>,
    bound_set: Option<String>,
}

impl<'o> Parser<'o> {
    fn new(dialect: Dialect, options: &'o ParseOptions) -> Self {
        Parser {
            dialect,
            options,
            line_no: 0,
            name: String::new(),
            sense: None,
            rows: Vec::new(),
            row_slots: HashMap::new(),
            objective_row: None,
            row_entries: Vec::new(),
            vars: Vec::new(),
            var_index: HashMap::new(),
            in_intorg: false,
            rhs_seen: Vec::new(),
            range_seen: Vec::new(),
            objective_constant: 0.0,
            rhs_set: None,
            range_set: None,
            bound_set: None,
        }
    }

    fn syntax(&self, column: usize, message: impl Into<String>) -> MpsError {
        MpsError::Syntax { line: self.line_no, column, message: message.into() }
    }

    fn number(&self, f: Field<'_>) -> Result<f64, MpsError> {
        match f.text.parse::<f64>() {
            Ok(v) if !v.is_nan() => Ok(v),
            _ => Err(self.syntax(f.column, format!("expected a number, found `{}`", f.text))),
        }
    }

    fn finite(&self, f: Field<'_>) -> Result<f64, MpsError> {
        let v = self.number(f)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.syntax(f.column, format!("non-finite value `{}`", f.text)))
        }
    }

    fn run(mut self, lines: &[&str]) -> Result<Model, MpsError> {
        let mut section = Section::None;
        let mut ended = false;
        for (i, line) in lines.iter().enumerate() {
            self.line_no = i + 1;
            match classify(line) {
                LineKind::Skip => {}
                LineKind::Header { keyword, rest } => {
                    if UNSUPPORTED.contains(&keyword.as_str()) {
                        return Err(MpsError::UnsupportedSection { section: keyword, line: self.line_no });
                    }
                    match keyword.as_str() {
                        "ENDATA" => {
                            ended = true;
                            break;
                        }
                        "NAME" => self.name = rest.to_string(),
                        "OBJSENSE" | "OBJSENS" if !rest.is_empty() => {
                            self.set_sense(Field { text: rest, column: line.len() - rest.len() + 1 })?;
                        }
                        _ => {}
                    }
                    section = section_of(&keyword, section);
                }
                LineKind::Data => self.data_line(section, line)?,
            }
        }
        if !ended && !self.options.lenient_eof {
            self.line_no = lines.len() + 1;
            return Err(self.syntax(1, "missing ENDATA"));
        }
        self.finish()
    }

    fn set_sense(&mut self, f: Field<'_>) -> Result<(), MpsError> {
        self.sense = Some(match f.text.to_ascii_uppercase().as_str() {
            "MIN" | "MINIMIZE" | "MINIMISE" => ObjectiveSense::Min,
            "MAX" | "MAXIMIZE" | "MAXIMISE" => ObjectiveSense::Max,
            _ => return Err(self.syntax(f.column, format!("unknown objective sense `{}`", f.text))),
        });
        Ok(())
    }

    fn data_line(&mut self, section: Section, line: &str) -> Result<(), MpsError> {
        match section {
            Section::None => Err(self.syntax(1, "data line outside of any section")),
            Section::ObjSense => {
                let f = free_fields(line);
                match f.as_slice() {
                    [s] => self.set_sense(*s),
                    _ => Err(self.syntax(1, "expected MIN or MAX")),
                }
            }
            Section::Rows => {
                let (kind, name) = match self.dialect {
                    Dialect::Fixed => {
                        let f = fixed_fields(line);
                        (f[0], f[1])
                    }
                    _ => match free_fields(line).as_slice() {
                        [k, n] => (*k, *n),
                        _ => return Err(self.syntax(1, "ROWS entries need a type and a name")),
                    },
                };
                self.add_row(kind, name)
            }
            Section::Columns => self.columns_line(line),
            Section::Rhs | Section::Ranges => self.rhs_line(section, line),
            Section::Bounds => self.bounds_line(line),
        }
    }

    fn add_row(&mut self, kind: Field<'_>, name: Field<'_>) -> Result<(), MpsError> {
        let sense = match kind.text.to_ascii_uppercase().as_str() {
            "N" => RowSense::N,
            "L" => RowSense::L,
            "G" => RowSense::G,
            "E" => RowSense::E,
            _ => return Err(self.syntax(kind.column, format!("unknown row type `{}`", kind.text))),
        };
        if name.text.is_empty() {
            return Err(self.syntax(name.column, "missing row name"));
        }
        if self.row_slots.contains_key(name.text) {
            return Err(MpsError::DuplicateName { kind: "row", name: name.text.into(), line: self.line_no });
        }
        if sense == RowSense::N && self.objective_row.is_some() {
            self.row_slots.insert(name.text.into(), RowSlot::Dropped);
            return Ok(());
        }
        let idx = self.rows.len();
        if sense == RowSense::N {
            self.objective_row = Some(idx);
        }
        self.rows.push(Row::new(name.text, sense, 0.0, vec![]));
        self.row_entries.push(Vec::new());
        self.rhs_seen.push(false);
        self.range_seen.push(false);
        self.row_slots.insert(name.text.into(), RowSlot::Kept(idx));
        Ok(())
    }

    fn lookup_row(&self, f: Field<'_>) -> Result<RowSlot, MpsError> {
        self.row_slots
            .get(f.text)
            .copied()
            .ok_or_else(|| MpsError::UnknownRowReference { name: f.text.into(), line: self.line_no })
    }

    fn columns_line(&mut self, line: &str) -> Result<(), MpsError> {
        let mut fields: Vec<Field<'_>> = match self.dialect {
            Dialect::Fixed => {
                let f = fixed_fields(line);
                if f[2].text.trim_matches('\'').eq_ignore_ascii_case("MARKER") {
                    vec![f[1], f[2], f[4]]
                } else {
                    let mut v = vec![f[1], f[2], f[3]];
                    if !f[4].text.is_empty() {
                        v.extend([f[4], f[5]]);
                    }
                    v
                }
            }
            _ => free_fields(line),
        };
        if fields.len() == 3 && fields[1].text.trim_matches('\'').eq_ignore_ascii_case("MARKER") {
            match fields[2].text.trim_matches('\'').to_ascii_uppercase().as_str() {
                "INTORG" => self.in_intorg = true,
                "INTEND" => self.in_intorg = false,
                _ => return Err(self.syntax(fields[2].column, format!("unknown marker `{}`", fields[2].text))),
            }
            return Ok(());
        }
        if fields.len() != 3 && fields.len() != 5 {
            return Err(self.syntax(1, "COLUMNS entries need a column and one or two (row, value) pairs"));
        }
        let col = fields.remove(0);
        if col.text.is_empty() {
            return Err(self.syntax(col.column, "missing column name"));
        }
        let j = match self.var_index.get(col.text) {
            Some(&j) => j,
            None => {
                let j = self.vars.len();
                let upper = if self.in_intorg && self.options.legacy_int_bounds { 1.0 } else { f64::INFINITY };
                self.vars.push(VarState {
                    name: col.text.into(),
                    lower: 0.0,
                    upper,
                    lower_set: false,
                    integral: self.in_intorg,
                });
                self.var_index.insert(col.text.into(), j);
                j
            }
        };
        for pair in fields.chunks(2) {
            let value = self.finite(pair[1])?;
            match self.lookup_row(pair[0])? {
                RowSlot::Dropped => {}
                RowSlot::Kept(i) => {
                    if value != 0.0 {
                        self.row_entries[i].push((j, value, self.line_no));
                    }
                }
            }
        }
        Ok(())
    }

    /// Splits RHS/RANGES lines into an optional set name and (row, value) pairs.
    fn rhs_pairs<'l>(&self, line: &'l str) -> Result<(Option<&'l str>, Vec<(Field<'l>, Field<'l>)>), MpsError> {
        let (set, rest): (Option<Field<'l>>, Vec<Field<'l>>) = match self.dialect {
            Dialect::Fixed => {
                let f = fixed_fields(line);
                let mut v = vec![f[2], f[3]];
                if !f[4].text.is_empty() {
                    v.extend([f[4], f[5]]);
                }
                (Some(f[1]), v)
            }
            _ => {
                let mut f = free_fields(line);
                match f.len() {
                    2 | 4 => (None, f),
                    3 | 5 => {
                        let s = f.remove(0);
                        (Some(s), f)
                    }
                    _ => return Err(self.syntax(1, "expected [set] row value [row value]")),
                }
            }
        };
        let pairs = rest.chunks(2).map(|c| (c[0], c[1])).collect();
        Ok((set.map(|s| s.text), pairs))
    }

    fn rhs_line(&mut self, section: Section, line: &str) -> Result<(), MpsError> {
        let (set, pairs) = self.rhs_pairs(line)?;
        let set = set.unwrap_or("").to_string();
        let chosen = match section {
            Section::Rhs => self.rhs_set.get_or_insert(set.clone()),
            _ => self.range_set.get_or_insert(set.clone()),
        };
        if *chosen != set {
            return Ok(());
        }
        for (rf, vf) in pairs {
            let value = self.finite(vf)?;
            let i = match self.lookup_row(rf)? {
                RowSlot::Dropped => continue,
                RowSlot::Kept(i) => i,
            };
            let is_objective = Some(i) == self.objective_row;
            if section == Section::Rhs {
                if self.rhs_seen[i] {
                    return Err(MpsError::DuplicateName { kind: "rhs entry", name: rf.text.into(), line: self.line_no });
                }
                self.rhs_seen[i] = true;
                if is_objective {
                    self.objective_constant = -value;
                } else {
                    self.rows[i].rhs = value;
                }
            } else {
                if is_objective {
                    return Err(self.syntax(rf.column, "RANGES entry on the objective row"));
                }
                if self.range_seen[i] {
                    return Err(MpsError::DuplicateName { kind: "range entry", name: rf.text.into(), line: self.line_no });
                }
                self.range_seen[i] = true;
                self.rows[i].range = Some(value);
            }
        }
        Ok(())
    }

    fn bounds_line(&mut self, line: &str) -> Result<(), MpsError> {
        let (kind_f, set, col, value) = match self.dialect {
            Dialect::Fixed => {
                let f = fixed_fields(line);
                let v = (!f[3].text.is_empty()).then_some(f[3]);
                (f[0], Some(f[1].text), f[2], v)
            }
            _ => {
                let f = free_fields(line);
                if f.is_empty() {
                    return Err(self.syntax(1, "empty BOUNDS entry"));
                }
                let kind = bound_kind(f[0].text)
                    .ok_or_else(|| self.syntax(f[0].column, format!("unknown bound type `{}`", f[0].text)))?;
                match (f.len(), kind.needs_value()) {
                    (2, false) => (f[0], None, f[1], None),
                    (3, true) => (f[0], None, f[1], Some(f[2])),
                    (3, false) => {
                        // `FR set col` versus `BV col 1`
                        if self.var_index.contains_key(f[1].text) && is_number(f[2].text) {
                            (f[0], None, f[1], Some(f[2]))
                        } else {
                            (f[0], Some(f[1].text), f[2], None)
                        }
                    }
                    (4, _) => (f[0], Some(f[1].text), f[2], Some(f[3])),
                    _ => return Err(self.syntax(1, "malformed BOUNDS entry")),
                }
            }
        };
        let kind = bound_kind(kind_f.text)
            .ok_or_else(|| self.syntax(kind_f.column, format!("unknown bound type `{}`", kind_f.text)))?;
        let set = set.unwrap_or("").to_string();
        if *self.bound_set.get_or_insert(set.clone()) != set {
            return Ok(());
        }
        let j = *self
            .var_index
            .get(col.text)
            .ok_or_else(|| MpsError::UnknownColumnReference { name: col.text.into(), line: self.line_no })?;
        let value = match (kind.needs_value(), value) {
            (true, Some(f)) => {
                let v = self.number(f)?;
                if v >= INFINITY_THRESHOLD {
                    f64::INFINITY
                } else if v <= -INFINITY_THRESHOLD {
                    f64::NEG_INFINITY
                } else {
                    v
                }
            }
            (true, None) => return Err(self.syntax(kind_f.column, "bound type requires a value")),
            (false, _) => 0.0,
        };
        let v = &mut self.vars[j];
        match kind {
            BoundKind::Lo | BoundKind::Li => {
                v.lower = value;
                v.lower_set = true;
            }
            BoundKind::Up | BoundKind::Ui => {
                v.upper = value;
                if value < 0.0 && !v.lower_set {
                    v.lower = f64::NEG_INFINITY;
                }
            }
            BoundKind::Fx => {
                v.lower = value;
                v.upper = value;
                v.lower_set = true;
            }
            BoundKind::Fr => {
                v.lower = f64::NEG_INFINITY;
                v.upper = f64::INFINITY;
                v.lower_set = true;
            }
            BoundKind::Mi => {
                v.lower = f64::NEG_INFINITY;
                v.lower_set = true;
            }
            BoundKind::Pl => v.upper = f64::INFINITY,
            BoundKind::Bv => {
                v.lower = 0.0;
                v.upper = 1.0;
                v.lower_set = true;
                v.integral = true;
            }
        }
        if matches!(kind, BoundKind::Li | BoundKind::Ui) {
            v.integral = true;
        }
        Ok(())
    }

    fn finish(mut self) -> Result<Model, MpsError> {
        let mut variables = Vec::with_capacity(self.vars.len());
        for v in self.vars.drain(..) {
            if v.lower > v.upper {
                return Err(MpsError::InconsistentBounds { name: v.name, lower: v.lower, upper: v.upper });
            }
            let integrality = match (v.integral, v.lower >= 0.0 && v.upper <= 1.0) {
                (false, _) => Integrality::Continuous,
                (true, true) => Integrality::Binary,
                (true, false) => Integrality::Integer,
            };
            variables.push(Variable { name: v.name, lower: v.lower, upper: v.upper, integrality });
        }
        for (row, mut entries) in self.rows.iter_mut().zip(self.row_entries.drain(..)) {
            entries.sort_by_key(|&(j, _, line)| (j, line));
            for w in entries.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(MpsError::DuplicateName {
                        kind: "coefficient",
                        name: format!("{}/{}", variables[w[1].0].name, row.name),
                        line: w[1].2,
                    });
                }
            }
            row.terms = entries.into_iter().map(|(j, a, _)| (j, a)).collect();
        }
        let objective_row = match self.objective_row {
            Some(i) => i,
            None => {
                let mut name = String::from("obj");
                while self.row_slots.contains_key(&name) {
                    name.insert(0, '_');
                }
                self.rows.insert(0, Row::new(name, RowSense::N, 0.0, vec![]));
                0
            }
        };
        let sense = self.options.objective_sense.or(self.sense).unwrap_or(ObjectiveSense::Min);
        Ok(Model::from_parts(ModelParts {
            name: self.name,
            variables,
            rows: self.rows,
            objective_row,
            objective_sense: sense,
            objective_constant: self.objective_constant,
        })?)
    }
}
