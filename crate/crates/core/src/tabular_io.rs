//! Typed tabular data: ARFF/CSV ingestion, canonical CSV output and
//! descriptive statistics for numeric columns.
//!
//! Cells are one of a real number, a category label or a missing marker.
//! Both readers map `?` to missing; the CSV reader additionally maps the
//! empty field to missing. Category labels found in the data but absent from
//! the declared levels are appended to the column's levels and reported as a
//! warning rather than rejected.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Numeric,
    Categorical,
    Boolean,
}

impl AttributeKind {
    pub fn is_nominal(self) -> bool {
        !matches!(self, AttributeKind::Numeric)
    }
}

impl fmt::Display for AttributeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttributeKind::Numeric => "numeric",
            AttributeKind::Categorical => "categorical",
            AttributeKind::Boolean => "boolean",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub name: String,
    pub kind: AttributeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_levels: Option<Vec<String>>,
}

impl AttributeSchema {
    pub fn numeric(name: impl Into<String>) -> Self {
        AttributeSchema {
            name: name.into(),
            kind: AttributeKind::Numeric,
            declared_levels: None,
        }
    }

    /// Nominal column. The kind is `Boolean` when the level set is
    /// `{yes, no}` or `{true, false}` (any case), otherwise `Categorical`.
    pub fn nominal<S: Into<String>>(name: impl Into<String>, levels: impl IntoIterator<Item = S>) -> Self {
        let levels: Vec<String> = levels.into_iter().map(Into::into).collect();
        let kind = if looks_boolean(&levels) {
            AttributeKind::Boolean
        } else {
            AttributeKind::Categorical
        };
        AttributeSchema {
            name: name.into(),
            kind,
            declared_levels: Some(levels),
        }
    }

    pub fn levels(&self) -> &[String] {
        self.declared_levels.as_deref().unwrap_or(&[])
    }

    fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Data("attribute with empty name".into()));
        }
        match (&self.kind, &self.declared_levels) {
            (AttributeKind::Numeric, Some(_)) => {
                Err(Error::column(&self.name, "numeric column must not declare levels"))
            }
            (AttributeKind::Numeric, None) => Ok(()),
            (_, None) => Err(Error::column(&self.name, "nominal column without declared levels")),
            (_, Some(levels)) => {
                let mut seen = HashSet::new();
                for level in levels {
                    if !seen.insert(level.as_str()) {
                        return Err(Error::column(&self.name, format!("duplicate level `{level}`")));
                    }
                }
                Ok(())
            }
        }
    }
}

fn looks_boolean(levels: &[String]) -> bool {
    if levels.len() != 2 {
        return false;
    }
    let set: BTreeSet<String> = levels.iter().map(|l| l.to_ascii_lowercase()).collect();
    let yes_no: BTreeSet<String> = ["no", "yes"].iter().map(|s| s.to_string()).collect();
    let true_false: BTreeSet<String> = ["false", "true"].iter().map(|s| s.to_string()).collect();
    set == yes_no || set == true_false
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CellValue {
    Number(f64),
    Category(String),
    Missing,
}

impl CellValue {
    pub fn is_missing(&self) -> bool {
        matches!(self, CellValue::Missing)
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            CellValue::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_category(&self) -> Option<&str> {
        match self {
            CellValue::Category(c) => Some(c),
            _ => None,
        }
    }
}

/// Immutable typed table.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Vec<AttributeSchema>,
    rows: Vec<Vec<CellValue>>,
    target_column: Option<String>,
    warnings: Vec<String>,
}

impl Dataset {
    /// Builds a dataset after checking every row against the schema.
    pub fn new(schema: Vec<AttributeSchema>, rows: Vec<Vec<CellValue>>) -> Result<Self> {
        let mut names = HashSet::new();
        for attr in &schema {
            attr.validate()?;
            if !names.insert(attr.name.as_str()) {
                return Err(Error::column(&attr.name, "duplicate column name"));
            }
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::Data(format!(
                    "row {r} has {} cells, schema has {}",
                    row.len(),
                    schema.len()
                )));
            }
            for (attr, cell) in schema.iter().zip(row) {
                match (attr.kind, cell) {
                    (_, CellValue::Missing) => {}
                    (AttributeKind::Numeric, CellValue::Number(v)) if v.is_finite() => {}
                    (AttributeKind::Numeric, _) => {
                        return Err(Error::column(&attr.name, format!("row {r}: expected a finite number")))
                    }
                    (_, CellValue::Category(c)) if attr.levels().contains(c) => {}
                    (_, other) => {
                        return Err(Error::column(
                            &attr.name,
                            format!("row {r}: {other:?} is not a declared level"),
                        ))
                    }
                }
            }
        }
        Ok(Dataset {
            schema,
            rows,
            target_column: None,
            warnings: Vec::new(),
        })
    }

    fn with_warnings(mut self, warnings: Vec<String>) -> Self {
        self.warnings = warnings;
        self
    }

    /// Marks `name` as the binary target. The column must be nominal with
    /// exactly two observed levels.
    pub fn with_target(mut self, name: &str) -> Result<Self> {
        let idx = self
            .column_index(name)
            .ok_or_else(|| Error::column(name, "target column not found"))?;
        if !self.schema[idx].kind.is_nominal() {
            return Err(Error::column(name, "target must be categorical or boolean"));
        }
        let observed = self.observed_levels(idx);
        if observed.len() != 2 {
            return Err(Error::column(
                name,
                format!("target must have exactly 2 observed levels, found {}", observed.len()),
            ));
        }
        self.target_column = Some(name.to_string());
        Ok(self)
    }

    pub fn schema(&self) -> &[AttributeSchema] {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<CellValue>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.schema.len()
    }

    pub fn target_column(&self) -> Option<&str> {
        self.target_column.as_deref()
    }

    /// Non-fatal issues noticed while reading (e.g. undeclared levels).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|a| a.name == name)
    }

    pub fn column(&self, idx: usize) -> impl Iterator<Item = &CellValue> + '_ {
        self.rows.iter().map(move |row| &row[idx])
    }

    /// Distinct non-missing levels present in a nominal column, sorted.
    pub fn observed_levels(&self, idx: usize) -> BTreeSet<&str> {
        self.column(idx).filter_map(CellValue::as_category).collect()
    }

    pub fn missing_count(&self) -> usize {
        self.rows.iter().flatten().filter(|c| c.is_missing()).count()
    }

    /// Copy restricted to the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            target_column: self.target_column.clone(),
            warnings: self.warnings.clone(),
        }
    }

    /// Copy without the named columns. Unknown names are ignored; the target
    /// column can't be dropped.
    pub fn drop_columns(&self, names: &[&str]) -> Result<Dataset> {
        if let Some(target) = &self.target_column {
            if names.contains(&target.as_str()) {
                return Err(Error::column(target, "cannot drop the target column"));
            }
        }
        let keep: Vec<usize> = (0..self.n_cols())
            .filter(|&i| !names.contains(&self.schema[i].name.as_str()))
            .collect();
        Ok(Dataset {
            schema: keep.iter().map(|&i| self.schema[i].clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|row| keep.iter().map(|&i| row[i].clone()).collect())
                .collect(),
            target_column: self.target_column.clone(),
            warnings: self.warnings.clone(),
        })
    }

    /// Rebuilds the table with replaced rows; the schema and target carry over.
    pub(crate) fn with_rows(&self, rows: Vec<Vec<CellValue>>) -> Result<Dataset> {
        let mut out = Dataset::new(self.schema.clone(), rows)?;
        out.target_column = self.target_column.clone();
        out.warnings = self.warnings.clone();
        Ok(out)
    }
}

/// Reads `.arff` or `.csv` (schema inferred) depending on the extension.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
        Some(ext) if ext == "csv" => parse_csv(&text, None),
        _ => parse_arff(&text),
    }
}

// ---------------------------------------------------------------------------
// ARFF

/// Splits a comma-separated line, honouring single and double quotes.
fn split_quoted(line: &str, line_no: usize) -> Result<Vec<String>> {
    let mut fields = Vec::new();
    let mut current = String::new();
    let mut quote: Option<char> = None;
    let mut was_quoted = false;
    let mut chars = line.chars();
    while let Some(ch) = chars.next() {
        match quote {
            Some(q) if ch == q => quote = None,
            Some(_) if ch == '\\' => {
                if let Some(next) = chars.next() {
                    current.push(next);
                }
            }
            Some(_) => current.push(ch),
            None => match ch {
                '\'' | '"' => {
                    quote = Some(ch);
                    was_quoted = true;
                }
                ',' => {
                    fields.push(finish_field(&current, was_quoted));
                    current.clear();
                    was_quoted = false;
                }
                _ => current.push(ch),
            },
        }
    }
    if quote.is_some() {
        return Err(Error::parse(line_no, "unterminated quote"));
    }
    fields.push(finish_field(&current, was_quoted));
    Ok(fields)
}

fn finish_field(raw: &str, quoted: bool) -> String {
    if quoted {
        raw.to_string()
    } else {
        raw.trim().to_string()
    }
}

fn unquote(token: &str) -> &str {
    let t = token.trim();
    for q in ['\'', '"'] {
        if t.len() >= 2 && t.starts_with(q) && t.ends_with(q) {
            return &t[1..t.len() - 1];
        }
    }
    t
}

/// Splits `@attribute <name> <type>` into name and type, allowing a quoted name.
fn split_attribute_decl(rest: &str, line_no: usize) -> Result<(String, String)> {
    let rest = rest.trim();
    let (name, tail) = match rest.chars().next() {
        Some(q @ ('\'' | '"')) => {
            let end = rest[1..]
                .find(q)
                .ok_or_else(|| Error::parse(line_no, "unterminated attribute name"))?;
            (rest[1..1 + end].to_string(), &rest[end + 2..])
        }
        Some(_) => {
            let end = rest
                .find(|c: char| c.is_whitespace() || c == '{')
                .ok_or_else(|| Error::parse(line_no, "attribute declaration without a type"))?;
            (rest[..end].to_string(), &rest[end..])
        }
        None => return Err(Error::parse(line_no, "empty attribute declaration")),
    };
    let tail = tail.trim();
    if name.is_empty() || tail.is_empty() {
        return Err(Error::parse(line_no, "malformed attribute declaration"));
    }
    Ok((name, tail.to_string()))
}

fn keyword<'a>(line: &'a str, kw: &str) -> Option<&'a str> {
    let head = line.get(..kw.len())?;
    if head.eq_ignore_ascii_case(kw) {
        let rest = &line[kw.len()..];
        if rest.is_empty() || rest.starts_with(char::is_whitespace) {
            return Some(rest);
        }
    }
    None
}

/// Parses an ARFF document (dense format only).
pub fn parse_arff(text: &str) -> Result<Dataset> {
    let mut schema: Vec<AttributeSchema> = Vec::new();
    let mut in_data = false;
    let mut seen_relation = false;
    let mut builder: Option<RowBuilder> = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if !in_data {
            if keyword(line, "@relation").is_some() {
                seen_relation = true;
            } else if let Some(rest) = keyword(line, "@attribute") {
                let (name, ty) = split_attribute_decl(rest, line_no)?;
                if schema.iter().any(|a| a.name == name) {
                    return Err(Error::parse(line_no, format!("duplicate attribute `{name}`")));
                }
                let attr = if ty.starts_with('{') {
                    let inner = ty
                        .strip_prefix('{')
                        .and_then(|t| t.strip_suffix('}'))
                        .ok_or_else(|| Error::parse(line_no, "unterminated nominal level list"))?;
                    let levels: Vec<String> = split_quoted(inner, line_no)?
                        .into_iter()
                        .map(|l| unquote(&l).to_string())
                        .collect();
                    if levels.iter().any(String::is_empty) {
                        return Err(Error::parse(line_no, "empty nominal level"));
                    }
                    let mut seen = HashSet::new();
                    if let Some(dup) = levels.iter().find(|l| !seen.insert(l.as_str())) {
                        return Err(Error::parse(line_no, format!("duplicate level `{dup}`")));
                    }
                    AttributeSchema::nominal(name, levels)
                } else {
                    match ty.to_ascii_lowercase().as_str() {
                        "numeric" | "real" | "integer" => AttributeSchema::numeric(name),
                        other => {
                            return Err(Error::parse(
                                line_no,
                                format!("unsupported attribute type `{other}`"),
                            ))
                        }
                    }
                };
                schema.push(attr);
            } else if keyword(line, "@data").is_some() {
                if !seen_relation {
                    return Err(Error::parse(line_no, "@data before @relation"));
                }
                if schema.is_empty() {
                    return Err(Error::parse(line_no, "@data without any @attribute"));
                }
                in_data = true;
                builder = Some(RowBuilder::new(schema.clone()));
            } else {
                return Err(Error::parse(line_no, format!("unexpected header line `{line}`")));
            }
            continue;
        }
        if line.starts_with('{') {
            return Err(Error::parse(line_no, "sparse ARFF rows are not supported"));
        }
        let fields = split_quoted(line, line_no)?;
        let b = builder.as_mut().expect("builder exists in data section");
        b.push_row(&fields, line_no, |tok| tok == "?")?;
    }

    match builder {
        Some(b) => b.finish(),
        None => Err(Error::parse(text.lines().count().max(1), "missing @data section")),
    }
}

/// Accumulates typed rows, extending nominal levels when needed.
struct RowBuilder {
    schema: Vec<AttributeSchema>,
    rows: Vec<Vec<CellValue>>,
    warnings: Vec<String>,
}

impl RowBuilder {
    fn new(schema: Vec<AttributeSchema>) -> Self {
        RowBuilder {
            schema,
            rows: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn push_row(
        &mut self,
        fields: &[String],
        line_no: usize,
        is_missing: impl Fn(&str) -> bool,
    ) -> Result<()> {
        if fields.len() != self.schema.len() {
            return Err(Error::parse(
                line_no,
                format!("row has {} values, expected {}", fields.len(), self.schema.len()),
            ));
        }
        let mut row = Vec::with_capacity(fields.len());
        for (attr, tok) in self.schema.iter_mut().zip(fields) {
            if is_missing(tok) {
                row.push(CellValue::Missing);
                continue;
            }
            match attr.kind {
                AttributeKind::Numeric => {
                    let v: f64 = tok.parse().map_err(|_| {
                        Error::parse(line_no, format!("column `{}`: `{tok}` is not a number", attr.name))
                    })?;
                    if !v.is_finite() {
                        return Err(Error::parse(
                            line_no,
                            format!("column `{}`: non-finite value `{tok}`", attr.name),
                        ));
                    }
                    row.push(CellValue::Number(v));
                }
                AttributeKind::Categorical | AttributeKind::Boolean => {
                    if tok.is_empty() {
                        return Err(Error::parse(
                            line_no,
                            format!("column `{}`: empty category", attr.name),
                        ));
                    }
                    let levels = attr.declared_levels.get_or_insert_with(Vec::new);
                    if !levels.iter().any(|l| l == tok) {
                        let msg = format!(
                            "line {line_no}: column `{}` has undeclared level `{tok}`; appended",
                            attr.name
                        );
                        log::warn!("{msg}");
                        self.warnings.push(msg);
                        levels.push(tok.clone());
                    }
                    row.push(CellValue::Category(tok.clone()));
                }
            }
        }
        self.rows.push(row);
        Ok(())
    }

    fn finish(self) -> Result<Dataset> {
        Ok(Dataset::new(self.schema, self.rows)?.with_warnings(self.warnings))
    }
}

// ---------------------------------------------------------------------------
// CSV

/// Parses CSV with a header row. Without a schema, a column whose present
/// values all parse as numbers is numeric; anything else is nominal with its
/// observed levels in sorted order.
pub fn parse_csv(text: &str, schema: Option<&[AttributeSchema]>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut records = reader.records();
    let header = match records.next() {
        Some(rec) => rec?,
        None => return Err(Error::parse(1, "empty CSV: missing header row")),
    };
    let names: Vec<String> = header.iter().map(str::to_string).collect();

    let mut raw_rows: Vec<(usize, Vec<String>)> = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if rec.len() != names.len() {
            return Err(Error::parse(
                line,
                format!("row has {} values, header has {}", rec.len(), names.len()),
            ));
        }
        raw_rows.push((line, rec.iter().map(str::to_string).collect()));
    }

    let is_missing = |tok: &str| tok.is_empty() || tok == "?";

    let schema: Vec<AttributeSchema> = match schema {
        Some(s) => {
            if s.len() != names.len() {
                return Err(Error::parse(
                    1,
                    format!("header has {} columns, schema has {}", names.len(), s.len()),
                ));
            }
            for (attr, name) in s.iter().zip(&names) {
                if &attr.name != name {
                    return Err(Error::parse(
                        1,
                        format!("header column `{name}` does not match schema column `{}`", attr.name),
                    ));
                }
            }
            s.to_vec()
        }
        None => names
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let present: Vec<&str> = raw_rows
                    .iter()
                    .map(|(_, r)| r[j].as_str())
                    .filter(|t| !is_missing(t))
                    .collect();
                let numeric = present
                    .iter()
                    .all(|t| t.parse::<f64>().map(f64::is_finite).unwrap_or(false));
                if numeric {
                    AttributeSchema::numeric(name.clone())
                } else {
                    let levels: BTreeSet<&str> = present.into_iter().collect();
                    AttributeSchema::nominal(name.clone(), levels)
                }
            })
            .collect(),
    };

    let mut builder = RowBuilder::new(schema);
    for (line, fields) in &raw_rows {
        builder.push_row(fields, *line, is_missing)?;
    }
    builder.finish()
}

/// Canonical CSV: header row, comma separated, missing cells as empty fields,
/// numbers in shortest round-trip form.
pub fn write_csv(dataset: &Dataset) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(dataset.schema.iter().map(|a| a.name.as_str()))?;
    for row in &dataset.rows {
        writer.write_record(row.iter().map(|cell| match cell {
            CellValue::Number(v) => v.to_string(),
            CellValue::Category(c) => c.clone(),
            CellValue::Missing => String::new(),
        }))?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

// ---------------------------------------------------------------------------
// Summaries

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericSummary {
    pub column: String,
    pub maximum: f64,
    pub minimum: f64,
    pub mean: f64,
    /// Sample standard deviation (divisor n - 1).
    pub standard_deviation: f64,
    /// Population standard deviation (divisor n), kept for comparison.
    pub population_std: f64,
    pub n_present: usize,
}

/// One summary per numeric column, computed over present cells.
pub fn summarize_numeric(dataset: &Dataset) -> Result<Vec<NumericSummary>> {
    let numeric: Vec<usize> = (0..dataset.n_cols())
        .filter(|&j| dataset.schema[j].kind == AttributeKind::Numeric)
        .collect();
    if numeric.is_empty() {
        return Err(Error::Data("dataset has no numeric columns".into()));
    }
    numeric
        .into_iter()
        .map(|j| {
            let name = &dataset.schema[j].name;
            let values: Vec<f64> = dataset.column(j).filter_map(CellValue::as_number).collect();
            if values.is_empty() {
                return Err(Error::column(name, "no present values to summarize"));
            }
            let n = values.len() as f64;
            let minimum = values.iter().copied().fold(f64::INFINITY, f64::min);
            let maximum = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mean = (values.iter().sum::<f64>() / n).clamp(minimum, maximum);
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            let standard_deviation = if values.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
            Ok(NumericSummary {
                column: name.clone(),
                maximum,
                minimum,
                mean,
                standard_deviation,
                population_std: (ss / n).sqrt(),
                n_present: values.len(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = "@relation t\n@attribute x numeric\n@attribute c {A,B}\n@data\n1.0,A\n?,B\n";

    #[test]
    fn arff_missing_marker() {
        let ds = parse_arff(TINY).unwrap();
        assert_eq!(ds.n_rows(), 2);
        assert_eq!(ds.rows()[1][0], CellValue::Missing);
        assert_eq!(ds.rows()[0][0], CellValue::Number(1.0));
        assert_eq!(ds.rows()[1][1], CellValue::Category("B".into()));
    }

    #[test]
    fn arff_arity_error_names_line() {
        let text = "@relation t\n@attribute x numeric\n@attribute c {A,B}\n@data\n1,A\n1,A,3\n";
        match parse_arff(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn arff_numeric_parse_failure() {
        let text = "@relation t\n@attribute x numeric\n@data\nabc\n";
        assert!(matches!(parse_arff(text), Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn arff_malformed_header() {
        assert!(parse_arff("@relation t\n@attribute x\n@data\n1\n").is_err());
        assert!(parse_arff("@relation t\n@attribute x numeric\n1\n").is_err());
        assert!(parse_arff("@relation t\n@attribute x numeric\n").is_err());
        assert!(parse_arff("@relation t\n@attribute x {a,b\n@data\na\n").is_err());
    }

    #[test]
    fn arff_quotes_comments_and_case() {
        let text = "% comment\n@RELATION 'bone marrow'\n@ATTRIBUTE 'odd name' {'a b',c}\n@attribute y REAL\n\n@DATA\n'a b', 2.5\nc,?\n";
        let ds = parse_arff(text).unwrap();
        assert_eq!(ds.schema()[0].name, "odd name");
        assert_eq!(ds.schema()[0].levels(), ["a b", "c"]);
        assert_eq!(ds.rows()[0][0], CellValue::Category("a b".into()));
        assert_eq!(ds.rows()[0][1], CellValue::Number(2.5));
    }

    #[test]
    fn undeclared_level_is_appended_with_warning() {
        let text = "@relation t\n@attribute c {A,B}\n@data\nA\nC\n";
        let ds = parse_arff(text).unwrap();
        assert_eq!(ds.schema()[0].levels(), ["A", "B", "C"]);
        assert_eq!(ds.warnings().len(), 1);
    }

    #[test]
    fn boolean_kind_detection() {
        assert_eq!(AttributeSchema::nominal("b", ["yes", "no"]).kind, AttributeKind::Boolean);
        assert_eq!(AttributeSchema::nominal("b", ["plus", "minus"]).kind, AttributeKind::Categorical);
        assert_eq!(AttributeSchema::nominal("b", ["0", "1"]).kind, AttributeKind::Categorical);
    }

    #[test]
    fn csv_inference() {
        let ds = parse_csv("a,b\n1,x\n", None).unwrap();
        assert_eq!(ds.n_rows(), 1);
        assert_eq!(ds.schema()[0].kind, AttributeKind::Numeric);
        assert_eq!(ds.schema()[1].kind, AttributeKind::Categorical);
    }

    #[test]
    fn csv_missing_markers_and_all_missing_numeric() {
        let ds = parse_csv("a,b,c\n1,,?\n?,y,\n", None).unwrap();
        assert_eq!(ds.schema()[2].kind, AttributeKind::Numeric);
        assert!(ds.rows()[0][1].is_missing());
        assert!(ds.rows()[1][0].is_missing());
        assert_eq!(ds.missing_count(), 4);
    }

    #[test]
    fn csv_arity_error() {
        assert!(matches!(parse_csv("a,b\n1,2,3\n", None), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn csv_schema_name_mismatch() {
        let schema = vec![AttributeSchema::numeric("a"), AttributeSchema::numeric("z")];
        assert!(parse_csv("a,b\n1,2\n", Some(&schema)).is_err());
    }

    #[test]
    fn target_requires_two_levels() {
        let ds = parse_arff(TINY).unwrap();
        assert!(ds.clone().with_target("c").is_ok());
        assert!(ds.clone().with_target("x").is_err());
        let one = parse_arff("@relation t\n@attribute c {A,B}\n@data\nA\nA\n").unwrap();
        assert!(one.with_target("c").is_err());
    }

    #[test]
    fn summary_constant_and_missing() {
        let ds = parse_csv("a,b\n5,1\n5,?\n5,3\n", None).unwrap();
        let s = summarize_numeric(&ds).unwrap();
        assert_eq!(s[0].mean, 5.0);
        assert_eq!(s[0].standard_deviation, 0.0);
        assert_eq!((s[0].minimum, s[0].maximum), (5.0, 5.0));
        assert_eq!(s[1].n_present, 2);
        assert_eq!(s[1].mean, 2.0);
    }

    #[test]
    fn summary_all_missing_column_errors() {
        let ds = parse_csv("a,b\n1,?\n2,?\n", None).unwrap();
        match summarize_numeric(&ds) {
            Err(Error::Column { column, .. }) => assert_eq!(column, "b"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn summary_divisors() {
        let ds = parse_csv("a\n1\n2\n3\n4\n", None).unwrap();
        let s = &summarize_numeric(&ds).unwrap()[0];
        assert!((s.standard_deviation - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((s.population_std - 1.25f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn drop_columns_protects_target() {
        let ds = parse_arff(TINY).unwrap().with_target("c").unwrap();
        assert!(ds.drop_columns(&["c"]).is_err());
        let d = ds.drop_columns(&["x", "nope"]).unwrap();
        assert_eq!(d.n_cols(), 1);
    }
}
