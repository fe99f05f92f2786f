//! MPS reader and writer.
//!
//! Records are split on whitespace, which covers free-format files and fixed-format files whose
//! names contain no blanks. `L` rows are negated into `≥` form, ranged rows are split into two
//! `≥` rows, and equality rows are moved to the front.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::problem::{LpProblem, NameTable};
use crate::sparse::SparseMatrix;

const INF: f64 = f64::INFINITY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Start,
    Name,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowKind {
    Objective,
    Dropped,
    Eq,
    Le,
    Ge,
}

struct Row {
    name: String,
    kind: RowKind,
    rhs: f64,
    range: Option<f64>,
}

#[derive(Default, Clone, Copy)]
struct BoundState {
    lower: Option<f64>,
    upper: Option<f64>,
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Mps {
        line,
        message: message.into(),
    }
}

fn number(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| err(line, format!("invalid number '{tok}'")))?;
    if v.is_nan() {
        return Err(err(line, "NaN value"));
    }
    Ok(v)
}

/// Reads an MPS file from disk.
pub fn read_mps_file(path: impl AsRef<Path>) -> Result<LpProblem> {
    let text = std::fs::read_to_string(path)?;
    parse_mps(&text)
}

pub fn parse_mps(text: &str) -> Result<LpProblem> {
    let mut section = Section::Start;
    let mut problem_name = String::new();
    let mut maximize = false;
    let mut rows: Vec<Row> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut columns: Vec<String> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    // (row, col, value) with rows indexing `rows`.
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let mut objective = Vec::new();
    let mut objective_rhs = 0.0;
    let mut bounds: Vec<BoundState> = Vec::new();
    let mut dropped_objectives = 0usize;
    let mut objective_row: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        let is_header = !raw.starts_with(char::is_whitespace);
        if is_header {
            let next = match tokens[0] {
                "NAME" => Section::Name,
                "OBJSENSE" => Section::ObjSense,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::End,
                // Free-format data lines may start in column 1 inside OBJSENSE.
                "MAX" | "MAXIMIZE" | "MIN" | "MINIMIZE" if section == Section::ObjSense => {
                    maximize = tokens[0].starts_with("MAX");
                    continue;
                }
                other => return Err(err(line, format!("unknown section '{other}'"))),
            };
            if next <= section {
                return Err(err(line, format!("section {} out of order", tokens[0])));
            }
            section = next;
            match next {
                Section::Name => problem_name = tokens[1..].join(" "),
                Section::ObjSense => {
                    if let Some(sense) = tokens.get(1) {
                        maximize = parse_sense(sense, line)?;
                    }
                }
                Section::Columns => {
                    if objective_row.is_none() {
                        return Err(err(line, "no objective (N) row declared"));
                    }
                }
                Section::End => break,
                _ => {}
            }
            continue;
        }

        match section {
            Section::ObjSense => maximize = parse_sense(tokens[0], line)?,
            Section::Rows => {
                if tokens.len() != 2 {
                    return Err(err(line, "ROWS record needs a type and a name"));
                }
                let kind = match tokens[0] {
                    "N" if objective_row.is_none() => RowKind::Objective,
                    "N" => {
                        dropped_objectives += 1;
                        RowKind::Dropped
                    }
                    "E" => RowKind::Eq,
                    "L" => RowKind::Le,
                    "G" => RowKind::Ge,
                    other => return Err(err(line, format!("unknown row type '{other}'"))),
                };
                let name = tokens[1].to_string();
                if row_index.insert(name.clone(), rows.len()).is_some() {
                    return Err(err(line, format!("duplicate row '{name}'")));
                }
                if kind == RowKind::Objective {
                    objective_row = Some(rows.len());
                }
                rows.push(Row {
                    name,
                    kind,
                    rhs: 0.0,
                    range: None,
                });
            }
            Section::Columns => {
                if tokens.get(1) == Some(&"'MARKER'") {
                    continue;
                }
                if tokens.len() != 3 && tokens.len() != 5 {
                    return Err(err(line, "COLUMNS record needs 3 or 5 fields"));
                }
                let name = tokens[0];
                let col = match col_index.get(name) {
                    Some(&c) => c,
                    None => {
                        let c = columns.len();
                        col_index.insert(name.to_string(), c);
                        columns.push(name.to_string());
                        objective.push(0.0);
                        bounds.push(BoundState::default());
                        c
                    }
                };
                for pair in tokens[1..].chunks(2) {
                    let r = lookup(&row_index, pair[0], "row", line)?;
                    let v = number(pair[1], line)?;
                    match rows[r].kind {
                        RowKind::Objective => objective[col] += v,
                        RowKind::Dropped => {}
                        _ => entries.push((r, col, v)),
                    }
                }
            }
            Section::Rhs | Section::Ranges => {
                let fields = match tokens.len() {
                    2 | 4 => &tokens[..],
                    3 | 5 => &tokens[1..],
                    _ => return Err(err(line, "RHS/RANGES record needs 2 to 5 fields")),
                };
                for pair in fields.chunks(2) {
                    let r = lookup(&row_index, pair[0], "row", line)?;
                    let v = number(pair[1], line)?;
                    if section == Section::Rhs {
                        match rows[r].kind {
                            RowKind::Objective => objective_rhs = v,
                            RowKind::Dropped => {}
                            _ => rows[r].rhs = v,
                        }
                    } else {
                        match rows[r].kind {
                            RowKind::Objective | RowKind::Dropped => {
                                return Err(err(line, "range on an objective row"))
                            }
                            _ => rows[r].range = Some(v),
                        }
                    }
                }
            }
            Section::Bounds => parse_bound(&tokens, line, &col_index, &mut bounds)?,
            Section::Start | Section::Name => {
                return Err(err(line, "data record before ROWS"));
            }
            Section::End => unreachable!(),
        }
    }
    if section < Section::Columns {
        return Err(err(text.lines().count(), "missing COLUMNS section"));
    }
    if dropped_objectives > 0 {
        log::warn!("ignored {dropped_objectives} additional objective rows");
    }

    let n = columns.len();
    let mut lower = vec![0.0; n];
    let mut upper = vec![INF; n];
    for (j, b) in bounds.iter().enumerate() {
        if let Some(l) = b.lower {
            lower[j] = l;
        }
        if let Some(u) = b.upper {
            upper[j] = u;
        }
        if lower[j] > upper[j] {
            return Err(err(
                0,
                format!("conflicting bounds [{}, {}] on column '{}'", lower[j], upper[j], columns[j]),
            ));
        }
    }

    // Map each source row to one or two output rows: (block, index, sign).
    #[derive(Clone, Copy)]
    enum Out {
        Eq(usize),
        Ge(usize, f64),
    }
    let mut targets: Vec<Vec<Out>> = Vec::with_capacity(rows.len());
    let mut b_eq = Vec::new();
    let mut b_ineq = Vec::new();
    let mut eq_names = Vec::new();
    let mut ineq_names = Vec::new();
    for row in &rows {
        let mut t = Vec::new();
        let mut ge = |rhs: f64, sign: f64, name: String, t: &mut Vec<Out>| {
            t.push(Out::Ge(b_ineq.len(), sign));
            b_ineq.push(sign * rhs);
            ineq_names.push(name);
        };
        match (row.kind, row.range) {
            (RowKind::Objective | RowKind::Dropped, _) => {}
            (RowKind::Eq, None) | (RowKind::Eq, Some(0.0)) => {
                t.push(Out::Eq(b_eq.len()));
                b_eq.push(row.rhs);
                eq_names.push(row.name.clone());
            }
            (RowKind::Ge, None) => ge(row.rhs, 1.0, row.name.clone(), &mut t),
            (RowKind::Le, None) => ge(row.rhs, -1.0, row.name.clone(), &mut t),
            (kind, Some(r)) => {
                let (lo, hi) = match kind {
                    RowKind::Eq if r > 0.0 => (row.rhs, row.rhs + r),
                    RowKind::Eq => (row.rhs + r, row.rhs),
                    RowKind::Le => (row.rhs - r.abs(), row.rhs),
                    _ => (row.rhs, row.rhs + r.abs()),
                };
                ge(lo, 1.0, format!("{}_lo", row.name), &mut t);
                ge(hi, -1.0, format!("{}_hi", row.name), &mut t);
            }
        }
        targets.push(t);
    }
    let mut eq_trip = Vec::new();
    let mut ineq_trip = Vec::new();
    for &(r, c, v) in &entries {
        for out in &targets[r] {
            match *out {
                Out::Eq(i) => eq_trip.push((i, c, v)),
                Out::Ge(i, s) => ineq_trip.push((i, c, s * v)),
            }
        }
    }
    let a_eq = SparseMatrix::from_triplets(b_eq.len(), n, &eq_trip)?;
    let a_ineq = SparseMatrix::from_triplets(b_ineq.len(), n, &ineq_trip)?;

    let constant = -objective_rhs;
    let (c, objective_constant) = if maximize {
        (objective.iter().map(|v| -v).collect(), -constant)
    } else {
        (objective, constant)
    };
    let mut p = LpProblem::new(a_eq, a_ineq, b_eq, b_ineq, c, lower, upper)?
        .with_objective_constant(objective_constant);
    p.maximize = maximize;
    eq_names.extend(ineq_names);
    p.names = Some(NameTable {
        problem: problem_name,
        rows: eq_names,
        columns,
    });
    Ok(p)
}

fn parse_sense(tok: &str, line: usize) -> Result<bool> {
    match tok {
        "MAX" | "MAXIMIZE" => Ok(true),
        "MIN" | "MINIMIZE" => Ok(false),
        other => Err(err(line, format!("unknown objective sense '{other}'"))),
    }
}

fn lookup(index: &HashMap<String, usize>, name: &str, what: &str, line: usize) -> Result<usize> {
    index
        .get(name)
        .copied()
        .ok_or_else(|| err(line, format!("unknown {what} '{name}'")))
}

fn parse_bound(
    tokens: &[&str],
    line: usize,
    col_index: &HashMap<String, usize>,
    bounds: &mut [BoundState],
) -> Result<()> {
    let kind = tokens[0];
    let needs_value = !matches!(kind, "FR" | "MI" | "PL" | "BV");
    let (col_tok, value_tok) = match (needs_value, tokens.len()) {
        (true, 4) => (tokens[2], Some(tokens[3])),
        (true, 3) => (tokens[1], Some(tokens[2])),
        (false, 3) => (tokens[2], None),
        (false, 2) => (tokens[1], None),
        // BV with an explicit (ignored) value.
        (false, 4) if kind == "BV" => (tokens[2], None),
        _ => return Err(err(line, format!("malformed {kind} bound record"))),
    };
    let j = lookup(col_index, col_tok, "column", line)?;
    let value = value_tok.map(|t| number(t, line)).transpose()?;
    let b = &mut bounds[j];
    let set = |slot: &mut Option<f64>, v: f64, which: &str| -> Result<()> {
        if let Some(old) = *slot {
            if old != v {
                return Err(err(
                    line,
                    format!("conflicting {which} bounds {old} and {v} on column '{col_tok}'"),
                ));
            }
        }
        *slot = Some(v);
        Ok(())
    };
    match kind {
        "UP" | "UI" => {
            let v = value.unwrap();
            if v < 0.0 && b.lower.is_none() {
                log::warn!("line {line}: negative upper bound with default lower bound; lower set to -inf");
                b.lower = Some(-INF);
            }
            set(&mut b.upper, v, "upper")?;
        }
        "LO" | "LI" => set(&mut b.lower, value.unwrap(), "lower")?,
        "FX" => {
            let v = value.unwrap();
            set(&mut b.lower, v, "lower")?;
            set(&mut b.upper, v, "upper")?;
        }
        "FR" => {
            set(&mut b.lower, -INF, "lower")?;
            set(&mut b.upper, INF, "upper")?;
        }
        "MI" => set(&mut b.lower, -INF, "lower")?,
        "PL" => set(&mut b.upper, INF, "upper")?,
        "BV" => {
            set(&mut b.lower, 0.0, "lower")?;
            set(&mut b.upper, 1.0, "upper")?;
        }
        other => return Err(err(line, format!("unknown bound type '{other}'"))),
    }
    Ok(())
}

/// Writes `p` in free MPS format. Equality rows become `E` rows and inequality rows `G` rows.
pub fn write_mps(p: &LpProblem) -> String {
    let (m1, m, n) = (p.m1(), p.m(), p.n());
    let names = p
        .names
        .as_ref()
        .filter(|t| t.rows.len() == m && t.columns.len() == n);
    let row_name = |i: usize| names.map_or_else(|| format!("R{i}"), |t| t.rows[i].clone());
    let col_name = |j: usize| names.map_or_else(|| format!("C{j}"), |t| t.columns[j].clone());
    let problem = names.map_or("LP", |t| t.problem.as_str());
    let sign = if p.maximize { -1.0 } else { 1.0 };

    let mut out = String::new();
    let _ = writeln!(out, "NAME {}", if problem.is_empty() { "LP" } else { problem });
    if p.maximize {
        let _ = writeln!(out, "OBJSENSE\n    MAX");
    }
    out.push_str("ROWS\n N OBJ\n");
    for i in 0..m {
        let _ = writeln!(out, " {} {}", if i < m1 { 'E' } else { 'G' }, row_name(i));
    }
    out.push_str("COLUMNS\n");
    let at = p.stacked_matrix().transpose();
    for j in 0..n {
        let name = col_name(j);
        let cj = sign * p.c[j];
        if cj != 0.0 || at.row(j).next().is_none() {
            let _ = writeln!(out, "    {name} OBJ {cj}");
        }
        for (i, v) in at.row(j) {
            let _ = writeln!(out, "    {name} {} {v}", row_name(i));
        }
    }
    out.push_str("RHS\n");
    for (i, &v) in p.b_eq.iter().chain(&p.b_ineq).enumerate() {
        if v != 0.0 {
            let _ = writeln!(out, "    RHS {} {v}", row_name(i));
        }
    }
    let constant = sign * p.objective_constant;
    if constant != 0.0 {
        let _ = writeln!(out, "    RHS OBJ {}", -constant);
    }
    out.push_str("BOUNDS\n");
    for j in 0..n {
        let (l, u) = (p.lower[j], p.upper[j]);
        let name = col_name(j);
        if l == -INF && u == INF {
            let _ = writeln!(out, " FR BND {name}");
        } else if l == u {
            let _ = writeln!(out, " FX BND {name} {l}");
        } else {
            if l == -INF {
                let _ = writeln!(out, " MI BND {name}");
            } else if l != 0.0 {
                let _ = writeln!(out, " LO BND {name} {l}");
            }
            if u != INF {
                let _ = writeln!(out, " UP BND {name} {u}");
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}
