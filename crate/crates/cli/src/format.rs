//! Model and graph files.
//!
//! ```text
//! # comment
//! [variables]          [ising]                 [graph]
//! <name> <card>        vertices <n>            vertices <n>
//! [factors]            edge <i> <j> <J>        edge <i> <j> [<weight>]
//! <name> <member>... : <value>...    field <i> <h>
//! ```
//!
//! A file holds either `[variables]` with `[factors]`, or `[ising]`, or
//! `[graph]`. Factor tables are row-major in member order, first member
//! most significant.

use std::fmt;

use bethe_core::graph_core::{FactorGraph, Graph};
use bethe_core::models::{BinaryPairwiseModel, DiscreteModel};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorDecl {
    pub name: String,
    pub members: Vec<usize>,
    pub table: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelFile {
    Discrete { names: Vec<String>, card: Vec<usize>, factors: Vec<FactorDecl> },
    Ising { n: usize, edges: Vec<(usize, usize, f64)>, fields: Vec<f64> },
    Graph { n: usize, edges: Vec<(usize, usize)>, weights: Option<Vec<f64>> },
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Variables,
    Factors,
    Ising,
    Graph,
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError { line, message: message.into() }
}

fn num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T, ParseError> {
    tok.parse().map_err(|_| err(line, format!("expected {what}, found `{tok}`")))
}

fn finite(tok: &str, line: usize, what: &str) -> Result<f64, ParseError> {
    let x: f64 = num(tok, line, what)?;
    if !x.is_finite() {
        return Err(err(line, format!("{what} must be finite")));
    }
    Ok(x)
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut section = Section::None;
        let mut seen: Vec<Section> = Vec::new();
        let mut names: Vec<String> = Vec::new();
        let mut card: Vec<usize> = Vec::new();
        let mut factors: Vec<(usize, String, Vec<String>, Vec<f64>)> = Vec::new();
        let mut declared_n: Option<(usize, usize)> = None;
        let mut edges: Vec<(usize, usize, Option<f64>, usize)> = Vec::new();
        let mut fields: Vec<(usize, f64, usize)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if content.starts_with('[') {
                section = match content {
                    "[variables]" => Section::Variables,
                    "[factors]" => Section::Factors,
                    "[ising]" => Section::Ising,
                    "[graph]" => Section::Graph,
                    other => return Err(err(line, format!("unknown section `{other}`"))),
                };
                if seen.contains(&section) {
                    return Err(err(line, format!("section `{content}` appears twice")));
                }
                seen.push(section);
                continue;
            }
            let toks: Vec<&str> = content.split_whitespace().collect();
            match section {
                Section::None => return Err(err(line, "content before the first section header")),
                Section::Variables => {
                    if toks.len() != 2 {
                        return Err(err(line, "expected `<name> <cardinality>`"));
                    }
                    if names.iter().any(|n| n == toks[0]) {
                        return Err(err(line, format!("variable `{}` declared twice", toks[0])));
                    }
                    let q: usize = num(toks[1], line, "a cardinality")?;
                    if q < 2 {
                        return Err(err(line, "cardinality must be at least 2"));
                    }
                    names.push(toks[0].to_string());
                    card.push(q);
                }
                Section::Factors => {
                    let (head, values) = content
                        .split_once(':')
                        .ok_or_else(|| err(line, "expected `<name> <member>... : <value>...`"))?;
                    let head: Vec<&str> = head.split_whitespace().collect();
                    if head.len() < 2 {
                        return Err(err(line, "a factor needs a name and at least one member"));
                    }
                    let table = values.split_whitespace().map(|t| finite(t, line, "a table value")).collect::<Result<
                        Vec<f64>,
                        _,
                    >>(
                    )?;
                    factors.push((line, head[0].to_string(), head[1..].iter().map(|s| s.to_string()).collect(), table));
                }
                Section::Ising | Section::Graph => match toks[0] {
                    "vertices" => {
                        if toks.len() != 2 {
                            return Err(err(line, "expected `vertices <n>`"));
                        }
                        if declared_n.is_some() {
                            return Err(err(line, "`vertices` given twice"));
                        }
                        declared_n = Some((num(toks[1], line, "a vertex count")?, line));
                    }
                    "edge" => {
                        let ising = section == Section::Ising;
                        let ok = if ising { toks.len() == 4 } else { toks.len() == 3 || toks.len() == 4 };
                        if !ok {
                            return Err(err(
                                line,
                                if ising {
                                    "expected `edge <i> <j> <J>`"
                                } else {
                                    "expected `edge <i> <j> [<weight>]`"
                                },
                            ));
                        }
                        let i = num(toks[1], line, "a vertex index")?;
                        let j = num(toks[2], line, "a vertex index")?;
                        let w = toks.get(3).map(|t| finite(t, line, "an edge value")).transpose()?;
                        edges.push((i, j, w, line));
                    }
                    "field" if section == Section::Ising => {
                        if toks.len() != 3 {
                            return Err(err(line, "expected `field <i> <h>`"));
                        }
                        fields.push((num(toks[1], line, "a vertex index")?, finite(toks[2], line, "a field")?, line));
                    }
                    other => return Err(err(line, format!("unknown directive `{other}`"))),
                },
            }
        }

        let has = |s: Section| seen.contains(&s);
        let kinds = usize::from(has(Section::Variables) || has(Section::Factors))
            + usize::from(has(Section::Ising))
            + usize::from(has(Section::Graph));
        if kinds != 1 {
            return Err(err(0, "a file holds exactly one of [variables]/[factors], [ising] or [graph]"));
        }
        if has(Section::Variables) || has(Section::Factors) {
            if names.is_empty() {
                return Err(err(0, "no variables declared"));
            }
            let mut decls = Vec::new();
            for (line, name, members, table) in factors {
                let ids = members
                    .iter()
                    .map(|m| {
                        names.iter().position(|n| n == m).ok_or_else(|| err(line, format!("unknown variable `{m}`")))
                    })
                    .collect::<Result<Vec<usize>, _>>()?;
                let size: usize = ids.iter().map(|&i| card[i]).product();
                if table.len() != size {
                    return Err(err(line, format!("factor `{name}` needs {size} table values, found {}", table.len())));
                }
                if decls.iter().any(|d: &FactorDecl| d.name == name) {
                    return Err(err(line, format!("factor `{name}` declared twice")));
                }
                decls.push(FactorDecl { name, members: ids, table });
            }
            return Ok(ModelFile::Discrete { names, card, factors: decls });
        }
        let max_id = edges.iter().flat_map(|e| [e.0, e.1]).chain(fields.iter().map(|f| f.0)).max();
        let n = match declared_n {
            Some((n, _)) => n,
            None => max_id.map_or(0, |m| m + 1),
        };
        for &(i, j, _, line) in &edges {
            if i >= n || j >= n {
                return Err(err(line, format!("vertex index out of range for {n} vertices")));
            }
        }
        if has(Section::Ising) {
            let mut h = vec![0.0; n];
            for (i, v, line) in fields {
                if i >= n {
                    return Err(err(line, format!("vertex index out of range for {n} vertices")));
                }
                h[i] += v;
            }
            if let Some(&(_, _, _, line)) = edges.iter().find(|e| e.0 == e.1) {
                return Err(err(line, "an Ising edge cannot be a loop"));
            }
            let edges = edges.into_iter().map(|(i, j, w, _)| (i, j, w.expect("checked arity"))).collect();
            return Ok(ModelFile::Ising { n, edges, fields: h });
        }
        let weighted = edges.iter().filter(|e| e.2.is_some()).count();
        if weighted != 0 && weighted != edges.len() {
            let line = edges.iter().find(|e| e.2.is_none()).map_or(0, |e| e.3);
            return Err(err(line, "either every edge has a weight or none does"));
        }
        let weights = (weighted > 0).then(|| edges.iter().map(|e| e.2.expect("checked")).collect());
        Ok(ModelFile::Graph { n, edges: edges.into_iter().map(|(i, j, _, _)| (i, j)).collect(), weights })
    }

    /// Canonical text; `parse(to_text())` returns an equal value.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self {
            ModelFile::Discrete { names, card, factors } => {
                out.push_str("[variables]\n");
                for (n, q) in names.iter().zip(card) {
                    out.push_str(&format!("{n} {q}\n"));
                }
                out.push_str("[factors]\n");
                for f in factors {
                    let members: Vec<&str> = f.members.iter().map(|&i| names[i].as_str()).collect();
                    let values: Vec<String> = f.table.iter().map(|v| v.to_string()).collect();
                    out.push_str(&format!("{} {} : {}\n", f.name, members.join(" "), values.join(" ")));
                }
            }
            ModelFile::Ising { n, edges, fields } => {
                out.push_str(&format!("[ising]\nvertices {n}\n"));
                for (i, j, w) in edges {
                    out.push_str(&format!("edge {i} {j} {w}\n"));
                }
                for (i, h) in fields.iter().enumerate() {
                    if *h != 0.0 {
                        out.push_str(&format!("field {i} {h}\n"));
                    }
                }
            }
            ModelFile::Graph { n, edges, weights } => {
                out.push_str(&format!("[graph]\nvertices {n}\n"));
                for (k, (i, j)) in edges.iter().enumerate() {
                    match weights {
                        Some(w) => out.push_str(&format!("edge {i} {j} {}\n", w[k])),
                        None => out.push_str(&format!("edge {i} {j}\n")),
                    }
                }
            }
        }
        out
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelFile::Discrete { .. } => "discrete",
            ModelFile::Ising { .. } => "ising",
            ModelFile::Graph { .. } => "graph",
        }
    }

    pub fn variable_names(&self) -> Vec<String> {
        match self {
            ModelFile::Discrete { names, .. } => names.clone(),
            ModelFile::Ising { n, .. } | ModelFile::Graph { n, .. } => (0..*n).map(|i| i.to_string()).collect(),
        }
    }

    pub fn discrete(&self) -> Result<DiscreteModel, String> {
        match self {
            ModelFile::Discrete { card, factors, .. } => {
                let fg = FactorGraph::new(card.len(), factors.iter().map(|f| f.members.clone()).collect())
                    .map_err(|e| e.to_string())?;
                DiscreteModel::new(fg, card.clone(), factors.iter().map(|f| f.table.clone()).collect())
                    .map_err(|e| e.to_string())
            }
            ModelFile::Ising { .. } => Ok(self.ising()?.to_discrete()),
            ModelFile::Graph { .. } => Err("a [graph] file carries no model; use [ising] or [factors]".into()),
        }
    }

    pub fn ising(&self) -> Result<BinaryPairwiseModel, String> {
        match self {
            ModelFile::Ising { n, edges, fields } => {
                let g = Graph::new(*n, edges.iter().map(|e| (e.0, e.1)).collect()).map_err(|e| e.to_string())?;
                BinaryPairwiseModel::new(g, edges.iter().map(|e| e.2).collect(), fields.clone())
                    .map_err(|e| e.to_string())
            }
            _ => Err("this check needs an [ising] model".into()),
        }
    }

    /// The underlying graph: `[graph]`, the Ising graph, or a factor graph
    /// whose factors are all pairwise.
    pub fn graph(&self) -> Result<Graph, String> {
        match self {
            ModelFile::Graph { n, edges, .. } => Graph::new(*n, edges.clone()).map_err(|e| e.to_string()),
            ModelFile::Ising { n, edges, .. } => {
                Graph::new(*n, edges.iter().map(|e| (e.0, e.1)).collect()).map_err(|e| e.to_string())
            }
            ModelFile::Discrete { card, factors, .. } => {
                if factors.iter().any(|f| f.members.len() != 2) {
                    return Err("factor graph has a factor that is not pairwise".into());
                }
                Graph::new(card.len(), factors.iter().map(|f| (f.members[0], f.members[1])).collect())
                    .map_err(|e| e.to_string())
            }
        }
    }

    /// Edge weights of a `[graph]` file, defaulting to one.
    pub fn edge_weights(&self) -> Option<Vec<f64>> {
        match self {
            ModelFile::Graph { edges, weights, .. } => Some(weights.clone().unwrap_or_else(|| vec![1.0; edges.len()])),
            _ => None,
        }
    }
}
