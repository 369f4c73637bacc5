//! External formats: the CSV form-function table, the canonical graph JSON
//! (also used for gold standards) and DOT export.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{GraphFormatError, ModelError, TableError};
use crate::model::{
    ConceptualGraph, EdgeKey, FormFunctionTable, FormInstance, FunctionId, GoldStandard, Provenance, Weight,
};

/// Parses a comma-separated table whose first two columns hold the
/// language and form, and whose remaining columns are 0/1 function cells.
///
/// The first two header cells are matched by position, not by name.
pub fn parse_table(raw: &[u8]) -> Result<FormFunctionTable, TableError> {
    let text = std::str::from_utf8(raw).map_err(|_| TableError::Encoding)?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();

    let header = match records.next() {
        Some(rec) => rec.map_err(|e| TableError::Csv(e.to_string()))?,
        None => return Err(TableError::MissingHeader),
    };
    if header.len() < 2 || header.iter().all(|c| c.is_empty()) {
        return Err(TableError::MissingHeader);
    }
    if header.len() == 2 {
        return Err(TableError::NoFunctionColumns);
    }
    let functions: Vec<String> = header.iter().skip(2).map(str::to_owned).collect();
    let width = header.len();

    let mut instances = Vec::new();
    for (i, rec) in records.enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| TableError::Csv(e.to_string()))?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        if rec.len() != width {
            return Err(TableError::Ragged {
                row,
                expected: width,
                found: rec.len(),
            });
        }
        let mut fs = Vec::new();
        for (j, cell) in rec.iter().skip(2).enumerate() {
            match cell {
                "1" => fs.push(FunctionId::from(j)),
                "0" => {}
                other => {
                    return Err(TableError::Cell {
                        row,
                        column: functions[j].clone(),
                        value: other.to_owned(),
                    })
                }
            }
        }
        instances.push(FormInstance::new(&rec[0], &rec[1], fs));
    }
    Ok(FormFunctionTable::new(functions, instances)?)
}

/// Writes a table back in the input format with `language,form` headers.
pub fn write_table(table: &FormFunctionTable) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let n = table.function_count();
    let mut header = vec!["language".to_owned(), "form".to_owned()];
    header.extend(table.functions().iter().cloned());
    w.write_record(&header).expect("in-memory write");
    for inst in table.instances() {
        let mut row = vec![inst.language.clone(), inst.form.clone()];
        let mut cells = vec!["0".to_owned(); n];
        for f in &inst.functions {
            cells[f.index()] = "1".to_owned();
        }
        row.extend(cells);
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeDoc {
    id: i64,
    label: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeDoc {
    source: i64,
    target: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<Weight>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphDoc {
    nodes: Vec<NodeDoc>,
    edges: Vec<EdgeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

/// Output format for a single graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphFormat {
    Json,
    Dot,
}

impl std::str::FromStr for GraphFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(GraphFormat::Json),
            "dot" => Ok(GraphFormat::Dot),
            other => Err(format!("unknown graph format {other:?} (expected json or dot)")),
        }
    }
}

pub fn serialize_graph(g: &ConceptualGraph, format: GraphFormat) -> String {
    match format {
        GraphFormat::Json => graph_to_json(g),
        GraphFormat::Dot => graph_to_dot(g),
    }
}

fn graph_doc(g: &ConceptualGraph) -> GraphDoc {
    GraphDoc {
        nodes: g
            .labels()
            .iter()
            .enumerate()
            .map(|(i, l)| NodeDoc {
                id: i as i64,
                label: l.clone(),
            })
            .collect(),
        edges: g
            .edges()
            .map(|(k, w)| EdgeDoc {
                source: k.lo().0 as i64,
                target: k.hi().0 as i64,
                weight: Some(w),
            })
            .collect(),
        provenance: Some(g.provenance()),
    }
}

pub fn graph_to_json(g: &ConceptualGraph) -> String {
    serde_json::to_string_pretty(&graph_doc(g)).expect("graph doc serializes")
}

/// Gold standards are written in the graph shape without weights.
pub fn gold_to_json(gold: &GoldStandard) -> String {
    let mut doc = graph_doc(&gold.to_graph());
    for e in &mut doc.edges {
        e.weight = None;
    }
    doc.provenance = None;
    serde_json::to_string_pretty(&doc).expect("gold doc serializes")
}

struct ParsedDoc {
    labels: Vec<String>,
    edges: Vec<(EdgeKey, Option<Weight>)>,
    provenance: Option<Provenance>,
}

fn parse_doc(raw: &[u8]) -> Result<ParsedDoc, GraphFormatError> {
    let doc: GraphDoc = serde_json::from_slice(raw)?;
    let mut index = HashMap::new();
    let mut labels = Vec::with_capacity(doc.nodes.len());
    let mut seen = BTreeSet::new();
    for (pos, node) in doc.nodes.iter().enumerate() {
        if index.insert(node.id, pos).is_some() {
            return Err(GraphFormatError::DuplicateNodeId(node.id));
        }
        if node.label.trim().is_empty() {
            return Err(ModelError::EmptyLabel.into());
        }
        if !seen.insert(node.label.as_str()) {
            return Err(ModelError::DuplicateFunction(node.label.clone()).into());
        }
        labels.push(node.label.clone());
    }
    let mut edges = Vec::with_capacity(doc.edges.len());
    let mut keys = BTreeSet::new();
    for e in &doc.edges {
        let s = *index.get(&e.source).ok_or(GraphFormatError::UnknownNodeId(e.source))?;
        let t = *index.get(&e.target).ok_or(GraphFormatError::UnknownNodeId(e.target))?;
        let key = EdgeKey::new(s, t).ok_or_else(|| GraphFormatError::SelfLoop(labels[s].clone()))?;
        if !keys.insert(key) {
            return Err(ModelError::DuplicateEdge(labels[s].clone(), labels[t].clone()).into());
        }
        edges.push((key, e.weight));
    }
    Ok(ParsedDoc {
        labels,
        edges,
        provenance: doc.provenance,
    })
}

/// Parses the canonical graph JSON. Nodes keep the order of the file;
/// a missing provenance reads as `edited`.
pub fn parse_graph(raw: &[u8]) -> Result<ConceptualGraph, GraphFormatError> {
    let doc = parse_doc(raw)?;
    let mut weighted = Vec::with_capacity(doc.edges.len());
    for (key, w) in doc.edges {
        let w = w.ok_or_else(|| {
            GraphFormatError::MissingWeight(
                doc.labels[key.lo().index()].clone(),
                doc.labels[key.hi().index()].clone(),
            )
        })?;
        weighted.push((key, w));
    }
    Ok(ConceptualGraph::from_edges(
        doc.labels,
        weighted,
        doc.provenance.unwrap_or(Provenance::Edited),
    )?)
}

fn resolve_labels(labels: &[String], table: &FormFunctionTable) -> Result<Vec<FunctionId>, GraphFormatError> {
    let mut ids = Vec::with_capacity(labels.len());
    let mut missing = Vec::new();
    for l in labels {
        match table.function_id(l) {
            Some(id) => ids.push(id),
            None => missing.push(l.clone()),
        }
    }
    if missing.is_empty() {
        Ok(ids)
    } else {
        Err(GraphFormatError::Unresolved(missing))
    }
}

/// Re-indexes a parsed graph onto a table's function columns. Table
/// functions absent from the graph become isolated nodes.
pub fn resolve_graph(g: &ConceptualGraph, table: &FormFunctionTable) -> Result<ConceptualGraph, GraphFormatError> {
    let ids = resolve_labels(g.labels(), table)?;
    let labels: Arc<[String]> = table.functions().to_vec().into();
    let edges = g.edges().map(|(k, w)| {
        let key = EdgeKey::new(ids[k.lo().index()], ids[k.hi().index()]).expect("distinct labels map to distinct ids");
        (key, w)
    });
    let provenance = match g.provenance() {
        // reordering nodes cannot break tree shape, but a subset graph may
        Provenance::MstCandidate if g.node_count() != table.function_count() => Provenance::Edited,
        p => p,
    };
    Ok(ConceptualGraph::from_edges(labels, edges, provenance)?)
}

/// Parses a gold standard and resolves its labels against `table`.
/// Weights, if present, are ignored.
pub fn parse_gold(raw: &[u8], table: &FormFunctionTable) -> Result<GoldStandard, GraphFormatError> {
    let doc = parse_doc(raw)?;
    let ids = resolve_labels(&doc.labels, table)?;
    let edges = doc
        .edges
        .iter()
        .map(|(k, _)| EdgeKey::new(ids[k.lo().index()], ids[k.hi().index()]).expect("distinct labels"));
    Ok(GoldStandard::new(table.functions().to_vec(), edges)?)
}

fn dot_quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

const MIN_PENWIDTH: f64 = 1.0;
const MAX_PENWIDTH: f64 = 8.0;

/// Line thickness for an edge, linear in weight relative to the heaviest
/// edge of the graph.
pub fn penwidth(w: Weight, max: Weight) -> f64 {
    if max.is_zero() {
        return MIN_PENWIDTH;
    }
    MIN_PENWIDTH + (MAX_PENWIDTH - MIN_PENWIDTH) * (w.to_f64() / max.to_f64())
}

pub fn graph_to_dot(g: &ConceptualGraph) -> String {
    let max = g.edges().map(|(_, w)| w).max().unwrap_or_default();
    let mut out = String::new();
    writeln!(out, "graph {} {{", dot_quote(&g.provenance().to_string())).unwrap();
    for l in g.labels() {
        writeln!(out, "  {};", dot_quote(l)).unwrap();
    }
    for (k, w) in g.edges() {
        writeln!(
            out,
            "  {} -- {} [weight={}, penwidth={:.3}, label={}];",
            dot_quote(g.label(k.lo())),
            dot_quote(g.label(k.hi())),
            w,
            penwidth(w, max),
            dot_quote(&w.to_string()),
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_full_row() {
        let t = parse_table(b"language,form,A,B\nmandarin,chi,1,1\n").unwrap();
        assert_eq!(t.instances().len(), 1);
        assert_eq!(t.instances()[0].functions, vec![FunctionId(0), FunctionId(1)]);
        assert_eq!(t.sparsity(), 0.0);
    }

    #[test]
    fn half_sparse() {
        let t = parse_table(b"language,form,A,B\nl1,f1,1,0\nl1,f2,0,1\n").unwrap();
        assert_eq!(t.instances().len(), 2);
        assert_eq!(t.sparsity(), 0.5);
    }

    #[test]
    fn header_positions_not_names() {
        let t = parse_table("Sprache,Form,x,y\nde,auch,1,0\n".as_bytes()).unwrap();
        assert_eq!(t.functions(), &["x".to_owned(), "y".to_owned()]);
        assert_eq!(t.instances()[0].language, "de");
    }

    #[test]
    fn empty_rows_kept_for_sparsity() {
        let t = parse_table(b"language,form,A,B\nl1,f1,1,1\nl1,f2,0,0\n").unwrap();
        assert_eq!(t.instances().len(), 2);
        assert!(t.instances()[1].is_empty());
        assert_eq!(t.sparsity(), 0.5);
        assert_eq!(t.expressed_forms().count(), 1);
    }

    #[test]
    fn format_errors() {
        assert!(matches!(parse_table(b""), Err(TableError::MissingHeader)));
        assert!(matches!(parse_table(b"language\n"), Err(TableError::MissingHeader)));
        assert!(matches!(
            parse_table(b"language,form\nl,f\n"),
            Err(TableError::NoFunctionColumns)
        ));
        match parse_table(b"language,form,A,B\nl1,f1,1,2\n") {
            Err(TableError::Cell { row, column, value }) => {
                assert_eq!((row, column.as_str(), value.as_str()), (1, "B", "2"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_table(b"language,form,A,A\nl1,f1,1,0\n"),
            Err(TableError::Model(ModelError::DuplicateFunction(_)))
        ));
        assert!(matches!(
            parse_table(b"language,form,A\nl1,f1\n"),
            Err(TableError::Ragged { .. })
        ));
        assert!(matches!(
            parse_table(b"language,form,A\n"),
            Err(TableError::Model(ModelError::NoInstances))
        ));
    }

    #[test]
    fn empty_graph_json() {
        let g = ConceptualGraph::empty(vec!["A".to_owned(), "B".to_owned(), "C".to_owned()], Provenance::Edited);
        let v: serde_json::Value = serde_json::from_str(&graph_to_json(&g)).unwrap();
        assert_eq!(v["nodes"].as_array().unwrap().len(), 3);
        assert!(v["edges"].as_array().unwrap().is_empty());
        assert_eq!(v["provenance"], "edited");
    }

    #[test]
    fn triangle_dot() {
        let e = |a: usize, b: usize, w: u64| (EdgeKey::new(a, b).unwrap(), Weight::from_count(w));
        let g = ConceptualGraph::from_edges(
            vec!["A".to_owned(), "B".to_owned(), "C".to_owned()],
            [e(0, 1, 1), e(1, 2, 2), e(0, 2, 3)],
            Provenance::InitialG0,
        )
        .unwrap();
        let dot = graph_to_dot(&g);
        let lines: Vec<&str> = dot.lines().filter(|l| l.contains(" -- ")).collect();
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|l| l.contains("weight=") && l.contains("penwidth=")));
        assert!(dot.contains("\"A\" -- \"C\" [weight=3, penwidth=8.000"));
    }

    #[test]
    fn gold_resolution() {
        let table = parse_table(b"language,form,A,B,C\nl,f,1,1,1\n").unwrap();
        let gold = parse_gold(
            br#"{"nodes":[{"id":0,"label":"B"},{"id":1,"label":"A"}],"edges":[{"source":0,"target":1}]}"#,
            &table,
        )
        .unwrap();
        assert_eq!(gold.edges().len(), 1);
        assert!(gold.contains(EdgeKey::new(0usize, 1usize).unwrap()));

        let err = parse_gold(
            br#"{"nodes":[{"id":0,"label":"X"},{"id":1,"label":"A"}],"edges":[{"source":0,"target":1}]}"#,
            &table,
        )
        .unwrap_err();
        assert!(matches!(err, GraphFormatError::Unresolved(l) if l == vec!["X".to_owned()]));
    }

    #[test]
    fn self_loops_rejected() {
        let raw =
            br#"{"nodes":[{"id":0,"label":"A"},{"id":1,"label":"B"}],"edges":[{"source":1,"target":1,"weight":1}]}"#;
        assert!(matches!(parse_graph(raw), Err(GraphFormatError::SelfLoop(l)) if l == "B"));
        let table = parse_table(b"language,form,A,B\nl,f,1,1\n").unwrap();
        assert!(matches!(parse_gold(raw, &table), Err(GraphFormatError::SelfLoop(_))));
    }

    #[test]
    fn graph_needs_weights() {
        let raw = br#"{"nodes":[{"id":0,"label":"A"},{"id":1,"label":"B"}],"edges":[{"source":0,"target":1}]}"#;
        assert!(matches!(parse_graph(raw), Err(GraphFormatError::MissingWeight(..))));
    }

    #[test]
    fn resolve_reorders_onto_table() {
        let table = parse_table(b"language,form,A,B,C\nl,f,1,1,1\n").unwrap();
        let raw = br#"{"nodes":[{"id":7,"label":"C"},{"id":3,"label":"A"}],"edges":[{"source":7,"target":3,"weight":2.5}],"provenance":"edited"}"#;
        let g = resolve_graph(&parse_graph(raw).unwrap(), &table).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(
            g.weight(EdgeKey::new(0usize, 2usize).unwrap()),
            Some(Weight::from_ratio(5, 2).unwrap())
        );
    }
}
