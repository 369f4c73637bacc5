//! Construction of the fully connected co-occurrence graph.

use crate::error::BuildError;
use crate::model::{ConceptualGraph, EdgeKey, FormFunctionTable, Provenance, Weight};

/// Builds the complete graph over the table's functions, weighting each
/// pair by the number of rows expressing both functions. Zero-weight
/// pairs are kept.
pub fn build_g0(table: &FormFunctionTable) -> Result<ConceptualGraph, BuildError> {
    let n = table.function_count();
    if n < 2 {
        return Err(BuildError::TooFewFunctions(n));
    }
    let mut counts = vec![0u64; n * n];
    for inst in table.instances() {
        let fs = &inst.functions;
        for (i, a) in fs.iter().enumerate() {
            for b in &fs[i + 1..] {
                counts[a.index() * n + b.index()] += 1;
            }
        }
    }
    let mut g = ConceptualGraph::empty(table.functions().to_vec(), Provenance::InitialG0);
    for a in 0..n {
        for b in a + 1..n {
            let key = EdgeKey::new(a, b).expect("a < b");
            g.insert_edge(key, Weight::from_count(counts[a * n + b]))
                .expect("each pair inserted once");
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::parse_table;

    fn w(g: &ConceptualGraph, a: usize, b: usize) -> Weight {
        g.weight(EdgeKey::new(a, b).unwrap()).unwrap()
    }

    #[test]
    fn single_row_triangle() {
        let t = parse_table(b"language,form,A,B,C\nl,f,1,1,1\n").unwrap();
        let g = build_g0(&t).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert!(g.edges().all(|(_, x)| x == Weight::from_count(1)));
        assert_eq!(g.provenance(), Provenance::InitialG0);
    }

    #[test]
    fn direct_counts() {
        let t = parse_table(b"language,form,A,B,C\nl,f1,1,1,0\nl,f2,1,1,0\nl,f3,1,0,1\n").unwrap();
        let g = build_g0(&t).unwrap();
        assert_eq!(w(&g, 0, 1), Weight::from_count(2));
        assert_eq!(w(&g, 0, 2), Weight::from_count(1));
        assert_eq!(w(&g, 1, 2), Weight::zero());
    }

    #[test]
    fn too_few_functions() {
        let t = parse_table(b"language,form,A\nl,f,1\n").unwrap();
        assert_eq!(build_g0(&t), Err(BuildError::TooFewFunctions(1)));
    }
}
