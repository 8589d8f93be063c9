//! Context embeddings: one vector per instance, composed from the word
//! vectors in its context window by summation or averaging.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use crate::corpus::ContextWindow;
use crate::embed_store::EmbeddingTable;
use crate::error::Error;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Composition {
    Add,
    Avg,
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Composition::Add => "ADD",
            Composition::Avg => "AVG",
        })
    }
}

impl FromStr for Composition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "add" | "sum" => Ok(Composition::Add),
            "avg" | "mean" => Ok(Composition::Avg),
            _ => Err(Error::Config(format!("composition must be add or avg, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextEmbedding<T> {
    pub instance_id: String,
    pub vector: Vec<T>,
    /// In-vocabulary context tokens that were composed.
    pub n_used: usize,
}

/// Exact match first, then the lowercased token.
pub fn resolve<'t>(table: &'t EmbeddingTable, token: &str) -> Option<&'t [f32]> {
    table.get_str(token).or_else(|| {
        let lower = token.to_lowercase();
        if lower != token {
            table.get_str(&lower)
        } else {
            None
        }
    })
}

fn sum_window(window: &ContextWindow<'_>, table: &EmbeddingTable) -> (Vec<f64>, usize) {
    let mut acc = vec![0f64; table.dim()];
    let mut used = 0;
    for token in window.tokens() {
        if let Some(v) = resolve(table, token) {
            for (a, &x) in acc.iter_mut().zip(v) {
                *a += x as f64;
            }
            used += 1;
        }
    }
    (acc, used)
}

/// Sum of the resolved context vectors. `None` when no context token is
/// in the vocabulary.
pub fn compose_add<T: Scalar>(window: &ContextWindow<'_>, table: &EmbeddingTable) -> Option<ContextEmbedding<T>> {
    let (acc, used) = sum_window(window, table);
    (used > 0).then(|| ContextEmbedding {
        instance_id: window.instance_id.to_owned(),
        vector: acc.into_iter().map(T::lit).collect(),
        n_used: used,
    })
}

/// Mean of the resolved context vectors; the divisor is the number of
/// resolved tokens, not the raw window length.
pub fn compose_avg<T: Scalar>(window: &ContextWindow<'_>, table: &EmbeddingTable) -> Option<ContextEmbedding<T>> {
    let (acc, used) = sum_window(window, table);
    (used > 0).then(|| {
        let n = used as f64;
        ContextEmbedding {
            instance_id: window.instance_id.to_owned(),
            vector: acc.into_iter().map(|a| T::lit(a / n)).collect(),
            n_used: used,
        }
    })
}

pub fn compose<T: Scalar>(
    window: &ContextWindow<'_>,
    table: &EmbeddingTable,
    how: Composition,
) -> Option<ContextEmbedding<T>> {
    match how {
        Composition::Add => compose_add(window, table),
        Composition::Avg => compose_avg(window, table),
    }
}

/// Debug dump, one `instance_id n_used v1 .. vdim` line per embedding.
pub fn write_embeddings<T: Scalar, W: Write>(embs: &[ContextEmbedding<T>], w: &mut W) -> io::Result<()> {
    for e in embs {
        write!(w, "{} {}", e.instance_id, e.n_used)?;
        for x in &e.vector {
            write!(w, " {x}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{extract_window, Instance, WindowMode};
    use crate::embed_store::cosine_similarity;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn table(entries: &[(&str, &[f32])]) -> EmbeddingTable {
        let mut t = EmbeddingTable::new(entries[0].1.len()).unwrap();
        for (k, v) in entries {
            t.insert(*k, v).unwrap();
        }
        t
    }

    fn window_of(tokens: &[String]) -> ContextWindow<'_> {
        ContextWindow { instance_id: "i", left: tokens, right: &[] }
    }

    fn strings(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn single_word_sum_is_identity() {
        let t = table(&[("x", &[1.0, 2.0])]);
        let toks = strings(&["x"]);
        let e: ContextEmbedding<f64> = compose_add(&window_of(&toks), &t).unwrap();
        assert_eq!(e.vector, vec![1.0, 2.0]);
        assert_eq!(e.n_used, 1);
        let a: ContextEmbedding<f64> = compose_avg(&window_of(&toks), &t).unwrap();
        assert_eq!(a, e);
    }

    #[test]
    fn two_words() {
        let t = table(&[("x", &[1.0, 0.0]), ("y", &[0.0, 1.0])]);
        let toks = strings(&["x", "y"]);
        let e: ContextEmbedding<f64> = compose_add(&window_of(&toks), &t).unwrap();
        assert_eq!(e.vector, vec![1.0, 1.0]);
        let t = table(&[("x", &[2.0, 0.0]), ("y", &[0.0, 2.0])]);
        let a: ContextEmbedding<f32> = compose_avg(&window_of(&toks), &t).unwrap();
        assert_eq!(a.vector, vec![1.0f32, 1.0]);
    }

    #[test]
    fn lookup_chain_and_oov() {
        let t = table(&[("salt", &[1.0]), ("Paris", &[5.0])]);
        assert_eq!(resolve(&t, "Salt"), Some(&[1.0f32][..]));
        assert_eq!(resolve(&t, "Paris"), Some(&[5.0f32][..]));
        assert_eq!(resolve(&t, "paris"), None);
        let toks = strings(&["SALT", "zzz", "salt"]);
        let e: ContextEmbedding<f64> = compose_avg(&window_of(&toks), &t).unwrap();
        assert_eq!(e.n_used, 2);
        assert_eq!(e.vector, vec![1.0]);
        let oov = strings(&["zzz"]);
        assert!(compose_add::<f64>(&window_of(&oov), &t).is_none());
        assert!(compose_avg::<f64>(&window_of(&[]), &t).is_none());
    }

    #[test]
    fn target_is_not_composed() {
        let t = table(&[("a", &[1.0]), ("T", &[100.0]), ("b", &[2.0])]);
        let inst = Instance {
            lemma_key: "t.n".into(),
            instance_id: "t.n.1".into(),
            tokens: strings(&["a", "T", "b"]),
            target_index: 1,
        };
        let e: ContextEmbedding<f64> = compose_add(&extract_window(&inst, WindowMode::FullSentence), &t).unwrap();
        assert_eq!(e.vector, vec![3.0]);
    }

    #[test]
    fn fifty_token_window_matches_naive_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let dim = 20;
        let mut t = EmbeddingTable::new(dim).unwrap();
        let mut vecs = Vec::new();
        for i in 0..30 {
            let v: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
            t.insert(format!("w{i}"), &v).unwrap();
            vecs.push(v);
        }
        let picks: Vec<usize> = (0..50).map(|_| rng.random_range(0..30)).collect();
        let toks: Vec<String> = picks.iter().map(|i| format!("w{i}")).collect();
        let e: ContextEmbedding<f64> = compose_add(&window_of(&toks), &t).unwrap();
        for (d, got) in e.vector.iter().enumerate() {
            let s: f64 = picks.iter().map(|&p| vecs[p][d] as f64).sum();
            assert!((got - s).abs() < 1e-6);
        }
    }

    #[test]
    fn dump_format() {
        let e = ContextEmbedding { instance_id: "a.n.1".into(), vector: vec![1.5f64, -2.0], n_used: 2 };
        let mut buf = Vec::new();
        write_embeddings(&[e], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a.n.1 2 1.5 -2\n");
    }

    proptest! {
        #[test]
        fn add_is_scaled_avg_and_order_free(picks in prop::collection::vec(0usize..12, 1..40), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut t = EmbeddingTable::new(6).unwrap();
            for i in 0..12 {
                let v: Vec<f32> = (0..6).map(|_| rng.random_range(-3.0f32..3.0)).collect();
                t.insert(format!("w{i}"), &v).unwrap();
            }
            let toks: Vec<String> = picks.iter().map(|i| format!("w{i}")).collect();
            let add: ContextEmbedding<f64> = compose_add(&window_of(&toks), &t).unwrap();
            let avg: ContextEmbedding<f64> = compose_avg(&window_of(&toks), &t).unwrap();
            prop_assert_eq!(add.n_used, picks.len());
            for (a, m) in add.vector.iter().zip(&avg.vector) {
                prop_assert!((a - add.n_used as f64 * m).abs() < 1e-6);
            }
            if add.vector.iter().any(|x| x.abs() > 1e-6) {
                let c = cosine_similarity(&add.vector, &avg.vector).unwrap();
                prop_assert!((c - 1.0).abs() < 1e-9);
            }
            let mut shuffled = toks.clone();
            shuffled.shuffle(&mut rng);
            let again: ContextEmbedding<f64> = compose_add(&window_of(&shuffled), &t).unwrap();
            for (a, b) in add.vector.iter().zip(&again.vector) {
                prop_assert!((a - b).abs() < 1e-6);
            }
        }
    }
}
