use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thmdx_core::enrich::mock::MockRerankProvider;
use thmdx_core::extract::{NumberedBy, TheoremRecord, ThmType};
use thmdx_core::index::{
    candidate_pool_size, composite_score, cosine, hamming, quantize, BinaryCode, EntryMeta,
    HnswParams, IndexEntry, IndexError, PaperMeta, PaperSource, Rerank, SearchFilters,
    SearchOptions, VectorIndex,
};

const TAGS: [&str; 4] = ["math.AG", "math.NT", "math.CO", "math.PR"];
const AUTHORS: [&str; 5] = ["Ada", "Emmy", "Sofia", "Kurt", "Maryam"];

fn naive_hamming(a: &[bool], b: &[bool]) -> u32 {
    let mut n = 0;
    for i in 0..a.len() {
        if a[i] != b[i] {
            n += 1;
        }
    }
    n
}

fn naive_cosine(u: &[f32], v: &[f32]) -> f64 {
    let nu: f64 = u.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    let mut acc = 0.0;
    for i in 0..u.len() {
        acc += (u[i] as f64 / nu) * (v[i] as f64 / nv);
    }
    acc
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    (0..dim).map(|_| rng.random::<f32>() * 2.0 - 1.0).collect()
}

fn entry_meta(i: usize, rng: &mut ChaCha8Rng) -> EntryMeta {
    let thm_type = ThmType::ALL[rng.random_range(0..4)];
    let doc = format!("{:04}.{:05}", 2000 + i % 40, i / 3);
    let primary = TAGS[rng.random_range(0..TAGS.len())].to_string();
    let mut tags = vec![primary.clone()];
    if rng.random_bool(0.4) {
        tags.push(TAGS[rng.random_range(0..TAGS.len())].to_string());
    }
    let authors = (0..rng.random_range(1..3))
        .map(|_| AUTHORS[rng.random_range(0..AUTHORS.len())].to_string())
        .collect();
    let slogan = format!("statement {i} {}", "x".repeat(rng.random_range(0..30)));
    EntryMeta {
        record: TheoremRecord {
            record_id: format!("{doc}#{}", i % 3 + 1),
            doc_id: doc.clone(),
            thm_type,
            ref_number: None,
            note: None,
            label: None,
            body: slogan.clone(),
            name: thm_type.display_name().to_string(),
            source_url: None,
            numbered_by: NumberedBy::Counter,
        },
        slogan,
        paper: Some(PaperMeta {
            doc_id: doc,
            title: format!("Paper {i}"),
            authors,
            abstract_text: String::new(),
            primary_tag: primary,
            tags,
            year: rng.random_range(1995..2025),
            journal: rng.random_bool(0.5).then(|| "Annals".to_string()),
            citations: rng.random_range(0..500),
            source: PaperSource::Arxiv,
            url: String::new(),
        }),
    }
}

fn build_index(n: usize, dim: usize, seed: u64) -> (VectorIndex, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut index = VectorIndex::new(dim, HnswParams::default()).unwrap();
    for i in 0..n {
        let meta = entry_meta(i, &mut rng);
        let vector = random_vector(&mut rng, dim);
        index.insert(IndexEntry { vector, meta }).unwrap();
    }
    (index, rng)
}

fn random_filters(rng: &mut ChaCha8Rng) -> SearchFilters {
    let mut f = SearchFilters::default();
    if rng.random_bool(0.4) {
        f.thm_types = Some(BTreeSet::from([
            ThmType::ALL[rng.random_range(0..4)],
            ThmType::ALL[rng.random_range(0..4)],
        ]));
    }
    if rng.random_bool(0.3) {
        f.tags = Some(BTreeSet::from([
            TAGS[rng.random_range(0..TAGS.len())].to_string()
        ]));
    }
    if rng.random_bool(0.3) {
        f.authors = Some(BTreeSet::from([AUTHORS
            [rng.random_range(0..AUTHORS.len())]
        .to_string()]));
    }
    if rng.random_bool(0.3) {
        let lo = rng.random_range(1995..2025);
        f.year_range = Some((lo, lo + rng.random_range(0..10)));
    }
    if rng.random_bool(0.2) {
        f.published_only = Some(true);
    }
    f
}

/// Predicate written out independently of `SearchFilters::matches`.
fn oracle_matches(f: &SearchFilters, e: &EntryMeta) -> bool {
    let p = e.paper.as_ref().unwrap();
    let any = |set: &Option<BTreeSet<String>>, values: &[String]| {
        set.as_ref()
            .is_none_or(|s| s.is_empty() || values.iter().any(|v| s.contains(v)))
    };
    f.thm_types
        .as_ref()
        .is_none_or(|s| s.is_empty() || s.contains(&e.record.thm_type))
        && any(&f.authors, &p.authors)
        && any(&f.tags, &p.tags)
        && f.doc_id.as_ref().is_none_or(|d| d == &e.record.doc_id)
        && f.year_range
            .is_none_or(|(lo, hi)| lo <= p.year && p.year <= hi)
        && (f.published_only != Some(true) || p.journal.is_some())
}

#[test]
fn quantization_is_scale_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let v = random_vector(&mut rng, 97);
        let c: f32 = rng.random_range(0.001..1000.0);
        let scaled: Vec<f32> = v.iter().map(|x| x * c).collect();
        assert_eq!(quantize(&v), quantize(&scaled));
        let doubled: Vec<f32> = v.iter().map(|x| x * 2.0).collect();
        assert_eq!(quantize(&v), quantize(&doubled));
    }
}

#[test]
fn hamming_matches_bit_loop_and_metric_laws() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let dim = rng.random_range(1..300);
        let bits = |rng: &mut ChaCha8Rng| {
            (0..dim)
                .map(|_| rng.random_bool(0.5))
                .collect::<Vec<bool>>()
        };
        let (a, b, c) = (bits(&mut rng), bits(&mut rng), bits(&mut rng));
        let (ca, cb, cc) = (
            BinaryCode::from_bits(&a),
            BinaryCode::from_bits(&b),
            BinaryCode::from_bits(&c),
        );
        let ab = hamming(&ca, &cb).unwrap();
        assert_eq!(ab, naive_hamming(&a, &b));
        assert_eq!(ab, hamming(&cb, &ca).unwrap());
        assert_eq!(hamming(&ca, &ca).unwrap(), 0);
        assert_eq!(ab == 0, a == b);
        assert!(ab as usize <= dim);
        assert!(hamming(&ca, &cc).unwrap() <= ab + hamming(&cb, &cc).unwrap());
    }
}

#[test]
fn cosine_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let dim = rng.random_range(1..200);
        let u = random_vector(&mut rng, dim);
        let v = random_vector(&mut rng, dim);
        let c = cosine(&u, &v).unwrap();
        assert!((c - naive_cosine(&u, &v)).abs() < 1e-6);
        assert!((-1.0 - 1e-6..=1.0 + 1e-6).contains(&c));
        assert!((cosine(&u, &u).unwrap() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn pool_formula_exhaustive() {
    for k in 1..=200usize {
        let expected = std::cmp::max(200, 12 * k).clamp(200, 800);
        assert_eq!(candidate_pool_size(k).unwrap(), expected, "k = {k}");
    }
    assert!(matches!(
        candidate_pool_size(0),
        Err(IndexError::InvalidK(0))
    ));
}

proptest! {
    #[test]
    fn pool_bounds_and_monotone(k in 1usize..1_000_000) {
        let p = candidate_pool_size(k).unwrap();
        prop_assert!((200..=800).contains(&p));
        prop_assert!(candidate_pool_size(k + 1).unwrap() >= p);
    }

    #[test]
    fn composite_neutral_cases(cos in -1.0f64..1.0, citations in 0u64..1_000_000, lambda in 0.0f64..10.0) {
        prop_assert_eq!(composite_score(cos, citations, 0.0), cos);
        prop_assert_eq!(composite_score(cos, 0, lambda), cos);
        prop_assert_eq!(composite_score(cos, 1, lambda), cos);
    }
}

#[test]
fn citation_monotonicity() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10_000 {
        let cos = rng.random_range(-1.0..1.0);
        let lambda = rng.random_range(0.0..2.0);
        let c1: u64 = rng.random_range(0..100_000);
        let c2 = c1 + rng.random_range(0..100_000);
        assert!(composite_score(cos, c2, lambda) >= composite_score(cos, c1, lambda));
        if lambda > 0.0 && c1 >= 1 && c2 > c1 {
            assert!(composite_score(cos, c2, lambda) > composite_score(cos, c1, lambda));
        }
    }
}

#[test]
fn zero_lambda_order_equals_cosine_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let n = rng.random_range(1..300);
        let cands: Vec<(String, f64, u64)> = (0..n)
            .map(|i| {
                (
                    format!("r{i}"),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(0..10_000),
                )
            })
            .collect();
        let mut by_cos = cands.clone();
        by_cos.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut by_comp = cands.clone();
        by_comp.sort_by(|a, b| {
            composite_score(b.1, b.2, 0.0)
                .total_cmp(&composite_score(a.1, a.2, 0.0))
                .then(a.0.cmp(&b.0))
        });
        assert_eq!(by_cos, by_comp);
    }
}

#[test]
fn two_stage_matches_filtered_cosine_sort_and_filters_are_sound() {
    let (index, mut rng) = build_index(3_000, 64, 6);
    for q in 0..100 {
        let query = random_vector(&mut rng, 64);
        let k = rng.random_range(1..=66);
        let filters = if q % 2 == 0 {
            random_filters(&mut rng)
        } else {
            SearchFilters::default()
        };
        let out = index
            .search(
                &query,
                k,
                &SearchOptions {
                    filters: Some(&filters),
                    ..Default::default()
                },
            )
            .unwrap();

        let pool = index
            .ann_candidates(&quantize(&query), candidate_pool_size(k).unwrap())
            .unwrap();
        let mut expected: Vec<(String, f64)> = pool
            .into_iter()
            .filter(|id| oracle_matches(&filters, index.get(id).unwrap()))
            .map(|id| {
                let c = naive_cosine(&query, index.vector(&id).unwrap());
                (id, c)
            })
            .collect();
        expected.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        expected.truncate(k);

        let got: Vec<&str> = out.hits.iter().map(|h| h.record_id.as_str()).collect();
        let want: Vec<&str> = expected.iter().map(|e| e.0.as_str()).collect();
        assert_eq!(got, want, "query {q}");
        for (i, h) in out.hits.iter().enumerate() {
            assert_eq!(h.rank, i + 1);
            assert!(oracle_matches(&filters, index.get(&h.record_id).unwrap()));
            assert!((h.cosine - expected[i].1).abs() < 1e-9);
        }
    }
}

#[test]
fn composite_ranking_uses_citations() {
    let (index, mut rng) = build_index(1_000, 32, 8);
    for _ in 0..20 {
        let query = random_vector(&mut rng, 32);
        let lambda = rng.random_range(0.01..0.5);
        let out = index
            .search(
                &query,
                20,
                &SearchOptions {
                    lambda,
                    ..Default::default()
                },
            )
            .unwrap();
        for h in &out.hits {
            let cites = index
                .get(&h.record_id)
                .unwrap()
                .paper
                .as_ref()
                .unwrap()
                .citations;
            assert!((h.composite - (h.cosine + lambda * (cites.max(1) as f64).ln())).abs() < 1e-12);
        }
        for w in out.hits.windows(2) {
            assert!(
                w[0].composite > w[1].composite
                    || (w[0].composite == w[1].composite && w[0].record_id < w[1].record_id)
            );
        }
    }
}

#[test]
fn reranker_results_stay_in_cosine_top_100() {
    let (index, mut rng) = build_index(2_000, 32, 9);
    let provider = MockRerankProvider::new();
    for _ in 0..30 {
        let query = random_vector(&mut rng, 32);
        let k = rng.random_range(1..=66);
        let text = "x".repeat(rng.random_range(5..40));
        let opts = SearchOptions {
            rerank: Some(Rerank {
                provider: &provider,
                query_text: &text,
            }),
            lambda: 0.3,
            ..Default::default()
        };
        let out = index.search(&query, k, &opts).unwrap();
        assert!(out.reranked);
        let head: Vec<String> = index
            .filtered_pool(&query, k, None)
            .unwrap()
            .into_iter()
            .take(100)
            .map(|p| p.0)
            .collect();
        for h in &out.hits {
            assert!(head.contains(&h.record_id));
        }
    }
}

#[test]
fn save_load_search_identity() {
    let dir = tempfile::tempdir().unwrap();
    let (index, mut rng) = build_index(1_500, 48, 10);
    index.save(dir.path()).unwrap();
    let loaded = VectorIndex::load(dir.path()).unwrap();
    for _ in 0..100 {
        let query = random_vector(&mut rng, 48);
        let filters = random_filters(&mut rng);
        let k = rng.random_range(1..=66);
        let opts = SearchOptions {
            filters: Some(&filters),
            lambda: 0.1,
            ..Default::default()
        };
        assert_eq!(
            index.search(&query, k, &opts).unwrap(),
            loaded.search(&query, k, &opts).unwrap()
        );
    }
}

#[test]
fn corrupted_files_are_rejected() {
    for file in ["vectors.bin", "codes.bin", "graph.bin", "meta.jsonl"] {
        let dir = tempfile::tempdir().unwrap();
        build_index(50, 16, 12).0.save(dir.path()).unwrap();
        let path = dir.path().join(file);
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() / 2);
        std::fs::write(&path, bytes).unwrap();
        match VectorIndex::load(dir.path()) {
            Err(IndexError::ChecksumMismatch { file: f }) => assert_eq!(f, file),
            other => panic!("{file}: expected checksum mismatch, got {other:?}"),
        }
    }
}

#[test]
fn saved_bytes_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    build_index(800, 32, 13).0.save(a.path()).unwrap();
    build_index(800, 32, 13).0.save(b.path()).unwrap();
    for file in [
        "manifest.json",
        "vectors.bin",
        "codes.bin",
        "graph.bin",
        "meta.jsonl",
    ] {
        assert_eq!(
            std::fs::read(a.path().join(file)).unwrap(),
            std::fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
}
