use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thmdx_core::eval::{
    evaluate, hit_at_k, mrr_at_k, precision_at_k, EvalQuery, Level, RankedItem, RunResult,
};

/// Literal double-sum grader working on plain tuples.
struct Oracle<'a> {
    golds: &'a [(String, Option<String>, String)],
    runs: &'a BTreeMap<String, Vec<(String, String)>>,
}

impl Oracle<'_> {
    fn indicators(&self, q: usize, k: usize, theorem: bool) -> Vec<f64> {
        let (qid, rec, doc) = &self.golds[q];
        let empty = Vec::new();
        let list = self.runs.get(qid).unwrap_or(&empty);
        (0..k)
            .map(|j| match list.get(j) {
                None => 0.0,
                Some((r, d)) => {
                    let hit = if theorem {
                        rec.as_ref() == Some(r)
                    } else {
                        d == doc
                    };
                    if hit {
                        1.0
                    } else {
                        0.0
                    }
                }
            })
            .collect()
    }

    fn precision(&self, k: usize, theorem: bool) -> f64 {
        let mut total = 0.0;
        for q in 0..self.golds.len() {
            let mut inner = 0.0;
            for x in self.indicators(q, k, theorem) {
                inner += x / k as f64;
            }
            total += inner;
        }
        total / self.golds.len() as f64
    }

    fn hit(&self, k: usize, theorem: bool) -> f64 {
        let n = (0..self.golds.len())
            .filter(|&q| self.indicators(q, k, theorem).contains(&1.0))
            .count();
        n as f64 / self.golds.len() as f64
    }

    fn mrr(&self, k: usize, theorem: bool) -> f64 {
        let mut total = 0.0;
        for q in 0..self.golds.len() {
            if let Some(pos) = self
                .indicators(q, k, theorem)
                .iter()
                .position(|&x| x == 1.0)
            {
                total += 1.0 / (pos + 1) as f64;
            }
        }
        total / self.golds.len() as f64
    }
}

struct Case {
    golds_raw: Vec<(String, Option<String>, String)>,
    runs_raw: BTreeMap<String, Vec<(String, String)>>,
    golds: Vec<EvalQuery>,
    runs: Vec<RunResult>,
}

/// Random single-gold set; `one_per_doc` keeps at most one item per
/// document in each list so paper-level grading is also single-gold.
fn random_case(rng: &mut ChaCha8Rng, one_per_doc: bool) -> Case {
    let nq = rng.random_range(1..40);
    let docs = rng.random_range(3..30);
    let mut golds_raw = Vec::new();
    let mut runs_raw = BTreeMap::new();
    for q in 0..nq {
        let qid = format!("q{q}");
        let gold_doc = format!("d{}", rng.random_range(0..docs));
        let gold_rec = rng
            .random_bool(0.85)
            .then(|| format!("{gold_doc}#{}", rng.random_range(1..5)));
        golds_raw.push((qid.clone(), gold_rec, gold_doc));
        if rng.random_bool(0.1) {
            continue;
        }
        let len = rng.random_range(0..30);
        let mut list: Vec<(String, String)> = Vec::new();
        let mut used_docs = std::collections::HashSet::new();
        while list.len() < len {
            let d = format!("d{}", rng.random_range(0..docs));
            let r = format!("{d}#{}", rng.random_range(1..5));
            if list.iter().any(|(x, _)| x == &r) {
                if list.len() * 2 > docs * 4 {
                    break;
                }
                continue;
            }
            if one_per_doc && !used_docs.insert(d.clone()) {
                if used_docs.len() >= docs {
                    break;
                }
                continue;
            }
            list.push((r, d));
        }
        runs_raw.insert(qid, list);
    }
    let golds = golds_raw
        .iter()
        .map(|(q, r, d)| EvalQuery {
            query_id: q.clone(),
            query_text: String::new(),
            gold_record_id: r.clone(),
            gold_doc_id: d.clone(),
        })
        .collect();
    let runs = runs_raw
        .iter()
        .map(|(q, list)| {
            RunResult::new(
                q.clone(),
                list.iter().map(|(r, d)| RankedItem::new(r, d)).collect(),
            )
            .unwrap()
        })
        .collect();
    Case {
        golds_raw,
        runs_raw,
        golds,
        runs,
    }
}

const KS: [usize; 6] = [1, 3, 5, 10, 20, 50];

#[test]
fn randomized_sets_match_brute_force() {
    let started = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for set in 0..200 {
        let case = random_case(&mut rng, set % 2 == 0);
        let oracle = Oracle {
            golds: &case.golds_raw,
            runs: &case.runs_raw,
        };
        for k in KS {
            for (level, theorem) in [(Level::Theorem, true), (Level::Paper, false)] {
                let p = precision_at_k(&case.runs, &case.golds, k, level).unwrap();
                let h = hit_at_k(&case.runs, &case.golds, k, level).unwrap();
                let m = mrr_at_k(&case.runs, &case.golds, k, level).unwrap();
                assert!(
                    (p - oracle.precision(k, theorem)).abs() <= 1e-12,
                    "P@{k} set {set}"
                );
                assert!(
                    (h - oracle.hit(k, theorem)).abs() <= 1e-12,
                    "Hit@{k} set {set}"
                );
                assert!(
                    (m - oracle.mrr(k, theorem)).abs() <= 1e-12,
                    "MRR@{k} set {set}"
                );
                for v in [p, h, m] {
                    assert!((0.0..=1.0).contains(&v));
                }
            }
        }
    }
    assert!(started.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn single_gold_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..200 {
        let case = random_case(&mut rng, true);
        let mut prev_hit = [0.0f64; 2];
        for k in 1..=30 {
            for (li, level) in [Level::Theorem, Level::Paper].into_iter().enumerate() {
                let p = precision_at_k(&case.runs, &case.golds, k, level).unwrap();
                let h = hit_at_k(&case.runs, &case.golds, k, level).unwrap();
                let m = mrr_at_k(&case.runs, &case.golds, k, level).unwrap();
                assert!((p - h / k as f64).abs() <= 1e-12);
                assert!(m <= h + 1e-15);
                assert!(h >= prev_hit[li]);
                prev_hit[li] = h;
            }
            let th = hit_at_k(&case.runs, &case.golds, k, Level::Theorem).unwrap();
            let ph = hit_at_k(&case.runs, &case.golds, k, Level::Paper).unwrap();
            assert!(ph >= th);
        }
        assert_eq!(
            precision_at_k(&case.runs, &case.golds, 1, Level::Theorem).unwrap(),
            hit_at_k(&case.runs, &case.golds, 1, Level::Theorem).unwrap()
        );
    }
}

#[test]
fn permuting_queries_changes_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..50 {
        let mut case = random_case(&mut rng, false);
        let before: Vec<f64> = KS
            .iter()
            .flat_map(|&k| {
                [
                    precision_at_k(&case.runs, &case.golds, k, Level::Paper).unwrap(),
                    hit_at_k(&case.runs, &case.golds, k, Level::Theorem).unwrap(),
                    mrr_at_k(&case.runs, &case.golds, k, Level::Theorem).unwrap(),
                ]
            })
            .collect();
        case.golds.shuffle(&mut rng);
        case.runs.shuffle(&mut rng);
        let after: Vec<f64> = KS
            .iter()
            .flat_map(|&k| {
                [
                    precision_at_k(&case.runs, &case.golds, k, Level::Paper).unwrap(),
                    hit_at_k(&case.runs, &case.golds, k, Level::Theorem).unwrap(),
                    mrr_at_k(&case.runs, &case.golds, k, Level::Theorem).unwrap(),
                ]
            })
            .collect();
        assert_eq!(before, after);
    }
}

#[test]
fn hand_computed_cases() {
    let gold = |i: usize| EvalQuery {
        query_id: format!("q{i}"),
        query_text: String::new(),
        gold_record_id: Some(format!("g{i}")),
        gold_doc_id: format!("p{i}"),
    };
    let run = |i: usize, rank: Option<usize>| {
        let items = (1..=20)
            .map(|pos| {
                if Some(pos) == rank {
                    RankedItem::new(format!("g{i}"), format!("p{i}"))
                } else {
                    RankedItem::new(format!("x{i}.{pos}"), "other")
                }
            })
            .collect();
        RunResult::new(format!("q{i}"), items).unwrap()
    };
    let golds: Vec<_> = (0..3).map(gold).collect();
    let runs = vec![run(0, Some(2)), run(1, Some(5)), run(2, None)];
    assert_eq!(
        precision_at_k(&runs, &golds, 5, Level::Theorem).unwrap(),
        2.0 / 15.0
    );
    assert_eq!(
        hit_at_k(&runs, &golds, 5, Level::Theorem).unwrap(),
        2.0 / 3.0
    );
    let runs = vec![run(0, Some(1)), run(1, Some(4)), run(2, None)];
    assert_eq!(
        mrr_at_k(&runs, &golds, 20, Level::Theorem).unwrap(),
        1.25 / 3.0
    );

    let golds: Vec<_> = (0..4).map(gold).collect();
    let runs = vec![run(0, Some(1)), run(1, Some(2)), run(2, None), run(3, None)];
    let mut systems = BTreeMap::new();
    systems.insert("mock".to_string(), runs);
    let (report, warnings) = evaluate(
        &systems,
        &golds,
        &[1, 10, 20],
        &[Level::Theorem, Level::Paper],
    )
    .unwrap();
    assert!(warnings.is_empty());
    assert_eq!(report.cell("mock", Level::Theorem, "P@1"), Some(0.25));
    assert_eq!(report.cell("mock", Level::Theorem, "Hit@10"), Some(0.5));
    assert_eq!(report.cell("mock", Level::Paper, "MRR@20"), Some(0.375));

    // ranks {1, 1, 2, miss}
    let runs = vec![
        run(0, Some(1)),
        run(1, Some(1)),
        run(2, Some(2)),
        run(3, None),
    ];
    systems.insert("mock".to_string(), runs);
    let (report, _) = evaluate(&systems, &golds, &[1, 10, 20], &[Level::Theorem]).unwrap();
    assert_eq!(report.cell("mock", Level::Theorem, "P@1"), Some(0.5));
    assert_eq!(report.cell("mock", Level::Theorem, "Hit@10"), Some(0.75));
    assert_eq!(report.cell("mock", Level::Theorem, "MRR@20"), Some(0.625));
}
