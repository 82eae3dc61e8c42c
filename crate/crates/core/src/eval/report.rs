use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{hit_at_k, mrr_at_k, precision_at_k, EvalQuery, Level, RunResult};
use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    Precision,
    Hit,
    Mrr,
}

/// One report column such as `Hit@10`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricColumn {
    pub metric: Metric,
    pub k: usize,
}

impl MetricColumn {
    pub fn label(&self) -> String {
        let name = match self.metric {
            Metric::Precision => "P",
            Metric::Hit => "Hit",
            Metric::Mrr => "MRR",
        };
        format!("{name}@{}", self.k)
    }

    fn compute(
        &self,
        runs: &[RunResult],
        golds: &[EvalQuery],
        level: Level,
    ) -> Result<f64, EvalError> {
        match self.metric {
            Metric::Precision => precision_at_k(runs, golds, self.k, level),
            Metric::Hit => hit_at_k(runs, golds, self.k, level),
            Metric::Mrr => mrr_at_k(runs, golds, self.k, level),
        }
    }
}

/// Column layout for a cutoff list: precision at the smallest cutoff, hit
/// rate at each larger one, reciprocal rank at the largest. `[1, 10, 20]`
/// gives P@1, Hit@10, Hit@20, MRR@20.
pub fn report_columns(ks: &[usize]) -> Result<Vec<MetricColumn>, EvalError> {
    let mut ks: Vec<usize> = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let (&min, &max) = match (ks.first(), ks.last()) {
        (Some(min), Some(max)) => (min, max),
        _ => return Err(EvalError::InvalidK(0)),
    };
    if min == 0 {
        return Err(EvalError::InvalidK(0));
    }
    let mut columns = vec![MetricColumn {
        metric: Metric::Precision,
        k: min,
    }];
    let hit_ks: Vec<usize> = if ks.len() == 1 {
        ks.clone()
    } else {
        ks[1..].to_vec()
    };
    columns.extend(hit_ks.into_iter().map(|k| MetricColumn {
        metric: Metric::Hit,
        k,
    }));
    columns.push(MetricColumn {
        metric: Metric::Mrr,
        k: max,
    });
    Ok(columns)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemRow {
    pub system: String,
    /// level -> one value per column
    pub cells: BTreeMap<Level, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub query_count: usize,
    pub levels: Vec<Level>,
    pub columns: Vec<MetricColumn>,
    pub rows: Vec<SystemRow>,
}

impl EvalReport {
    pub fn cell(&self, system: &str, level: Level, label: &str) -> Option<f64> {
        let col = self.columns.iter().position(|c| c.label() == label)?;
        let row = self.rows.iter().find(|r| r.system == system)?;
        row.cells.get(&level)?.get(col).copied()
    }

    /// `{query_count, systems: {system: {level: {column: value}}}}`
    pub fn to_json(&self) -> serde_json::Value {
        let mut systems = serde_json::Map::new();
        for row in &self.rows {
            let mut levels = serde_json::Map::new();
            for (level, values) in &row.cells {
                let cells: serde_json::Map<String, serde_json::Value> = self
                    .columns
                    .iter()
                    .zip(values)
                    .map(|(c, v)| (c.label(), serde_json::json!(v)))
                    .collect();
                levels.insert(level.as_str().to_string(), cells.into());
            }
            systems.insert(row.system.clone(), levels.into());
        }
        serde_json::json!({
            "query_count": self.query_count,
            "levels": self.levels.iter().map(|l| l.as_str()).collect::<Vec<_>>(),
            "columns": self.columns.iter().map(MetricColumn::label).collect::<Vec<_>>(),
            "systems": systems,
        })
    }

    /// Aligned plain-text table; cells read `theorem / paper` in level order.
    pub fn to_text(&self) -> String {
        let header_levels = self
            .levels
            .iter()
            .map(|l| l.as_str())
            .collect::<Vec<_>>()
            .join(" / ");
        let mut table: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["System".to_string()];
        header.extend(self.columns.iter().map(MetricColumn::label));
        table.push(header);
        for row in &self.rows {
            let mut line = vec![row.system.clone()];
            for col in 0..self.columns.len() {
                let cell = self
                    .levels
                    .iter()
                    .map(|level| {
                        row.cells
                            .get(level)
                            .and_then(|v| v.get(col))
                            .map_or("-".to_string(), |v| format!("{v:.3}"))
                    })
                    .collect::<Vec<_>>()
                    .join(" / ");
                line.push(cell);
            }
            table.push(line);
        }
        let widths: Vec<usize> = (0..table[0].len())
            .map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = format!(
            "queries: {}    cells: {}\n",
            self.query_count, header_levels
        );
        for (i, row) in table.iter().enumerate() {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, w))| {
                    if c == 0 {
                        format!("{cell:<w$}")
                    } else {
                        format!("{cell:>w$}")
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
            if i == 0 {
                let _ = writeln!(
                    out,
                    "{}",
                    "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1))
                );
            }
        }
        out
    }
}

/// Fill the report grid for every system. Systems missing a labeled query
/// are scored as misses on it; each such gap is returned as a warning.
pub fn evaluate(
    system_runs: &BTreeMap<String, Vec<RunResult>>,
    golds: &[EvalQuery],
    ks: &[usize],
    levels: &[Level],
) -> Result<(EvalReport, Vec<String>), EvalError> {
    if golds.is_empty() {
        return Err(EvalError::EmptyQuerySet);
    }
    for gold in golds {
        gold.validate()?;
    }
    let columns = report_columns(ks)?;
    let mut warnings = Vec::new();
    let mut rows = Vec::new();
    for (system, runs) in system_runs {
        let covered: HashSet<&str> = runs.iter().map(|r| r.query_id.as_str()).collect();
        for gold in golds
            .iter()
            .filter(|g| !covered.contains(g.query_id.as_str()))
        {
            let err = EvalError::MissingQuery {
                system: system.clone(),
                query_id: gold.query_id.clone(),
            };
            tracing::warn!("{err}");
            warnings.push(err.to_string());
        }
        let mut cells = BTreeMap::new();
        for &level in levels {
            let values = columns
                .iter()
                .map(|c| c.compute(runs, golds, level))
                .collect::<Result<Vec<_>, _>>()?;
            cells.insert(level, values);
        }
        rows.push(SystemRow {
            system: system.clone(),
            cells,
        });
    }
    Ok((
        EvalReport {
            query_count: golds.len(),
            levels: levels.to_vec(),
            columns,
            rows,
        },
        warnings,
    ))
}
