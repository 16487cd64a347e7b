//! Retrieval metrics, the mode ablation grid, latency decomposition and the
//! mean-pooling dilution demo.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::benchgen::GeneratedCorpus;
use crate::engine::{DiscoveryResult, Engine, StageTimings};
use crate::error::{Error, Result};
use crate::intent::{max_sim, mean_pool_raw_dot, ExampleMatrix};
use crate::model::{EngineConfig, Mode, Vector};

pub const DEFAULT_WARMUP: usize = 20;
pub const DEFAULT_BUDGET_MS: f64 = 400.0;

/// 1-based rank of `truth` in `ranked`, looking at the first `k` entries.
pub fn rank_within<S: AsRef<str>>(ranked: &[S], truth: &str, k: usize) -> Option<usize> {
    ranked.iter().take(k).position(|id| id.as_ref() == truth).map(|p| p + 1)
}

fn check_aligned(results: usize, truths: usize, k: usize) -> Result<()> {
    if results != truths {
        return Err(Error::input(format!("{results} result lists for {truths} truths")));
    }
    if results == 0 {
        return Err(Error::input("no queries to score"));
    }
    if k == 0 {
        return Err(Error::input("k must be positive"));
    }
    Ok(())
}

/// Percentage of queries whose truth id is in the top `k`.
pub fn recall_at_k<S: AsRef<str>, T: AsRef<str>>(results: &[Vec<S>], truths: &[T], k: usize) -> Result<f64> {
    check_aligned(results.len(), truths.len(), k)?;
    let hits = results.iter().zip(truths).filter(|(r, t)| rank_within(r, t.as_ref(), k).is_some()).count();
    Ok(hits as f64 * 100.0 / results.len() as f64)
}

/// Mean reciprocal rank with ranks past `k` contributing zero.
pub fn mrr_at_k<S: AsRef<str>, T: AsRef<str>>(results: &[Vec<S>], truths: &[T], k: usize) -> Result<f64> {
    check_aligned(results.len(), truths.len(), k)?;
    let sum: f64 = results
        .iter()
        .zip(truths)
        .filter_map(|(r, t)| rank_within(r, t.as_ref(), k))
        .map(|rank| 1.0 / rank as f64)
        .sum();
    Ok(sum / results.len() as f64)
}

/// Nearest-rank percentile of an unsorted sample; 0.0 when empty.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
}

impl StageSummary {
    fn of(values: &[f64]) -> Self {
        StageSummary { mean_ms: mean(values), p50_ms: percentile(values, 50.0), p95_ms: percentile(values, 95.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub queries: usize,
    pub stages: BTreeMap<String, StageSummary>,
    pub total_mean_ms: f64,
    pub budget_ms: f64,
    /// Queries whose total time exceeded the budget.
    pub flagged: usize,
}

/// Per-stage mean/p50/p95 over the timings of `results`.
pub fn latency_report(results: &[DiscoveryResult], budget_ms: f64) -> LatencyReport {
    let timings: Vec<StageTimings> = results.iter().map(|r| r.timings).collect();
    latency_report_from(&timings, budget_ms)
}

pub fn latency_report_from(timings: &[StageTimings], budget_ms: f64) -> LatencyReport {
    let stages = StageTimings::STAGES
        .iter()
        .map(|&stage| {
            let values: Vec<f64> = timings.iter().map(|t| t.get(stage).expect("known stage")).collect();
            (stage.to_string(), StageSummary::of(&values))
        })
        .collect::<BTreeMap<_, _>>();
    LatencyReport {
        queries: timings.len(),
        total_mean_ms: stages["total"].mean_ms,
        stages,
        budget_ms,
        flagged: timings.iter().filter(|t| t.total > budget_ms).count(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    /// A [`Mode`] name, or `slm_sort` for the shuffled-tag baseline.
    pub mode: String,
    pub queries: usize,
    pub recall_at_1: f64,
    pub recall_at_10: f64,
    pub mrr_at_10: f64,
    pub latency_mean_ms: f64,
    pub latency_p95_ms: f64,
    pub stage_means: BTreeMap<String, f64>,
    /// `full`'s R@10 minus this row's, in points; absent for `full` itself
    /// or when no `full` row exists.
    pub drop_r10: Option<f64>,
    pub failed: Option<String>,
}

impl EvalRow {
    fn failed(mode: &str, queries: usize, reason: String) -> Self {
        EvalRow {
            mode: mode.to_string(),
            queries,
            recall_at_1: 0.0,
            recall_at_10: 0.0,
            mrr_at_10: 0.0,
            latency_mean_ms: 0.0,
            latency_p95_ms: 0.0,
            stage_means: BTreeMap::new(),
            drop_r10: None,
            failed: Some(reason),
        }
    }

    /// Looks up a numeric column by name.
    pub fn metric(&self, name: &str) -> Option<f64> {
        Some(match name {
            "recall_at_1" | "r@1" => self.recall_at_1,
            "recall_at_10" | "r@10" => self.recall_at_10,
            "mrr_at_10" | "mrr@10" | "mrr" => self.mrr_at_10,
            "latency_mean_ms" => self.latency_mean_ms,
            "latency_p95_ms" => self.latency_p95_ms,
            "drop_r10" => self.drop_r10.unwrap_or(0.0),
            other => return self.stage_means.get(other.strip_prefix("stage_").unwrap_or(other)).copied(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub query_count: usize,
    pub config: EngineConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AblationOptions {
    /// Queries run before timing starts; not included in latency numbers.
    pub warmup: usize,
    /// When false, rows carry zero latencies and only the quality pass runs.
    pub measure_latency: bool,
}

impl Default for AblationOptions {
    fn default() -> Self {
        AblationOptions { warmup: DEFAULT_WARMUP, measure_latency: true }
    }
}

impl EvalReport {
    pub fn row(&self, mode: &str) -> Option<&EvalRow> {
        self.rows.iter().find(|r| r.mode == mode)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "mode,queries,recall_at_1,recall_at_10,mrr_at_10,latency_mean_ms,latency_p95_ms,drop_r10,failed\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:.4},{:.4},{:.6},{:.4},{:.4},{},{}",
                r.mode,
                r.queries,
                r.recall_at_1,
                r.recall_at_10,
                r.mrr_at_10,
                r.latency_mean_ms,
                r.latency_p95_ms,
                r.drop_r10.map(|d| format!("{d:.4}")).unwrap_or_default(),
                r.failed.as_deref().unwrap_or("").replace([',', '\n'], " "),
            );
        }
        out
    }

    pub fn to_table(&self) -> String {
        let header = ["mode", "R@1 %", "R@10 %", "MRR@10", "mean ms", "p95 ms", "drop R@10"];
        let body: Vec<[String; 7]> = self
            .rows
            .iter()
            .map(|r| match &r.failed {
                Some(reason) => [
                    r.mode.clone(),
                    format!("failed: {reason}"),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ],
                None => [
                    r.mode.clone(),
                    format!("{:.2}", r.recall_at_1),
                    format!("{:.2}", r.recall_at_10),
                    format!("{:.4}", r.mrr_at_10),
                    format!("{:.3}", r.latency_mean_ms),
                    format!("{:.3}", r.latency_p95_ms),
                    r.drop_r10.map(|d| format!("{d:+.2}")).unwrap_or_else(|| "-".into()),
                ],
            })
            .collect();
        let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
        for row in &body {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let line = |cells: &[&str], out: &mut String| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            out.push_str(parts.join("  ").trim_end());
            out.push('\n');
        };
        line(&header, &mut out);
        for row in &body {
            line(&row.iter().map(String::as_str).collect::<Vec<_>>(), &mut out);
        }
        let _ = writeln!(out, "{} queries", self.query_count);
        out
    }
}

fn fill_drops(rows: &mut [EvalRow]) {
    let full = rows.iter().find(|r| r.mode == Mode::Full.as_str() && r.failed.is_none()).map(|r| r.recall_at_10);
    for r in rows.iter_mut() {
        if r.failed.is_none() && r.mode != Mode::Full.as_str() {
            r.drop_r10 = full.map(|f| f - r.recall_at_10);
        }
    }
}

/// Builds an engine with default components and evaluates every mode on
/// the corpus queries.
pub fn run_ablation(corpus: &GeneratedCorpus, modes: &[Mode], config: &EngineConfig) -> Result<EvalReport> {
    run_ablation_with(corpus, modes, config, &AblationOptions::default())
}

pub fn run_ablation_with(
    corpus: &GeneratedCorpus,
    modes: &[Mode],
    config: &EngineConfig,
    options: &AblationOptions,
) -> Result<EvalReport> {
    config.validate()?;
    match Engine::builder(config.clone()).build(corpus.agents.clone()) {
        Ok(engine) => evaluate_engine(&engine, corpus, modes, options),
        Err(e) => {
            tracing::warn!(error = %e, "engine build failed; every ablation row is marked failed");
            let n = corpus.queries.len();
            Ok(EvalReport {
                rows: modes.iter().map(|m| EvalRow::failed(m.as_str(), n, e.to_string())).collect(),
                query_count: n,
                config: config.clone(),
            })
        }
    }
}

/// Evaluates an already built engine; each mode overrides only `mode` in
/// the engine's config.
pub fn evaluate_engine(
    engine: &Engine,
    corpus: &GeneratedCorpus,
    modes: &[Mode],
    options: &AblationOptions,
) -> Result<EvalReport> {
    if corpus.queries.is_empty() {
        return Err(Error::input("corpus has no queries"));
    }
    let texts: Vec<&str> = corpus.queries.iter().map(|q| q.text.as_str()).collect();
    let truths: Vec<&str> = corpus.queries.iter().map(|q| q.truth_agent_id.as_str()).collect();
    let mut rows = Vec::with_capacity(modes.len());
    for &mode in modes {
        let config = EngineConfig { mode, final_k: engine.config().final_k.max(10), ..engine.config().clone() };
        rows.push(match evaluate_mode(engine, &config, &texts, &truths, options) {
            Ok(row) => row,
            Err(e) => EvalRow::failed(mode.as_str(), texts.len(), e.to_string()),
        });
    }
    fill_drops(&mut rows);
    Ok(EvalReport { rows, query_count: texts.len(), config: engine.config().clone() })
}

fn evaluate_mode(
    engine: &Engine,
    config: &EngineConfig,
    texts: &[&str],
    truths: &[&str],
    options: &AblationOptions,
) -> Result<EvalRow> {
    let results = engine.discover_batch(texts, config).into_iter().collect::<Result<Vec<_>>>()?;
    let ranked: Vec<Vec<&str>> = results.iter().map(DiscoveryResult::ids).collect();

    let mut row = EvalRow {
        mode: config.mode.as_str().to_string(),
        queries: texts.len(),
        recall_at_1: recall_at_k(&ranked, truths, 1)?,
        recall_at_10: recall_at_k(&ranked, truths, 10)?,
        mrr_at_10: mrr_at_k(&ranked, truths, 10)?,
        latency_mean_ms: 0.0,
        latency_p95_ms: 0.0,
        stage_means: BTreeMap::new(),
        drop_r10: None,
        failed: None,
    };
    if options.measure_latency {
        let timings = time_sequential(engine, config, texts, options.warmup)?;
        let report = latency_report_from(&timings, DEFAULT_BUDGET_MS);
        row.latency_mean_ms = report.total_mean_ms;
        row.latency_p95_ms = report.stages["total"].p95_ms;
        row.stage_means = report.stages.into_iter().map(|(k, s)| (k, s.mean_ms)).collect();
    }
    Ok(row)
}

/// Runs queries one at a time on the calling thread after `warmup`
/// untimed calls (which cycle through the same queries).
pub fn time_sequential(
    engine: &Engine,
    config: &EngineConfig,
    texts: &[&str],
    warmup: usize,
) -> Result<Vec<StageTimings>> {
    for q in texts.iter().cycle().take(warmup.min(texts.len().max(1) * warmup)) {
        engine.discover_with(q, config)?;
    }
    texts.iter().map(|q| engine.discover_with(q, config).map(|r| r.timings)).collect()
}

/// Tag-lookup baseline: candidates are the agents matching any predicted
/// tag, in seeded random order.
pub fn slm_sort_baseline(engine: &Engine, corpus: &GeneratedCorpus, seed: u64) -> Result<EvalRow> {
    if corpus.queries.is_empty() {
        return Err(Error::input("corpus has no queries"));
    }
    let k = engine.config().max_tags;
    let mut ranked: Vec<Vec<String>> = Vec::with_capacity(corpus.queries.len());
    for (i, q) in corpus.queries.iter().enumerate() {
        let tags = engine
            .predictor()
            .predict_tags(&q.text, k)
            .map(|p| p.tags.into_iter().map(|t| t.tag).collect::<Vec<_>>())
            .unwrap_or_default();
        let mut ids: Vec<String> = engine.index().sparse().lookup(&tags).into_iter().map(str::to_string).collect();
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64)));
        ids.truncate(10);
        ranked.push(ids);
    }
    let truths: Vec<&str> = corpus.queries.iter().map(|q| q.truth_agent_id.as_str()).collect();
    Ok(EvalRow {
        mode: "slm_sort".into(),
        queries: truths.len(),
        recall_at_1: recall_at_k(&ranked, &truths, 1)?,
        recall_at_10: recall_at_k(&ranked, &truths, 10)?,
        mrr_at_10: mrr_at_k(&ranked, &truths, 10)?,
        latency_mean_ms: 0.0,
        latency_p95_ms: 0.0,
        stage_means: BTreeMap::new(),
        drop_r10: None,
        failed: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DilutionRow {
    pub m: usize,
    pub mean_pool_raw_dot: f64,
    pub max_sim: f64,
}

/// For each `m`, stores `m` orthonormal basis vectors as an example matrix
/// and queries with the last one.
pub fn dilution_demo(m_values: &[usize], dim: usize) -> Result<Vec<DilutionRow>> {
    m_values
        .iter()
        .map(|&m| {
            if m == 0 || m > dim {
                return Err(Error::input(format!("m = {m} needs 1 <= m <= dim = {dim}")));
            }
            let mut rows = vec![0.0f32; m * dim];
            for k in 0..m {
                rows[k * dim + k] = 1.0;
            }
            let matrix = ExampleMatrix::new(&rows, dim)?;
            let q = Vector::normalize(matrix.row(m - 1), dim)?;
            Ok(DilutionRow { m, mean_pool_raw_dot: mean_pool_raw_dot(&q, &matrix)?, max_sim: max_sim(&q, &matrix)? })
        })
        .collect()
}

pub fn dilution_table(rows: &[DilutionRow]) -> String {
    let mut out = format!("{:>6}  {:>18}  {:>8}\n", "m", "mean_pool_raw_dot", "max_sim");
    for r in rows {
        let _ = writeln!(out, "{:>6}  {:>18.12}  {:>8.6}", r.m, r.mean_pool_raw_dot, r.max_sim);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Ge,
    Gt,
    Le,
    Lt,
}

impl Comparison {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Ge => ">=",
            Comparison::Gt => ">",
            Comparison::Le => "<=",
            Comparison::Lt => "<",
        }
    }
}

/// A bound like `full.recall_at_10 >= 80` checked against a report row.
#[derive(Debug, Clone, PartialEq)]
pub struct Assertion {
    pub mode: String,
    pub metric: String,
    pub op: Comparison,
    pub value: f64,
}

impl FromStr for Assertion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config(format!("cannot parse assertion {s:?}; expected e.g. \"full.recall_at_10 >= 80\""));
        let (op, sym) = [(Comparison::Ge, ">="), (Comparison::Le, "<="), (Comparison::Gt, ">"), (Comparison::Lt, "<")]
            .into_iter()
            .find(|(_, sym)| s.contains(sym))
            .ok_or_else(bad)?;
        let (lhs, rhs) = s.split_once(sym).ok_or_else(bad)?;
        let (mode, metric) = lhs.trim().split_once('.').ok_or_else(bad)?;
        let value = rhs.trim().parse::<f64>().map_err(|_| bad())?;
        Ok(Assertion { mode: mode.trim().to_string(), metric: metric.trim().to_string(), op, value })
    }
}

impl Assertion {
    /// `Ok(())` when the bound holds, otherwise a description of the miss.
    pub fn check(&self, report: &EvalReport) -> std::result::Result<(), String> {
        let row = report.row(&self.mode).ok_or_else(|| format!("no row for mode {}", self.mode))?;
        if let Some(reason) = &row.failed {
            return Err(format!("mode {} failed: {reason}", self.mode));
        }
        let actual = row.metric(&self.metric).ok_or_else(|| format!("unknown metric {}", self.metric))?;
        let ok = match self.op {
            Comparison::Ge => actual >= self.value,
            Comparison::Gt => actual > self.value,
            Comparison::Le => actual <= self.value,
            Comparison::Lt => actual < self.value,
        };
        if ok {
            Ok(())
        } else {
            Err(format!("{}.{} = {actual} is not {} {}", self.mode, self.metric, self.op.symbol(), self.value))
        }
    }
}
