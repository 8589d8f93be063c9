//! Grid sweep: induce each configuration, merge ADD/AVG pairs whose
//! labelings coincide, score every distinct labeling and write the report
//! tables.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::anyhow;
use rayon::prelude::*;

use senseforge::eval::report::{best_per_metric, write_csv, write_json, SupplementaryRow};
use senseforge::{
    evaluate, induce, Composition, Connectivity, Dataset, EmbeddingTable, EvalSettings, GoldStandard, InstanceFilter,
    Louvain, MetricReport, PipelineConfig, Scalar, SenseLabeling, Similarity, WindowMode,
};

use crate::commands::{make_dir, read_embeddings, read_instances, read_key, write_with};
use crate::options::{engine, grid, scoring, Precision, Resolver};
use crate::{CliError, CliResult, SweepArgs};

/// Report name of a configuration's system.
pub fn system_name(composition: &str, similarity: Similarity) -> String {
    match similarity {
        Similarity::Cosine => format!("CN-{composition}"),
        Similarity::InverseEuclidean => format!("CN-{composition} (euclidean)"),
    }
}

/// Outcome of inducing one configuration over all lemmas.
struct Induced {
    labeling: Result<SenseLabeling, String>,
    warnings: Vec<String>,
}

fn induce_grid<T: Scalar>(
    configs: &[PipelineConfig],
    data: &Dataset,
    table: &EmbeddingTable,
    lv: &Louvain,
) -> Vec<Induced> {
    let groups: Vec<_> = data.by_lemma().into_iter().collect();
    let tasks: Vec<(usize, usize)> = (0..configs.len()).flat_map(|c| (0..groups.len()).map(move |l| (c, l))).collect();
    let results: Vec<_> = tasks
        .par_iter()
        .map(|&(c, l)| {
            let (lemma, instances) = &groups[l];
            induce::<T>(lemma, instances, table, &configs[c], lv).map_err(|e| format!("{lemma}: {e}"))
        })
        .collect();

    let mut out: Vec<Induced> =
        configs.iter().map(|_| Induced { labeling: Ok(SenseLabeling::new()), warnings: Vec::new() }).collect();
    for (&(c, _), r) in tasks.iter().zip(results) {
        let slot = &mut out[c];
        match (r, &mut slot.labeling) {
            (Ok(res), Ok(all)) => {
                slot.warnings.extend(res.warnings);
                all.extend(res.labeling);
            }
            (Ok(res), Err(_)) => slot.warnings.extend(res.warnings),
            (Err(e), Ok(_)) => slot.labeling = Err(e),
            (Err(e), Err(prev)) => {
                prev.push_str("; ");
                prev.push_str(&e);
            }
        }
    }
    out
}

/// A system to score: one configuration, or an ADD/AVG pair sharing a
/// labeling.
struct Job {
    config: PipelineConfig,
    merged: bool,
    source: usize,
}

/// Pairs every ADD configuration with its AVG twin when both labelings are
/// identical; the merged job takes the ADD position in the grid order.
fn plan(configs: &[PipelineConfig], induced: &[Induced]) -> Vec<Job> {
    let index: BTreeMap<PipelineConfig, usize> = configs.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let mut absorbed = vec![false; configs.len()];
    let mut jobs = Vec::new();
    for (i, c) in configs.iter().enumerate() {
        if absorbed[i] {
            continue;
        }
        let twin = (c.composition == Composition::Add)
            .then(|| index.get(&PipelineConfig { composition: Composition::Avg, ..*c }))
            .flatten()
            .copied();
        let merged = match (twin, &induced[i].labeling) {
            (Some(j), Ok(a)) => matches!(&induced[j].labeling, Ok(b) if a == b),
            _ => false,
        };
        if let (true, Some(j)) = (merged, twin) {
            absorbed[j] = true;
        }
        jobs.push(Job { config: *c, merged, source: i });
    }
    jobs
}

/// Result of scoring one job; `Err` carries the failure message.
type Scored = Result<Vec<MetricReport>, String>;

fn score_job(
    job: &Job,
    induced: &Induced,
    gold: &GoldStandard,
    settings: &EvalSettings,
    filters: &[InstanceFilter],
) -> (Scored, Vec<String>) {
    let composition = if job.merged { "ADD/AVG".to_string() } else { job.config.composition.to_string() };
    let name = system_name(&composition, job.config.similarity);
    let mut warnings = induced.warnings.clone();
    let labeling = match &induced.labeling {
        Ok(l) => l,
        Err(e) => return (Err(format!("induction failed: {e}")), warnings),
    };
    match evaluate(labeling, gold, settings, filters) {
        Ok(ev) => {
            warnings.extend(ev.diagnostics.warnings.iter().cloned());
            if !ev.diagnostics.missing_from_system.is_empty() {
                warnings.push(format!("{} gold instances unlabeled", ev.diagnostics.missing_from_system.len()));
            }
            let rows = ev
                .rows
                .iter()
                .map(|(f, s)| {
                    let mut r = MetricReport::new(name.clone(), Some(&job.config), *f, s);
                    r.composition.clone_from(&composition);
                    r
                })
                .collect();
            (Ok(rows), warnings)
        }
        Err(e) => (Err(format!("evaluation failed: {e}")), warnings),
    }
}

fn config_label(job: &Job) -> String {
    let comp = if job.merged { "ADD/AVG".to_string() } else { job.config.composition.to_string() };
    format!("{}\t{}\t{}\t{}", comp, job.config.window, job.config.connectivity, job.config.similarity)
}

pub fn sweep(a: &SweepArgs) -> CliResult<()> {
    let r = Resolver::new(a.manifest.as_deref())?;
    let emb_path = r.input(a.embeddings.as_deref(), "embeddings")?;
    let inst_path = r.input(a.instances.as_deref(), "instances")?;
    let out = r.output(a.out.as_deref(), "out")?;
    let configs = grid(&r, &a.pipeline)?;
    let eng = engine(&r, &a.pipeline)?;
    let sc = scoring(&r, &a.eval)?;

    let table = read_embeddings(&emb_path)?;
    let data = read_instances(&inst_path)?;
    let gold = read_key(&sc.gold)?;
    make_dir(&out)?;

    log::info!("sweeping {} configurations over {} instances", configs.len(), data.len());
    let induced = match eng.precision {
        Precision::F32 => induce_grid::<f32>(&configs, &data, &table, &eng.louvain),
        Precision::F64 => induce_grid::<f64>(&configs, &data, &table, &eng.louvain),
    };
    let jobs = plan(&configs, &induced);
    let scored: Vec<(Scored, Vec<String>)> =
        jobs.par_iter().map(|j| score_job(j, &induced[j.source], &gold, &sc.settings, &sc.filters)).collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut warnings = Vec::new();
    for (job, (res, warns)) in jobs.iter().zip(scored) {
        let label = config_label(job);
        warnings.extend(warns.into_iter().map(|w| format!("{label}\t{w}")));
        match res {
            Ok(r) => rows.extend(r),
            Err(e) => failures.push(format!("{label}\t{e}")),
        }
    }
    write_reports(&out, &rows, &sc.filters)?;
    write_lines(&out.join("failures.tsv"), &failures)?;
    write_lines(&out.join("warnings.tsv"), &warnings)?;

    let merged = jobs.iter().filter(|j| j.merged).count();
    println!(
        "{} configurations, {} systems after merging {merged} ADD/AVG pairs, {} rows, {} failed -> {}",
        configs.len(),
        jobs.len(),
        rows.len(),
        failures.len(),
        out.display()
    );
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(anyhow!(
            "{} of {} systems failed; see {}",
            failures.len(),
            jobs.len(),
            out.join("failures.tsv").display()
        )))
    }
}

fn write_lines(path: &Path, lines: &[String]) -> anyhow::Result<()> {
    write_with(path, |w| {
        for l in lines {
            writeln!(w, "{l}")?;
        }
        Ok(())
    })
}

fn write_reports(out: &Path, rows: &[MetricReport], filters: &[InstanceFilter]) -> anyhow::Result<()> {
    let csv = |name: &str, rows: &[MetricReport]| write_with(&out.join(name), |w| Ok(write_csv(rows, w)?));
    csv("sweep.csv", rows)?;
    write_with(&out.join("sweep.json"), |w| Ok(write_json(rows, w)?))?;
    write_with(&out.join("best.csv"), |w| Ok(write_csv(&best_per_metric(rows), w)?))?;

    let full_window = WindowMode::FullSentence.to_string();
    let full_k = Connectivity::Full.to_string();
    let by_k: Vec<_> = rows.iter().filter(|r| r.window == full_window).cloned().collect();
    let by_window: Vec<_> = rows.iter().filter(|r| r.k == full_k).cloned().collect();
    csv("series_k.csv", &by_k)?;
    csv("series_window.csv", &by_window)?;

    for f in filters {
        let name = f.to_string();
        let table: Vec<SupplementaryRow> =
            rows.iter().filter(|r| r.filter == name).map(SupplementaryRow::from).collect();
        write_with(&out.join(format!("supplementary_{name}.csv")), |w| Ok(write_csv(&table, w)?))?;
    }
    Ok(())
}
