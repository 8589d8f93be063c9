//! The induce, evaluate, baseline and inspect subcommands.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;
use serde_json::json;

use senseforge::eval::report::{write_csv, write_json};
use senseforge::eval::{Evaluation, MappingMode};
use senseforge::{
    baseline as make_baseline, context_embed, evaluate as score, induce as induce_lemma, induce_all, BaselineKind,
    BatchInduction, Dataset, EmbeddingTable, Louvain, MetricReport, PipelineConfig, Scalar, SenseAssignments,
    SenseFrequencyTable,
};

use crate::options::{engine, load_embeddings, scoring, single_config, Precision, Resolver};
use crate::{BaselineArgs, CliResult, EvaluateArgs, InduceArgs, InspectArgs, UsageError};

pub(crate) fn read_embeddings(path: &Path) -> anyhow::Result<EmbeddingTable> {
    let t = load_embeddings(path).with_context(|| format!("loading embeddings {}", path.display()))?;
    log::info!("{}: {} vectors of dimension {}", path.display(), t.len(), t.dim());
    Ok(t)
}

pub(crate) fn read_instances(path: &Path) -> anyhow::Result<Dataset> {
    Dataset::load_instances(path).with_context(|| format!("loading instances {}", path.display()))
}

pub(crate) fn read_key(path: &Path) -> anyhow::Result<SenseAssignments> {
    SenseAssignments::load_key(path).with_context(|| format!("loading key file {}", path.display()))
}

pub(crate) fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

pub(crate) fn write_with(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> anyhow::Result<()>,
) -> anyhow::Result<()> {
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush().with_context(|| format!("writing {}", path.display()))
}

pub(crate) fn make_dir(path: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating directory {}", path.display()))
}

/// Lemma keys as file names: anything outside `[A-Za-z0-9._-]` becomes `_`.
fn file_stem(lemma: &str) -> String {
    lemma.chars().map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' }).collect()
}

pub(crate) fn run_induction(
    precision: Precision,
    data: &Dataset,
    table: &EmbeddingTable,
    cfg: &PipelineConfig,
    louvain: &Louvain,
) -> BatchInduction {
    match precision {
        Precision::F32 => induce_all::<f32>(data, table, cfg, louvain),
        Precision::F64 => induce_all::<f64>(data, table, cfg, louvain),
    }
}

pub fn induce(a: &InduceArgs) -> CliResult<()> {
    let r = Resolver::new(a.manifest.as_deref())?;
    let emb_path = r.input(a.embeddings.as_deref(), "embeddings")?;
    let inst_path = r.input(a.instances.as_deref(), "instances")?;
    let out = r.output(a.out.as_deref(), "out")?;
    let cfg = single_config(&r, &a.pipeline)?;
    let eng = engine(&r, &a.pipeline)?;
    let debug = r.switch(a.debug, "debug")?;

    let table = read_embeddings(&emb_path)?;
    let data = read_instances(&inst_path)?;
    make_dir(&out)?;

    let batch = run_induction(eng.precision, &data, &table, &cfg, &eng.louvain);
    let labeling = batch.merged();
    let key = out.join("system.key");
    labeling.save_key(&key)?;
    if debug {
        let dir = out.join("debug");
        make_dir(&dir)?;
        match eng.precision {
            Precision::F32 => write_debug::<f32>(&data, &table, &cfg, &eng.louvain, &dir)?,
            Precision::F64 => write_debug::<f64>(&data, &table, &cfg, &eng.louvain, &dir)?,
        }
    }
    println!(
        "{cfg}: {} instances, {} lemmas, {} warnings -> {}",
        labeling.len(),
        batch.labelings.len(),
        batch.warnings.len(),
        key.display()
    );
    Ok(())
}

/// Per lemma: `<lemma>.embeddings`, `<lemma>.edges` and `<lemma>.partition`.
fn write_debug<T: Scalar>(
    data: &Dataset,
    table: &EmbeddingTable,
    cfg: &PipelineConfig,
    louvain: &Louvain,
    dir: &Path,
) -> anyhow::Result<()> {
    let groups: Vec<_> = data.by_lemma().into_iter().collect();
    groups.par_iter().try_for_each(|(lemma, instances)| -> anyhow::Result<()> {
        let res = match induce_lemma::<T>(lemma, instances, table, cfg, louvain) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("{lemma}: no debug dump: {e}");
                return Ok(());
            }
        };
        let stem = dir.join(file_stem(lemma));
        let with_ext = |ext: &str| PathBuf::from(format!("{}.{ext}", stem.display()));
        write_with(&with_ext("embeddings"), |w| Ok(context_embed::write_embeddings(&res.embeddings, w)?))?;
        if let Some(g) = &res.graph {
            write_with(&with_ext("edges"), |w| Ok(g.write_edge_list(w)?))?;
            if let Some(p) = &res.partition {
                write_with(&with_ext("partition"), |w| Ok(p.write_dump(g, w)?))?;
            }
        }
        Ok(())
    })
}

fn report_rows(name: &str, ev: &Evaluation, cfg: Option<&PipelineConfig>) -> Vec<MetricReport> {
    ev.rows.iter().map(|(f, s)| MetricReport::new(name, cfg, *f, s)).collect()
}

pub(crate) fn print_csv(rows: &[MetricReport]) -> anyhow::Result<()> {
    let stdout = io::stdout();
    write_csv(rows, stdout.lock())?;
    Ok(())
}

/// Full precision/recall detail per filter.
fn scores_json(name: &str, ev: &Evaluation) -> serde_json::Value {
    let rows: Vec<_> =
        ev.rows.iter().map(|(f, s)| json!({"system": name, "filter": f.to_string(), "scores": s})).collect();
    serde_json::Value::Array(rows)
}

fn report_diagnostics(ev: &Evaluation, file: Option<&Path>) -> anyhow::Result<()> {
    let d = &ev.diagnostics;
    if !d.is_clean() {
        log::warn!(
            "{} gold instances missing from the system (scored as unlabeled), {} unknown to gold, {} lemma mismatches",
            d.missing_from_system.len(),
            d.unknown_to_gold.len(),
            d.lemma_mismatch.len()
        );
    }
    match file {
        Some(p) => write_with(p, |w| Ok(d.write(w)?)),
        None if !d.is_clean() || !d.warnings.is_empty() => Ok(d.write(&mut io::stderr().lock())?),
        None => Ok(()),
    }
}

pub fn evaluate(a: &EvaluateArgs) -> CliResult<()> {
    let r = Resolver::new(a.manifest.as_deref())?;
    let system_path = r.input(a.system.as_deref(), "system")?;
    let sc = scoring(&r, &a.eval)?;
    let out = r.path(a.out.as_deref(), "out");
    let name = a.name.clone().unwrap_or_else(|| {
        system_path.file_stem().map_or_else(|| "system".into(), |s| s.to_string_lossy().into_owned())
    });

    let system = read_key(&system_path)?;
    let gold = read_key(&sc.gold)?;
    let ev = score(&system, &gold, &sc.settings, &sc.filters)?;
    let rows = report_rows(&name, &ev, None);
    print_csv(&rows)?;
    match out {
        Some(dir) => {
            make_dir(&dir)?;
            write_with(&dir.join("report.csv"), |w| Ok(write_csv(&rows, w)?))?;
            write_with(&dir.join("report.json"), |w| Ok(write_json(&rows, w)?))?;
            write_with(&dir.join("scores.json"), |w| {
                serde_json::to_writer_pretty(&mut *w, &scores_json(&name, &ev))?;
                Ok(writeln!(w)?)
            })?;
            if ev.diagnostics.mapped {
                ev.mapped.save_key(dir.join("mapped.key"))?;
            }
            report_diagnostics(&ev, Some(&dir.join("diagnostics.tsv")))?;
        }
        None => report_diagnostics(&ev, None)?,
    }
    Ok(())
}

pub fn baseline(a: &BaselineArgs) -> CliResult<()> {
    let r = Resolver::new(a.manifest.as_deref())?;
    let inst_path = r.input(a.instances.as_deref(), "instances")?;
    let freq_path = r.optional_input(a.freq.as_deref(), "freq")?;
    let default_kinds: &[BaselineKind] = if freq_path.is_some() {
        &BaselineKind::ALL
    } else {
        &[BaselineKind::OneSense, BaselineKind::OneClusterPerInstance]
    };
    let kinds = r.list(a.kind.as_deref(), "kind", default_kinds)?;
    if freq_path.is_none() {
        if let Some(k) = kinds.iter().find(|k| k.needs_frequencies()) {
            return Err(UsageError::new(format!("the {k} baseline needs --freq")).into());
        }
    }
    let sc = scoring(&r, &a.eval)?;
    let out = r.path(a.out.as_deref(), "out");

    let data = read_instances(&inst_path)?;
    let gold = read_key(&sc.gold)?;
    let freq = freq_path
        .map(|p| SenseFrequencyTable::load(&p).with_context(|| format!("loading frequencies {}", p.display())))
        .transpose()?;
    if let Some(dir) = &out {
        make_dir(dir)?;
    }

    let mut rows = Vec::new();
    for kind in kinds {
        let labeling = make_baseline(kind, &data, freq.as_ref())?;
        // frequency baselines already label with gold senses
        let mut settings = sc.settings;
        if kind.needs_frequencies() {
            settings.mode = MappingMode::Never;
        }
        let ev = score(&labeling, &gold, &settings, &sc.filters)?;
        for w in &ev.diagnostics.warnings {
            log::warn!("{kind}: {w}");
        }
        rows.extend(report_rows(kind.label(), &ev, None));
        if let Some(dir) = &out {
            labeling.save_key(dir.join(format!("{kind}.key")))?;
        }
    }
    print_csv(&rows)?;
    if let Some(dir) = &out {
        write_with(&dir.join("baselines.csv"), |w| Ok(write_csv(&rows, w)?))?;
    }
    Ok(())
}

pub fn inspect(a: &InspectArgs) -> CliResult<()> {
    let r = Resolver::new(a.manifest.as_deref())?;
    let emb_path = r.input(a.embeddings.as_deref(), "embeddings")?;
    let inst_path = r.input(a.instances.as_deref(), "instances")?;
    let cfg = single_config(&r, &a.pipeline)?;
    let eng = engine(&r, &a.pipeline)?;
    let lemma: Option<String> = r.optional(a.lemma.as_deref(), "lemma")?;

    let table = read_embeddings(&emb_path)?;
    let data = read_instances(&inst_path)?;
    let mut groups: Vec<_> = data.by_lemma().into_iter().collect();
    if let Some(l) = &lemma {
        groups.retain(|(k, _)| k == l);
        if groups.is_empty() {
            return Err(UsageError::new(format!("--lemma {l:?} does not occur in the instances")).into());
        }
    }
    let lines: Vec<String> = match eng.precision {
        Precision::F32 => stats_lines::<f32>(&groups, &table, &cfg, &eng.louvain),
        Precision::F64 => stats_lines::<f64>(&groups, &table, &cfg, &eng.louvain),
    };
    let stdout = io::stdout();
    let mut w = stdout.lock();
    writeln!(w, "# {cfg}")?;
    writeln!(
        w,
        "lemma\tinstances\tempty_contexts\tnodes\tedges\ttotal_weight\tcommunities\tmodularity\tsenses\tsizes"
    )?;
    for l in lines {
        writeln!(w, "{l}")?;
    }
    Ok(())
}

type Group<'a> = (&'a str, Vec<&'a senseforge::Instance>);

fn stats_lines<T: Scalar>(
    groups: &[Group<'_>],
    table: &EmbeddingTable,
    cfg: &PipelineConfig,
    lv: &Louvain,
) -> Vec<String> {
    groups
        .par_iter()
        .map(|(lemma, instances)| match induce_lemma::<T>(lemma, instances, table, cfg, lv) {
            Ok(res) => {
                let (nodes, edges, weight) = res
                    .graph
                    .as_ref()
                    .map_or((0, 0, 0.0), |g| (g.node_count(), g.edge_count(), g.total_weight().wide()));
                let (communities, q, sizes) = match (&res.graph, &res.partition) {
                    (Some(_), Some(p)) => {
                        let mut sizes: Vec<usize> = p.communities().iter().map(Vec::len).collect();
                        sizes.sort_unstable_by(|a, b| b.cmp(a));
                        let sizes: Vec<String> = sizes.iter().map(usize::to_string).collect();
                        (p.community_count(), format!("{:.6}", p.modularity().wide()), sizes.join(","))
                    }
                    _ => (0, "-".to_string(), "-".to_string()),
                };
                format!(
                    "{lemma}\t{}\t{}\t{nodes}\t{edges}\t{weight:.6}\t{communities}\t{q}\t{}\t{sizes}",
                    instances.len(),
                    res.empty_contexts.len(),
                    res.sense_count()
                )
            }
            Err(e) => format!("{lemma}\t{}\terror: {e}", instances.len()),
        })
        .collect()
}
