use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use instanton_core::certify::{certify_records, classify_and_certify, distinct_structures, StructureKey};
use instanton_core::montecarlo::{self, estimate_fer, fit_offset, instanton_slope_curve, semianalytic_fer, McConfig, McError};
use instanton_core::record::{CertificateDocument, RecordDocument};
use instanton_core::search::{amoeba_minimize_targets, InstantonRecord, SearchConfig, StartMode, Targets};
use instanton_core::symmetry::orbit_representatives;
use instanton_core::{ChannelKind, ChannelModel, ParityCheckCode};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::manifest::{code_id, RunManifest};
use crate::range::{parse_schedule, parse_snr_list};
use crate::{usage, CertifyArgs, Cli, CodeArg, Command, CurvesArgs, GenCodeArgs, InstantonArgs, McArgs};

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let workers = instanton_core::par::current_workers();
    match cli.command {
        Command::GenCode(a) => gen_code(a, workers),
        Command::Instanton(a) => instanton(a, workers),
        Command::Certify(a) => certify(a),
        Command::Mc(a) => mc(a, workers),
        Command::Curves(a) => curves(a, workers),
    }
}

fn load_code(arg: &CodeArg) -> anyhow::Result<ParityCheckCode> {
    match &arg.code {
        None => Ok(ParityCheckCode::tanner_155()),
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ParityCheckCode::from_alist(&text).with_context(|| format!("parsing {}", path.display()))
        }
    }
}

/// Writes `text` to `path`, or to stdout when no path is given.
fn emit(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn gen_code(a: GenCodeArgs, workers: usize) -> anyhow::Result<()> {
    if !a.tanner155 {
        return Err(usage("gen-code needs a code family (available: --tanner155)"));
    }
    let code = ParityCheckCode::tanner_155();
    emit(a.output.as_deref(), &code.to_alist())?;
    if let Some(path) = &a.output {
        RunManifest::new("gen-code", Some(&code), None, workers, json!({ "family": "tanner155" })).write_beside(path)?;
        eprintln!("wrote {} ({} bits, {} checks, rank {})", path.display(), code.n_bits(), code.n_checks(), code.gf2_rank());
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StructureSummary {
    pub length_exact: String,
    pub length: f64,
    #[serde(rename = "N_c")]
    pub n_c: i64,
    #[serde(rename = "N_2")]
    pub n_2: i64,
    pub n_star: Option<i64>,
    pub m_2: usize,
    pub green_bits: usize,
    pub h_sum: Option<String>,
}

impl From<&StructureKey> for StructureSummary {
    fn from(k: &StructureKey) -> Self {
        StructureSummary {
            length_exact: k.length.to_string(),
            length: instanton_core::certify::ratio_f64(&k.length),
            n_c: k.n_c,
            n_2: k.n_2,
            n_star: k.n_star,
            m_2: k.m_2,
            green_bits: k.greens,
            h_sum: k.h_sum.map(|h| h.to_string()),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SearchSummary {
    pub targets: usize,
    pub attempts: usize,
    pub successes: usize,
    pub evaluations: u64,
    pub distinct_records: usize,
    pub certified: usize,
    pub records_written: usize,
    pub best_length: Option<f64>,
    pub distinct_structures: Vec<StructureSummary>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct InstantonOutput {
    pub manifest: RunManifest,
    pub summary: SearchSummary,
    pub records: Vec<RecordDocument>,
}

fn instanton(a: InstantonArgs, workers: usize) -> anyhow::Result<()> {
    let code = load_code(&a.code)?;
    let channel = ChannelModel::new(a.channel, 1.0, a.alpha).map_err(|e| usage(e.to_string()))?;
    if a.alpha > 0.0 && a.channel == ChannelKind::Gaussian {
        return Err(usage("--alpha only applies to the Laplacian channel"));
    }
    let anneal_schedule = parse_schedule(&a.anneal).map_err(usage)?;
    let targets: Vec<usize> = if a.orbit_reduce {
        orbit_representatives(&code)
    } else if a.sweep_targets {
        (0..code.n_bits()).collect()
    } else {
        vec![a.target.unwrap_or(0)]
    };
    let cfg = SearchConfig {
        targets: if a.sweep_targets || a.orbit_reduce { Targets::Sweep } else { Targets::Bit(targets[0]) },
        n_it: a.iters,
        channel,
        restarts: a.restarts,
        simplex_scale: a.simplex_scale,
        anneal_schedule,
        bisect_tol: a.bisect_tol,
        max_ray: a.max_ray,
        seed: a.seed,
        start: if a.dense { StartMode::Dense } else { StartMode::Sparse { support: a.support } },
        start_radius: a.radius,
    };
    cfg.validate(&code).map_err(|e| usage(e.to_string()))?;

    let started = Instant::now();
    let outcome = amoeba_minimize_targets(&code, &cfg, &targets)?;
    let distinct: Vec<InstantonRecord> = outcome.distinct_records().into_iter().cloned().collect();
    let certs = certify_records(&code, &distinct);
    eprintln!(
        "searched {} target(s) x {} restarts in {:.1?}; certified {} of {} distinct records",
        targets.len(),
        cfg.restarts,
        started.elapsed(),
        certs.iter().filter(|c| c.is_ok()).count(),
        distinct.len()
    );

    let id = code_id(&code);
    let mut docs: Vec<RecordDocument> = distinct
        .iter()
        .zip(&certs)
        .map(|(rec, cert)| {
            let mut doc = RecordDocument::new(rec, &id, cert.as_ref().ok());
            if let Err(e) = cert {
                doc.warning = Some(format!("uncertified: {e}"));
            }
            doc
        })
        .collect();
    docs.sort_by(|x, y| x.length.total_cmp(&y.length).then(x.target_bit.cmp(&y.target_bit)));
    let structures = distinct_structures(certs.iter().filter_map(|c| c.as_ref().ok()));
    let summary = SearchSummary {
        targets: targets.len(),
        attempts: outcome.attempts(),
        successes: outcome.successes(),
        evaluations: outcome.evaluations,
        distinct_records: distinct.len(),
        certified: certs.iter().filter(|c| c.is_ok()).count(),
        records_written: if a.max_records == 0 { docs.len() } else { docs.len().min(a.max_records) },
        best_length: outcome.best().map(|r| r.length),
        distinct_structures: structures.iter().map(StructureSummary::from).collect(),
    };
    docs.truncate(summary.records_written);

    // keep stdout clean when it carries the JSON
    let mut lines = vec![format!(
        "attempts {}, crossings {}, evaluations {}",
        summary.attempts, summary.successes, summary.evaluations
    )];
    lines.push(match outcome.best() {
        Some(best) => format!("best length {:.6} (target bit {})", best.length, best.target_bit),
        None => "no error-surface crossing found".to_string(),
    });
    let listed: Vec<String> = structures.iter().take(10).map(|k| k.length.to_string()).collect();
    lines.push(format!("distinct certified lengths: [{}]", listed.join(", ")));
    for line in lines {
        if a.output.is_some() {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }

    let config = json!({ "search": cfg, "targets": targets, "max_records": a.max_records });
    let manifest = RunManifest::new("instanton", Some(&code), Some(a.seed), workers, config);
    let out = InstantonOutput { manifest, summary, records: docs };
    let text = serde_json::to_string_pretty(&out)? + "\n";
    emit(a.output.as_deref(), &text)
}

fn read_records(path: &PathBuf) -> anyhow::Result<Vec<RecordDocument>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let docs = match value.get("records") {
        Some(records) => serde_json::from_value(records.clone()),
        None => serde_json::from_value(value).map(|d| vec![d]),
    };
    docs.with_context(|| format!("{} holds neither a record nor a records file", path.display()))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CertifiedEntry {
    pub index: usize,
    pub target_bit: usize,
    pub length: f64,
    pub certificate: CertificateDocument,
}

fn certify(a: CertifyArgs) -> anyhow::Result<()> {
    let code = load_code(&a.code)?;
    let id = code_id(&code);
    let docs = read_records(&a.record)?;
    let indices: Vec<usize> = match a.index {
        Some(i) if i >= docs.len() => return Err(usage(format!("--index {i} but the file holds {} record(s)", docs.len()))),
        Some(i) => vec![i],
        None => (0..docs.len()).collect(),
    };
    let mut entries = Vec::new();
    let mut failures = 0usize;
    for i in indices {
        let doc = &docs[i];
        if doc.code_id != id {
            bail!("record {i} belongs to code {} but the loaded code is {id}", doc.code_id);
        }
        match classify_and_certify(&code, &doc.record()) {
            Ok(cert) => {
                let computed = CertificateDocument::from(&cert);
                if let Some(stored) = &doc.certificate {
                    if *stored != computed {
                        failures += 1;
                        eprintln!(
                            "record {i}: stored certificate (length {}) differs from the recomputed one (length {})",
                            stored.length_exact, computed.length_exact
                        );
                        continue;
                    }
                }
                eprintln!(
                    "record {i}: target {} length {} (N_c={}, N_2={}, n*={}, m_2={})",
                    doc.target_bit,
                    computed.length_exact,
                    computed.n_c,
                    computed.n_2,
                    computed.n_star.map_or("-".to_string(), |n| n.to_string()),
                    computed.m_2
                );
                entries.push(CertifiedEntry {
                    index: i,
                    target_bit: doc.target_bit,
                    length: doc.length,
                    certificate: computed,
                });
            }
            Err(e) => {
                failures += 1;
                eprintln!("record {i}: certification failed: {e}");
            }
        }
    }
    emit(a.output.as_deref(), &(serde_json::to_string_pretty(&entries)? + "\n"))?;
    if failures > 0 {
        bail!("{failures} record(s) failed certification");
    }
    Ok(())
}

fn mc(a: McArgs, workers: usize) -> anyhow::Result<()> {
    let code = load_code(&a.code)?;
    let snrs = parse_snr_list(&a.snr).map_err(usage)?;
    let channel = ChannelModel::new(a.channel, snrs[0], 0.0).map_err(|e| usage(e.to_string()))?;
    let cfg = McConfig {
        n_it: a.iters,
        min_errors: a.min_errors,
        max_trials: a.max_trials,
        seed: a.seed,
        early_exit: a.early_exit,
    };
    let started = Instant::now();
    let estimates = estimate_fer(&code, &channel, &snrs, &cfg).map_err(|e| match e {
        McError::InvalidConfig(_) => usage(e.to_string()),
        other => other.into(),
    })?;
    let mut text = format!("{}\n", montecarlo::CSV_HEADER);
    for e in &estimates {
        text += &montecarlo::csv_row(e);
        text.push('\n');
        let bound = if e.is_upper_bound() { " (no errors; upper bound)" } else { "" };
        eprintln!(
            "s={}: FER {:.3e} [{:.3e}, {:.3e}] over {} frames{bound}",
            e.snr, e.fer, e.ci95.0, e.ci95.1, e.trials
        );
    }
    eprintln!("done in {:.1?}", started.elapsed());
    emit(a.output.as_deref(), &text)?;
    if let Some(path) = &a.output {
        let config = json!({ "channel": a.channel, "snr": snrs, "mc": cfg });
        RunManifest::new("mc", Some(&code), Some(a.seed), workers, config).write_beside(path)?;
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct McRow {
    snr: f64,
    fer: f64,
}

fn read_mc_csv(path: &Path) -> anyhow::Result<Vec<McRow>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let rows = reader
        .deserialize()
        .collect::<Result<Vec<McRow>, _>>()
        .with_context(|| format!("parsing {}", path.display()))?;
    if rows.is_empty() {
        bail!("{} holds no Monte Carlo rows", path.display());
    }
    Ok(rows)
}

fn curves(a: CurvesArgs, workers: usize) -> anyhow::Result<()> {
    if !(a.l_inst > 0.0 && a.l_inst.is_finite()) {
        return Err(usage(format!("--l-inst must be positive, got {}", a.l_inst)));
    }
    if let Some(l) = a.l_ml {
        if !(l > 0.0 && l.is_finite()) {
            return Err(usage(format!("--l-ml must be positive, got {l}")));
        }
    }
    if a.n < 2 {
        return Err(usage("--n must be at least 2"));
    }
    let snrs = parse_snr_list(&a.snr).map_err(usage)?;
    let base = ChannelModel::new(a.channel, snrs[0], 0.0).map_err(|e| usage(e.to_string()))?;

    let ln_line = |weight: f64, s: &[f64]| -> Vec<f64> {
        instanton_slope_curve(weight, a.channel, s).into_iter().map(|(_, v)| v).collect()
    };
    let mut offsets = (0.0, 0.0);
    let mut report = Vec::new();
    if let Some(path) = &a.fit {
        let rows = read_mc_csv(path)?;
        let s: Vec<f64> = rows.iter().map(|r| r.snr).collect();
        let fer: Vec<f64> = rows.iter().map(|r| r.fer).collect();
        let inst = ln_line(a.l_inst, &s);
        offsets.0 = fit_offset(&inst, &fer).context("no Monte Carlo point with a positive error rate")?;
        if let Some(l) = a.l_ml {
            offsets.1 = fit_offset(&ln_line(l, &s), &fer).unwrap_or(0.0);
        }
        for ((&s, &f), &v) in s.iter().zip(&fer).zip(&inst) {
            if f > 0.0 {
                let dev = (f.ln() - v - offsets.0) / std::f64::consts::LN_10;
                eprintln!("s={s}: Monte Carlo {f:.3e}, fitted line off by {dev:+.3} decades");
                report.push(json!({ "snr": s, "fer": f, "deviation_decades": dev }));
            }
        }
    }
    let inst = ln_line(a.l_inst, &snrs);
    let ml = a.l_ml.map(|l| ln_line(l, &snrs));
    let semi = semianalytic_fer(&base, a.n, a.l_inst, &snrs)?;

    let mut text = String::from("snr,slope_inst,slope_ml,semianalytic\n");
    for (k, &s) in snrs.iter().enumerate() {
        let ml_cell = ml.as_ref().map_or(String::new(), |m| format!("{:e}", (m[k] + offsets.1).exp()));
        text += &format!("{s},{:e},{ml_cell},{:e}\n", (inst[k] + offsets.0).exp(), semi[k].1);
    }
    emit(a.output.as_deref(), &text)?;
    if let Some(path) = &a.output {
        let config = json!({
            "l_inst": a.l_inst,
            "l_ml": a.l_ml,
            "channel": a.channel,
            "n": a.n,
            "snr": snrs,
            "fit": a.fit,
            "ln_offset_inst": offsets.0,
            "ln_offset_ml": offsets.1,
            "fit_points": report,
        });
        RunManifest::new("curves", None, None, workers, config).write_beside(path)?;
    }
    Ok(())
}
