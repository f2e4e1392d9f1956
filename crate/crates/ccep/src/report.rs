//! Archive serialization and report rendering.
//!
//! A prune run writes one JSON document per archive entry plus a summary
//! CSV; the report command turns an archive directory into a text table,
//! an accuracy-vs-FLOPs-reduction curve (CSV + SVG), and per-layer
//! retained-width bar data. All files are written atomically
//! (temp-then-rename) and are byte-reproducible from (config, seed).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coevolution::{EntryMetrics, RunOutput};
use crate::genome::LayerGenome;
use crate::net::checkpoint;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const TRACES_FILE: &str = "traces.csv";
pub const BASELINE_FILE: &str = "baseline.json";

pub const SUMMARY_HEADER: &str =
    "iteration,test_correct,test_total,test_accuracy,flops,params,flops_reduction";
pub const TRACES_HEADER: &str = "iteration,layer,generation,correct_count,retained,flops";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed archive file {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error(transparent)]
    Net(#[from] crate::net::NetError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write a file atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenomeRecord {
    pub layer: usize,
    pub mask: LayerGenome,
}

/// On-disk form of one archive entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArchiveEntryRecord {
    pub iteration: usize,
    pub genomes: Vec<GenomeRecord>,
    pub metrics: EntryMetrics,
    pub config_fingerprint: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineRecord {
    pub metrics: EntryMetrics,
    pub config_fingerprint: String,
}

fn entry_json_name(iteration: usize) -> String {
    format!("entry_{:04}.json", iteration + 1)
}

fn entry_ckpt_name(iteration: usize) -> String {
    format!("entry_{:04}.ckpt", iteration + 1)
}

fn format_metrics_row(iteration: usize, m: &EntryMetrics) -> String {
    format!(
        "{},{},{},{:.6},{},{},{:.6}",
        iteration + 1,
        m.test_correct,
        m.test_total,
        m.test_correct as f64 / m.test_total as f64,
        m.flops,
        m.params,
        m.flops_reduction
    )
}

/// Persist a finished run: per-entry JSON + checkpoint, baseline, summary
/// CSV, and (when verbose) per-generation trace rows.
pub fn write_archive(
    out_dir: &Path,
    output: &RunOutput,
    config_fingerprint: &str,
    verbose: bool,
) -> Result<(), ReportError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let baseline = BaselineRecord {
        metrics: output.baseline_metrics,
        config_fingerprint: config_fingerprint.to_string(),
    };
    let baseline_json = serde_json::to_vec_pretty(&baseline).expect("baseline encodes");
    write_atomic(&out_dir.join(BASELINE_FILE), &baseline_json)?;

    let mut summary = String::from(SUMMARY_HEADER);
    summary.push('\n');
    for entry in &output.archive {
        let record = ArchiveEntryRecord {
            iteration: entry.iteration,
            genomes: entry
                .genomes
                .iter()
                .map(|(layer, mask)| GenomeRecord {
                    layer: *layer,
                    mask: mask.clone(),
                })
                .collect(),
            metrics: entry.metrics,
            config_fingerprint: config_fingerprint.to_string(),
        };
        let json = serde_json::to_vec_pretty(&record).expect("entry encodes");
        write_atomic(&out_dir.join(entry_json_name(entry.iteration)), &json)?;
        checkpoint::save(&entry.network, &out_dir.join(entry_ckpt_name(entry.iteration)))?;
        summary.push_str(&format_metrics_row(entry.iteration, &entry.metrics));
        summary.push('\n');
    }
    write_atomic(&out_dir.join(SUMMARY_FILE), summary.as_bytes())?;

    if verbose {
        let mut traces = String::from(TRACES_HEADER);
        traces.push('\n');
        for report in &output.reports {
            for (layer, rows) in &report.traces {
                for row in rows {
                    let _ = writeln!(
                        traces,
                        "{},{},{},{},{},{}",
                        report.iteration + 1,
                        layer,
                        row.generation,
                        row.best_correct,
                        row.best_retained,
                        row.best_flops
                    );
                }
            }
        }
        write_atomic(&out_dir.join(TRACES_FILE), traces.as_bytes())?;
    }
    Ok(())
}

/// Load the entry records and baseline back from an archive directory.
pub fn read_archive(dir: &Path) -> Result<(BaselineRecord, Vec<ArchiveEntryRecord>), ReportError> {
    let baseline_path = dir.join(BASELINE_FILE);
    let text = fs::read_to_string(&baseline_path).map_err(io_err(&baseline_path))?;
    let baseline: BaselineRecord =
        serde_json::from_str(&text).map_err(|e| ReportError::Malformed {
            path: baseline_path.clone(),
            reason: e.to_string(),
        })?;

    let mut entries = Vec::new();
    for iteration in 0.. {
        let path = dir.join(entry_json_name(iteration));
        if !path.exists() {
            break;
        }
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let record: ArchiveEntryRecord =
            serde_json::from_str(&text).map_err(|e| ReportError::Malformed {
                path: path.clone(),
                reason: e.to_string(),
            })?;
        if record.iteration != iteration {
            return Err(ReportError::Malformed {
                path,
                reason: format!("expected iteration {iteration}, found {}", record.iteration),
            });
        }
        entries.push(record);
    }
    Ok((baseline, entries))
}

fn accuracy(m: &EntryMetrics) -> f64 {
    m.test_correct as f64 / m.test_total as f64
}

/// Simple polyline plot of accuracy vs FLOPs reduction.
fn render_curve_svg(points: &[(f64, f64)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const MARGIN: f64 = 60.0;
    let px = |x: f64| MARGIN + x.clamp(0.0, 1.0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - y.clamp(0.0, 1.0) * (H - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(svg, "  <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    // axes
    let _ = writeln!(
        svg,
        "  <line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>",
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    );
    let _ = writeln!(
        svg,
        "  <line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>",
        m = MARGIN,
        b = H - MARGIN
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">FLOPs reduction</text>",
        W / 2.0,
        H - 20.0
    );
    let _ = writeln!(
        svg,
        "  <text x=\"18\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">Test accuracy</text>",
        H / 2.0,
        H / 2.0
    );
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{tick}</text>",
            px(tick),
            H - MARGIN + 18.0
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{tick}</text>",
            MARGIN - 8.0,
            py(tick) + 4.0
        );
    }
    if points.len() > 1 {
        let path: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            svg,
            "  <polyline points=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\"/>",
            path.join(" ")
        );
    }
    for &(x, y) in points {
        let _ = writeln!(
            svg,
            "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"steelblue\"/>",
            px(x),
            py(y)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Render report artifacts from an archive directory: per-iteration text
/// table, accuracy-vs-reduction curve (CSV and SVG), and per-layer
/// retained-width bar data.
pub fn render_report(archive_dir: &Path, out_dir: &Path) -> Result<(), ReportError> {
    let (baseline, entries) = read_archive(archive_dir)?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let mut table = String::new();
    let _ = writeln!(
        table,
        "{:>9}  {:>10}  {:>12}  {:>12}  {:>10}",
        "iteration", "accuracy", "flops", "reduction", "params"
    );
    let _ = writeln!(
        table,
        "{:>9}  {:>10.6}  {:>12}  {:>12.6}  {:>10}",
        "base",
        accuracy(&baseline.metrics),
        baseline.metrics.flops,
        0.0,
        baseline.metrics.params
    );
    for e in &entries {
        let _ = writeln!(
            table,
            "{:>9}  {:>10.6}  {:>12}  {:>12.6}  {:>10}",
            e.iteration + 1,
            accuracy(&e.metrics),
            e.metrics.flops,
            e.metrics.flops_reduction,
            e.metrics.params
        );
    }
    write_atomic(&out_dir.join("report.txt"), table.as_bytes())?;

    let mut curve = String::from("flops_reduction,test_accuracy\n");
    let mut points = vec![(0.0, accuracy(&baseline.metrics))];
    let _ = writeln!(curve, "0.000000,{:.6}", accuracy(&baseline.metrics));
    for e in &entries {
        let _ = writeln!(
            curve,
            "{:.6},{:.6}",
            e.metrics.flops_reduction,
            accuracy(&e.metrics)
        );
        points.push((e.metrics.flops_reduction, accuracy(&e.metrics)));
    }
    write_atomic(&out_dir.join("curve.csv"), curve.as_bytes())?;
    write_atomic(
        &out_dir.join("curve.svg"),
        render_curve_svg(&points).as_bytes(),
    )?;

    let mut widths = String::from("iteration,layer,retained\n");
    for e in &entries {
        for g in &e.genomes {
            let _ = writeln!(widths, "{},{},{}", e.iteration + 1, g.layer, g.mask.retained());
        }
    }
    write_atomic(&out_dir.join("layer_widths.csv"), widths.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coevolution::{ArchiveEntry, IterationReport};
    use crate::net::train::init_weights;
    use crate::net::{ArchitectureSpec, LayerSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fake_output() -> RunOutput {
        let spec = ArchitectureSpec::new(
            vec![
                LayerSpec::Dense {
                    in_units: 2,
                    out_units: 4,
                },
                LayerSpec::Relu,
                LayerSpec::Dense {
                    in_units: 4,
                    out_units: 2,
                },
            ],
            vec![true, false, false],
        )
        .unwrap();
        let net = init_weights(&spec, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let baseline_metrics = EntryMetrics {
            test_correct: 90,
            test_total: 100,
            flops: net.flops(),
            params: net.num_params(),
            flops_reduction: 0.0,
        };
        let genome: LayerGenome = "1101".parse().unwrap();
        let pruned = net.apply_genomes(&[genome.clone()]).unwrap();
        let entry = ArchiveEntry {
            iteration: 0,
            network: pruned.clone(),
            genomes: vec![(0, genome)],
            metrics: EntryMetrics {
                test_correct: 89,
                test_total: 100,
                flops: pruned.flops(),
                params: pruned.num_params(),
                flops_reduction: 1.0 - pruned.flops() as f64 / net.flops() as f64,
            },
        };
        RunOutput {
            archive: vec![entry],
            reports: vec![IterationReport {
                iteration: 0,
                evaluations: 55,
                traces: vec![],
                any_final_population_pruned: true,
            }],
            baseline_metrics,
        }
    }

    #[test]
    fn archive_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let output = fake_output();
        write_archive(dir.path(), &output, "cafebabe", true).unwrap();
        let (baseline, entries) = read_archive(dir.path()).unwrap();
        assert_eq!(baseline.metrics, output.baseline_metrics);
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].metrics, output.archive[0].metrics);
        assert_eq!(entries[0].genomes[0].mask.to_string(), "1101");
        assert_eq!(entries[0].config_fingerprint, "cafebabe");
        // checkpoint reloads
        let net = checkpoint::load(&dir.path().join("entry_0001.ckpt")).unwrap();
        assert_eq!(net.flops(), output.archive[0].metrics.flops);
    }

    #[test]
    fn summary_csv_matches_entries_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let output = fake_output();
        write_archive(dir.path(), &output, "00", false).unwrap();
        let summary = fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
        let mut lines = summary.lines();
        assert_eq!(lines.next().unwrap(), SUMMARY_HEADER);
        let row = lines.next().unwrap();
        let m = output.archive[0].metrics;
        assert!(row.starts_with(&format!("1,{},{},", m.test_correct, m.test_total)));
        assert!(row.contains(&format!(",{},", m.flops)));
    }

    #[test]
    fn report_renders_single_entry_archive() {
        let archive = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        let output = fake_output();
        write_archive(archive.path(), &output, "00", false).unwrap();
        render_report(archive.path(), out.path()).unwrap();

        let table = fs::read_to_string(out.path().join("report.txt")).unwrap();
        assert!(table.contains("0.890000"), "accuracy passes through: {table}");
        let curve = fs::read_to_string(out.path().join("curve.csv")).unwrap();
        assert_eq!(curve.lines().count(), 3); // header + baseline + one entry
        let svg = fs::read_to_string(out.path().join("curve.svg")).unwrap();
        assert!(svg.starts_with("<svg"));

        // per-layer widths sum to the entry's retained total
        let widths = fs::read_to_string(out.path().join("layer_widths.csv")).unwrap();
        let total: usize = widths
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap())
            .sum();
        let expected: usize = output.archive[0]
            .genomes
            .iter()
            .map(|(_, g)| g.retained())
            .sum();
        assert_eq!(total, expected);
    }

    #[test]
    fn report_on_missing_archive_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        assert!(render_report(dir.path(), out.path()).is_err());
    }

    #[test]
    fn malformed_entry_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let output = fake_output();
        write_archive(dir.path(), &output, "00", false).unwrap();
        fs::write(dir.path().join("entry_0001.json"), b"{not json").unwrap();
        assert!(matches!(
            read_archive(dir.path()),
            Err(ReportError::Malformed { .. })
        ));
    }
}
