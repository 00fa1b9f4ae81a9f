use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use anyhow::{anyhow, bail, Context, Result};
use freqaug::analytics::{self, LfcTarget};
use freqaug::io::{load_clip_native, save_clip, save_gray, TENSOR_EXTENSION};
use freqaug::{
    stream_for_clip, AugOutcome, ConfigDoc, FilterConfig, FreqAug, FreqAugConfig, LoadedClip, Sample,
    SaveFormat, VideoClip, ViewSelection,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{AnalyzeCmd, AugmentCmd, FilterArgs, FilterCmd, InputArgs, OutputFormat, RenderCmd, Views};
use crate::discover::{discover, ClipEntry};

pub const RESOLVED_CONFIG: &str = "resolved_config.toml";
pub const MANIFEST: &str = "manifest.tsv";
pub const FILTER_REPORT: &str = "filter_report.tsv";
pub const STATS_TABLE: &str = "stats.tsv";
pub const SIGMA_T_HISTOGRAM: &str = "sigma_t_histogram.tsv";
pub const SIGMA_T_SPLIT: &str = "sigma_t_split.tsv";
pub const LFC_BINS: &str = "lfc_bins.tsv";

/// How a batch went; failed clips are listed in input order.
#[derive(Debug, Default)]
pub struct RunSummary {
    pub processed: usize,
    pub failures: Vec<(String, String)>,
    pub skipped: usize,
    pub keep_going: bool,
}

impl RunSummary {
    /// 0 when every clip succeeded, 2 when failures were skipped under
    /// `--keep-going`, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match (self.failures.is_empty(), self.keep_going) {
            (true, _) => 0,
            (false, true) => 2,
            (false, false) => 1,
        }
    }

    fn report(&self, what: &str, out: &Path) {
        for (id, err) in &self.failures {
            eprintln!("error: {id}: {err}");
        }
        if self.skipped > 0 {
            eprintln!("stopped after the first failure; {} clips not processed (use --keep-going)", self.skipped);
        }
        println!(
            "{what} {} clips, {} failed -> {}",
            self.processed,
            self.failures.len(),
            out.display()
        );
    }
}

#[derive(Debug, Serialize)]
struct JobRecord<'a> {
    command: &'a str,
    inputs: Vec<String>,
    output: String,
    jobs: usize,
    keep_going: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    frames: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stride: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    start: Option<usize>,
    value_range: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    format: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    two_view: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    views: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_bins: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_t_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hist_width: Option<f64>,
}

impl<'a> JobRecord<'a> {
    fn new(command: &'a str, input: &'a InputArgs) -> Self {
        Self {
            command,
            inputs: input.inputs.iter().map(|p| p.display().to_string()).collect(),
            output: input.output.display().to_string(),
            jobs: input.jobs(),
            keep_going: input.keep_going,
            frames: input.num_frames,
            stride: input.num_frames.map(|_| input.stride),
            start: input.num_frames.map(|_| input.start),
            value_range: input.value_range.name(),
            format: None,
            two_view: None,
            views: None,
            n_bins: None,
            sigma_t_threshold: None,
            hist_width: None,
        }
    }
}

fn format_name(f: OutputFormat) -> &'static str {
    match f {
        OutputFormat::Tensor => "tensor",
        OutputFormat::Frames => "frames",
        OutputFormat::Display => "display",
    }
}

fn write_resolved(out: &Path, doc: &ConfigDoc, job: &JobRecord) -> Result<()> {
    let path = out.join(RESOLVED_CONFIG);
    fs::write(&path, doc.to_text_with_job(job)?).with_context(|| format!("writing {}", path.display()))
}

fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut text = header.join("\t");
    text.push('\n');
    for row in rows {
        text.push_str(&row.join("\t"));
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Tabs and newlines would break the table layout.
fn one_line(msg: &str) -> String {
    msg.replace(['\t', '\n', '\r'], " ")
}

/// Runs `f` on every clip with `jobs` workers; results come back in input
/// order. Without `keep_going`, clips not yet started when a failure is seen
/// are skipped (`None`).
fn run_clips<R: Send>(
    entries: &[ClipEntry],
    jobs: usize,
    keep_going: bool,
    f: impl Fn(usize, &ClipEntry) -> Result<R> + Sync + Send,
) -> Result<Vec<Option<Result<R>>>> {
    let failed = AtomicBool::new(false);
    let work = |i: usize| {
        if !keep_going && failed.load(Ordering::SeqCst) {
            return None;
        }
        let r = f(i, &entries[i]);
        if r.is_err() {
            failed.store(true, Ordering::SeqCst);
        }
        Some(r)
    };
    if jobs <= 1 {
        return Ok((0..entries.len()).map(work).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| anyhow!("cannot start {jobs} workers: {e}"))?;
    Ok(pool.install(|| (0..entries.len()).into_par_iter().map(work).collect()))
}

fn summarize<R>(
    entries: &[ClipEntry],
    results: &[Option<Result<R>>],
    keep_going: bool,
) -> RunSummary {
    let mut s = RunSummary {
        keep_going,
        ..Default::default()
    };
    for (e, r) in entries.iter().zip(results) {
        match r {
            None => s.skipped += 1,
            Some(Ok(_)) => s.processed += 1,
            Some(Err(err)) => s.failures.push((e.id.clone(), format!("{err:#}"))),
        }
    }
    s
}

fn prepare(input: &InputArgs) -> Result<Vec<ClipEntry>> {
    let entries = discover(&input.inputs, input.sampling()?, input.value_range)?;
    fs::create_dir_all(&input.output).with_context(|| format!("creating {}", input.output.display()))?;
    Ok(entries)
}

fn resolve_config(args: &FilterArgs) -> Result<(ConfigDoc, FreqAugConfig)> {
    let base = match &args.config {
        Some(path) => ConfigDoc::load(path)?,
        None => ConfigDoc::default(),
    };
    let doc = base.merge(&args.overrides());
    let cfg = doc.resolve()?;
    Ok((doc, cfg))
}

fn output_path(dir: &Path, id: &str, format: SaveFormat) -> PathBuf {
    match format {
        SaveFormat::TensorFile => dir.join(format!("{id}.{TENSOR_EXTENSION}")),
        _ => dir.join(id),
    }
}

fn load(entry: &ClipEntry) -> Result<LoadedClip> {
    load_clip_native(&entry.source).with_context(|| format!("loading {}", entry.source.path.display()))
}

/// Amplitude Mix partners each clip with the next one in input order.
fn partner<T: Sample>(entries: &[ClipEntry], i: usize, cfg: &FreqAugConfig) -> Result<Option<VideoClip<T>>> {
    if !matches!(cfg.filter, FilterConfig::AmplitudeMix(_)) {
        return Ok(None);
    }
    let j = (i + 1) % entries.len();
    Ok(Some(load(&entries[j])?.into_precision()))
}

fn render_to(dir: &Path, clip_rendering: &analytics::SpectrumRendering) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (kt, img) in &clip_rendering.slices {
        save_gray(img, &dir.join(format!("kt_{kt:03}.png")))?;
    }
    save_gray(&clip_rendering.profile_plot, &dir.join("profile.png"))?;
    let rows: Vec<Vec<String>> = clip_rendering
        .temporal_profile
        .iter()
        .enumerate()
        .map(|(k, v)| vec![k.to_string(), v.to_string()])
        .collect();
    write_table(&dir.join("profile.tsv"), &["k_t", "mean_log_amplitude"], &rows)
}

fn outcome_detail<T>(o: &AugOutcome<T>) -> String {
    match (o.band, o.lambda) {
        (Some(b), _) => format!("band_start={} band_width={}", b.start, b.width),
        (_, Some(l)) => format!("lambda={l}"),
        _ => String::new(),
    }
}

pub fn cmd_filter(cmd: &FilterCmd) -> Result<RunSummary> {
    let (doc, cfg) = resolve_config(&cmd.filter)?;
    let cfg = cfg.with_p(1.0)?;
    let seed = match (doc.seed, cfg.filter.is_stochastic()) {
        (Some(s), _) => s,
        (None, false) => 0,
        (None, true) => bail!("this filter draws random numbers; pass --seed"),
    };
    let entries = prepare(&cmd.input)?;
    let out = &cmd.input.output;
    let mut job = JobRecord::new("filter", &cmd.input);
    job.format = Some(format_name(cmd.format));
    write_resolved(out, &ConfigDoc::from_config(&cfg), &job)?;

    let aug = FreqAug::new(cfg);
    fn one<T: Sample>(
        aug: &FreqAug,
        entries: &[ClipEntry],
        i: usize,
        clip: VideoClip<T>,
        seed: u64,
        cmd: &FilterCmd,
    ) -> Result<Vec<String>> {
        let e = &entries[i];
        let partner = partner::<T>(entries, i, aug.config())?;
        let o = aug.force(&clip, partner.as_ref(), &mut stream_for_clip(seed, &e.id))?;
        let format = SaveFormat::from(cmd.format);
        save_clip(&o.clip, &output_path(&cmd.input.output, &e.id, format), format)?;
        if cmd.render {
            let r = analytics::render_spectrum(&o.clip, None)?;
            render_to(&cmd.input.output.join("spectra").join(&e.id), &r)?;
        }
        Ok(vec![
            e.id.clone(),
            "ok".into(),
            o.clip.value_range().name().into(),
            outcome_detail(&o),
        ])
    }
    let results = run_clips(&entries, cmd.input.jobs(), cmd.input.keep_going, |i, e| {
        match load(e)? {
            LoadedClip::F32(c) => one(&aug, &entries, i, c, seed, cmd),
            LoadedClip::F64(c) => one(&aug, &entries, i, c, seed, cmd),
        }
    })?;

    let rows: Vec<Vec<String>> = entries
        .iter()
        .zip(&results)
        .map(|(e, r)| match r {
            Some(Ok(row)) => row.clone(),
            Some(Err(err)) => vec![e.id.clone(), "error".into(), String::new(), one_line(&format!("{err:#}"))],
            None => vec![e.id.clone(), "skipped".into(), String::new(), String::new()],
        })
        .collect();
    write_table(&out.join(FILTER_REPORT), &["clip_id", "status", "value_range", "detail"], &rows)?;
    let summary = summarize(&entries, &results, cmd.input.keep_going);
    summary.report("filtered", out);
    Ok(summary)
}

struct AugmentRun<'a> {
    aug: FreqAug,
    entries: &'a [ClipEntry],
    seed: u64,
    cmd: &'a AugmentCmd,
    views: ViewSelection,
    view_dirs: [PathBuf; 2],
}

impl AugmentRun<'_> {
    /// One manifest row for clip `i`.
    fn run<T: Sample>(&self, i: usize, clip: VideoClip<T>) -> Result<Vec<String>> {
        let e = &self.entries[i];
        let format = SaveFormat::from(self.cmd.format);
        let mut rng = stream_for_clip(self.seed, &e.id);
        if self.cmd.two_view {
            let o = self.aug.apply_two_view(&clip, &clip, self.views, &mut rng)?;
            save_clip(&o.view1.clip, &output_path(&self.view_dirs[0], &e.id, format), format)?;
            save_clip(&o.view2.clip, &output_path(&self.view_dirs[1], &e.id, format), format)?;
            Ok(vec![
                e.id.clone(),
                o.view1.applied.to_string(),
                fmt_opt(o.view1.draw),
                outcome_detail(&o.view1),
                o.view2.applied.to_string(),
                fmt_opt(o.view2.draw),
                outcome_detail(&o.view2),
                String::new(),
            ])
        } else {
            let partner = partner::<T>(self.entries, i, self.aug.config())?;
            let o = match &partner {
                Some(p) => self.aug.apply_with_partner(&clip, p, &mut rng)?,
                None => self.aug.apply(&clip, &mut rng)?,
            };
            save_clip(&o.clip, &output_path(&self.cmd.input.output, &e.id, format), format)?;
            Ok(vec![e.id.clone(), o.applied.to_string(), fmt_opt(o.draw), outcome_detail(&o), String::new()])
        }
    }
}

pub fn cmd_augment(cmd: &AugmentCmd) -> Result<RunSummary> {
    let (doc, cfg) = resolve_config(&cmd.filter)?;
    let Some(seed) = doc.seed else {
        bail!("augment draws random numbers; pass --seed");
    };
    if cmd.two_view && matches!(cfg.filter, FilterConfig::AmplitudeMix(_)) {
        bail!("amplitude_mix mixes a clip with its partner and has no two-view form");
    }
    let entries = prepare(&cmd.input)?;
    let out = &cmd.input.output;
    let views = match cmd.views {
        Views::Both => ViewSelection::Both,
        Views::View1 => ViewSelection::View1Only,
        Views::View2 => ViewSelection::View2Only,
    };
    let mut job = JobRecord::new("augment", &cmd.input);
    job.format = Some(format_name(cmd.format));
    job.two_view = Some(cmd.two_view);
    job.views = cmd.two_view.then_some(match cmd.views {
        Views::Both => "both",
        Views::View1 => "view1",
        Views::View2 => "view2",
    });
    write_resolved(out, &ConfigDoc::from_config(&cfg), &job)?;
    let view_dirs = [out.join("view1"), out.join("view2")];
    if cmd.two_view {
        for d in &view_dirs {
            fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
        }
    }

    let ctx = AugmentRun {
        aug: FreqAug::new(cfg),
        entries: &entries,
        seed,
        cmd,
        views,
        view_dirs,
    };
    let one = |i: usize, e: &ClipEntry| match load(e)? {
        LoadedClip::F32(c) => ctx.run(i, c),
        LoadedClip::F64(c) => ctx.run(i, c),
    };
    let results = run_clips(&entries, cmd.input.jobs(), cmd.input.keep_going, one)?;

    let header: &[&str] = if cmd.two_view {
        &[
            "clip_id",
            "view1_applied",
            "view1_draw",
            "view1_detail",
            "view2_applied",
            "view2_draw",
            "view2_detail",
            "error",
        ]
    } else {
        &["clip_id", "applied", "draw", "detail", "error"]
    };
    let rows: Vec<Vec<String>> = entries
        .iter()
        .zip(&results)
        .map(|(e, r)| match r {
            Some(Ok(row)) => row.clone(),
            other => {
                let mut row = vec![String::new(); header.len()];
                row[0] = e.id.clone();
                row[header.len() - 1] = match other {
                    Some(Err(err)) => one_line(&format!("{err:#}")),
                    _ => "skipped".into(),
                };
                row
            }
        })
        .collect();
    write_table(&out.join(MANIFEST), header, &rows)?;
    let summary = summarize(&entries, &results, cmd.input.keep_going);
    summary.report("augmented", out);
    Ok(summary)
}

struct ClipStats {
    frames: usize,
    sigma_t: Result<f64, String>,
    lfc: Result<f64, String>,
}

pub fn cmd_analyze(cmd: &AnalyzeCmd) -> Result<RunSummary> {
    if cmd.n_bins == 0 {
        bail!("--n-bins must be at least 1");
    }
    let entries = prepare(&cmd.input)?;
    let out = &cmd.input.output;
    let mut job = JobRecord::new("analyze", &cmd.input);
    job.n_bins = Some(cmd.n_bins);
    job.sigma_t_threshold = Some(cmd.sigma_t_threshold);
    job.hist_width = Some(cmd.hist_width);
    write_resolved(out, &ConfigDoc::default(), &job)?;

    fn stats<T: Sample>(clip: &VideoClip<T>) -> ClipStats {
        ClipStats {
            frames: clip.shape().frames,
            sigma_t: analytics::sigma_t(clip).map_err(|e| e.to_string()),
            lfc: analytics::lfc_ratio(clip, &LfcTarget::ZeroFrequency).map_err(|e| e.to_string()),
        }
    }
    // Statistic errors become error rows, so every clip is measured.
    let results = run_clips(&entries, cmd.input.jobs(), true, |_, e| {
        Ok(match load(e)? {
            LoadedClip::F32(c) => stats(&c),
            LoadedClip::F64(c) => stats(&c),
        })
    })?;

    let lfc_records: Vec<(String, f64)> = entries
        .iter()
        .zip(&results)
        .filter_map(|(e, r)| match r {
            Some(Ok(ClipStats { lfc: Ok(v), .. })) => Some((e.id.clone(), *v)),
            _ => None,
        })
        .collect();
    let binning = if lfc_records.is_empty() {
        None
    } else {
        Some(analytics::bin_dataset_by_lfc(&lfc_records, cmd.n_bins)?)
    };
    let membership = binning
        .as_ref()
        .map(|b| b.membership(entries.iter().map(|e| e.id.as_str())))
        .unwrap_or_else(|| vec![None; entries.len()]);

    let mut failures = Vec::new();
    let mut sigmas = Vec::new();
    let mut rows = Vec::new();
    for ((e, r), bin) in entries.iter().zip(&results).zip(&membership) {
        let mut row = vec![e.id.clone()];
        let mut errors = Vec::new();
        match r {
            Some(Ok(s)) => {
                row.push(s.frames.to_string());
                match &s.sigma_t {
                    Ok(v) => {
                        sigmas.push(*v);
                        row.push(v.to_string());
                    }
                    Err(m) => {
                        errors.push(m.clone());
                        row.push(String::new());
                    }
                }
                match &s.lfc {
                    Ok(v) => row.push(v.to_string()),
                    Err(m) => {
                        errors.push(m.clone());
                        row.push(String::new());
                    }
                }
                row.push(match &s.sigma_t {
                    Ok(v) if *v < cmd.sigma_t_threshold => "below".into(),
                    Ok(_) => "above".into(),
                    Err(_) => String::new(),
                });
            }
            Some(Err(err)) => {
                errors.push(format!("{err:#}"));
                row.extend([String::new(), String::new(), String::new(), String::new()]);
            }
            None => unreachable!("analysis never skips clips"),
        }
        row.push(fmt_opt(*bin));
        let error = one_line(&errors.join("; "));
        if !errors.is_empty() {
            failures.push((e.id.clone(), error.clone()));
        }
        row.push(error);
        rows.push(row);
    }
    write_table(
        &out.join(STATS_TABLE),
        &["clip_id", "frames", "sigma_t", "lfc_ratio", "sigma_t_group", "lfc_bin", "error"],
        &rows,
    )?;

    let hist = analytics::histogram(&sigmas, cmd.hist_width)?;
    let hist_rows: Vec<Vec<String>> = hist
        .counts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (lo, hi) = hist.bin_range(i);
            vec![lo.to_string(), hi.to_string(), c.to_string()]
        })
        .collect();
    write_table(&out.join(SIGMA_T_HISTOGRAM), &["bin_start", "bin_end", "count"], &hist_rows)?;

    let below = analytics::split_by_sigma_t(&sigmas, cmd.sigma_t_threshold);
    let n_below = below.iter().filter(|&&b| b).count();
    write_table(
        &out.join(SIGMA_T_SPLIT),
        &["group", "threshold", "count"],
        &[
            vec!["below".into(), cmd.sigma_t_threshold.to_string(), n_below.to_string()],
            vec!["above".into(), cmd.sigma_t_threshold.to_string(), (below.len() - n_below).to_string()],
        ],
    )?;

    let mut bin_rows = Vec::new();
    if let Some(b) = &binning {
        for (i, ids) in b.bins.iter().enumerate() {
            bin_rows.push(vec![
                i.to_string(),
                ids.len().to_string(),
                b.bin_edges[i].to_string(),
                b.bin_edges[i + 1].to_string(),
            ]);
        }
    }
    write_table(&out.join(LFC_BINS), &["bin", "count", "edge_low", "edge_high"], &bin_rows)?;

    let summary = RunSummary {
        processed: entries.len() - failures.len(),
        failures,
        skipped: 0,
        keep_going: cmd.input.keep_going,
    };
    summary.report("analyzed", out);
    Ok(summary)
}

pub fn cmd_render_spectrum(cmd: &RenderCmd) -> Result<RunSummary> {
    let entries = prepare(&cmd.input)?;
    let out = &cmd.input.output;
    write_resolved(out, &ConfigDoc::default(), &JobRecord::new("render-spectrum", &cmd.input))?;
    let slices = cmd.slices.as_deref();
    let results = run_clips(&entries, cmd.input.jobs(), cmd.input.keep_going, |_, e| {
        let r = match load(e)? {
            LoadedClip::F32(c) => analytics::render_spectrum(&c, slices)?,
            LoadedClip::F64(c) => analytics::render_spectrum(&c, slices)?,
        };
        render_to(&out.join(&e.id), &r)
    })?;
    let summary = summarize(&entries, &results, cmd.input.keep_going);
    summary.report("rendered", out);
    Ok(summary)
}
