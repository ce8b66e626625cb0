//! End-to-end analysis and its renderings: JSON / text reports, CSV / SVG
//! projections of one vertex triple.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use log::{info, warn};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::{parse_embeddings, EmbeddingSpace, Format};
use crate::error::{Error, Result};
use crate::extract::{
    describe_with, filter_false_vertices, find_candidates, glue_candidates, AxisEnd, CosineIndex,
    ExtractionParams, Vertex,
};
use crate::geometry::{TriangleProjection, TripleStats};
use crate::pca::fit_pca;

pub const DEFAULT_MAX_WORDS: usize = 50_000;
pub const DEFAULT_DESCRIBE_K: usize = 5;
pub const DEFAULT_TRIPLE_SAMPLES: usize = 100;

/// RNG stream used for triple sampling; vertex filter streams are the
/// vertex ranks, which stay far below this.
const TRIPLE_STREAM: u64 = 1 << 48;

/// Rounds to six significant digits, the precision of every float in a
/// report.
pub fn sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

#[derive(Clone, Debug)]
pub struct AnalysisConfig {
    pub input: PathBuf,
    pub format: Option<Format>,
    pub max_words: usize,
    pub normalize: bool,
    pub params: ExtractionParams,
    pub describe_k: usize,
    pub triple_samples: usize,
}

impl AnalysisConfig {
    pub fn new(input: impl Into<PathBuf>) -> Self {
        AnalysisConfig {
            input: input.into(),
            format: None,
            max_words: DEFAULT_MAX_WORDS,
            normalize: false,
            params: ExtractionParams::default(),
            describe_k: DEFAULT_DESCRIBE_K,
            triple_samples: DEFAULT_TRIPLE_SAMPLES,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        ToolInfo {
            name: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputInfo {
    pub path: String,
    pub words: usize,
    pub dim: usize,
    pub normalized: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub num_axes: usize,
    pub k: usize,
    pub glue_threshold: f64,
    pub trials: usize,
    pub tau: f64,
    pub seed: u64,
    pub max_words: usize,
    pub describe_k: usize,
    pub triple_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberEntry {
    pub token: String,
    pub axis: usize,
    pub end: AxisEnd,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub token: String,
    pub similarity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexEntry {
    pub token: String,
    pub index: usize,
    pub members: Vec<MemberEntry>,
    pub description: Vec<Neighbor>,
    /// Absent when the filter could not run.
    pub outside_fraction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleEntry {
    pub tokens: [String; 3],
    pub inside_triangle_fraction: f64,
    pub outside_incircle_fraction: f64,
    pub inradius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub mean_inside_triangle_fraction: Option<f64>,
    pub mean_outside_incircle_fraction: Option<f64>,
    pub sample_size: usize,
}

impl Aggregates {
    /// Means of the (already rounded) per-triple values, rounded again.
    pub fn from_sample(sample: &[TripleEntry]) -> Self {
        if sample.is_empty() {
            return Aggregates {
                mean_inside_triangle_fraction: None,
                mean_outside_incircle_fraction: None,
                sample_size: 0,
            };
        }
        let n = sample.len() as f64;
        let inside = sample.iter().map(|t| t.inside_triangle_fraction).sum::<f64>() / n;
        let outside = sample.iter().map(|t| t.outside_incircle_fraction).sum::<f64>() / n;
        Aggregates {
            mean_inside_triangle_fraction: Some(sig6(inside)),
            mean_outside_incircle_fraction: Some(sig6(outside)),
            sample_size: sample.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub tool: ToolInfo,
    pub input: InputInfo,
    pub params: ReportParams,
    pub warning: bool,
    pub warnings: Vec<String>,
    pub candidates: usize,
    pub glued_vertices: usize,
    pub vertices: Vec<VertexEntry>,
    pub rejected: Vec<VertexEntry>,
    pub triple_sample: Vec<TripleEntry>,
    pub aggregates: Aggregates,
}

impl AnalysisReport {
    pub fn survivor_tokens(&self) -> Vec<&str> {
        self.vertices.iter().map(|v| v.token.as_str()).collect()
    }
}

/// Reads the configured input and runs the full pipeline on it.
pub fn run_analysis(config: &AnalysisConfig) -> Result<AnalysisReport> {
    let file = File::open(&config.input).map_err(|e| Error::open(&config.input, e))?;
    let mut space = parse_embeddings(BufReader::new(file), config.format, config.max_words)?;
    if config.normalize {
        space = space.normalized();
    }
    info!(
        "loaded {} words of dimension {} from {}",
        space.len(),
        space.dim(),
        config.input.display()
    );
    analyze_space(&space, &config.input.display().to_string(), config)
}

/// The pipeline on an in-memory space. `config.input`, `format`,
/// `max_words` and `normalize` are only recorded, not applied.
pub fn analyze_space(
    space: &EmbeddingSpace,
    input_label: &str,
    config: &AnalysisConfig,
) -> Result<AnalysisReport> {
    let params = &config.params;
    params.validate()?;
    if config.describe_k == 0 {
        return Err(Error::invalid("description size must be at least 1"));
    }
    if params.k > space.len() {
        return Err(Error::invalid(format!(
            "neighbor list size {} exceeds the vocabulary ({} words)",
            params.k,
            space.len()
        )));
    }
    let mut warnings = Vec::new();

    let num_axes = params.num_axes.min(space.dim());
    if num_axes < params.num_axes {
        warnings.push(format!(
            "requested {} axes but the space has {} dimensions",
            params.num_axes,
            space.dim()
        ));
    }
    let pca = fit_pca(space, num_axes)?;
    let candidates = find_candidates(space, &pca, num_axes)?;
    let glued = glue_candidates(space, &candidates, params)?;
    let glued_count = glued.len();
    let outcome = filter_false_vertices(space, glued, params)?;
    if outcome.untested {
        warnings.push(format!(
            "only {glued_count} vertices after gluing; false-vertex filter skipped"
        ));
    }
    info!(
        "{} candidates, {} vertices after gluing, {} survivors",
        candidates.len(),
        glued_count,
        outcome.survivors.len()
    );

    let index = CosineIndex::new(space);
    let vertex_entry = |v: &Vertex| -> Result<VertexEntry> {
        Ok(VertexEntry {
            token: space.word(v.representative).to_owned(),
            index: v.representative,
            members: v
                .members
                .iter()
                .map(|m| MemberEntry {
                    token: space.word(m.word_index).to_owned(),
                    axis: m.axis_index,
                    end: m.end,
                    score: sig6(m.score),
                })
                .collect(),
            description: describe_with(&index, v, config.describe_k)?
                .into_iter()
                .map(|(token, s)| Neighbor {
                    token,
                    similarity: sig6(s),
                })
                .collect(),
            outside_fraction: if v.outside_fraction.is_nan() {
                None
            } else {
                Some(sig6(v.outside_fraction))
            },
        })
    };
    let vertices = outcome
        .survivors
        .iter()
        .map(vertex_entry)
        .collect::<Result<Vec<_>>>()?;
    let rejected = outcome
        .rejected
        .iter()
        .map(vertex_entry)
        .collect::<Result<Vec<_>>>()?;

    let reps: Vec<usize> = outcome.survivors.iter().map(|v| v.representative).collect();
    let triple_sample = if reps.len() < 3 {
        warnings.push(format!(
            "{} surviving vertices; no triangle statistics",
            reps.len()
        ));
        Vec::new()
    } else {
        sample_triple_stats(space, &reps, config.triple_samples, params.seed)?
    };
    let aggregates = Aggregates::from_sample(&triple_sample);
    for w in &warnings {
        warn!("{w}");
    }

    Ok(AnalysisReport {
        tool: ToolInfo::default(),
        input: InputInfo {
            path: input_label.to_owned(),
            words: space.len(),
            dim: space.dim(),
            normalized: config.normalize,
        },
        params: ReportParams {
            num_axes,
            k: params.k,
            glue_threshold: params.glue_threshold,
            trials: params.trials,
            tau: params.tau,
            seed: params.seed,
            max_words: config.max_words,
            describe_k: config.describe_k,
            triple_samples: config.triple_samples,
        },
        warning: !warnings.is_empty(),
        warnings,
        candidates: candidates.len(),
        glued_vertices: glued_count,
        vertices,
        rejected,
        triple_sample,
        aggregates,
    })
}

/// Vertex triples (as positions in `vertices`) to summarize. When the number
/// of distinct triples is at most `samples`, all of them in lexicographic
/// order; otherwise `samples` distinct seeded random triples.
pub fn choose_triples(count: usize, samples: usize, seed: u64) -> Vec<[usize; 3]> {
    if count < 3 || samples == 0 {
        return Vec::new();
    }
    let total = count * (count - 1) * (count - 2) / 6;
    if total <= samples {
        let mut all = Vec::with_capacity(total);
        for a in 0..count {
            for b in (a + 1)..count {
                for c in (b + 1)..count {
                    all.push([a, b, c]);
                }
            }
        }
        return all;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(TRIPLE_STREAM);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(samples);
    while out.len() < samples {
        let a = rng.random_range(0..count);
        let b = rng.random_range(0..count);
        let c = rng.random_range(0..count);
        if a == b || b == c || a == c {
            continue;
        }
        let mut key = [a, b, c];
        key.sort_unstable();
        if seen.insert(key) {
            out.push([a, b, c]);
        }
    }
    out
}

/// Triangle statistics for a seeded sample of triples of the given words.
/// Degenerate triples are skipped with a warning.
pub fn sample_triple_stats(
    space: &EmbeddingSpace,
    words: &[usize],
    samples: usize,
    seed: u64,
) -> Result<Vec<TripleEntry>> {
    let mut out = Vec::new();
    for [a, b, c] in choose_triples(words.len(), samples, seed) {
        let triple = [words[a], words[b], words[c]];
        match TriangleProjection::new(space, triple) {
            Ok(p) => out.push(triple_entry(space, triple, &p.stats())),
            Err(Error::DegenerateTriangle(msg)) => {
                warn!("skipping degenerate triple: {msg}");
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

fn triple_entry(space: &EmbeddingSpace, triple: [usize; 3], st: &TripleStats) -> TripleEntry {
    TripleEntry {
        tokens: triple.map(|i| space.word(i).to_owned()),
        inside_triangle_fraction: sig6(st.inside_triangle_fraction),
        outside_incircle_fraction: sig6(st.outside_incircle_fraction),
        inradius: sig6(st.inradius),
    }
}

/// Output of the `stats` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub tool: ToolInfo,
    pub input: InputInfo,
    pub vertices: Vec<String>,
    pub seed: u64,
    pub triple_sample: Vec<TripleEntry>,
    pub aggregates: Aggregates,
}

pub fn triple_stats_report(
    space: &EmbeddingSpace,
    input: InputInfo,
    vertex_tokens: &[String],
    samples: usize,
    seed: u64,
) -> Result<StatsReport> {
    let words = resolve_tokens(space, vertex_tokens)?;
    if words.len() < 3 {
        return Err(Error::invalid("at least three vertex tokens are required"));
    }
    let triple_sample = sample_triple_stats(space, &words, samples, seed)?;
    Ok(StatsReport {
        tool: ToolInfo::default(),
        input,
        vertices: vertex_tokens.to_vec(),
        seed,
        aggregates: Aggregates::from_sample(&triple_sample),
        triple_sample,
    })
}

pub fn resolve_tokens(space: &EmbeddingSpace, tokens: &[String]) -> Result<Vec<usize>> {
    let mut seen = BTreeSet::new();
    tokens
        .iter()
        .map(|t| {
            let i = space
                .lookup(t)
                .ok_or_else(|| Error::invalid(format!("token `{t}` is not in the vocabulary")))?;
            if !seen.insert(i) {
                return Err(Error::invalid(format!("token `{t}` listed twice")));
            }
            Ok(i)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

pub fn emit_report(report: &AnalysisReport, format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Json => to_json(report),
        ReportFormat::Text => Ok(render_text(report).into_bytes()),
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_owned(), |v| format!("{v:.4}"))
}

fn render_text(r: &AnalysisReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {}", r.tool.name, r.tool.version);
    let _ = writeln!(
        s,
        "input: {} ({} words, {} dims{})",
        r.input.path,
        r.input.words,
        r.input.dim,
        if r.input.normalized { ", normalized" } else { "" }
    );
    let p = &r.params;
    let _ = writeln!(
        s,
        "params: axes={} k={} glue={} trials={} tau={} seed={}",
        p.num_axes, p.k, p.glue_threshold, p.trials, p.tau, p.seed
    );
    let _ = writeln!(
        s,
        "candidates: {}  glued: {}  survivors: {}  rejected: {}",
        r.candidates,
        r.glued_vertices,
        r.vertices.len(),
        r.rejected.len()
    );
    for w in &r.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "{:>4}  {:<20} {:>8}  description", "#", "vertex", "outside");
    for (i, v) in r.vertices.iter().enumerate() {
        let desc: Vec<String> = v
            .description
            .iter()
            .map(|n| format!("{} ({:.3})", n.token, n.similarity))
            .collect();
        let _ = writeln!(
            s,
            "{:>4}  {:<20} {:>8}  {}",
            i + 1,
            v.token,
            fmt_opt(v.outside_fraction),
            desc.join(", ")
        );
    }
    if !r.rejected.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(s, "rejected:");
        for v in &r.rejected {
            let _ = writeln!(s, "      {:<20} {:>8}", v.token, fmt_opt(v.outside_fraction));
        }
    }
    let _ = writeln!(s);
    let a = &r.aggregates;
    let _ = writeln!(
        s,
        "triples sampled: {}  mean inside triangle: {}  mean outside incircle: {}",
        a.sample_size,
        fmt_opt(a.mean_inside_triangle_fraction),
        fmt_opt(a.mean_outside_incircle_fraction)
    );
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectionFormat {
    Csv,
    Svg,
}

fn csv_field(token: &str) -> String {
    if token.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", token.replace('"', "\"\""))
    } else {
        token.to_owned()
    }
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Renders the cloud projected onto the plane of a vertex triple.
pub fn emit_projection(
    space: &EmbeddingSpace,
    triple: [usize; 3],
    format: ProjectionFormat,
) -> Result<Vec<u8>> {
    let proj = TriangleProjection::new(space, triple)?;
    Ok(match format {
        ProjectionFormat::Csv => projection_csv(space, &proj).into_bytes(),
        ProjectionFormat::Svg => projection_svg(space, triple, &proj).into_bytes(),
    })
}

fn projection_csv(space: &EmbeddingSpace, proj: &TriangleProjection) -> String {
    let (center, radius) = proj.triangle.incircle();
    let mut s = String::from("token,x,y,inside_triangle,inside_incircle\n");
    for (j, p) in proj.coords.iter().enumerate() {
        let in_circle = (p[0] - center[0]).hypot(p[1] - center[1]) <= radius;
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            csv_field(space.word(j)),
            p[0],
            p[1],
            proj.inside_triangle(j),
            in_circle
        );
    }
    s
}

fn projection_svg(space: &EmbeddingSpace, triple: [usize; 3], proj: &TriangleProjection) -> String {
    const SIZE: f64 = 800.0;
    const MARGIN: f64 = 40.0;
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in &proj.coords {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let span = (x1 - x0).max(y1 - y0).max(f64::MIN_POSITIVE);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    // SVG y grows downward.
    let map = |p: [f64; 2]| -> (f64, f64) {
        (
            MARGIN + (p[0] - x0) * scale,
            SIZE - MARGIN - (p[1] - y0) * scale,
        )
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">"
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(s, "<g fill=\"#4a6fa5\" fill-opacity=\"0.35\">");
    for p in &proj.coords {
        let (x, y) = map(*p);
        let _ = writeln!(s, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"1.2\"/>");
    }
    let _ = writeln!(s, "</g>");

    let corners = proj.triangle.corners.map(map);
    let _ = writeln!(
        s,
        "<polygon points=\"{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\"/>",
        corners[0].0, corners[0].1, corners[1].0, corners[1].1, corners[2].0, corners[2].1
    );
    let (center, radius) = proj.triangle.incircle();
    let (cx, cy) = map(center);
    let _ = writeln!(
        s,
        "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{:.2}\" fill=\"none\" stroke=\"#27ae60\" stroke-width=\"1.5\"/>",
        radius * scale
    );
    for (i, &w) in triple.iter().enumerate() {
        let (x, y) = corners[i];
        let _ = writeln!(
            s,
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"4\" fill=\"#c0392b\"/><text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"14\">{}</text>",
            x + 6.0,
            y - 6.0,
            xml_escape(space.word(w))
        );
    }
    let _ = writeln!(s, "</svg>");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.123456789), 0.123457);
        assert_eq!(sig6(123456789.0), 123457000.0);
        assert_eq!(sig6(1.0), 1.0);
        assert_eq!(sig6(0.0), 0.0);
        assert_eq!(sig6(-2.5e-7), -2.5e-7);
    }

    #[test]
    fn small_vertex_sets_enumerate_every_triple() {
        let t = choose_triples(5, 100, 0);
        assert_eq!(t.len(), 10);
        assert_eq!(t[0], [0, 1, 2]);
        assert!(choose_triples(2, 100, 0).is_empty());
    }

    #[test]
    fn large_vertex_sets_sample_distinct_triples() {
        let t = choose_triples(12, 100, 3);
        assert_eq!(t.len(), 100);
        let keys: BTreeSet<[usize; 3]> = t
            .iter()
            .map(|k| {
                let mut k = *k;
                k.sort_unstable();
                k
            })
            .collect();
        assert_eq!(keys.len(), 100);
        assert_eq!(t, choose_triples(12, 100, 3));
        assert_ne!(t, choose_triples(12, 100, 4));
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field(","), "\",\"");
        assert_eq!(csv_field("a\"b"), "\"a\"\"b\"");
    }

    #[test]
    fn xml_escaping() {
        assert_eq!(xml_escape("<br/>&"), "&lt;br/&gt;&amp;");
    }

    #[test]
    fn aggregates_of_empty_sample() {
        let a = Aggregates::from_sample(&[]);
        assert_eq!(a.sample_size, 0);
        assert!(a.mean_inside_triangle_fraction.is_none());
    }
}
