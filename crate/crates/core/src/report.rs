//! Static HTML gallery of ranked results.
//!
//! Each query gets a section with its own skeleton panel followed by one
//! panel per hit. When the manifest names an image file that can be read,
//! the image is embedded as a data URI under the skeleton; otherwise the
//! panel shows the skeleton alone and says why. Output depends only on the
//! inputs, so regenerating a report gives identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use base64::Engine as _;

use crate::ingest::{parse_keypoints_file, read_manifest, write_atomic, IngestError, Manifest};
use crate::pose::Pose;
use crate::results::{Hit, QueryResult, ResultsFile};
use crate::skeleton::CanonicalSkeleton;

const PANEL_WIDTH: u32 = 260;
const PALETTE: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#17becf"];
const INACTIVE: &str = "#9a9a9a";

/// An image embedded in a panel.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedImage {
    pub data_uri: String,
    pub width: u32,
    pub height: u32,
}

/// What a panel knows about one image.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PanelSource {
    pub poses: Vec<Pose>,
    pub image: Option<EmbeddedImage>,
    /// Shown under the panel when the image or keypoints are missing.
    pub note: Option<String>,
}

/// Loads poses and images for every database image the results mention.
pub fn collect_sources(results: &ResultsFile, manifest: &Manifest) -> BTreeMap<String, PanelSource> {
    let mut out = BTreeMap::new();
    for hit in results.queries.iter().flat_map(|q| &q.hits) {
        if out.contains_key(&hit.image_id) {
            continue;
        }
        let source = match manifest.entry(&hit.image_id) {
            None => PanelSource { note: Some("not in manifest".into()), ..Default::default() },
            Some(entry) => {
                let (poses, kp_note) = match parse_keypoints_file(manifest.resolve(&entry.keypoints_path)) {
                    Ok(p) => (p, None),
                    Err(e) => (Vec::new(), Some(format!("keypoints unavailable: {e}"))),
                };
                let (image, img_note) = match &entry.image_path {
                    None => (None, Some("no image in manifest; skeleton only".to_string())),
                    Some(p) => match embed_image(&manifest.resolve(p)) {
                        Ok(img) => (Some(img), None),
                        Err(reason) => (None, Some(format!("image {p} unavailable ({reason}); skeleton only"))),
                    },
                };
                let note = match (kp_note, img_note) {
                    (Some(a), Some(b)) => Some(format!("{a}; {b}")),
                    (a, b) => a.or(b),
                };
                PanelSource { poses, image, note }
            }
        };
        out.insert(hit.image_id.clone(), source);
    }
    out
}

fn embed_image(path: &Path) -> Result<EmbeddedImage, String> {
    let bytes = std::fs::read(path).map_err(|e| e.to_string())?;
    let size = imagesize::blob_size(&bytes).map_err(|e| e.to_string())?;
    let mime = match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("gif") => "image/gif",
        Some("webp") => "image/webp",
        Some("bmp") => "image/bmp",
        _ => "application/octet-stream",
    };
    Ok(EmbeddedImage {
        data_uri: format!("data:{mime};base64,{}", base64::engine::general_purpose::STANDARD.encode(&bytes)),
        width: size.width as u32,
        height: size.height as u32,
    })
}

/// Renders the whole gallery as one standalone HTML document.
pub fn render_html(
    results: &ResultsFile,
    sources: &BTreeMap<String, PanelSource>,
    skeleton: &CanonicalSkeleton,
) -> String {
    let mut h = String::new();
    h.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    h.push_str("<title>poselink results</title>\n<style>\n");
    h.push_str(STYLE);
    h.push_str("</style>\n</head>\n<body>\n<h1>poselink results</h1>\n");
    let _ = writeln!(
        h,
        "<p class=\"meta\">metric dist_{} &middot; {} &middot; {} queries</p>",
        results.metric,
        if results.verified { "verified" } else { "match only" },
        results.queries.len()
    );
    h.push_str("<nav><ol>\n");
    for (i, q) in results.queries.iter().enumerate() {
        let _ = writeln!(h, "<li><a href=\"#q{i}\">{}</a> ({} hits)</li>", esc(&q.query_id), q.hits.len());
    }
    h.push_str("</ol></nav>\n");
    for (i, q) in results.queries.iter().enumerate() {
        render_query(&mut h, i, q, sources, skeleton);
    }
    h.push_str("</body>\n</html>\n");
    h
}

fn render_query(
    h: &mut String,
    i: usize,
    q: &QueryResult,
    sources: &BTreeMap<String, PanelSource>,
    skel: &CanonicalSkeleton,
) {
    let _ = writeln!(h, "<section class=\"query\" id=\"q{i}\">");
    let _ = writeln!(h, "<h2>{}</h2>", esc(&q.query_id));
    let _ = writeln!(h, "<p class=\"meta\">{}</p>", esc(&q.source));
    h.push_str("<div class=\"row\">\n");
    let query_active: Vec<usize> = q.poses.iter().map(|p| p.pose_id).collect();
    let query_panel = PanelSource { poses: q.poses.clone(), image: None, note: None };
    panel(h, "query", &query_panel, &query_active, skel, &[]);
    for hit in &q.hits {
        let src = sources.get(&hit.image_id).cloned().unwrap_or_default();
        let active: Vec<usize> = match &hit.verification {
            Some(v) => v.validated_pairs.iter().map(|p| p.db_pose_id).collect(),
            None => src.poses.iter().map(|p| p.pose_id).collect(),
        };
        panel(h, &format!("#{} {}", hit.rank, hit.image_id), &src, &active, skel, &hit_lines(hit));
    }
    h.push_str("</div>\n</section>\n");
}

fn hit_lines(hit: &Hit) -> Vec<String> {
    let mut lines = vec![if hit.distance.is_finite() {
        format!("distance {:.4}", hit.distance)
    } else {
        "distance inf".to_string()
    }];
    if let Some(v) = &hit.verification {
        let t = &v.transform;
        lines.push(format!("score {} ({} pose pairs)", v.score, v.validated_pairs.len()));
        lines.push(format!(
            "s={:.3} t=({:.1}, {:.1}){}",
            t.scale,
            t.translation.0,
            t.translation.1,
            if t.flipped { " flipped" } else { "" }
        ));
    }
    lines
}

fn panel(h: &mut String, title: &str, src: &PanelSource, active: &[usize], skel: &CanonicalSkeleton, lines: &[String]) {
    h.push_str("<figure class=\"panel\">\n");
    h.push_str(&svg(src, active, skel));
    let _ = writeln!(h, "<figcaption><b>{}</b>", esc(title));
    for l in lines {
        let _ = write!(h, "<br>{}", esc(l));
    }
    if let Some(note) = &src.note {
        let _ = write!(h, "<br><span class=\"note\">{}</span>", esc(note));
    }
    h.push_str("</figcaption>\n</figure>\n");
}

fn svg(src: &PanelSource, active: &[usize], skel: &CanonicalSkeleton) -> String {
    let (x0, y0, w, hgt) = match &src.image {
        Some(img) => (0.0, 0.0, img.width as f64, img.height as f64),
        None => bounds(&src.poses),
    };
    let height = (PANEL_WIDTH as f64 * hgt / w).round().max(1.0) as u32;
    let r = 0.006 * (w * w + hgt * hgt).sqrt();
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{PANEL_WIDTH}\" height=\"{height}\" viewBox=\"{x0:.1} {y0:.1} {w:.1} {hgt:.1}\">"
    );
    match &src.image {
        Some(img) => {
            let _ = writeln!(s, "<image href=\"{}\" x=\"0\" y=\"0\" width=\"{}\" height=\"{}\"/>", img.data_uri, img.width, img.height);
        }
        None => {
            let _ = writeln!(s, "<rect x=\"{x0:.1}\" y=\"{y0:.1}\" width=\"{w:.1}\" height=\"{hgt:.1}\" fill=\"#fafafa\"/>");
        }
    }
    for pose in &src.poses {
        let color = if active.contains(&pose.pose_id) { PALETTE[pose.pose_id % PALETTE.len()] } else { INACTIVE };
        let _ = writeln!(s, "<g stroke=\"{color}\" fill=\"{color}\">");
        for bone in skel.bones() {
            if pose.is_detected(bone.a, 0.0) && pose.is_detected(bone.b, 0.0) {
                let (a, b) = (pose.point(bone.a), pose.point(bone.b));
                let _ = writeln!(
                    s,
                    "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke-width=\"2\" vector-effect=\"non-scaling-stroke\"/>",
                    a.0, a.1, b.0, b.1
                );
            }
        }
        for i in 0..pose.keypoints.len() {
            if pose.is_detected(i, 0.0) {
                let (x, y) = pose.point(i);
                let _ = writeln!(s, "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"{r:.1}\"/>");
            }
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}

/// Padded bounding box of all detected keypoints as `(x, y, w, h)`.
fn bounds(poses: &[Pose]) -> (f64, f64, f64, f64) {
    let pts: Vec<(f64, f64)> = poses
        .iter()
        .flat_map(|p| (0..p.keypoints.len()).filter(|&i| p.is_detected(i, 0.0)).map(|i| p.point(i)))
        .collect();
    if pts.is_empty() {
        return (0.0, 0.0, 100.0, 100.0);
    }
    let (mut lx, mut ly, mut hx, mut hy) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (x, y) in pts {
        lx = lx.min(x);
        ly = ly.min(y);
        hx = hx.max(x);
        hy = hy.max(y);
    }
    let pad = 0.1 * (hx - lx).max(hy - ly).max(10.0);
    (lx - pad, ly - pad, hx - lx + 2.0 * pad, hy - ly + 2.0 * pad)
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

const STYLE: &str = "body{font-family:sans-serif;margin:1.5em;color:#222}
.meta{color:#666;font-size:.9em}
.row{display:flex;flex-wrap:wrap;gap:12px}
.panel{margin:0;border:1px solid #ddd;padding:6px;background:#fff}
.panel svg{display:block}
figcaption{font-size:.8em;max-width:260px;overflow-wrap:anywhere}
.note{color:#a33}
section.query{border-top:2px solid #ccc;margin-top:1.5em}
";

/// Writes `index.html` and a copy of the results JSON into `out_dir`.
pub fn write_report(
    results_path: impl AsRef<Path>,
    manifest_path: impl AsRef<Path>,
    out_dir: impl AsRef<Path>,
    skeleton: &CanonicalSkeleton,
) -> Result<PathBuf, IngestError> {
    let results = ResultsFile::read(&results_path)?;
    let manifest = read_manifest(manifest_path)?;
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir)
        .map_err(|source| IngestError::Io { path: out_dir.display().to_string(), source })?;
    let sources = collect_sources(&results, &manifest);
    let html = render_html(&results, &sources, skeleton);
    let page = out_dir.join("index.html");
    write_atomic(&page, html.as_bytes())?;
    write_atomic(&out_dir.join("results.json"), results.to_json().as_bytes())?;
    Ok(page)
}
