//! Deterministic CSV, SVG and manifest emission.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

/// Collects produced files and the terminal status for the run manifest.
pub struct RunRecorder {
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub status: RunStatus,
    /// Time steps taken, for the evolution commands.
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    Blowup,
    AccuracyError,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::Blowup => "blowup",
            RunStatus::AccuracyError => "accuracy-error",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunStatus::Ok => 0,
            RunStatus::Blowup => 4,
            RunStatus::AccuracyError => 3,
        }
    }
}

impl RunRecorder {
    pub fn new(dir: &str) -> std::io::Result<RunRecorder> {
        fs::create_dir_all(dir)?;
        Ok(RunRecorder {
            dir: PathBuf::from(dir),
            files: Vec::new(),
            status: RunStatus::Ok,
            steps: None,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Write a CSV with the given header and rows of preformatted fields.
    pub fn write_csv(
        &mut self,
        name: &str,
        header: &str,
        rows: impl Iterator<Item = String>,
    ) -> std::io::Result<()> {
        let path = self.path(name);
        let mut f = fs::File::create(&path)?;
        writeln!(f, "{header}")?;
        for row in rows {
            writeln!(f, "{row}")?;
        }
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, body: &str) -> std::io::Result<()> {
        fs::write(self.path(name), body)?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Simple polyline plot of (x, y) series; exempt from byte determinism.
    pub fn write_svg(&mut self, name: &str, title: &str, xs: &[f64], ys: &[f64]) -> std::io::Result<()> {
        let (w, h, m) = (800.0, 400.0, 50.0);
        let (x0, x1) = bounds(xs);
        let (y0, y1) = bounds(ys);
        let sx = |x: f64| m + (x - x0) / (x1 - x0).max(1e-300) * (w - 2.0 * m);
        let sy = |y: f64| h - m - (y - y0) / (y1 - y0).max(1e-300) * (h - 2.0 * m);
        let mut pts = String::new();
        for (x, y) in xs.iter().zip(ys) {
            pts.push_str(&format!("{:.2},{:.2} ", sx(*x), sy(*y)));
        }
        let body = format!(
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">
<rect width="{w}" height="{h}" fill="white"/>
<text x="{tm}" y="20" font-family="monospace" font-size="14">{title}</text>
<text x="{m}" y="{hb}" font-family="monospace" font-size="10">{x0:.4e}</text>
<text x="{wr}" y="{hb}" font-family="monospace" font-size="10" text-anchor="end">{x1:.4e}</text>
<text x="5" y="{hm}" font-family="monospace" font-size="10">{y1:.4e}</text>
<text x="5" y="{hb2}" font-family="monospace" font-size="10">{y0:.4e}</text>
<polyline fill="none" stroke="black" stroke-width="1" points="{pts}"/>
<rect x="{m}" y="{m}" width="{iw}" height="{ih}" fill="none" stroke="gray" stroke-width="0.5"/>
</svg>
"#,
            tm = m,
            hb = h - 20.0,
            wr = w - m,
            hm = m + 10.0,
            hb2 = h - m,
            iw = w - 2.0 * m,
            ih = h - 2.0 * m,
        );
        fs::write(self.path(name), body)?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Write `manifest.json` listing every produced file plus this manifest
    /// itself, echoing the config and recording timing and status.
    pub fn write_manifest(
        &mut self,
        config_echo: &str,
        wall_time_s: f64,
        threads: Option<usize>,
    ) -> std::io::Result<()> {
        let config: serde_json::Value =
            serde_json::from_str(config_echo).unwrap_or(serde_json::Value::Null);
        let mut files = self.files.clone();
        files.push("manifest.json".to_string());
        let manifest = serde_json::json!({
            "artifact_version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "wall_time_s": wall_time_s,
            "steps": self.steps,
            "outputs": files,
            "status": self.status.as_str(),
            "threads": threads,
        });
        fs::write(
            self.path("manifest.json"),
            serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
        )
    }
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Deterministic scientific formatting used by every CSV cell.
pub fn num(v: f64) -> String {
    format!("{v:.12e}")
}

