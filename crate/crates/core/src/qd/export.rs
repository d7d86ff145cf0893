use super::archive::Archive;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

/// Objective grid, one row per component bin, blank for empty cells.
pub fn heatmap_csv(archive: &Archive) -> String {
    let [d0, d1] = archive.config.dims;
    let mut out = String::new();
    for i in 0..d0 {
        let row: Vec<String> = (0..d1)
            .map(|j| {
                archive
                    .get([i, j])
                    .map(|e| e.objective.to_string())
                    .unwrap_or_default()
            })
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn color(t: f64) -> String {
    // Dark blue to yellow.
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp(40.0, 250.0),
        lerp(20.0, 230.0),
        lerp(110.0, 30.0)
    )
}

/// Renders a row-major grid of optional values as an SVG heatmap.
pub fn grid_svg(values: &[Option<f64>], width: usize, cell_px: usize) -> String {
    let height = values.len().checked_div(width).unwrap_or(0);
    let (lo, hi) = values
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}">"#,
        width * cell_px,
        height * cell_px
    )
    .unwrap();
    for (k, v) in values.iter().enumerate() {
        let fill = match v {
            Some(v) => color((v - lo) / span),
            None => "#eeeeee".into(),
        };
        writeln!(
            s,
            r#"<rect x="{}" y="{}" width="{cell_px}" height="{cell_px}" fill="{fill}"/>"#,
            (k % width) * cell_px,
            (k / width) * cell_px
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

pub fn heatmap_svg(archive: &Archive) -> String {
    let [d0, d1] = archive.config.dims;
    let values: Vec<Option<f64>> = (0..d0 * d1)
        .map(|k| archive.get(archive.config.unflat(k)).map(|e| e.objective))
        .collect();
    grid_svg(&values, d1, 8)
}

/// Elite table: one row per occupied cell, genome files named by cell.
pub fn archive_csv(archive: &Archive) -> String {
    let mut out = String::from("cell,comp_bin,task_bin,n_shelf_components,mean_task_length,objective,genome_file,repaired_file\n");
    for ([i, j], e) in archive.iter() {
        let idx = archive.config.flat([i, j]);
        writeln!(
            out,
            "{idx},{i},{j},{},{},{},elites/{idx}_genome.txt,elites/{idx}_repaired.txt",
            e.measures.n_shelf_components, e.measures.mean_task_length, e.objective
        )
        .unwrap();
    }
    out
}

/// Writes `archive.json`, `archive.csv`, `heatmap.csv`, `heatmap.svg` and
/// the elite layouts under `dir`.
pub fn save_archive(archive: &Archive, dir: &Path) -> io::Result<()> {
    let elites = dir.join("elites");
    std::fs::create_dir_all(&elites)?;
    for ([i, j], e) in archive.iter() {
        let idx = archive.config.flat([i, j]);
        std::fs::write(elites.join(format!("{idx}_genome.txt")), e.genome.to_text())?;
        std::fs::write(
            elites.join(format!("{idx}_repaired.txt")),
            e.repaired.to_text(),
        )?;
    }
    std::fs::write(dir.join("archive.json"), serde_json::to_string(archive)?)?;
    std::fs::write(dir.join("archive.csv"), archive_csv(archive))?;
    std::fs::write(dir.join("heatmap.csv"), heatmap_csv(archive))?;
    std::fs::write(dir.join("heatmap.svg"), heatmap_svg(archive))?;
    Ok(())
}

pub fn load_archive(path: &Path) -> io::Result<Archive> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
