use std::fmt::Write;

use super::RegionMap;

const PALETTE: [&str; 8] = ["#f2f2f2", "#fde0a8", "#a8d8f0", "#b8e6a8", "#f0b8d8", "#d0c0f0", "#f8c8a0", "#a0e0d0"];
const CELL: f64 = 4.0;

fn color(count: u32) -> &'static str {
    PALETTE[(count as usize / 2).min(PALETTE.len() - 1)]
}

/// Draws the grid colouring by real-solution count, singular nodes in black,
/// marked points, crossing routes and hole loops.
pub fn render_svg(map: &RegionMap) -> String {
    let g = &map.grid;
    let (n0, n1) = (g.n0(), g.n1());
    let (w, h) = (n0 as f64 * CELL, n1 as f64 * CELL);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    // Row runs of equal state, drawn top row = largest second coordinate.
    for j in 0..n1 {
        let y = (n1 - 1 - j) as f64 * CELL;
        let mut i = 0;
        while i < n0 {
            let c = g.counts[g.idx(i, j)];
            let mut k = i + 1;
            while k < n0 && g.counts[g.idx(k, j)] == c {
                k += 1;
            }
            let fill = c.map_or("#000000", color);
            let _ =
                writeln!(s, r#"<rect x="{}" y="{y}" width="{}" height="{CELL}" fill="{fill}"/>"#, i as f64 * CELL, (k - i) as f64 * CELL);
            i = k;
        }
    }
    let to_px = |p: &[f64]| -> (f64, f64) {
        let (fi, fj) = g.grid_coords(p);
        ((fi + 0.5) * CELL, (n1 as f64 - 1.0 - fj + 0.5) * CELL)
    };
    let polyline = |s: &mut String, pts: &[Vec<f64>], stroke: &str| {
        let coords: Vec<String> = pts
            .iter()
            .map(|p| {
                let (x, y) = to_px(p);
                format!("{x:.1},{y:.1}")
            })
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="1"/>"#, coords.join(" "));
    };
    for site in &map.sites {
        polyline(&mut s, &site.full_path(), "#555555");
    }
    for r in &map.regions {
        for hl in &r.holes {
            polyline(&mut s, &hl.path, "#c03030");
        }
    }
    for r in &map.regions {
        let (x, y) = to_px(&r.marked_point);
        let _ = writeln!(
            s,
            r##"<circle cx="{x:.1}" cy="{y:.1}" r="3" fill="#202020"><title>region {} count {}</title></circle>"##,
            r.id, r.count
        );
    }
    s.push_str("</svg>\n");
    s
}
