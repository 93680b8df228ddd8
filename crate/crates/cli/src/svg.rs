//! Deterministic SVG rendering of the CSV outputs: heatmaps for field dumps
//! (`x,y,value`) and line charts for everything else.

use std::fmt::Write as _;
use std::io::BufReader;
use std::path::PathBuf;

use clap::Args;
use slit_harmonic::operator::Field;
use slit_harmonic::{Error, Result};

#[derive(Args, Debug)]
pub struct PlotArgs {
    /// CSV written by one of the other subcommands.
    pub input: PathBuf,
    /// Output SVG; defaults to the input path with an `.svg` extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// free_boundary.csv whose points are marked on the x axis of a heatmap.
    #[arg(long = "free-boundary")]
    pub free_boundary: Option<PathBuf>,
    /// Plot log10 of the absolute values in line charts.
    #[arg(long)]
    pub log: bool,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 48.0;
const MAX_CELLS: usize = 256;

/// Viridis-like stops, interpolated linearly.
const PALETTE: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

const SERIES_COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn color(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let pos = t * (PALETTE.len() - 1) as f64;
    let k = (pos.floor() as usize).min(PALETTE.len() - 2);
    let f = pos - k as f64;
    let c: Vec<u8> = (0..3)
        .map(|i| (PALETTE[k][i] * (1.0 - f) + PALETTE[k + 1][i] * f).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn is_field_csv(text: &str) -> bool {
    text.lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .is_some_and(|l| l.split(',').map(str::trim).eq(["x", "y", "value"]))
}

pub fn plot(args: &PlotArgs) -> Result<bool> {
    let text = std::fs::read_to_string(&args.input)?;
    let title = args
        .input
        .file_name()
        .map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    let svg = if is_field_csv(&text) {
        let field = Field::from_csv(BufReader::new(text.as_bytes()), false)?;
        let marks = match &args.free_boundary {
            Some(p) => read_free_boundary(&std::fs::read_to_string(p)?)?,
            None => Vec::new(),
        };
        heatmap(&field, &marks, &title)
    } else {
        line_chart(&parse_table(&text)?, args.log, &title)?
    };
    let out = args.out.clone().unwrap_or_else(|| args.input.with_extension("svg"));
    std::fs::write(&out, svg)?;
    println!("plot: wrote {}", out.display());
    Ok(true)
}

/// Heatmap of a field, strided so that neither axis exceeds `MAX_CELLS`.
pub fn heatmap(field: &Field, marks: &[f64], title: &str) -> String {
    let g = &field.grid;
    let stride = g.nx.max(g.ny).div_ceil(MAX_CELLS).max(1);
    let cols: Vec<usize> = (0..g.nx).step_by(stride).collect();
    let rows: Vec<usize> = (0..g.ny).step_by(stride).collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &j in &rows {
        for &i in &cols {
            let v = field.at(i, j);
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    let span = hi - lo;
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let cw = plot_w / cols.len() as f64;
    let ch = plot_h / rows.len() as f64;
    let mut s = header(title);
    for (rj, &j) in rows.iter().enumerate() {
        // Row 0 is the lowest y and sits at the bottom of the picture.
        let top = MARGIN + plot_h - (rj + 1) as f64 * ch;
        for (ci, &i) in cols.iter().enumerate() {
            let v = field.at(i, j);
            let t = if span > 0.0 { (v - lo) / span } else { 0.5 };
            let _ = writeln!(
                s,
                r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{}"/>"#,
                MARGIN + ci as f64 * cw,
                top,
                cw + 0.01,
                ch + 0.01,
                color(t)
            );
        }
    }
    let x_lo = g.x(0);
    let x_hi = g.x(g.nx - 1);
    for &xf in marks {
        if x_hi > x_lo {
            let px = MARGIN + (xf - x_lo) / (x_hi - x_lo) * plot_w;
            let _ = writeln!(
                s,
                r#"<line x1="{px:.3}" y1="{:.3}" x2="{px:.3}" y2="{:.3}" stroke="red" stroke-width="2"/>"#,
                MARGIN + plot_h - 8.0,
                MARGIN + plot_h + 8.0
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{}" font-family="sans-serif" font-size="11">x in [{x_lo:.4}, {x_hi:.4}], y in [{:.4}, {:.4}], value in [{lo:.4e}, {hi:.4e}]</text>"#,
        HEIGHT - 12.0,
        g.y(0),
        g.y(g.ny - 1)
    );
    s.push_str("</svg>\n");
    s
}

fn read_free_boundary(text: &str) -> Result<Vec<f64>> {
    let table = parse_table(text)?;
    let k = table
        .columns
        .iter()
        .position(|c| c == "x_f")
        .ok_or_else(|| Error::Csv("free-boundary file has no x_f column".into()))?;
    Ok(table.rows.iter().filter_map(|r| r[k]).collect())
}

/// A CSV table whose cells are numbers where they parse and `None` otherwise.
#[derive(Debug)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
    /// Raw cell text, parallel to `rows`.
    pub labels: Vec<Vec<String>>,
}

pub fn parse_table(text: &str) -> Result<Table> {
    let mut columns: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        match &columns {
            None => columns = Some(cells.iter().map(|c| c.to_string()).collect()),
            Some(cols) => {
                if cells.len() != cols.len() {
                    return Err(Error::Csv(format!(
                        "line {}: {} cells, header has {}",
                        n + 1,
                        cells.len(),
                        cols.len()
                    )));
                }
                rows.push(cells.iter().map(|c| c.parse::<f64>().ok()).collect());
                labels.push(cells.iter().map(|c| c.to_string()).collect());
            }
        }
    }
    let columns = columns.ok_or_else(|| Error::Csv("no header line".into()))?;
    Ok(Table { columns, rows, labels })
}

/// Plots every numeric column against the first numeric column.
pub fn line_chart(table: &Table, log: bool, title: &str) -> Result<String> {
    let numeric: Vec<usize> = (0..table.columns.len())
        .filter(|&k| !table.rows.is_empty() && table.rows.iter().all(|r| r[k].is_some()))
        .collect();
    if numeric.len() < 2 {
        return Err(Error::Csv("need at least two numeric columns to plot".into()));
    }
    let xk = numeric[0];
    let tf = |v: f64| if log { v.abs().log10() } else { v };
    // Rows whose text column differs (e.g. the estimate name) form separate series.
    let label_col = (0..table.columns.len()).find(|&k| table.rows.iter().any(|r| r[k].is_none()));
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for (n, r) in table.rows.iter().enumerate() {
        for &k in &numeric[1..] {
            let name = match label_col {
                Some(l) => format!("{} {}", table.labels[n][l], table.columns[k]),
                None => table.columns[k].clone(),
            };
            let (x, y) = (r[xk].unwrap(), tf(r[k].unwrap()));
            if !(x.is_finite() && y.is_finite()) {
                continue;
            }
            match series.iter_mut().find(|(s, _)| *s == name) {
                Some((_, pts)) => pts.push((x, y)),
                None => series.push((name, vec![(x, y)])),
            }
        }
    }
    let all = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x0.is_finite() && y0.is_finite()) {
        return Err(Error::Csv("no finite values to plot".into()));
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| MARGIN + plot_h - (y - y0) / (y1 - y0) * plot_h;
    let mut s = header(title);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for (n, (name, pts)) in series.iter().enumerate() {
        let c = SERIES_COLORS[n % SERIES_COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.3},{:.3}", px(x), py(y))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#, path.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" fill="{c}">{}</text>"#,
            MARGIN + 8.0,
            MARGIN + 14.0 * (n + 1) as f64,
            escape(name)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{}" font-family="sans-serif" font-size="11">{} in [{x0:.4e}, {x1:.4e}], {}values in [{y0:.4e}, {y1:.4e}]</text>"#,
        HEIGHT - 12.0,
        escape(&table.columns[xk]),
        if log { "log10 " } else { "" }
    );
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use slit_harmonic::operator::Grid2D;

    #[test]
    fn palette_endpoints() {
        assert_eq!(color(0.0), "#440154");
        assert_eq!(color(1.0), "#fde725");
        assert_eq!(color(f64::NAN), "#440154");
    }

    #[test]
    fn heatmap_is_strided() {
        let g = Grid2D::covering(0.0, 1.0, 0.0, 1.0, 1.0 / 600.0).unwrap();
        let f = Field::from_fn(g, |x, y| x + y);
        let svg = heatmap(&f, &[], "t");
        let cells = svg.matches("<rect x=").count();
        assert!(cells <= MAX_CELLS * MAX_CELLS, "{cells}");
    }

    #[test]
    fn ragged_rows_are_rejected() {
        assert!(matches!(parse_table("a,b\n1,2\n3\n"), Err(Error::Csv(_))));
        assert!(matches!(parse_table("# only comments\n"), Err(Error::Csv(_))));
    }

    #[test]
    fn field_header_detection() {
        assert!(is_field_csv("# banner\nx,y,value\n0,0,1\n"));
        assert!(!is_field_csv("j,h,residual\n"));
    }
}
