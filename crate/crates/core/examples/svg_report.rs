//! Render a metrics CSV (as written by the `sweep` command) to an SVG plot.
//!
//! `cargo run --example svg_report -- metrics.csv plot.svg`

use pipeboot::metrics::{parse_report, plot_svg};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let input = args.next().ok_or("usage: svg_report <metrics.csv> [out.svg]")?;
    let output = args.next().unwrap_or_else(|| "metrics.svg".into());
    let rows = parse_report(&std::fs::read_to_string(&input)?)?;
    let metric = rows.first().ok_or("empty report")?.metric;
    std::fs::write(&output, plot_svg(&rows, metric, &input))?;
    println!("wrote {output} ({} rows, metric {metric})", rows.len());
    Ok(())
}
