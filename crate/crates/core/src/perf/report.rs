//! Aligned-column text tables and CSV for implementation summaries.

use serde::{Deserialize, Serialize};

use super::utilization_percent;
use crate::fabric::{Device, ResourceFootprint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSummary {
    pub label: String,
    pub footprint: ResourceFootprint,
    pub power_watts: f64,
    pub clock_hz: f64,
    /// Worst-case compute time per instance.
    pub processing_time_s: Option<f64>,
}

fn render(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{s:<w$}", w = widths[c]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn csv(rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r
            .iter()
            .map(|s| {
                if s.contains([',', '"', '\n']) {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn watts(w: f64) -> String {
    format!("{w:.2}")
}

fn micros(t: Option<f64>) -> String {
    match t {
        Some(t) => format!("{:.2}", t * 1e6),
        None => "-".into(),
    }
}

fn utilization_rows(systems: &[SystemSummary], device: &Device) -> Vec<Vec<String>> {
    let cap = device.capacity.to_array();
    let mut rows = vec![vec![
        "System".to_string(),
        format!("Slices ({})", cap[0]),
        format!("LUT ({})", cap[1]),
        format!("LUT-RAM ({})", cap[2]),
        format!("BRAM ({})", cap[3]),
        format!("DSP ({})", cap[4]),
        "P (W)".to_string(),
    ]];
    for s in systems {
        let used = s.footprint.to_array();
        let mut row = vec![s.label.clone()];
        row.extend((0..5).map(|i| format!("{} ({}%)", used[i], utilization_percent(used[i], cap[i]))));
        row.push(watts(s.power_watts));
        rows.push(row);
    }
    rows
}

/// One row per system, resource columns with utilization percentages.
pub fn utilization_table(systems: &[SystemSummary], device: &Device) -> String {
    render(&utilization_rows(systems, device))
}

pub fn utilization_csv(systems: &[SystemSummary], device: &Device) -> String {
    let cap = device.capacity.to_array();
    let mut rows = vec![[
        "system", "slices", "slices_pct", "luts", "luts_pct", "lut_ram", "lut_ram_pct", "bram",
        "bram_pct", "dsp", "dsp_pct", "power_w",
    ]
    .map(String::from)
    .to_vec()];
    for s in systems {
        let used = s.footprint.to_array();
        let mut row = vec![s.label.clone()];
        for i in 0..5 {
            row.push(used[i].to_string());
            row.push(utilization_percent(used[i], cap[i]));
        }
        row.push(watts(s.power_watts));
        rows.push(row);
    }
    csv(&rows)
}

fn comparison_rows(systems: &[SystemSummary]) -> Vec<Vec<String>> {
    let mut rows = vec![std::iter::once("Results".to_string())
        .chain(systems.iter().map(|s| s.label.clone()))
        .collect::<Vec<_>>()];
    let labels = ["Slices", "LUTs", "Memory LUT", "BRAM", "DSP48"];
    for (i, name) in labels.iter().enumerate() {
        let mut row = vec![name.to_string()];
        row.extend(systems.iter().map(|s| s.footprint.to_array()[i].to_string()));
        rows.push(row);
    }
    let mut power = vec!["Power (W)".to_string()];
    power.extend(systems.iter().map(|s| watts(s.power_watts)));
    let mut freq = vec!["Frequency (MHz)".to_string()];
    freq.extend(systems.iter().map(|s| format!("{}", s.clock_hz / 1e6)));
    let mut time = vec!["Processing time (us)".to_string()];
    time.extend(systems.iter().map(|s| micros(s.processing_time_s)));
    rows.extend([power, freq, time]);
    rows
}

/// One column per system, one row per metric.
pub fn comparison_table(systems: &[SystemSummary]) -> String {
    render(&comparison_rows(systems))
}

pub fn comparison_csv(systems: &[SystemSummary]) -> String {
    csv(&comparison_rows(systems))
}
