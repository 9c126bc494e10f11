use std::io::Write;

use serde_json::{json, Map, Value};

use crate::config::ExperimentConfig;
use crate::run::ResultRow;

/// Scientific notation with 17 significant digits, enough to round-trip.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn provenance(config: &ExperimentConfig) -> Vec<String> {
    let mut lines = vec![format!("codedlab {}", config.command)];
    lines.extend(config.resolved.iter().map(|(k, v)| format!("{k} = {v}")));
    lines
}

fn axis_names(rows: &[ResultRow]) -> std::io::Result<Vec<String>> {
    let names: Vec<String> = rows.first().map(|r| r.axes.iter().map(|a| a.0.clone()).collect()).unwrap_or_default();
    for row in rows {
        if row.axes.len() != names.len() || row.axes.iter().zip(&names).any(|(a, n)| &a.0 != n) {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                "rows of one experiment must share their axes",
            ));
        }
    }
    Ok(names)
}

/// CSV with a `# `-prefixed provenance block, then one header row.
pub fn write_csv<W: Write>(rows: &[ResultRow], config: &ExperimentConfig, mut out: W) -> std::io::Result<()> {
    for line in provenance(config) {
        writeln!(out, "# {line}")?;
    }
    let axes = axis_names(rows)?;
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
    let mut header = vec!["experiment".to_string()];
    header.extend(axes.iter().cloned());
    header.extend(["metric", "value", "seed", "time"].map(String::from));
    writer.write_record(&header)?;
    for row in rows {
        let mut record = vec![row.experiment.clone()];
        record.extend(row.axes.iter().map(|a| a.1.clone()));
        record.push(row.metric.clone());
        record.push(format_float(row.value));
        record.push(row.seed.to_string());
        record.push(row.time.map(format_float).unwrap_or_default());
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// JSON lines: a provenance object, then one object per row.
pub fn write_jsonl<W: Write>(rows: &[ResultRow], config: &ExperimentConfig, mut out: W) -> std::io::Result<()> {
    let resolved: Map<String, Value> = config.resolved.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    writeln!(out, "{}", json!({ "command": config.command.as_str(), "config": resolved }))?;
    for row in rows {
        let axes: Map<String, Value> = row.axes.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let line = json!({
            "experiment": row.experiment,
            "axes": axes,
            "metric": row.metric,
            "value": row.value,
            "seed": row.seed,
            "time": row.time,
        });
        writeln!(out, "{line}")?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn rows() -> Vec<ResultRow> {
        vec![
            ResultRow {
                experiment: "gc-brs".into(),
                axes: vec![("stragglers".into(), "0 1".into())],
                metric: "error".into(),
                value: 0.1,
                seed: 3,
                time: None,
            },
            ResultRow {
                experiment: "gc-brs".into(),
                axes: vec![("stragglers".into(), "a,\"b\"".into())],
                metric: "error".into(),
                value: 1e-17,
                seed: 3,
                time: Some(2.5),
            },
        ]
    }

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(format_float(-2.0), "-2.0000000000000000e0");
    }

    #[test]
    fn csv_layout() {
        let cfg = parse_config("[gc]\nscheme = frc\nn = 4\ns = 1\n").unwrap();
        let mut buf = Vec::new();
        write_csv(&rows(), &cfg, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# codedlab gc\n# dim = 4\n"));
        assert!(text.contains("# scheme = frc\n"));
        let body = &text[text.find("experiment").unwrap()..];
        let records: Vec<&str> = body.split_terminator("\r\n").collect();
        assert_eq!(records[0], "experiment,stragglers,metric,value,seed,time");
        assert_eq!(records[1], "gc-brs,0 1,error,1.0000000000000001e-1,3,");
        assert_eq!(records[2], "gc-brs,\"a,\"\"b\"\"\",error,1.0000000000000001e-17,3,2.5000000000000000e0");
    }

    #[test]
    fn jsonl_layout() {
        let cfg = parse_config("[gc]\nscheme = frc\nn = 4\ns = 1\n").unwrap();
        let mut buf = Vec::new();
        write_jsonl(&rows(), &cfg, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0]["config"]["scheme"], "frc");
        assert_eq!(lines[1]["axes"]["stragglers"], "0 1");
    }
}
