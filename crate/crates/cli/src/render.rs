use anyhow::Result;
use linewald_core::{BoundReport, Rational};

pub const CSV_HEADER: [&str; 7] = [
    "s",
    "thm_chud",
    "thm_approach1",
    "thm_approach1alg",
    "thm_approach2alg",
    "algorithm_L",
    "e_s",
];

/// `3.5`, `8`: the chud bound is always a half-integer.
fn half(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        r.to_decimal(1)
    }
}

/// Table cells for one report, in `CSV_HEADER` order.
fn cells(r: &BoundReport) -> [String; 7] {
    [
        r.s.to_string(),
        half(&r.chud_bound),
        r.thm2_q.to_string(),
        r.thm1_q.to_string(),
        r.thm3_q.to_string(),
        r.l_decimal().unwrap_or_default(),
        r.e_s.value.clone(),
    ]
}

pub fn csv(reports: &[BoundReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.write_record(cells(r))?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// One column per `s`, one row per bound source, followed by any flags.
pub fn markdown(reports: &[BoundReport]) -> String {
    let rows: Vec<[String; 7]> = reports.iter().map(cells).collect();
    let mut out = String::new();
    for (i, label) in CSV_HEADER.iter().enumerate() {
        let line: Vec<&str> = rows
            .iter()
            .map(|c| if c[i].is_empty() { "-" } else { c[i].as_str() })
            .collect();
        out.push_str(&format!("| {label} | {} |\n", line.join(" | ")));
        if i == 0 {
            out.push_str(&format!("|---|{}\n", "---:|".repeat(rows.len())));
        }
    }
    for r in reports {
        for flag in &r.flags {
            out.push_str(&format!("\ns={}: {flag}", r.s));
        }
    }
    if reports.iter().any(|r| !r.flags.is_empty()) {
        out.push('\n');
    }
    out
}

pub fn json(reports: &[BoundReport]) -> Result<String> {
    Ok(serde_json::to_string_pretty(reports)? + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use linewald_core::{bound_report, ReportConfig};

    fn reports() -> Vec<BoundReport> {
        let cfg = ReportConfig {
            with_l: false,
            ..ReportConfig::default()
        };
        [10, 20]
            .iter()
            .map(|&s| bound_report(s, &cfg).unwrap())
            .collect()
    }

    #[test]
    fn csv_rows() {
        let text = csv(&reports()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "s,thm_chud,thm_approach1,thm_approach1alg,thm_approach2alg,algorithm_L,e_s"
        );
        assert_eq!(lines[1], "10,3.5,4,4,4,,5.107250");
        assert_eq!(lines[2], "20,5,6,6,6,,7.388233");
    }

    #[test]
    fn markdown_columns() {
        let text = markdown(&reports());
        assert!(text.starts_with("| s | 10 | 20 |\n|---|---:|---:|\n| thm_chud | 3.5 | 5 |\n"));
        assert!(text.contains("| algorithm_L | - | - |"));
        assert!(text.contains("s=20: chud-reference-mismatch"));
    }

    #[test]
    fn formats_share_numbers() {
        let reports = reports();
        let csv = csv(&reports).unwrap();
        let md = markdown(&reports);
        for line in csv.lines().skip(1) {
            for cell in line.split(',').filter(|c| !c.is_empty()) {
                assert!(
                    md.contains(&format!(" {cell} |")),
                    "{cell} missing from markdown"
                );
            }
        }
        let json: Vec<BoundReport> = serde_json::from_str(&json(&reports).unwrap()).unwrap();
        assert_eq!(json, reports);
    }
}
