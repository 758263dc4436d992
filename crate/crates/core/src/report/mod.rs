//! Table rendering (Markdown, CSV, JSON) for report bundles.

pub mod format;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{sort_conditions, HadsSubscale, CANONICAL_CONDITIONS, GT_CONDITION};
use crate::eval::{canonical_json, fig2_rows, ReportBundle};
use format::{bold, no_leading_zero, p_value, round_half_even};

/// ICC at or above this is set in bold in the consistency table.
pub const ICC_BOLD: f64 = 0.85;
/// Groundedness percentages at or above this are set in bold.
pub const GROUNDEDNESS_BOLD: f64 = 90.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Md,
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Md => "md",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "md" => Ok(Format::Md),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format {s:?} (expected md, csv or json)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    Consistency,
    Validity,
    Robustness,
    Keywords,
    KeywordFrequency,
    Agreement,
    Wer,
    Fig2,
}

impl TableKind {
    pub const ALL: [TableKind; 8] = [
        TableKind::Consistency,
        TableKind::Validity,
        TableKind::Robustness,
        TableKind::Keywords,
        TableKind::KeywordFrequency,
        TableKind::Agreement,
        TableKind::Wer,
        TableKind::Fig2,
    ];

    /// Output file stem.
    pub fn name(self) -> &'static str {
        match self {
            TableKind::Consistency => "consistency",
            TableKind::Validity => "validity",
            TableKind::Robustness => "robustness",
            TableKind::Keywords => "keywords",
            TableKind::KeywordFrequency => "keyword_frequency",
            TableKind::Agreement => "agreement",
            TableKind::Wer => "wer",
            TableKind::Fig2 => "fig2",
        }
    }
}

impl fmt::Display for TableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Header plus rows of already formatted cells. Cells may carry `**bold**`
/// markup, which only the Markdown output keeps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Grid {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Grid {
    fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Grid {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_markdown(&self) -> String {
        let line = |cells: &[String]| format!("| {} |\n", cells.join(" | "));
        let mut s = line(&self.header);
        s.push_str(&format!("|{}\n", "---|".repeat(self.header.len())));
        for r in &self.rows {
            s.push_str(&line(r));
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let line = |cells: &[String]| {
            let fields: Vec<String> = cells.iter().map(|c| csv_field(&strip_bold(c))).collect();
            format!("{}\n", fields.join(","))
        };
        let mut s = line(&self.header);
        for r in &self.rows {
            s.push_str(&line(r));
        }
        s
    }
}

fn strip_bold(s: &str) -> String {
    s.replace("**", "")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Column label for a condition in the wide tables.
pub fn condition_label(c: &str) -> &str {
    match c {
        "W-Medium" => "W-Med.",
        _ => c,
    }
}

/// Short label used in the robustness table's ASR column.
pub fn asr_label(c: &str) -> &str {
    match c {
        "W-Large" => "W-L",
        "W-Medium" => "W-M",
        "W-Small" => "W-S",
        _ => c,
    }
}

const NA: &str = "n/a";

fn conditions_or_canonical<'a>(labels: impl Iterator<Item = &'a str>) -> Vec<String> {
    let v = sort_conditions(labels);
    if v.is_empty() {
        CANONICAL_CONDITIONS.iter().map(|c| c.to_string()).collect()
    } else {
        v
    }
}

fn models<'a>(labels: impl Iterator<Item = &'a str>) -> Vec<String> {
    let set: std::collections::BTreeSet<&str> = labels.collect();
    set.into_iter().map(str::to_string).collect()
}

/// Model name on the first row of its block only.
fn block_label(model: &str, first: bool) -> String {
    if first {
        model.to_string()
    } else {
        String::new()
    }
}

fn consistency_grid(b: &ReportBundle) -> Grid {
    let conds = conditions_or_canonical(b.consistency.iter().map(|c| c.condition.as_str()));
    let mut g = Grid::new(
        ["Model", "HADS"]
            .into_iter()
            .map(str::to_string)
            .chain(conds.iter().map(|c| condition_label(c).to_string())),
    );
    let cells: BTreeMap<(&str, &str, HadsSubscale), String> = b
        .consistency
        .iter()
        .map(|c| {
            let icc = no_leading_zero(c.icc.icc, 3);
            let icc = if c.icc.icc >= ICC_BOLD { bold(&icc) } else { icc };
            ((c.model.as_str(), c.condition.as_str(), c.subscale), format!("{icc}/{}", p_value(c.friedman.p_value)))
        })
        .collect();
    for m in models(b.consistency.iter().map(|c| c.model.as_str())) {
        for (i, s) in HadsSubscale::ALL.iter().enumerate() {
            let mut row = vec![block_label(&m, i == 0), s.short().to_string()];
            row.extend(conds.iter().map(|c| cells.get(&(m.as_str(), c.as_str(), *s)).cloned().unwrap_or(NA.into())));
            g.rows.push(row);
        }
    }
    g
}

fn validity_grid(b: &ReportBundle) -> Grid {
    let conds = conditions_or_canonical(b.validity.iter().map(|c| c.condition.as_str()));
    let mut g = Grid::new(
        ["Model", "HADS"]
            .into_iter()
            .map(str::to_string)
            .chain(conds.iter().map(|c| condition_label(c).to_string())),
    );
    let rho: BTreeMap<(&str, &str, HadsSubscale), f64> = b
        .validity
        .iter()
        .filter_map(|c| Some(((c.model.as_str(), c.condition.as_str(), c.subscale), c.rho?.rho)))
        .collect();
    for m in models(b.validity.iter().map(|c| c.model.as_str())) {
        for (i, s) in HadsSubscale::ALL.iter().enumerate() {
            let vals: Vec<Option<String>> = conds
                .iter()
                .map(|c| rho.get(&(m.as_str(), c.as_str(), *s)).map(|r| round_half_even(*r, 3)))
                .collect();
            // bold the row maximum as displayed
            let best = vals
                .iter()
                .flatten()
                .map(|v| v.parse::<f64>().expect("formatted number"))
                .fold(f64::NEG_INFINITY, f64::max);
            let mut row = vec![block_label(&m, i == 0), s.short().to_string()];
            row.extend(vals.into_iter().map(|v| match v {
                Some(v) if v.parse::<f64>().ok() == Some(best) => bold(&v),
                Some(v) => v,
                None => NA.into(),
            }));
            g.rows.push(row);
        }
    }
    g
}

fn robustness_grid(b: &ReportBundle) -> Grid {
    let mut g = Grid::new(["Model", "ASR", "MAE A", "MAE D", "rho A", "rho D", "% within 1"]);
    let mut cells: Vec<_> = b.robustness.iter().collect();
    let order = sort_conditions(cells.iter().map(|c| c.asr_condition.as_str()));
    let pos = |c: &str| order.iter().position(|o| o == c);
    cells.sort_by(|x, y| (&x.model, pos(&x.asr_condition)).cmp(&(&y.model, pos(&y.asr_condition))));
    let mut last_model: Option<&str> = None;
    for c in cells {
        let get = |s: HadsSubscale| c.per_subscale.get(&s);
        let mae = |s| get(s).map_or(NA.into(), |p| round_half_even(p.mae, 2));
        let rho = |s| get(s).and_then(|p| p.rho).map_or(NA.into(), |r| round_half_even(r.rho, 3));
        g.rows.push(vec![
            block_label(&c.model, last_model != Some(c.model.as_str())),
            asr_label(&c.asr_condition).to_string(),
            mae(HadsSubscale::Anxiety),
            mae(HadsSubscale::Depression),
            rho(HadsSubscale::Anxiety),
            rho(HadsSubscale::Depression),
            round_half_even(c.pooled_pct_within_1, 1),
        ]);
        last_model = Some(c.model.as_str());
    }
    g
}

fn keywords_grid(b: &ReportBundle) -> Grid {
    let mut g = Grid::new([
        "Model",
        "Grounded A (%)",
        "Grounded D (%)",
        "Intra Jaccard A",
        "Intra Jaccard D",
        "Inter Jaccard A",
        "Inter Jaccard D",
    ]);
    let by: BTreeMap<(&str, HadsSubscale), &crate::eval::KeywordCell> =
        b.keywords.iter().map(|k| ((k.model.as_str(), k.subscale), k)).collect();
    let jac = |x: Option<f64>| x.map_or(NA.into(), |v| round_half_even(v, 2));
    let intra_best: BTreeMap<HadsSubscale, String> = HadsSubscale::ALL
        .iter()
        .filter_map(|s| {
            let best = b
                .keywords
                .iter()
                .filter(|k| k.subscale == *s)
                .filter_map(|k| k.intra_jaccard)
                .map(|v| round_half_even(v, 2))
                .max_by(|x, y| x.parse::<f64>().unwrap().total_cmp(&y.parse::<f64>().unwrap()))?;
            Some((*s, best))
        })
        .collect();
    for m in models(b.keywords.iter().map(|k| k.model.as_str())) {
        let mut row = vec![m.clone()];
        for s in HadsSubscale::ALL {
            let v = by.get(&(m.as_str(), s)).and_then(|k| k.groundedness_pct);
            row.push(match v {
                Some(p) => {
                    let t = round_half_even(p, 1);
                    if p >= GROUNDEDNESS_BOLD {
                        bold(&t)
                    } else {
                        t
                    }
                }
                None => NA.into(),
            });
        }
        for s in HadsSubscale::ALL {
            let t = jac(by.get(&(m.as_str(), s)).and_then(|k| k.intra_jaccard));
            row.push(if intra_best.get(&s) == Some(&t) { bold(&t) } else { t });
        }
        for s in HadsSubscale::ALL {
            row.push(jac(by.get(&(m.as_str(), s)).and_then(|k| k.inter_jaccard)));
        }
        g.rows.push(row);
    }
    g
}

fn frequency_grid(b: &ReportBundle) -> Grid {
    let mut g = Grid::new(["Model", "HADS", "Rank", "Keyword", "Count"]);
    for f in &b.keyword_frequencies {
        g.rows.push(vec![
            f.model.clone(),
            f.subscale.short().into(),
            f.rank.to_string(),
            f.keyword.clone(),
            f.count.to_string(),
        ]);
    }
    g
}

fn agreement_grid(b: &ReportBundle) -> Grid {
    let mut g = Grid::new(["Condition", "HADS", "Model A", "Model B", "n", "rho", "p"]);
    let order = sort_conditions(b.agreement.iter().map(|c| c.condition.as_str()));
    let pos = |c: &str| order.iter().position(|o| o == c);
    let mut cells: Vec<_> = b.agreement.iter().collect();
    cells.sort_by(|x, y| {
        (pos(&x.condition), x.subscale, &x.model_a, &x.model_b).cmp(&(pos(&y.condition), y.subscale, &y.model_a, &y.model_b))
    });
    for c in cells {
        g.rows.push(vec![
            condition_label(&c.condition).into(),
            c.subscale.short().into(),
            c.model_a.clone(),
            c.model_b.clone(),
            c.n.to_string(),
            c.rho.map_or(NA.into(), |r| round_half_even(r.rho, 3)),
            c.rho.map_or(NA.into(), |r| p_value(r.p_value)),
        ]);
    }
    g
}

fn wer_grid(b: &ReportBundle) -> Grid {
    let mut g = Grid::new([
        "Condition",
        "Subjects",
        "WER (%)",
        "Deletion rate (%)",
        "Substitutions",
        "Deletions",
        "Insertions",
        "Reference words",
    ]);
    for w in &b.wer {
        g.rows.push(vec![
            w.condition.clone(),
            w.n_subjects.to_string(),
            round_half_even(100.0 * w.corpus.wer, 1),
            round_half_even(100.0 * w.corpus.deletion_rate, 1),
            w.corpus.substitutions.to_string(),
            w.corpus.deletions.to_string(),
            w.corpus.insertions.to_string(),
            w.corpus.n_ref_tokens.to_string(),
        ]);
    }
    g
}

fn fig2_grid(b: &ReportBundle) -> Grid {
    let mut g = Grid::new(["model", "subscale", "condition", "wer", "rho", "icc"]);
    let num = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    for r in fig2_rows(b, GT_CONDITION) {
        g.rows.push(vec![r.model, r.subscale.short().into(), r.condition, num(r.wer), num(r.rho), num(r.icc)]);
    }
    g
}

pub fn grid(bundle: &ReportBundle, table: TableKind) -> Grid {
    match table {
        TableKind::Consistency => consistency_grid(bundle),
        TableKind::Validity => validity_grid(bundle),
        TableKind::Robustness => robustness_grid(bundle),
        TableKind::Keywords => keywords_grid(bundle),
        TableKind::KeywordFrequency => frequency_grid(bundle),
        TableKind::Agreement => agreement_grid(bundle),
        TableKind::Wer => wer_grid(bundle),
        TableKind::Fig2 => fig2_grid(bundle),
    }
}

fn table_json(bundle: &ReportBundle, table: TableKind) -> String {
    match table {
        TableKind::Consistency => canonical_json(&bundle.consistency),
        TableKind::Validity => canonical_json(&bundle.validity),
        TableKind::Robustness => canonical_json(&bundle.robustness),
        TableKind::Keywords => canonical_json(&bundle.keywords),
        TableKind::KeywordFrequency => canonical_json(&bundle.keyword_frequencies),
        TableKind::Agreement => canonical_json(&bundle.agreement),
        TableKind::Wer => canonical_json(&bundle.wer),
        TableKind::Fig2 => canonical_json(&fig2_rows(bundle, GT_CONDITION)),
    }
}

/// Renders one table. JSON output is the table's cells in canonical form,
/// at full precision.
pub fn render_table(bundle: &ReportBundle, table: TableKind, format: Format) -> String {
    match format {
        Format::Md => grid(bundle, table).to_markdown(),
        Format::Csv => grid(bundle, table).to_csv(),
        Format::Json => table_json(bundle, table),
    }
}

/// Every table as `(file name, contents)`, plus the full bundle as
/// `report.json`. The plot data is always CSV.
pub fn render_report(bundle: &ReportBundle, format: Format) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = TableKind::ALL
        .iter()
        .map(|t| {
            let f = if *t == TableKind::Fig2 { Format::Csv } else { format };
            (format!("{}.{}", t.name(), f.extension()), render_table(bundle, *t, f))
        })
        .collect();
    out.push(("report.json".into(), bundle.to_canonical_json()));
    out
}
