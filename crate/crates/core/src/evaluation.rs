//! Confusion matrices and error-rate reports.
//!
//! Two families of rates are kept apart. `fnr_paper` and `fpr_paper` divide
//! by predicted-column totals (FN / predicted-N and FP / predicted-A, i.e.
//! false omission and false discovery rates). Sensitivity and specificity
//! divide by actual-row totals.

use std::fmt::{self, Write as _};

use crate::data::Diagnosis;
use crate::error::{Error, Result};

/// Exact non-negative fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    fn new(num: u64, den: u64) -> Option<Self> {
        (den > 0).then_some(Ratio { num, den })
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Rounds half away from zero to `decimals` places, in exact integer
    /// arithmetic, and returns the scaled integer (e.g. 4 for 0.04).
    pub fn round_scaled(&self, decimals: u32) -> u64 {
        let scale = 10u128.pow(decimals);
        let (num, den) = (self.num as u128 * scale, self.den as u128);
        ((2 * num + den) / (2 * den)) as u64
    }

    pub fn display(&self, decimals: u32) -> String {
        let scaled = self.round_scaled(decimals);
        let scale = 10u64.pow(decimals);
        if decimals == 0 {
            return scaled.to_string();
        }
        format!("{}.{:0width$}", scaled / scale, scaled % scale, width = decimals as usize)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Rows are actual labels, columns predicted labels, both in `[A, N]` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; 2]; 2]) -> Self {
        Self { counts }
    }

    pub fn get(&self, actual: Diagnosis, predicted: Diagnosis) -> u64 {
        self.counts[actual.index()][predicted.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn tp(&self) -> u64 {
        self.get(Diagnosis::A, Diagnosis::A)
    }

    /// Actual A predicted N.
    pub fn fn_count(&self) -> u64 {
        self.get(Diagnosis::A, Diagnosis::N)
    }

    /// Actual N predicted A.
    pub fn fp(&self) -> u64 {
        self.get(Diagnosis::N, Diagnosis::A)
    }

    pub fn tn(&self) -> u64 {
        self.get(Diagnosis::N, Diagnosis::N)
    }

    pub fn errors(&self) -> u64 {
        self.fp() + self.fn_count()
    }

    pub fn to_csv(&self) -> String {
        format!(
            "actual,A,N\nA,{},{}\nN,{},{}\n",
            self.counts[0][0], self.counts[0][1], self.counts[1][0], self.counts[1][1]
        )
    }
}

/// Counts `(actual, predicted)` pairs.
pub fn confusion<I>(pairs: I) -> Result<ConfusionMatrix>
where
    I: IntoIterator<Item = (Diagnosis, Diagnosis)>,
{
    let mut cm = ConfusionMatrix::default();
    for (actual, predicted) in pairs {
        cm.counts[actual.index()][predicted.index()] += 1;
    }
    if cm.total() == 0 {
        return Err(Error::InsufficientData("confusion matrix needs at least one pair".into()));
    }
    Ok(cm)
}

/// `None` marks a rate whose denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateReport {
    pub overall_error: Ratio,
    pub fnr_paper: Option<Ratio>,
    pub fpr_paper: Option<Ratio>,
    pub sensitivity: Option<Ratio>,
    pub specificity: Option<Ratio>,
}

impl RateReport {
    pub fn rows(&self) -> [(&'static str, Option<Ratio>); 5] {
        [
            ("overall_error", Some(self.overall_error)),
            ("fnr_paper", self.fnr_paper),
            ("fpr_paper", self.fpr_paper),
            ("sensitivity", self.sensitivity),
            ("specificity", self.specificity),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("rate,numerator,denominator,value\n");
        for (name, r) in self.rows() {
            match r {
                Some(r) => {
                    let _ = writeln!(out, "{name},{},{},{}", r.num, r.den, r.value());
                }
                None => {
                    let _ = writeln!(out, "{name},,,undefined");
                }
            }
        }
        out
    }
}

pub fn rates(cm: &ConfusionMatrix) -> Result<RateReport> {
    let total = cm.total();
    let overall_error = Ratio::new(cm.errors(), total)
        .ok_or_else(|| Error::InsufficientData("empty confusion matrix".into()))?;
    let predicted_n = cm.fn_count() + cm.tn();
    let predicted_a = cm.tp() + cm.fp();
    Ok(RateReport {
        overall_error,
        fnr_paper: Ratio::new(cm.fn_count(), predicted_n),
        fpr_paper: Ratio::new(cm.fp(), predicted_a),
        sensitivity: Ratio::new(cm.tp(), cm.tp() + cm.fn_count()),
        specificity: Ratio::new(cm.tn(), cm.tn() + cm.fp()),
    })
}

const ROW_TITLES: [&str; 5] = [
    "Overall Error Rate",
    "False Negative Rate (FN / predicted N)",
    "False Positive Rate (FP / predicted A)",
    "Sensitivity (TP / actual A)",
    "Specificity (TN / actual N)",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    /// Aligned text, 2 decimals, with a footnote.
    pub text: String,
    /// Full-precision values.
    pub csv: String,
}

/// Lays reports side by side: one row per rate, one column per model.
pub fn compare_models(reports: &[(String, RateReport)]) -> Result<ComparisonTable> {
    if reports.is_empty() {
        return Err(Error::InvalidArgument("no reports to compare".into()));
    }
    let cell = |r: Option<Ratio>| r.map_or_else(|| "undefined".to_string(), |r| r.display(2));
    let title_w = ROW_TITLES.iter().map(|t| t.chars().count()).max().unwrap_or(0);
    let col_w: Vec<usize> = reports.iter().map(|(n, _)| n.chars().count().max(9)).collect();

    let mut text = String::new();
    let _ = write!(text, "{:<title_w$}", "Error");
    for ((name, _), w) in reports.iter().zip(&col_w) {
        let _ = write!(text, "  {name:>w$}");
    }
    text.push('\n');
    for (i, title) in ROW_TITLES.iter().enumerate() {
        let _ = write!(text, "{title:<title_w$}");
        for ((_, rep), w) in reports.iter().zip(&col_w) {
            let _ = write!(text, "  {:>w$}", cell(rep.rows()[i].1));
        }
        text.push('\n');
    }
    text.push_str(
        "\nValues rounded half away from zero to 2 decimals; the CSV carries full precision.\n\
         False negative/positive rates above divide by predicted-class totals.\n",
    );

    let mut csv = String::from("rate");
    for (name, _) in reports {
        let _ = write!(csv, ",{name}");
    }
    csv.push('\n');
    for i in 0..ROW_TITLES.len() {
        csv.push_str(reports[0].1.rows()[i].0);
        for (_, rep) in reports {
            match rep.rows()[i].1 {
                Some(r) => {
                    let _ = write!(csv, ",{}", r.value());
                }
                None => csv.push_str(",undefined"),
            }
        }
        csv.push('\n');
    }
    Ok(ComparisonTable { text, csv })
}
