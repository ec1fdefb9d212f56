//! Contingency tables over derivation choices and Pearson's chi-square test
//! of independence.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use statrs::function::gamma::gamma_ur;
use thiserror::Error;

use crate::address::NodeAddress;
use crate::derivation::{DerivationError, DerivationTree};
use crate::grammar::Grammar;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("table must be at least 2x2, got {rows}x{cols}")]
    TooSmall { rows: usize, cols: usize },
    #[error("{0} has a zero marginal total")]
    ZeroMarginal(String),
    #[error("ragged table: row {0} has the wrong number of cells")]
    Ragged(usize),
    #[error("selector `{0}` matches nothing in the corpus")]
    NoMatch(String),
    #[error("no derivation node fills both `{row}` and `{col}`")]
    Disjoint { row: String, col: String },
    #[error("bad selector `{0}`: expected tree:NAME@ADDR or family:NAME@ADDR")]
    BadSelector(String),
    #[error("unknown classifier `{0}`: expected tree, family or template")]
    BadClassifier(String),
    #[error("corpus entry {index}: {source}")]
    Entry { index: usize, source: DerivationError },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContingencyTable {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
}

impl ContingencyTable {
    /// A table with generic row and column labels.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Self {
        let rows = (0..counts.len()).map(|i| format!("r{}", i + 1)).collect();
        let cols = (0..counts.first().map_or(0, Vec::len)).map(|j| format!("c{}", j + 1)).collect();
        ContingencyTable { rows, cols, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    fn marginals(&self) -> Result<(Vec<u64>, Vec<u64>), StatsError> {
        let (r, c) = (self.rows.len(), self.cols.len());
        if r < 2 || c < 2 {
            return Err(StatsError::TooSmall { rows: r, cols: c });
        }
        if self.counts.len() != r {
            return Err(StatsError::Ragged(self.counts.len()));
        }
        if let Some(i) = self.counts.iter().position(|row| row.len() != c) {
            return Err(StatsError::Ragged(i));
        }
        let row_totals: Vec<u64> = self.counts.iter().map(|row| row.iter().sum()).collect();
        let col_totals: Vec<u64> = (0..c).map(|j| self.counts.iter().map(|row| row[j]).sum()).collect();
        if let Some(i) = row_totals.iter().position(|&t| t == 0) {
            return Err(StatsError::ZeroMarginal(format!("row `{}`", self.rows[i])));
        }
        if let Some(j) = col_totals.iter().position(|&t| t == 0) {
            return Err(StatsError::ZeroMarginal(format!("column `{}`", self.cols[j])));
        }
        Ok((row_totals, col_totals))
    }

    /// Aligned plain-text rendering with marginal totals.
    pub fn to_text(&self) -> String {
        let mut grid: Vec<Vec<String>> = Vec::new();
        let mut header = vec![String::new()];
        header.extend(self.cols.iter().cloned());
        header.push("total".into());
        grid.push(header);
        for (label, row) in self.rows.iter().zip(&self.counts) {
            let mut line = vec![label.clone()];
            line.extend(row.iter().map(u64::to_string));
            line.push(row.iter().sum::<u64>().to_string());
            grid.push(line);
        }
        let mut totals = vec!["total".to_string()];
        totals.extend((0..self.cols.len()).map(|j| self.counts.iter().map(|r| r[j]).sum::<u64>().to_string()));
        totals.push(self.total().to_string());
        grid.push(totals);

        let widths: Vec<usize> =
            (0..grid[0].len()).map(|j| grid.iter().map(|r| r[j].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for row in grid {
            let cells: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(j, s)| if j == 0 { format!("{s:<w$}", w = widths[j]) } else { format!("{s:>w$}", w = widths[j]) })
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let esc = |s: &str| {
            if s.contains([',', '"', '\n']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.to_string()
            }
        };
        let mut out = String::new();
        let header: Vec<String> = std::iter::once(String::new()).chain(self.cols.iter().map(|c| esc(c))).collect();
        let _ = writeln!(out, "{}", header.join(","));
        for (label, row) in self.rows.iter().zip(&self.counts) {
            let cells: Vec<String> = std::iter::once(esc(label)).chain(row.iter().map(u64::to_string)).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

impl fmt::Display for ContingencyTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Upper-tail probability of the chi-square distribution.
pub fn chi_square_tail(statistic: f64, df: u32) -> f64 {
    if statistic <= 0.0 {
        return 1.0;
    }
    gamma_ur(df as f64 / 2.0, statistic / 2.0)
}

/// Pearson's statistic, optionally with Yates' continuity correction.
pub fn chi_square_with(t: &ContingencyTable, yates: bool) -> Result<ChiSquareResult, StatsError> {
    let (rt, ct) = t.marginals()?;
    let n = t.total() as f64;
    let mut stat = 0.0;
    for (i, row) in t.counts.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = rt[i] as f64 * ct[j] as f64 / n;
            let mut d = (o as f64 - e).abs();
            if yates {
                d = (d - 0.5).max(0.0);
            }
            stat += d * d / e;
        }
    }
    let df = ((t.rows.len() - 1) * (t.cols.len() - 1)) as u32;
    Ok(ChiSquareResult { statistic: stat, df, p_value: chi_square_tail(stat, df) })
}

pub fn chi_square(t: &ContingencyTable) -> Result<ChiSquareResult, StatsError> {
    chi_square_with(t, false)
}

/// The uncorrected statistic in exact arithmetic.
pub fn chi_square_exact(t: &ContingencyTable) -> Result<BigRational, StatsError> {
    let (rt, ct) = t.marginals()?;
    let n = BigInt::from(t.total());
    let mut stat = BigRational::zero();
    for (i, row) in t.counts.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = BigRational::new(BigInt::from(rt[i]) * BigInt::from(ct[j]), n.clone());
            let d = BigRational::from_integer(o.into()) - &e;
            stat += &d * &d / e;
        }
    }
    Ok(stat)
}

/// Which node's filler a table dimension looks at.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selector {
    pub scope: Scope,
    pub addr: NodeAddress,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Scope {
    Tree(String),
    Family(String),
}

impl FromStr for Selector {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || StatsError::BadSelector(s.to_string());
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let (name, addr) = rest.split_once('@').ok_or_else(bad)?;
        let addr = addr.parse().map_err(|_| bad())?;
        let scope = match kind {
            "tree" => Scope::Tree(name.to_string()),
            "family" => Scope::Family(name.to_string()),
            _ => return Err(bad()),
        };
        Ok(Selector { scope, addr })
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.scope {
            Scope::Tree(n) => write!(f, "tree:{n}@{}", self.addr),
            Scope::Family(n) => write!(f, "family:{n}@{}", self.addr),
        }
    }
}

impl Selector {
    fn covers(&self, g: &Grammar, tree: &str) -> bool {
        match &self.scope {
            Scope::Tree(n) => n == tree,
            Scope::Family(f) => g.family_of(tree) == Some(f.as_str()),
        }
    }

    /// The tree filling the selected site of `node`: the substituted tree,
    /// or the first tree adjoined there.
    fn filler<'d>(&self, node: &'d DerivationTree) -> Option<&'d str> {
        node.edges().iter().find(|e| e.addr == self.addr).map(|e| e.child.tree.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classifier {
    Tree,
    Family,
    Template,
}

impl FromStr for Classifier {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tree" => Ok(Classifier::Tree),
            "family" => Ok(Classifier::Family),
            "template" => Ok(Classifier::Template),
            _ => Err(StatsError::BadClassifier(s.to_string())),
        }
    }
}

impl Classifier {
    fn class(&self, g: &Grammar, tree: &str) -> String {
        let found = match self {
            Classifier::Tree => None,
            Classifier::Family => g.family_of(tree),
            Classifier::Template => g.template_of(tree),
        };
        found.unwrap_or(tree).to_string()
    }
}

/// Cross-tabulates the fillers of two sites over every derivation-tree node
/// in which both are filled. Rows and columns are sorted by class name.
pub fn dependency_table(
    g: &Grammar,
    corpus: &[DerivationTree],
    row: &Selector,
    col: &Selector,
    classify: Classifier,
) -> Result<ContingencyTable, StatsError> {
    let mut cells: BTreeMap<(String, String), u64> = BTreeMap::new();
    let (mut row_seen, mut col_seen) = (false, false);
    for (index, d) in corpus.iter().enumerate() {
        crate::derivation::ensure_valid(g, d).map_err(|source| StatsError::Entry { index, source })?;
        for node in d.nodes() {
            let r = row.covers(g, &node.tree).then(|| row.filler(node)).flatten();
            let c = col.covers(g, &node.tree).then(|| col.filler(node)).flatten();
            row_seen |= r.is_some();
            col_seen |= c.is_some();
            if let (Some(r), Some(c)) = (r, c) {
                *cells.entry((classify.class(g, r), classify.class(g, c))).or_default() += 1;
            }
        }
    }
    if !row_seen {
        return Err(StatsError::NoMatch(row.to_string()));
    }
    if !col_seen {
        return Err(StatsError::NoMatch(col.to_string()));
    }
    if cells.is_empty() {
        return Err(StatsError::Disjoint { row: row.to_string(), col: col.to_string() });
    }
    let mut rows: Vec<String> = cells.keys().map(|(r, _)| r.clone()).collect();
    rows.dedup();
    let mut cols: Vec<String> = cells.keys().map(|(_, c)| c.clone()).collect();
    cols.sort();
    cols.dedup();
    let counts = rows
        .iter()
        .map(|r| cols.iter().map(|c| cells.get(&(r.clone(), c.clone())).copied().unwrap_or(0)).collect())
        .collect();
    Ok(ContingencyTable { rows, cols, counts })
}
