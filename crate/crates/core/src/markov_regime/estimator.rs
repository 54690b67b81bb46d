//! Three-state trend classifier over candle open prices.
//!
//! Each bar gets a *prior* trend from a lookback window and a *future*
//! trend from a lookahead window; the (prior, future) pairs are counted and
//! row-normalised into a transition matrix with state order
//! (up, down, sideway). The classification rules are kept exactly as
//! originally written, quirks included:
//!
//! * thresholds are given in pips and divided by 10⁴;
//! * the prior classification tests "up" first and then "down", so "down"
//!   wins when both fire;
//! * the future classification is an if/else chain, so "up" wins there;
//! * bars inside the lookback warm-up keep the sideway label;
//! * the `delta_back_*` arguments are accepted but never read; both windows
//!   use `delta_up` / `delta_down`.

use std::fmt::Write as _;

use super::types::TransitionMatrix;
use crate::error::{Error, Result};

/// One trading day, in years.
pub const DEFAULT_BAR_DT: f64 = 1.0 / 252.0;

const PIP: f64 = 10000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Trend {
    Up = 0,
    Down = 1,
    Sideway = 2,
}

impl Trend {
    pub const ALL: [Trend; 3] = [Trend::Up, Trend::Down, Trend::Sideway];

    pub fn name(self) -> &'static str {
        match self {
            Trend::Up => "up",
            Trend::Down => "down",
            Trend::Sideway => "sideway",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Window lengths (bars) and thresholds (pips), in the argument order of the
/// reference routine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorWindows {
    pub candles_back_up: usize,
    pub candles_back_down: usize,
    pub delta_back_up: f64,
    pub delta_back_down: f64,
    pub candles_up: usize,
    pub candles_down: usize,
    pub delta_up: f64,
    pub delta_down: f64,
}

impl Default for EstimatorWindows {
    /// The example run `(30, 30, 10, 10, 30, 30, 10, 10)`.
    fn default() -> Self {
        Self::from_positional([30.0, 30.0, 10.0, 10.0, 30.0, 30.0, 10.0, 10.0])
            .expect("default windows are valid")
    }
}

impl EstimatorWindows {
    /// Builds windows from the eight positional parameters
    /// `(candles_back_up, candles_back_down, delta_back_up, delta_back_down,
    /// candles_up, candles_down, delta_up, delta_down)`.
    pub fn from_positional(v: [f64; 8]) -> Result<Self> {
        let bars = |x: f64, name: &str| -> Result<usize> {
            if x.fract() != 0.0 || x < 1.0 {
                return Err(Error::InvalidInput(format!("{name} must be a positive integer, got {x}")));
            }
            Ok(x as usize)
        };
        let w = Self {
            candles_back_up: bars(v[0], "candles_back_up")?,
            candles_back_down: bars(v[1], "candles_back_down")?,
            delta_back_up: v[2],
            delta_back_down: v[3],
            candles_up: bars(v[4], "candles_up")?,
            candles_down: bars(v[5], "candles_down")?,
            delta_up: v[6],
            delta_down: v[7],
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let windows = [self.candles_back_up, self.candles_back_down, self.candles_up, self.candles_down];
        if windows.contains(&0) {
            return Err(Error::InvalidInput("window lengths must be >= 1 bar".into()));
        }
        let deltas = [self.delta_back_up, self.delta_back_down, self.delta_up, self.delta_down];
        if deltas.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::InvalidInput("thresholds must be finite and >= 0 pips".into()));
        }
        Ok(())
    }

    pub fn positional(&self) -> [f64; 8] {
        [
            self.candles_back_up as f64,
            self.candles_back_down as f64,
            self.delta_back_up,
            self.delta_back_down,
            self.candles_up as f64,
            self.candles_down as f64,
            self.delta_up,
            self.delta_down,
        ]
    }

    fn max_lookback(&self) -> usize {
        self.candles_back_up.max(self.candles_back_down)
    }

    fn max_lookahead(&self) -> usize {
        self.candles_up.max(self.candles_down)
    }
}

/// Raw (prior, future) transition counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CountMatrix {
    counts: [[u64; 3]; 3],
}

impl CountMatrix {
    pub fn get(&self, prior: Trend, future: Trend) -> u64 {
        self.counts[prior.index()][future.index()]
    }

    pub fn row(&self, prior: Trend) -> [u64; 3] {
        self.counts[prior.index()]
    }

    pub fn row_total(&self, prior: Trend) -> u64 {
        self.counts[prior.index()].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    fn bump(&mut self, prior: Trend, future: Trend) {
        self.counts[prior.index()][future.index()] += 1;
    }

    /// Row-normalised probabilities, `None` when the prior regime was never
    /// observed.
    ///
    /// Entries equal `count / total` except that the last non-empty column
    /// absorbs the floating-point remainder (a change of at most a couple of
    /// ulps), which makes the left-to-right row sum exactly one.
    pub fn row_probabilities(&self, prior: Trend) -> Option<[f64; 3]> {
        let row = self.row(prior);
        let total: u64 = row.iter().sum();
        if total == 0 {
            return None;
        }
        let n = total as f64;
        let mut p = row.map(|c| c as f64 / n);
        let last = row.iter().rposition(|&c| c > 0)?;
        let head: f64 = p[..last].iter().sum();
        p[last] = 1.0 - head;
        Some(p)
    }

    pub fn unobserved(&self) -> Vec<Trend> {
        Trend::ALL.into_iter().filter(|&t| self.row_total(t) == 0).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendEstimate {
    pub matrix: TransitionMatrix,
    pub counts: CountMatrix,
}

fn prior_trend(opens: &[f64], i: usize, w: &EstimatorWindows, up: f64, down: f64) -> Trend {
    let mut t = Trend::Sideway;
    if opens[i] - opens[i - w.candles_back_up] >= up {
        t = Trend::Up;
    }
    if opens[i - w.candles_back_down] - opens[i] >= down {
        t = Trend::Down;
    }
    t
}

fn future_trend(opens: &[f64], i: usize, w: &EstimatorWindows, up: f64, down: f64) -> Trend {
    if opens[i + w.candles_up] - opens[i] >= up {
        Trend::Up
    } else if opens[i] - opens[i + w.candles_down] >= down {
        Trend::Down
    } else {
        Trend::Sideway
    }
}

/// Counts (prior, future) trend pairs over the series.
pub fn classify_counts(opens: &[f64], w: &EstimatorWindows) -> Result<CountMatrix> {
    w.validate()?;
    let n = opens.len();
    if n <= w.max_lookback() + w.max_lookahead() {
        return Err(Error::InvalidInput(format!(
            "series of {n} bars is too short for lookback {} + lookahead {}",
            w.max_lookback(),
            w.max_lookahead()
        )));
    }
    if opens.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("open prices must be finite".into()));
    }
    let up = w.delta_up / PIP;
    let down = w.delta_down / PIP;

    let mut prior = vec![Trend::Sideway; n];
    for (i, slot) in prior.iter_mut().enumerate().skip(w.max_lookback()) {
        *slot = prior_trend(opens, i, w, up, down);
    }

    let mut counts = CountMatrix::default();
    for (i, &p) in prior.iter().enumerate().take(n - w.max_lookahead()) {
        counts.bump(p, future_trend(opens, i, w, up, down));
    }
    Ok(counts)
}

/// Estimates the (up, down, sideway) transition matrix. `dt` is the time
/// step, in years, attached to the result.
///
/// A prior regime that never occurs yields [`Error::UnobservedRegimes`],
/// which still carries the counts.
pub fn estimate_transition_matrix(opens: &[f64], w: &EstimatorWindows, dt: f64) -> Result<TrendEstimate> {
    let counts = classify_counts(opens, w)?;
    let missing = counts.unobserved();
    if !missing.is_empty() {
        return Err(Error::UnobservedRegimes {
            names: missing.iter().map(|t| t.name()).collect(),
            counts,
        });
    }
    let rows = Trend::ALL
        .iter()
        .map(|&t| counts.row_probabilities(t).expect("observed row").to_vec())
        .collect();
    Ok(TrendEstimate { matrix: TransitionMatrix::new(rows, dt)?, counts })
}

/// Parses a single-column price file. A non-numeric first line is treated
/// as a header; blank lines are ignored.
pub fn parse_open_prices(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim().trim_end_matches(',');
        if line.is_empty() {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if lineno == 0 => {}
            Err(_) => {
                return Err(Error::Parse(format!("line {}: '{}' is not a price", lineno + 1, raw.trim())));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Parse("no prices found".into()));
    }
    Ok(out)
}

fn trend_from_name(s: &str) -> Option<Trend> {
    Trend::ALL.into_iter().find(|t| t.name() == s)
}

impl TransitionMatrix {
    /// `state,up,down,sideway` CSV for a three-state matrix.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("state,up,down,sideway\n");
        for (i, t) in Trend::ALL.iter().enumerate().take(self.len()) {
            let row = (0..self.len()).map(|j| self.get(i, j).to_string()).collect::<Vec<_>>();
            let _ = writeln!(out, "{},{}", t.name(), row.join(","));
        }
        out
    }
}

/// Parses the `state,up,down,sideway` matrix format. Rows may appear in any
/// order but all three must be present.
pub fn parse_matrix_csv(text: &str, dt: f64) -> Result<TransitionMatrix> {
    let mut rows: [Option<Vec<f64>>; 3] = [None, None, None];
    let mut header_seen = false;
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !header_seen {
            if fields != ["state", "up", "down", "sideway"] {
                return Err(Error::Parse(format!("expected header 'state,up,down,sideway', got '{line}'")));
            }
            header_seen = true;
            continue;
        }
        if fields.len() != 4 {
            return Err(Error::Parse(format!("expected 4 fields in '{line}'")));
        }
        let t = trend_from_name(fields[0])
            .ok_or_else(|| Error::Parse(format!("unknown state '{}'", fields[0])))?;
        let vals = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| Error::Parse(format!("'{f}' is not a number"))))
            .collect::<Result<Vec<_>>>()?;
        if rows[t.index()].replace(vals).is_some() {
            return Err(Error::Parse(format!("duplicate row '{}'", t.name())));
        }
    }
    let mut out = Vec::with_capacity(3);
    for (t, row) in Trend::ALL.iter().zip(rows) {
        out.push(row.ok_or_else(|| Error::Parse(format!("missing row '{}'", t.name())))?);
    }
    TransitionMatrix::new(out, dt)
}

/// Probability rows of the observed prior regimes only, in the matrix CSV
/// layout.
pub fn observed_rows_csv(counts: &CountMatrix) -> String {
    let mut out = String::from("state,up,down,sideway\n");
    for t in Trend::ALL {
        if let Some(p) = counts.row_probabilities(t) {
            let _ = writeln!(out, "{},{},{},{}", t.name(), p[0], p[1], p[2]);
        }
    }
    out
}

/// Counts CSV; the first line is a comment echoing the eight window
/// parameters.
pub fn counts_csv(counts: &CountMatrix, w: &EstimatorWindows) -> String {
    let p = w.positional();
    let mut out = format!(
        "# candles_back_up={},candles_back_down={},delta_back_up={},delta_back_down={},\
         candles_up={},candles_down={},delta_up={},delta_down={}\n",
        p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7]
    );
    out.push_str("state,up,down,sideway\n");
    for t in Trend::ALL {
        let r = counts.row(t);
        let _ = writeln!(out, "{},{},{},{}", t.name(), r[0], r[1], r[2]);
    }
    out
}
