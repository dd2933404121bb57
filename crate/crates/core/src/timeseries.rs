//! Monthly series: the carrier type for tariffs, costs, prices, yields,
//! utilities and deployment counts, plus CSV ingestion and linear
//! interpolation of coarse (e.g. quarterly) anchor data.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A calendar month. Ordered chronologically, printed as `YYYY-MM`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthIndex {
    year: i32,
    month: u8,
}

impl MonthIndex {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) || !(0..=9999).contains(&year) {
            return Err(Error::InvalidMonth(format!("{year:04}-{month:02}")));
        }
        Ok(Self {
            year,
            month: month as u8,
        })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u32 {
        u32::from(self.month)
    }

    /// Months since year 0, January.
    pub fn ordinal(self) -> i64 {
        i64::from(self.year) * 12 + i64::from(self.month) - 1
    }

    pub fn from_ordinal(ordinal: i64) -> Self {
        let year = ordinal.div_euclid(12) as i32;
        let month = (ordinal.rem_euclid(12) + 1) as u8;
        Self { year, month }
    }

    pub fn succ(self) -> Self {
        self.offset(1)
    }

    pub fn pred(self) -> Self {
        self.offset(-1)
    }

    pub fn offset(self, months: i64) -> Self {
        Self::from_ordinal(self.ordinal() + months)
    }

    /// Signed number of months from `self` to `other`.
    pub fn months_until(self, other: MonthIndex) -> i64 {
        other.ordinal() - self.ordinal()
    }
}

impl fmt::Display for MonthIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for MonthIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidMonth(s.to_string());
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 || !y.bytes().chain(m.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        MonthIndex::new(year, month).map_err(|_| bad())
    }
}

/// Inclusive range of months.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MonthRange {
    pub start: MonthIndex,
    pub end: MonthIndex,
}

impl MonthRange {
    pub fn new(start: MonthIndex, end: MonthIndex) -> Result<Self> {
        if end < start {
            return Err(Error::InvalidArgument(format!(
                "range end {end} precedes start {start}"
            )));
        }
        Ok(Self { start, end })
    }

    pub fn len(&self) -> usize {
        (self.start.months_until(self.end) + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, month: MonthIndex) -> bool {
        self.start <= month && month <= self.end
    }

    pub fn contains_range(&self, other: &MonthRange) -> bool {
        self.contains(other.start) && self.contains(other.end)
    }

    pub fn intersect(&self, other: &MonthRange) -> Option<MonthRange> {
        let start = self.start.max(other.start);
        let end = self.end.min(other.end);
        (start <= end).then_some(MonthRange { start, end })
    }

    pub fn months(&self) -> impl Iterator<Item = MonthIndex> {
        let start = self.start;
        (0..self.len() as i64).map(move |i| start.offset(i))
    }
}

impl fmt::Display for MonthRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

/// Unit tag carried by a series. Checked against plausible value ranges at
/// load time so that e.g. a Euro/kWp cost file is not read as a tariff.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unit {
    EurPerKwh,
    EurPerKwp,
    Fraction,
    Count,
    Dimensionless,
}

impl Unit {
    pub fn tag(self) -> &'static str {
        match self {
            Unit::EurPerKwh => "Euro/kWh",
            Unit::EurPerKwp => "Euro/kWp",
            Unit::Fraction => "fraction",
            Unit::Count => "count",
            Unit::Dimensionless => "1",
        }
    }

    pub fn is_plausible(self, value: f64) -> bool {
        match self {
            Unit::EurPerKwh => (0.0..=5.0).contains(&value),
            Unit::EurPerKwp => (10.0..=100_000.0).contains(&value),
            Unit::Fraction => (-1.0..=1.0).contains(&value),
            Unit::Count => value >= 0.0,
            Unit::Dimensionless => value.is_finite(),
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Gap-free monthly series: value `i` belongs to `start + i` months.
#[derive(Clone, Debug, PartialEq)]
pub struct MonthlyTimeSeries {
    start: MonthIndex,
    values: Vec<f64>,
    unit: Unit,
}

impl MonthlyTimeSeries {
    pub fn new(start: MonthIndex, values: Vec<f64>, unit: Unit) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("series must hold at least one value".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite value {} at {}",
                values[i],
                start.offset(i as i64)
            )));
        }
        Ok(Self { start, values, unit })
    }

    /// Builds a series from values already known to be finite and non-empty.
    pub(crate) fn from_parts(start: MonthIndex, values: Vec<f64>, unit: Unit) -> Self {
        debug_assert!(!values.is_empty());
        Self { start, values, unit }
    }

    pub fn constant(range: MonthRange, value: f64, unit: Unit) -> Result<Self> {
        Self::new(range.start, vec![value; range.len()], unit)
    }

    pub fn start(&self) -> MonthIndex {
        self.start
    }

    pub fn end(&self) -> MonthIndex {
        self.start.offset(self.values.len() as i64 - 1)
    }

    pub fn range(&self) -> MonthRange {
        MonthRange {
            start: self.start,
            end: self.end(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, month: MonthIndex) -> Option<f64> {
        let i = self.start.months_until(month);
        usize::try_from(i).ok().and_then(|i| self.values.get(i).copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (MonthIndex, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.start.offset(i as i64), v))
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Restriction to `range`, which must lie inside the series.
    pub fn slice(&self, range: MonthRange) -> Result<Self> {
        if !self.range().contains_range(&range) {
            return Err(Error::Misaligned(format!(
                "range {range} not covered by series {}",
                self.range()
            )));
        }
        let from = self.start.months_until(range.start) as usize;
        Ok(Self::from_parts(
            range.start,
            self.values[from..from + range.len()].to_vec(),
            self.unit,
        ))
    }

    /// Elementwise map into a new series with the given unit.
    pub fn map(&self, unit: Unit, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.start, self.values.iter().map(|&v| f(v)).collect(), unit)
    }

    pub fn with_unit(mut self, unit: Unit) -> Self {
        self.unit = unit;
        self
    }

    pub fn ensure_same_range(&self, other: &Self, what: &str) -> Result<()> {
        if self.range() != other.range() {
            return Err(Error::Misaligned(format!(
                "{what}: {} vs {}",
                self.range(),
                other.range()
            )));
        }
        Ok(())
    }
}

fn read_rows(path: &Path, unit: Unit) -> Result<Vec<(u64, MonthIndex, f64)>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(std::io::BufReader::new(file));

    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let headers = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "month" || &headers[1] != "value" {
        if headers.is_empty() || headers.iter().all(str::is_empty) {
            return Err(Error::EmptyFile {
                path: path.to_path_buf(),
            });
        }
        return Err(Error::BadHeader {
            path: path.to_path_buf(),
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(parse_err(line, format!("expected 2 fields, got {}", record.len())));
        }
        let month: MonthIndex = record[0]
            .parse()
            .map_err(|e: Error| parse_err(line, e.to_string()))?;
        let value: f64 = record[1]
            .parse()
            .map_err(|_| parse_err(line, format!("unparsable value {:?}", &record[1])))?;
        if !value.is_finite() {
            return Err(parse_err(line, format!("non-finite value {:?}", &record[1])));
        }
        if !unit.is_plausible(value) {
            return Err(Error::UnitMismatch {
                path: path.to_path_buf(),
                line,
                value,
                unit: unit.tag().to_string(),
            });
        }
        rows.push((line, month, value));
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    rows.sort_by_key(|&(_, month, _)| month);
    if let Some(w) = rows.windows(2).find(|w| w[0].1 == w[1].1) {
        let (line, month) = (w[0].0.max(w[1].0), w[1].1);
        return Err(Error::DuplicateMonth {
            path: path.to_path_buf(),
            line,
            month,
        });
    }
    Ok(rows)
}

/// Loads a monthly CSV (`month,value`). Rows may appear in any order but
/// must cover a contiguous month range exactly once.
pub fn load_series(path: impl AsRef<Path>, unit: Unit) -> Result<MonthlyTimeSeries> {
    let path = path.as_ref();
    let rows = read_rows(path, unit)?;
    for w in rows.windows(2) {
        if w[1].1 != w[0].1.succ() {
            return Err(Error::Gap {
                path: path.to_path_buf(),
                missing: w[0].1.succ(),
            });
        }
    }
    let start = rows[0].1;
    Ok(MonthlyTimeSeries::from_parts(
        start,
        rows.into_iter().map(|(_, _, v)| v).collect(),
        unit,
    ))
}

/// Loads a CSV of sparse anchor points and linearly interpolates them to
/// monthly resolution. A file that is already monthly loads unchanged.
pub fn load_anchored_series(path: impl AsRef<Path>, unit: Unit) -> Result<MonthlyTimeSeries> {
    let rows = read_rows(path.as_ref(), unit)?;
    if rows.len() == 1 {
        return Ok(MonthlyTimeSeries::from_parts(rows[0].1, vec![rows[0].2], unit));
    }
    let anchors: Vec<_> = rows.into_iter().map(|(_, m, v)| (m, v)).collect();
    Ok(interpolate_to_monthly(&anchors)?.with_unit(unit))
}

/// Linear interpolation between consecutive anchors. Anchors are reproduced
/// exactly and nothing is extrapolated past the first or last anchor.
pub fn interpolate_to_monthly(anchors: &[(MonthIndex, f64)]) -> Result<MonthlyTimeSeries> {
    if anchors.len() < 2 {
        return Err(Error::TooFewAnchors(anchors.len()));
    }
    for w in anchors.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::NonMonotoneAnchors {
                prev: w[0].0,
                next: w[1].0,
            });
        }
    }
    let mut values = Vec::with_capacity(anchors[0].0.months_until(anchors[anchors.len() - 1].0) as usize + 1);
    for w in anchors.windows(2) {
        let ((m0, left), (m1, right)) = (w[0], w[1]);
        let span = m0.months_until(m1);
        for k in 0..span {
            if k == 0 {
                values.push(left);
            } else {
                values.push(left + (right - left) * k as f64 / span as f64);
            }
        }
    }
    values.push(anchors[anchors.len() - 1].1);
    MonthlyTimeSeries::new(anchors[0].0, values, Unit::Dimensionless)
}

/// Restricts every series to the intersection of their ranges.
pub fn align(series: &[&MonthlyTimeSeries]) -> Result<(MonthRange, Vec<MonthlyTimeSeries>)> {
    let first = series
        .first()
        .ok_or_else(|| Error::InvalidArgument("align needs at least one series".into()))?;
    let range = series
        .iter()
        .skip(1)
        .try_fold(first.range(), |acc, s| acc.intersect(&s.range()))
        .ok_or(Error::EmptyIntersection)?;
    let aligned = series
        .iter()
        .map(|s| s.slice(range))
        .collect::<Result<Vec<_>>>()?;
    Ok((range, aligned))
}

/// Writes `month,value` rows using the shortest round-trip float format.
pub fn write_series(path: impl AsRef<Path>, series: &MonthlyTimeSeries) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    writeln!(out, "month,value").map_err(io_err)?;
    for (month, value) in series.iter() {
        writeln!(out, "{month},{value}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(s: &str) -> MonthIndex {
        s.parse().unwrap()
    }

    fn csv_file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn month_successor_rolls_over_year() {
        assert_eq!(m("2006-12").succ(), m("2007-01"));
        assert_eq!(m("2007-01").pred(), m("2006-12"));
        assert_eq!(m("2006-01").months_until(m("2014-12")), 107);
        assert_eq!(m("2009-03").to_string(), "2009-03");
    }

    #[test]
    fn month_parse_rejects_bad_input() {
        for bad in ["2006-13", "2006-00", "2006-1", "06-01", "2006/01", "abcd-ef", ""] {
            assert!(bad.parse::<MonthIndex>().is_err(), "{bad}");
        }
    }

    #[test]
    fn load_two_rows() {
        let f = csv_file("month,value\n2006-01,0.518\n2006-02,0.518\n");
        let s = load_series(f.path(), Unit::EurPerKwh).unwrap();
        assert_eq!(s.start(), m("2006-01"));
        assert_eq!(s.values(), &[0.518, 0.518]);
        assert_eq!(s.unit(), Unit::EurPerKwh);
    }

    #[test]
    fn load_sorts_rows() {
        let f = csv_file("month,value\n2006-02,2\n2006-01,1\n");
        let s = load_series(f.path(), Unit::Count).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0]);
    }

    #[test]
    fn load_reports_gap() {
        let f = csv_file("month,value\n2006-01,1.0\n2006-03,2.0\n");
        match load_series(f.path(), Unit::Count) {
            Err(Error::Gap { missing, .. }) => assert_eq!(missing, m("2006-02")),
            other => panic!("expected gap, got {other:?}"),
        }
    }

    #[test]
    fn load_reports_duplicate() {
        let f = csv_file("month,value\n2006-01,1.0\n2006-01,2.0\n");
        match load_series(f.path(), Unit::Count) {
            Err(Error::DuplicateMonth { month, line, .. }) => {
                assert_eq!(month, m("2006-01"));
                assert_eq!(line, 3);
            }
            other => panic!("expected duplicate, got {other:?}"),
        }
    }

    #[test]
    fn load_reports_bad_month_and_value() {
        let f = csv_file("month,value\n2006-13,1.0\n");
        match load_series(f.path(), Unit::Count) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("2006-13"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        let f = csv_file("month,value\n2006-01,1,0\n");
        assert!(matches!(load_series(f.path(), Unit::Count), Err(Error::Parse { .. })));
        let f = csv_file("month,value\n2006-01,abc\n");
        assert!(matches!(load_series(f.path(), Unit::Count), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn load_reports_empty() {
        let f = csv_file("");
        assert!(matches!(load_series(f.path(), Unit::Count), Err(Error::EmptyFile { .. })));
        let f = csv_file("month,value\n");
        assert!(matches!(load_series(f.path(), Unit::Count), Err(Error::EmptyFile { .. })));
    }

    #[test]
    fn load_rejects_unit_mismatch() {
        let f = csv_file("month,value\n2006-01,4500\n");
        assert!(matches!(
            load_series(f.path(), Unit::EurPerKwh),
            Err(Error::UnitMismatch { line: 2, .. })
        ));
        assert!(load_series(f.path(), Unit::EurPerKwp).is_ok());
        let f = csv_file("month,value\n2006-01,0.43\n");
        assert!(matches!(
            load_series(f.path(), Unit::EurPerKwp),
            Err(Error::UnitMismatch { .. })
        ));
    }

    #[test]
    fn load_rejects_wrong_header() {
        let f = csv_file("date,price\n2006-01,1\n");
        assert!(matches!(load_series(f.path(), Unit::Count), Err(Error::BadHeader { .. })));
    }

    #[test]
    fn anchored_load_interpolates_quarters() {
        let f = csv_file("month,value\n2007-01,100\n2007-04,130\n");
        let s = load_anchored_series(f.path(), Unit::EurPerKwp).unwrap();
        assert_eq!(s.values(), &[100.0, 110.0, 120.0, 130.0]);
        assert_eq!(s.unit(), Unit::EurPerKwp);
    }

    #[test]
    fn interpolation_examples() {
        let s = interpolate_to_monthly(&[(m("2007-01"), 100.0), (m("2007-04"), 130.0)]).unwrap();
        assert_eq!(s.get(m("2007-02")), Some(110.0));
        assert_eq!(s.get(m("2007-03")), Some(120.0));
        assert_eq!(s.end(), m("2007-04"));

        let s = interpolate_to_monthly(&[(m("2007-01"), 5.0), (m("2007-02"), 5.0)]).unwrap();
        assert_eq!(s.values(), &[5.0, 5.0]);

        let s = interpolate_to_monthly(&[(m("2007-01"), 0.0), (m("2007-07"), 6.0)]).unwrap();
        assert_eq!(s.get(m("2007-04")), Some(3.0));
    }

    #[test]
    fn interpolation_errors() {
        assert!(matches!(
            interpolate_to_monthly(&[(m("2007-01"), 1.0)]),
            Err(Error::TooFewAnchors(1))
        ));
        assert!(matches!(
            interpolate_to_monthly(&[(m("2007-03"), 1.0), (m("2007-01"), 2.0)]),
            Err(Error::NonMonotoneAnchors { .. })
        ));
        assert!(matches!(
            interpolate_to_monthly(&[(m("2007-03"), 1.0), (m("2007-03"), 2.0)]),
            Err(Error::NonMonotoneAnchors { .. })
        ));
    }

    fn series(start: &str, end: &str) -> MonthlyTimeSeries {
        let range = MonthRange::new(m(start), m(end)).unwrap();
        MonthlyTimeSeries::constant(range, 1.0, Unit::Count).unwrap()
    }

    #[test]
    fn align_examples() {
        let a = series("2006-01", "2014-12");
        let b = series("2006-10", "2015-06");
        let (range, out) = align(&[&a, &b]).unwrap();
        assert_eq!(range, MonthRange::new(m("2006-10"), m("2014-12")).unwrap());
        assert!(out.iter().all(|s| s.range() == range));

        let (range, _) = align(&[&a, &a]).unwrap();
        assert_eq!(range, a.range());

        let a = series("2006-01", "2006-06");
        let b = series("2007-01", "2007-06");
        assert!(matches!(align(&[&a, &b]), Err(Error::EmptyIntersection)));
    }

    #[test]
    fn series_rejects_non_finite() {
        assert!(MonthlyTimeSeries::new(m("2006-01"), vec![1.0, f64::NAN], Unit::Count).is_err());
        assert!(MonthlyTimeSeries::new(m("2006-01"), vec![], Unit::Count).is_err());
    }

    proptest! {
        #[test]
        fn write_then_load_is_bit_exact(values in prop::collection::vec(0.0f64..1e6, 1..40), year in 1990i32..2030, month in 1u32..=12) {
            let s = MonthlyTimeSeries::new(MonthIndex::new(year, month).unwrap(), values, Unit::Count).unwrap();
            let f = tempfile::NamedTempFile::new().unwrap();
            write_series(f.path(), &s).unwrap();
            let back = load_series(f.path(), Unit::Count).unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn interpolation_is_affine_between_anchors(
            left in -1e3f64..1e3, right in -1e3f64..1e3, span in 1i64..24, k in 0i64..24,
        ) {
            let k = k % (span + 1);
            let a = m("2010-05");
            let s = interpolate_to_monthly(&[(a, left), (a.offset(span), right)]).unwrap();
            let p = k as f64 / span as f64;
            let expected = (1.0 - p) * left + p * right;
            let got = s.get(a.offset(k)).unwrap();
            prop_assert!((got - expected).abs() <= 1e-12 * expected.abs().max(left.abs()).max(right.abs()).max(1.0));
            prop_assert_eq!(s.get(a), Some(left));
            prop_assert_eq!(s.get(a.offset(span)), Some(right));
        }

        #[test]
        fn align_range_is_inside_every_input(
            s1 in 0i64..60, l1 in 1i64..60, s2 in 0i64..60, l2 in 1i64..60, s3 in 0i64..60, l3 in 1i64..60,
        ) {
            let base = m("2005-01");
            let mk = |s: i64, l: i64| MonthlyTimeSeries::constant(
                MonthRange::new(base.offset(s), base.offset(s + l - 1)).unwrap(), 0.0, Unit::Count).unwrap();
            let all = [mk(s1, l1), mk(s2, l2), mk(s3, l3)];
            if let Ok((range, out)) = align(&all.iter().collect::<Vec<_>>()) {
                for s in &all {
                    prop_assert!(s.range().contains_range(&range));
                }
                prop_assert!(out.iter().all(|s| s.range() == range));
            }
        }
    }
}
