//! Frequency tables for the denominator (all text) and numerator (contexts
//! of interest) samples, with threshold pruning.
//!
//! Pruning drops stored entries but never changes the sample totals: the
//! totals are the sizes of the observed samples, and estimates for elements
//! that survive a threshold must be identical with or without pruning.
//!
//! Snapshot format: a header line `#n_de=<int> n_nu=<int> theta=<int|none>`
//! followed by one `first<TAB>second<TAB>f_de<TAB>f_nu` line per element,
//! sorted lexicographically by `(first, second)`.

use std::borrow::Borrow;
use std::collections::{BTreeMap, HashMap};
use std::io::{self, BufRead, Write};

use serde::Serialize;

use crate::corpus::Bigram;
use crate::{Error, Result};

/// One side of a count table: element frequencies plus the total number of
/// observations, accumulated before any pruning. Stored counts are always
/// at least 1; absent elements have frequency 0.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CountSide {
    freq: HashMap<Bigram, u64>,
    total: u64,
}

impl CountSide {
    #[must_use]
    pub fn new() -> CountSide {
        CountSide::default()
    }

    /// Record one observation; the element is cloned only when first seen.
    pub fn observe(&mut self, element: &Bigram) {
        self.total += 1;
        if let Some(count) = self.freq.get_mut(element) {
            *count += 1;
        } else {
            self.freq.insert(element.clone(), 1);
        }
    }

    /// Observed frequency of `element` (0 if absent or pruned).
    #[must_use]
    pub fn count(&self, element: &Bigram) -> u64 {
        self.freq.get(element).copied().unwrap_or(0)
    }

    /// Total number of observations, unaffected by pruning.
    #[must_use]
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of stored entries.
    #[must_use]
    pub fn entry_count(&self) -> usize {
        self.freq.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Bigram, u64)> {
        self.freq.iter().map(|(k, &v)| (k, v))
    }
}

/// Count every element of the sample. Accepts owned or borrowed elements.
pub fn count_side<I>(elements: I) -> CountSide
where
    I: IntoIterator,
    I::Item: Borrow<Bigram>,
{
    let mut side = CountSide::new();
    for element in elements {
        side.observe(element.borrow());
    }
    side
}

/// Pointwise sum of two sides; totals add. Associative and commutative with
/// the empty side as identity, so shards may be counted independently and
/// combined in any order.
#[must_use]
pub fn merge(a: &CountSide, b: &CountSide) -> CountSide {
    let (big, small) = if a.freq.len() >= b.freq.len() {
        (a, b)
    } else {
        (b, a)
    };
    let mut freq = big.freq.clone();
    for (k, &v) in &small.freq {
        *freq.entry(k.clone()).or_insert(0) += v;
    }
    CountSide {
        freq,
        total: a.total + b.total,
    }
}

/// Paired denominator/numerator counts. `prune_threshold` records the
/// threshold the numerator side was pruned at, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    pub de: CountSide,
    pub nu: CountSide,
    prune_threshold: Option<u64>,
}

impl CountTable {
    #[must_use]
    pub fn from_sides(de: CountSide, nu: CountSide) -> CountTable {
        CountTable {
            de,
            nu,
            prune_threshold: None,
        }
    }

    /// Count both samples, pruning the numerator side at `theta` if given.
    ///
    /// With a positive threshold this is two-pass: the numerator sample is
    /// counted fully and pruned first, and the denominator pass then stores
    /// entries only for elements that survived — their frequencies are the
    /// only ones a thresholded estimator can ever read. Totals still count
    /// every observation on both sides.
    pub fn build<I, J>(de_elements: I, nu_elements: J, theta: Option<u64>) -> CountTable
    where
        I: IntoIterator,
        I::Item: Borrow<Bigram>,
        J: IntoIterator,
        J::Item: Borrow<Bigram>,
    {
        let nu = count_side(nu_elements);
        match theta {
            None | Some(0) => CountTable {
                de: count_side(de_elements),
                nu,
                prune_threshold: theta,
            },
            Some(theta) => {
                let mut nu_pruned = nu;
                nu_pruned.freq.retain(|_, &mut c| c > theta);
                let mut de = CountSide::new();
                for element in de_elements {
                    let element = element.borrow();
                    de.total += 1;
                    if nu_pruned.freq.contains_key(element) {
                        if let Some(count) = de.freq.get_mut(element) {
                            *count += 1;
                        } else {
                            de.freq.insert(element.clone(), 1);
                        }
                    }
                }
                CountTable {
                    de,
                    nu: nu_pruned,
                    prune_threshold: Some(theta),
                }
            }
        }
    }

    /// Threshold the numerator side: every numerator entry with count
    /// `<= theta` is removed, and denominator entries are kept only for
    /// elements that still have a live numerator entry (no estimator reads
    /// a denominator frequency otherwise). Totals are unchanged. A zero
    /// threshold prunes nothing and only records the field.
    #[must_use]
    pub fn prune_nu_below(mut self, theta: u64) -> CountTable {
        if theta > 0 {
            self.nu.freq.retain(|_, &mut c| c > theta);
            let nu = &self.nu.freq;
            self.de.freq.retain(|k, _| nu.contains_key(k));
        }
        self.prune_threshold = Some(theta);
        self
    }

    /// The threshold the numerator side was pruned at, if any.
    #[must_use]
    pub fn prune_threshold(&self) -> Option<u64> {
        self.prune_threshold
    }

    #[must_use]
    pub fn f_de(&self, element: &Bigram) -> u64 {
        self.de.count(element)
    }

    #[must_use]
    pub fn f_nu(&self, element: &Bigram) -> u64 {
        self.nu.count(element)
    }

    /// Deterministic storage summary.
    #[must_use]
    pub fn footprint(&self) -> Footprint {
        let key_bytes: u64 = self
            .de
            .entries()
            .chain(self.nu.entries())
            .map(|(k, _)| (k.first.len() + k.second.len()) as u64)
            .sum();
        let entries = (self.de.entry_count() + self.nu.entry_count()) as u64;
        Footprint {
            entry_count_de: self.de.entry_count(),
            entry_count_nu: self.nu.entry_count(),
            estimated_bytes: TABLE_OVERHEAD_BYTES + entries * ENTRY_OVERHEAD_BYTES + key_bytes,
        }
    }

    /// Write the snapshot format (sorted, one line per element of either
    /// side, absent-side frequencies written as 0).
    pub fn write_snapshot<W: Write>(&self, mut out: W) -> io::Result<()> {
        let theta = match self.prune_threshold {
            Some(t) => t.to_string(),
            None => "none".to_string(),
        };
        writeln!(
            out,
            "#n_de={} n_nu={} theta={theta}",
            self.de.total, self.nu.total
        )?;
        let mut rows: BTreeMap<&Bigram, (u64, u64)> = BTreeMap::new();
        for (k, v) in self.de.entries() {
            rows.entry(k).or_insert((0, 0)).0 = v;
        }
        for (k, v) in self.nu.entries() {
            rows.entry(k).or_insert((0, 0)).1 = v;
        }
        for (k, (f_de, f_nu)) in rows {
            writeln!(out, "{}\t{}\t{f_de}\t{f_nu}", k.first, k.second)?;
        }
        Ok(())
    }

    /// Parse a snapshot produced by [`CountTable::write_snapshot`].
    pub fn read_snapshot<R: BufRead>(reader: R) -> Result<CountTable> {
        let mut lines = reader.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            reason: "missing snapshot header".into(),
        })?;
        let header = header.map_err(|e| Error::Parse {
            line: 1,
            reason: format!("unreadable header: {e}"),
        })?;
        let (n_de, n_nu, prune_threshold) = parse_snapshot_header(&header)?;
        let mut de = CountSide {
            freq: HashMap::new(),
            total: n_de,
        };
        let mut nu = CountSide {
            freq: HashMap::new(),
            total: n_nu,
        };
        for (idx, line) in lines {
            let line_no = idx + 1;
            let line = line.map_err(|e| Error::Parse {
                line: line_no,
                reason: format!("unreadable line: {e}"),
            })?;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!("expected 4 tab-separated fields, found {}", fields.len()),
                });
            }
            let parse_count = |s: &str| {
                s.parse::<u64>().map_err(|_| Error::Parse {
                    line: line_no,
                    reason: format!("invalid count `{s}`"),
                })
            };
            let f_de = parse_count(fields[2])?;
            let f_nu = parse_count(fields[3])?;
            let key = Bigram::new(fields[0], fields[1]);
            if f_de > 0 {
                de.freq.insert(key.clone(), f_de);
            }
            if f_nu > 0 {
                nu.freq.insert(key, f_nu);
            }
        }
        Ok(CountTable {
            de,
            nu,
            prune_threshold,
        })
    }
}

fn parse_snapshot_header(header: &str) -> Result<(u64, u64, Option<u64>)> {
    let bad = |reason: String| Error::Parse { line: 1, reason };
    let body = header
        .strip_prefix('#')
        .ok_or_else(|| bad("snapshot header must start with `#`".into()))?;
    let mut n_de = None;
    let mut n_nu = None;
    let mut theta = None;
    for field in body.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| bad(format!("malformed header field `{field}`")))?;
        match key {
            "n_de" | "n_nu" => {
                let parsed = value
                    .parse::<u64>()
                    .map_err(|_| bad(format!("invalid total `{value}`")))?;
                if key == "n_de" {
                    n_de = Some(parsed);
                } else {
                    n_nu = Some(parsed);
                }
            }
            "theta" => {
                theta = Some(if value == "none" {
                    None
                } else {
                    Some(
                        value
                            .parse::<u64>()
                            .map_err(|_| bad(format!("invalid theta `{value}`")))?,
                    )
                });
            }
            other => return Err(bad(format!("unknown header field `{other}`"))),
        }
    }
    match (n_de, n_nu, theta) {
        (Some(d), Some(n), Some(t)) => Ok((d, n, t)),
        _ => Err(bad("header must define n_de, n_nu and theta".into())),
    }
}

/// Deterministic storage-footprint summary: exact entry counts plus a byte
/// estimate derived from them (per-entry bookkeeping plus key bytes), so
/// repeated runs report identical figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Footprint {
    pub entry_count_de: usize,
    pub entry_count_nu: usize,
    pub estimated_bytes: u64,
}

/// Modeled cost of one stored entry: two string headers, a count, and hash
/// bucket bookkeeping.
pub const ENTRY_OVERHEAD_BYTES: u64 = 72;
/// Modeled fixed cost of the two map structures.
pub const TABLE_OVERHEAD_BYTES: u64 = 96;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{
        extract_bigrams, extract_ne_left_contexts, generate_synthetic_corpus, SynthParams,
    };
    use proptest::prelude::*;
    use std::io::Cursor;

    fn b(first: &str, second: &str) -> Bigram {
        Bigram::new(first, second)
    }

    fn side(entries: &[(&str, &str, u64)], extra_total: u64) -> CountSide {
        let mut s = CountSide::new();
        for (f, sec, n) in entries {
            for _ in 0..*n {
                s.observe(&b(f, sec));
            }
        }
        s.total += extra_total;
        s
    }

    #[test]
    fn counts_repeated_elements() {
        let s = count_side(vec![b("a", "b"), b("c", "d"), b("a", "b")]);
        assert_eq!(s.count(&b("a", "b")), 2);
        assert_eq!(s.count(&b("c", "d")), 1);
        assert_eq!(s.count(&b("x", "y")), 0);
        assert_eq!(s.total(), 3);
        assert_eq!(s.entry_count(), 2);
    }

    #[test]
    fn empty_sample_counts_to_empty_side() {
        let s = count_side(Vec::<Bigram>::new());
        assert_eq!(s.total(), 0);
        assert_eq!(s.entry_count(), 0);
    }

    #[test]
    fn pruning_removes_boundary_counts_and_keeps_totals() {
        let nu = side(&[("x", "x", 2), ("y", "y", 3)], 0);
        let table = CountTable::from_sides(CountSide::new(), nu).prune_nu_below(2);
        assert_eq!(table.f_nu(&b("x", "x")), 0, "count equal to theta is removed");
        assert_eq!(table.f_nu(&b("y", "y")), 3);
        assert_eq!(table.nu.total(), 5, "totals are preserved");
        assert_eq!(table.prune_threshold(), Some(2));
    }

    #[test]
    fn zero_threshold_only_records_the_field() {
        let de = side(&[("a", "b", 4), ("c", "d", 1)], 0);
        let nu = side(&[("a", "b", 2)], 0);
        let full = CountTable::from_sides(de, nu);
        let pruned = full.clone().prune_nu_below(0);
        assert_eq!(pruned.de, full.de);
        assert_eq!(pruned.nu, full.nu);
        assert_eq!(pruned.prune_threshold(), Some(0));
    }

    #[test]
    fn pruning_drops_denominator_entries_without_live_numerator() {
        let de = side(&[("a", "b", 4), ("c", "d", 7), ("e", "f", 1)], 0);
        let nu = side(&[("a", "b", 3), ("c", "d", 1)], 0);
        let table = CountTable::from_sides(de, nu).prune_nu_below(2);
        assert_eq!(table.f_de(&b("a", "b")), 4);
        assert_eq!(table.f_de(&b("c", "d")), 0, "numerator entry was pruned");
        assert_eq!(table.f_de(&b("e", "f")), 0, "never had a numerator entry");
        assert_eq!(table.de.total(), 12);
    }

    #[test]
    fn merge_sums_pointwise() {
        let a = side(&[("x", "x", 1)], 0);
        let b_ = side(&[("x", "x", 2), ("y", "y", 1)], 0);
        let m = merge(&a, &b_);
        assert_eq!(m.count(&b("x", "x")), 3);
        assert_eq!(m.count(&b("y", "y")), 1);
        assert_eq!(m.total(), 4);
    }

    #[test]
    fn merge_with_empty_side_is_identity() {
        let a = side(&[("x", "y", 5), ("p", "q", 2)], 0);
        assert_eq!(merge(&a, &CountSide::new()), a);
        assert_eq!(merge(&CountSide::new(), &a), a);
    }

    #[test]
    fn footprint_of_empty_table_is_the_fixed_overhead() {
        let table = CountTable::from_sides(CountSide::new(), CountSide::new());
        assert_eq!(table.footprint().estimated_bytes, TABLE_OVERHEAD_BYTES);
    }

    /// Desk-scale check: pruning a Zipf corpus table at theta=2 shrinks both
    /// the stored entries (at least 5x) and the byte estimate (to at most
    /// a fifth).
    #[test]
    fn pruning_shrinks_zipf_tables() {
        let params = SynthParams::default();
        let corpus = generate_synthetic_corpus(&params).unwrap();
        let de: Vec<Bigram> = corpus.iter().flat_map(extract_bigrams).collect();
        let nu: Vec<Bigram> = corpus
            .iter()
            .flat_map(|s| extract_ne_left_contexts(s, "LOC"))
            .collect();
        let full = CountTable::build(de.iter().cloned(), nu.iter().cloned(), None);
        let pruned = full.clone().prune_nu_below(2);
        let full_entries = full.de.entry_count() + full.nu.entry_count();
        let pruned_entries = pruned.de.entry_count() + pruned.nu.entry_count();
        assert!(
            full_entries >= 5 * pruned_entries,
            "entries {full_entries} vs pruned {pruned_entries}"
        );
        let ratio =
            pruned.footprint().estimated_bytes as f64 / full.footprint().estimated_bytes as f64;
        assert!(ratio <= 0.2, "byte ratio {ratio} above 0.2");
    }

    #[test]
    fn snapshot_round_trips_and_is_sorted() {
        let de = side(&[("b", "x", 2), ("a", "y", 5)], 0);
        let nu = side(&[("a", "y", 1)], 0);
        let table = CountTable::from_sides(de, nu).prune_nu_below(1);
        let mut buf = Vec::new();
        table.write_snapshot(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "#n_de=7 n_nu=1 theta=1");
        let keys: Vec<&str> = lines.collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted, "snapshot rows are sorted");
        let reread = CountTable::read_snapshot(Cursor::new(buf)).unwrap();
        assert_eq!(reread, table);
    }

    #[test]
    fn snapshot_header_none_theta_round_trips() {
        let table = CountTable::from_sides(side(&[("a", "b", 1)], 0), CountSide::new());
        let mut buf = Vec::new();
        table.write_snapshot(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("#n_de=1 n_nu=0 theta=none"));
        let reread = CountTable::read_snapshot(Cursor::new(buf)).unwrap();
        assert_eq!(reread.prune_threshold(), None);
        assert_eq!(reread, table);
    }

    #[test]
    fn snapshot_rejects_garbage() {
        assert!(CountTable::read_snapshot(Cursor::new("no header\n")).is_err());
        assert!(CountTable::read_snapshot(Cursor::new("#n_de=1 n_nu=1\n")).is_err());
        let bad_row = "#n_de=1 n_nu=1 theta=none\na\tb\t1\n";
        assert!(CountTable::read_snapshot(Cursor::new(bad_row)).is_err());
    }

    fn arb_elements(max_kinds: u8) -> impl Strategy<Value = Vec<Bigram>> {
        proptest::collection::vec((0..max_kinds, 0..max_kinds), 0..120).prop_map(|pairs| {
            pairs
                .into_iter()
                .map(|(a, b)| Bigram::new(format!("a{a}"), format!("b{b}")))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn totals_equal_sample_size(elements in arb_elements(6)) {
            let side = count_side(elements.clone());
            prop_assert_eq!(side.total(), elements.len() as u64);
            let sum: u64 = side.entries().map(|(_, c)| c).sum();
            prop_assert_eq!(sum, elements.len() as u64);
        }

        #[test]
        fn two_pass_build_equals_count_then_prune(
            de in arb_elements(5),
            nu in arb_elements(5),
            theta in 0u64..5,
        ) {
            let two_pass = CountTable::build(de.iter().cloned(), nu.iter().cloned(), Some(theta));
            let full = CountTable::build(de.iter().cloned(), nu.iter().cloned(), None);
            prop_assert_eq!(two_pass, full.prune_nu_below(theta));
        }

        #[test]
        fn pruning_is_idempotent(nu in arb_elements(5), theta in 0u64..5) {
            let table = CountTable::build(nu.iter().cloned(), nu.iter().cloned(), None);
            let once = table.clone().prune_nu_below(theta);
            let twice = once.clone().prune_nu_below(theta);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn pruning_is_monotone_in_theta(
            nu in arb_elements(5),
            lo in 0u64..4,
            delta in 0u64..4,
        ) {
            let table = CountTable::build(nu.iter().cloned(), nu.iter().cloned(), None);
            let loose = table.clone().prune_nu_below(lo);
            let tight = table.prune_nu_below(lo + delta);
            for (k, _) in tight.nu.entries() {
                prop_assert!(loose.f_nu(k) > 0, "survivor of the tighter prune missing");
            }
        }

        #[test]
        fn merge_is_associative_and_commutative(
            xs in arb_elements(4),
            ys in arb_elements(4),
            zs in arb_elements(4),
        ) {
            let (a, b, c) = (count_side(xs), count_side(ys), count_side(zs));
            prop_assert_eq!(merge(&merge(&a, &b), &c), merge(&a, &merge(&b, &c)));
            prop_assert_eq!(merge(&a, &b), merge(&b, &a));
        }

        #[test]
        fn snapshot_round_trip(de in arb_elements(4), nu in arb_elements(4), theta in 0u64..4) {
            let table = CountTable::build(de.iter().cloned(), nu.iter().cloned(), Some(theta));
            let mut buf = Vec::new();
            table.write_snapshot(&mut buf).unwrap();
            let reread = CountTable::read_snapshot(Cursor::new(buf)).unwrap();
            prop_assert_eq!(reread, table);
        }
    }
}
