//! Approximate pattern matching against a reproduction database.
//!
//! Two searches are provided: the nearest candidate window of a block under
//! average distortion ([`Database::nearest_window`]), and the longest
//! message prefix that matches some database window within a distortion
//! budget ([`Database::longest_match`]). Both are exhaustive scans; the
//! pruning applied on top never changes a result, and neither does the
//! number of partitions the candidate set is split into.
//!
//! Hamming distortion over a square alphabet runs on bit-packed symbols
//! (popcount of folded XORs). Other integer-valued matrices accumulate
//! exact integer sums; real-valued ones accumulate `f64` sums in a fixed
//! order and test admissibility with a `1e-12` slack.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::DistortionSpec;
use crate::source::{PackedSymbols, SymbolBlock};

const ADMISSIBLE_SLACK: f64 = 1e-12;

/// Which database windows are candidate reproductions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Candidates {
    /// Windows starting at `0, 1, .., count - 1`.
    Sliding { count: usize },
    /// Windows starting at `0, stride, .., (count - 1) * stride`.
    Strided { stride: usize, count: usize },
}

impl Candidates {
    pub fn count(&self) -> usize {
        match *self {
            Candidates::Sliding { count } | Candidates::Strided { count, .. } => count,
        }
    }

    /// 0-based database offset of 0-based candidate `i`.
    #[inline]
    pub fn start(&self, i: usize) -> usize {
        match *self {
            Candidates::Sliding { .. } => i,
            Candidates::Strided { stride, .. } => i * stride,
        }
    }
}

/// How a search is decomposed. Results never depend on these settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    /// Number of contiguous candidate ranges searched independently.
    pub partitions: usize,
    /// Abandon a candidate as soon as it provably cannot win.
    pub early_abandon: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            partitions: rayon::current_num_threads(),
            early_abandon: true,
        }
    }
}

impl SearchOptions {
    pub fn serial() -> Self {
        Self {
            partitions: 1,
            early_abandon: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestResult {
    /// 1-based candidate index.
    pub position: usize,
    /// Average per-symbol distortion of the chosen window.
    pub distortion: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchResult {
    pub length: usize,
    /// 1-based database start; meaningful only when `length >= 1`.
    pub position: usize,
    pub distortion: f64,
}

#[derive(Debug, Clone)]
pub(crate) enum Kernel {
    /// Hamming on a square alphabet, symbols packed `bits` to a slot.
    Packed {
        bits: u32,
    },
    Integer {
        table: Vec<u32>,
        cols: usize,
    },
    Real {
        table: Vec<f64>,
        cols: usize,
    },
}

impl Kernel {
    pub(crate) fn for_distortion(dist: &DistortionSpec) -> Self {
        let cols = dist.repro_alphabet_size();
        if dist.is_hamming() {
            Kernel::Packed {
                bits: PackedSymbols::slot_bits(cols),
            }
        } else if dist.is_integer_valued() {
            Kernel::Integer {
                table: dist.matrix().iter().map(|&v| v as u32).collect(),
                cols,
            }
        } else {
            Kernel::Real {
                table: dist.matrix().to_vec(),
                cols,
            }
        }
    }

    pub(crate) fn packed_bits(&self) -> Option<u32> {
        match *self {
            Kernel::Packed { bits } => Some(bits),
            _ => None,
        }
    }

    #[inline(always)]
    fn cost(&self, x: u8, y: u8) -> f64 {
        match self {
            Kernel::Packed { .. } => (x != y) as u32 as f64,
            Kernel::Integer { table, cols } => table[x as usize * cols + y as usize] as f64,
            Kernel::Real { table, cols } => table[x as usize * cols + y as usize],
        }
    }

    fn is_exact(&self) -> bool {
        !matches!(self, Kernel::Real { .. })
    }
}

/// Count of differing `bits`-wide slots in `x = a ^ b`.
#[inline(always)]
pub(crate) fn slot_mismatches(mut x: u64, bits: u32) -> u32 {
    match bits {
        1 => {}
        2 => x = (x | (x >> 1)) & 0x5555_5555_5555_5555,
        4 => {
            x |= x >> 1;
            x |= x >> 2;
            x &= 0x1111_1111_1111_1111;
        }
        _ => {
            x |= x >> 1;
            x |= x >> 2;
            x |= x >> 4;
            x &= 0x0101_0101_0101_0101;
        }
    }
    x.count_ones()
}

/// Same as [`slot_mismatches`] but leaves one flag bit per slot in place.
#[inline(always)]
fn slot_flags(mut x: u64, bits: u32) -> u64 {
    match bits {
        1 => x,
        2 => (x | (x >> 1)) & 0x5555_5555_5555_5555,
        4 => {
            x |= x >> 1;
            x |= x >> 2;
            x & 0x1111_1111_1111_1111
        }
        _ => {
            x |= x >> 1;
            x |= x >> 2;
            x |= x >> 4;
            x & 0x0101_0101_0101_0101
        }
    }
}

/// A block to be matched, in whichever form the kernel consumes.
#[derive(Debug, Clone)]
pub(crate) struct Query {
    len: usize,
    symbols: Vec<u8>,
    /// Packed words plus the mask for the final word (packed kernel only).
    words: Vec<u64>,
    last_mask: u64,
}

impl Query {
    pub(crate) fn new(symbols: &[u8], kernel: &Kernel) -> Self {
        let len = symbols.len();
        let (words, last_mask) = match kernel.packed_bits() {
            Some(bits) => {
                let packed = PackedSymbols::from_symbols(symbols, bits);
                let total = len * bits as usize;
                let nwords = total.div_ceil(64);
                let rem = total % 64;
                let mask = if rem == 0 {
                    u64::MAX
                } else {
                    (1u64 << rem) - 1
                };
                (packed.words()[..nwords].to_vec(), mask)
            }
            None => (Vec::new(), 0),
        };
        Self {
            len,
            symbols: symbols.to_vec(),
            words,
            last_mask,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    pub(crate) fn symbols(&self) -> &[u8] {
        &self.symbols
    }
}

/// Supplies candidate windows for a nearest-neighbour scan.
pub(crate) trait WindowSource: Sync {
    fn count(&self) -> usize;
    /// First `out.len()` packed words of window `i`.
    fn packed(&self, i: usize, out: &mut [u64]);
    /// First `len` symbols of window `i`.
    fn plain(&self, i: usize, len: usize, buf: &mut Vec<u8>);
}

#[derive(Debug, Clone)]
enum Repr {
    Packed(PackedSymbols),
    Plain(Vec<u8>),
}

/// A read-only reproduction database prepared for one distortion measure.
#[derive(Debug, Clone)]
pub struct Database {
    repr: Repr,
    kernel: Kernel,
    source_alphabet: usize,
    repro_alphabet: usize,
}

impl Database {
    pub fn new(block: SymbolBlock, dist: &DistortionSpec) -> Result<Self> {
        if block.alphabet_size() > dist.repro_alphabet_size() {
            return Err(Error::ParamMismatch(format!(
                "database alphabet {} exceeds reproduction alphabet {}",
                block.alphabet_size(),
                dist.repro_alphabet_size()
            )));
        }
        let kernel = Kernel::for_distortion(dist);
        let repr = match kernel.packed_bits() {
            Some(bits) => Repr::Packed(PackedSymbols::from_symbols(block.symbols(), bits)),
            None => Repr::Plain(block.into_symbols()),
        };
        Ok(Self {
            repr,
            kernel,
            source_alphabet: dist.source_alphabet_size(),
            repro_alphabet: dist.repro_alphabet_size(),
        })
    }

    /// Wraps an already packed database; `dist` must be Hamming with a
    /// matching slot width.
    pub fn from_packed(packed: PackedSymbols, dist: &DistortionSpec) -> Result<Self> {
        let kernel = Kernel::for_distortion(dist);
        if kernel.packed_bits() != Some(packed.bits()) {
            return Err(Error::ParamMismatch(
                "packed database requires Hamming distortion with matching slot width".into(),
            ));
        }
        Ok(Self {
            repr: Repr::Packed(packed),
            kernel,
            source_alphabet: dist.source_alphabet_size(),
            repro_alphabet: dist.repro_alphabet_size(),
        })
    }

    /// Whether `dist` is served by the bit-packed representation.
    pub fn packs(dist: &DistortionSpec) -> bool {
        Kernel::for_distortion(dist).packed_bits().is_some()
    }

    pub fn len(&self) -> usize {
        match &self.repr {
            Repr::Packed(p) => p.len(),
            Repr::Plain(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> u8 {
        match &self.repr {
            Repr::Packed(p) => p.get(i),
            Repr::Plain(v) => v[i],
        }
    }

    /// Symbols `start .. start + len`.
    pub fn slice(&self, start: usize, len: usize) -> Vec<u8> {
        match &self.repr {
            Repr::Packed(p) => (start..start + len).map(|i| p.get(i)).collect(),
            Repr::Plain(v) => v[start..start + len].to_vec(),
        }
    }

    pub fn to_block(&self) -> SymbolBlock {
        SymbolBlock::from_raw(self.slice(0, self.len()), self.repro_alphabet)
    }

    fn check_query(&self, symbols: &[u8]) -> Result<()> {
        if let Some(&s) = symbols
            .iter()
            .find(|&&s| s as usize >= self.source_alphabet)
        {
            return Err(Error::ParamMismatch(format!(
                "query symbol {s} outside source alphabet of size {}",
                self.source_alphabet
            )));
        }
        Ok(())
    }

    fn check_candidates(&self, candidates: Candidates, block_len: usize) -> Result<()> {
        let count = candidates.count();
        if count == 0 {
            return Err(Error::EmptyCandidates);
        }
        let needed = candidates.start(count - 1) + block_len;
        if needed > self.len() {
            return Err(Error::ParamInvariantViolation(format!(
                "last candidate window ends at {needed} but database holds {} symbols",
                self.len()
            )));
        }
        Ok(())
    }

    pub fn nearest_window(
        &self,
        block: &[u8],
        candidates: Candidates,
        opts: SearchOptions,
    ) -> Result<NearestResult> {
        self.nearest_windows(&[block], candidates, opts)
            .map(|mut v| v.pop().expect("one block in, one result out"))
    }

    /// Nearest window for each block; equivalent to calling
    /// [`Database::nearest_window`] per block, with one pass over the
    /// candidates.
    pub fn nearest_windows(
        &self,
        blocks: &[&[u8]],
        candidates: Candidates,
        opts: SearchOptions,
    ) -> Result<Vec<NearestResult>> {
        let longest = blocks.iter().map(|b| b.len()).max().unwrap_or(0);
        self.check_candidates(candidates, longest)?;
        for b in blocks {
            self.check_query(b)?;
        }
        let queries: Vec<Query> = blocks.iter().map(|b| Query::new(b, &self.kernel)).collect();
        let src = DbWindows {
            db: self,
            candidates,
        };
        Ok(nearest_batch(&self.kernel, &queries, &src, opts))
    }

    /// Longest prefix of `suffix` (at most `cap` symbols) matching some
    /// database window with average distortion `<= budget`.
    pub fn longest_match(
        &self,
        suffix: &[u8],
        budget: f64,
        cap: usize,
        opts: SearchOptions,
    ) -> Result<MatchResult> {
        self.check_query(suffix)?;
        let k_max = cap.min(suffix.len());
        let none = MatchResult {
            length: 0,
            position: 0,
            distortion: 0.0,
        };
        if k_max == 0 || self.is_empty() || budget < 0.0 {
            return Ok(none);
        }
        let query = Query::new(&suffix[..k_max], &self.kernel);
        let limits = Limits::new(budget, k_max, self.kernel.is_exact());
        let m = self.len();
        let parts = opts.partitions.max(1).min(m);
        let scan = |p: usize| {
            let lo = p * m / parts;
            let hi = (p + 1) * m / parts;
            self.longest_in_range(&query, &limits, lo, hi, opts.early_abandon)
        };
        let best = if parts == 1 {
            scan(0)
        } else {
            (0..parts)
                .into_par_iter()
                .map(scan)
                .reduce(|| (0, 0, 0.0), pick_longer)
        };
        let (length, start, sum) = best;
        if length == 0 {
            return Ok(none);
        }
        Ok(MatchResult {
            length,
            position: start + 1,
            distortion: sum / length as f64,
        })
    }

    /// Best `(length, start, sum)` over starts in `lo..hi`.
    fn longest_in_range(
        &self,
        q: &Query,
        lim: &Limits,
        lo: usize,
        hi: usize,
        prune: bool,
    ) -> (usize, usize, f64) {
        let m = self.len();
        let mut best = (0usize, 0usize, 0.0f64);
        match (&self.repr, &self.kernel) {
            (Repr::Packed(db), Kernel::Packed { bits }) => {
                let bits = *bits;
                let per_word = (64 / bits) as usize;
                for i in lo..hi {
                    let k_cap = lim.k_max.min(m - i);
                    if prune && k_cap <= best.0 {
                        // Later starts fit even fewer symbols.
                        break;
                    }
                    let base = i * bits as usize;
                    if prune && best.0 > 0 {
                        let need = best.0 + 1;
                        let bound = lim.int_thr[k_cap];
                        let mut s = 0u64;
                        let mut done = 0usize;
                        let mut w = 0usize;
                        while done < need {
                            let take = per_word.min(need - done);
                            let mut x = db.window_word_fast(base + w * 64) ^ q.words[w];
                            if take < per_word {
                                x &= (1u64 << (take as u32 * bits)) - 1;
                            }
                            s += slot_mismatches(x, bits) as u64;
                            if s > bound {
                                break;
                            }
                            done += take;
                            w += 1;
                        }
                        if s > bound {
                            continue;
                        }
                    }
                    let bound = lim.int_thr[k_cap];
                    let mut s = 0u64;
                    let mut found = 0usize;
                    let mut found_sum = 0u64;
                    let mut k = 0usize;
                    let mut w = 0usize;
                    'scan: while k < k_cap {
                        let flags =
                            slot_flags(db.window_word_fast(base + w * 64) ^ q.words[w], bits);
                        let take = per_word.min(k_cap - k);
                        for j in 0..take {
                            s += (flags >> (j as u32 * bits)) & 1;
                            k += 1;
                            if s <= lim.int_thr[k] {
                                found = k;
                                found_sum = s;
                            } else if prune && s > bound {
                                break 'scan;
                            }
                        }
                        w += 1;
                    }
                    if found > best.0 {
                        best = (found, i, found_sum as f64);
                    }
                }
            }
            _ => {
                let sym = q.symbols();
                for i in lo..hi {
                    let k_cap = lim.k_max.min(m - i);
                    if prune && k_cap <= best.0 {
                        break;
                    }
                    let bound = lim.bound(k_cap);
                    if prune && best.0 > 0 {
                        let mut s = 0.0;
                        let mut hopeless = false;
                        for (k, &x) in sym.iter().enumerate().take(best.0 + 1) {
                            s += self.kernel.cost(x, self.get(i + k));
                            if s > bound {
                                hopeless = true;
                                break;
                            }
                        }
                        if hopeless {
                            continue;
                        }
                    }
                    let mut s = 0.0;
                    let mut found = 0usize;
                    let mut found_sum = 0.0;
                    for k in 1..=k_cap {
                        s += self.kernel.cost(sym[k - 1], self.get(i + k - 1));
                        if s <= lim.bound(k) {
                            found = k;
                            found_sum = s;
                        } else if prune && s > bound {
                            break;
                        }
                    }
                    if found > best.0 {
                        best = (found, i, found_sum);
                    }
                }
            }
        }
        best
    }
}

fn pick_longer(a: (usize, usize, f64), b: (usize, usize, f64)) -> (usize, usize, f64) {
    if b.0 > a.0 || (b.0 == a.0 && b.0 > 0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Per-length admissibility thresholds for a budget.
struct Limits {
    k_max: usize,
    budget: f64,
    /// `floor(k * budget + slack)` for exact kernels, indexed by `k`.
    int_thr: Vec<u64>,
    exact: bool,
}

impl Limits {
    fn new(budget: f64, k_max: usize, exact: bool) -> Self {
        let int_thr = (0..=k_max)
            .map(|k| (k as f64 * budget + ADMISSIBLE_SLACK).floor() as u64)
            .collect();
        Self {
            k_max,
            budget,
            int_thr,
            exact,
        }
    }

    #[inline(always)]
    fn bound(&self, k: usize) -> f64 {
        if self.exact {
            self.int_thr[k] as f64
        } else {
            k as f64 * self.budget + ADMISSIBLE_SLACK
        }
    }
}

struct DbWindows<'a> {
    db: &'a Database,
    candidates: Candidates,
}

impl WindowSource for DbWindows<'_> {
    fn count(&self) -> usize {
        self.candidates.count()
    }

    #[inline]
    fn packed(&self, i: usize, out: &mut [u64]) {
        if let Repr::Packed(p) = &self.db.repr {
            let base = self.candidates.start(i) * p.bits() as usize;
            for (w, o) in out.iter_mut().enumerate() {
                *o = p.window_word_fast(base + w * 64);
            }
        }
    }

    fn plain(&self, i: usize, len: usize, buf: &mut Vec<u8>) {
        let start = self.candidates.start(i);
        buf.clear();
        match &self.db.repr {
            Repr::Plain(v) => buf.extend_from_slice(&v[start..start + len]),
            Repr::Packed(p) => buf.extend((start..start + len).map(|j| p.get(j))),
        }
    }
}

/// Nearest window of `src` for each query: ties go to the smaller index.
pub(crate) fn nearest_batch<S: WindowSource>(
    kernel: &Kernel,
    queries: &[Query],
    src: &S,
    opts: SearchOptions,
) -> Vec<NearestResult> {
    let count = src.count();
    let parts = opts.partitions.max(1).min(count.max(1));
    let scan = |p: usize| {
        let lo = p * count / parts;
        let hi = (p + 1) * count / parts;
        scan_range(kernel, queries, src, lo, hi, opts.early_abandon)
    };
    let best = if parts == 1 {
        scan(0)
    } else {
        (0..parts)
            .into_par_iter()
            .map(scan)
            .reduce_with(|a, b| {
                a.into_iter()
                    .zip(b)
                    .map(|(x, y)| {
                        if y.0 < x.0 || (y.0 == x.0 && y.1 < x.1) {
                            y
                        } else {
                            x
                        }
                    })
                    .collect()
            })
            .unwrap_or_default()
    };
    best.into_iter()
        .zip(queries)
        .map(|((cost, idx), q)| NearestResult {
            position: idx + 1,
            distortion: if q.len == 0 { 0.0 } else { cost / q.len as f64 },
        })
        .collect()
}

/// Per-query `(cost, index)` minima over candidates `lo..hi`.
fn scan_range<S: WindowSource>(
    kernel: &Kernel,
    queries: &[Query],
    src: &S,
    lo: usize,
    hi: usize,
    abandon: bool,
) -> Vec<(f64, usize)> {
    let mut best = vec![(f64::INFINITY, usize::MAX); queries.len()];
    match kernel {
        Kernel::Packed { bits } => {
            let bits = *bits;
            let nwords = queries.iter().map(|q| q.words.len()).max().unwrap_or(0);
            let mut window = vec![0u64; nwords];
            let mut cost_int: Vec<u64> = vec![u64::MAX; queries.len()];
            for i in lo..hi {
                src.packed(i, &mut window);
                for (qi, q) in queries.iter().enumerate() {
                    let bound = cost_int[qi];
                    let last = q.words.len().saturating_sub(1);
                    let mut s = 0u64;
                    for (w, &qw) in q.words.iter().enumerate() {
                        let mut x = window[w] ^ qw;
                        if w == last {
                            x &= q.last_mask;
                        }
                        s += slot_mismatches(x, bits) as u64;
                        if abandon && s > bound {
                            break;
                        }
                    }
                    if s < bound {
                        cost_int[qi] = s;
                        best[qi] = (s as f64, i);
                    }
                }
            }
        }
        _ => {
            let longest = queries.iter().map(|q| q.len).max().unwrap_or(0);
            let mut buf = Vec::with_capacity(longest);
            for i in lo..hi {
                src.plain(i, longest, &mut buf);
                for (qi, q) in queries.iter().enumerate() {
                    let bound = best[qi].0;
                    let mut s = 0.0;
                    for (k, &x) in q.symbols.iter().enumerate() {
                        s += kernel.cost(x, buf[k]);
                        if abandon && s > bound {
                            break;
                        }
                    }
                    if s < bound {
                        best[qi] = (s, i);
                    }
                }
            }
        }
    }
    best
}

/// One-shot [`Database::nearest_window`] over a plain database.
pub fn nearest_window(
    block: &SymbolBlock,
    database: &SymbolBlock,
    dist: &DistortionSpec,
    candidates: Candidates,
) -> Result<NearestResult> {
    Database::new(database.clone(), dist)?.nearest_window(
        block.symbols(),
        candidates,
        SearchOptions::default(),
    )
}

/// One-shot [`Database::longest_match`] over a plain database.
pub fn longest_match(
    suffix: &SymbolBlock,
    database: &SymbolBlock,
    dist: &DistortionSpec,
    budget: f64,
    cap: usize,
) -> Result<MatchResult> {
    Database::new(database.clone(), dist)?.longest_match(
        suffix.symbols(),
        budget,
        cap,
        SearchOptions::default(),
    )
}
