//! Symbolic and geometric model of the expanding base dynamics: subshifts of
//! finite type realized as piecewise-affine Markov maps of [0, 1].
//!
//! Branch intervals are closed, ordered left to right, with disjoint
//! interiors; each branch maps its interval affinely (orientation preserving)
//! onto the contiguous union of its admissible successor intervals. Endpoint
//! alignment is checked to `MARKOV_TOL` absolute: zoo endpoints are exact
//! decimals, so any drift beyond that indicates a configuration bug rather
//! than an approximate system.

use crate::error::{Error, Result};
use crate::numerics::{ceil_guarded, spectral_radius};

/// Absolute tolerance for the Markov endpoint-alignment check.
pub const MARKOV_TOL: f64 = 1e-12;

/// A finite word over the branch alphabet.
pub type Word = Vec<usize>;

/// 0/1 transition structure: `entries[a][b]` iff symbol `b` may follow `a`
/// in forward time. Rows and columns are never empty and the directed graph
/// is strongly connected (checked at construction).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionMatrix {
    entries: Vec<Vec<bool>>,
    predecessors: Vec<Vec<usize>>,
    successors: Vec<Vec<usize>>,
}

impl TransitionMatrix {
    pub fn new(entries: Vec<Vec<bool>>) -> Result<Self> {
        let d = entries.len();
        if d == 0 {
            return Err(Error::InvalidInput("empty alphabet".into()));
        }
        if entries.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidInput("transition matrix is not square".into()));
        }
        for (a, row) in entries.iter().enumerate() {
            if !row.iter().any(|&x| x) {
                return Err(Error::InvalidInput(format!("row {a} has no successor")));
            }
        }
        for b in 0..d {
            if !entries.iter().any(|row| row[b]) {
                return Err(Error::InvalidInput(format!("column {b} has no predecessor")));
            }
        }

        let successors: Vec<Vec<usize>> = (0..d)
            .map(|a| (0..d).filter(|&b| entries[a][b]).collect())
            .collect();
        let predecessors: Vec<Vec<usize>> = (0..d)
            .map(|b| (0..d).filter(|&a| entries[a][b]).collect())
            .collect();

        let m = Self {
            entries,
            predecessors,
            successors,
        };
        if !m.strongly_connected() {
            return Err(Error::Reducible);
        }
        Ok(m)
    }

    /// Builds from 0/1 integer rows (the config wire format).
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        Self::new(
            rows.iter()
                .map(|r| r.iter().map(|&x| x != 0).collect())
                .collect(),
        )
    }

    pub fn full_shift(d: usize) -> Self {
        Self::new(vec![vec![true; d]; d]).expect("full shift is always valid")
    }

    pub fn d(&self) -> usize {
        self.entries.len()
    }

    pub fn is_edge(&self, a: usize, b: usize) -> bool {
        self.entries[a][b]
    }

    pub fn successors(&self, a: usize) -> &[usize] {
        &self.successors[a]
    }

    pub fn predecessors(&self, b: usize) -> &[usize] {
        &self.predecessors[b]
    }

    pub fn is_full_shift(&self) -> bool {
        self.entries.iter().all(|row| row.iter().all(|&x| x))
    }

    pub fn is_word_admissible(&self, w: &[usize]) -> bool {
        w.iter().all(|&a| a < self.d())
            && w.windows(2).all(|p| self.entries[p[0]][p[1]])
    }

    /// Checks the backward chain (a_1, .., a_m) ending compatibly with `s`:
    /// a_1 precedes s and a_{i+1} precedes a_i.
    pub fn is_backward_word_admissible(&self, w: &[usize], s: usize) -> bool {
        if w.iter().any(|&a| a >= self.d()) || s >= self.d() {
            return false;
        }
        let mut cur = s;
        for &a in w {
            if !self.entries[a][cur] {
                return false;
            }
            cur = a;
        }
        true
    }

    fn strongly_connected(&self) -> bool {
        let d = self.d();
        let reach = |succ: &dyn Fn(usize) -> &[usize]| -> usize {
            let mut seen = vec![false; d];
            let mut stack = vec![0usize];
            seen[0] = true;
            let mut count = 1;
            while let Some(v) = stack.pop() {
                for &u in succ(v) {
                    if !seen[u] {
                        seen[u] = true;
                        count += 1;
                        stack.push(u);
                    }
                }
            }
            count
        };
        reach(&|v| self.successors(v)) == d && reach(&|v| self.predecessors(v)) == d
    }

    /// Column sums: (min, max) number of one-step symbolic predecessors.
    pub fn preimage_bounds(&self) -> (usize, usize) {
        let d = self.d();
        let mut lo = usize::MAX;
        let mut hi = 0;
        for b in 0..d {
            let c = self.predecessors[b].len();
            lo = lo.min(c);
            hi = hi.max(c);
        }
        (lo, hi)
    }

    /// Number of admissible backward words of length `m` ending compatibly
    /// with `s`, i.e. the column-s entry sum of A^m. Saturating in u128.
    pub fn count_backward_words(&self, s: usize, m: usize) -> u128 {
        let d = self.d();
        // col[a] = number of admissible chains (a, .., a_1, s) of length j.
        let mut col = vec![0u128; d];
        for &a in &self.predecessors[s] {
            col[a] = 1;
        }
        if m == 0 {
            return 1;
        }
        for _ in 1..m {
            let mut next = vec![0u128; d];
            for (a, &cnt) in col.iter().enumerate() {
                if cnt == 0 {
                    continue;
                }
                for &b in &self.predecessors[a] {
                    next[b] = next[b].saturating_add(cnt);
                }
            }
            col = next;
        }
        col.iter().fold(0u128, |acc, &x| acc.saturating_add(x))
    }

    /// All admissible backward words (a_1, .., a_m) with a_1 preceding `s`,
    /// in lexicographic order. Errors before allocating if the count
    /// exceeds `cap`.
    pub fn enumerate_backward_words(&self, s: usize, m: usize, cap: u64) -> Result<Vec<Word>> {
        if s >= self.d() {
            return Err(Error::InvalidInput(format!("symbol {s} out of range")));
        }
        let count = self.count_backward_words(s, m);
        if count > cap as u128 {
            return Err(Error::ResourceLimit(format!(
                "{count} backward words of length {m} exceed cap {cap}"
            )));
        }
        let mut out = Vec::with_capacity(count as usize);
        let mut word = vec![0usize; m];
        self.backward_dfs(s, m, 0, &mut word, &mut out);
        Ok(out)
    }

    fn backward_dfs(&self, cur: usize, m: usize, depth: usize, word: &mut Word, out: &mut Vec<Word>) {
        if depth == m {
            out.push(word.clone());
            return;
        }
        for &a in &self.predecessors[cur] {
            word[depth] = a;
            self.backward_dfs(a, m, depth + 1, word, out);
        }
    }

    /// Minimum of sum phi(a_i) over all admissible backward words of length
    /// `m` ending compatibly with `s`. Dynamic programming over the reversed
    /// graph, O(m d^2); the empty word gives 0.
    pub fn min_plus_backward(&self, phi: &[f64], s: usize, m: usize) -> Result<f64> {
        let d = self.d();
        if phi.len() != d {
            return Err(Error::InvalidInput(format!(
                "potential has {} entries for alphabet {d}",
                phi.len()
            )));
        }
        if phi.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("potential must be finite".into()));
        }
        if s >= d {
            return Err(Error::InvalidInput(format!("symbol {s} out of range")));
        }
        if m == 0 {
            return Ok(0.0);
        }
        // best[a] = min cost of a chain of length j ending the word at a.
        let mut best = vec![f64::INFINITY; d];
        for &a in &self.predecessors[s] {
            best[a] = phi[a];
        }
        for _ in 1..m {
            let mut next = vec![f64::INFINITY; d];
            for (a, &cost) in best.iter().enumerate() {
                if !cost.is_finite() {
                    continue;
                }
                for &b in &self.predecessors[a] {
                    let cand = phi[b] + cost;
                    if cand < next[b] {
                        next[b] = cand;
                    }
                }
            }
            best = next;
        }
        Ok(best.iter().fold(f64::INFINITY, |a, &b| a.min(b)))
    }
}

/// Structural summary returned by system validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemInfo {
    pub d: usize,
    /// Topological entropy: log of the Perron root of the 0/1 matrix.
    pub h_top: f64,
    /// Maximum branch slope.
    pub chi_u: f64,
    pub irreducible: bool,
}

/// A piecewise-affine expanding Markov map of [0, 1].
#[derive(Debug, Clone)]
pub struct BranchSpec {
    intervals: Vec<(f64, f64)>,
    slopes: Vec<f64>,
    admissibility: TransitionMatrix,
    /// Branch images, precomputed as the hull of the successor intervals.
    images: Vec<(f64, f64)>,
}

impl BranchSpec {
    pub fn new(
        intervals: Vec<(f64, f64)>,
        slopes: Vec<f64>,
        admissibility: TransitionMatrix,
    ) -> Result<Self> {
        let d = admissibility.d();
        if intervals.len() != d || slopes.len() != d {
            return Err(Error::InvalidInput(format!(
                "{} intervals / {} slopes for alphabet {d}",
                intervals.len(),
                slopes.len()
            )));
        }
        for (a, &(lo, hi)) in intervals.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || lo < -MARKOV_TOL || hi > 1.0 + MARKOV_TOL || lo >= hi {
                return Err(Error::InvalidInput(format!(
                    "branch {a}: interval [{lo}, {hi}] is not a proper subinterval of [0, 1]"
                )));
            }
        }
        for w in intervals.windows(2) {
            if w[1].0 < w[0].1 - MARKOV_TOL {
                return Err(Error::InvalidInput(format!(
                    "branch intervals [{}, {}] and [{}, {}] overlap",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        for (a, &s) in slopes.iter().enumerate() {
            if !s.is_finite() || s <= 1.0 {
                return Err(Error::NotExpanding { branch: a, slope: s });
            }
        }

        // Markov check: successor intervals must tile a contiguous interval,
        // and the affine image of the branch must match it exactly.
        let mut images = Vec::with_capacity(d);
        for a in 0..d {
            let succ = admissibility.successors(a);
            for pair in succ.windows(2) {
                let gap = intervals[pair[1]].0 - intervals[pair[0]].1;
                if gap.abs() > MARKOV_TOL {
                    return Err(Error::NonMarkov {
                        branch: a,
                        detail: format!(
                            "successor intervals {} and {} leave a gap of {gap:e}",
                            pair[0], pair[1]
                        ),
                    });
                }
            }
            let lo = intervals[succ[0]].0;
            let hi = intervals[*succ.last().unwrap()].1;
            let span = hi - lo;
            let len = slopes[a] * (intervals[a].1 - intervals[a].0);
            if (len - span).abs() > MARKOV_TOL {
                return Err(Error::NonMarkov {
                    branch: a,
                    detail: format!(
                        "affine image length {len} differs from successor span {span} by {:e}",
                        (len - span).abs()
                    ),
                });
            }
            images.push((lo, hi));
        }

        Ok(Self {
            intervals,
            slopes,
            admissibility,
            images,
        })
    }

    /// Full d-shift on the tiling partition {[i/d, (i+1)/d]} with slope d.
    pub fn full_shift(d: usize) -> Self {
        let intervals = (0..d)
            .map(|i| (i as f64 / d as f64, (i + 1) as f64 / d as f64))
            .collect();
        Self::new(intervals, vec![d as f64; d], TransitionMatrix::full_shift(d))
            .expect("tiling full shift is always Markov")
    }

    pub fn d(&self) -> usize {
        self.admissibility.d()
    }

    pub fn matrix(&self) -> &TransitionMatrix {
        &self.admissibility
    }

    pub fn interval(&self, a: usize) -> (f64, f64) {
        self.intervals[a]
    }

    pub fn slope(&self, a: usize) -> f64 {
        self.slopes[a]
    }

    pub fn image(&self, a: usize) -> (f64, f64) {
        self.images[a]
    }

    pub fn min_slope(&self) -> f64 {
        self.slopes.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }

    pub fn max_slope(&self) -> f64 {
        self.slopes.iter().fold(0.0_f64, |a, &b| a.max(b))
    }

    /// Forward branch map E_a.
    pub fn apply(&self, a: usize, x: f64) -> f64 {
        self.images[a].0 + self.slopes[a] * (x - self.intervals[a].0)
    }

    /// Inverse branch E_a^{-1}; the caller guarantees y lies in image(a).
    pub fn pullback(&self, a: usize, y: f64) -> f64 {
        self.intervals[a].0 + (y - self.images[a].0) / self.slopes[a]
    }

    /// Validation summary: entropy via the Perron root of the 0/1 matrix.
    pub fn system_info(&self) -> Result<SystemInfo> {
        let d = self.d();
        let m: Vec<Vec<f64>> = (0..d)
            .map(|a| {
                (0..d)
                    .map(|b| if self.admissibility.is_edge(a, b) { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        let rho = spectral_radius(&m)?;
        Ok(SystemInfo {
            d,
            h_top: rho.value.ln(),
            chi_u: self.max_slope(),
            irreducible: true,
        })
    }

    /// The set of base points whose first |w| branch symbols equal w,
    /// computed by exact affine pullback. Errors on inadmissible words.
    pub fn cylinder(&self, w: &[usize]) -> Result<(f64, f64)> {
        if w.is_empty() {
            return Err(Error::InvalidInput("cylinder of the empty word".into()));
        }
        if !self.admissibility.is_word_admissible(w) {
            return Err(Error::Inadmissible(format!("word {w:?}")));
        }
        let mut cur = self.intervals[*w.last().unwrap()];
        for &a in w.iter().rev().skip(1) {
            cur = (self.pullback(a, cur.0), self.pullback(a, cur.1));
        }
        Ok(cur)
    }

    /// All admissible words of a given length, lexicographic. Errors before
    /// allocation if the count exceeds `cap`.
    pub fn enumerate_words(&self, len: usize, cap: u64) -> Result<Vec<Word>> {
        if len == 0 {
            return Ok(vec![Vec::new()]);
        }
        let mut count: u128 = 0;
        let d = self.d();
        {
            // row-sum count of A^(len-1) seeded from every start symbol
            let mut row = vec![1u128; d];
            for _ in 1..len {
                let mut next = vec![0u128; d];
                for a in 0..d {
                    for &b in self.admissibility.successors(a) {
                        next[a] = next[a].saturating_add(row[b]);
                    }
                }
                row = next;
            }
            for &x in &row {
                count = count.saturating_add(x);
            }
        }
        if count > cap as u128 {
            return Err(Error::ResourceLimit(format!(
                "{count} words of length {len} exceed cap {cap}"
            )));
        }
        let mut out = Vec::with_capacity(count as usize);
        let mut word = vec![0usize; len];
        for a in 0..d {
            word[0] = a;
            self.forward_dfs(len, 1, &mut word, &mut out);
        }
        Ok(out)
    }

    fn forward_dfs(&self, len: usize, depth: usize, word: &mut Word, out: &mut Vec<Word>) {
        if depth == len {
            out.push(word.clone());
            return;
        }
        let prev = word[depth - 1];
        for &b in self.admissibility.successors(prev) {
            word[depth] = b;
            self.forward_dfs(len, depth + 1, word, out);
        }
    }

    /// Cylinder depth that resolves scale eps: k = ceil(log(1/eps) / log(min slope)).
    pub fn depth_for_scale(&self, eps: f64) -> Result<usize> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidInput(format!("scale eps = {eps} not in (0, 1)")));
        }
        Ok(ceil_guarded((1.0 / eps).ln() / self.min_slope().ln()).max(0) as usize)
    }
}

/// Validates raw spec parts and reports d, h_top, chi_u.
pub fn validate_system(
    intervals: Vec<(f64, f64)>,
    slopes: Vec<f64>,
    transitions: &[Vec<u8>],
) -> Result<(BranchSpec, SystemInfo)> {
    let matrix = TransitionMatrix::from_rows(transitions)?;
    let spec = BranchSpec::new(intervals, slopes, matrix)?;
    let info = spec.system_info()?;
    Ok((spec, info))
}

/// A backward branch of the base dynamics: an anchor (itinerary prefix plus
/// coordinate) and the chain of branch symbols taken into the past.
#[derive(Debug, Clone, PartialEq)]
pub struct BasePrehistory {
    pub anchor_word: Word,
    pub anchor_point: f64,
    /// (a_1, .., a_m): a_1 is the branch of the first preimage, and so on.
    pub backward_word: Word,
}

impl BasePrehistory {
    pub fn new(spec: &BranchSpec, anchor_word: Word, anchor_point: f64, backward_word: Word) -> Result<Self> {
        if anchor_word.is_empty() {
            return Err(Error::InvalidInput("anchor itinerary must be nonempty".into()));
        }
        if !spec.matrix().is_word_admissible(&anchor_word) {
            return Err(Error::Inadmissible(format!("anchor word {anchor_word:?}")));
        }
        let cyl = spec.cylinder(&anchor_word)?;
        if anchor_point < cyl.0 - MARKOV_TOL || anchor_point > cyl.1 + MARKOV_TOL {
            return Err(Error::InvalidInput(format!(
                "anchor point {anchor_point} outside its itinerary cylinder [{}, {}]",
                cyl.0, cyl.1
            )));
        }
        if !spec
            .matrix()
            .is_backward_word_admissible(&backward_word, anchor_word[0])
        {
            return Err(Error::Inadmissible(format!("backward word {backward_word:?}")));
        }
        Ok(Self {
            anchor_word,
            anchor_point,
            backward_word,
        })
    }

    pub fn len(&self) -> usize {
        self.backward_word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.backward_word.is_empty()
    }

    /// Base coordinates (x_0, x_{-1}, .., x_{-m}) reconstructed by exact
    /// affine pullback; f(x_{-i-1}) = x_{-i} holds by construction.
    pub fn base_points(&self, spec: &BranchSpec) -> Vec<f64> {
        let mut pts = Vec::with_capacity(self.len() + 1);
        let mut x = self.anchor_point;
        pts.push(x);
        for &a in &self.backward_word {
            x = spec.pullback(a, x);
            pts.push(x);
        }
        pts
    }
}

/// Truncated natural-extension distance between two backward orbits given as
/// (base, fiber) coordinate pairs, plus the certified bound on the discarded
/// tail. `depth` is the number of included terms (i = 0 .. depth-1); termwise
/// distance is the max of the coordinate distances and the ambient diameter
/// is 1, so the tail is at most K^{-depth} / (1 - 1/K).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DkDistance {
    pub value: f64,
    pub tail_bound: f64,
}

pub fn dk_distance(p: &[(f64, f64)], q: &[(f64, f64)], k: f64, depth: usize) -> Result<DkDistance> {
    if k <= 1.0 {
        return Err(Error::InvalidInput(format!("dK metric needs K > 1, got {k}")));
    }
    if p.len() < depth || q.len() < depth {
        return Err(Error::InvalidInput(format!(
            "orbits of lengths {} and {} are shorter than depth {depth}",
            p.len(),
            q.len()
        )));
    }
    let mut value = 0.0;
    let mut scale = 1.0;
    for i in 0..depth {
        let term = (p[i].0 - q[i].0).abs().max((p[i].1 - q[i].1).abs());
        value += term * scale;
        scale /= k;
    }
    // scale is now K^{-depth}
    let tail_bound = scale / (1.0 - 1.0 / k);
    Ok(DkDistance { value, tail_bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> BranchSpec {
        crate::zoo::golden_mean_base()
    }

    #[test]
    fn full_shift_entropy_is_log_d() {
        let spec = BranchSpec::full_shift(2);
        let info = spec.system_info().unwrap();
        assert!((info.h_top - 2.0_f64.ln()).abs() < 1e-11);
        assert_eq!(info.d, 2);
        assert!((info.chi_u - 2.0).abs() < 1e-15);
    }

    #[test]
    fn golden_mean_entropy() {
        let info = golden().system_info().unwrap();
        let expected = ((1.0 + 5.0_f64.sqrt()) / 2.0).ln();
        assert!((info.h_top - expected).abs() < 1e-10, "got {}", info.h_top);
    }

    #[test]
    fn non_expanding_slope_rejected() {
        let m = TransitionMatrix::full_shift(2);
        let err = BranchSpec::new(
            vec![(0.0, 0.5), (0.5, 1.0)],
            vec![2.0, 0.9],
            m,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotExpanding { branch: 1, .. }));
    }

    #[test]
    fn misaligned_markov_image_rejected() {
        // Branch 0 maps [0, 0.5] with slope 1.9: image length 0.95 != 1.
        let m = TransitionMatrix::full_shift(2);
        let err = BranchSpec::new(vec![(0.0, 0.5), (0.5, 1.0)], vec![1.9, 2.0], m).unwrap_err();
        assert!(matches!(err, Error::NonMarkov { branch: 0, .. }));
    }

    #[test]
    fn reducible_matrix_rejected() {
        let err = TransitionMatrix::from_rows(&[vec![1, 0], vec![0, 1]]).unwrap_err();
        assert_eq!(err, Error::Reducible);
    }

    #[test]
    fn preimage_bounds_examples() {
        assert_eq!(TransitionMatrix::full_shift(2).preimage_bounds(), (2, 2));
        assert_eq!(golden().matrix().preimage_bounds(), (1, 2));
        // 2-cycle permutation graph: one predecessor each.
        let p = TransitionMatrix::from_rows(&[vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(p.preimage_bounds(), (1, 1));
    }

    #[test]
    fn backward_word_counts_match_matrix_power() {
        let full = TransitionMatrix::full_shift(2);
        assert_eq!(full.enumerate_backward_words(0, 2, 1000).unwrap().len(), 4);
        let g = golden();
        let words = g.matrix().enumerate_backward_words(1, 2, 1000).unwrap();
        // Column-1 sum of A^2 for [[1,1],[1,0]] is 2.
        assert_eq!(words.len(), 2);
        assert_eq!(g.matrix().count_backward_words(1, 2), 2);
        for w in &words {
            assert!(g.matrix().is_backward_word_admissible(w, 1));
        }
        // m = 0: the single empty word.
        assert_eq!(full.enumerate_backward_words(1, 0, 10).unwrap(), vec![Vec::new()]);
    }

    #[test]
    fn backward_enumeration_respects_cap() {
        let full = TransitionMatrix::full_shift(4);
        let err = full.enumerate_backward_words(0, 10, 1000).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit(_)));
    }

    #[test]
    fn min_plus_matches_exhaustive() {
        let full = TransitionMatrix::full_shift(2);
        let phi = [-1.0, -2.0];
        // All 8 words admissible; the all-2 word wins: -6.
        assert!((full.min_plus_backward(&phi, 0, 3).unwrap() + 6.0).abs() < 1e-15);
        assert_eq!(full.min_plus_backward(&phi, 0, 0).unwrap(), 0.0);

        let g = golden();
        let words = g.matrix().enumerate_backward_words(0, 2, 1000).unwrap();
        let brute = words
            .iter()
            .map(|w| w.iter().map(|&a| phi[a]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let fast = g.matrix().min_plus_backward(&phi, 0, 2).unwrap();
        assert!((fast - brute).abs() < 1e-15);
    }

    #[test]
    fn doubling_map_cylinders() {
        let spec = BranchSpec::full_shift(2);
        assert_eq!(spec.cylinder(&[0]).unwrap(), (0.0, 0.5));
        let c = spec.cylinder(&[0, 1]).unwrap();
        assert!((c.0 - 0.25).abs() < 1e-15 && (c.1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn forbidden_cylinder_errors() {
        let g = golden();
        let err = g.cylinder(&[1, 1]).unwrap_err();
        assert!(matches!(err, Error::Inadmissible(_)));
    }

    #[test]
    fn dk_distance_examples() {
        let p: Vec<(f64, f64)> = (0..12).map(|_| (0.3, 0.7)).collect();
        // Identical orbits: zero, with only the truncation tail left.
        let d = dk_distance(&p, &p, 2.0, 10).unwrap();
        assert_eq!(d.value, 0.0);
        assert!(d.tail_bound > 0.0);

        // Difference only at depth 0.
        let mut q = p.clone();
        q[0] = (0.3 + 0.125, 0.7);
        let d = dk_distance(&p, &q, 2.0, 1).unwrap();
        assert!((d.value - 0.125).abs() < 1e-15);

        // Constant termwise distance c: finite geometric sum over 10 terms.
        let r: Vec<(f64, f64)> = (0..12).map(|_| (0.3 + 0.25, 0.7)).collect();
        let d = dk_distance(&p, &r, 2.0, 10).unwrap();
        let expected = 0.25 * (2.0 - 2.0 * 2.0_f64.powi(-10));
        assert!((d.value - expected).abs() < 1e-15);
    }

    #[test]
    fn dk_rejects_bad_k() {
        let p = [(0.0, 0.0)];
        assert!(dk_distance(&p, &p, 1.0, 1).is_err());
    }

    #[test]
    fn depth_for_scale_examples() {
        let s2 = BranchSpec::full_shift(2);
        assert_eq!(s2.depth_for_scale(1.0 / 16.0).unwrap(), 4);
        let m2 = BranchSpec::full_shift(3);
        assert_eq!(m2.depth_for_scale(1.0 / 64.0).unwrap(), 4);
    }
}
