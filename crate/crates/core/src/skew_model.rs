//! Skew products f(x, y) = (E(x), g_{b(x)}(y)): an expanding Markov base
//! driving a family of contracting fiber maps, one per branch symbol.
//!
//! Fiber maps are either affine (exact arithmetic throughout) or one of a
//! small set of named smooth one-dimensional maps with quadratic form, so
//! inverses and derivative bounds stay closed-form. All smooth maps are
//! strictly increasing on [0, 1].

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::markov_base::{BasePrehistory, BranchSpec, Word, MARKOV_TOL};

/// Named smooth fiber maps. Every kind is a quadratic a y^2 + b y + c, which
/// keeps derivative bounds and inverses exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothFiber {
    /// ratio * y + offset + sigma * y * (1 - y)
    LogisticPerturbed { ratio: f64, offset: f64, sigma: f64 },
    /// ratio * y + coeff * y^2
    QuadraticPerturbed { ratio: f64, coeff: f64 },
}

impl SmoothFiber {
    fn coefficients(&self) -> (f64, f64, f64) {
        match *self {
            SmoothFiber::LogisticPerturbed { ratio, offset, sigma } => (-sigma, ratio + sigma, offset),
            SmoothFiber::QuadraticPerturbed { ratio, coeff } => (coeff, ratio, 0.0),
        }
    }
}

/// One contracting fiber map g: [0, 1] -> [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FiberMap {
    Affine { ratio: f64, offset: f64 },
    Smooth(SmoothFiber),
}

impl FiberMap {
    pub fn affine(ratio: f64, offset: f64) -> Self {
        FiberMap::Affine { ratio, offset }
    }

    pub fn eval(&self, y: f64) -> f64 {
        match self {
            FiberMap::Affine { ratio, offset } => ratio * y + offset,
            FiberMap::Smooth(s) => {
                let (a, b, c) = s.coefficients();
                (a * y + b) * y + c
            }
        }
    }

    pub fn deriv(&self, y: f64) -> f64 {
        match self {
            FiberMap::Affine { ratio, .. } => *ratio,
            FiberMap::Smooth(s) => {
                let (a, b, _) = s.coefficients();
                2.0 * a * y + b
            }
        }
    }

    /// Certified derivative bounds on [0, 1]. The derivative is affine in y,
    /// so the extrema sit at the endpoints.
    pub fn deriv_bounds(&self) -> (f64, f64) {
        match self {
            FiberMap::Affine { ratio, .. } => (*ratio, *ratio),
            FiberMap::Smooth(_) => {
                let d0 = self.deriv(0.0);
                let d1 = self.deriv(1.0);
                (d0.min(d1), d0.max(d1))
            }
        }
    }

    /// Image of [0, 1]; exact for increasing maps.
    pub fn image(&self) -> (f64, f64) {
        (self.eval(0.0), self.eval(1.0))
    }

    /// Image of a subinterval.
    pub fn image_of(&self, (lo, hi): (f64, f64)) -> (f64, f64) {
        (self.eval(lo), self.eval(hi))
    }

    /// Inverse on the image; None when `target` leaves the image by more
    /// than `MARKOV_TOL`. Quadratics are solved in closed form with the
    /// cancellation-stable root split.
    pub fn invert(&self, target: f64) -> Option<f64> {
        let (lo, hi) = self.image();
        if target < lo - MARKOV_TOL || target > hi + MARKOV_TOL {
            return None;
        }
        let y = match self {
            FiberMap::Affine { ratio, offset } => (target - offset) / ratio,
            FiberMap::Smooth(s) => {
                let (a, b, c) = s.coefficients();
                let c0 = c - target;
                if a.abs() < 1e-14 {
                    -c0 / b
                } else {
                    // b > 0 for every valid increasing map.
                    let disc = (b * b - 4.0 * a * c0).max(0.0);
                    let q = -0.5 * (b + disc.sqrt());
                    let r1 = q / a;
                    let r2 = c0 / q;
                    let in_unit = |r: f64| (-1e-9..=1.0 + 1e-9).contains(&r);
                    if in_unit(r1) && (!in_unit(r2) || (r1 - 0.5).abs() <= (r2 - 0.5).abs()) {
                        r1
                    } else {
                        r2
                    }
                }
            }
        };
        Some(y.clamp(0.0, 1.0))
    }

    fn validate(&self, index: usize) -> Result<()> {
        let (inf, sup) = self.deriv_bounds();
        if !(inf > 0.0 && sup < 1.0 && inf.is_finite()) {
            return Err(Error::ContractionViolated { index, inf, sup });
        }
        let (lo, hi) = self.image();
        if lo < -MARKOV_TOL || hi > 1.0 + MARKOV_TOL || lo > hi {
            return Err(Error::ImageEscapes { index, lo, hi });
        }
        if let FiberMap::Smooth(_) = self {
            // Declared analytic bounds are rechecked by sampling; drift here
            // means the closed forms above are wrong for this kind.
            const SAMPLES: usize = 10_000;
            for i in 0..=SAMPLES {
                let y = i as f64 / SAMPLES as f64;
                let d = self.deriv(y);
                if d < inf - 1e-12 || d > sup + 1e-12 || d <= 0.0 {
                    return Err(Error::ContractionViolated { index, inf: d, sup });
                }
            }
        }
        Ok(())
    }
}

/// Exact-overlap classes of the fiber family, with a certification flag.
/// Uncertified means smooth maps were present and symbols were left as
/// singletons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapClasses {
    pub classes: Vec<Vec<usize>>,
    pub certified: bool,
}

/// Preimage-count profile of the system on its invariant set.
#[derive(Debug, Clone, PartialEq)]
pub struct PreimageProfile {
    pub classes: OverlapClasses,
    pub d_prime: usize,
    pub d_dprime: usize,
    pub certified: bool,
}

/// A point of the invariant set, carried with finite certification: the
/// backward fiber word witnesses membership of the fiber coordinate in the
/// stable slice to resolution chi_s^q.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaPoint {
    pub itinerary: Word,
    pub base: f64,
    pub fiber: f64,
    pub cert: Word,
}

impl LambdaPoint {
    pub fn new(sys: &SkewSystem, itinerary: Word, base: f64, fiber: f64, cert: Word) -> Result<Self> {
        if itinerary.is_empty() {
            return Err(Error::InvalidInput("itinerary must be nonempty".into()));
        }
        let cyl = sys.base().cylinder(&itinerary)?;
        if base < cyl.0 - MARKOV_TOL || base > cyl.1 + MARKOV_TOL {
            return Err(Error::InvalidInput(format!(
                "base coordinate {base} outside its itinerary cylinder"
            )));
        }
        if !cert.is_empty() {
            if !sys.base().matrix().is_backward_word_admissible(&cert, itinerary[0]) {
                return Err(Error::Inadmissible(format!("certification word {cert:?}")));
            }
            let (flo, fhi) = sys.fiber_cylinder(&cert)?;
            if fiber < flo - MARKOV_TOL || fiber > fhi + MARKOV_TOL {
                return Err(Error::InvalidInput(format!(
                    "fiber coordinate {fiber} outside the certification cylinder [{flo}, {fhi}]"
                )));
            }
        } else if !(0.0..=1.0).contains(&fiber) {
            return Err(Error::InvalidInput(format!("fiber coordinate {fiber} outside [0, 1]")));
        }
        Ok(Self {
            itinerary,
            base,
            fiber,
            cert,
        })
    }

    /// Fiber-membership resolution chi_s^q carried by the certification word.
    pub fn resolution(&self, sys: &SkewSystem) -> f64 {
        sys.chi_s().powi(self.cert.len() as i32)
    }
}

/// A desk-scale c-hyperbolic model: expanding Markov base, contracting
/// conformal fibers, derived hyperbolicity constants, and the shadowing
/// scale below which backward branch classes are forced by closeness.
#[derive(Debug, Clone)]
pub struct SkewSystem {
    base: BranchSpec,
    fibers: Vec<FiberMap>,
    lambda_s: f64,
    chi_s: f64,
    chi_u: f64,
    eps0: f64,
}

/// Constructs and validates a skew system (the `build_system` entry point).
pub fn build_system(base: BranchSpec, fibers: Vec<FiberMap>) -> Result<SkewSystem> {
    SkewSystem::new(base, fibers)
}

impl SkewSystem {
    pub fn new(base: BranchSpec, fibers: Vec<FiberMap>) -> Result<Self> {
        if fibers.len() != base.d() {
            return Err(Error::CountMismatch {
                fibers: fibers.len(),
                alphabet: base.d(),
            });
        }
        let mut lambda_s = f64::INFINITY;
        let mut chi_s = 0.0_f64;
        for (i, f) in fibers.iter().enumerate() {
            f.validate(i)?;
            let (inf, sup) = f.deriv_bounds();
            lambda_s = lambda_s.min(inf);
            chi_s = chi_s.max(sup);
        }
        let chi_u = base.max_slope();
        let eps0 = Self::shadowing_scale(&base, &fibers);
        Ok(Self {
            base,
            fibers,
            lambda_s,
            chi_s,
            chi_u,
            eps0,
        })
    }

    /// Half the smallest positive separation gap in the model geometry.
    ///
    /// Gaps between base branch intervals force backward branch symbols;
    /// gaps between distinct fiber images force the branch class. The zoo
    /// bases tile [0, 1] (zero base gap), so for them the fiber separation
    /// is the operative constraint; the scale is capped at 1/2.
    fn shadowing_scale(base: &BranchSpec, fibers: &[FiberMap]) -> f64 {
        let mut min_gap = 1.0_f64;
        for a in 0..base.d().saturating_sub(1) {
            let gap = base.interval(a + 1).0 - base.interval(a).1;
            if gap > MARKOV_TOL {
                min_gap = min_gap.min(gap);
            }
        }
        let mut images: Vec<(f64, f64)> = fibers.iter().map(|f| f.image()).collect();
        images.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut reach = images[0].1;
        for &(lo, hi) in images.iter().skip(1) {
            let gap = lo - reach;
            if gap > MARKOV_TOL {
                min_gap = min_gap.min(gap);
            }
            reach = reach.max(hi);
        }
        0.5 * min_gap
    }

    pub fn base(&self) -> &BranchSpec {
        &self.base
    }

    pub fn fiber(&self, a: usize) -> &FiberMap {
        &self.fibers[a]
    }

    pub fn fibers(&self) -> &[FiberMap] {
        &self.fibers
    }

    pub fn d(&self) -> usize {
        self.base.d()
    }

    pub fn lambda_s(&self) -> f64 {
        self.lambda_s
    }

    pub fn chi_s(&self) -> f64 {
        self.chi_s
    }

    pub fn chi_u(&self) -> f64 {
        self.chi_u
    }

    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    pub fn all_affine(&self) -> bool {
        self.fibers.iter().all(|f| matches!(f, FiberMap::Affine { .. }))
    }

    /// log |g'_a(y)|: the stable-derivative potential at a point whose base
    /// coordinate carries branch `a`. Strictly negative by contraction.
    pub fn phi_s(&self, a: usize, y: f64) -> f64 {
        self.fibers[a].deriv(y).ln()
    }

    pub fn phi_s_at(&self, p: &LambdaPoint) -> f64 {
        self.phi_s(p.itinerary[0], p.fiber)
    }

    /// Depth-1 values of the stable potential (affine fibers only, where it
    /// is exactly locally constant).
    pub fn phi_s_values(&self) -> Result<Vec<f64>> {
        self.fibers
            .iter()
            .map(|f| match f {
                FiberMap::Affine { ratio, .. } => Ok(ratio.ln()),
                FiberMap::Smooth(_) => Err(Error::UnsupportedSmooth(
                    "stable potential is not locally constant for smooth fibers".into(),
                )),
            })
            .collect()
    }

    /// g_{w_1}(g_{w_2}( .. g_{w_m}([0, 1]))): outermost map = most recent
    /// symbol. Exact for affine fibers, a certified enclosure for smooth.
    pub fn fiber_cylinder(&self, w: &[usize]) -> Result<(f64, f64)> {
        if w.iter().any(|&a| a >= self.d()) {
            return Err(Error::Inadmissible(format!("fiber word {w:?}")));
        }
        let mut cur = (0.0, 1.0);
        for &a in w.iter().rev() {
            cur = self.fibers[a].image_of(cur);
        }
        Ok(cur)
    }

    /// Depth-m outer approximation of the stable slice over a point with
    /// first symbol `s`: the distinct fiber cylinders over all admissible
    /// backward words. Enumeration deduplicates identical partial
    /// compositions level by level, so the cost scales with the number of
    /// distinct intervals rather than the number of words.
    pub fn stable_slice_sample(&self, s: usize, m: usize, cap: u64) -> Result<Vec<(f64, f64)>> {
        if s >= self.d() {
            return Err(Error::InvalidInput(format!("symbol {s} out of range")));
        }
        if m == 0 {
            return Err(Error::InvalidInput("slice depth must be at least 1".into()));
        }
        // States after fixing the innermost j symbols (a_{m-j+1}, .., a_m):
        // keyed by (interval, outermost-chosen symbol). Words are processed
        // innermost first; the chain constraint between a_{j+1} and a_j is a
        // forward edge a_{j+1} -> a_j.
        let mut states: BTreeMap<(u64, u64, usize), ()> = BTreeMap::new();
        for a in 0..self.d() {
            let iv = self.fibers[a].image();
            states.insert((iv.0.to_bits(), iv.1.to_bits(), a), ());
        }
        for _ in 1..m {
            let mut next: BTreeMap<(u64, u64, usize), ()> = BTreeMap::new();
            for &(lo_bits, hi_bits, sym) in states.keys() {
                let iv = (f64::from_bits(lo_bits), f64::from_bits(hi_bits));
                for &b in self.base.matrix().successors(sym) {
                    let out = self.fibers[b].image_of(iv);
                    next.insert((out.0.to_bits(), out.1.to_bits(), b), ());
                }
            }
            states = next;
            if states.len() as u64 > cap {
                return Err(Error::ResourceLimit(format!(
                    "{} slice states exceed cap {cap}",
                    states.len()
                )));
            }
        }
        let mut intervals: Vec<(f64, f64)> = states
            .keys()
            .filter(|&&(_, _, a1)| self.base.matrix().is_edge(a1, s))
            .map(|&(lo, hi, _)| (f64::from_bits(lo), f64::from_bits(hi)))
            .collect();
        intervals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        intervals.dedup_by(|a, b| (a.0 - b.0).abs() <= MARKOV_TOL && (a.1 - b.1).abs() <= MARKOV_TOL);
        Ok(intervals)
    }

    /// Partition of symbols into exact-overlap classes: a and b are in one
    /// class iff their affine coefficients agree within `tol`. Smooth fibers
    /// make class equality undecidable here, so they come back as an
    /// uncertified singleton partition.
    pub fn overlap_classes(&self, tol: f64) -> OverlapClasses {
        if !self.all_affine() {
            return OverlapClasses {
                classes: (0..self.d()).map(|a| vec![a]).collect(),
                certified: false,
            };
        }
        let coeff = |a: usize| -> (f64, f64) {
            match self.fibers[a] {
                FiberMap::Affine { ratio, offset } => (ratio, offset),
                FiberMap::Smooth(_) => unreachable!(),
            }
        };
        let mut order: Vec<usize> = (0..self.d()).collect();
        order.sort_by(|&a, &b| coeff(a).partial_cmp(&coeff(b)).unwrap().then(a.cmp(&b)));
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for &a in &order {
            let fits = classes.last().is_some_and(|cls| {
                let (r0, t0) = coeff(cls[0]);
                let (r, t) = coeff(a);
                (r - r0).abs() <= tol && (t - t0).abs() <= tol
            });
            if fits {
                classes.last_mut().unwrap().push(a);
            } else {
                classes.push(vec![a]);
            }
        }
        for cls in classes.iter_mut() {
            cls.sort_unstable();
        }
        classes.sort_by_key(|cls| cls[0]);
        OverlapClasses {
            classes,
            certified: true,
        }
    }

    /// Class index per symbol for a given partition.
    pub fn class_of(&self, classes: &OverlapClasses) -> Vec<usize> {
        let mut idx = vec![0usize; self.d()];
        for (ci, cls) in classes.classes.iter().enumerate() {
            for &a in cls {
                idx[a] = ci;
            }
        }
        idx
    }

    /// True when the class images are pairwise disjoint with positive gaps.
    pub fn class_images_disjoint(&self, classes: &OverlapClasses) -> bool {
        let mut images: Vec<(f64, f64)> = classes
            .classes
            .iter()
            .map(|cls| self.fibers[cls[0]].image())
            .collect();
        images.sort_by(|a, b| a.partial_cmp(b).unwrap());
        images.windows(2).all(|w| w[1].0 - w[0].1 > MARKOV_TOL)
    }

    /// d' and d'': extreme preimage counts over the invariant set.
    ///
    /// Certified route: full-shift base, affine fibers, pairwise-disjoint
    /// class images; every point's count is then the size of the unique
    /// class whose image contains its fiber coordinate. Anything else falls
    /// back to counting over a deterministic depth-6 slice sample and is
    /// flagged uncertified.
    pub fn preimage_profile(&self) -> PreimageProfile {
        let classes = self.overlap_classes(MARKOV_TOL);
        let certified =
            classes.certified && self.base.matrix().is_full_shift() && self.class_images_disjoint(&classes);
        if certified {
            let sizes: Vec<usize> = classes.classes.iter().map(|c| c.len()).collect();
            return PreimageProfile {
                d_prime: *sizes.iter().min().unwrap(),
                d_dprime: *sizes.iter().max().unwrap(),
                classes,
                certified: true,
            };
        }
        let mut lo = usize::MAX;
        let mut hi = 0usize;
        for s in 0..self.d() {
            let sample = match self.stable_slice_sample(s, 6, 100_000) {
                Ok(v) => v,
                Err(_) => continue,
            };
            for &(ylo, yhi) in sample.iter().take(512) {
                let y = 0.5 * (ylo + yhi);
                let count = (0..self.d())
                    .filter(|&b| {
                        let (ilo, ihi) = self.fibers[b].image();
                        self.base.matrix().is_edge(b, s) && y >= ilo && y <= ihi
                    })
                    .count();
                lo = lo.min(count);
                hi = hi.max(count);
            }
        }
        if lo == usize::MAX {
            lo = 0;
        }
        PreimageProfile {
            d_prime: lo.max(1),
            d_dprime: hi.max(1),
            classes,
            certified: false,
        }
    }

    /// All one-step preimages of a point inside the invariant set, certified
    /// to the depth the input's certification word allows.
    pub fn preimages_of_point(&self, p: &LambdaPoint) -> Result<Vec<LambdaPoint>> {
        let s0 = p.itinerary[0];
        let mut out = Vec::new();
        for b in 0..self.d() {
            if !self.base.matrix().is_edge(b, s0) {
                continue;
            }
            let (ilo, ihi) = self.fibers[b].image();
            if !p.cert.is_empty() {
                let (clo, chi) = self.fiber_cylinder(&p.cert)?;
                let inside = clo >= ilo - MARKOV_TOL && chi <= ihi + MARKOV_TOL;
                let disjoint = chi < ilo - MARKOV_TOL || clo > ihi + MARKOV_TOL;
                if disjoint {
                    continue;
                }
                if !inside {
                    return Err(Error::DepthExhausted(format!(
                        "certification cylinder [{clo}, {chi}] straddles the image of branch {b}"
                    )));
                }
                let fiber = self.fibers[b]
                    .invert(p.fiber)
                    .ok_or_else(|| Error::DepthExhausted(format!("branch {b} lost the fiber preimage")))?;
                // Same map => the certification tail transfers exactly.
                let cert = if self.fibers[b] == self.fibers[p.cert[0]] {
                    p.cert[1..].to_vec()
                } else {
                    Vec::new()
                };
                let mut itinerary = Vec::with_capacity(p.itinerary.len() + 1);
                itinerary.push(b);
                itinerary.extend_from_slice(&p.itinerary);
                out.push(LambdaPoint::new(
                    self,
                    itinerary,
                    self.base.pullback(b, p.base),
                    fiber,
                    cert,
                )?);
            } else {
                // Uncertified input: pointwise interval tests only.
                if p.fiber > ilo + MARKOV_TOL && p.fiber < ihi - MARKOV_TOL {
                    let fiber = self.fibers[b].invert(p.fiber).expect("strict interior point");
                    let mut itinerary = Vec::with_capacity(p.itinerary.len() + 1);
                    itinerary.push(b);
                    itinerary.extend_from_slice(&p.itinerary);
                    out.push(LambdaPoint::new(
                        self,
                        itinerary,
                        self.base.pullback(b, p.base),
                        fiber,
                        Vec::new(),
                    )?);
                } else if (p.fiber - ilo).abs() <= MARKOV_TOL || (p.fiber - ihi).abs() <= MARKOV_TOL {
                    // On the image boundary the fiber preimage is still
                    // well-defined (endpoint); includes e.g. fiber 0 or 1.
                    let fiber = self.fibers[b]
                        .invert(p.fiber)
                        .ok_or_else(|| Error::DepthExhausted(format!("branch {b}: boundary inversion failed")))?;
                    let mut itinerary = Vec::with_capacity(p.itinerary.len() + 1);
                    itinerary.push(b);
                    itinerary.extend_from_slice(&p.itinerary);
                    out.push(LambdaPoint::new(
                        self,
                        itinerary,
                        self.base.pullback(b, p.base),
                        fiber,
                        Vec::new(),
                    )?);
                }
            }
        }
        Ok(out)
    }
}

/// A joint backward orbit (y, y_{-1}, .., y_{-m}) over a base prehistory:
/// y_{-i-1} = g_{a_{i+1}}^{-1}(y_{-i}), all coordinates staying in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Prehistory {
    pub base: BasePrehistory,
    pub fiber_orbit: Vec<f64>,
}

impl Prehistory {
    pub fn new(sys: &SkewSystem, base: BasePrehistory, y0: f64) -> Result<Self> {
        let mut fiber_orbit = Vec::with_capacity(base.len() + 1);
        let mut y = y0;
        fiber_orbit.push(y);
        for (i, &a) in base.backward_word.iter().enumerate() {
            y = sys.fibers[a].invert(y).ok_or_else(|| {
                Error::Inadmissible(format!(
                    "fiber coordinate has no branch-{a} preimage at backward step {}",
                    i + 1
                ))
            })?;
            fiber_orbit.push(y);
        }
        Ok(Self { base, fiber_orbit })
    }

    /// Length n(C) of the prehistory.
    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    /// Joint (base, fiber) coordinates from the anchor into the past.
    pub fn points(&self, sys: &SkewSystem) -> Vec<(f64, f64)> {
        self.base
            .base_points(sys.base())
            .into_iter()
            .zip(self.fiber_orbit.iter().copied())
            .collect()
    }

    /// Sum of the stable potential over the m+1 orbit points. The branch
    /// acting at the anchor is its first itinerary symbol; at depth i >= 1
    /// it is the i-th backward symbol.
    pub fn sum_phi_s(&self, sys: &SkewSystem) -> f64 {
        let mut total = sys.phi_s(self.base.anchor_word[0], self.fiber_orbit[0]);
        for (i, &a) in self.base.backward_word.iter().enumerate() {
            total += sys.phi_s(a, self.fiber_orbit[i + 1]);
        }
        total
    }
}

/// Ratio of stable derivative products along two eps-shadowed prehistories
/// of equal length. Exactly 1 for affine fibers with matching symbols.
pub fn distortion_ratio(
    sys: &SkewSystem,
    c: &Prehistory,
    shadowed: &Prehistory,
    eps: f64,
) -> Result<f64> {
    if c.len() != shadowed.len() {
        return Err(Error::InvalidInput(format!(
            "prehistory lengths differ: {} vs {}",
            c.len(),
            shadowed.len()
        )));
    }
    let pc = c.points(sys);
    let ps = shadowed.points(sys);
    for (i, (a, b)) in pc.iter().zip(ps.iter()).enumerate() {
        let dist = (a.0 - b.0).abs().max((a.1 - b.1).abs());
        if dist >= eps {
            return Err(Error::NotShadowed { step: i, dist, eps });
        }
    }
    let mut ratio = 1.0;
    for i in 1..=c.len() {
        let da = sys.fibers[shadowed.base.backward_word[i - 1]].deriv(shadowed.fiber_orbit[i]);
        let db = sys.fibers[c.base.backward_word[i - 1]].deriv(c.fiber_orbit[i]);
        ratio *= da / db;
    }
    Ok(ratio)
}

/// Empirical Lipschitz constant of the stable potential over sampled pairs,
/// with the max-coordinate distance in the denominator.
pub fn lipschitz_diagnostic(sys: &SkewSystem, pairs: &[(LambdaPoint, LambdaPoint)]) -> f64 {
    let mut worst = 0.0_f64;
    for (p, q) in pairs {
        let dist = (p.base - q.base).abs().max((p.fiber - q.fiber).abs());
        if dist == 0.0 {
            continue;
        }
        let num = (sys.phi_s_at(p) - sys.phi_s_at(q)).abs();
        worst = worst.max(num / dist);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    #[test]
    fn m1_constants() {
        let sys = zoo::m1();
        assert!((sys.lambda_s() - 1.0 / 3.0).abs() < 1e-15);
        assert!((sys.chi_s() - 1.0 / 3.0).abs() < 1e-15);
        assert!((sys.chi_u() - 4.0).abs() < 1e-15);
        // Class image gap 1/3, halved.
        assert!((sys.eps0() - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn m2_constants() {
        let sys = zoo::m2();
        assert!((sys.chi_s() - 0.25).abs() < 1e-15);
        assert!((sys.chi_u() - 3.0).abs() < 1e-15);
        assert!((sys.eps0() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn escaping_fiber_rejected() {
        let base = BranchSpec::full_shift(2);
        let fibers = vec![FiberMap::affine(0.5, 0.7), FiberMap::affine(0.5, 0.0)];
        let err = SkewSystem::new(base, fibers).unwrap_err();
        assert!(matches!(err, Error::ImageEscapes { index: 0, .. }));
    }

    #[test]
    fn expanding_fiber_rejected() {
        let base = BranchSpec::full_shift(2);
        let fibers = vec![FiberMap::affine(1.2, 0.0), FiberMap::affine(0.5, 0.0)];
        let err = SkewSystem::new(base, fibers).unwrap_err();
        assert!(matches!(err, Error::ContractionViolated { index: 0, .. }));
    }

    #[test]
    fn phi_s_values() {
        let m1 = zoo::m1();
        assert!((m1.phi_s(0, 0.5) - (1.0_f64 / 3.0).ln()).abs() < 1e-15);
        let m2 = zoo::m2();
        assert!((m2.phi_s(2, 0.1) - 0.25_f64.ln()).abs() < 1e-15);
        // Smooth map: derivative at 0 equals the affine part.
        let g = FiberMap::Smooth(SmoothFiber::QuadraticPerturbed {
            ratio: 1.0 / 3.0,
            coeff: 0.01,
        });
        assert!((g.deriv(0.0).ln() - (1.0_f64 / 3.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn fiber_cylinder_examples() {
        let m1 = zoo::m1();
        let c = m1.fiber_cylinder(&[0, 0]).unwrap();
        assert!((c.0 - 0.0).abs() < 1e-15 && (c.1 - 1.0 / 9.0).abs() < 1e-15);

        let m2 = zoo::m2();
        let c = m2.fiber_cylinder(&[2, 0]).unwrap();
        assert!((c.0 - 0.75).abs() < 1e-15 && (c.1 - 13.0 / 16.0).abs() < 1e-15);

        assert_eq!(m2.fiber_cylinder(&[]).unwrap(), (0.0, 1.0));
    }

    #[test]
    fn m1_slice_collapses_to_four_intervals() {
        let m1 = zoo::m1();
        let sample = m1.stable_slice_sample(0, 2, 10_000).unwrap();
        assert_eq!(sample.len(), 4);
        let expected = [
            (0.0, 1.0 / 9.0),
            (2.0 / 9.0, 1.0 / 3.0),
            (2.0 / 3.0, 7.0 / 9.0),
            (8.0 / 9.0, 1.0),
        ];
        for (got, want) in sample.iter().zip(expected.iter()) {
            assert!((got.0 - want.0).abs() < 1e-12 && (got.1 - want.1).abs() < 1e-12);
        }
        for s in sample {
            assert!(s.1 - s.0 <= m1.chi_s().powi(2) + 1e-12);
        }
    }

    #[test]
    fn m2_slice_at_depth_one() {
        let m2 = zoo::m2();
        let sample = m2.stable_slice_sample(0, 1, 100).unwrap();
        assert_eq!(sample.len(), 2);
        assert!((sample[0].0 - 0.0).abs() < 1e-15 && (sample[0].1 - 0.25).abs() < 1e-15);
        assert!((sample[1].0 - 0.75).abs() < 1e-15 && (sample[1].1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn slice_refines_under_depth() {
        let m1 = zoo::m1();
        for m in 1..=6 {
            let coarse = m1.stable_slice_sample(0, m, 100_000).unwrap();
            let fine = m1.stable_slice_sample(0, m + 1, 100_000).unwrap();
            for f in &fine {
                assert!(
                    coarse
                        .iter()
                        .any(|c| f.0 >= c.0 - 1e-12 && f.1 <= c.1 + 1e-12),
                    "depth-{} interval {f:?} not nested",
                    m + 1
                );
            }
        }
    }

    #[test]
    fn overlap_classes_examples() {
        let m1 = zoo::m1();
        let cls = m1.overlap_classes(1e-12);
        assert!(cls.certified);
        assert_eq!(cls.classes, vec![vec![0, 1], vec![2, 3]]);

        let m2 = zoo::m2();
        assert_eq!(m2.overlap_classes(1e-12).classes, vec![vec![0, 1], vec![2]]);

        let smooth = zoo::m1_smooth(0.02);
        let cls = smooth.overlap_classes(1e-12);
        assert!(!cls.certified);
        assert_eq!(cls.classes.len(), 4);
    }

    #[test]
    fn preimage_profiles() {
        let m1 = zoo::m1().preimage_profile();
        assert!(m1.certified);
        assert_eq!((m1.d_prime, m1.d_dprime), (2, 2));

        let m2 = zoo::m2().preimage_profile();
        assert!(m2.certified);
        assert_eq!((m2.d_prime, m2.d_dprime), (1, 2));

        // Strongly separated singleton fibers: one preimage everywhere.
        let base = BranchSpec::full_shift(2);
        let sys = SkewSystem::new(
            base,
            vec![FiberMap::affine(0.25, 0.0), FiberMap::affine(0.25, 0.75)],
        )
        .unwrap();
        let p = sys.preimage_profile();
        assert!(p.certified);
        assert_eq!((p.d_prime, p.d_dprime), (1, 1));
    }

    #[test]
    fn preimages_of_concrete_points() {
        let m1 = zoo::m1();
        let p = LambdaPoint::new(&m1, vec![0], 0.0, 0.0, vec![0, 0, 0]).unwrap();
        let pre = m1.preimages_of_point(&p).unwrap();
        assert_eq!(pre.len(), 2);
        for q in &pre {
            assert!((q.fiber - 0.0).abs() < 1e-12);
            assert!(q.itinerary[0] == 0 || q.itinerary[0] == 1);
        }

        let m2 = zoo::m2();
        let p = LambdaPoint::new(&m2, vec![0], 0.0, 1.0, vec![2, 2, 2]).unwrap();
        let pre = m2.preimages_of_point(&p).unwrap();
        assert_eq!(pre.len(), 1);
        assert_eq!(pre[0].itinerary[0], 2);
        assert!((pre[0].fiber - 1.0).abs() < 1e-12);

        // Fiber coordinate in the central gap: no preimages, no error.
        let p = LambdaPoint::new(&m2, vec![0], 0.0, 0.5, vec![]).unwrap();
        assert!(m2.preimages_of_point(&p).unwrap().is_empty());
    }

    #[test]
    fn affine_distortion_is_exactly_one() {
        let m1 = zoo::m1();
        let eps = 0.1;
        for m in 0..=12 {
            let word: Word = (0..m).map(|i| (i % 4) as usize).collect();
            let base = BasePrehistory::new(m1.base(), vec![0], 0.1, word.clone()).unwrap();
            let c = Prehistory::new(&m1, base, 0.05).unwrap();
            let base2 = BasePrehistory::new(m1.base(), vec![0], 0.1, word).unwrap();
            let shadowed = Prehistory::new(&m1, base2, 0.05 + 1e-3).unwrap();
            let r = distortion_ratio(&m1, &c, &shadowed, eps).unwrap();
            assert_eq!(r, 1.0, "m = {m}");
        }
    }

    #[test]
    fn distortion_rejects_separated_orbits() {
        let m1 = zoo::m1();
        let base = BasePrehistory::new(m1.base(), vec![0], 0.0, vec![0]).unwrap();
        let c = Prehistory::new(&m1, base.clone(), 0.0).unwrap();
        let far = Prehistory::new(&m1, BasePrehistory::new(m1.base(), vec![0], 0.2, vec![0]).unwrap(), 0.9).unwrap();
        let err = distortion_ratio(&m1, &c, &far, 0.05).unwrap_err();
        assert!(matches!(err, Error::NotShadowed { .. }));
    }

    #[test]
    fn lipschitz_zero_for_same_symbol_affine_pairs() {
        let m1 = zoo::m1();
        let p = LambdaPoint::new(&m1, vec![1], 0.3, 0.0, vec![]).unwrap();
        let q = LambdaPoint::new(&m1, vec![1], 0.26, 0.05, vec![]).unwrap();
        assert_eq!(lipschitz_diagnostic(&m1, &[(p, q)]), 0.0);
    }

    #[test]
    fn smooth_inverse_roundtrip() {
        let g = FiberMap::Smooth(SmoothFiber::LogisticPerturbed {
            ratio: 1.0 / 3.0,
            offset: 2.0 / 3.0,
            sigma: 0.02,
        });
        for i in 0..=100 {
            let y = i as f64 / 100.0;
            let z = g.eval(y);
            let back = g.invert(z).unwrap();
            assert!((back - y).abs() < 1e-12, "y = {y}, back = {back}");
        }
        assert!(g.invert(0.1).is_none());
    }
}
