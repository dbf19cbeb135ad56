//! Lattice boxes, tilted squares and the diagonal sparsity predicates on Z^d.
//!
//! Every region hands out its sites in lexicographic coordinate order. That
//! order is the matrix index map used by the operator layer.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

/// A point of Z^d, d ∈ {1,2,3}. Unused coordinates are zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    coords: [i64; MAX_DIM],
    dim: u8,
}

impl Site {
    pub fn new(coords: &[i64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::Geometry(format!(
                "dimension {} not in 1..={MAX_DIM}",
                coords.len()
            )));
        }
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Self {
            coords: c,
            dim: coords.len() as u8,
        })
    }

    pub fn origin(dim: usize) -> Result<Self> {
        Self::new(&vec![0; dim])
    }

    pub fn d1(x: i64) -> Self {
        Self {
            coords: [x, 0, 0],
            dim: 1,
        }
    }

    pub fn d2(x: i64, y: i64) -> Self {
        Self {
            coords: [x, y, 0],
            dim: 2,
        }
    }

    pub fn d3(x: i64, y: i64, z: i64) -> Self {
        Self {
            coords: [x, y, z],
            dim: 3,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords[..self.dim()]
    }

    pub fn l1_distance(&self, other: &Site) -> u64 {
        self.coords
            .iter()
            .zip(other.coords.iter())
            .map(|(a, b)| a.abs_diff(*b))
            .sum()
    }

    pub fn shifted(&self, axis: usize, delta: i64) -> Site {
        let mut s = *self;
        s.coords[axis] += delta;
        s
    }

    /// The 2d nearest neighbours in Z^d.
    pub fn neighbors(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.dim()).flat_map(move |axis| [self.shifted(axis, -1), self.shifted(axis, 1)])
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// The centred cube `center + {-⌊L/2⌋,…,⌊L/2⌋}^d` with odd side `L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LatticeBox {
    center: Site,
    side: usize,
}

impl LatticeBox {
    pub fn new(center: Site, side: usize) -> Result<Self> {
        if side == 0 || side % 2 == 0 {
            return Err(Error::Geometry(format!(
                "box side must be odd and positive, got {side}"
            )));
        }
        Ok(Self { center, side })
    }

    pub fn centered(dim: usize, side: usize) -> Result<Self> {
        Self::new(Site::origin(dim)?, side)
    }

    pub fn center(&self) -> Site {
        self.center
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn half(&self) -> i64 {
        (self.side / 2) as i64
    }

    pub fn cardinality(&self) -> usize {
        self.side.pow(self.dim() as u32)
    }

    pub fn contains(&self, s: &Site) -> bool {
        s.dim() == self.dim()
            && s
                .coords()
                .iter()
                .zip(self.center.coords())
                .all(|(a, c)| (a - c).abs() <= self.half())
    }

    /// Sites in lexicographic order.
    pub fn enumerate(&self) -> Vec<Site> {
        let lo: Vec<i64> = self.center.coords().iter().map(|c| c - self.half()).collect();
        cuboid_sites(&lo, self.side)
    }

    /// Sites at ℓ¹-distance 1 from the complement.
    pub fn inner_boundary(&self) -> Vec<Site> {
        let h = self.half();
        self.enumerate()
            .into_iter()
            .filter(|s| {
                s.coords()
                    .iter()
                    .zip(self.center.coords())
                    .any(|(a, c)| (a - c).abs() == h)
            })
            .collect()
    }
}

fn cuboid_sites(lo: &[i64], side: usize) -> Vec<Site> {
    let dim = lo.len();
    let n = side.pow(dim as u32);
    let mut out = Vec::with_capacity(n);
    for flat in 0..n {
        let mut rest = flat;
        let mut c = [0i64; MAX_DIM];
        for axis in (0..dim).rev() {
            c[axis] = lo[axis] + (rest % side) as i64;
            rest /= side;
        }
        out.push(Site::new(&c[..dim]).expect("dimension checked"));
    }
    out
}

/// The tilted rectangle `{(x,y): x+y ∈ s_range, x−y ∈ t_range}` with
/// inclusive integer ranges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TiltedRegion {
    s_lo: i64,
    s_hi: i64,
    t_lo: i64,
    t_hi: i64,
}

impl TiltedRegion {
    pub fn new(s: (i64, i64), t: (i64, i64)) -> Result<Self> {
        if s.0 > s.1 || t.0 > t.1 {
            return Err(Error::Geometry(format!(
                "empty tilted interval s={s:?} t={t:?}"
            )));
        }
        Ok(Self {
            s_lo: s.0,
            s_hi: s.1,
            t_lo: t.0,
            t_hi: t.1,
        })
    }

    /// Tilted square of side `side` with lower corner `(s_lo, t_lo)`.
    pub fn square(s_lo: i64, t_lo: i64, side: usize) -> Result<Self> {
        if side == 0 {
            return Err(Error::Geometry("tilted square of side 0".into()));
        }
        let w = side as i64 - 1;
        Self::new((s_lo, s_lo + w), (t_lo, t_lo + w))
    }

    pub fn s_range(&self) -> (i64, i64) {
        (self.s_lo, self.s_hi)
    }

    pub fn t_range(&self) -> (i64, i64) {
        (self.t_lo, self.t_hi)
    }

    pub fn s_len(&self) -> usize {
        (self.s_hi - self.s_lo + 1) as usize
    }

    pub fn t_len(&self) -> usize {
        (self.t_hi - self.t_lo + 1) as usize
    }

    /// ℓ(Q) when the region is a square.
    pub fn side(&self) -> Option<usize> {
        (self.s_len() == self.t_len()).then(|| self.s_len())
    }

    pub fn contains(&self, p: &Site) -> bool {
        if p.dim() != 2 {
            return false;
        }
        let (s, t) = tilted_coords(p);
        (self.s_lo..=self.s_hi).contains(&s) && (self.t_lo..=self.t_hi).contains(&t)
    }

    /// Lattice points of the region, lexicographic in (x, y).
    pub fn sites(&self) -> Vec<Site> {
        let mut out = Vec::new();
        for s in self.s_lo..=self.s_hi {
            for t in self.t_lo..=self.t_hi {
                if (s - t).rem_euclid(2) == 0 {
                    out.push(Site::d2((s + t) / 2, (s - t) / 2));
                }
            }
        }
        out.sort();
        out
    }

    /// Number of region sites on the diagonal `x + y = k` (sign `+`) or
    /// `x − y = k` (sign `−`).
    fn diagonal_len(&self, sign: Diagonal, k: i64) -> usize {
        let (own, other) = match sign {
            Diagonal::Plus => ((self.s_lo, self.s_hi), (self.t_lo, self.t_hi)),
            Diagonal::Minus => ((self.t_lo, self.t_hi), (self.s_lo, self.s_hi)),
        };
        if k < own.0 || k > own.1 {
            return 0;
        }
        (other.0..=other.1)
            .filter(|u| (k - u).rem_euclid(2) == 0)
            .count()
    }

    /// The concentric square ½Q of side ⌈ℓ/2⌉; ties in centring go to the
    /// lower endpoint.
    pub fn half(&self) -> Result<Self> {
        let side = self
            .side()
            .ok_or_else(|| Error::Geometry("½Q needs a tilted square".into()))?;
        let h = side.div_ceil(2);
        let offset = ((side - h) / 2) as i64;
        Self::square(self.s_lo + offset, self.t_lo + offset, h)
    }

    /// Disjoint grid of `width × width` tilted squares tiling the square
    /// from its lower corner; incomplete strips are left out.
    pub fn subdivide(&self, width: usize) -> Result<Vec<Self>> {
        if width == 0 {
            return Err(Error::Geometry("subdivision width 0".into()));
        }
        let ns = self.s_len() / width;
        let nt = self.t_len() / width;
        let mut out = Vec::with_capacity(ns * nt);
        for i in 0..ns {
            for j in 0..nt {
                out.push(Self::square(
                    self.s_lo + (i * width) as i64,
                    self.t_lo + (j * width) as i64,
                    width,
                )?);
            }
        }
        Ok(out)
    }
}

pub fn tilted_coords(p: &Site) -> (i64, i64) {
    let c = p.coords();
    (c[0] + c[1], c[0] - c[1])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Diagonal {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SparsityVerdict {
    pub plus: bool,
    pub minus: bool,
}

impl SparsityVerdict {
    pub fn sparse(&self) -> bool {
        self.plus && self.minus
    }
}

/// Per-sign (δ,±)-sparsity of `frozen` inside `region`. Diagonals that miss
/// the region are skipped.
pub fn diagonal_sparsity(
    frozen: &HashSet<Site>,
    region: &TiltedRegion,
    delta: f64,
) -> SparsityVerdict {
    let mut plus_hits: HashMap<i64, usize> = HashMap::new();
    let mut minus_hits: HashMap<i64, usize> = HashMap::new();
    for p in frozen.iter().filter(|p| region.contains(p)) {
        let (s, t) = tilted_coords(p);
        *plus_hits.entry(s).or_default() += 1;
        *minus_hits.entry(t).or_default() += 1;
    }
    let passes = |hits: &HashMap<i64, usize>, sign| {
        hits.iter().all(|(&k, &count)| {
            let len = region.diagonal_len(sign, k);
            len == 0 || count as f64 <= delta * len as f64
        })
    };
    SparsityVerdict {
        plus: passes(&plus_hits, Diagonal::Plus),
        minus: passes(&minus_hits, Diagonal::Minus),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegularityVerdict {
    pub regular: bool,
    /// Total cardinality of the witness squares where `frozen` is not δ-sparse.
    pub nonsparse_mass: usize,
    /// δ·|E|.
    pub budget: f64,
}

/// δ-regularity of `frozen` in `domain`, witnessed by a caller-supplied
/// family of disjoint tilted squares inside the domain.
pub fn delta_regularity(
    frozen: &HashSet<Site>,
    domain: &Region,
    delta: f64,
    squares: &[TiltedRegion],
) -> Result<RegularityVerdict> {
    let mut owner: HashMap<Site, usize> = HashMap::new();
    let mut nonsparse_mass = 0;
    for (j, q) in squares.iter().enumerate() {
        let sites = q.sites();
        for p in &sites {
            if !domain.contains(p) {
                return Err(Error::Geometry(format!(
                    "witness square {j} leaves the domain at {p}"
                )));
            }
            if let Some(&i) = owner.get(p) {
                return Err(Error::OverlappingSquares(i, j));
            }
            owner.insert(*p, j);
        }
        if !diagonal_sparsity(frozen, q, delta).sparse() {
            nonsparse_mass += sites.len();
        }
    }
    let budget = delta * domain.len() as f64;
    Ok(RegularityVerdict {
        regular: nonsparse_mass as f64 <= budget,
        nonsparse_mass,
        budget,
    })
}

/// How a region was built; drives `center()` and `side()`.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Box(LatticeBox),
    /// `origin + {0,…,side−1}^d`, any side ≥ 1.
    Cuboid { origin: Site, side: usize },
    Tilted(TiltedRegion),
    Sites,
}

/// A finite site set with a fixed index map and its nearest-neighbour bonds.
#[derive(Clone, Debug)]
pub struct Region {
    dim: usize,
    shape: Shape,
    sites: Vec<Site>,
    index: HashMap<Site, usize>,
    bonds: Vec<(usize, usize)>,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.sites == other.sites
    }
}

impl Region {
    fn build(dim: usize, shape: Shape, mut sites: Vec<Site>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::Geometry("empty region".into()));
        }
        if let Some(bad) = sites.iter().find(|s| s.dim() != dim) {
            return Err(Error::Geometry(format!("site {bad} is not in dimension {dim}")));
        }
        sites.sort();
        sites.dedup();
        let index: HashMap<Site, usize> =
            sites.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let mut bonds = Vec::new();
        for (i, s) in sites.iter().enumerate() {
            for axis in 0..dim {
                if let Some(&j) = index.get(&s.shifted(axis, 1)) {
                    bonds.push((i, j));
                }
            }
        }
        Ok(Self {
            dim,
            shape,
            sites,
            index,
            bonds,
        })
    }

    pub fn from_box(b: LatticeBox) -> Self {
        Self::build(b.dim(), Shape::Box(b), b.enumerate()).expect("box is nonempty")
    }

    pub fn centered_box(dim: usize, side: usize) -> Result<Self> {
        Ok(Self::from_box(LatticeBox::centered(dim, side)?))
    }

    pub fn cuboid(origin: Site, side: usize) -> Result<Self> {
        if side == 0 {
            return Err(Error::Geometry("cuboid side 0".into()));
        }
        let sites = cuboid_sites(origin.coords(), side);
        Self::build(origin.dim(), Shape::Cuboid { origin, side }, sites)
    }

    pub fn tilted(q: TiltedRegion) -> Result<Self> {
        Self::build(2, Shape::Tilted(q), q.sites())
    }

    pub fn from_sites(dim: usize, sites: Vec<Site>) -> Result<Self> {
        Self::build(dim, Shape::Sites, sites)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> Site {
        self.sites[i]
    }

    pub fn index_of(&self, s: &Site) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn require_index(&self, s: &Site) -> Result<usize> {
        self.index_of(s).ok_or(Error::SiteOutsideRegion(*s))
    }

    pub fn contains(&self, s: &Site) -> bool {
        self.index.contains_key(s)
    }

    /// Nearest-neighbour pairs `(i, j)` with `i < j`, each listed once.
    pub fn bonds(&self) -> &[(usize, usize)] {
        &self.bonds
    }

    /// Indices of sites having a lattice neighbour outside the region.
    pub fn inner_boundary(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.sites[i].neighbors().any(|n| !self.contains(&n)))
            .collect()
    }

    /// Side length L for boxes, cuboids and tilted squares.
    pub fn side(&self) -> Option<usize> {
        match &self.shape {
            Shape::Box(b) => Some(b.side()),
            Shape::Cuboid { side, .. } => Some(*side),
            Shape::Tilted(q) => q.side(),
            Shape::Sites => None,
        }
    }

    /// Centre site: the box centre, or the lower median corner of a cuboid.
    pub fn center(&self) -> Option<Site> {
        match &self.shape {
            Shape::Box(b) => Some(b.center()),
            Shape::Cuboid { origin, side } => {
                let c: Vec<i64> = origin
                    .coords()
                    .iter()
                    .map(|o| o + ((side - 1) / 2) as i64)
                    .collect();
                Site::new(&c).ok()
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(sites: &[Site]) -> HashSet<Site> {
        sites.iter().copied().collect()
    }

    #[test]
    fn enumerate_small_boxes() {
        let b = LatticeBox::centered(1, 3).unwrap();
        assert_eq!(b.enumerate(), vec![Site::d1(-1), Site::d1(0), Site::d1(1)]);

        let b = LatticeBox::centered(2, 1).unwrap();
        assert_eq!(b.enumerate(), vec![Site::d2(0, 0)]);

        let sites = LatticeBox::centered(2, 3).unwrap().enumerate();
        assert_eq!(sites.len(), 9);
        assert_eq!(sites[0], Site::d2(-1, -1));
        assert_eq!(sites[8], Site::d2(1, 1));
        assert!(sites.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn even_or_zero_side_rejected() {
        assert!(LatticeBox::centered(2, 4).is_err());
        assert!(LatticeBox::centered(1, 0).is_err());
        assert!(LatticeBox::centered(4, 3).is_err());
    }

    #[test]
    fn inner_boundary_examples() {
        let b = LatticeBox::centered(1, 3).unwrap();
        assert_eq!(b.inner_boundary(), vec![Site::d1(-1), Site::d1(1)]);
        let b = LatticeBox::centered(1, 1).unwrap();
        assert_eq!(b.inner_boundary(), vec![Site::d1(0)]);
        let b = LatticeBox::centered(2, 3).unwrap();
        let bd = b.inner_boundary();
        assert_eq!(bd.len(), 8);
        assert!(!bd.contains(&Site::d2(0, 0)));
    }

    #[test]
    fn region_boundary_matches_box_boundary() {
        for dim in 1..=3 {
            for side in [1, 3, 5] {
                let b = LatticeBox::centered(dim, side).unwrap();
                let r = Region::from_box(b);
                let from_region: Vec<Site> =
                    r.inner_boundary().into_iter().map(|i| r.site(i)).collect();
                assert_eq!(from_region, b.inner_boundary());
            }
        }
    }

    #[test]
    fn tilted_examples() {
        let q = TiltedRegion::new((0, 0), (0, 0)).unwrap();
        assert_eq!(q.sites(), vec![Site::d2(0, 0)]);

        let q = TiltedRegion::new((0, 2), (0, 2)).unwrap();
        let expected = vec![
            Site::d2(0, 0),
            Site::d2(1, -1),
            Site::d2(1, 0),
            Site::d2(1, 1),
            Site::d2(2, 0),
        ];
        assert_eq!(q.sites(), expected);

        let q = TiltedRegion::new((1, 1), (0, 0)).unwrap();
        assert!(q.sites().is_empty());
    }

    #[test]
    fn sparsity_examples() {
        let q = TiltedRegion::new((0, 2), (0, 2)).unwrap();
        assert!(diagonal_sparsity(&HashSet::new(), &q, 0.0).sparse());

        let full = set(&q.sites());
        assert!(!diagonal_sparsity(&full, &q, 0.5).sparse());

        // D_0^+ ∩ R = {(0,0), (1,-1)}: ratio 1/2 on both signs
        let origin = set(&[Site::d2(0, 0)]);
        assert!(diagonal_sparsity(&origin, &q, 0.5).sparse());
        let v = diagonal_sparsity(&origin, &q, 0.4);
        assert!(!v.plus && !v.minus);

        // (1,0) is alone on D_1^+ and D_1^-
        let v = diagonal_sparsity(&set(&[Site::d2(1, 0)]), &q, 0.5);
        assert!(!v.plus && !v.minus);
    }

    #[test]
    fn regularity_examples() {
        let q = TiltedRegion::square(0, 0, 8).unwrap();
        let domain = Region::tilted(q).unwrap();
        let family = q.subdivide(2).unwrap();

        let v = delta_regularity(&HashSet::new(), &domain, 0.0, &family).unwrap();
        assert!(v.regular);

        let v = delta_regularity(&set(&q.sites()), &domain, 0.0, &[]).unwrap();
        assert!(v.regular);
        assert_eq!(v.nonsparse_mass, 0);

        // one witness square covering 8 > 0.1·32 sites, fully frozen
        let big = TiltedRegion::square(0, 0, 4).unwrap();
        let v = delta_regularity(&set(&q.sites()), &domain, 0.1, &[big]).unwrap();
        assert_eq!(v.nonsparse_mass, 8);
        assert!(!v.regular);
    }

    #[test]
    fn overlapping_squares_rejected() {
        let q = TiltedRegion::square(0, 0, 8).unwrap();
        let domain = Region::tilted(q).unwrap();
        let a = TiltedRegion::square(0, 0, 4).unwrap();
        let b = TiltedRegion::square(2, 2, 4).unwrap();
        assert_eq!(
            delta_regularity(&HashSet::new(), &domain, 0.1, &[a, b]),
            Err(Error::OverlappingSquares(0, 1))
        );
        let outside = TiltedRegion::square(6, 6, 4).unwrap();
        assert!(delta_regularity(&HashSet::new(), &domain, 0.1, &[outside]).is_err());
    }

    #[test]
    fn half_square() {
        let q = TiltedRegion::square(0, 0, 8).unwrap();
        let h = q.half().unwrap();
        assert_eq!(h.side(), Some(4));
        assert_eq!(h.s_range(), (2, 5));
        let q = TiltedRegion::square(0, 0, 5).unwrap();
        let h = q.half().unwrap();
        assert_eq!(h.side(), Some(3));
        assert_eq!(h.s_range(), (1, 3));
    }

    #[test]
    fn cuboid_center_and_bonds() {
        let r = Region::cuboid(Site::d1(0), 2).unwrap();
        assert_eq!(r.center(), Some(Site::d1(0)));
        assert_eq!(r.bonds(), &[(0, 1)]);
        let r = Region::cuboid(Site::d2(0, 0), 3).unwrap();
        assert_eq!(r.bonds().len(), 12);
    }

    proptest! {
        #[test]
        fn box_cardinality(dim in 1usize..=3, k in 0usize..4) {
            let side = 2 * k + 1;
            let b = LatticeBox::centered(dim, side).unwrap();
            prop_assert_eq!(b.enumerate().len(), side.pow(dim as u32));
            prop_assert!(b.inner_boundary().iter().all(|s| b.contains(s)));
            if dim == 1 && side >= 3 {
                prop_assert_eq!(b.inner_boundary().len(), 2);
            }
        }

        #[test]
        fn tilted_parity(s0 in -5i64..5, ds in 0i64..6, t0 in -5i64..5, dt in 0i64..6) {
            let q = TiltedRegion::new((s0, s0 + ds), (t0, t0 + dt)).unwrap();
            for p in q.sites() {
                let (s, t) = tilted_coords(&p);
                prop_assert_eq!((s - t).rem_euclid(2), 0);
                prop_assert!(q.contains(&p));
            }
        }

        #[test]
        fn sparsity_monotone_in_delta(
            bits in proptest::collection::vec(any::<bool>(), 32),
            d1 in 0.0f64..1.0,
            d2 in 0.0f64..1.0,
        ) {
            let q = TiltedRegion::square(0, 0, 8).unwrap();
            let frozen: HashSet<Site> = q.sites().into_iter().zip(bits).filter(|(_, b)| *b).map(|(s, _)| s).collect();
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            let a = diagonal_sparsity(&frozen, &q, lo);
            let b = diagonal_sparsity(&frozen, &q, hi);
            prop_assert!(!a.plus || b.plus);
            prop_assert!(!a.minus || b.minus);
        }

        #[test]
        fn half_square_inside(s0 in -4i64..4, t0 in -4i64..4, side in 1usize..12) {
            let q = TiltedRegion::square(s0, t0, side).unwrap();
            let h = q.half().unwrap();
            prop_assert_eq!(h.side(), Some(side.div_ceil(2)));
            for p in h.sites() {
                prop_assert!(q.contains(&p));
            }
        }
    }
}
