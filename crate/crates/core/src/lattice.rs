//! Finite lattices: user-specified Hasse diagrams with precomputed join/meet
//! tables, plus powerset lattices over a variable universe whose elements are
//! bitmasks and whose operations are computed on demand.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// Largest named lattice accepted by [`Lattice::build`].
pub const MAX_TABLE_ELEMENTS: usize = 64;
/// Largest powerset universe (elements are `u64` bitmasks).
pub const MAX_UNIVERSE: usize = 64;
/// Powersets over more variables than this are never enumerated.
const ENUMERABLE_UNIVERSE: usize = 16;

/// An element of some [`Lattice`]. Only meaningful together with the lattice
/// that produced it: a table index for named lattices, a bitmask for powersets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Elem(u64);

impl Elem {
    pub fn raw(self) -> u64 {
        self.0
    }
}

/// A canonically ordered set of variable names: the concrete view of a
/// powerset-lattice element.
pub type VarSet = BTreeSet<String>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    name: String,
    repr: Repr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Repr {
    Table(Table),
    Powerset { universe: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Table {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
    leq: Vec<Vec<bool>>,
    join: Vec<Vec<usize>>,
    meet: Vec<Vec<usize>>,
    bottom: usize,
    top: usize,
    height: usize,
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !["skip", "if", "then", "else", "end", "while", "do"].contains(&s)
}

/// Renders a set of names as `{a,b}` (members in the given order).
pub fn render_set<'a>(members: impl IntoIterator<Item = &'a str>) -> String {
    let mut out = String::from("{");
    for (i, m) in members.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(m);
    }
    out.push('}');
    out
}

impl Lattice {
    /// Builds a lattice from its elements and cover relation (Hasse diagram),
    /// validating that every pair has a unique least upper bound and greatest
    /// lower bound.
    pub fn build<S: AsRef<str>>(name: impl Into<String>, elements: &[S], covers: &[(S, S)]) -> Result<Lattice> {
        let n = elements.len();
        if n == 0 {
            return Err(Error::EmptyLattice);
        }
        if n > MAX_TABLE_ELEMENTS {
            return Err(Error::TooManyElements(n));
        }
        let mut index = BTreeMap::new();
        let mut names = Vec::with_capacity(n);
        for (i, e) in elements.iter().enumerate() {
            let e = e.as_ref();
            if !is_identifier(e) {
                return Err(Error::InvalidElementName(e.to_string()));
            }
            if index.insert(e.to_string(), i).is_some() {
                return Err(Error::DuplicateElement(e.to_string()));
            }
            names.push(e.to_string());
        }
        let lookup = |s: &str| index.get(s).copied().ok_or_else(|| Error::UnknownElement(s.to_string()));

        let mut leq = vec![vec![false; n]; n];
        for (i, row) in leq.iter_mut().enumerate() {
            row[i] = true;
        }
        for (lo, hi) in covers {
            let (lo, hi) = (lookup(lo.as_ref())?, lookup(hi.as_ref())?);
            if lo == hi {
                return Err(Error::CoverCycle(names[lo].clone(), names[hi].clone()));
            }
            leq[lo][hi] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if leq[i][k] {
                    let through = leq[k].clone();
                    for (cell, reach) in leq[i].iter_mut().zip(through) {
                        *cell |= reach;
                    }
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if leq[i][j] && leq[j][i] {
                    return Err(Error::CoverCycle(names[i].clone(), names[j].clone()));
                }
            }
        }

        let least = |cands: &[usize]| cands.iter().copied().find(|&c| cands.iter().all(|&d| leq[c][d]));
        let greatest = |cands: &[usize]| cands.iter().copied().find(|&c| cands.iter().all(|&d| leq[d][c]));
        let mut join = vec![vec![0; n]; n];
        let mut meet = vec![vec![0; n]; n];
        for i in 0..n {
            for j in i..n {
                let not_lattice = |reason| Error::NotALattice {
                    left: names[i].clone(),
                    right: names[j].clone(),
                    reason,
                };
                let upper: Vec<usize> = (0..n).filter(|&k| leq[i][k] && leq[j][k]).collect();
                if upper.is_empty() {
                    return Err(not_lattice("no upper bound"));
                }
                let lub = least(&upper).ok_or_else(|| not_lattice("no least upper bound"))?;
                let lower: Vec<usize> = (0..n).filter(|&k| leq[k][i] && leq[k][j]).collect();
                if lower.is_empty() {
                    return Err(not_lattice("no lower bound"));
                }
                let glb = greatest(&lower).ok_or_else(|| not_lattice("no greatest lower bound"))?;
                join[i][j] = lub;
                join[j][i] = lub;
                meet[i][j] = glb;
                meet[j][i] = glb;
            }
        }
        let bottom = (1..n).fold(0, |acc, k| meet[acc][k]);
        let top = (1..n).fold(0, |acc, k| join[acc][k]);

        // Longest chain, counted in elements.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (0..n).filter(|&k| leq[k][i]).count());
        let mut chain = vec![1usize; n];
        for (pos, &i) in order.iter().enumerate() {
            for &k in &order[..pos] {
                if leq[k][i] && k != i {
                    chain[i] = chain[i].max(chain[k] + 1);
                }
            }
        }
        let height = chain.into_iter().max().unwrap_or(1);

        Ok(Lattice {
            name: name.into(),
            repr: Repr::Table(Table {
                names,
                index,
                leq,
                join,
                meet,
                bottom,
                top,
                height,
            }),
        })
    }

    /// `L < H`.
    pub fn two_point() -> Lattice {
        Lattice::build("two-point", &["L", "H"], &[("L", "H")]).expect("two-point lattice is valid")
    }

    /// `L < M, N < H` with `M` and `N` incomparable.
    pub fn diamond() -> Lattice {
        Lattice::build(
            "diamond",
            &["L", "M", "N", "H"],
            &[("L", "M"), ("L", "N"), ("M", "H"), ("N", "H")],
        )
        .expect("diamond lattice is valid")
    }

    /// The universal lattice of subsets of `universe`, ordered by inclusion.
    pub fn powerset<S: Into<String>>(universe: impl IntoIterator<Item = S>) -> Result<Lattice> {
        let universe: BTreeSet<String> = universe.into_iter().map(Into::into).collect();
        if universe.is_empty() {
            return Err(Error::EmptyUniverse);
        }
        if universe.len() > MAX_UNIVERSE {
            return Err(Error::UniverseTooLarge(universe.len()));
        }
        Ok(Lattice {
            name: "powerset".into(),
            repr: Repr::Powerset {
                universe: universe.into_iter().collect(),
            },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_powerset(&self) -> bool {
        matches!(self.repr, Repr::Powerset { .. })
    }

    /// The variable universe of a powerset lattice.
    pub fn universe(&self) -> Option<&[String]> {
        match &self.repr {
            Repr::Powerset { universe } => Some(universe),
            Repr::Table(_) => None,
        }
    }

    fn full_mask(n: usize) -> u64 {
        if n >= 64 {
            u64::MAX
        } else {
            (1u64 << n) - 1
        }
    }

    pub fn bottom(&self) -> Elem {
        match &self.repr {
            Repr::Table(t) => Elem(t.bottom as u64),
            Repr::Powerset { .. } => Elem(0),
        }
    }

    pub fn top(&self) -> Elem {
        match &self.repr {
            Repr::Table(t) => Elem(t.top as u64),
            Repr::Powerset { universe } => Elem(Self::full_mask(universe.len())),
        }
    }

    pub fn leq(&self, a: Elem, b: Elem) -> bool {
        match &self.repr {
            Repr::Table(t) => t.leq[a.0 as usize][b.0 as usize],
            Repr::Powerset { .. } => a.0 & !b.0 == 0,
        }
    }

    pub fn join(&self, a: Elem, b: Elem) -> Elem {
        match &self.repr {
            Repr::Table(t) => Elem(t.join[a.0 as usize][b.0 as usize] as u64),
            Repr::Powerset { .. } => Elem(a.0 | b.0),
        }
    }

    pub fn meet(&self, a: Elem, b: Elem) -> Elem {
        match &self.repr {
            Repr::Table(t) => Elem(t.meet[a.0 as usize][b.0 as usize] as u64),
            Repr::Powerset { .. } => Elem(a.0 & b.0),
        }
    }

    /// Join of any number of elements; the empty join is bottom.
    pub fn join_all(&self, elems: impl IntoIterator<Item = Elem>) -> Elem {
        elems.into_iter().fold(self.bottom(), |acc, e| self.join(acc, e))
    }

    /// Meet of any number of elements; the empty meet is top.
    pub fn meet_all(&self, elems: impl IntoIterator<Item = Elem>) -> Elem {
        elems.into_iter().fold(self.top(), |acc, e| self.meet(acc, e))
    }

    /// Number of elements in the longest chain.
    pub fn height(&self) -> usize {
        match &self.repr {
            Repr::Table(t) => t.height,
            Repr::Powerset { universe } => universe.len() + 1,
        }
    }

    pub fn size(&self) -> u128 {
        match &self.repr {
            Repr::Table(t) => t.names.len() as u128,
            Repr::Powerset { universe } => 1u128 << universe.len(),
        }
    }

    /// All elements, or `None` for powersets too large to enumerate.
    pub fn elements(&self) -> Option<Vec<Elem>> {
        match &self.repr {
            Repr::Table(t) => Some((0..t.names.len() as u64).map(Elem).collect()),
            Repr::Powerset { universe } if universe.len() <= ENUMERABLE_UNIVERSE => {
                Some((0..(1u64 << universe.len())).map(Elem).collect())
            }
            Repr::Powerset { .. } => None,
        }
    }

    /// Whether `e` is a valid element of this lattice.
    pub fn contains(&self, e: Elem) -> bool {
        match &self.repr {
            Repr::Table(t) => (e.0 as usize) < t.names.len(),
            Repr::Powerset { universe } => e.0 & !Self::full_mask(universe.len()) == 0,
        }
    }

    /// A uniformly random element.
    pub fn sample(&self, rng: &mut impl Rng) -> Elem {
        match &self.repr {
            Repr::Table(t) => Elem(rng.gen_range(0..t.names.len() as u64)),
            Repr::Powerset { universe } => Elem(rng.gen::<u64>() & Self::full_mask(universe.len())),
        }
    }

    /// Canonical element name; powerset elements render as `{a,b}`.
    pub fn element_name(&self, e: Elem) -> String {
        match &self.repr {
            Repr::Table(t) => t.names[e.0 as usize].clone(),
            Repr::Powerset { universe } => render_set(
                universe
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| e.0 >> i & 1 == 1)
                    .map(|(_, v)| v.as_str()),
            ),
        }
    }

    pub fn parse_element(&self, text: &str) -> Result<Elem> {
        let text = text.trim();
        match &self.repr {
            Repr::Table(t) => t
                .index
                .get(text)
                .map(|&i| Elem(i as u64))
                .ok_or_else(|| Error::UnknownElement(text.to_string())),
            Repr::Powerset { .. } => {
                let inner = text
                    .strip_prefix('{')
                    .and_then(|s| s.strip_suffix('}'))
                    .ok_or_else(|| Error::UnknownElement(text.to_string()))?;
                let members: VarSet = inner
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect();
                self.elem_of_set(&members)
            }
        }
    }

    /// The member set of a powerset element.
    pub fn set_of(&self, e: Elem) -> Option<VarSet> {
        match &self.repr {
            Repr::Powerset { universe } => Some(
                universe
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| e.0 >> i & 1 == 1)
                    .map(|(_, v)| v.clone())
                    .collect(),
            ),
            Repr::Table(_) => None,
        }
    }

    /// The powerset element for a set of universe members.
    pub fn elem_of_set(&self, set: &VarSet) -> Result<Elem> {
        match &self.repr {
            Repr::Powerset { universe } => {
                let mut mask = 0u64;
                for v in set {
                    let i = universe
                        .binary_search(v)
                        .map_err(|_| Error::UnknownElement(render_set([v.as_str()])))?;
                    mask |= 1 << i;
                }
                Ok(Elem(mask))
            }
            Repr::Table(_) => Err(Error::UnknownElement(render_set(set.iter().map(String::as_str)))),
        }
    }

    /// The cover relation (Hasse diagram edges) of a named lattice.
    pub fn covers(&self) -> Vec<(Elem, Elem)> {
        match &self.repr {
            Repr::Table(t) => {
                let n = t.names.len();
                let mut out = Vec::new();
                for i in 0..n {
                    for j in 0..n {
                        if i != j
                            && t.leq[i][j]
                            && !(0..n).any(|k| k != i && k != j && t.leq[i][k] && t.leq[k][j])
                        {
                            out.push((Elem(i as u64), Elem(j as u64)));
                        }
                    }
                }
                out
            }
            Repr::Powerset { universe } => {
                let Some(elems) = self.elements() else { return Vec::new() };
                let mut out = Vec::new();
                for e in elems {
                    for i in 0..universe.len() {
                        if e.0 >> i & 1 == 0 {
                            out.push((e, Elem(e.0 | 1 << i)));
                        }
                    }
                }
                out
            }
        }
    }
}

/// Renders a named lattice in the lattice spec-file format.
impl fmt::Display for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "lattice {}", self.name)?;
        match &self.repr {
            Repr::Table(t) => {
                writeln!(f, "elements {}", t.names.join(" "))?;
                for (lo, hi) in self.covers() {
                    writeln!(f, "order {} < {}", self.element_name(lo), self.element_name(hi))?;
                }
            }
            Repr::Powerset { universe } => writeln!(f, "# subsets of {}", render_set(universe.iter().map(String::as_str)))?,
        }
        Ok(())
    }
}
