//! The tautological algebra of M̄₀,ₙ.
//!
//! Classes are exact-rational combinations of boundary strata in normal form.
//! Products follow the excess-intersection rule: a divisor meeting a stratum
//! transversally refines it, while a divisor containing the stratum
//! contributes minus the two cotangent classes at the corresponding node,
//! re-expanded into boundary on the factor spaces. Zero-testing goes through
//! the Poincaré duality pairing against all complementary strata, which span
//! the Chow groups.

use std::collections::BTreeMap;

use crate::cache;
use crate::rational::Rational;
use crate::strata::{
    compatibility_with_view, Branch, Compatibility, Partition2, Permutation, StableTree,
    StrataError,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChowError {
    #[error("classes live on different spaces: n={0} vs n={1}")]
    MarkingMismatch(u8, u8),
    #[error("grade mismatch: codimension {0} vs {1}")]
    GradeMismatch(u8, u8),
    #[error("integration requires the top grade: codimension {codim} != n-3 = {top}")]
    NotTopGrade { codim: u8, top: u8 },
    #[error("pairing requires complementary grades: {0} + {1} != {2}")]
    NotComplementary(u8, u8, u8),
    #[error("class is not in the span of the basis")]
    NotInSpan,
    #[error("basis is linearly dependent; coefficients are ambiguous")]
    DependentBasis,
    #[error("mixed codimensions in a sum: {0} vs {1}")]
    MixedCodim(u8, u8),
    #[error("psi classes need n >= 4, got n={0}")]
    PsiNeedsFourMarkings(u8),
    #[error("invalid auxiliary pair ({0}, {1}) for psi at marking {2}")]
    BadAuxPair(u8, u8, u8),
    #[error("kappa index must be at least 1")]
    BadKappaIndex,
    #[error("forgetting a marking requires n >= 4, got n={0}")]
    ForgetNeedsFourMarkings(u8),
    #[error(transparent)]
    Strata(#[from] StrataError),
}

/// A tautological class: a formal combination of boundary strata of one
/// M̄₀,ₙ, all of the same codimension, with exact rational coefficients.
///
/// The combination is kept in normal form: strata are canonical, zero
/// coefficients are dropped, and any class of codimension above n-3 is the
/// empty combination.
#[derive(Clone, PartialEq, Eq)]
pub struct TautClass {
    n: u8,
    codim: u8,
    terms: BTreeMap<StableTree, Rational>,
}

impl TautClass {
    pub fn zero(n: u8, codim: u8) -> Self {
        TautClass {
            n,
            codim,
            terms: BTreeMap::new(),
        }
    }

    /// The fundamental class (the unique codimension-0 stratum).
    pub fn fundamental(n: u8) -> Result<Self, ChowError> {
        Ok(TautClass::stratum(&StableTree::one_vertex(n)?))
    }

    pub fn stratum(tree: &StableTree) -> Self {
        let mut c = TautClass::zero(tree.n(), tree.codim());
        c.insert(tree.clone(), Rational::one());
        c
    }

    pub fn divisor(p: &Partition2) -> Self {
        TautClass::stratum(&p.two_vertex_tree())
    }

    pub fn from_terms(
        n: u8,
        codim: u8,
        terms: impl IntoIterator<Item = (StableTree, Rational)>,
    ) -> Result<Self, ChowError> {
        let mut c = TautClass::zero(n, codim);
        for (tree, coeff) in terms {
            if tree.n() != n {
                return Err(ChowError::MarkingMismatch(tree.n(), n));
            }
            if tree.codim() != codim {
                return Err(ChowError::GradeMismatch(tree.codim(), codim));
            }
            c.insert(tree, coeff);
        }
        Ok(c)
    }

    fn insert(&mut self, tree: StableTree, coeff: Rational) {
        if coeff.is_zero() || self.codim as i16 > self.n as i16 - 3 {
            return;
        }
        match self.terms.entry(tree) {
            std::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut slot) => {
                *slot.get_mut() += coeff;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    pub fn codim(&self) -> u8 {
        self.codim
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// True when the stored combination has no terms. This is a statement
    /// about the representation; Chow-level vanishing is [`TautClass::is_zero`].
    pub fn is_empty_combination(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&StableTree, &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, tree: &StableTree) -> Rational {
        self.terms.get(tree).cloned().unwrap_or_default()
    }

    pub fn add(&self, other: &TautClass) -> Result<TautClass, ChowError> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (t, c) in &other.terms {
            out.insert(t.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &TautClass) -> Result<TautClass, ChowError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> TautClass {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, r: &Rational) -> TautClass {
        if r.is_zero() {
            return TautClass::zero(self.n, self.codim);
        }
        TautClass {
            n: self.n,
            codim: self.codim,
            terms: self
                .terms
                .iter()
                .map(|(t, c)| (t.clone(), c * r))
                .collect(),
        }
    }

    /// Relabels the markings of every stratum through `sigma`.
    pub fn relabel(&self, sigma: &Permutation) -> TautClass {
        let mut out = TautClass::zero(self.n, self.codim);
        for (t, c) in &self.terms {
            out.insert(t.apply_permutation(sigma), c.clone());
        }
        out
    }

    fn compatible(&self, other: &TautClass) -> Result<(), ChowError> {
        if self.n != other.n {
            return Err(ChowError::MarkingMismatch(self.n, other.n));
        }
        if self.codim != other.codim {
            return Err(ChowError::GradeMismatch(self.codim, other.codim));
        }
        Ok(())
    }

    /// The Chow product with a boundary divisor.
    pub fn mul_divisor(&self, p: &Partition2) -> Result<TautClass, ChowError> {
        if p.n() != self.n {
            return Err(ChowError::MarkingMismatch(p.n(), self.n));
        }
        let mut out = TautClass::zero(self.n, self.codim + 1);
        for (t, c) in &self.terms {
            for (t2, s) in divisor_times_stratum(p.side_mask(), t) {
                out.insert(t2, c * Rational::from_int(s));
            }
        }
        Ok(out)
    }

    /// The Chow product. Each stratum of `other` is factored into its edge
    /// divisors (distinct pairwise-compatible divisors meet transversally
    /// along the stratum) and folded into `self` one divisor at a time.
    pub fn mul(&self, other: &TautClass) -> Result<TautClass, ChowError> {
        if self.n != other.n {
            return Err(ChowError::MarkingMismatch(self.n, other.n));
        }
        let codim = self.codim.saturating_add(other.codim);
        let mut acc = TautClass::zero(self.n, codim);
        if codim as i16 > self.n as i16 - 3 {
            return Ok(acc);
        }
        for (tree_b, coeff_b) in &other.terms {
            let view = tree_b.view();
            let mut cur: Vec<(StableTree, Rational)> = self
                .terms
                .iter()
                .map(|(t, c)| (t.clone(), c.clone()))
                .collect();
            for e in 0..tree_b.edges().len() {
                let mask = view.side_toward_second[e];
                let mut next: BTreeMap<StableTree, Rational> = BTreeMap::new();
                for (t, c) in cur {
                    for (t2, s) in divisor_times_stratum(mask, &t) {
                        let entry = next.entry(t2).or_default();
                        *entry += &c * Rational::from_int(s);
                    }
                }
                cur = next.into_iter().filter(|(_, c)| !c.is_zero()).collect();
                if cur.is_empty() {
                    break;
                }
            }
            for (t, c) in cur {
                acc.insert(t, c * coeff_b);
            }
        }
        Ok(acc)
    }

    pub fn pow(&self, exponent: u32) -> Result<TautClass, ChowError> {
        let mut out = TautClass::fundamental(self.n)?;
        for _ in 0..exponent {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    /// Integration over M̄₀,ₙ: defined on the top grade, where every stratum
    /// is a reduced point of degree 1.
    pub fn integrate(&self) -> Result<Rational, ChowError> {
        let top = self.n - 3;
        if self.codim != top {
            return Err(ChowError::NotTopGrade {
                codim: self.codim,
                top,
            });
        }
        for tree in self.terms.keys() {
            for v in 0..tree.num_vertices() {
                assert_eq!(tree.valence(v), 3, "top-grade strata are trivalent");
            }
        }
        Ok(self.terms.values().cloned().sum())
    }

    /// Pull-back along the map forgetting one marking: the result lives on
    /// n+1 markings with the new marking labeled `new_leg` (existing labels
    /// at or above it shift up by one). Each stratum pulls back to the sum of
    /// the strata obtained by attaching the new leg at each vertex.
    pub fn pullback_forget(&self, new_leg: u8) -> Result<TautClass, ChowError> {
        let n1 = self.n + 1;
        if n1 > 16 {
            return Err(ChowError::Strata(StrataError::BadMarkingCount(n1)));
        }
        if new_leg < 1 || new_leg > n1 {
            return Err(ChowError::Strata(StrataError::MarkingOutOfRange(
                new_leg, n1,
            )));
        }
        let mut out = TautClass::zero(n1, self.codim);
        for (t, c) in &self.terms {
            for v in 0..t.num_vertices() {
                let mut verts: Vec<Vec<u8>> =
                    (0..t.num_vertices()).map(|i| t.vertex_legs(i).to_vec()).collect();
                verts[v].push(n1);
                let lifted = StableTree::canonical_from_parts(n1, verts, t.edges().to_vec());
                out.insert(lifted, c.clone());
            }
        }
        if new_leg < n1 {
            let images: Vec<u8> = (1..=n1)
                .map(|m| {
                    if m == n1 {
                        new_leg
                    } else if m >= new_leg {
                        m + 1
                    } else {
                        m
                    }
                })
                .collect();
            let sigma = Permutation::from_images(images).expect("shift is a permutation");
            out = out.relabel(&sigma);
        }
        Ok(out)
    }

    /// Push-forward along the map forgetting the marking `leg` (remaining
    /// labels above it shift down). A stratum maps to its stabilization with
    /// coefficient 1 when removing the leg contracts an edge, and to zero
    /// otherwise (the fibers are then positive-dimensional).
    pub fn pushforward_forget(&self, leg: u8) -> Result<TautClass, ChowError> {
        if self.n < 4 {
            return Err(ChowError::ForgetNeedsFourMarkings(self.n));
        }
        if leg < 1 || leg > self.n {
            return Err(ChowError::Strata(StrataError::MarkingOutOfRange(
                leg, self.n,
            )));
        }
        let n1 = self.n - 1;
        let relabel = |m: u8| if m > leg { m - 1 } else { m };
        let mut out = TautClass::zero(n1, self.codim.saturating_sub(1));
        for (t, c) in &self.terms {
            let v = (0..t.num_vertices())
                .find(|&v| t.vertex_legs(v).contains(&leg))
                .expect("every marking sits on some vertex");
            if t.valence(v) >= 4 {
                continue;
            }
            let mut verts: Vec<Vec<u8>> = (0..t.num_vertices())
                .map(|i| {
                    t.vertex_legs(i)
                        .iter()
                        .filter(|&&l| !(i == v && l == leg))
                        .map(|&l| relabel(l))
                        .collect()
                })
                .collect();
            let incident: Vec<usize> = (0..t.edges().len())
                .filter(|&e| {
                    let (a, b) = t.edges()[e];
                    a as usize == v || b as usize == v
                })
                .collect();
            let mut edges: Vec<(u8, u8)> = Vec::with_capacity(t.edges().len() - 1);
            match incident.len() {
                2 => {
                    // Contract the valence-2 vertex between two edges.
                    let other = |e: usize| {
                        let (a, b) = t.edges()[e];
                        if a as usize == v {
                            b
                        } else {
                            a
                        }
                    };
                    let (x, y) = (other(incident[0]), other(incident[1]));
                    for e in 0..t.edges().len() {
                        if !incident.contains(&e) {
                            edges.push(t.edges()[e]);
                        }
                    }
                    edges.push((x, y));
                }
                1 => {
                    // Move the remaining leg onto the neighbor.
                    let (a, b) = t.edges()[incident[0]];
                    let w = if a as usize == v { b } else { a } as usize;
                    let orphan = verts[v].pop().expect("valence-3 vertex kept one leg");
                    debug_assert!(verts[v].is_empty());
                    verts[w].push(orphan);
                    for e in 0..t.edges().len() {
                        if e != incident[0] {
                            edges.push(t.edges()[e]);
                        }
                    }
                }
                _ => unreachable!("a valence-3 vertex with a leg has 1 or 2 edges when n >= 4"),
            }
            // Drop vertex v and reindex.
            verts.remove(v);
            let fix = |idx: u8| if idx as usize > v { idx - 1 } else { idx };
            let edges = edges.into_iter().map(|(a, b)| (fix(a), fix(b))).collect();
            out.insert(StableTree::canonical_from_parts(n1, verts, edges), c.clone());
        }
        Ok(out)
    }

    /// Poincaré duality pairing: `∫ self · other` for complementary grades.
    pub fn pairing(&self, other: &TautClass) -> Result<Rational, ChowError> {
        if self.n != other.n {
            return Err(ChowError::MarkingMismatch(self.n, other.n));
        }
        if self.codim + other.codim != self.n - 3 {
            return Err(ChowError::NotComplementary(
                self.codim,
                other.codim,
                self.n - 3,
            ));
        }
        self.mul(other)?.integrate()
    }

    /// Pairings of this class against every stratum of the complementary
    /// codimension, in the canonical stratum order (memoized tables).
    pub fn pairing_vector(&self) -> Result<Vec<Rational>, ChowError> {
        if self.codim as i16 > self.n as i16 - 3 {
            return Ok(Vec::new());
        }
        let table = cache::pairing_table(self.n, self.codim)?;
        let level = cache::strata_level(self.n, self.codim)?;
        let mut y = vec![Rational::zero(); table.ncols];
        for (t, c) in &self.terms {
            let idx = *level.index.get(t).expect("canonical stratum is enumerated");
            for &(j, v) in &table.rows[idx as usize] {
                y[j as usize] += c * Rational::from_int(v);
            }
        }
        Ok(y)
    }

    /// True exactly when the class vanishes in the Chow group: all pairings
    /// with complementary strata are zero. (Strata span the Chow groups, so
    /// this detects zero even for nonzero combinations of relations.)
    pub fn is_zero(&self) -> bool {
        if self.terms.is_empty() {
            return true;
        }
        self.pairing_vector()
            .expect("valid class has a pairing vector")
            .iter()
            .all(Rational::is_zero)
    }

    /// Coefficients of this class over the given basis, solved exactly from
    /// the pairing matrix against all complementary strata.
    pub fn express_in(&self, basis: &[TautClass]) -> Result<Vec<Rational>, ChowError> {
        for b in basis {
            self.compatible(b)?;
        }
        if basis.is_empty() {
            return if self.is_zero() {
                Ok(Vec::new())
            } else {
                Err(ChowError::NotInSpan)
            };
        }
        let columns: Vec<Vec<Rational>> = basis
            .iter()
            .map(|b| b.pairing_vector())
            .collect::<Result<_, _>>()?;
        let y = self.pairing_vector()?;
        express_from_columns(&columns, &y)
    }
}

impl std::fmt::Display for TautClass {
    /// Writes the combination as `c1*(..) + c2*(..)` in canonical stratum
    /// order; unit coefficients are omitted and the zero class prints as `0`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (t, c)) in self.terms.iter().enumerate() {
            let negative = !c.is_positive() && !c.is_zero();
            if i == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else if negative {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mag = if negative { -c } else { c.clone() };
            if !mag.is_one() {
                write!(f, "{mag}*")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl std::fmt::Debug for TautClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[n={} codim={}] {}", self.n, self.codim, self)
    }
}

/// Solves `columns · x = y` (one equation per complementary stratum) exactly.
pub(crate) fn express_from_columns(
    columns: &[Vec<Rational>],
    y: &[Rational],
) -> Result<Vec<Rational>, ChowError> {
    let nrows = y.len();
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for j in 0..nrows {
        let mut row: Vec<Rational> = columns.iter().map(|col| col[j].clone()).collect();
        row.push(y[j].clone());
        if seen.insert(row.clone()) {
            rows.push(row);
        }
    }
    let rhs: Vec<Rational> = rows.iter().map(|r| r.last().unwrap().clone()).collect();
    let lhs: Vec<Vec<Rational>> = rows
        .into_iter()
        .map(|mut r| {
            r.pop();
            r
        })
        .collect();
    let m = crate::matrix::QMatrix::from_rows(lhs).expect("rows are rectangular");
    match m.solve_affine(&rhs).expect("dimensions agree") {
        None => Err(ChowError::NotInSpan),
        Some(sol) if !sol.kernel.is_empty() => Err(ChowError::DependentBasis),
        Some(sol) => Ok(sol.particular),
    }
}

/// The psi class at marking `i`, expanded into boundary divisors: the sum of
/// all divisors with `i` on one side and both auxiliary markings on the
/// other. The auxiliary pair defaults to the two smallest markings distinct
/// from `i`; the Chow class does not depend on the choice.
pub fn psi_expand(n: u8, i: u8, aux: Option<(u8, u8)>) -> Result<TautClass, ChowError> {
    if n < 4 {
        return Err(ChowError::PsiNeedsFourMarkings(n));
    }
    if i < 1 || i > n {
        return Err(ChowError::Strata(StrataError::MarkingOutOfRange(i, n)));
    }
    let (a, b) = match aux {
        Some(pair) => pair,
        None => {
            let mut it = (1..=n).filter(|&m| m != i);
            (it.next().unwrap(), it.next().unwrap())
        }
    };
    if a == b || a == i || b == i || a < 1 || a > n || b < 1 || b > n {
        return Err(ChowError::BadAuxPair(a, b, i));
    }
    let rest: Vec<u8> = (1..=n).filter(|&m| m != i && m != a && m != b).collect();
    let mut out = TautClass::zero(n, 1);
    for bits in 1u32..(1 << rest.len()) {
        let mut side = vec![i];
        for (k, &m) in rest.iter().enumerate() {
            if bits & (1 << k) != 0 {
                side.push(m);
            }
        }
        let p = Partition2::new(n, side).expect("psi expansion sides are valid");
        out.insert(p.two_vertex_tree(), Rational::one());
    }
    Ok(out)
}

/// The kappa class κ_a on M̄₀,ₙ, realized as the push-forward of the
/// (a+1)-st power of the psi class at an extra marking along the map
/// forgetting that marking.
pub fn kappa_class(n: u8, a: u8) -> Result<TautClass, ChowError> {
    if a < 1 {
        return Err(ChowError::BadKappaIndex);
    }
    if a as i16 > n as i16 - 3 {
        return Ok(TautClass::zero(n, a));
    }
    let psi = psi_expand(n + 1, n + 1, None)?;
    psi.pow(a as u32 + 1)?.pushforward_forget(n + 1)
}

/// `κ_a · x` computed by lifting: pull `x` back along the universal curve,
/// multiply by the (a+1)-st psi power at the extra marking, push forward.
pub(crate) fn kappa_mul(a: u8, x: &TautClass) -> Result<TautClass, ChowError> {
    if a < 1 {
        return Err(ChowError::BadKappaIndex);
    }
    let n = x.n();
    let lifted = x.pullback_forget(n + 1)?;
    let psi = psi_expand(n + 1, n + 1, None)?;
    psi.pow(a as u32 + 1)?.mul(&lifted)?.pushforward_forget(n + 1)
}

/// The product of the boundary divisor cut out by `side_mask` with a single
/// stratum, as an integer combination of strata one codimension deeper.
///
/// Transversal meeting refines the stratum with coefficient 1; an existing
/// edge contributes minus the psi classes at its two half-edges, expanded on
/// the vertex factor spaces (auxiliary branches: the two smallest labels at
/// the vertex, branches labeled by their smallest reachable marking).
pub(crate) fn divisor_times_stratum(side_mask: u16, t: &StableTree) -> Vec<(StableTree, i64)> {
    let view = t.view();
    match compatibility_with_view(side_mask, t, &view) {
        Compatibility::Incompatible => Vec::new(),
        Compatibility::NewEdge { vertex, side } => vec![(t.split_vertex(vertex, &side), 1)],
        Compatibility::ExistingEdge(e) => {
            let (a, b) = t.edges()[e];
            let mut out = Vec::new();
            for vertex in [a as usize, b as usize] {
                for refined in half_edge_psi_splits(t, &view, vertex, e) {
                    out.push((refined, -1));
                }
            }
            out
        }
    }
}

/// The boundary expansion of the psi class at the half-edge `(vertex, edge)`
/// on the factor space of the vertex, pushed into refinements of `t`.
fn half_edge_psi_splits(
    t: &StableTree,
    view: &crate::strata::TreeView,
    vertex: usize,
    edge: usize,
) -> Vec<StableTree> {
    let branches = view.branches(t, vertex);
    let h = branches
        .iter()
        .position(|(b, _)| matches!(b, Branch::Edge(e2) if *e2 as usize == edge))
        .expect("the half-edge is a branch at its vertex");
    let mut others: Vec<usize> = (0..branches.len()).filter(|&k| k != h).collect();
    others.sort_by_key(|&k| branches[k].1.trailing_zeros());
    // others[0], others[1] are the auxiliary branches and stay opposite h.
    let rest = &others[2..];
    let mut out = Vec::with_capacity((1usize << rest.len()) - 1);
    for bits in 1u32..(1 << rest.len()) {
        let mut side = vec![branches[h].0];
        for (k, &idx) in rest.iter().enumerate() {
            if bits & (1 << k) != 0 {
                side.push(branches[idx].0);
            }
        }
        out.push(t.split_vertex(vertex, &side));
    }
    out
}
