//! Symmetric-group invariants: the orbit-sum bases d_λ, expression of
//! invariant classes in them, and summation over conjugate loci.

use std::fmt;

use serde::ser::SerializeMap;
use serde::Serialize;

use crate::cache;
use crate::chow::{ChowError, TautClass};
use crate::rational::Rational;
use crate::strata::{
    fixed_point_free_involutions, involution_representative, shape_basis_order, OrbitShape,
    Permutation, StrataError,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InvariantError {
    #[error("class is not invariant or lies outside the strata span")]
    NotInvariant,
    #[error("class attached to the base involution is not centralizer-invariant")]
    NotCentralizerInvariant,
    #[error(transparent)]
    Chow(#[from] ChowError),
    #[error(transparent)]
    Strata(#[from] StrataError),
}

/// Coordinates of an invariant class over the orbit-sum basis d_λ of its
/// grade, in the fixed basis order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantClass {
    n: u8,
    codim: u8,
    coeffs: Vec<(OrbitShape, Rational)>,
}

impl InvariantClass {
    pub fn n(&self) -> u8 {
        self.n
    }

    pub fn codim(&self) -> u8 {
        self.codim
    }

    pub fn coeffs(&self) -> &[(OrbitShape, Rational)] {
        &self.coeffs
    }

    pub fn coeff_vector(&self) -> Vec<Rational> {
        self.coeffs.iter().map(|(_, c)| c.clone()).collect()
    }

    pub fn coeff(&self, shape: &OrbitShape) -> Rational {
        self.coeffs
            .iter()
            .find(|(s, _)| s == shape)
            .map(|(_, c)| c.clone())
            .unwrap_or_default()
    }

    /// Expands back into the strata combination Σ cᵢ·d_λᵢ.
    pub fn to_taut_class(&self) -> Result<TautClass, InvariantError> {
        let mut out = TautClass::zero(self.n, self.codim);
        for (shape, coeff) in &self.coeffs {
            out = out.add(&orbit_sum(self.n, shape)?.scale(coeff))?;
        }
        Ok(out)
    }
}

impl fmt::Display for InvariantClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.iter().all(|(_, c)| c.is_zero()) {
            return write!(f, "0");
        }
        let mut first = true;
        for (shape, c) in &self.coeffs {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}*{shape}")?;
        }
        Ok(())
    }
}

impl Serialize for InvariantClass {
    /// `{"d_{5,1,2}": "5/2", ...}` in the fixed basis order.
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.coeffs.len()))?;
        for (shape, c) in &self.coeffs {
            map.serialize_entry(&shape.to_string(), c)?;
        }
        map.end()
    }
}

/// The orbit shapes of grade `codim` on n markings, in the fixed basis order.
pub fn basis_shapes(n: u8, codim: u8) -> Result<Vec<OrbitShape>, StrataError> {
    let mut shapes: Vec<OrbitShape> = crate::strata::orbit_decompose(n, codim)?
        .into_iter()
        .map(|(s, _)| s)
        .collect();
    shapes.sort_by(shape_basis_order);
    Ok(shapes)
}

/// The invariant class d_λ for a chain shape: the sum of all strata of that
/// shape, each with coefficient 1.
pub fn d_class(n: u8, shape: &[u8]) -> Result<TautClass, InvariantError> {
    let codim = shape.len().saturating_sub(1) as u8;
    let ok = !shape.is_empty()
        && shape.iter().map(|&s| s as usize).sum::<usize>() == n as usize
        && shape.first().is_some_and(|&s| s >= 2)
        && shape.last().is_some_and(|&s| s >= 2)
        && shape.iter().all(|&s| s >= 1)
        && codim <= n.saturating_sub(3);
    if !ok {
        return Err(InvariantError::Strata(StrataError::BadShape(
            shape.to_vec(),
            n,
        )));
    }
    orbit_sum(n, &OrbitShape::chain_label(shape.to_vec()))
}

/// The sum of all strata in one orbit, each with coefficient 1.
pub fn orbit_sum(n: u8, shape: &OrbitShape) -> Result<TautClass, InvariantError> {
    let codim = match shape {
        OrbitShape::Chain(sizes) => sizes.len().saturating_sub(1) as u8,
        OrbitShape::General(_) => {
            // General (non-path) shapes first appear in codimension 3.
            let mut found = None;
            for k in 3..=n.saturating_sub(3) {
                let level = cache::strata_level(n, k)?;
                if level.list.iter().any(|t| &OrbitShape::of(t) == shape) {
                    found = Some(k);
                    break;
                }
            }
            found.ok_or(InvariantError::Strata(StrataError::BadShape(vec![], n)))?
        }
    };
    let level = cache::strata_level(n, codim)?;
    let terms = level
        .list
        .iter()
        .filter(|t| &OrbitShape::of(t) == shape)
        .map(|t| (t.clone(), Rational::one()));
    Ok(TautClass::from_terms(n, codim, terms)?)
}

/// Expresses an invariant class in the d_λ basis of its grade.
///
/// Solved through the duality pairing against all complementary strata;
/// errors when the class is not in the invariant span (in particular when it
/// is not invariant as a Chow class).
pub fn to_invariant(c: &TautClass) -> Result<InvariantClass, InvariantError> {
    let shapes = basis_shapes(c.n(), c.codim())?;
    let basis: Vec<TautClass> = shapes
        .iter()
        .map(|s| orbit_sum(c.n(), s))
        .collect::<Result<_, _>>()?;
    let coeffs = match c.express_in(&basis) {
        Ok(v) => v,
        Err(ChowError::NotInSpan) => return Err(InvariantError::NotInvariant),
        Err(e) => return Err(e.into()),
    };
    Ok(InvariantClass {
        n: c.n(),
        codim: c.codim(),
        coeffs: shapes.into_iter().zip(coeffs).collect(),
    })
}

/// Sums the conjugates of a class attached to a fixed-point-free involution
/// over all involutions in the conjugacy class.
///
/// For each involution τ the stored representative σ_τ (conjugating `base`
/// to τ) relabels `c`; the result is the sum over the distinct conjugate
/// loci, not a group average. The class must be invariant under the
/// centralizer of `base` for this to be representative-independent; a cheap
/// sample of centralizer generators is checked at run time.
pub fn sum_over_conjugates(c: &TautClass, base: &Permutation) -> Result<TautClass, InvariantError> {
    if base.n() != c.n() {
        return Err(InvariantError::Strata(StrataError::MarkingMismatch(
            base.n(),
            c.n(),
        )));
    }
    let base_rep = involution_representative(base)?;
    let n = c.n();

    // Centralizer sample: swapping within the first pair, and swapping the
    // first two pairs wholesale, both centralize the base involution.
    let pairs: Vec<(u8, u8)> = (1..=n)
        .filter_map(|a| {
            let b = base.apply(a);
            (a < b).then_some((a, b))
        })
        .collect();
    let mut samples: Vec<Permutation> = Vec::new();
    samples.push(Permutation::transposition(n, pairs[0].0, pairs[0].1)?);
    if pairs.len() >= 2 {
        let swap_pairs = Permutation::transposition(n, pairs[0].0, pairs[1].0)?
            .compose(&Permutation::transposition(n, pairs[0].1, pairs[1].1)?);
        samples.push(swap_pairs);
    }
    for z in &samples {
        debug_assert_eq!(
            z.compose(base).compose(&z.inverse()),
            base.clone(),
            "sampled element centralizes the base involution"
        );
        if !c.relabel(z).sub(c)?.is_zero() {
            return Err(InvariantError::NotCentralizerInvariant);
        }
    }

    let base_rep_inv = base_rep.inverse();
    let mut total = TautClass::zero(c.n(), c.codim());
    for inv in fixed_point_free_involutions(n)? {
        let sigma = inv.representative.compose(&base_rep_inv);
        total = total.add(&c.relabel(&sigma))?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strata::standard_involution;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn d_class_term_counts() {
        assert_eq!(d_class(6, &[2, 4]).unwrap().num_terms(), 15);
        assert_eq!(d_class(6, &[3, 3]).unwrap().num_terms(), 10);
        assert_eq!(d_class(8, &[2, 4, 2]).unwrap().num_terms(), 210);
        assert_eq!(d_class(8, &[5, 1, 2]).unwrap().num_terms(), 168);
        // Shape symmetry: reversed labels name the same class.
        assert_eq!(
            d_class(8, &[5, 1, 2]).unwrap(),
            d_class(8, &[2, 1, 5]).unwrap()
        );
        assert!(d_class(8, &[1, 5, 2]).is_err());
        assert!(d_class(8, &[2, 4]).is_err());
    }

    #[test]
    fn to_invariant_of_a_basis_class_is_a_unit_vector() {
        let c = d_class(8, &[4, 4]).unwrap();
        let inv = to_invariant(&c).unwrap();
        for (shape, coeff) in inv.coeffs() {
            let expect = if shape == &OrbitShape::chain_label(vec![4, 4]) {
                Rational::one()
            } else {
                Rational::zero()
            };
            assert_eq!(coeff, &expect, "{shape}");
        }
    }

    #[test]
    fn unit_vectors_for_every_codim_one_shape() {
        for shape in basis_shapes(8, 1).unwrap() {
            let OrbitShape::Chain(sizes) = &shape else {
                panic!()
            };
            let c = d_class(8, sizes).unwrap();
            let inv = to_invariant(&c).unwrap();
            assert_eq!(inv.coeff(&shape), Rational::one());
            let total: Rational = inv.coeff_vector().into_iter().sum();
            assert_eq!(total, Rational::one());
        }
    }

    #[test]
    fn non_invariant_classes_are_rejected() {
        let single = TautClass::divisor(&crate::strata::Partition2::new(6, [2, 3]).unwrap());
        assert!(matches!(
            to_invariant(&single),
            Err(InvariantError::NotInvariant)
        ));
    }

    #[test]
    fn conjugate_sum_requires_a_fixed_point_free_involution() {
        let c = d_class(6, &[2, 4]).unwrap();
        let with_fixed_points = Permutation::from_cycles(6, "(12)(34)").unwrap();
        assert!(matches!(
            sum_over_conjugates(&c, &with_fixed_points),
            Err(InvariantError::Strata(StrataError::NotFixedPointFree))
        ));
        let three_cycle = Permutation::from_cycles(6, "(123)(45)").unwrap();
        assert!(sum_over_conjugates(&c, &three_cycle).is_err());
    }

    #[test]
    fn symmetrizing_an_invariant_class_multiplies_by_the_class_count() {
        let d = d_class(6, &[2, 4]).unwrap();
        let base = standard_involution(6).unwrap();
        let symmetrized = sum_over_conjugates(&d, &base).unwrap();
        assert_eq!(symmetrized, d.scale(&q(15, 1)));
        // Same on eight markings, where the conjugacy class has 105 members.
        let d8 = d_class(8, &[3, 5]).unwrap();
        let base8 = standard_involution(8).unwrap();
        let symmetrized8 = sum_over_conjugates(&d8, &base8).unwrap();
        assert_eq!(symmetrized8, d8.scale(&q(105, 1)));
    }

    #[test]
    fn transpositions_do_not_move_invariant_coordinates() {
        let c = d_class(6, &[2, 4])
            .unwrap()
            .scale(&q(5, 3))
            .add(&d_class(6, &[3, 3]).unwrap().scale(&q(-2, 7)))
            .unwrap();
        let inv = to_invariant(&c).unwrap();
        for (a, b) in [(1u8, 2u8), (2, 5), (4, 6)] {
            let t = Permutation::transposition(6, a, b).unwrap();
            let moved = to_invariant(&c.relabel(&t)).unwrap();
            assert_eq!(moved, inv, "transposition ({a}{b})");
        }
    }

    #[test]
    fn invariant_class_serializes_in_basis_order() {
        let c = d_class(6, &[2, 4]).unwrap();
        let inv = to_invariant(&c).unwrap();
        let json = serde_json::to_string(&inv).unwrap();
        assert_eq!(json, r#"{"d_{2,4}":"1","d_{3,3}":"0"}"#);
    }

    #[test]
    fn round_trip_through_taut_class() {
        let c = d_class(6, &[2, 4])
            .unwrap()
            .scale(&q(3, 2))
            .add(&d_class(6, &[3, 3]).unwrap().scale(&q(-1, 3)))
            .unwrap();
        let inv = to_invariant(&c).unwrap();
        assert_eq!(inv.to_taut_class().unwrap(), c);
    }
}
