//! The bielliptic-locus pipeline.
//!
//! The hyperelliptic moduli of genus g are coordinatized by M̄₀,₂g₊₂ through
//! the branch divisor, and the locus of curves carrying an extra involution
//! that pairs up the branch points pulls back the bielliptic locus. The
//! pipeline computes that invariant locus class in the d_λ basis, writes the
//! matrix of the pull-back from the standard codimension-2 basis
//! (λ², λδ₀, λδ₁, δ₀², δ₀δ₁, δ₁², κ₂) of the genus-3 moduli, and pins the
//! two remaining parameters with test-surface counts.
//!
//! The intersection multiplicities of the product decomposition and the
//! test-surface intersection vectors are externally determined geometric
//! inputs; they live in `bielliptic_data.json` and form the trust boundary
//! of the computation.

use std::collections::BTreeMap;

use once_cell::sync::{Lazy, OnceCell};
use serde::{Deserialize, Serialize};

use crate::chow::{kappa_class, psi_expand, ChowError, TautClass};
use crate::invariant::{
    d_class, sum_over_conjugates, to_invariant, InvariantClass, InvariantError,
};
use crate::matrix::{MatrixError, QMatrix};
use crate::rational::Rational;
use crate::strata::{standard_involution, Permutation, StableTree, StrataError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PipelineError {
    #[error("required test surface {0:?} is missing")]
    MissingSurface(String),
    #[error("test surface {name:?} carries {got} intersection numbers, expected 7")]
    BadSurfaceData { name: String, got: usize },
    #[error("inconsistent test-surface data: {0}")]
    InconsistentSurfaceData(String),
    #[error("the multiplicity epsilon = {0} is not a positive integer")]
    NonIntegerEpsilon(Rational),
    #[error("component selection failed: {0}")]
    Corrections(String),
    #[error("pull-back solve failed: {0}")]
    Solve(String),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
    #[error(transparent)]
    Chow(#[from] ChowError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Strata(#[from] StrataError),
}

/// Labels of the fixed codimension-2 basis of the genus-3 moduli.
pub const GENUS3_BASIS: [&str; 7] = [
    "lambda^2",
    "lambda*delta_0",
    "lambda*delta_1",
    "delta_0^2",
    "delta_0*delta_1",
    "delta_1^2",
    "kappa_2",
];

// ---------------------------------------------------------------------------
// Configuration data (trust boundary)
// ---------------------------------------------------------------------------

/// A test surface: its intersection numbers against the [`GENUS3_BASIS`]
/// order and the bielliptic count observed on the family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSurface {
    pub name: String,
    pub numbers: Vec<Rational>,
    pub expected_count: Rational,
}

impl TestSurface {
    fn checked_numbers(&self) -> Result<&[Rational], PipelineError> {
        if self.numbers.len() != 7 {
            return Err(PipelineError::BadSurfaceData {
                name: self.name.clone(),
                got: self.numbers.len(),
            });
        }
        Ok(&self.numbers)
    }
}

#[derive(Deserialize)]
struct Multiplicities {
    alpha: Rational,
    beta: Rational,
    gamma: Rational,
    delta: Rational,
}

#[derive(Deserialize)]
struct PipelineData {
    #[allow(dead_code)]
    comment: String,
    multiplicities: Multiplicities,
    #[allow(dead_code)]
    genus2_lambda_relation_comment: String,
    surfaces: Vec<TestSurface>,
    reference_restrictions: BTreeMap<String, Rational>,
}

static DATA: Lazy<PipelineData> = Lazy::new(|| {
    serde_json::from_str(include_str!("bielliptic_data.json"))
        .expect("embedded pipeline data parses")
});

/// The built-in test surfaces (sigma8, sigma1, sigma2).
pub fn builtin_surfaces() -> Vec<TestSurface> {
    DATA.surfaces.clone()
}

/// Known restriction values for additional test surfaces, by name. These are
/// reference expectations only; their intersection vectors are external data.
pub fn reference_restriction(name: &str) -> Option<Rational> {
    DATA.reference_restrictions.get(name).cloned()
}

/// Parses a surfaces file: a JSON list of
/// `{name, numbers: [7 strings], expected_count}`.
pub fn parse_surfaces(json: &str) -> Result<Vec<TestSurface>, serde_json::Error> {
    serde_json::from_str(json)
}

// ---------------------------------------------------------------------------
// Classes on M̄₀,₆ and M̄₀,₈
// ---------------------------------------------------------------------------

/// The known boundary expression for the divisor of 6-pointed curves
/// admitting an involution that permutes the markings as (12)(34)(56):
/// (15|2346) + (25|1346) + (36|1245) + (46|1235) − (56|1234) + 2(125|346).
pub fn vermeire_class() -> TautClass {
    let term = |s: &str, c: i64| -> TautClass {
        TautClass::stratum(&s.parse::<StableTree>().expect("literal stratum"))
            .scale(&Rational::from_int(c))
    };
    [
        term("(15|2346)", 1),
        term("(25|1346)", 1),
        term("(36|1245)", 1),
        term("(46|1235)", 1),
        term("(56|1234)", -1),
        term("(125|346)", 2),
    ]
    .into_iter()
    .reduce(|a, b| a.add(&b).expect("terms share the grade"))
    .expect("nonempty list")
}

/// The pull-backs of the involution divisor along the two forgetful maps to
/// M̄₀,₆: the first forgets markings 1, 2 and renames 7, 8 to 1, 2; the
/// second forgets 7, 8.
pub fn pulled_back_involution_divisors() -> Result<(TautClass, TautClass), PipelineError> {
    let v = vermeire_class();
    let lifted = v.pullback_forget(7)?.pullback_forget(8)?;
    let rename = Permutation::from_cycles(8, "(17)(28)")?;
    Ok((lifted.relabel(&rename), lifted))
}

fn pullback_product() -> Result<TautClass, PipelineError> {
    static CELL: OnceCell<TautClass> = OnceCell::new();
    CELL.get_or_try_init(|| {
        let (a, b) = pulled_back_involution_divisors()?;
        Ok::<_, PipelineError>(a.mul(&b)?)
    })
    .cloned()
}

/// The three excess components of the pulled-back product besides the
/// involution locus itself: the node-invariant divisor locus and the two
/// families of boundary strata.
///
/// The two (2,4,2)-chains with {1,2,7,8} in the middle that belong to the
/// intersection are selected computationally rather than hand-listed: both
/// forgetful images of a candidate are the six-marking chain (X|12|Y), which
/// lies in the involution locus exactly when the involution (12)(34)(56)
/// switches the outer components. (Reading coefficients off the normal-form
/// product does not decide this: with the smallest-label auxiliary
/// convention every middle-{1,2,7,8} chain has coefficient zero there, since
/// the split producing it would need markings 1 and 2 inside the moving
/// part.)
pub fn correction_classes() -> Result<(TautClass, TautClass, TautClass), PipelineError> {
    let chain = |parts: &[&[u8]]| -> TautClass {
        let parts: Vec<Vec<u8>> = parts.iter().map(|p| p.to_vec()).collect();
        TautClass::stratum(&StableTree::chain(&parts).expect("literal chain"))
    };

    let div = chain(&[&[1, 2, 7, 8], &[5], &[3, 4, 6]])
        .add(&chain(&[&[1, 2, 7, 8], &[6], &[3, 4, 5]]))?
        .add(&chain(&[&[1, 2, 7, 8], &[5, 6], &[3, 4]]))?;

    let tau = standard_involution(6)?;
    let candidates: [[u8; 2]; 3] = [[3, 4], [3, 5], [3, 6]];
    let mut type_i = TautClass::zero(8, 2);
    let mut selected = 0usize;
    for first in candidates {
        let second: Vec<u8> = [3u8, 4, 5, 6]
            .into_iter()
            .filter(|m| !first.contains(m))
            .collect();
        let mut image: Vec<u8> = first.iter().map(|&m| tau.apply(m)).collect();
        image.sort_unstable();
        if image != second {
            continue;
        }
        let tree = StableTree::chain(&[first.to_vec(), vec![1, 2, 7, 8], second])
            .expect("candidate chain");
        type_i = type_i.add(&TautClass::stratum(&tree))?;
        selected += 1;
    }
    if selected != 2 {
        return Err(PipelineError::Corrections(format!(
            "expected 2 middle-{{1,2,7,8}} chains with switched outer pairs, found {selected}"
        )));
    }

    let mut type_ii = TautClass::zero(8, 2);
    for (central, split_pair) in [([3u8, 4], [5u8, 6]), ([5, 6], [3, 4])] {
        for p in split_pair {
            for q in [7u8, 8] {
                let outer1 = vec![1, p, q];
                let outer2: Vec<u8> = (1..=8)
                    .filter(|m| !outer1.contains(m) && !central.contains(m))
                    .collect();
                let tree = StableTree::chain(&[outer1, central.to_vec(), outer2])
                    .expect("literal chain");
                type_ii = type_ii.add(&TautClass::stratum(&tree))?;
            }
        }
    }

    Ok((div, type_i, type_ii))
}

/// The closure class of the 8-marking involution locus as a strata
/// combination: the pulled-back product minus the three correction classes,
/// weighted by the externally determined multiplicities.
pub fn i8_class() -> Result<TautClass, PipelineError> {
    let product = pullback_product()?;
    let (div, type_i, type_ii) = correction_classes()?;
    let m = &DATA.multiplicities;
    let corrected = product
        .sub(&div.scale(&m.beta))?
        .sub(&type_i.scale(&m.gamma))?
        .sub(&type_ii.scale(&m.delta))?;
    Ok(corrected.scale(&m.alpha.recip()))
}

/// The invariant involution locus on M̄₀,₈: the sum over the 105 conjugate
/// loci, expressed in the codimension-2 d_λ basis.
pub fn i8_inv() -> Result<InvariantClass, PipelineError> {
    static CELL: OnceCell<InvariantClass> = OnceCell::new();
    CELL.get_or_try_init(|| {
        let base = standard_involution(8)?;
        let symmetrized = sum_over_conjugates(&i8_class()?, &base)?;
        Ok::<_, PipelineError>(to_invariant(&symmetrized)?)
    })
    .cloned()
}

/// Σᵢ ψᵢ^j on M̄₀,ₙ.
pub fn psi_power_sum(n: u8, j: u32) -> Result<TautClass, PipelineError> {
    let mut acc = TautClass::zero(n, j.min(255) as u8);
    for i in 1..=n {
        acc = acc.add(&psi_expand(n, i, None)?.pow(j)?)?;
    }
    Ok(acc)
}

/// The divisor-level pull-backs (φ*λ, φ*δ₀, φ*δ₁) on M̄₀,₈ in strata form.
///
/// The boundary rows are the standard admissible-cover relations
/// φ*δ₀ = 2d₂,₆ + 2d₄,₄ and φ*δ₁ = ½d₃,₅; the λ row is derived in-engine
/// from 12λ = κ₁ + δ₀ + δ₁ together with φ*κ₁ = 2κ₁ − ½ψ̃₁.
pub fn phi_pullback_divisors() -> Result<[TautClass; 3], PipelineError> {
    static CELL: OnceCell<[TautClass; 3]> = OnceCell::new();
    CELL.get_or_try_init(|| {
        let two = Rational::from_int(2);
        let half = Rational::new(1, 2);
        let d0 = d_class(8, &[2, 6])?
            .scale(&two)
            .add(&d_class(8, &[4, 4])?.scale(&two))?;
        let d1 = d_class(8, &[3, 5])?.scale(&half);
        let kappa1 = kappa_class(8, 1)?;
        let psi1 = psi_power_sum(8, 1)?;
        let phi_kappa1 = kappa1.scale(&two).sub(&psi1.scale(&half))?;
        let lambda = phi_kappa1
            .add(&d0)?
            .add(&d1)?
            .scale(&Rational::new(1, 12));
        Ok::<_, PipelineError>([lambda, d0, d1])
    })
    .cloned()
}

/// φ*κ₂ = 2κ₂ − ¼ψ̃₂ on M̄₀,₈.
pub fn phi_kappa2_pullback() -> Result<TautClass, PipelineError> {
    let kappa2 = kappa_class(8, 2)?;
    let psi2 = psi_power_sum(8, 2)?;
    Ok(kappa2
        .scale(&Rational::from_int(2))
        .sub(&psi2.scale(&Rational::new(1, 4)))?)
}

/// The 7×6 matrix of the pull-back from the genus-3 codimension-2 basis to
/// the invariant codimension-2 basis of M̄₀,₈: row i is the d_λ expression
/// of the pull-back of the i-th basis class.
pub fn phi_matrix() -> Result<QMatrix, PipelineError> {
    static CELL: OnceCell<QMatrix> = OnceCell::new();
    CELL.get_or_try_init(|| {
        let [lambda, d0, d1] = phi_pullback_divisors()?;
        let products = [
            lambda.mul(&lambda)?,
            lambda.mul(&d0)?,
            lambda.mul(&d1)?,
            d0.mul(&d0)?,
            d0.mul(&d1)?,
            d1.mul(&d1)?,
            phi_kappa2_pullback()?,
        ];
        let mut rows = Vec::with_capacity(7);
        for p in &products {
            rows.push(to_invariant(p)?.coeff_vector());
        }
        Ok::<_, PipelineError>(QMatrix::from_rows(rows)?)
    })
    .cloned()
}

// ---------------------------------------------------------------------------
// Genus 2
// ---------------------------------------------------------------------------

/// The genus-2 bielliptic class in both standard coordinate systems.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Genus2Solution {
    /// The invariant involution locus on M̄₀,₆ in the d_λ basis.
    pub i6_inv: InvariantClass,
    /// Coefficients over (δ₀, δ₁).
    pub delta_form: [Rational; 2],
    /// Coefficients over (λ, δ₁), converted through 10λ = δ₀ + 2δ₁.
    pub lambda_form: [Rational; 2],
}

/// Computes the genus-2 bielliptic class: symmetrize the involution divisor
/// over the 15 conjugate loci and solve a·φ*δ₀ + b·φ*δ₁ = [Ī₆ inv] with
/// φ*δ₀ = 2d₂,₄ and φ*δ₁ = ½d₃,₃.
pub fn solve_genus2() -> Result<Genus2Solution, PipelineError> {
    let base = standard_involution(6)?;
    let symmetrized = sum_over_conjugates(&vermeire_class(), &base)?;
    let i6_inv = to_invariant(&symmetrized)?;
    let basis = [
        d_class(6, &[2, 4])?.scale(&Rational::from_int(2)),
        d_class(6, &[3, 3])?.scale(&Rational::new(1, 2)),
    ];
    let coeffs = symmetrized.express_in(&basis)?;
    let (a, b) = (coeffs[0].clone(), coeffs[1].clone());
    let lambda_form = [
        &a * &Rational::from_int(10),
        &b - &(&a * &Rational::from_int(2)),
    ];
    Ok(Genus2Solution {
        i6_inv,
        delta_form: [a, b],
        lambda_form,
    })
}

// ---------------------------------------------------------------------------
// Genus 3
// ---------------------------------------------------------------------------

/// The one-parameter solution family of the pull-back system, over the
/// [`GENUS3_BASIS`] order: class(d, ε) = base/ε + d·kernel, normalized so
/// that the free parameter d is the δ₀² coordinate (base has δ₀² entry 0,
/// kernel has δ₀² entry 1).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParametricFamily {
    pub base: Vec<Rational>,
    pub kernel: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SurfaceCheck {
    pub name: String,
    pub predicted: Rational,
    pub expected: Rational,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExternalSurfaceCheck {
    pub name: String,
    pub predicted: Rational,
    pub supplied_count: Rational,
    /// Known restriction value for this surface name, when available.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_expectation: Option<Rational>,
    pub note: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Genus3Solution {
    pub family: ParametricFamily,
    pub epsilon: Rational,
    /// The δ₀² coordinate, the last parameter fixed by the surface counts.
    pub delta0_sq: Rational,
    /// Final coordinates over [`GENUS3_BASIS`].
    pub coords: Vec<Rational>,
    /// The value of the sigma2 functional on the kernel generator, when
    /// sigma2 is supplied: if it vanishes, sigma2 cannot pin the free
    /// parameter and serves purely as a consistency check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma2_kernel_value: Option<Rational>,
    pub surface_checks: Vec<SurfaceCheck>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub external_surfaces: Vec<ExternalSurfaceCheck>,
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves for the genus-3 class from the computed pull-back matrix, the
/// invariant locus, and the supplied test surfaces (sigma8 and sigma1
/// required, sigma2 optional as a consistency check).
pub fn solve_genus3(surfaces: &[TestSurface]) -> Result<Genus3Solution, PipelineError> {
    let matrix = phi_matrix()?;
    let rhs = i8_inv()?.coeff_vector();
    solve_genus3_from(&matrix, &rhs, surfaces)
}

/// The linear-algebra half of the genus-3 solve, factored out over explicit
/// inputs: transpose(matrix)·x = rhs/ε with the surface counts pinning
/// (ε, d).
pub fn solve_genus3_from(
    matrix: &QMatrix,
    rhs: &[Rational],
    surfaces: &[TestSurface],
) -> Result<Genus3Solution, PipelineError> {
    let transpose = matrix.transpose();
    let solution = transpose
        .solve_affine(rhs)?
        .ok_or_else(|| PipelineError::Solve("invariant locus outside the image".into()))?;
    if solution.kernel.len() != 1 {
        return Err(PipelineError::Solve(format!(
            "expected a 1-dimensional kernel, got {}",
            solution.kernel.len()
        )));
    }
    let raw_kernel = &solution.kernel[0];
    if raw_kernel[3].is_zero() {
        return Err(PipelineError::Solve(
            "kernel has no delta_0^2 component; cannot normalize".into(),
        ));
    }
    let scale = raw_kernel[3].recip();
    let kernel: Vec<Rational> = raw_kernel.iter().map(|v| v * &scale).collect();
    let base: Vec<Rational> = solution
        .particular
        .iter()
        .zip(&kernel)
        .map(|(p, k)| p - &(&solution.particular[3] * k))
        .collect();
    debug_assert!(base[3].is_zero());

    let find = |name: &str| -> Result<&TestSurface, PipelineError> {
        surfaces
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| PipelineError::MissingSurface(name.to_string()))
    };
    let sigma8 = find("sigma8")?;
    let sigma1 = find("sigma1")?;

    // The restriction to a surface with numbers v is (v·base)/ε + d·(v·kernel),
    // linear in (s, d) with s = 1/ε. Two surfaces give a 2×2 system; solving
    // jointly makes the result independent of the order of the constraints.
    let n8 = sigma8.checked_numbers()?;
    let n1 = sigma1.checked_numbers()?;
    let system = QMatrix::from_rows(vec![
        vec![dot(n8, &base), dot(n8, &kernel)],
        vec![dot(n1, &base), dot(n1, &kernel)],
    ])?;
    let counts = [sigma8.expected_count.clone(), sigma1.expected_count.clone()];
    let pinned = system.solve_affine(&counts)?.ok_or_else(|| {
        PipelineError::InconsistentSurfaceData(
            "sigma8/sigma1 counts are incompatible with the solution family".into(),
        )
    })?;
    if !pinned.kernel.is_empty() {
        return Err(PipelineError::InconsistentSurfaceData(
            "sigma8 and sigma1 do not determine the parameters".into(),
        ));
    }
    let s = &pinned.particular[0];
    let d = pinned.particular[1].clone();
    if s.is_zero() {
        return Err(PipelineError::InconsistentSurfaceData(
            "surface counts force 1/epsilon = 0".into(),
        ));
    }
    let epsilon = s.recip();
    if !(epsilon.is_integer() && epsilon.is_positive()) {
        return Err(PipelineError::NonIntegerEpsilon(epsilon));
    }

    let coords: Vec<Rational> = base
        .iter()
        .zip(&kernel)
        .map(|(u, w)| u * s + &d * w)
        .collect();

    let mut surface_checks = Vec::new();
    let mut external_surfaces = Vec::new();
    let mut sigma2_kernel_value = None;
    for surface in surfaces {
        let numbers = surface.checked_numbers()?;
        let predicted = dot(&coords, numbers);
        let builtin = matches!(surface.name.as_str(), "sigma1" | "sigma2" | "sigma8");
        if builtin {
            let consistent = predicted == surface.expected_count;
            if !consistent {
                return Err(PipelineError::InconsistentSurfaceData(format!(
                    "surface {} predicts {} but the family counts {}",
                    surface.name, predicted, surface.expected_count
                )));
            }
            if surface.name == "sigma2" {
                sigma2_kernel_value = Some(dot(numbers, &kernel));
            }
            surface_checks.push(SurfaceCheck {
                name: surface.name.clone(),
                predicted,
                expected: surface.expected_count.clone(),
                consistent,
            });
        } else {
            external_surfaces.push(ExternalSurfaceCheck {
                name: surface.name.clone(),
                predicted,
                supplied_count: surface.expected_count.clone(),
                reference_expectation: reference_restriction(&surface.name),
                note: "external data required",
            });
        }
    }

    Ok(Genus3Solution {
        family: ParametricFamily { base, kernel },
        epsilon,
        delta0_sq: d,
        coords,
        sigma2_kernel_value,
        surface_checks,
        external_surfaces,
    })
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct PhiMatrixReport {
    pub row_labels: Vec<&'static str>,
    pub column_labels: Vec<String>,
    pub entries: Vec<Vec<Rational>>,
    pub rank: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Genus3Report {
    pub basis: Vec<&'static str>,
    pub epsilon: Rational,
    pub delta0_sq: Rational,
    pub coords: Vec<Rational>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParametricFamilyReport {
    pub description: &'static str,
    pub base: Vec<Rational>,
    pub kernel: Vec<Rational>,
}

/// The full pipeline report.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub genus2: Genus2Solution,
    pub i8inv: InvariantClass,
    pub phi_matrix: PhiMatrixReport,
    pub parametric_family: ParametricFamilyReport,
    pub genus3: Genus3Report,
    pub surface_checks: Vec<SurfaceCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma2_kernel_value: Option<Rational>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub external_surfaces: Vec<ExternalSurfaceCheck>,
}

/// Runs the whole pipeline. With `surfaces = None` the built-in surface data
/// is used; a supplied list must include sigma8 and sigma1 and may add
/// further surfaces, which are reported informationally.
pub fn report(surfaces: Option<&[TestSurface]>) -> Result<Report, PipelineError> {
    let builtin = builtin_surfaces();
    let surfaces = surfaces.unwrap_or(&builtin);
    let genus2 = solve_genus2()?;
    let matrix = phi_matrix()?;
    let i8inv = i8_inv()?;
    let genus3 = solve_genus3(surfaces)?;
    let column_labels: Vec<String> = i8inv
        .coeffs()
        .iter()
        .map(|(shape, _)| shape.to_string())
        .collect();
    Ok(Report {
        genus2,
        i8inv,
        phi_matrix: PhiMatrixReport {
            row_labels: GENUS3_BASIS.to_vec(),
            column_labels,
            entries: (0..matrix.nrows())
                .map(|r| matrix.row(r).to_vec())
                .collect(),
            rank: matrix.rank(),
        },
        parametric_family: ParametricFamilyReport {
            description: "class(d, eps) = base/eps + d*kernel over the basis",
            base: genus3.family.base.clone(),
            kernel: genus3.family.kernel.clone(),
        },
        genus3: Genus3Report {
            basis: GENUS3_BASIS.to_vec(),
            epsilon: genus3.epsilon.clone(),
            delta0_sq: genus3.delta0_sq.clone(),
            coords: genus3.coords.clone(),
        },
        surface_checks: genus3.surface_checks,
        sigma2_kernel_value: genus3.sigma2_kernel_value,
        external_surfaces: genus3.external_surfaces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn qi(v: i64) -> Rational {
        Rational::from_int(v)
    }

    /// The pull-back matrix frozen from the verified pipeline output; used
    /// here to unit-test the solving logic without the heavy strata work.
    fn frozen_matrix() -> QMatrix {
        let rows: Vec<Vec<Rational>> = [
            ["1/42", "19/210", "1/35", "1/20", "1/35", "3/35"],
            ["0", "11/15", "0", "1/5", "0", "4/5"],
            ["1/12", "0", "1/10", "1/10", "1/10", "0"],
            ["-8/3", "86/15", "-2", "-4/5", "0", "112/15"],
            ["1", "0", "1", "1", "0", "0"],
            ["-1/12", "0", "-3/20", "-1/40", "7/20", "0"],
            ["13/84", "6/35", "33/140", "1/8", "33/140", "2/35"],
        ]
        .iter()
        .map(|row| row.iter().map(|s| s.parse().unwrap()).collect())
        .collect();
        QMatrix::from_rows(rows).unwrap()
    }

    fn frozen_i8inv() -> Vec<Rational> {
        ["5/2", "7/4", "3/4", "15/4", "3", "3/2"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect()
    }

    #[test]
    fn vermeire_class_literal() {
        let v = vermeire_class();
        assert_eq!(v.num_terms(), 6);
        assert_eq!(v.coeff(&"(56|1234)".parse().unwrap()), qi(-1));
        assert_eq!(v.coeff(&"(125|346)".parse().unwrap()), qi(2));
        assert_eq!(v.coeff(&"(15|2346)".parse().unwrap()), qi(1));
    }

    #[test]
    fn correction_class_term_counts_and_selection() {
        let (div, type_i, type_ii) = correction_classes().unwrap();
        assert_eq!(div.num_terms(), 3);
        assert_eq!(type_i.num_terms(), 2);
        assert_eq!(type_ii.num_terms(), 8);
        // The selected middle-{1,2,7,8} chains have their outer pairs
        // switched by the involution.
        assert_eq!(type_i.coeff(&"(35|1278|46)".parse().unwrap()), qi(1));
        assert_eq!(type_i.coeff(&"(36|1278|45)".parse().unwrap()), qi(1));
        assert_eq!(type_i.coeff(&"(34|1278|56)".parse().unwrap()), qi(0));
    }

    #[test]
    fn transpose_of_the_matrix_sends_the_class_to_the_invariant_locus() {
        let theorem: Vec<Rational> = ["2673/2", "-267", "-651", "27/2", "69", "177/2", "-9/2"]
            .iter()
            .map(|s| s.parse::<Rational>().unwrap())
            .collect();
        let image = frozen_matrix().transpose().mul_vec(&theorem).unwrap();
        assert_eq!(image, frozen_i8inv());
    }

    #[test]
    fn genus2_class_both_forms() {
        let sol = solve_genus2().unwrap();
        assert_eq!(sol.delta_form, [q(3, 2), qi(6)]);
        assert_eq!(sol.lambda_form, [qi(15), qi(3)]);
        assert_eq!(sol.i6_inv.coeff_vector(), vec![qi(3), qi(3)]);
    }

    #[test]
    fn solving_from_frozen_inputs_reproduces_the_class() {
        let sol =
            solve_genus3_from(&frozen_matrix(), &frozen_i8inv(), &builtin_surfaces()).unwrap();
        assert_eq!(sol.epsilon, qi(1));
        assert_eq!(sol.delta0_sq, q(27, 2));
        let expect: Vec<Rational> = ["2673/2", "-267", "-651", "27/2", "69", "177/2", "-9/2"]
            .iter()
            .map(|s| s.parse::<Rational>().unwrap())
            .collect();
        assert_eq!(sol.coords, expect);
        assert_eq!(sol.sigma2_kernel_value, Some(Rational::zero()));
        assert!(sol.surface_checks.iter().all(|c| c.consistent));
    }

    #[test]
    fn frozen_family_matches_the_symbolic_solution() {
        let sol =
            solve_genus3_from(&frozen_matrix(), &frozen_i8inv(), &builtin_surfaces()).unwrap();
        let base: Vec<Rational> = ["153/2", "-6", "-39", "0", "6", "33/2", "-9/2"]
            .iter()
            .map(|s| s.parse::<Rational>().unwrap())
            .collect();
        let kernel: Vec<Rational> = ["280/3", "-58/3", "-136/3", "1", "14/3", "16/3", "0"]
            .iter()
            .map(|s| s.parse::<Rational>().unwrap())
            .collect();
        assert_eq!(sol.family.base, base);
        assert_eq!(sol.family.kernel, kernel);
    }

    #[test]
    fn surface_order_does_not_change_the_solution() {
        let surfaces = builtin_surfaces();
        let mut reversed = surfaces.clone();
        reversed.reverse();
        let a = solve_genus3_from(&frozen_matrix(), &frozen_i8inv(), &surfaces).unwrap();
        let b = solve_genus3_from(&frozen_matrix(), &frozen_i8inv(), &reversed).unwrap();
        assert_eq!(a.coords, b.coords);
        assert_eq!(a.epsilon, b.epsilon);
        assert_eq!(a.delta0_sq, b.delta0_sq);
    }

    #[test]
    fn missing_required_surfaces_are_reported() {
        let only_sigma1: Vec<TestSurface> = builtin_surfaces()
            .into_iter()
            .filter(|s| s.name == "sigma1")
            .collect();
        assert!(matches!(
            solve_genus3_from(&frozen_matrix(), &frozen_i8inv(), &only_sigma1),
            Err(PipelineError::MissingSurface(name)) if name == "sigma8"
        ));
    }

    #[test]
    fn inconsistent_surface_counts_error() {
        let mut surfaces = builtin_surfaces();
        for s in surfaces.iter_mut() {
            if s.name == "sigma2" {
                s.expected_count = qi(5);
            }
        }
        assert!(matches!(
            solve_genus3_from(&frozen_matrix(), &frozen_i8inv(), &surfaces),
            Err(PipelineError::InconsistentSurfaceData(_))
        ));
    }

    #[test]
    fn non_integer_epsilon_is_rejected() {
        let mut surfaces = builtin_surfaces();
        for s in surfaces.iter_mut() {
            if s.name == "sigma8" {
                // Forces 1/eps = 2, so eps = 1/2.
                s.expected_count = qi(48);
            }
        }
        assert!(matches!(
            solve_genus3_from(&frozen_matrix(), &frozen_i8inv(), &surfaces),
            Err(PipelineError::NonIntegerEpsilon(_))
        ));
    }

    #[test]
    fn external_surfaces_are_informational() {
        let mut surfaces = builtin_surfaces();
        surfaces.push(TestSurface {
            name: "sigma6".into(),
            numbers: vec![qi(0); 7],
            expected_count: qi(225),
        });
        let sol = solve_genus3_from(&frozen_matrix(), &frozen_i8inv(), &surfaces).unwrap();
        assert_eq!(sol.external_surfaces.len(), 1);
        let ext = &sol.external_surfaces[0];
        assert_eq!(ext.reference_expectation, Some(qi(225)));
        // The zero vector is not real surface data; the section stays
        // informational and nothing fails.
        assert_eq!(ext.predicted, qi(0));
        assert!(sol.surface_checks.iter().all(|c| c.consistent));
    }

    #[test]
    fn surfaces_parse_from_json() {
        let text = r#"[{"name":"sigma8","numbers":["0","-2","0","-48","2","0","0"],"expected_count":"24"}]"#;
        let parsed = parse_surfaces(text).unwrap();
        assert_eq!(parsed[0].numbers[3], qi(-48));
        assert_eq!(parsed, vec![builtin_surfaces()[0].clone()]);
    }
}
