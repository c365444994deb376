//! The four worked separable geometries with their candidate third-order
//! symmetries and reference condition sets.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::determining::FGAnsatz;
use crate::diffop::{Geometry, SeparablePotential};
use crate::expr::{parse, Expr, ExprError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("unknown catalog entry `{0}`; available: {1}")]
    Unknown(String, String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Candidate `F0, G0, GH, GL` in terms of `U1(u2), U2(u2), v2(u2)` and constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateSolution {
    pub f0: Expr,
    pub g0: Expr,
    pub gh: Expr,
    pub gl: Expr,
}

impl CandidateSolution {
    pub fn ansatz(&self) -> FGAnsatz {
        FGAnsatz::from_components(self.f0.clone(), self.g0.clone(), self.gh.clone(), self.gl.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub expr: Expr,
    /// Printed form when it differs from `expr`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub printed: Option<Expr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Condition {
    pub fn new(name: &str, expr: Expr) -> Self {
        Condition { name: name.into(), expr, printed: None, note: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConditionSet {
    pub conditions: Vec<Condition>,
}

impl ConditionSet {
    pub fn from_exprs(prefix: &str, es: Vec<Expr>) -> Self {
        ConditionSet { conditions: es.into_iter().enumerate().map(|(i, e)| Condition::new(&format!("{prefix}{}", i + 1), e)).collect() }
    }

    pub fn exprs(&self) -> Vec<Expr> {
        self.conditions.iter().map(|c| c.expr.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpectedForm {
    /// Fourth-order equation for `W` with `v2 = W'` and constants `beta1, beta2`.
    Pvi,
    /// `hbar^2 v''' - 12 v v' + 12 a1 v' = 0`.
    Weierstrass,
    /// Fourth-order horocyclic equation for `W` with constants `d1, d3`.
    HorocyclicNonlinear,
}

/// One side of a case split on a catalog constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub label: String,
    pub constant: String,
    /// `true`: the constant is set to zero; `false`: it is assumed nonzero.
    pub zero: bool,
    pub expected: ExpectedForm,
}

impl BranchSpec {
    fn new(constant: &str, zero: bool, expected: ExpectedForm) -> Self {
        let label = if zero { format!("{constant}=0") } else { format!("{constant}!=0") };
        BranchSpec { label, constant: constant.into(), zero, expected }
    }
}

/// Embedding of the separable coordinates into an ambient space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordinateMap {
    pub description: Vec<String>,
    /// Ambient signature, one sign per component.
    pub signature: Vec<i32>,
    pub components: Vec<Expr>,
    /// Value of `sum signature_i s_i^2` on the surface, if it is a quadric.
    pub quadric: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub geometry: Geometry,
    pub potential: SeparablePotential,
    pub coordinate_map: CoordinateMap,
    pub candidate: CandidateSolution,
    pub reference_conditions: ConditionSet,
    pub branches: Vec<BranchSpec>,
}

pub const NAMES: [&str; 4] = ["polar-flat", "sphere-spherical", "hyperboloid-spherical", "hyperboloid-horocyclic"];

pub fn list() -> Vec<&'static str> {
    NAMES.to_vec()
}

pub fn get(name: &str) -> Result<CatalogEntry, CatalogError> {
    match name {
        "polar-flat" => polar_flat(),
        "sphere-spherical" => sphere_spherical(),
        "hyperboloid-spherical" => hyperboloid_spherical(),
        "hyperboloid-horocyclic" => hyperboloid_horocyclic(),
        _ => Err(CatalogError::Unknown(name.into(), NAMES.join(", "))),
    }
}

pub fn all() -> Result<Vec<CatalogEntry>, CatalogError> {
    NAMES.iter().map(|n| get(n)).collect()
}

fn p(s: &str) -> Result<Expr, CatalogError> {
    Ok(parse(s)?)
}

fn geometry(name: &str, f1: &str, metadata: &[&str], excluded: &[&str]) -> Result<Geometry, CatalogError> {
    Ok(Geometry {
        name: name.into(),
        f1: p(f1)?,
        f2: Expr::zero(),
        metadata: metadata.iter().map(|s| s.to_string()).collect(),
        excluded: excluded.iter().map(|s| s.to_string()).collect(),
    })
}

pub const COND1: &str = "a4*D[v2,u2,1] + 2*D[U2,u2,2]";
pub const COND2: &str = "hbar^2*D[U2,u2,4] + 4*a4*D[v2,u2,1]*v2 - 4*D[v2,u2,1]*D[U2,u2,1]";
pub const COND3: &str = "8*v2*cos(u2) + 4*D[v2,u2,1]*sin(u2) - D[U1,u2,2] - U1";
pub const COND4: &str = "D[v2,u2,1]*D[U1,u2,1] - hbar^2*D[v2,u2,3]*sin(u2) - 4*hbar^2*D[v2,u2,2]*cos(u2) \
     + 2*sin(u2)*(hbar^2 + 4*v2)*D[v2,u2,1] - 2*v2*(2*hbar^2*cos(u2) - 8*v2*cos(u2) + U1)";

pub const HCOND1: &str = "a8*D[v2,u2,1] + 2*D[U1,u2,2]";
pub const HCOND1_PRINTED: &str = "a8*v2 + 2*D[U1,u2,2]";
pub const HCOND2: &str = "1/2*hbar^2*a8*D[v2,u2,3] - 4*a8*D[v2,u2,1]*v2 + 4*D[v2,u2,1]*D[U1,u2,1]";
pub const HCOND3: &str = "(2*a10 - 2*a9*u2 - a8*u2^2)*D[v2,u2,1] - 4*(a9 + a8*u2)*v2 + 4*U1 + 4*D[U2,u2,2]";
pub const HCOND4: &str = "-2*hbar^2*a8*D[v2,u2,1] + 16*(a9 + a8*u2)*v2^2 - 4*(2*a10 - 2*a9*u2 - a8*u2^2)*D[v2,u2,1]*v2 \
     + 1/2*hbar^2*(2*a10 - 2*a9*u2 - a8*u2^2)*D[v2,u2,3] - 4*hbar^2*(a9 + a8*u2)*D[v2,u2,2] \
     - 16*v2*U1 + 8*D[v2,u2,1]*D[U2,u2,1]";
pub const HCOND4_PRINTED: &str = "-2*hbar^2*a8*u2^2*D[v2,u2,1] + 16*(a9 + a8*u2)*v2^2 - 4*(2*a10 - 2*a9*u2 + a8*u2^2)*D[v2,u2,1]*v2 \
     + 1/2*hbar^2*(2*a10 - 2*a9*u2 - a8*u2^2)*D[v2,u2,3] - 4*hbar^2*(a9 + a8*u2) \
     - 16*v2*U1 + 8*D[v2,u2,1]*D[U2,u2,1]";

pub const PVI: &str = "hbar^2*(sin(u2)*D[W,u2,4] + 4*cos(u2)*D[W,u2,3] - 6*sin(u2)*D[W,u2,2] - 4*cos(u2)*D[W,u2,1]) \
     - 12*sin(u2)*D[W,u2,1]*D[W,u2,2] - 4*cos(u2)*W*D[W,u2,2] - 4*(beta1*sin(u2) - beta2*cos(u2))*D[W,u2,2] \
     - 16*cos(u2)*D[W,u2,1]^2 + 8*sin(u2)*W*D[W,u2,1] - 8*(beta1*cos(u2) + beta2*sin(u2))*D[W,u2,1]";
pub const WEIERSTRASS: &str = "hbar^2*D[v2,u2,3] - 12*D[v2,u2,1]*v2 + 12*a1*D[v2,u2,1]";
pub const HOROCYCLIC_NONLINEAR: &str = "-4*a9*D[W,u2,1]^2 + ((-3*a9*u2 + 3*a10)*D[W,u2,2] + 4*d1)*D[W,u2,1] \
     + (-a9*W + 2*d1*u2 - 2*d3)*D[W,u2,2] + hbar^2*a9*D[W,u2,3] - 1/4*hbar^2*(-a9*u2 + a10)*D[W,u2,4]";

/// Reference form of a final equation.
pub fn expected_form_expr(f: ExpectedForm) -> Result<Expr, CatalogError> {
    p(match f {
        ExpectedForm::Pvi => PVI,
        ExpectedForm::Weierstrass => WEIERSTRASS,
        ExpectedForm::HorocyclicNonlinear => HOROCYCLIC_NONLINEAR,
    })
}

/// Constants of the reference form that are identified with combinations
/// of the derived integration constants.
pub fn expected_form_constants(f: ExpectedForm) -> &'static [&'static str] {
    match f {
        ExpectedForm::Pvi => &["beta1", "beta2"],
        ExpectedForm::Weierstrass => &["a1"],
        ExpectedForm::HorocyclicNonlinear => &["d1", "d3"],
    }
}

fn polar_conditions() -> Result<ConditionSet, CatalogError> {
    Ok(ConditionSet {
        conditions: vec![
            Condition::new("cond1", p(COND1)?),
            Condition::new("cond2", p(COND2)?),
            Condition::new("cond3", p(COND3)?),
            Condition::new("cond4", p(COND4)?),
        ],
    })
}

fn circular_branches() -> Vec<BranchSpec> {
    vec![BranchSpec::new("a4", true, ExpectedForm::Pvi), BranchSpec::new("a4", false, ExpectedForm::Weierstrass)]
}

fn candidate(f0: &str, g0: &str, gh: &str, gl: &str) -> Result<CandidateSolution, CatalogError> {
    Ok(CandidateSolution { f0: p(f0)?, g0: p(g0)?, gh: p(gh)?, gl: p(gl)? })
}

fn polar_flat() -> Result<CatalogEntry, CatalogError> {
    Ok(CatalogEntry {
        geometry: geometry(
            "polar-flat",
            "exp(2*u1)",
            &["Euclidean plane in polar coordinates", "(x, y) = (r cos(theta), r sin(theta)), r = exp(u1), theta = u2"],
            &[],
        )?,
        potential: SeparablePotential::angular(),
        coordinate_map: CoordinateMap {
            description: vec!["x = exp(u1) cos(u2)".into(), "y = exp(u1) sin(u2)".into()],
            signature: vec![1, 1],
            components: vec![p("exp(u1)*cos(u2)")?, p("exp(u1)*sin(u2)")?],
            quadric: None,
        },
        candidate: candidate("4*hbar^2*exp(-u1)*sin(u2)", "-U1*exp(-u1) + U2", "a5", "-8*exp(-u1)*cos(u2) + a4*u2 + a3")?,
        reference_conditions: polar_conditions()?,
        branches: circular_branches(),
    })
}

fn sphere_spherical() -> Result<CatalogEntry, CatalogError> {
    Ok(CatalogEntry {
        geometry: geometry(
            "sphere-spherical",
            "cosh(u1)^(-2)",
            &[
                "2-sphere s1^2 + s2^2 + s3^2 = 1 in spherical coordinates",
                "s1 = sin(theta) cos(phi), s2 = sin(theta) sin(phi), s3 = cos(theta)",
                "sin(theta) = 1/cosh(u1), phi = u2",
            ],
            &[],
        )?,
        potential: SeparablePotential::angular(),
        coordinate_map: CoordinateMap {
            description: vec!["s1 = cos(u2)/cosh(u1)".into(), "s2 = sin(u2)/cosh(u1)".into(), "s3 = tanh(u1)".into()],
            signature: vec![1, 1, 1],
            components: vec![p("cos(u2)/cosh(u1)")?, p("sin(u2)/cosh(u1)")?, p("sinh(u1)/cosh(u1)")?],
            quadric: Some(1),
        },
        candidate: candidate("4*hbar^2*cosh(u1)*sin(u2)", "sinh(u1)*U1 + U2", "a5", "8*sinh(u1)*cos(u2) + a4*u2 + a3")?,
        reference_conditions: polar_conditions()?,
        branches: circular_branches(),
    })
}

fn hyperboloid_spherical() -> Result<CatalogEntry, CatalogError> {
    // exp(x) = tanh(u1/2) = (exp(u1) - 1)/(exp(u1) + 1)
    let t = "(exp(u1) - 1)/(exp(u1) + 1)";
    let ch = format!("(({t}) + 1/({t}))/2");
    let sh = format!("(({t}) - 1/({t}))/2");
    Ok(CatalogEntry {
        geometry: geometry(
            "hyperboloid-spherical",
            "sinh(u1)^(-2)",
            &[
                "upper sheet s1^2 - s2^2 - s3^2 = 1 in spherical coordinates",
                "s1 = cosh(x), s2 = sinh(x) cos(phi), s3 = sinh(x) sin(phi)",
                "tanh(u1/2) = exp(x), phi = u2",
            ],
            &["u1 = 0"],
        )?,
        potential: SeparablePotential::angular(),
        coordinate_map: CoordinateMap {
            description: vec![
                "s1 = cosh(x)".into(),
                "s2 = sinh(x) cos(u2)".into(),
                "s3 = sinh(x) sin(u2)".into(),
                "exp(x) = tanh(u1/2)".into(),
            ],
            signature: vec![1, -1, -1],
            components: vec![p(&ch)?, p(&format!("{sh}*cos(u2)"))?, p(&format!("{sh}*sin(u2)"))?],
            quadric: Some(1),
        },
        candidate: candidate("4*hbar^2*sinh(u1)*sin(u2)", "cosh(u1)*U1 + U2", "a5", "8*cosh(u1)*cos(u2) + a4*u2 + a3")?,
        reference_conditions: polar_conditions()?,
        branches: circular_branches(),
    })
}

fn hyperboloid_horocyclic() -> Result<CatalogEntry, CatalogError> {
    let mut hc1 = Condition::new("hcond1", p(HCOND1)?);
    hc1.printed = Some(p(HCOND1_PRINTED)?);
    hc1.note = Some("re-derived; the printed derivative order of U1 is ambiguous and the printed v2 term lacks a derivative".into());
    let mut hc4 = Condition::new("hcond4", p(HCOND4)?);
    hc4.printed = Some(p(HCOND4_PRINTED)?);
    hc4.note = Some(
        "re-derived; the printed form has an isolated hbar^2 (a9 + a8 u2) term, an extra u2^2 and a sign change in the a8 u2^2 v2 v2' term"
            .into(),
    );
    Ok(CatalogEntry {
        geometry: geometry(
            "hyperboloid-horocyclic",
            "u1^(-2)",
            &[
                "upper sheet s1^2 - s2^2 - s3^2 = 1 in horocyclic coordinates",
                "s1 = (u1 + (u2^2 + 1)/u1)/2, s2 = (u1 + (u2^2 - 1)/u1)/2, s3 = u2/u1",
            ],
            &["u1 = 0"],
        )?,
        potential: SeparablePotential::angular(),
        coordinate_map: CoordinateMap {
            description: vec!["s1 = (u1 + (u2^2 + 1)/u1)/2".into(), "s2 = (u1 + (u2^2 - 1)/u1)/2".into(), "s3 = u2/u1".into()],
            signature: vec![1, -1, -1],
            components: vec![p("(u1 + (u2^2 + 1)/u1)/2")?, p("(u1 + (u2^2 - 1)/u1)/2")?, p("u2/u1")?],
            quadric: Some(1),
        },
        candidate: candidate("-1/2*a8*hbar^2*u1", "u1^2/2*U1 + U2", "a7", "u1^2*(a8*u2 + a9)/2 - a8*u2^3/6 - a9*u2^2/2 + a10*u2")?,
        reference_conditions: ConditionSet {
            conditions: vec![hc1, Condition::new("hcond2", p(HCOND2)?), Condition::new("hcond3", p(HCOND3)?), hc4],
        },
        branches: vec![
            BranchSpec::new("a8", true, ExpectedForm::HorocyclicNonlinear),
            BranchSpec::new("a8", false, ExpectedForm::Weierstrass),
        ],
    })
}
