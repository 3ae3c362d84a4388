//! Law checks for a coreflection `ι ⊣ F` presented as an [`AdjunctionInstance`].
//!
//! The checker knows nothing about any particular category. Instances supply
//! the functors, unit, counit, composition and a morphism comparison, which
//! may be restricted to a finite fragment and may answer "inconclusive".

use std::fmt;

use serde::{Deserialize, Serialize};

/// Outcome of comparing two morphisms or of checking one property.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Comparison {
    Equal,
    Differs { at: String, detail: String },
    Inconclusive { reason: String },
}

impl Comparison {
    pub fn differs(at: impl Into<String>, detail: impl Into<String>) -> Self {
        Comparison::Differs { at: at.into(), detail: detail.into() }
    }

    pub fn inconclusive(reason: impl Into<String>) -> Self {
        Comparison::Inconclusive { reason: reason.into() }
    }

    pub fn is_equal(&self) -> bool {
        matches!(self, Comparison::Equal)
    }

    /// First non-equal outcome, or `Equal`.
    pub fn all(items: impl IntoIterator<Item = Comparison>) -> Comparison {
        let mut pending = None;
        for c in items {
            match c {
                Comparison::Equal => {}
                Comparison::Differs { .. } => return c,
                Comparison::Inconclusive { .. } => {
                    pending.get_or_insert(c);
                }
            }
        }
        pending.unwrap_or(Comparison::Equal)
    }
}

/// Construction failures mean the check could not be carried out.
impl From<String> for Comparison {
    fn from(reason: String) -> Self {
        Comparison::Inconclusive { reason }
    }
}

/// `ι : M → M'` fully faithful with right adjoint `F`, unit `η : Id ⇒ Fι` and
/// counit `ε : ιF ⇒ Id`.
pub trait AdjunctionInstance {
    type Obj;
    type RichObj;
    type Mor;
    type RichMor;

    fn name(&self) -> String;
    /// Human-readable description of the checked fragment, e.g. a depth bound.
    fn fragment(&self) -> String;

    fn apply_f(&self, x: &Self::RichObj) -> Result<Self::Obj, String>;
    fn apply_f_mor(&self, g: &Self::RichMor) -> Result<Self::Mor, String>;
    fn apply_iota(&self, x: &Self::Obj) -> Result<Self::RichObj, String>;
    fn apply_iota_mor(&self, f: &Self::Mor) -> Result<Self::RichMor, String>;
    /// `η_X : X → F ι X`.
    fn unit_at(&self, x: &Self::Obj) -> Result<Self::Mor, String>;
    /// `ε_X : ι F X → X`.
    fn counit_at(&self, x: &Self::RichObj) -> Result<Self::RichMor, String>;

    fn identity(&self, x: &Self::Obj) -> Result<Self::Mor, String>;
    fn rich_identity(&self, x: &Self::RichObj) -> Result<Self::RichMor, String>;
    /// `second ∘ first`.
    fn compose(&self, first: &Self::Mor, second: &Self::Mor) -> Result<Self::Mor, String>;
    fn rich_compose(&self, first: &Self::RichMor, second: &Self::RichMor) -> Result<Self::RichMor, String>;

    fn mor_eq(&self, a: &Self::Mor, b: &Self::Mor) -> Comparison;
    fn rich_mor_eq(&self, a: &Self::RichMor, b: &Self::RichMor) -> Comparison;
    fn is_iso(&self, m: &Self::Mor) -> Comparison;
    /// Whether a constructed rich morphism satisfies the morphism conditions.
    fn rich_mor_valid(&self, m: &Self::RichMor) -> Comparison;
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LawCheck {
    pub law: String,
    pub sample: String,
    pub outcome: Comparison,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LawStatus {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LawReport {
    pub instance: String,
    pub fragment: String,
    pub checks: Vec<LawCheck>,
}

impl LawReport {
    fn new<I: AdjunctionInstance + ?Sized>(inst: &I) -> Self {
        LawReport { instance: inst.name(), fragment: inst.fragment(), checks: Vec::new() }
    }

    fn push(&mut self, law: &str, sample: String, outcome: impl Into<Comparison>) {
        self.checks.push(LawCheck { law: law.to_string(), sample, outcome: outcome.into() });
    }

    pub fn status(&self) -> LawStatus {
        if self.checks.iter().any(|c| matches!(c.outcome, Comparison::Differs { .. })) {
            LawStatus::Fail
        } else if self.checks.iter().any(|c| matches!(c.outcome, Comparison::Inconclusive { .. })) {
            LawStatus::Inconclusive
        } else {
            LawStatus::Pass
        }
    }

    pub fn first_failure(&self) -> Option<&LawCheck> {
        self.checks.iter().find(|c| !c.outcome.is_equal())
    }

    pub fn merge(&mut self, other: LawReport) {
        self.checks.extend(other.checks);
    }
}

fn attempt(f: impl FnOnce() -> Result<Comparison, String>) -> Comparison {
    f().unwrap_or_else(Comparison::from)
}

/// Both triangle identities, invertibility of the unit, and validity of each counit.
pub fn check_triangle_identities<I: AdjunctionInstance + ?Sized>(
    inst: &I,
    samples_m: &[I::Obj],
    samples_rich: &[I::RichObj],
) -> LawReport {
    let mut report = LawReport::new(inst);
    for (k, x) in samples_m.iter().enumerate() {
        let sample = format!("M[{k}]");
        // ε_{ιX} ∘ ι(η_X) = id_{ιX}
        report.push(
            "left-triangle",
            sample.clone(),
            attempt(|| {
                let iota_x = inst.apply_iota(x)?;
                let lhs = inst.rich_compose(&inst.apply_iota_mor(&inst.unit_at(x)?)?, &inst.counit_at(&iota_x)?)?;
                Ok(inst.rich_mor_eq(&lhs, &inst.rich_identity(&iota_x)?))
            }),
        );
        report.push("unit-iso", sample, attempt(|| Ok(inst.is_iso(&inst.unit_at(x)?))));
    }
    for (k, x) in samples_rich.iter().enumerate() {
        let sample = format!("M'[{k}]");
        // F(ε_X) ∘ η_{FX} = id_{FX}
        report.push(
            "right-triangle",
            sample.clone(),
            attempt(|| {
                let fx = inst.apply_f(x)?;
                let lhs = inst.compose(&inst.unit_at(&fx)?, &inst.apply_f_mor(&inst.counit_at(x)?)?)?;
                Ok(inst.mor_eq(&lhs, &inst.identity(&fx)?))
            }),
        );
        report.push("counit-valid", sample, attempt(|| Ok(inst.rich_mor_valid(&inst.counit_at(x)?))));
    }
    report
}

/// A sampled morphism together with its endpoints.
pub struct Arrow<O, M> {
    pub source: O,
    pub target: O,
    pub mor: M,
}

/// `ε_Y ∘ ιF(g) = g ∘ ε_X` for rich arrows and `Fι(f) ∘ η_X = η_Y ∘ f` for base arrows.
pub fn check_naturality<I: AdjunctionInstance + ?Sized>(
    inst: &I,
    base: &[Arrow<I::Obj, I::Mor>],
    rich: &[Arrow<I::RichObj, I::RichMor>],
) -> LawReport {
    let mut report = LawReport::new(inst);
    for (k, a) in base.iter().enumerate() {
        report.push(
            "unit-naturality",
            format!("M-arrow[{k}]"),
            attempt(|| {
                let lhs = inst.compose(&inst.unit_at(&a.source)?, &inst.apply_f_mor(&inst.apply_iota_mor(&a.mor)?)?)?;
                let rhs = inst.compose(&a.mor, &inst.unit_at(&a.target)?)?;
                Ok(inst.mor_eq(&lhs, &rhs))
            }),
        );
    }
    for (k, a) in rich.iter().enumerate() {
        report.push(
            "counit-naturality",
            format!("M'-arrow[{k}]"),
            attempt(|| {
                let lhs = inst.rich_compose(&inst.apply_iota_mor(&inst.apply_f_mor(&a.mor)?)?, &inst.counit_at(&a.target)?)?;
                let rhs = inst.rich_compose(&inst.counit_at(&a.source)?, &a.mor)?;
                Ok(inst.rich_mor_eq(&lhs, &rhs))
            }),
        );
    }
    report
}

/// `F(g2 ∘ g1) = F(g2) ∘ F(g1)` and `ι(f2 ∘ f1) = ι(f2) ∘ ι(f1)` on composable pairs.
pub fn check_functoriality<I: AdjunctionInstance + ?Sized>(
    inst: &I,
    base_pairs: &[(I::Mor, I::Mor)],
    rich_pairs: &[(I::RichMor, I::RichMor)],
) -> LawReport {
    let mut report = LawReport::new(inst);
    for (k, (f1, f2)) in base_pairs.iter().enumerate() {
        report.push(
            "iota-functorial",
            format!("M-pair[{k}]"),
            attempt(|| {
                let lhs = inst.apply_iota_mor(&inst.compose(f1, f2)?)?;
                let rhs = inst.rich_compose(&inst.apply_iota_mor(f1)?, &inst.apply_iota_mor(f2)?)?;
                Ok(inst.rich_mor_eq(&lhs, &rhs))
            }),
        );
    }
    for (k, (g1, g2)) in rich_pairs.iter().enumerate() {
        report.push(
            "f-functorial",
            format!("M'-pair[{k}]"),
            attempt(|| {
                let lhs = inst.apply_f_mor(&inst.rich_compose(g1, g2)?)?;
                let rhs = inst.compose(&inst.apply_f_mor(g1)?, &inst.apply_f_mor(g2)?)?;
                Ok(inst.mor_eq(&lhs, &rhs))
            }),
        );
    }
    report
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Bisimilar,
    NotBisimilar,
    Inconclusive { reason: String },
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Bisimilar => f.write_str("bisimilar"),
            Verdict::NotBisimilar => f.write_str("not-bisimilar"),
            Verdict::Inconclusive { reason } => write!(f, "inconclusive ({reason})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TransferReport {
    /// Bisimilarity of `F X` and `F Y`.
    pub base: Verdict,
    /// Bisimilarity of `X` and `Y`.
    pub rich: Verdict,
    pub outcome: Comparison,
}

/// `X ~ Y` in `M'` iff `F X ~ F Y` in `M`.
pub fn check_bisim_transfer<I: AdjunctionInstance + ?Sized>(
    inst: &I,
    x: &I::RichObj,
    y: &I::RichObj,
    bisim_base: impl Fn(&I::Obj, &I::Obj) -> Verdict,
    bisim_rich: impl Fn(&I::RichObj, &I::RichObj) -> Verdict,
) -> TransferReport {
    let base = match (inst.apply_f(x), inst.apply_f(y)) {
        (Ok(fx), Ok(fy)) => bisim_base(&fx, &fy),
        (Err(e), _) | (_, Err(e)) => Verdict::Inconclusive { reason: e },
    };
    let rich = bisim_rich(x, y);
    let outcome = match (&base, &rich) {
        (Verdict::Inconclusive { reason }, _) | (_, Verdict::Inconclusive { reason }) => {
            Comparison::inconclusive(reason.clone())
        }
        (a, b) if a == b => Comparison::Equal,
        (a, b) => Comparison::differs("verdicts", format!("F-side {a}, rich side {b}")),
    };
    TransferReport { base, rich, outcome }
}
