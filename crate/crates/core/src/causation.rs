//! Probabilities of causation, feasibility of two-variable interventional
//! data, and the Y-goodness margins.
//!
//! Values `x, x', y, y'` follow a [`Roles`] choice; by default `x = 1`,
//! `x' = 0`, `y = 1`, `y' = 0`.

use std::fmt;

use num_traits::{Signed, Zero};

use crate::bounds::{level2_problem, support_atoms};
use crate::error::{Error, Result};
use crate::hierarchy::{interventional_family, project_2ve, CounterfactualTable, TwoVarFamily};
use crate::lp::Simplex;
use crate::rational::{format_rational, Rational};
use crate::scm::{counterfactual_joint, matches, Conjunct, Event, Intervention, StructuralModel, Valuation};
use crate::standard_form::{enumerate_atoms, StandardFormModel};

/// Which binary values play the roles of `x` and `y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Roles {
    pub x: u8,
    pub y: u8,
}

impl Default for Roles {
    fn default() -> Self {
        Roles { x: 1, y: 1 }
    }
}

impl Roles {
    /// `x` and `x'` exchanged, which turns the sufficiency-side quantities
    /// into necessity-side ones.
    pub fn swapped(self) -> Self {
        Roles { x: 1 - self.x, y: self.y }
    }

    pub fn x_prime(self) -> u8 {
        1 - self.x
    }

    pub fn y_prime(self) -> u8 {
        1 - self.y
    }
}

/// The six probabilities of causation. `None` marks a conditional whose
/// conditioning event has probability 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CausationReport {
    pub pns: Rational,
    pub pns_converse: Rational,
    pub pn: Option<Rational>,
    pub ps: Option<Rational>,
    pub p_disable: Option<Rational>,
    pub p_enable: Option<Rational>,
}

impl CausationReport {
    pub const NAMES: [&'static str; 6] = ["pns", "pns_converse", "pn", "ps", "p_disable", "p_enable"];

    /// The quantities in [`Self::NAMES`] order.
    pub fn values(&self) -> [Option<Rational>; 6] {
        [
            Some(self.pns.clone()),
            Some(self.pns_converse.clone()),
            self.pn.clone(),
            self.ps.clone(),
            self.p_disable.clone(),
            self.p_enable.clone(),
        ]
    }
}

fn show(v: &Option<Rational>) -> String {
    v.as_ref().map(format_rational).unwrap_or_else(|| "undefined".into())
}

impl fmt::Display for CausationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, v) in Self::NAMES.iter().zip(self.values()) {
            writeln!(f, "{name} = {}", show(&v))?;
        }
        Ok(())
    }
}

fn ratio_or_undefined(num: Rational, den: Rational) -> Option<Rational> {
    (!den.is_zero()).then(|| num / den)
}

/// Shared definition over any way of evaluating joint counterfactuals.
fn causation_from(
    x: &str,
    y: &str,
    roles: Roles,
    joint: impl Fn(&[Conjunct]) -> Result<Rational>,
) -> Result<CausationReport> {
    let (xv, xp, yv, yp) = (roles.x, roles.x_prime(), roles.y, roles.y_prime());
    let under = |xval: u8, yval: u8| Conjunct::new(Intervention::set(x, xval), Event::of([(y, yval)]));
    let seen = |pairs: &[(&str, u8)]| Conjunct::new(Intervention::empty(), Event::of(pairs.iter().copied()));
    let pns = joint(&[under(xv, yv), under(xp, yp)])?;
    let pns_converse = joint(&[under(xv, yp), under(xp, yv)])?;
    let pn = ratio_or_undefined(
        joint(&[seen(&[(x, xv), (y, yv)]), under(xp, yp)])?,
        joint(&[seen(&[(x, xv), (y, yv)])])?,
    );
    let ps = ratio_or_undefined(
        joint(&[seen(&[(x, xp), (y, yp)]), under(xv, yv)])?,
        joint(&[seen(&[(x, xp), (y, yp)])])?,
    );
    let p_disable = ratio_or_undefined(
        joint(&[seen(&[(y, yv)]), under(xp, yp)])?,
        joint(&[seen(&[(y, yv)])])?,
    );
    let p_enable = ratio_or_undefined(
        joint(&[seen(&[(y, yp)]), under(xv, yv)])?,
        joint(&[seen(&[(y, yp)])])?,
    );
    Ok(CausationReport { pns, pns_converse, pn, ps, p_disable, p_enable })
}

/// The six probabilities of causation of `x` for `y` in a model.
pub fn probabilities_of_causation<M: StructuralModel + ?Sized>(
    model: &M,
    x: &str,
    y: &str,
    roles: Roles,
) -> Result<CausationReport> {
    if x == y {
        return Err(Error::malformed("treatment and outcome must differ"));
    }
    causation_from(x, y, roles, |c| counterfactual_joint(model, c))
}

/// Same quantities read off a Level-3 table, which must list the passive
/// intervention and both single-treatment interventions.
pub fn probabilities_from_table(
    table: &CounterfactualTable,
    x: &str,
    y: &str,
    roles: Roles,
) -> Result<CausationReport> {
    if x == y {
        return Err(Error::malformed("treatment and outcome must differ"));
    }
    let joint = |conjuncts: &[Conjunct]| -> Result<Rational> {
        let resolved: Vec<(usize, Vec<Option<u8>>)> = conjuncts
            .iter()
            .map(|c| {
                let idx = table
                    .interventions()
                    .iter()
                    .position(|a| *a == c.intervention)
                    .ok_or_else(|| {
                        Error::precondition(format!("table lacks the {} world", c.intervention))
                    })?;
                Ok((idx, c.event.resolve(table.scope())?))
            })
            .collect::<Result<_>>()?;
        Ok(table
            .cells()
            .iter()
            .filter(|(key, _)| resolved.iter().all(|(i, e)| matches(e, &key[*i])))
            .map(|(_, p)| p)
            .sum())
    };
    causation_from(x, y, roles, joint)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FeasibilityViolation {
    /// `μ_{do(X=x)}(X = x) < 1`.
    TreatmentNotFixed { x: u8, mass: Rational },
    /// `μ_{do(X=x)}(y) < μ_()(x, y)`.
    BelowObservational { x: u8, y: u8, interventional: Rational, observational: Rational },
}

impl fmt::Display for FeasibilityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeasibilityViolation::TreatmentNotFixed { x, mass } => write!(
                f,
                "do(X={x}) gives X={x} probability {} instead of 1",
                format_rational(mass)
            ),
            FeasibilityViolation::BelowObservational { x, y, interventional, observational } => write!(
                f,
                "P(Y={y} | do(X={x})) = {} is below P(X={x}, Y={y}) = {}",
                format_rational(interventional),
                format_rational(observational)
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<FeasibilityViolation>,
}

fn cell(t: &crate::scm::DistTable, x: u8, y: u8) -> Rational {
    t.prob(&Valuation(vec![x, y]))
}

/// Whether the family is the two-variable projection of some model: each
/// treatment is certain under its own intervention, and no interventional
/// outcome probability falls below the matching observational joint.
pub fn check_feasible_2ve(fam: &TwoVarFamily) -> FeasibilityReport {
    let mut violations = Vec::new();
    for x in 0..2u8 {
        let t = fam.do_x(x);
        let mass = cell(t, x, 0) + cell(t, x, 1);
        if mass != Rational::from_integer(1.into()) {
            violations.push(FeasibilityViolation::TreatmentNotFixed { x, mass });
        }
    }
    for x in 0..2u8 {
        for y in 0..2u8 {
            let t = fam.do_x(x);
            let interventional = cell(t, 0, y) + cell(t, 1, y);
            let observational = cell(&fam.obs, x, y);
            if interventional < observational {
                violations.push(FeasibilityViolation::BelowObservational {
                    x,
                    y,
                    interventional,
                    observational,
                });
            }
        }
    }
    FeasibilityReport { feasible: violations.is_empty(), violations }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoodnessReport {
    pub feasible: bool,
    pub good: bool,
    /// `μ_x(y') − μ_()(x,y')`, `μ_()(x') − that`, `μ_()(x',y')`,
    /// `μ_()(x') − μ_()(x',y')`.
    pub margins: [Rational; 4],
    /// Indices of the margins that are not strictly positive.
    pub binding: Vec<usize>,
    pub roles: Roles,
}

impl GoodnessReport {
    pub const MARGIN_NAMES: [&'static str; 4] = [
        "P(y' | do(x)) - P(x, y')",
        "P(x') - (P(y' | do(x)) - P(x, y'))",
        "P(x', y')",
        "P(x') - P(x', y')",
    ];

    /// Names of the binding margins with their values.
    pub fn binding_description(&self) -> String {
        self.binding
            .iter()
            .map(|&i| format!("{} = {}", Self::MARGIN_NAMES[i], format_rational(&self.margins[i])))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Evaluates the four Y-goodness margins exactly.
pub fn check_y_good(fam: &TwoVarFamily, roles: Roles) -> GoodnessReport {
    let feasible = check_feasible_2ve(fam).feasible;
    let (x, xp, yp) = (roles.x, roles.x_prime(), roles.y_prime());
    let do_x = fam.do_x(x);
    let mu_x_yp = cell(do_x, 0, yp) + cell(do_x, 1, yp);
    let obs_xp = cell(&fam.obs, xp, 0) + cell(&fam.obs, xp, 1);
    let m1 = mu_x_yp - cell(&fam.obs, x, yp);
    let m2 = &obs_xp - &m1;
    let m3 = cell(&fam.obs, xp, yp);
    let m4 = &obs_xp - &m3;
    let margins = [m1, m2, m3, m4];
    let binding: Vec<usize> = (0..4).filter(|&i| !margins[i].is_positive()).collect();
    GoodnessReport { feasible, good: feasible && binding.is_empty(), margins, binding, roles }
}

/// A standard-form model over `[X, Y]` whose two-variable projection is
/// exactly `fam`: the first vertex reached by the exact simplex.
pub fn realize_2ve(fam: &TwoVarFamily) -> Result<StandardFormModel> {
    let report = check_feasible_2ve(fam);
    if let Some(v) = report.violations.first() {
        return Err(Error::Infeasible(v.to_string()));
    }
    let order = vec![fam.x.clone(), fam.y.clone()];
    let atoms = enumerate_atoms(2)?;
    let family = fam.to_family()?;
    let problem = level2_problem(&order, &atoms, &family)?;
    let simplex = Simplex::new(&problem).map_err(|c| Error::Infeasible(c.describe(&problem)))?;
    let model = support_atoms(&order, &atoms, &simplex.feasible_point())?;
    let all = [Intervention::empty(), Intervention::set(&fam.x, 0), Intervention::set(&fam.x, 1)];
    let back = project_2ve(&interventional_family(&model, &all)?, &fam.x, &fam.y)?;
    if back != *fam {
        return Err(Error::Internal("realized model does not reproduce the family".into()));
    }
    Ok(model)
}
