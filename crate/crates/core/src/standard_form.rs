//! Standard (response-type) form.
//!
//! Over a fixed variable order every variable `V` is driven by a
//! deterministic response map from valuations of all its predecessors to
//! `{0, 1}`. A [`ResponseAtom`] fixes one such map per variable, and a
//! [`StandardFormModel`] is a distribution over atoms: a single exogenous
//! selector picks the atom, and the atom determines everything else.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::{format_rational, Rational};
use crate::scm::{
    interventional, DistTable, Event, ExoVar, Intervention, Mechanism, ScmModel, StructuralModel,
    Unit, Valuation,
};
use crate::hierarchy::InterventionalFamily;

/// Largest order accepted by [`enumerate_atoms`].
pub const ENUMERATION_CAP: usize = 4;

/// Largest order accepted by operations producing sparse atom maps.
pub const SPARSE_CAP: usize = 10;

/// Responses of every variable, flattened: variable `i` owns the `2^i`
/// entries starting at offset `2^i - 1`, indexed by predecessor valuation
/// with the first variable as the most significant bit. The derived order
/// is lexicographic over (variable, predecessor bitstring, response bit).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ResponseAtom(Vec<u8>);

impl ResponseAtom {
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        let len = bits.len() + 1;
        if !len.is_power_of_two() || bits.iter().any(|&b| b > 1) {
            return Err(Error::malformed("response vector must have 2^n - 1 binary entries"));
        }
        Ok(ResponseAtom(bits))
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    /// Number of variables the atom covers.
    pub fn width(&self) -> usize {
        (self.0.len() + 1).trailing_zeros() as usize
    }

    /// Response of variable `var` at the predecessor valuation with index `pred`.
    pub fn response(&self, var: usize, pred: usize) -> u8 {
        self.0[(1 << var) - 1 + pred]
    }

    pub fn responses(&self, var: usize) -> &[u8] {
        &self.0[(1 << var) - 1..(1 << (var + 1)) - 1]
    }

    fn set(&mut self, var: usize, pred: usize, value: u8) {
        self.0[(1 << var) - 1 + pred] = value;
    }

    /// Deterministic solution under `fixed` (intervened positions).
    pub fn solve(&self, fixed: &[Option<u8>]) -> Valuation {
        let mut values = Vec::with_capacity(fixed.len());
        let mut pred = 0usize;
        for (v, f) in fixed.iter().enumerate() {
            let value = f.unwrap_or_else(|| self.response(v, pred));
            values.push(value);
            pred = (pred << 1) | value as usize;
        }
        Valuation(values)
    }
}

impl fmt::Display for ResponseAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = (0..self.width())
            .map(|v| self.responses(v).iter().map(|b| b.to_string()).collect())
            .collect();
        write!(f, "{}", parts.join("/"))
    }
}

/// All `2^(2^n - 1)` atoms over `n` variables, in canonical order.
pub fn enumerate_atoms(n: usize) -> Result<Vec<ResponseAtom>> {
    enumerate_atoms_capped(n, ENUMERATION_CAP)
}

pub fn enumerate_atoms_capped(n: usize, cap: usize) -> Result<Vec<ResponseAtom>> {
    if n == 0 || n > cap {
        return Err(Error::SizeCap {
            what: "atom enumeration",
            cap,
            got: n,
            reason: format!("there are 2^(2^n - 1) atoms, i.e. 2^{} for n = {n}", (1usize << n.min(63)) - 1),
        });
    }
    let len = (1usize << n) - 1;
    Ok((0..1u64 << len)
        .map(|i| ResponseAtom((0..len).map(|b| ((i >> (len - 1 - b)) & 1) as u8).collect()))
        .collect())
}

/// A distribution over response atoms for a fixed order. Only atoms with
/// positive mass are stored, in canonical order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StandardFormModel {
    order: Vec<String>,
    atoms: Vec<(ResponseAtom, Rational)>,
}

impl StandardFormModel {
    pub fn new(order: Vec<String>, atoms: impl IntoIterator<Item = (ResponseAtom, Rational)>) -> Result<Self> {
        if order.is_empty() {
            return Err(Error::malformed("standard form needs at least one variable"));
        }
        let mut map: BTreeMap<ResponseAtom, Rational> = BTreeMap::new();
        let mut total = Rational::zero();
        for (atom, p) in atoms {
            if atom.width() != order.len() {
                return Err(Error::malformed(format!("atom {atom} does not match the order")));
            }
            if p < Rational::zero() {
                return Err(Error::malformed(format!("negative mass on atom {atom}")));
            }
            total += &p;
            *map.entry(atom).or_insert_with(Rational::zero) += p;
        }
        if !total.is_one() {
            return Err(Error::malformed(format!(
                "atom masses sum to {} instead of 1",
                format_rational(&total)
            )));
        }
        Ok(StandardFormModel {
            order,
            atoms: map.into_iter().filter(|(_, p)| !p.is_zero()).collect(),
        })
    }

    pub fn order(&self) -> &[String] {
        &self.order
    }

    pub fn atoms(&self) -> &[(ResponseAtom, Rational)] {
        &self.atoms
    }

    pub fn mass(&self, atom: &ResponseAtom) -> Rational {
        self.atoms
            .binary_search_by(|(a, _)| a.cmp(atom))
            .map(|i| self.atoms[i].1.clone())
            .unwrap_or_else(|_| Rational::zero())
    }

    /// Explicit SCM encoding: one exogenous selector `U` ranging over the
    /// support atoms, every variable with all predecessors as parents.
    pub fn to_scm(&self) -> ScmModel {
        let n = self.order.len();
        let k = self.atoms.len() as u32;
        let mut mechanisms = Vec::with_capacity(n);
        for v in 0..n {
            let mut m = Mechanism::empty(v, &[k]);
            for pred in 0..1usize << v {
                let pv = Valuation::from_index(pred, v);
                for (u, (atom, _)) in self.atoms.iter().enumerate() {
                    m.set(&pv, u, atom.response(v, pred));
                }
            }
            mechanisms.push(m);
        }
        let units = self
            .atoms
            .iter()
            .enumerate()
            .map(|(u, (_, p))| Unit { assign: vec![u as u32], p: p.clone() })
            .collect();
        ScmModel::from_parts(
            self.order.clone(),
            (0..n).map(|v| (0..v).collect()).collect(),
            vec![ExoVar { name: "U".into(), range: k }],
            vec![vec![0]; n],
            units,
            mechanisms,
        )
        .expect("standard form encodes to a well-formed model")
    }
}

impl StructuralModel for StandardFormModel {
    fn variables(&self) -> &[String] {
        &self.order
    }

    fn unit_count(&self) -> usize {
        self.atoms.len()
    }

    fn unit_mass(&self, unit: usize) -> &Rational {
        &self.atoms[unit].1
    }

    fn solve(&self, unit: usize, fixed: &[Option<u8>]) -> Valuation {
        self.atoms[unit].0.solve(fixed)
    }
}

/// Response-type pushforward: each unit maps to the atom recording how
/// every variable responds to every setting of its predecessors.
pub fn canonicalize<M: StructuralModel + ?Sized>(model: &M) -> Result<StandardFormModel> {
    model.ensure_valid()?;
    let n = model.variables().len();
    if n == 0 || n > SPARSE_CAP {
        return Err(Error::SizeCap {
            what: "canonicalization",
            cap: SPARSE_CAP,
            got: n,
            reason: "atoms have 2^n - 1 response entries".into(),
        });
    }
    let mut atoms: BTreeMap<ResponseAtom, Rational> = BTreeMap::new();
    let mut fixed = vec![None; n];
    for u in 0..model.unit_count() {
        let mut bits = Vec::with_capacity((1 << n) - 1);
        for v in 0..n {
            for pred in 0..1usize << v {
                let pv = Valuation::from_index(pred, v);
                for (slot, &b) in fixed.iter_mut().zip(pv.bits()) {
                    *slot = Some(b);
                }
                for slot in fixed.iter_mut().skip(v) {
                    *slot = None;
                }
                bits.push(model.solve(u, &fixed).0[v]);
            }
        }
        *atoms.entry(ResponseAtom(bits)).or_insert_with(Rational::zero) += model.unit_mass(u);
    }
    StandardFormModel::new(model.variables().to_vec(), atoms)
}

fn constant_atom(values: &[u8]) -> ResponseAtom {
    let mut bits = Vec::with_capacity((1 << values.len()) - 1);
    for (v, &value) in values.iter().enumerate() {
        bits.extend(std::iter::repeat_n(value, 1 << v));
    }
    ResponseAtom(bits)
}

/// The acausal model of an observational table: each outcome's mass sits
/// on the atom where every variable ignores its predecessors and takes its
/// value in that outcome.
pub fn acausal_model(obs: &DistTable, order: &[String]) -> Result<StandardFormModel> {
    if obs.scope() != order {
        return Err(Error::malformed("observational table scope must equal the order"));
    }
    StandardFormModel::new(
        order.to_vec(),
        obs.cells().iter().map(|(v, p)| (constant_atom(v.bits()), p.clone())),
    )
}

/// The monotonic collapse example: the first variable's response is free,
/// every other variable responds 1 at any nonzero predecessor valuation and
/// freely at the all-zero one. The `2^n` such atoms share the mass equally.
pub fn monotonic_example(order: &[String]) -> Result<StandardFormModel> {
    let n = order.len();
    if n == 0 || n > SPARSE_CAP {
        return Err(Error::SizeCap {
            what: "monotonic example",
            cap: SPARSE_CAP,
            got: n,
            reason: "atoms have 2^n - 1 response entries".into(),
        });
    }
    let mass = Rational::new(1.into(), (1i64 << n).into());
    let atoms = (0..1usize << n).map(|free| {
        let free = Valuation::from_index(free, n);
        let mut bits = vec![1u8; (1 << n) - 1];
        for (v, &b) in free.bits().iter().enumerate() {
            bits[(1 << v) - 1] = b;
        }
        (ResponseAtom(bits), mass.clone())
    });
    StandardFormModel::new(order.to_vec(), atoms)
}

/// One conjunct of a monotonic-reduction query: `variable` takes `value`
/// when all of its predecessors are held at 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PinnedTerm {
    pub variable: String,
    pub intervention: Intervention,
    pub value: u8,
}

impl PinnedTerm {
    /// The canonical term for the variable at position `index` of `order`.
    pub fn at(order: &[String], index: usize, value: u8) -> Self {
        PinnedTerm {
            variable: order[index].clone(),
            intervention: Intervention::of(order[..index].iter().map(|v| (v.clone(), 0))),
            value,
        }
    }
}

/// An interventional probability `μ_α(event)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Level2Term {
    pub intervention: Intervention,
    pub event: Event,
}

impl fmt::Display for Level2Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P[{}]({})", self.intervention, self.event)
    }
}

/// An integer combination of Level-2 terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearCombination {
    pub terms: Vec<(i64, Level2Term)>,
}

impl LinearCombination {
    /// Value against a Level-2 family; every referenced entry must exist.
    pub fn evaluate(&self, family: &InterventionalFamily) -> Result<Rational> {
        let mut total = Rational::zero();
        for (c, term) in &self.terms {
            let table = family.get(&term.intervention).ok_or_else(|| {
                Error::precondition(format!("family lacks the {} entry", term.intervention))
            })?;
            total += Rational::from_integer((*c).into()) * table.prob_event(&term.event)?;
        }
        Ok(total)
    }

    /// Value computed directly from a model's interventional distributions.
    pub fn evaluate_model<M: StructuralModel + ?Sized>(&self, model: &M) -> Result<Rational> {
        let mut total = Rational::zero();
        for (c, term) in &self.terms {
            let p = interventional(model, &term.intervention)?.prob_event(&term.event)?;
            total += Rational::from_integer((*c).into()) * p;
        }
        Ok(total)
    }
}

impl fmt::Display for LinearCombination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (c, t)) in self.terms.iter().enumerate() {
            let sign = if *c < 0 { "-" } else if i > 0 { "+" } else { "" };
            let mag = c.abs();
            if i > 0 {
                write!(f, " ")?;
            }
            if mag == 1 {
                write!(f, "{sign}{t}")?;
            } else {
                write!(f, "{sign}{mag}*{t}")?;
            }
        }
        Ok(())
    }
}

/// Rewrites a pinned-predecessor counterfactual over the first `k`
/// variables of `order` as a combination of interventional probabilities.
///
/// Let `M` be the set of positions queried at value 1. The probability that
/// every variable outside `M'` responds 0 at the all-zero predecessor
/// setting equals `μ_{do(V_{M'} = 0)}(V_i = 0 for i ∉ M')`, and the query is
/// recovered by inclusion-exclusion over the subsets of `M`.
pub fn monotonic_reduce(query: &[PinnedTerm], order: &[String]) -> Result<LinearCombination> {
    let k = query.len();
    if k == 0 || k > order.len() {
        return Err(Error::malformed("query must cover an initial segment of the order"));
    }
    if k > 20 {
        return Err(Error::SizeCap {
            what: "monotonic reduction",
            cap: 20,
            got: k,
            reason: "the expansion has 2^k terms".into(),
        });
    }
    let mut values = vec![None; k];
    for term in query {
        let pos = order
            .iter()
            .position(|v| *v == term.variable)
            .ok_or_else(|| Error::UnknownVariable(term.variable.clone()))?;
        if pos >= k || values[pos].is_some() {
            return Err(Error::malformed(format!(
                "`{}` is repeated or outside the first {k} variables",
                term.variable
            )));
        }
        let expected = PinnedTerm::at(order, pos, term.value);
        if term.intervention != expected.intervention {
            return Err(Error::malformed(format!(
                "`{}` must be queried under {}",
                term.variable, expected.intervention
            )));
        }
        values[pos] = Some(term.value);
    }
    let ones: usize = values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v == Some(1))
        .fold(0, |acc, (i, _)| acc | 1 << i);

    // reduce(M) = L(M) - sum over proper subsets M' of reduce(M'), as
    // coefficient vectors over the base terms L(.)
    let mut memo: BTreeMap<usize, BTreeMap<usize, i64>> = BTreeMap::new();
    fn reduce(m: usize, memo: &mut BTreeMap<usize, BTreeMap<usize, i64>>) -> BTreeMap<usize, i64> {
        if let Some(hit) = memo.get(&m) {
            return hit.clone();
        }
        let mut out = BTreeMap::from([(m, 1i64)]);
        let mut sub = m;
        while sub != 0 {
            sub = (sub - 1) & m;
            for (t, c) in reduce(sub, memo) {
                *out.entry(t).or_insert(0) -= c;
            }
        }
        out.retain(|_, c| *c != 0);
        memo.insert(m, out.clone());
        out
    }
    let coeffs = reduce(ones, &mut memo);
    let base = |m: usize| Level2Term {
        intervention: Intervention::of(
            (0..k).filter(|i| m >> i & 1 == 1).map(|i| (order[i].clone(), 0)),
        ),
        event: Event::of((0..k).filter(|i| m >> i & 1 == 0).map(|i| (order[i].clone(), 0))),
    };
    let mut terms: Vec<(i64, Level2Term)> = coeffs.into_iter().map(|(m, c)| (c, base(m))).collect();
    terms.sort_by(|a, b| a.1.cmp(&b.1));
    Ok(LinearCombination { terms })
}

/// Two standard-form models with the same observational distribution but
/// different interventional behavior of the second variable under the
/// first.
///
/// `ν` is the acausal model of `obs`. With `(x*, y*)` the first positive
/// cell of the first two variables and `x† = 1 - x*`, `y† = 1 - y*`, `ν'`
/// moves the mass of outcomes with `(x*, y*)` to atoms whose second variable
/// responds `y†` at `x†`.
pub fn split_l1(obs: &DistTable, order: &[String]) -> Result<(StandardFormModel, StandardFormModel)> {
    if order.len() < 2 {
        return Err(Error::malformed("splitting needs at least two variables"));
    }
    let nu = acausal_model(obs, order)?;
    let (x_star, y_star) = split_cell(obs, order)?;
    let x_dag = 1 - x_star;
    let y_dag = 1 - y_star;
    let moved = nu.atoms.iter().map(|(atom, p)| {
        let mut atom = atom.clone();
        if atom.response(0, 0) == x_star && atom.response(1, x_star as usize) == y_star {
            atom.set(1, x_dag as usize, y_dag);
        }
        (atom, p.clone())
    });
    let nu_prime = StandardFormModel::new(order.to_vec(), moved)?;
    Ok((nu, nu_prime))
}

/// The first positive cell `(x*, y*)` of the first two variables, as used by
/// [`split_l1`].
pub fn split_cell(obs: &DistTable, order: &[String]) -> Result<(u8, u8)> {
    let marg = obs.marginal(&order[..2])?;
    let (star, _) = marg
        .cells()
        .iter()
        .next()
        .ok_or_else(|| Error::Internal("distribution without positive cells".into()))?;
    Ok((star.0[0], star.0[1]))
}
