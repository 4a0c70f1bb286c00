//! Differential forms and multivector fields on coordinate charts.
//!
//! Storage is antisymmetric-normalized: keys are strictly increasing
//! coordinate-index tuples and zero coefficients are dropped, so a tensor is
//! canonically zero iff its term map is empty.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::chart::{Chart, MAX_DIM};
use crate::expr::{Expr, ExprError};
use crate::map::SmoothMap;

/// Merges two strictly increasing index tuples; `None` on a repeated index,
/// otherwise the merged tuple and whether the permutation sign is negative.
fn merge_keys(a: &[u8], b: &[u8]) -> Option<(Vec<u8>, bool)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let mut inversions = 0usize;
    while i < a.len() && j < b.len() {
        if a[i] == b[j] {
            return None;
        }
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            inversions += a.len() - i;
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    Some((out, inversions % 2 == 1))
}

fn insert_term(map: &mut BTreeMap<Vec<u8>, Expr>, key: Vec<u8>, value: Expr) {
    if value.is_zero_expr() {
        return;
    }
    match map.remove(&key) {
        None => {
            map.insert(key, value);
        }
        Some(old) => {
            let sum = old.add(&value);
            if !sum.is_zero_expr() {
                map.insert(key, sum);
            }
        }
    }
}

fn validate_terms(
    chart: &Chart,
    degree: usize,
    terms: &BTreeMap<Vec<u8>, Expr>,
) -> Result<(), ExprError> {
    if chart.dim() > MAX_DIM {
        return Err(ExprError::Unsupported(format!(
            "chart {} exceeds the supported dimension {MAX_DIM}",
            chart.name
        )));
    }
    if degree > MAX_DIM {
        return Err(ExprError::Unsupported(format!("tensor degree {degree} too large")));
    }
    for (key, coeff) in terms {
        if key.len() != degree
            || key.windows(2).any(|w| w[0] >= w[1])
            || key.iter().any(|i| usize::from(*i) >= chart.dim())
        {
            return Err(ExprError::Unsupported(format!("bad index tuple {key:?}")));
        }
        for coord in coeff.coords() {
            if chart.index_of(&coord).is_none() {
                return Err(ExprError::Unsupported(format!(
                    "coefficient uses coordinate {coord} not on chart {}",
                    chart.name
                )));
            }
        }
    }
    Ok(())
}

macro_rules! tensor_common {
    ($T:ident) => {
        impl $T {
            pub fn zero(chart: Arc<Chart>, degree: usize) -> Self {
                $T { chart, degree, terms: BTreeMap::new() }
            }

            pub fn from_terms(
                chart: Arc<Chart>,
                degree: usize,
                terms: impl IntoIterator<Item = (Vec<u8>, Expr)>,
            ) -> Result<Self, ExprError> {
                let mut map = BTreeMap::new();
                for (k, v) in terms {
                    insert_term(&mut map, k, v);
                }
                validate_terms(&chart, degree, &map)?;
                Ok($T { chart, degree, terms: map })
            }

            /// Coefficient at a strictly increasing index tuple.
            pub fn coefficient(&self, key: &[u8]) -> Expr {
                self.terms.get(key).cloned().unwrap_or_else(Expr::zero)
            }

            /// Canonically zero: every coefficient normalized away.
            pub fn is_zero(&self) -> bool {
                self.terms.is_empty()
            }

            pub fn add(&self, other: &Self) -> Result<Self, ExprError> {
                self.check_compatible(other)?;
                let mut terms = self.terms.clone();
                for (k, v) in &other.terms {
                    insert_term(&mut terms, k.clone(), v.clone());
                }
                Ok($T { chart: self.chart.clone(), degree: self.degree, terms })
            }

            pub fn neg(&self) -> Self {
                let terms = self
                    .terms
                    .iter()
                    .map(|(k, v)| (k.clone(), v.neg()))
                    .collect();
                $T { chart: self.chart.clone(), degree: self.degree, terms }
            }

            pub fn sub(&self, other: &Self) -> Result<Self, ExprError> {
                self.add(&other.neg())
            }

            /// Multiplies every coefficient by a scalar expression.
            pub fn scale(&self, f: &Expr) -> Self {
                if f.is_zero_expr() {
                    return $T::zero(self.chart.clone(), self.degree);
                }
                let terms = self
                    .terms
                    .iter()
                    .map(|(k, v)| (k.clone(), v.mul(f)))
                    .collect();
                $T { chart: self.chart.clone(), degree: self.degree, terms }
            }

            pub fn wedge(&self, other: &Self) -> Result<Self, ExprError> {
                if self.chart != other.chart {
                    return Err(ExprError::Unsupported(
                        "wedge of tensors on different charts".into(),
                    ));
                }
                let degree = self.degree + other.degree;
                let mut terms = BTreeMap::new();
                for (ka, va) in &self.terms {
                    for (kb, vb) in &other.terms {
                        if let Some((key, negative)) = merge_keys(ka, kb) {
                            let v = va.mul(vb);
                            insert_term(&mut terms, key, if negative { v.neg() } else { v });
                        }
                    }
                }
                let out = $T { chart: self.chart.clone(), degree, terms };
                validate_terms(&out.chart, out.degree, &out.terms)?;
                Ok(out)
            }

            /// Exact equality as tensors (coefficientwise zero difference).
            pub fn equiv(&self, other: &Self) -> bool {
                self.chart == other.chart
                    && self.degree == other.degree
                    && self.sub(other).map(|d| d.is_zero()).unwrap_or(false)
            }

            fn check_compatible(&self, other: &Self) -> Result<(), ExprError> {
                if self.chart != other.chart || self.degree != other.degree {
                    return Err(ExprError::Unsupported(
                        "tensor operands differ in chart or degree".into(),
                    ));
                }
                Ok(())
            }
        }
    };
}

/// A differential form of homogeneous degree.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DiffForm {
    pub chart: Arc<Chart>,
    pub degree: usize,
    pub terms: BTreeMap<Vec<u8>, Expr>,
}

/// A multivector field of homogeneous degree.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MultiVector {
    pub chart: Arc<Chart>,
    pub degree: usize,
    pub terms: BTreeMap<Vec<u8>, Expr>,
}

tensor_common!(DiffForm);
tensor_common!(MultiVector);

impl DiffForm {
    pub fn scalar(chart: Arc<Chart>, f: Expr) -> Self {
        let mut terms = BTreeMap::new();
        insert_term(&mut terms, Vec::new(), f);
        DiffForm { chart, degree: 0, terms }
    }

    /// `dx_i` as a one-form.
    pub fn coordinate_differential(chart: Arc<Chart>, i: usize) -> Result<Self, ExprError> {
        DiffForm::from_terms(chart, 1, [(alloc::vec![i as u8], Expr::one())])
    }

    pub fn one_form(chart: Arc<Chart>, coefficients: Vec<Expr>) -> Result<Self, ExprError> {
        if coefficients.len() != chart.dim() {
            return Err(ExprError::Unsupported(format!(
                "one-form on {} needs {} coefficients",
                chart.name,
                chart.dim()
            )));
        }
        let terms = coefficients
            .into_iter()
            .enumerate()
            .map(|(i, c)| (alloc::vec![i as u8], c));
        DiffForm::from_terms(chart, 1, terms)
    }

    pub fn as_scalar(&self) -> Option<Expr> {
        if self.degree != 0 {
            return None;
        }
        Some(self.coefficient(&[]))
    }

    /// Exterior derivative.
    pub fn d(&self) -> Self {
        let mut terms = BTreeMap::new();
        for (key, coeff) in &self.terms {
            for (j, coord) in self.chart.coords.iter().enumerate() {
                let dc = coeff.differentiate(coord);
                if dc.is_zero_expr() {
                    continue;
                }
                if let Some((k, negative)) = merge_keys(&[j as u8], key) {
                    insert_term(&mut terms, k, if negative { dc.neg() } else { dc });
                }
            }
        }
        DiffForm { chart: self.chart.clone(), degree: self.degree + 1, terms }
    }

    /// Interior product with a vector field.
    pub fn contract_vector(&self, x: &MultiVector) -> Result<Self, ExprError> {
        if x.degree != 1 || x.chart != self.chart {
            return Err(ExprError::Unsupported(
                "interior product needs a vector field on the same chart".into(),
            ));
        }
        if self.degree == 0 {
            return Ok(DiffForm::zero(self.chart.clone(), 0));
        }
        let mut terms = BTreeMap::new();
        for (key, coeff) in &self.terms {
            for (pos, idx) in key.iter().enumerate() {
                let xi = x.coefficient(&[*idx]);
                if xi.is_zero_expr() {
                    continue;
                }
                let mut k = key.clone();
                k.remove(pos);
                let v = coeff.mul(&xi);
                insert_term(&mut terms, k, if pos % 2 == 1 { v.neg() } else { v });
            }
        }
        Ok(DiffForm { chart: self.chart.clone(), degree: self.degree - 1, terms })
    }

    /// Lie derivative along a vector field (Cartan's formula).
    pub fn lie(&self, x: &MultiVector) -> Result<Self, ExprError> {
        let a = self.d().contract_vector(x)?;
        if self.degree == 0 {
            return Ok(a);
        }
        let b = self.contract_vector(x)?.d();
        a.add(&b)
    }

    /// Full pairing with a multivector of the same degree.
    pub fn pair(&self, p: &MultiVector) -> Result<Expr, ExprError> {
        if p.degree != self.degree || p.chart != self.chart {
            return Err(ExprError::Unsupported(
                "pairing needs matching chart and degree".into(),
            ));
        }
        let mut acc = Expr::zero();
        for (key, coeff) in &self.terms {
            let pv = p.coefficient(key);
            if !pv.is_zero_expr() {
                acc = acc.add(&coeff.mul(&pv));
            }
        }
        Ok(acc)
    }

    /// Pullback along a map into this form's chart.
    pub fn pullback(&self, map: &SmoothMap) -> Result<Self, ExprError> {
        if map.target != self.chart {
            return Err(ExprError::Unsupported(format!(
                "pullback chart mismatch: form on {}, map into {}",
                self.chart.name, map.target.name
            )));
        }
        let jac = map.jacobian();
        // Pulled-back coordinate differentials, one per target coordinate.
        let pulled_dx: Vec<DiffForm> = jac
            .iter()
            .map(|row| {
                DiffForm::one_form(map.source.clone(), row.clone())
                    .expect("jacobian row has source arity")
            })
            .collect();
        let mut acc = DiffForm::zero(map.source.clone(), self.degree);
        for (key, coeff) in &self.terms {
            let mut piece = DiffForm::scalar(map.source.clone(), map.pull_scalar(coeff)?);
            for idx in key {
                piece = piece.wedge(&pulled_dx[usize::from(*idx)])?;
            }
            // Wedging a scalar keeps degree additive, so piece has the right
            // degree even when it collapsed to zero.
            if piece.is_zero() {
                continue;
            }
            acc = DiffForm {
                chart: acc.chart.clone(),
                degree: self.degree,
                terms: {
                    let mut t = acc.terms.clone();
                    for (k, v) in piece.terms {
                        insert_term(&mut t, k, v);
                    }
                    t
                },
            };
        }
        Ok(acc)
    }
}

impl MultiVector {
    pub fn scalar(chart: Arc<Chart>, f: Expr) -> Self {
        let mut terms = BTreeMap::new();
        insert_term(&mut terms, Vec::new(), f);
        MultiVector { chart, degree: 0, terms }
    }

    /// `∂_i` as a vector field.
    pub fn coordinate_vector(chart: Arc<Chart>, i: usize) -> Result<Self, ExprError> {
        MultiVector::from_terms(chart, 1, [(alloc::vec![i as u8], Expr::one())])
    }

    pub fn vector_field(chart: Arc<Chart>, components: Vec<Expr>) -> Result<Self, ExprError> {
        if components.len() != chart.dim() {
            return Err(ExprError::Unsupported(format!(
                "vector field on {} needs {} components",
                chart.name,
                chart.dim()
            )));
        }
        let terms = components
            .into_iter()
            .enumerate()
            .map(|(i, c)| (alloc::vec![i as u8], c));
        MultiVector::from_terms(chart, 1, terms)
    }

    /// Components of a vector field (degree-1 multivector).
    pub fn components(&self) -> Vec<Expr> {
        debug_assert_eq!(self.degree, 1);
        (0..self.chart.dim())
            .map(|i| self.coefficient(&[i as u8]))
            .collect()
    }

    /// Left derivative with respect to the odd generator `ξ_j`.
    fn xi_derivative(&self, j: u8) -> Self {
        let mut terms = BTreeMap::new();
        for (key, coeff) in &self.terms {
            if let Some(pos) = key.iter().position(|k| *k == j) {
                let mut k = key.clone();
                k.remove(pos);
                let v = if pos % 2 == 1 { coeff.neg() } else { coeff.clone() };
                insert_term(&mut terms, k, v);
            }
        }
        MultiVector { chart: self.chart.clone(), degree: self.degree.saturating_sub(1), terms }
    }

    /// Coefficientwise partial derivative with respect to coordinate `j`.
    fn x_derivative(&self, j: usize) -> Self {
        let coord = &self.chart.coords[j];
        let mut terms = BTreeMap::new();
        for (key, coeff) in &self.terms {
            insert_term(&mut terms, key.clone(), coeff.differentiate(coord));
        }
        MultiVector { chart: self.chart.clone(), degree: self.degree, terms }
    }

    /// Schouten bracket. On vector fields it is the Lie bracket; in general
    /// it is the graded bracket with `[P,Q] = -(-1)^{(p-1)(q-1)} [Q,P]`.
    pub fn schouten(&self, other: &Self) -> Result<Self, ExprError> {
        if self.chart != other.chart {
            return Err(ExprError::Unsupported(
                "bracket of multivectors on different charts".into(),
            ));
        }
        let (p, q) = (self.degree, other.degree);
        let degree = (p + q).saturating_sub(1);
        let mut acc = MultiVector::zero(self.chart.clone(), degree);
        let sign1_neg = ((p + 1) * q) % 2 == 1;
        let sign2_neg = q % 2 == 1;
        for j in 0..self.chart.dim() {
            let a = self.xi_derivative(j as u8).wedge(&other.x_derivative(j))?;
            let a = if sign1_neg { a.neg() } else { a };
            acc = acc.add(&a)?;
            let b = other.xi_derivative(j as u8).wedge(&self.x_derivative(j))?;
            let b = if sign2_neg { b.neg() } else { b };
            acc = acc.add(&b)?;
        }
        Ok(acc)
    }

    /// Lie derivative along a vector field, as the bracket `[X, self]`.
    pub fn lie_by(&self, x: &MultiVector) -> Result<Self, ExprError> {
        if x.degree != 1 {
            return Err(ExprError::Unsupported("Lie derivative needs a vector field".into()));
        }
        x.schouten(self)
    }

    /// Musical map of a bivector: `sharp(α)^j = Σ_i α_i Λ^{ij}`.
    pub fn sharp(&self, alpha: &DiffForm) -> Result<MultiVector, ExprError> {
        if self.degree != 2 || alpha.degree != 1 || self.chart != alpha.chart {
            return Err(ExprError::Unsupported(
                "sharp needs a bivector and a one-form on one chart".into(),
            ));
        }
        let mut comps = alloc::vec![Expr::zero(); self.chart.dim()];
        for (key, lam) in &self.terms {
            let (a, b) = (usize::from(key[0]), usize::from(key[1]));
            let alpha_a = alpha.coefficient(&[key[0]]);
            let alpha_b = alpha.coefficient(&[key[1]]);
            // Λ^{ab} = lam and Λ^{ba} = -lam.
            comps[b] = comps[b].add(&alpha_a.mul(lam));
            comps[a] = comps[a].sub(&alpha_b.mul(lam));
        }
        MultiVector::vector_field(self.chart.clone(), comps)
    }

    /// Evaluates the multivector on one-forms (degree many of them).
    pub fn apply(&self, forms: &[DiffForm]) -> Result<Expr, ExprError> {
        if forms.len() != self.degree {
            return Err(ExprError::Unsupported("wrong number of arguments".into()));
        }
        let mut wedge = DiffForm::scalar(self.chart.clone(), Expr::one());
        for f in forms {
            wedge = wedge.wedge(f)?;
        }
        wedge.pair(self)
    }

    /// Residuals of `φ`-relatedness, one per target index tuple: the
    /// pushforward coefficient minus the target coefficient composed with φ.
    pub fn related_along(
        &self,
        map: &SmoothMap,
        target: &MultiVector,
    ) -> Result<Vec<(String, Expr)>, ExprError> {
        if self.chart != map.source || target.chart != map.target {
            return Err(ExprError::Unsupported("relatedness chart mismatch".into()));
        }
        if self.degree != target.degree {
            return Err(ExprError::Unsupported("relatedness degree mismatch".into()));
        }
        let jac = map.jacobian();
        let tdim = map.target.dim();
        let keys = increasing_tuples(tdim, self.degree);
        let mut out = Vec::new();
        for jkey in keys {
            // (φ_* P)^J = Σ_I P^I det(∂φ^{J}/∂x^{I})
            let mut lhs = Expr::zero();
            for (ikey, coeff) in &self.terms {
                let minor: Vec<Vec<Expr>> = jkey
                    .iter()
                    .map(|j| {
                        ikey.iter()
                            .map(|i| jac[usize::from(*j)][usize::from(*i)].clone())
                            .collect()
                    })
                    .collect();
                let d = crate::linalg::det(&minor);
                if !d.is_zero_expr() {
                    lhs = lhs.add(&coeff.mul(&d));
                }
            }
            let rhs = map.pull_scalar(&target.coefficient(&jkey))?;
            let label = format!("component {:?}", jkey);
            out.push((label, lhs.sub(&rhs)));
        }
        Ok(out)
    }
}

/// All strictly increasing index tuples of the given length.
pub fn increasing_tuples(dim: usize, len: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur: Vec<u8> = Vec::new();
    fn rec(dim: usize, len: usize, start: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for i in start..dim {
            cur.push(i as u8);
            rec(dim, len, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(dim, len, 0, &mut cur, &mut out);
    out
}

/// Scales by a rational constant (used for convention signs).
impl DiffForm {
    pub fn scale_rat(&self, n: i64, d: i64) -> Self {
        self.scale(&Expr::from_rat(crate::rat(n, d)))
    }
}

impl MultiVector {
    pub fn scale_rat(&self, n: i64, d: i64) -> Self {
        self.scale(&Expr::from_rat(crate::rat(n, d)))
    }
}

/// Sum of `f_i dx_i` over weighted index pairs, used by tests and builders.
pub fn two_form(
    chart: &Arc<Chart>,
    entries: &[(usize, usize, Expr)],
) -> Result<DiffForm, ExprError> {
    let mut terms: Vec<(Vec<u8>, Expr)> = Vec::new();
    for (i, j, c) in entries {
        if i == j {
            return Err(ExprError::Unsupported("diagonal two-form entry".into()));
        }
        if i < j {
            terms.push((alloc::vec![*i as u8, *j as u8], c.clone()));
        } else {
            terms.push((alloc::vec![*j as u8, *i as u8], c.neg()));
        }
    }
    DiffForm::from_terms(chart.clone(), 2, terms)
}

/// Bivector from upper-triangle entries `(i, j, Λ^{ij})`.
pub fn bivector(
    chart: &Arc<Chart>,
    entries: &[(usize, usize, Expr)],
) -> Result<MultiVector, ExprError> {
    let mut terms: Vec<(Vec<u8>, Expr)> = Vec::new();
    for (i, j, c) in entries {
        if i == j {
            return Err(ExprError::Unsupported("diagonal bivector entry".into()));
        }
        if i < j {
            terms.push((alloc::vec![*i as u8, *j as u8], c.clone()));
        } else {
            terms.push((alloc::vec![*j as u8, *i as u8], c.neg()));
        }
    }
    MultiVector::from_terms(chart.clone(), 2, terms)
}
