//! Minkowski points, the light-cone order, and brute-force checkers for cuts
//! and causality functions on small posets.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in the canonical units.
pub const C: f64 = 1.0;

/// Largest poset accepted by the brute-force cut enumeration.
pub const MAX_POSET: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacetimePoint {
    pub x: [f64; 3],
    pub t: f64,
}

impl SpacetimePoint {
    pub fn new(x: [f64; 3], t: f64) -> Result<Self> {
        let p = SpacetimePoint { x, t };
        p.check()?;
        Ok(p)
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().all(|c| c.is_finite()) && self.t.is_finite()
    }

    fn check(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::Input(format!("non-finite spacetime point {self}")))
        }
    }

    /// Same place, later time.
    pub fn later(&self, dt: f64) -> Self {
        SpacetimePoint { x: self.x, t: self.t + dt }
    }

    pub fn spatial_distance(&self, other: &SpacetimePoint) -> f64 {
        let d: f64 = self
            .x
            .iter()
            .zip(other.x.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        d.sqrt()
    }
}

impl fmt::Display for SpacetimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(({}, {}, {}), {})", self.x[0], self.x[1], self.x[2], self.t)
    }
}

/// `P ≺ Q`: Q lies on or inside the future light cone of P. Reflexive.
pub fn causal_precedes(p: &SpacetimePoint, q: &SpacetimePoint, c: f64) -> Result<bool> {
    p.check()?;
    q.check()?;
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Input(format!("speed of light must be positive, got {c}")));
    }
    Ok(precedes_unchecked(p, q, c))
}

/// Light-cone test without validation, for the engine's hot path.
#[inline]
pub(crate) fn precedes_unchecked(p: &SpacetimePoint, q: &SpacetimePoint, c: f64) -> bool {
    let dt = q.t - p.t;
    if dt < 0.0 {
        return false;
    }
    let d2: f64 = (0..3).map(|i| (q.x[i] - p.x[i]) * (q.x[i] - p.x[i])).sum();
    d2 <= (c * dt) * (c * dt)
}

/// Boost along the first spatial axis with velocity `v`.
pub fn lorentz_boost(p: &SpacetimePoint, v: f64, c: f64) -> Result<SpacetimePoint> {
    p.check()?;
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Input(format!("speed of light must be positive, got {c}")));
    }
    if !v.is_finite() || v.abs() >= c {
        return Err(Error::Input(format!("boost velocity {v} must satisfy |v| < c = {c}")));
    }
    let gamma = 1.0 / (1.0 - v * v / (c * c)).sqrt();
    let x1 = gamma * (p.x[0] - v * p.t);
    let t = gamma * (p.t - v * p.x[0] / (c * c));
    Ok(SpacetimePoint { x: [x1, p.x[1], p.x[2]], t })
}

/// A finite partial order on opaque labels, stored as a closed relation matrix.
#[derive(Debug, Clone)]
pub struct FinitePoset {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    leq: Vec<Vec<bool>>,
}

/// A set of poset elements, as a bitmask over element indices.
pub type Cut = u32;

impl FinitePoset {
    /// Builds the reflexive-transitive closure of `pairs` (each `(a, b)` meaning a ≤ b).
    pub fn new<S: AsRef<str>>(labels: &[S], pairs: &[(S, S)]) -> Result<Self> {
        if labels.len() > MAX_POSET {
            return Err(Error::Size(format!(
                "poset has {} elements, limit is {MAX_POSET}",
                labels.len()
            )));
        }
        let labels: Vec<String> = labels.iter().map(|s| s.as_ref().to_string()).collect();
        let mut index = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::Input(format!("duplicate poset label {l:?}")));
            }
        }
        let n = labels.len();
        let mut leq = vec![vec![false; n]; n];
        for (i, row) in leq.iter_mut().enumerate() {
            row[i] = true;
        }
        for (a, b) in pairs {
            let ia = lookup(&index, a.as_ref())?;
            let ib = lookup(&index, b.as_ref())?;
            leq[ia][ib] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if leq[i][k] {
                    for j in 0..n {
                        if leq[k][j] {
                            leq[i][j] = true;
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if leq[i][j] && leq[j][i] {
                    return Err(Error::Input(format!(
                        "relation is not antisymmetric: {} and {} precede each other",
                        labels[i], labels[j]
                    )));
                }
            }
        }
        Ok(FinitePoset { labels, index, leq })
    }

    /// The chain `l0 < l1 < ...`.
    pub fn chain<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let pairs: Vec<(&str, &str)> = labels
            .windows(2)
            .map(|w| (w[0].as_ref(), w[1].as_ref()))
            .collect();
        let labels: Vec<&str> = labels.iter().map(|s| s.as_ref()).collect();
        FinitePoset::new(&labels, &pairs)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn leq(&self, a: &str, b: &str) -> Result<bool> {
        Ok(self.leq[lookup(&self.index, a)?][lookup(&self.index, b)?])
    }

    pub fn full(&self) -> Cut {
        if self.labels.len() == 32 {
            u32::MAX
        } else {
            (1u32 << self.labels.len()) - 1
        }
    }

    /// Converts labels into a bitmask, rejecting unknown labels.
    pub fn set_of<S: AsRef<str>>(&self, items: &[S]) -> Result<Cut> {
        let mut m = 0;
        for s in items {
            m |= 1 << lookup(&self.index, s.as_ref())?;
        }
        Ok(m)
    }

    pub fn labels_of(&self, set: Cut) -> Vec<String> {
        (0..self.len())
            .filter(|i| set >> i & 1 == 1)
            .map(|i| self.labels[i].clone())
            .collect()
    }

    pub fn is_cut_mask(&self, set: Cut) -> bool {
        (0..self.len())
            .filter(|&t| set >> t & 1 == 1)
            .all(|t| (0..self.len()).all(|p| !self.leq[p][t] || set >> p & 1 == 1))
    }

    /// All downward-closed subsets, in increasing mask order.
    pub fn cuts(&self) -> Vec<Cut> {
        (0..=self.full()).filter(|&m| self.is_cut_mask(m)).collect()
    }
}

fn lookup(index: &HashMap<String, usize>, label: &str) -> Result<usize> {
    index
        .get(label)
        .copied()
        .ok_or_else(|| Error::Input(format!("unknown poset label {label:?}")))
}

/// True iff `c` is downward closed in `t`.
pub fn is_cut<S: AsRef<str>>(c: &[S], t: &FinitePoset) -> Result<bool> {
    Ok(t.is_cut_mask(t.set_of(c)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CausalityAxiom {
    /// χ(C) must itself be a cut.
    Structure,
    Union,
    Monotone,
    StrictShrink,
    Escape,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomViolation {
    pub axiom: CausalityAxiom,
    /// Cuts involved, as label lists.
    pub witness: Vec<Vec<String>>,
    /// Offending element for the escape axiom.
    pub element: Option<String>,
}

/// Checks the four causality-function axioms on every cut of `t`.
pub fn validate_causality_function<F>(chi: F, t: &FinitePoset) -> Vec<AxiomViolation>
where
    F: Fn(&BTreeSet<String>) -> BTreeSet<String>,
{
    let cuts = t.cuts();
    let to_set = |m: Cut| -> BTreeSet<String> { t.labels_of(m).into_iter().collect() };
    let mut image: HashMap<Cut, Cut> = HashMap::new();
    let mut out = Vec::new();
    for &c in &cuts {
        let img = chi(&to_set(c));
        let mut mask: Cut = 0;
        let mut unknown = false;
        for l in &img {
            match t.index.get(l) {
                Some(&i) => mask |= 1 << i,
                None => unknown = true,
            }
        }
        if unknown || !t.is_cut_mask(mask) {
            out.push(AxiomViolation {
                axiom: CausalityAxiom::Structure,
                witness: vec![t.labels_of(c), img.into_iter().collect()],
                element: None,
            });
        }
        image.insert(c, mask);
    }
    if out.iter().any(|v| v.axiom == CausalityAxiom::Structure) {
        return out;
    }
    for &c in &cuts {
        for &d in &cuts {
            let u = c | d;
            if image[&u] != image[&c] | image[&d] {
                out.push(AxiomViolation {
                    axiom: CausalityAxiom::Union,
                    witness: vec![t.labels_of(c), t.labels_of(d)],
                    element: None,
                });
            }
            if c & !d == 0 && image[&c] & !image[&d] != 0 {
                out.push(AxiomViolation {
                    axiom: CausalityAxiom::Monotone,
                    witness: vec![t.labels_of(c), t.labels_of(d)],
                    element: None,
                });
            }
        }
        if c != 0 && !(image[&c] & !c == 0 && image[&c] != c) {
            out.push(AxiomViolation {
                axiom: CausalityAxiom::StrictShrink,
                witness: vec![t.labels_of(c), t.labels_of(image[&c])],
                element: None,
            });
        }
        for e in 0..t.len() {
            let mut cur = c;
            let mut escaped = cur >> e & 1 == 0;
            for _ in 0..=t.len() + 1 {
                if escaped {
                    break;
                }
                cur = image[&cur];
                escaped = cur >> e & 1 == 0;
            }
            if !escaped {
                out.push(AxiomViolation {
                    axiom: CausalityAxiom::Escape,
                    witness: vec![t.labels_of(c)],
                    element: Some(t.labels[e].clone()),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x: [f64; 3], t: f64) -> SpacetimePoint {
        SpacetimePoint::new(x, t).unwrap()
    }

    #[test]
    fn precedence_examples() {
        assert!(causal_precedes(&pt([0.0; 3], 0.0), &pt([0.0; 3], 1.0), 1.0).unwrap());
        assert!(!causal_precedes(&pt([0.0; 3], 0.0), &pt([2.0, 0.0, 0.0], 1.0), 1.0).unwrap());
        let p = pt([1.0, 2.0, 3.0], 5.0);
        assert!(causal_precedes(&p, &p, C).unwrap());
        // light-cone boundary between the canonical party sites
        assert!(causal_precedes(&pt([0.0; 3], 0.0), &pt([1.0, 0.0, 0.0], 1.0), 1.0).unwrap());
    }

    #[test]
    fn precedence_rejects_bad_input() {
        let bad = SpacetimePoint { x: [f64::NAN, 0.0, 0.0], t: 0.0 };
        assert!(causal_precedes(&bad, &pt([0.0; 3], 1.0), 1.0).is_err());
        assert!(causal_precedes(&pt([0.0; 3], 0.0), &pt([0.0; 3], 1.0), 0.0).is_err());
        assert!(SpacetimePoint::new([0.0, f64::INFINITY, 0.0], 0.0).is_err());
    }

    #[test]
    fn boost_examples() {
        let p = pt([1.0, 0.0, 0.0], 0.0);
        let b = lorentz_boost(&p, 0.6, 1.0).unwrap();
        assert!((b.x[0] - 1.25).abs() < 1e-12);
        assert!((b.t + 0.75).abs() < 1e-12);
        assert_eq!(lorentz_boost(&p, 0.0, 1.0).unwrap(), p);
        let o = lorentz_boost(&pt([0.0; 3], 0.0), -0.9, 1.0).unwrap();
        assert_eq!(o.x[0], 0.0);
        assert_eq!(o.t, 0.0);
        assert!(lorentz_boost(&p, 1.0, 1.0).is_err());
        assert!(lorentz_boost(&p, -2.0, 1.0).is_err());
    }

    #[test]
    fn cut_examples() {
        let t = FinitePoset::chain(&["a", "b", "c"]).unwrap();
        assert!(is_cut::<&str>(&[], &t).unwrap());
        assert!(is_cut(&["a", "b", "c"], &t).unwrap());
        assert!(!is_cut(&["b"], &t).unwrap());
        assert!(is_cut(&["a", "b"], &t).unwrap());
        assert!(is_cut(&["z"], &t).is_err());
        assert_eq!(t.cuts().len(), 4);
    }

    #[test]
    fn poset_limits_and_antisymmetry() {
        let labels: Vec<String> = (0..13).map(|i| format!("e{i}")).collect();
        assert!(matches!(FinitePoset::chain(&labels), Err(Error::Size(_))));
        assert!(FinitePoset::new(&["a", "b"], &[("a", "b"), ("b", "a")]).is_err());
    }

    #[test]
    fn causality_function_examples() {
        let t = FinitePoset::new(&["a", "b", "c", "d"], &[("a", "c"), ("b", "c")]).unwrap();
        assert!(validate_causality_function(|_| BTreeSet::new(), &t).is_empty());

        let v = validate_causality_function(|c| c.clone(), &t);
        assert!(!v.is_empty());
        assert!(v.iter().all(|x| x.axiom == CausalityAxiom::StrictShrink
            || x.axiom == CausalityAxiom::Escape));
        assert!(v.iter().any(|x| x.axiom == CausalityAxiom::StrictShrink));

        let chain = FinitePoset::chain(&["a", "b", "c"]).unwrap();
        let order = ["a", "b", "c"];
        let drop_top = |c: &BTreeSet<String>| {
            let mut out = c.clone();
            if let Some(top) = order.iter().rev().find(|l| c.contains(**l)) {
                out.remove(*top);
            }
            out
        };
        assert!(validate_causality_function(drop_top, &chain).is_empty());

        // a map returning a non-cut is a structural violation
        let v = validate_causality_function(
            |c| if c.len() == 3 { ["b".to_string()].into() } else { BTreeSet::new() },
            &chain,
        );
        assert_eq!(v[0].axiom, CausalityAxiom::Structure);
    }

    fn inside_cone() -> impl Strategy<Value = ([f64; 3], f64)> {
        // a displacement with |dx| <= dt
        (0.0..10.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.0..1.0f64).prop_map(
            |(dt, a, b, c, frac)| {
                let n = (a * a + b * b + c * c).sqrt().max(1e-9);
                let r = dt * frac;
                ([a / n * r, b / n * r, c / n * r], dt)
            },
        )
    }

    proptest! {
        #[test]
        fn precedence_is_reflexive_and_transitive(
            x in prop::array::uniform3(-50.0..50.0f64), t in -50.0..50.0f64,
            d1 in inside_cone(), d2 in inside_cone(),
        ) {
            let p = pt(x, t);
            let q = pt([x[0] + d1.0[0], x[1] + d1.0[1], x[2] + d1.0[2]], t + d1.1);
            let r = pt([q.x[0] + d2.0[0], q.x[1] + d2.0[1], q.x[2] + d2.0[2]], q.t + d2.1);
            prop_assert!(causal_precedes(&p, &p, C).unwrap());
            prop_assert!(causal_precedes(&p, &q, C).unwrap());
            prop_assert!(causal_precedes(&q, &r, C).unwrap());
            prop_assert!(causal_precedes(&p, &r, C).unwrap());
        }

        #[test]
        fn boost_preserves_order(
            a in prop::array::uniform3(-10.0..10.0f64), ta in -10.0..10.0f64,
            b in prop::array::uniform3(-10.0..10.0f64), tb in -10.0..10.0f64,
            v in -0.95..0.95f64,
        ) {
            let p = pt(a, ta);
            let q = pt(b, tb);
            let before = causal_precedes(&p, &q, C).unwrap();
            // skip pairs numerically on the cone boundary
            let gap = (q.t - p.t) - p.spatial_distance(&q);
            prop_assume!(gap.abs() > 1e-6);
            let bp = lorentz_boost(&p, v, C).unwrap();
            let bq = lorentz_boost(&q, v, C).unwrap();
            prop_assert_eq!(causal_precedes(&bp, &bq, C).unwrap(), before);
        }

        #[test]
        fn union_of_cuts_is_cut(edges in prop::collection::vec((0usize..8, 0usize..8), 0..16),
                                m1 in 0u32..256, m2 in 0u32..256) {
            let labels: Vec<String> = (0..8).map(|i| format!("n{i}")).collect();
            // orient edges low -> high so the relation stays acyclic
            let pairs: Vec<(String, String)> = edges
                .iter()
                .filter(|(a, b)| a < b)
                .map(|(a, b)| (labels[*a].clone(), labels[*b].clone()))
                .collect();
            let t = FinitePoset::new(&labels, &pairs).unwrap();
            if t.is_cut_mask(m1) && t.is_cut_mask(m2) {
                prop_assert!(t.is_cut_mask(m1 | m2));
            }
        }
    }
}
