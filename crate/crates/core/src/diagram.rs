//! Combinatorial diagrams of generalized eights.
//!
//! A diagram is the multicurve `β` obtained by opening every self-intersection
//! of a loop, together with the bars `B_1..B_r` recording the openings. Each
//! `β`-component is an oriented circle carrying a cyclic list of bar
//! endpoints. From this data we derive the permutation `σ` on
//! `Θ = {1..r} × {±}`, the supports `Θ_t(λ)` and the signature of the filled
//! surface (by counting boundary cycles of the thickened ribbon graph).
//!
//! Only the orientation-respecting opening is modelled, so a bar always
//! leaves its origin to the left of `β` and reaches its terminus from the
//! right.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiagramError {
    #[error("diagram has r = 0 but is not a single bare component (simple loop)")]
    BadSimpleLoop,
    #[error("component {0:?} carries no bar endpoints")]
    IsolatedComponent(String),
    #[error("duplicate component id {0:?}")]
    DuplicateComponent(String),
    #[error("bar index {bar} out of range 1..={r}")]
    BarOutOfRange { bar: usize, r: usize },
    #[error("bar {bar}: missing {role} endpoint")]
    MissingEndpoint { bar: usize, role: Role },
    #[error("bar {bar}: {role} endpoint recorded {count} times")]
    RepeatedEndpoint { bar: usize, role: Role, count: usize },
    #[error("bar {bar}: {role} endpoint on the {side} side violates the opening orientation rule")]
    OrientationRule { bar: usize, role: Role, side: Side },
    #[error("sign imbalance: label {label} listed {count} times")]
    SignImbalance { label: ThetaLabel, count: usize },
    #[error("broken cycle: σ({from}) is {given} in the input but {derived} from the attachments")]
    BrokenCycle {
        from: ThetaLabel,
        given: ThetaLabel,
        derived: ThetaLabel,
    },
    #[error("sign of {label} recorded as {given}, expected {expected}")]
    SignMismatch {
        label: ThetaLabel,
        given: Sign,
        expected: Sign,
    },
    #[error("ribbon graph has {boundaries} boundary cycles with r = {r}: genus is not integral")]
    NonIntegralGenus { r: usize, boundaries: usize },
    #[error("unknown component id {0:?}")]
    UnknownComponent(String),
    #[error("label {0} is not in Θ")]
    UnknownLabel(ThetaLabel),
    #[error("cannot parse label {0:?}")]
    BadLabel(String),
    #[error("invalid diagram document: {0}")]
    Parse(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// Element `(j, ±)` of `Θ`; bars are numbered from 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ThetaLabel {
    pub bar: usize,
    pub sign: Sign,
}

impl ThetaLabel {
    pub fn new(bar: usize, sign: Sign) -> Self {
        Self { bar, sign }
    }

    pub fn plus(bar: usize) -> Self {
        Self::new(bar, Sign::Plus)
    }

    pub fn minus(bar: usize) -> Self {
        Self::new(bar, Sign::Minus)
    }

    /// Index in `0..2r`: `(j,+) ↦ 2(j−1)`, `(j,−) ↦ 2(j−1)+1`.
    pub fn index(&self) -> usize {
        2 * (self.bar - 1) + usize::from(self.sign == Sign::Minus)
    }

    pub fn from_index(i: usize) -> Self {
        let sign = if i & 1 == 0 { Sign::Plus } else { Sign::Minus };
        Self::new(i / 2 + 1, sign)
    }
}

impl fmt::Display for ThetaLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.bar, self.sign)
    }
}

impl FromStr for ThetaLabel {
    type Err = DiagramError;

    /// Accepts `"3+"`, `"3-"` and `"(3,+)"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t: String = s.chars().filter(|c| !"() ,".contains(*c)).collect();
        let bad = || DiagramError::BadLabel(s.to_string());
        let sign = match t.chars().last().ok_or_else(bad)? {
            '+' => Sign::Plus,
            '-' => Sign::Minus,
            _ => return Err(bad()),
        };
        let bar: usize = t[..t.len() - 1].parse().map_err(|_| bad())?;
        if bar == 0 {
            return Err(bad());
        }
        Ok(Self::new(bar, sign))
    }
}

impl Serialize for ThetaLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}{}", self.bar, self.sign))
    }
}

impl<'de> Deserialize<'de> for ThetaLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Origin,
    Terminus,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Origin => "origin",
            Role::Terminus => "terminus",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Endpoint {
    pub bar: usize,
    pub role: Role,
    pub side: Side,
}

impl Endpoint {
    pub fn origin(bar: usize) -> Self {
        Self {
            bar,
            role: Role::Origin,
            side: Side::Left,
        }
    }

    pub fn terminus(bar: usize) -> Self {
        Self {
            bar,
            role: Role::Terminus,
            side: Side::Right,
        }
    }

    /// The label of the bar leaving `β` at this endpoint.
    fn departing(&self) -> ThetaLabel {
        match self.role {
            Role::Origin => ThetaLabel::plus(self.bar),
            Role::Terminus => ThetaLabel::minus(self.bar),
        }
    }
}

/// One oriented circle of `β`; `attachments` are listed in the order met
/// when travelling along the circle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub id: String,
    pub attachments: Vec<Endpoint>,
}

/// Raw diagram record, as read from a file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagram {
    pub r: usize,
    pub components: Vec<Component>,
    /// Optional σ in cycle notation; checked against the attachments.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sigma: Vec<Vec<ThetaLabel>>,
    /// Optional sign record; checked against the labels.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub signs: BTreeMap<ThetaLabel, Sign>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FillingSignature {
    pub g: u32,
    pub n: u32,
}

impl FillingSignature {
    pub fn new(g: u32, n: u32) -> Self {
        Self { g, n }
    }

    /// `2g − 2 + n`.
    pub fn euler_abs(&self) -> i64 {
        2 * self.g as i64 - 2 + self.n as i64
    }
}

impl fmt::Display for FillingSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.g, self.n)
    }
}

/// A diagram that passed [`Diagram::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidDiagram {
    raw: Diagram,
    /// σ as an array indexed by [`ThetaLabel::index`].
    sigma: Vec<usize>,
    /// Component index on which each label's bar terminates.
    terminates_on: Vec<usize>,
    signature: FillingSignature,
}

impl Diagram {
    pub fn from_json(text: &str) -> Result<Self, DiagramError> {
        serde_json::from_str(text).map_err(|e| DiagramError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("diagram serializes")
    }

    pub fn validate(self) -> Result<ValidDiagram, DiagramError> {
        if self.r == 0 {
            let bare = self.components.len() == 1 && self.components[0].attachments.is_empty();
            if !bare {
                return Err(DiagramError::BadSimpleLoop);
            }
            return Ok(ValidDiagram {
                raw: self,
                sigma: vec![],
                terminates_on: vec![],
                signature: FillingSignature::new(0, 2),
            });
        }
        let r = self.r;
        let mut ids = BTreeSet::new();
        // where[label index] = (component, position) of the endpoint the bar departs from
        let mut origin_at = vec![Vec::new(); r];
        let mut terminus_at = vec![Vec::new(); r];
        for (ci, c) in self.components.iter().enumerate() {
            if !ids.insert(c.id.clone()) {
                return Err(DiagramError::DuplicateComponent(c.id.clone()));
            }
            if c.attachments.is_empty() {
                return Err(DiagramError::IsolatedComponent(c.id.clone()));
            }
            for (pi, e) in c.attachments.iter().enumerate() {
                if e.bar == 0 || e.bar > r {
                    return Err(DiagramError::BarOutOfRange { bar: e.bar, r });
                }
                let expected_side = match e.role {
                    Role::Origin => Side::Left,
                    Role::Terminus => Side::Right,
                };
                if e.side != expected_side {
                    return Err(DiagramError::OrientationRule {
                        bar: e.bar,
                        role: e.role,
                        side: e.side,
                    });
                }
                match e.role {
                    Role::Origin => origin_at[e.bar - 1].push((ci, pi)),
                    Role::Terminus => terminus_at[e.bar - 1].push((ci, pi)),
                }
            }
        }
        for j in 0..r {
            for (role, at) in [(Role::Origin, &origin_at[j]), (Role::Terminus, &terminus_at[j])] {
                match at.len() {
                    1 => {}
                    0 => return Err(DiagramError::MissingEndpoint { bar: j + 1, role }),
                    count => {
                        return Err(DiagramError::RepeatedEndpoint {
                            bar: j + 1,
                            role,
                            count,
                        })
                    }
                }
            }
        }

        // B_q ends at the terminus for q = (j,+) and at the origin for (j,−);
        // the simple portion I_q runs from there to the next endpoint, where
        // the bar σq departs.
        let mut sigma = vec![0usize; 2 * r];
        let mut terminates_on = vec![0usize; 2 * r];
        for j in 0..r {
            for (label, (ci, pi)) in [
                (ThetaLabel::plus(j + 1), terminus_at[j][0]),
                (ThetaLabel::minus(j + 1), origin_at[j][0]),
            ] {
                let atts = &self.components[ci].attachments;
                let next = &atts[(pi + 1) % atts.len()];
                sigma[label.index()] = next.departing().index();
                terminates_on[label.index()] = ci;
            }
        }

        self.check_sigma_record(&sigma)?;
        for (label, sign) in &self.signs {
            if label.bar == 0 || label.bar > r {
                return Err(DiagramError::UnknownLabel(*label));
            }
            if *sign != label.sign {
                return Err(DiagramError::SignMismatch {
                    label: *label,
                    given: *sign,
                    expected: label.sign,
                });
            }
        }

        let boundaries = count_boundary_cycles(&self.components);
        let twice_genus = r as i64 + 2 - boundaries as i64;
        if twice_genus < 0 || twice_genus % 2 != 0 {
            return Err(DiagramError::NonIntegralGenus { r, boundaries });
        }
        let signature = FillingSignature::new((twice_genus / 2) as u32, boundaries as u32);
        Ok(ValidDiagram {
            raw: self,
            sigma,
            terminates_on,
            signature,
        })
    }

    fn check_sigma_record(&self, derived: &[usize]) -> Result<(), DiagramError> {
        if self.sigma.is_empty() {
            return Ok(());
        }
        let mut seen: BTreeMap<ThetaLabel, usize> = BTreeMap::new();
        for cycle in &self.sigma {
            for label in cycle {
                if label.bar == 0 || label.bar > self.r {
                    return Err(DiagramError::UnknownLabel(*label));
                }
                *seen.entry(*label).or_default() += 1;
            }
        }
        for (label, count) in &seen {
            if *count != 1 {
                return Err(DiagramError::SignImbalance {
                    label: *label,
                    count: *count,
                });
            }
        }
        for i in 0..2 * self.r {
            let label = ThetaLabel::from_index(i);
            if !seen.contains_key(&label) {
                return Err(DiagramError::SignImbalance { label, count: 0 });
            }
        }
        for cycle in &self.sigma {
            for (k, from) in cycle.iter().enumerate() {
                let given = cycle[(k + 1) % cycle.len()];
                let derived = ThetaLabel::from_index(derived[from.index()]);
                if given != derived {
                    return Err(DiagramError::BrokenCycle {
                        from: *from,
                        given,
                        derived,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Counts boundary cycles of the ribbon graph `β ∪ B`.
///
/// Every endpoint is a trivalent vertex with darts `out` (arc leaving along
/// `β`), `bar` and `in` (arc arriving). Counter-clockwise order is
/// `out, bar, in` when the bar sits on the left of `β` and `out, in, bar`
/// when it sits on the right. Boundary cycles are the orbits of
/// `rotation ∘ edge-involution`.
fn count_boundary_cycles(components: &[Component]) -> usize {
    const OUT: usize = 0;
    const BAR: usize = 1;
    const IN: usize = 2;
    let mut offsets = Vec::with_capacity(components.len());
    let mut total = 0;
    for c in components {
        offsets.push(total);
        total += c.attachments.len();
    }
    let dart = |v: usize, k: usize| 3 * v + k;
    let mut involution = vec![usize::MAX; 3 * total];
    let mut rotation = vec![usize::MAX; 3 * total];
    let mut bar_darts: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (ci, c) in components.iter().enumerate() {
        let len = c.attachments.len();
        for (pi, e) in c.attachments.iter().enumerate() {
            let v = offsets[ci] + pi;
            let next = offsets[ci] + (pi + 1) % len;
            involution[dart(v, OUT)] = dart(next, IN);
            involution[dart(next, IN)] = dart(v, OUT);
            bar_darts.entry(e.bar).or_default().push(dart(v, BAR));
            let order = match e.side {
                Side::Left => [OUT, BAR, IN],
                Side::Right => [OUT, IN, BAR],
            };
            for k in 0..3 {
                rotation[dart(v, order[k])] = dart(v, order[(k + 1) % 3]);
            }
        }
    }
    for darts in bar_darts.values() {
        involution[darts[0]] = darts[1];
        involution[darts[1]] = darts[0];
    }
    let mut seen = vec![false; 3 * total];
    let mut cycles = 0;
    for start in 0..3 * total {
        if seen[start] {
            continue;
        }
        cycles += 1;
        let mut d = start;
        while !seen[d] {
            seen[d] = true;
            d = rotation[involution[d]];
        }
    }
    cycles
}

impl ValidDiagram {
    pub fn r(&self) -> usize {
        self.raw.r
    }

    pub fn raw(&self) -> &Diagram {
        &self.raw
    }

    pub fn components(&self) -> &[Component] {
        &self.raw.components
    }

    pub fn component_ids(&self) -> impl Iterator<Item = &str> {
        self.raw.components.iter().map(|c| c.id.as_str())
    }

    pub fn sigma(&self, q: ThetaLabel) -> ThetaLabel {
        ThetaLabel::from_index(self.sigma[q.index()])
    }

    /// The cycles of `σ`, each starting from its smallest label. A loop
    /// has one cycle; a multi-loop has one per component.
    pub fn sigma_cycles(&self) -> Vec<Vec<ThetaLabel>> {
        let mut seen = vec![false; self.sigma.len()];
        let mut cycles = Vec::new();
        for start in 0..self.sigma.len() {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                cycle.push(ThetaLabel::from_index(i));
                i = self.sigma[i];
            }
            cycles.push(cycle);
        }
        cycles
    }

    pub fn is_single_loop(&self) -> bool {
        self.sigma_cycles().len() == 1
    }

    /// Traversal order `q0, σq0, σ²q0, …` around the loop through `q0`.
    /// For a single loop this lists all `2r` labels, each bar twice.
    pub fn relabel(&self, q0: ThetaLabel) -> Result<Vec<ThetaLabel>, DiagramError> {
        if q0.bar == 0 || q0.bar > self.r() {
            return Err(DiagramError::UnknownLabel(q0));
        }
        let mut out = vec![q0];
        let mut q = self.sigma(q0);
        while q != q0 {
            out.push(q);
            q = self.sigma(q);
        }
        Ok(out)
    }

    pub fn filling_signature(&self) -> FillingSignature {
        self.signature
    }

    fn component_index(&self, id: &str) -> Result<usize, DiagramError> {
        self.raw
            .components
            .iter()
            .position(|c| c.id == id)
            .ok_or_else(|| DiagramError::UnknownComponent(id.to_string()))
    }

    /// `Θ_t(λ)`: labels whose bar terminates on component `id`.
    pub fn theta_support(&self, id: &str) -> Result<Vec<ThetaLabel>, DiagramError> {
        let ci = self.component_index(id)?;
        Ok((0..self.terminates_on.len())
            .filter(|&i| self.terminates_on[i] == ci)
            .map(ThetaLabel::from_index)
            .collect())
    }

    /// Component index on which `B_q` terminates.
    pub fn terminal_component(&self, q: ThetaLabel) -> usize {
        self.terminates_on[q.index()]
    }
}

/// Hand-encoded diagrams used throughout the tests and the CLI.
pub mod examples {
    use super::*;

    fn comp(id: &str, attachments: Vec<Endpoint>) -> Component {
        Component {
            id: id.to_string(),
            attachments,
        }
    }

    fn build(r: usize, components: Vec<Component>) -> ValidDiagram {
        Diagram {
            r,
            components,
            sigma: vec![],
            signs: BTreeMap::new(),
        }
        .validate()
        .expect("example diagram is valid")
    }

    /// One bar joining two lobes; fills a pair of pants. The bar leaves
    /// `lobe1` and lands on `lobe2`.
    pub fn figure_eight() -> ValidDiagram {
        build(
            1,
            vec![
                comp("lobe1", vec![Endpoint::origin(1)]),
                comp("lobe2", vec![Endpoint::terminus(1)]),
            ],
        )
    }

    /// Two simple loops meeting once. Opening the crossing merges them into a
    /// single circle with one bar running from its left to its right side;
    /// `σ` has two fixed points, one per loop.
    pub fn once_holed_torus() -> ValidDiagram {
        build(1, vec![comp("beta", vec![Endpoint::origin(1), Endpoint::terminus(1)])])
    }

    /// Three bars with `σ = ((1,+) (2,−) (2,+) (3,−) (3,+) (1,−))`.
    pub fn three_bar() -> ValidDiagram {
        star(3)
    }

    /// `r` bars, each leaving its own circle `o_j` and landing in order on a
    /// shared circle `hub`. Fills a sphere with `r + 2` holes; for `r = 3`
    /// this is [`three_bar`].
    pub fn star(r: usize) -> ValidDiagram {
        let mut components: Vec<Component> = (1..=r)
            .map(|j| comp(&format!("o{j}"), vec![Endpoint::origin(j)]))
            .collect();
        components.push(comp("hub", (1..=r).map(Endpoint::terminus).collect()));
        build(r, components)
    }

    /// A single circle met in the order `O1 O2 T1 T2`: one loop with two
    /// self-intersections filling a twice-holed torus.
    pub fn interleaved_pair() -> ValidDiagram {
        build(
            2,
            vec![comp(
                "beta",
                vec![
                    Endpoint::origin(1),
                    Endpoint::origin(2),
                    Endpoint::terminus(1),
                    Endpoint::terminus(2),
                ],
            )],
        )
    }

    /// Four bars met along one circle in the order `O1 O2 T1 T2 O3 T4 T3 O4`:
    /// a single loop filling a genus-two surface with two holes.
    pub fn four_bar() -> ValidDiagram {
        build(
            4,
            vec![comp(
                "beta",
                vec![
                    Endpoint::origin(1),
                    Endpoint::origin(2),
                    Endpoint::terminus(1),
                    Endpoint::terminus(2),
                    Endpoint::origin(3),
                    Endpoint::terminus(4),
                    Endpoint::terminus(3),
                    Endpoint::origin(4),
                ],
            )],
        )
    }

    /// A simple closed curve: no bars, fills a cylinder.
    pub fn simple_loop() -> ValidDiagram {
        build(0, vec![comp("beta", vec![])])
    }

    /// Looks up a named example.
    pub fn by_name(name: &str) -> Option<ValidDiagram> {
        Some(match name {
            "figure-eight" => figure_eight(),
            "once-holed-torus" => once_holed_torus(),
            "three-bar" => three_bar(),
            "interleaved-pair" => interleaved_pair(),
            "four-bar" => four_bar(),
            "simple" => simple_loop(),
            _ => return None,
        })
    }

    pub const NAMES: [&str; 6] = [
        "figure-eight",
        "once-holed-torus",
        "three-bar",
        "interleaved-pair",
        "four-bar",
        "simple",
    ];
}

#[cfg(test)]
mod tests {
    use super::examples::*;
    use super::*;
    use proptest::prelude::*;

    fn labels(s: &[&str]) -> Vec<ThetaLabel> {
        s.iter().map(|x| x.parse().unwrap()).collect()
    }

    #[test]
    fn figure_eight_is_a_pair_of_pants() {
        let d = figure_eight();
        assert_eq!(d.filling_signature(), FillingSignature::new(0, 3));
        assert_eq!(d.relabel(ThetaLabel::plus(1)).unwrap(), labels(&["1+", "1-"]));
        assert_eq!(d.theta_support("lobe1").unwrap(), labels(&["1-"]));
        assert_eq!(d.theta_support("lobe2").unwrap(), labels(&["1+"]));
    }

    #[test]
    fn once_holed_torus_signature() {
        let d = once_holed_torus();
        assert_eq!(d.filling_signature(), FillingSignature::new(1, 1));
        assert_eq!(d.sigma_cycles().len(), 2);
    }

    #[test]
    fn simple_loop_fills_cylinder() {
        assert_eq!(simple_loop().filling_signature(), FillingSignature::new(0, 2));
    }

    #[test]
    fn three_bar_sigma_matches_published_cycle() {
        let d = three_bar();
        let cycle = d.relabel(ThetaLabel::plus(1)).unwrap();
        assert_eq!(cycle, labels(&["1+", "2-", "2+", "3-", "3+", "1-"]));
        assert_eq!(d.filling_signature(), FillingSignature::new(0, 5));
        let total: usize = d.component_ids().map(|id| d.theta_support(id).unwrap().len()).sum();
        assert_eq!(total, 6);
    }

    #[test]
    fn larger_examples() {
        let d = interleaved_pair();
        assert!(d.is_single_loop());
        assert_eq!(d.filling_signature(), FillingSignature::new(1, 2));
        let d = four_bar();
        assert!(d.is_single_loop());
        assert_eq!(d.filling_signature(), FillingSignature::new(2, 2));
        for r in 1..7 {
            let d = star(r);
            assert!(d.is_single_loop());
            assert_eq!(d.filling_signature(), FillingSignature::new(0, r as u32 + 2));
        }
    }

    #[test]
    fn relabel_is_cyclically_equivariant() {
        for d in [three_bar(), four_bar(), interleaved_pair()] {
            let base = d.relabel(ThetaLabel::plus(1)).unwrap();
            for shift in 0..base.len() {
                let shifted = d.relabel(base[shift]).unwrap();
                let mut expected = base.clone();
                expected.rotate_left(shift);
                assert_eq!(shifted, expected);
            }
        }
    }

    #[test]
    fn supports_partition_theta() {
        for name in NAMES {
            let d = by_name(name).unwrap();
            let mut all: Vec<ThetaLabel> = d.component_ids().flat_map(|id| d.theta_support(id).unwrap()).collect();
            all.sort();
            let expected: Vec<ThetaLabel> = (0..2 * d.r()).map(ThetaLabel::from_index).collect();
            assert_eq!(all, expected, "{name}");
        }
    }

    #[test]
    fn each_bar_traversed_twice() {
        for d in [three_bar(), four_bar(), interleaved_pair(), star(5)] {
            let order = d.relabel(ThetaLabel::plus(1)).unwrap();
            assert_eq!(order.len(), 2 * d.r());
            for j in 1..=d.r() {
                assert_eq!(order.iter().filter(|q| q.bar == j).count(), 2);
            }
        }
    }

    #[test]
    fn rejections() {
        let mut raw = three_bar().raw().clone();
        raw.components[3].attachments[1] = Endpoint::terminus(1);
        assert!(matches!(
            raw.validate(),
            Err(DiagramError::RepeatedEndpoint {
                bar: 1,
                role: Role::Terminus,
                count: 2
            })
        ));

        let mut raw = figure_eight().raw().clone();
        raw.components[1].attachments.clear();
        assert_eq!(raw.validate(), Err(DiagramError::IsolatedComponent("lobe2".into())));

        let mut raw = figure_eight().raw().clone();
        raw.components[0].attachments[0].side = Side::Right;
        assert!(matches!(
            raw.validate(),
            Err(DiagramError::OrientationRule { bar: 1, .. })
        ));

        // sigma record listing (1,+) twice: sign imbalance
        let mut raw = figure_eight().raw().clone();
        raw.sigma = vec![labels(&["1+", "1+"])];
        assert!(matches!(
            raw.validate(),
            Err(DiagramError::SignImbalance { label, count: 2 }) if label == ThetaLabel::plus(1)
        ));

        let mut raw = three_bar().raw().clone();
        raw.sigma = vec![labels(&["1+", "2+", "2-", "3-", "3+", "1-"])];
        assert!(matches!(raw.validate(), Err(DiagramError::BrokenCycle { .. })));

        let mut raw = three_bar().raw().clone();
        raw.sigma = vec![labels(&["1+", "2-", "2+", "3-", "3+", "1-"])];
        assert!(raw.validate().is_ok());
    }

    #[test]
    fn json_round_trip() {
        let raw = four_bar().raw().clone();
        let back = Diagram::from_json(&raw.to_json()).unwrap();
        assert_eq!(back, raw);
        let text = r#"{"r":1,"components":[
            {"id":"a","attachments":[{"bar":1,"role":"origin","side":"left"}]},
            {"id":"b","attachments":[{"bar":1,"role":"terminus","side":"right"}]}],
            "sigma":[["1+","1-"]],"signs":{"1+":"+","1-":"-"}}"#;
        let d = Diagram::from_json(text).unwrap().validate().unwrap();
        assert_eq!(d.filling_signature(), FillingSignature::new(0, 3));
    }

    /// Random single-circle-per-bar-endpoint diagrams: attach 2r endpoints
    /// to k circles in a random order.
    fn random_diagram() -> impl Strategy<Value = Diagram> {
        (1usize..6, 1usize..4).prop_flat_map(|(r, k)| {
            let endpoints: Vec<Endpoint> = (1..=r)
                .flat_map(|j| [Endpoint::origin(j), Endpoint::terminus(j)])
                .collect();
            (
                Just(r),
                Just(endpoints).prop_shuffle(),
                prop::collection::vec(0..k, 2 * r),
            )
                .prop_map(|(r, eps, slots)| {
                    let k = slots.iter().max().unwrap() + 1;
                    let mut components: Vec<Component> = (0..k)
                        .map(|i| Component {
                            id: format!("c{i}"),
                            attachments: vec![],
                        })
                        .collect();
                    for (e, s) in eps.into_iter().zip(slots) {
                        components[s].attachments.push(e);
                    }
                    components.retain(|c| !c.attachments.is_empty());
                    Diagram {
                        r,
                        components,
                        sigma: vec![],
                        signs: BTreeMap::new(),
                    }
                })
        })
    }

    proptest! {
        #[test]
        fn euler_consistency(raw in random_diagram()) {
            let d = raw.validate().unwrap();
            let sig = d.filling_signature();
            prop_assert_eq!(sig.euler_abs(), d.r() as i64);
        }

        #[test]
        fn sigma_is_a_permutation(raw in random_diagram()) {
            let d = raw.validate().unwrap();
            let mut images: Vec<ThetaLabel> = (0..2 * d.r())
                .map(|i| d.sigma(ThetaLabel::from_index(i)))
                .collect();
            images.sort();
            let all: Vec<ThetaLabel> = (0..2 * d.r()).map(ThetaLabel::from_index).collect();
            prop_assert_eq!(images, all);
            let total: usize = d.sigma_cycles().iter().map(Vec::len).sum();
            prop_assert_eq!(total, 2 * d.r());
        }
    }
}
