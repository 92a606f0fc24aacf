//! Soft first-order-logic engine over Horn clauses.
//!
//! Facts carry uncertainty bounds. Grounding a rule matches every body atom
//! against a fact under one substitution (an atom with no matching fact kills
//! the grounding: negation as failure). A grounding's head bounds are the
//! arithmetic means of the matched facts' lower and upper bounds; groundings
//! and clauses sharing one ground head combine by element-wise max, the
//! soft-logic reading of disjunction.

mod parser;

pub use parser::{parse_rules, ParseError};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::predicates::{Fact, EGO};

/// The rule base reproducing the shipped safety/efficiency set: three
/// efficiency heads and three safety heads, `safe3` defined by three clauses.
pub const DEFAULT_RULES: &str = include_str!("default.rules");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    Const(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(s) | Term::Const(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub pred: String,
    pub terms: Vec<Term>,
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, ")")
    }
}

/// Reward component a rule contributes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleTag {
    Safety,
    Efficiency,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Atom>,
    pub tag: RuleTag,
    /// The alpha/beta coefficient in the reward weighting.
    pub importance: f64,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tag {
            RuleTag::Safety => writeln!(f, "@safety(weight={})", self.importance)?,
            RuleTag::Efficiency => writeln!(f, "@efficiency(weight={})", self.importance)?,
            RuleTag::None => {}
        }
        write!(f, "{} :- ", self.head)?;
        for (i, atom) in self.body.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{atom}")?;
        }
        write!(f, ".")
    }
}

/// Pretty-prints a rule base in the same grammar `parse_rules` accepts.
pub fn format_rules(rules: &[Rule]) -> String {
    let mut out = String::new();
    for rule in rules {
        out.push_str(&rule.to_string());
        out.push('\n');
    }
    out
}

/// One satisfying substitution of a rule body.
#[derive(Debug, Clone)]
pub struct Grounding {
    pub bindings: BTreeMap<String, String>,
    pub matched: Vec<Fact>,
}

/// A derived ground head with propagated bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundHead {
    pub pred: String,
    pub args: Vec<String>,
    #[serde(rename = "l")]
    pub lower: f64,
    #[serde(rename = "u")]
    pub upper: f64,
    /// Midpoint of the bounds.
    pub confidence: f64,
    /// Number of groundings supporting this head (0 for a never-fired head
    /// materialized at bounds [0, 0]).
    pub support: usize,
}

impl GroundHead {
    fn update_max(&mut self, lower: f64, upper: f64) {
        self.lower = self.lower.max(lower);
        self.upper = self.upper.max(upper);
        self.confidence = 0.5 * (self.lower + self.upper);
        self.support += 1;
    }
}

/// All substitutions under which every body atom matches a fact.
pub fn ground(rule: &Rule, facts: &[Fact]) -> Vec<Grounding> {
    let mut index: BTreeMap<&str, Vec<&Fact>> = BTreeMap::new();
    for f in facts {
        index.entry(f.pred.as_str()).or_default().push(f);
    }
    let mut out = Vec::new();
    let mut bindings: BTreeMap<String, String> = BTreeMap::new();
    let mut matched: Vec<Fact> = Vec::new();
    search(&rule.body, 0, &index, &mut bindings, &mut matched, &mut out);
    out
}

fn search(
    body: &[Atom],
    idx: usize,
    index: &BTreeMap<&str, Vec<&Fact>>,
    bindings: &mut BTreeMap<String, String>,
    matched: &mut Vec<Fact>,
    out: &mut Vec<Grounding>,
) {
    if idx == body.len() {
        out.push(Grounding {
            bindings: bindings.clone(),
            matched: matched.clone(),
        });
        return;
    }
    let atom = &body[idx];
    let Some(candidates) = index.get(atom.pred.as_str()) else {
        return; // negation as failure: nothing matches, the grounding dies
    };
    'fact: for fact in candidates {
        if fact.args.len() != atom.terms.len() {
            continue;
        }
        let mut new_vars: Vec<String> = Vec::new();
        for (term, arg) in atom.terms.iter().zip(&fact.args) {
            match term {
                Term::Const(c) => {
                    if c != arg {
                        for v in &new_vars {
                            bindings.remove(v);
                        }
                        continue 'fact;
                    }
                }
                Term::Var(v) => match bindings.get(v) {
                    Some(bound) if bound != arg => {
                        for v in &new_vars {
                            bindings.remove(v);
                        }
                        continue 'fact;
                    }
                    Some(_) => {}
                    None => {
                        bindings.insert(v.clone(), arg.clone());
                        new_vars.push(v.clone());
                    }
                },
            }
        }
        matched.push((*fact).clone());
        search(body, idx + 1, index, bindings, matched, out);
        matched.pop();
        for v in &new_vars {
            bindings.remove(v);
        }
    }
}

fn substitute(atom: &Atom, bindings: &BTreeMap<String, String>) -> Vec<String> {
    atom.terms
        .iter()
        .map(|t| match t {
            Term::Const(c) => c.clone(),
            Term::Var(v) => bindings
                .get(v)
                .cloned()
                .unwrap_or_else(|| v.clone()),
        })
        .collect()
}

/// One grounding event in the inference trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub rule: String,
    pub head: String,
    pub head_args: Vec<String>,
    pub matched: Vec<Fact>,
    #[serde(rename = "l")]
    pub lower: f64,
    #[serde(rename = "u")]
    pub upper: f64,
    pub pass: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct InferenceTrace {
    pub groundings: Vec<TraceRecord>,
}

impl InferenceTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

/// Upper bound on forward-chaining passes. The shipped rules never chain, but
/// the loop still runs to fixpoint for rule bases that do.
const MAX_PASSES: usize = 100;

/// Forward inference to fixpoint.
///
/// `Vehicle(ego)` is auto-asserted at bounds [1, 1] (the reserved ego
/// constant). Each grounding's head bounds are the means of the matched
/// facts' bounds; identical ground heads aggregate by element-wise max. Every
/// head predicate of the rule base is materialized even when nothing fires,
/// at bounds [0, 0], so downstream fixed-length sums stay well-defined.
pub fn infer(rules: &[Rule], facts: &[Fact]) -> (Vec<GroundHead>, InferenceTrace) {
    let base_kb = |heads: &BTreeMap<(String, Vec<String>), GroundHead>| -> Vec<Fact> {
        let mut kb = facts.to_vec();
        let ego_fact = Fact::new("Vehicle", vec![EGO.to_string()], 1.0, 1.0)
            .expect("ego fact bounds are valid");
        if !kb
            .iter()
            .any(|f| f.pred == "Vehicle" && f.args == ego_fact.args)
        {
            kb.push(ego_fact);
        }
        for head in heads.values() {
            kb.push(
                Fact::new(head.pred.clone(), head.args.clone(), head.lower, head.upper)
                    .expect("derived head bounds are valid"),
            );
        }
        kb
    };

    let mut heads: BTreeMap<(String, Vec<String>), GroundHead> = BTreeMap::new();
    let mut trace = InferenceTrace::default();

    // Bounds only grow pass over pass (max-aggregation is monotone), so the
    // head map reaches a fixpoint; each pass recomputes it from scratch.
    for pass in 0..MAX_PASSES {
        let kb = base_kb(&heads);
        let mut new_heads: BTreeMap<(String, Vec<String>), GroundHead> = BTreeMap::new();
        trace = InferenceTrace::default();
        for rule in rules {
            for grounding in ground(rule, &kb) {
                let n = grounding.matched.len() as f64;
                let lower = grounding.matched.iter().map(|f| f.lower).sum::<f64>() / n;
                let upper = grounding.matched.iter().map(|f| f.upper).sum::<f64>() / n;
                let args = substitute(&rule.head, &grounding.bindings);
                let key = (rule.head.pred.clone(), args.clone());
                new_heads
                    .entry(key)
                    .or_insert_with(|| GroundHead {
                        pred: rule.head.pred.clone(),
                        args: args.clone(),
                        lower: f64::NEG_INFINITY,
                        upper: f64::NEG_INFINITY,
                        confidence: 0.0,
                        support: 0,
                    })
                    .update_max(lower, upper);
                trace.groundings.push(TraceRecord {
                    rule: rule.to_string().replace('\n', " "),
                    head: rule.head.pred.clone(),
                    head_args: args,
                    matched: grounding.matched.clone(),
                    lower,
                    upper,
                    pass,
                });
            }
        }
        let settled = new_heads.len() == heads.len()
            && new_heads.iter().all(|(key, h)| {
                heads
                    .get(key)
                    .is_some_and(|prev| prev.lower == h.lower && prev.upper == h.upper)
            });
        heads = new_heads;
        if settled {
            break;
        }
    }

    // Materialize never-fired heads at [0, 0], in rule order.
    let mut out: Vec<GroundHead> = heads.into_values().collect();
    for rule in rules {
        if !out.iter().any(|h| h.pred == rule.head.pred) {
            out.push(GroundHead {
                pred: rule.head.pred.clone(),
                args: Vec::new(),
                lower: 0.0,
                upper: 0.0,
                confidence: 0.0,
                support: 0,
            });
        }
    }
    out.sort_by(|a, b| (&a.pred, &a.args).cmp(&(&b.pred, &b.args)));
    (out, trace)
}

/// Per-tag aggregated rule confidence, in rule-file order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleConfidence {
    pub head: String,
    pub confidence: f64,
    pub importance: f64,
}

/// Distinct head names per tag with their aggregated confidence (element-wise
/// max over ground instances, midpoint) and importance coefficient.
pub fn rule_confidences(
    heads: &[GroundHead],
    rules: &[Rule],
) -> BTreeMap<RuleTag, Vec<RuleConfidence>> {
    let mut out: BTreeMap<RuleTag, Vec<RuleConfidence>> = BTreeMap::new();
    for rule in rules {
        let list = out.entry(rule.tag).or_default();
        if list.iter().any(|c| c.head == rule.head.pred) {
            continue; // later clauses of a disjunctive head share the entry
        }
        let (lower, upper) = heads
            .iter()
            .filter(|h| h.pred == rule.head.pred)
            .fold((0.0f64, 0.0f64), |(l, u), h| (l.max(h.lower), u.max(h.upper)));
        list.push(RuleConfidence {
            head: rule.head.pred.clone(),
            confidence: 0.5 * (lower + upper),
            importance: rule.importance,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fact(pred: &str, args: &[&str], lower: f64, upper: f64) -> Fact {
        Fact::new(pred, args.iter().map(|s| s.to_string()).collect(), lower, upper).unwrap()
    }

    fn safe1() -> Rule {
        parse_rules("safe1(X) :- Vehicle(X), Pedestrian(P), OnRoad(P), CenterOf(P,X).").unwrap()
            [0]
        .clone()
    }

    #[test]
    fn ground_unique_match() {
        let facts = vec![
            fact("Vehicle", &["ego"], 1.0, 1.0),
            fact("Pedestrian", &["p0"], 0.8, 0.9),
            fact("OnRoad", &["p0"], 0.8, 0.9),
            fact("CenterOf", &["p0", "ego"], 0.8, 0.9),
        ];
        let groundings = ground(&safe1(), &facts);
        assert_eq!(groundings.len(), 1);
        assert_eq!(groundings[0].bindings["X"], "ego");
        assert_eq!(groundings[0].bindings["P"], "p0");
    }

    #[test]
    fn ground_negation_as_failure() {
        let facts = vec![
            fact("Vehicle", &["ego"], 1.0, 1.0),
            fact("Pedestrian", &["p0"], 0.8, 0.9),
            fact("CenterOf", &["p0", "ego"], 0.8, 0.9),
        ];
        assert!(ground(&safe1(), &facts).is_empty());
    }

    #[test]
    fn ground_two_pedestrians_two_groundings() {
        let facts = vec![
            fact("Vehicle", &["ego"], 1.0, 1.0),
            fact("Pedestrian", &["p0"], 0.8, 0.9),
            fact("Pedestrian", &["p1"], 0.7, 0.8),
            fact("OnRoad", &["p0"], 0.8, 0.9),
            fact("OnRoad", &["p1"], 0.7, 0.8),
            fact("CenterOf", &["p0", "ego"], 0.8, 0.9),
            fact("CenterOf", &["p1", "ego"], 0.7, 0.8),
        ];
        assert_eq!(ground(&safe1(), &facts).len(), 2);
    }

    #[test]
    fn infer_head_bounds_are_body_means() {
        let rules = parse_rules("h(X) :- a(X), b(X), c(X).").unwrap();
        let facts = vec![
            fact("a", &["ego"], 0.8, 0.9),
            fact("b", &["ego"], 0.6, 0.7),
            fact("c", &["ego"], 1.0, 1.0),
        ];
        let (heads, _) = infer(&rules, &facts);
        let h = heads.iter().find(|h| h.pred == "h" && h.support > 0).unwrap();
        assert!((h.lower - 0.8).abs() < 1e-12);
        assert!((h.upper - (0.9 + 0.7 + 1.0) / 3.0).abs() < 1e-12);
        assert!((h.confidence - (0.8 + 0.8666666666666667) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn infer_all_certain_body_gives_certain_head() {
        let rules = parse_rules("h(X) :- a(X), b(X).").unwrap();
        let facts = vec![fact("a", &["ego"], 1.0, 1.0), fact("b", &["ego"], 1.0, 1.0)];
        let (heads, _) = infer(&rules, &facts);
        let h = &heads.iter().find(|h| h.support > 0).unwrap();
        assert_eq!((h.lower, h.upper, h.confidence), (1.0, 1.0, 1.0));
    }

    #[test]
    fn infer_disjunction_takes_max_bounds() {
        let rules = parse_rules(
            "safe3(X) :- Vehicle(X), low(X).\nsafe3(X) :- Vehicle(X), high(X).",
        )
        .unwrap();
        // First clause grounds to ([1+0.4]/2, [1+0.5]/2) = [0.7, 0.75]... use
        // direct numbers: means over two body facts.
        let facts = vec![fact("low", &["ego"], 0.4, 0.5), fact("high", &["ego"], 0.7, 0.8)];
        let (heads, _) = infer(&rules, &facts);
        let h = heads.iter().find(|h| h.pred == "safe3" && h.support > 0).unwrap();
        // clause bounds: [(1+0.4)/2, (1+0.5)/2] = [0.7, 0.75] and
        // [(1+0.7)/2, (1+0.8)/2] = [0.85, 0.9]; max = [0.85, 0.9].
        assert!((h.lower - 0.85).abs() < 1e-12);
        assert!((h.upper - 0.9).abs() < 1e-12);
        assert_eq!(h.support, 2);
    }

    #[test]
    fn infer_unfired_heads_materialized_at_zero() {
        let rules = parse_rules("dead(X) :- never(X).\nalive(X) :- a(X).").unwrap();
        let facts = vec![fact("a", &["ego"], 1.0, 1.0)];
        let (heads, _) = infer(&rules, &facts);
        let dead = heads.iter().find(|h| h.pred == "dead").unwrap();
        assert_eq!((dead.lower, dead.upper, dead.support), (0.0, 0.0, 0));
        assert!(heads.iter().any(|h| h.pred == "alive" && h.support == 1));
    }

    #[test]
    fn infer_auto_asserts_vehicle_ego() {
        let rules = parse_rules("ok(X) :- Vehicle(X).").unwrap();
        let (heads, _) = infer(&rules, &[]);
        let ok = heads.iter().find(|h| h.pred == "ok").unwrap();
        assert_eq!(ok.args, vec!["ego".to_string()]);
        assert_eq!((ok.lower, ok.upper), (1.0, 1.0));
    }

    #[test]
    fn infer_chains_derived_heads() {
        let rules = parse_rules("base(X) :- a(X).\nderived(X) :- base(X).").unwrap();
        let facts = vec![fact("a", &["ego"], 0.5, 0.7)];
        let (heads, _) = infer(&rules, &facts);
        let d = heads.iter().find(|h| h.pred == "derived").unwrap();
        assert!(d.support > 0);
        // base head bounds [0.5, 0.7]; derived = mean of just that fact.
        assert!((d.lower - 0.5).abs() < 1e-12);
        assert!((d.upper - 0.7).abs() < 1e-12);
    }

    #[test]
    fn adding_groundings_never_lowers_bounds() {
        let rules = parse_rules("h(X) :- a(X).").unwrap();
        let sparse = vec![fact("a", &["ego"], 0.3, 0.4)];
        let dense = vec![fact("a", &["ego"], 0.3, 0.4), fact("a", &["x"], 0.9, 1.0)];
        let (h1, _) = infer(&rules, &sparse);
        let (h2, _) = infer(&rules, &dense);
        let ego1 = h1.iter().find(|h| h.args == vec!["ego"]).unwrap();
        let ego2 = h2.iter().find(|h| h.args == vec!["ego"]).unwrap();
        assert!(ego2.lower >= ego1.lower && ego2.upper >= ego1.upper);
        assert!(h2.iter().any(|h| h.args == vec!["x"]));
    }

    #[test]
    fn rule_confidences_per_tag_in_rule_order() {
        let rules = parse_rules(DEFAULT_RULES).unwrap();
        let facts = vec![
            fact("NoCrosswalk", &["ego"], 1.0, 1.0),
            fact("EmptyLane", &["ego"], 1.0, 1.0),
        ];
        let (heads, _) = infer(&rules, &facts);
        let conf = rule_confidences(&heads, &rules);
        let eff = &conf[&RuleTag::Efficiency];
        assert_eq!(
            eff.iter().map(|c| c.head.as_str()).collect::<Vec<_>>(),
            vec!["efficiency1", "efficiency2", "efficiency3"]
        );
        assert!((eff[0].confidence - 1.0).abs() < 1e-12);
        assert_eq!(eff[1].confidence, 0.0);
        assert_eq!(eff[2].confidence, 0.0);
        assert_eq!(eff[0].importance, 1.0);
        assert_eq!(eff[1].importance, 0.75);
        let saf = &conf[&RuleTag::Safety];
        assert_eq!(saf.len(), 3);
        assert!(saf.iter().all(|c| c.confidence == 0.0));
    }

    #[test]
    fn default_rules_reproduce_shipped_table() {
        let rules = parse_rules(DEFAULT_RULES).unwrap();
        assert_eq!(rules.len(), 8);
        let eff: Vec<_> = rules.iter().filter(|r| r.tag == RuleTag::Efficiency).collect();
        let saf: Vec<_> = rules.iter().filter(|r| r.tag == RuleTag::Safety).collect();
        assert_eq!(eff.len(), 3);
        assert_eq!(saf.len(), 5);
        assert_eq!(
            saf.iter().filter(|r| r.head.pred == "safe3").count(),
            3,
            "safe3 is a three-clause disjunction"
        );
        let heads: std::collections::BTreeSet<&str> =
            rules.iter().map(|r| r.head.pred.as_str()).collect();
        assert_eq!(heads.len(), 6);
        // Importance defaults: 1.0 for the lead rule of each tag, 0.75 after.
        assert_eq!(eff[0].importance, 1.0);
        assert_eq!(saf[0].importance, 1.0);
        assert!(eff[1..].iter().all(|r| r.importance == 0.75));
        assert!(saf[1..].iter().all(|r| r.importance == 0.75));
    }

    #[test]
    fn pretty_print_parse_is_fixpoint() {
        let rules = parse_rules(DEFAULT_RULES).unwrap();
        let printed = format_rules(&rules);
        let reparsed = parse_rules(&printed).unwrap();
        assert_eq!(rules, reparsed);
        assert_eq!(printed, format_rules(&reparsed));
    }

    #[test]
    fn empty_rule_file_is_empty_base() {
        let rules = parse_rules("# nothing here\n").unwrap();
        assert!(rules.is_empty());
        let (heads, _) = infer(&rules, &[]);
        assert!(heads.is_empty());
    }

    #[test]
    fn trace_records_groundings() {
        let rules = parse_rules("h(X) :- a(X), b(X).").unwrap();
        let facts = vec![fact("a", &["ego"], 0.8, 0.9), fact("b", &["ego"], 0.6, 0.7)];
        let (_, trace) = infer(&rules, &facts);
        assert_eq!(trace.groundings.len(), 1);
        let rec = &trace.groundings[0];
        assert_eq!(rec.head, "h");
        assert_eq!(rec.matched.len(), 2);
        assert!((rec.lower - 0.7).abs() < 1e-12);
        let json = trace.to_json();
        assert!(json.contains("\"matched\""));
    }
}
