//! Decision tree over search growth with chance layers for traffic and
//! clandestine growth, and an outcome subtree that follows a single lorry
//! through the three checks.
//!
//! Terminal values are annual costs in pounds: the search option's cost,
//! plus the annual cost of misses on the path where a positive lorry gets
//! through. Rolling back a scenario subtree therefore yields that
//! scenario's expected annual cost.

use std::fmt::Write as _;

use serde::Serialize;

use crate::scenario::{
    calibrate_routing, BaselineCounts, CalibratedRouting, CostModel, ExitCounts, Scenario,
    ScenarioFactorGrid,
};
use crate::{Error, Money, Result};

const CHANCE_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Decision,
    Chance,
    Terminal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeLabel {
    Probability(f64),
    Choice(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Edge {
    pub label: EdgeLabel,
    pub node: TreeNode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeNode {
    pub kind: NodeKind,
    pub label: String,
    pub children: Vec<Edge>,
    /// Annual cost in pounds (terminals only).
    pub terminal_value: Option<f64>,
    /// Annual exit counts if every lorry followed this path (terminals only).
    pub terminal_counts: Option<ExitCounts>,
}

impl TreeNode {
    pub fn terminal(label: impl Into<String>, value: f64, counts: ExitCounts) -> Self {
        TreeNode {
            kind: NodeKind::Terminal,
            label: label.into(),
            children: Vec::new(),
            terminal_value: Some(value),
            terminal_counts: Some(counts),
        }
    }

    pub fn chance(label: impl Into<String>, branches: Vec<(f64, TreeNode)>) -> Self {
        TreeNode {
            kind: NodeKind::Chance,
            label: label.into(),
            children: branches
                .into_iter()
                .map(|(p, node)| Edge {
                    label: EdgeLabel::Probability(p),
                    node,
                })
                .collect(),
            terminal_value: None,
            terminal_counts: None,
        }
    }

    pub fn decision(label: impl Into<String>, options: Vec<(String, TreeNode)>) -> Self {
        TreeNode {
            kind: NodeKind::Decision,
            label: label.into(),
            children: options
                .into_iter()
                .map(|(choice, node)| Edge {
                    label: EdgeLabel::Choice(choice),
                    node,
                })
                .collect(),
            terminal_value: None,
            terminal_counts: None,
        }
    }

    /// Checks the structural rules of every node in the subtree.
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            NodeKind::Terminal => {
                if !self.children.is_empty() {
                    return Err(self.malformed("terminal has children"));
                }
                if self.terminal_value.is_none() {
                    return Err(self.malformed("terminal has no value"));
                }
            }
            NodeKind::Chance => {
                if self.children.is_empty() {
                    return Err(self.malformed("chance node has no branches"));
                }
                let mut sum = 0.0;
                for edge in &self.children {
                    match edge.label {
                        EdgeLabel::Probability(p) if (0.0..=1.0).contains(&p) => sum += p,
                        EdgeLabel::Probability(p) => {
                            return Err(self.malformed(&format!("branch probability {p}")))
                        }
                        EdgeLabel::Choice(_) => {
                            return Err(self.malformed("chance node has a choice edge"))
                        }
                    }
                }
                if (sum - 1.0).abs() > CHANCE_SUM_TOLERANCE {
                    return Err(self.malformed(&format!("probabilities sum to {sum}")));
                }
            }
            NodeKind::Decision => {
                if self.children.is_empty() {
                    return Err(self.malformed("decision node has no options"));
                }
                if self
                    .children
                    .iter()
                    .any(|e| matches!(e.label, EdgeLabel::Probability(_)))
                {
                    return Err(self.malformed("decision node carries probabilities"));
                }
            }
        }
        self.children.iter().try_for_each(|e| e.node.validate())
    }

    fn malformed(&self, what: &str) -> Error {
        Error::Structure(format!("{} ({what})", self.label))
    }

    pub fn count_nodes(&self, kind: NodeKind) -> usize {
        usize::from(self.kind == kind)
            + self
                .children
                .iter()
                .map(|e| e.node.count_nodes(kind))
                .sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(|e| e.node.depth())
            .max()
            .unwrap_or(0)
    }

    /// Adds `delta` to every terminal value.
    pub fn shift_terminals(&mut self, delta: f64) {
        if let Some(v) = self.terminal_value.as_mut() {
            *v += delta;
        }
        for edge in &mut self.children {
            edge.node.shift_terminals(delta);
        }
    }
}

/// Order of the two chance layers beneath each decision option.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChanceOrder {
    #[default]
    TrafficFirst,
    ClandestineFirst,
}

/// Builds the full tree: a decision over the search options, chance layers
/// over traffic and clandestine growth, and a calibrated lorry-outcome
/// subtree per scenario.
pub fn build_tree(
    grid: &ScenarioFactorGrid,
    baseline: &BaselineCounts,
    costs: &CostModel,
) -> Result<TreeNode> {
    build_tree_ordered(grid, baseline, costs, ChanceOrder::TrafficFirst)
}

pub fn build_tree_ordered(
    grid: &ScenarioFactorGrid,
    baseline: &BaselineCounts,
    costs: &CostModel,
    order: ChanceOrder,
) -> Result<TreeNode> {
    grid.validate()?;
    let mut options = Vec::with_capacity(grid.search_growth.len());
    for option in &grid.search_growth {
        let sg = option.growth;
        let (outer, inner) = match order {
            ChanceOrder::TrafficFirst => (&grid.traffic_growth, &grid.clandestine_growth),
            ChanceOrder::ClandestineFirst => (&grid.clandestine_growth, &grid.traffic_growth),
        };
        let (outer_name, inner_name) = match order {
            ChanceOrder::TrafficFirst => ("TG", "CG"),
            ChanceOrder::ClandestineFirst => ("CG", "TG"),
        };
        let mut outer_branches = Vec::with_capacity(outer.len());
        for a in outer {
            let mut inner_branches = Vec::with_capacity(inner.len());
            for b in inner {
                let scenario = match order {
                    ChanceOrder::TrafficFirst => Scenario::new(a.value, b.value, sg),
                    ChanceOrder::ClandestineFirst => Scenario::new(b.value, a.value, sg),
                };
                let subtree = outcome_subtree(&scenario, baseline, grid, costs)?;
                inner_branches.push((b.probability, subtree));
            }
            outer_branches.push((
                a.probability,
                TreeNode::chance(
                    format!("{inner_name} | {outer_name} {}", pct(a.value)),
                    inner_branches,
                ),
            ));
        }
        options.push((
            format!("SG {}", pct(sg)),
            TreeNode::chance(format!("{outer_name} | SG {}", pct(sg)), outer_branches),
        ));
    }
    Ok(TreeNode::decision("search growth", options))
}

fn pct(v: f64) -> String {
    format!("{:+.0}%", v * 100.0)
}

/// Single-lorry outcome subtree for one scenario.
pub fn outcome_subtree(
    scenario: &Scenario,
    baseline: &BaselineCounts,
    grid: &ScenarioFactorGrid,
    costs: &CostModel,
) -> Result<TreeNode> {
    let routing = calibrate_routing(scenario, baseline, grid).map_err(|e| {
        e.context(format!(
            "calibrating tg={}, cg={}, sg={}",
            scenario.tg, scenario.cg, scenario.sg
        ))
    })?;
    let search_cost = grid.search_option(scenario.sg)?.annual_cost.pounds_f64();
    Ok(routing_subtree(&routing, search_cost, costs))
}

fn routing_subtree(routing: &CalibratedRouting, search_cost: f64, costs: &CostModel) -> TreeNode {
    let n = routing.n_lorries;
    let only = |f: fn(&mut ExitCounts) -> &mut f64| {
        let mut c = ExitCounts::default();
        *f(&mut c) = n;
        c
    };
    let missed_value = search_cost + costs.missed_cost_pounds(n);
    let p1 = routing.p_found_france;
    let p2 = routing.p_found_shed_given_past_france;
    let p3 = routing.p_found_berth_given_past_shed;
    let berth = TreeNode::chance(
        "UK berth",
        vec![
            (
                p3,
                TreeNode::terminal("found at berth", search_cost, only(|c| &mut c.berth)),
            ),
            (
                1.0 - p3,
                TreeNode::terminal("missed", missed_value, only(|c| &mut c.missed)),
            ),
        ],
    );
    let shed = TreeNode::chance(
        "UK shed",
        vec![
            (
                p2,
                TreeNode::terminal("found at shed", search_cost, only(|c| &mut c.shed)),
            ),
            (1.0 - p2, berth),
        ],
    );
    let france = TreeNode::chance(
        "France",
        vec![
            (
                p1,
                TreeNode::terminal("found in France", search_cost, only(|c| &mut c.france)),
            ),
            (1.0 - p1, shed),
        ],
    );
    TreeNode::chance(
        "lorry",
        vec![
            (routing.p_positive, france),
            (
                1.0 - routing.p_positive,
                TreeNode::terminal("negative", search_cost, ExitCounts::default()),
            ),
        ],
    )
}

/// Expected value of a subtree: chance nodes average, decision nodes take
/// the cheapest option.
pub fn expected_value(node: &TreeNode) -> Result<f64> {
    match node.kind {
        NodeKind::Terminal => node
            .terminal_value
            .ok_or_else(|| Error::Structure(format!("{} (terminal has no value)", node.label))),
        NodeKind::Chance => node
            .children
            .iter()
            .try_fold(0.0, |acc, edge| match edge.label {
                EdgeLabel::Probability(p) => Ok(acc + p * expected_value(&edge.node)?),
                EdgeLabel::Choice(_) => Err(Error::Structure(format!(
                    "{} (chance node has a choice edge)",
                    node.label
                ))),
            }),
        NodeKind::Decision => {
            let mut best: Option<f64> = None;
            for edge in &node.children {
                let v = expected_value(&edge.node)?;
                best = Some(best.map_or(v, |b| b.min(v)));
            }
            best.ok_or_else(|| Error::Structure(format!("{} (no options)", node.label)))
        }
    }
}

/// Probability-weighted terminal counts of a subtree.
pub fn expected_counts(node: &TreeNode) -> Result<ExitCounts> {
    match node.kind {
        NodeKind::Terminal => Ok(node.terminal_counts.unwrap_or_default()),
        NodeKind::Chance => {
            let mut acc = ExitCounts::default();
            for edge in &node.children {
                let EdgeLabel::Probability(p) = edge.label else {
                    return Err(Error::Structure(format!(
                        "{} (choice under chance)",
                        node.label
                    )));
                };
                let c = expected_counts(&edge.node)?.scaled(p);
                acc.france += c.france;
                acc.shed += c.shed;
                acc.berth += c.berth;
                acc.missed += c.missed;
            }
            Ok(acc)
        }
        NodeKind::Decision => Err(Error::Structure(format!(
            "{} (counts are undefined across a decision)",
            node.label
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptionValue {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rollback {
    /// Expected value of the chosen option.
    pub value: f64,
    pub best_index: usize,
    pub options: Vec<OptionValue>,
}

impl Rollback {
    pub fn option_costs(&self) -> Vec<Money> {
        self.options
            .iter()
            .map(|o| Money::from_pounds_f64(o.value))
            .collect()
    }
}

/// Rolls the tree back from the leaves. For a decision root, reports every
/// option's expectation and the cheapest; for any other root, a single
/// pseudo-option holding its value.
pub fn rollback(node: &TreeNode) -> Result<Rollback> {
    node.validate()?;
    if node.kind != NodeKind::Decision {
        let value = expected_value(node)?;
        return Ok(Rollback {
            value,
            best_index: 0,
            options: vec![OptionValue {
                label: node.label.clone(),
                value,
            }],
        });
    }
    let options = node
        .children
        .iter()
        .map(|edge| {
            let label = match &edge.label {
                EdgeLabel::Choice(c) => c.clone(),
                EdgeLabel::Probability(_) => unreachable!("validated"),
            };
            Ok(OptionValue {
                label,
                value: expected_value(&edge.node)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    // First minimum wins, i.e. the smaller search growth on ties.
    let (best_index, best) =
        options
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bi, bv), (i, o)| {
                if o.value < bv {
                    (i, o.value)
                } else {
                    (bi, bv)
                }
            });
    Ok(Rollback {
        value: best,
        best_index,
        options,
    })
}

/// Expected exits of a scenario from its outcome subtree.
pub fn end_counts(
    scenario: &Scenario,
    baseline: &BaselineCounts,
    grid: &ScenarioFactorGrid,
    costs: &CostModel,
) -> Result<ExitCounts> {
    expected_counts(&outcome_subtree(scenario, baseline, grid, costs)?)
}

/// Indented plain-text rendering.
pub fn to_text(node: &TreeNode) -> String {
    let mut out = String::new();
    write_text(node, None, 0, &mut out);
    out
}

fn write_text(node: &TreeNode, edge: Option<&EdgeLabel>, depth: usize, out: &mut String) {
    let indent = "  ".repeat(depth);
    let marker = match node.kind {
        NodeKind::Decision => "[D]",
        NodeKind::Chance => "(C)",
        NodeKind::Terminal => "<T>",
    };
    let prefix = match edge {
        Some(EdgeLabel::Probability(p)) => format!("p={p:.6} "),
        Some(EdgeLabel::Choice(c)) => format!("{c}: "),
        None => String::new(),
    };
    let _ = write!(out, "{indent}{prefix}{marker} {}", node.label);
    if let Some(v) = node.terminal_value {
        let _ = write!(out, " = {}", Money::from_pounds_f64(v));
    }
    out.push('\n');
    for e in &node.children {
        write_text(&e.node, Some(&e.label), depth + 1, out);
    }
}

/// Graphviz DOT description.
pub fn to_dot(node: &TreeNode) -> String {
    let mut out = String::from("digraph decision_tree {\n  rankdir=LR;\n");
    let mut next_id = 0usize;
    write_dot(node, &mut next_id, &mut out);
    out.push_str("}\n");
    out
}

fn write_dot(node: &TreeNode, next_id: &mut usize, out: &mut String) -> usize {
    let id = *next_id;
    *next_id += 1;
    let shape = match node.kind {
        NodeKind::Decision => "box",
        NodeKind::Chance => "ellipse",
        NodeKind::Terminal => "plaintext",
    };
    let label = match node.terminal_value {
        Some(v) => format!("{}\\n{}", node.label, Money::from_pounds_f64(v)),
        None => node.label.clone(),
    };
    let _ = writeln!(
        out,
        "  n{id} [shape={shape}, label=\"{}\"];",
        label.replace('"', "'")
    );
    for e in &node.children {
        let child = write_dot(&e.node, next_id, out);
        let edge_label = match &e.label {
            EdgeLabel::Probability(p) => format!("{p:.4}"),
            EdgeLabel::Choice(c) => c.clone(),
        };
        let _ = writeln!(out, "  n{id} -> n{child} [label=\"{edge_label}\"];");
    }
    id
}
