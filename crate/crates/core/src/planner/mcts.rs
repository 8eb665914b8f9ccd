//! Generic UCT search over small discrete action sets.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A world the search can step through.
pub trait SearchEnv {
    type State: Clone;

    /// Action ids available in `state`, ascending.
    fn actions(&self, state: &Self::State) -> Vec<u8>;

    /// Applies `action` and returns the next state, the step reward and
    /// whether the next state is terminal.
    fn step(&self, state: &Self::State, action: u8, depth: usize, rng: &mut ChaCha8Rng) -> (Self::State, f64, bool);

    /// Default policy used past the expanded node.
    fn rollout_action(&self, state: &Self::State, rng: &mut ChaCha8Rng) -> u8;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub iterations: usize,
    pub max_depth: usize,
    pub uct_c: f64,
    pub discount: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Node<S> {
    pub parent: Option<usize>,
    pub action: Option<u8>,
    pub visits: u64,
    pub total_value: f64,
    /// Indices into the arena, in ascending action order.
    pub children: Vec<usize>,
    pub state: S,
    pub depth: usize,
    pub terminal: bool,
    /// Reward collected on the edge into this node.
    pub reward: f64,
    untried: Vec<u8>,
}

impl<S> Node<S> {
    pub fn mean_value(&self) -> f64 {
        if self.visits == 0 {
            0.0
        } else {
            self.total_value / self.visits as f64
        }
    }
}

/// Search tree stored as an arena; node `0` is the root.
#[derive(Debug, Clone)]
pub struct Tree<S> {
    pub nodes: Vec<Node<S>>,
}

/// Upper confidence bound for a child. Unvisited children score `+inf`.
pub fn uct_score(parent_visits: u64, child_visits: u64, child_mean_value: f64, c: f64) -> f64 {
    if child_visits == 0 {
        return f64::INFINITY;
    }
    if c == 0.0 {
        return child_mean_value;
    }
    child_mean_value + c * ((parent_visits.max(1) as f64).ln() / child_visits as f64).sqrt()
}

impl<S: Clone> Tree<S> {
    fn push(&mut self, node: Node<S>) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    pub fn root(&self) -> &Node<S> {
        &self.nodes[0]
    }

    /// Child of `node` with the most visits, ties to the lower action id.
    pub fn most_visited_child(&self, node: usize) -> Option<usize> {
        let mut best: Option<usize> = None;
        for &c in &self.nodes[node].children {
            if best.is_none_or(|b| self.nodes[c].visits > self.nodes[b].visits) {
                best = Some(c);
            }
        }
        best
    }

    /// Node indices from the root along the most-visited children.
    pub fn greedy_path(&self) -> Vec<usize> {
        let mut out = vec![0];
        let mut n = 0;
        while let Some(c) = self.most_visited_child(n) {
            if self.nodes[c].visits == 0 {
                break;
            }
            out.push(c);
            n = c;
        }
        out
    }

    /// Actions along [`Tree::greedy_path`].
    pub fn greedy_actions(&self) -> Vec<u8> {
        self.greedy_path().iter().filter_map(|&i| self.nodes[i].action).collect()
    }

    /// `node,parent,action,visits,mean_value` rows, root first.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node,parent,action,visits,mean_value\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let parent = n.parent.map(|p| p.to_string()).unwrap_or_default();
            let action = n.action.map(|a| a.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{i},{parent},{action},{},{}", n.visits, n.mean_value());
        }
        out
    }
}

/// Runs `cfg.iterations` rounds of select, expand, rollout and backup.
///
/// Iteration `i` draws from its own generator seeded with `seed ^ i`, so the
/// tree depends only on the inputs.
pub fn search<E: SearchEnv>(env: &E, root: E::State, cfg: &SearchConfig) -> Tree<E::State> {
    let untried = env.actions(&root);
    let mut tree = Tree {
        nodes: vec![Node {
            parent: None,
            action: None,
            visits: 1,
            total_value: 0.0,
            children: Vec::new(),
            state: root,
            depth: 0,
            terminal: false,
            reward: 0.0,
            untried,
        }],
    };
    for i in 0..cfg.iterations {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ i as u64);
        let leaf = select_expand(env, &mut tree, cfg, &mut rng);
        let g = rollout(env, &tree.nodes[leaf], cfg, &mut rng);
        backup(&mut tree, leaf, g, cfg.discount);
    }
    tree
}

fn select_expand<E: SearchEnv>(env: &E, tree: &mut Tree<E::State>, cfg: &SearchConfig, rng: &mut ChaCha8Rng) -> usize {
    let mut n = 0;
    loop {
        let node = &mut tree.nodes[n];
        if node.terminal || node.depth >= cfg.max_depth {
            return n;
        }
        if !node.untried.is_empty() {
            let a = node.untried.remove(0);
            let (state, reward, terminal) = env.step(&node.state, a, node.depth, rng);
            let depth = node.depth + 1;
            let untried = if terminal || depth >= cfg.max_depth { Vec::new() } else { env.actions(&state) };
            let child = tree.push(Node {
                parent: Some(n),
                action: Some(a),
                visits: 0,
                total_value: 0.0,
                children: Vec::new(),
                state,
                depth,
                terminal,
                reward,
                untried,
            });
            tree.nodes[n].children.push(child);
            return child;
        }
        if node.children.is_empty() {
            return n;
        }
        let pv = node.visits;
        let node = &tree.nodes[n];
        let mut best = (f64::NEG_INFINITY, node.children[0]);
        for &c in &node.children {
            let ch = &tree.nodes[c];
            let score = uct_score(pv, ch.visits, ch.mean_value(), cfg.uct_c);
            if score > best.0 {
                best = (score, c);
            }
        }
        n = best.1;
    }
}

fn rollout<E: SearchEnv>(env: &E, from: &Node<E::State>, cfg: &SearchConfig, rng: &mut ChaCha8Rng) -> f64 {
    let mut state = from.state.clone();
    let mut terminal = from.terminal;
    let mut depth = from.depth;
    let mut g = 0.0;
    let mut disc = 1.0;
    while !terminal && depth < cfg.max_depth {
        let a = env.rollout_action(&state, rng);
        let (next, r, t) = env.step(&state, a, depth, rng);
        g += disc * r;
        disc *= cfg.discount;
        state = next;
        terminal = t;
        depth += 1;
    }
    g
}

fn backup<S>(tree: &mut Tree<S>, leaf: usize, mut g: f64, discount: f64) {
    let mut n = Some(leaf);
    while let Some(i) = n {
        let node = &mut tree.nodes[i];
        g = node.reward + discount * g;
        node.visits += 1;
        node.total_value += g;
        n = node.parent;
    }
}
