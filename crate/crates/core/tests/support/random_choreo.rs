//! Random choreographies over `i64` values for oracle-equivalence tests.
//!
//! A choreography is generated as plain data (`Plan`) so that it can be rebuilt
//! once per location. Every generated plan only reads values at their owner,
//! so building it through the public API must never trip an ownership check.

#![allow(dead_code)]

use choreo::effect::pure;
use choreo::{comm, cond, locally, Choreo, Located, LocationId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub enum Op {
    /// New value at `at`: fold of `inputs` (all owned by `at`) from `seed`.
    Local {
        at: usize,
        inputs: Vec<usize>,
        seed: i64,
        coef: i64,
    },
    /// Copy value `var` from its owner to `to` (possibly itself).
    Comm { var: usize, to: usize },
    /// Branch on the parity of `var` at its owner. Each branch ends by moving
    /// its last value to `target`; the result is one new value there.
    Cond {
        var: usize,
        even: Vec<Op>,
        odd: Vec<Op>,
        even_owner: usize,
        odd_owner: usize,
        target: usize,
    },
}

#[derive(Clone, Debug)]
pub struct Plan {
    pub locations: Vec<LocationId>,
    pub ops: Vec<Op>,
}

pub struct Limits {
    pub max_top_level: usize,
    pub max_branch: usize,
    pub max_nesting: usize,
}

pub const DEFAULT_LIMITS: Limits = Limits {
    max_top_level: 6,
    max_branch: 3,
    max_nesting: 2,
};

struct Gen<'a> {
    rng: ChaCha8Rng,
    n: usize,
    limits: &'a Limits,
}

impl Gen<'_> {
    fn op(&mut self, owners: &mut Vec<usize>, nesting: usize) -> Op {
        let choice = self.rng.gen_range(0..10);
        if choice < 3 || owners.is_empty() {
            let at = self.rng.gen_range(0..self.n);
            let mine: Vec<usize> = (0..owners.len()).filter(|&i| owners[i] == at).collect();
            let k = if mine.is_empty() {
                0
            } else {
                self.rng.gen_range(0..=mine.len().min(3))
            };
            let inputs = (0..k)
                .map(|_| mine[self.rng.gen_range(0..mine.len())])
                .collect();
            owners.push(at);
            Op::Local {
                at,
                inputs,
                seed: self.rng.gen_range(-50..50),
                coef: self.rng.gen_range(-3..4),
            }
        } else if choice < 7 || nesting >= self.limits.max_nesting {
            let var = self.rng.gen_range(0..owners.len());
            let to = self.rng.gen_range(0..self.n);
            owners.push(to);
            Op::Comm { var, to }
        } else {
            let var = self.rng.gen_range(0..owners.len());
            let (even, even_owner) = self.branch(owners.clone(), nesting + 1);
            let (odd, odd_owner) = self.branch(owners.clone(), nesting + 1);
            let target = self.rng.gen_range(0..self.n);
            owners.push(target);
            Op::Cond {
                var,
                even,
                odd,
                even_owner,
                odd_owner,
                target,
            }
        }
    }

    fn branch(&mut self, mut owners: Vec<usize>, nesting: usize) -> (Vec<Op>, usize) {
        let len = self.rng.gen_range(0..=self.limits.max_branch);
        let ops = (0..len).map(|_| self.op(&mut owners, nesting)).collect();
        (
            ops,
            *owners.last().expect("branches start from a nonempty env"),
        )
    }
}

fn kinds(ops: &[Op], seen: &mut [bool; 3]) {
    for op in ops {
        match op {
            Op::Local { .. } => seen[0] = true,
            Op::Comm { .. } => seen[1] = true,
            Op::Cond { even, odd, .. } => {
                seen[2] = true;
                kinds(even, seen);
                kinds(odd, seen);
            }
        }
    }
}

/// A plan over 2..=4 locations that uses locals, comms, and conds.
pub fn generate(seed: u64, limits: &Limits) -> Plan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.gen_range(2..=4);
        let mut gen = Gen {
            rng: ChaCha8Rng::seed_from_u64(rng.gen()),
            n,
            limits,
        };
        let mut owners = Vec::new();
        // Every location starts out owning one value.
        let mut ops: Vec<Op> = (0..n)
            .map(|at| {
                owners.push(at);
                Op::Local {
                    at,
                    inputs: vec![],
                    seed: gen.rng.gen_range(-50..50),
                    coef: 1,
                }
            })
            .collect();
        let len = gen.rng.gen_range(1..=limits.max_top_level);
        for _ in 0..len {
            let op = gen.op(&mut owners, 0);
            ops.push(op);
        }
        let mut seen = [false; 3];
        kinds(&ops, &mut seen);
        if seen.iter().all(|s| *s) {
            let locations = (0..n)
                .map(|i| LocationId::from(format!("loc{i}")))
                .collect();
            return Plan { locations, ops };
        }
    }
}

impl Plan {
    pub fn build(&self) -> Choreo<Vec<Located<i64>>> {
        build(
            self.locations.clone(),
            self.ops.clone(),
            Vec::new(),
            Vec::new(),
        )
    }
}

/// `owners[i]` is the location of `env[i]`, known statically even where the
/// value itself is absent.
fn build(
    locs: Vec<LocationId>,
    mut ops: Vec<Op>,
    env: Vec<Located<i64>>,
    owners: Vec<usize>,
) -> Choreo<Vec<Located<i64>>> {
    if ops.is_empty() {
        return pure(env);
    }
    let op = ops.remove(0);
    let (step, owner): (Choreo<Located<i64>>, usize) = match op {
        Op::Local {
            at,
            inputs,
            seed,
            coef,
        } => {
            let values: Vec<Located<i64>> = inputs.iter().map(|&i| env[i].clone()).collect();
            let step = locally(locs[at].clone(), move |un| {
                values.iter().fold(seed, |acc, v| {
                    acc.wrapping_mul(coef).wrapping_add(*un.unwrap(v))
                })
            });
            (step, at)
        }
        Op::Comm { var, to } => (
            comm(locs[owners[var]].clone(), &env[var], locs[to].clone()),
            to,
        ),
        Op::Cond {
            var,
            even,
            odd,
            even_owner,
            odd_owner,
            target,
        } => {
            let decider = locs[owners[var]].clone();
            let branch_env = env.clone();
            let branch_owners = owners.clone();
            let branch_locs = locs.clone();
            let step = cond(decider, &env[var], move |s: i64| {
                let (ops, from) = if s.rem_euclid(2) == 0 {
                    (even, even_owner)
                } else {
                    (odd, odd_owner)
                };
                let to = branch_locs[target].clone();
                let from = branch_locs[from].clone();
                build(branch_locs, ops, branch_env, branch_owners).bind(move |env2| {
                    let last = env2.last().cloned().expect("nonempty env");
                    comm(from, &last, to)
                })
            });
            (step, target)
        }
    };
    step.bind(move |v| {
        let (mut env, mut owners) = (env, owners);
        env.push(v);
        owners.push(owner);
        build(locs, ops, env, owners)
    })
}
