#![allow(dead_code)]

use mipnl::mps::{Model, ModelParts, ObjectiveSense, Row, RowSense, Variable};

/// xorshift64* stream, kept separate from the library generator on purpose.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed.wrapping_mul(0x2545F4914F6CDD1D) | 1)
    }

    pub fn next(&mut self) -> u64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        self.0.wrapping_mul(0x2545F4914F6CDD1D)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }

    pub fn int(&mut self, lo: i64, hi: i64) -> i64 {
        lo + self.below((hi - lo + 1) as u64) as i64
    }
}

/// All-binary model with integer data: up to `max_vars` columns and `max_rows` rows.
pub fn random_binary_model(seed: u64, max_vars: usize, max_rows: usize) -> Model {
    let mut r = TestRng::new(seed);
    let n = 1 + r.below(max_vars as u64) as usize;
    let m = r.below(max_rows as u64 + 1) as usize;
    let variables = (0..n).map(|j| Variable::binary(format!("x{j}"))).collect();
    let obj_terms = (0..n).filter_map(|j| {
        let c = r.int(-9, 9);
        (c != 0).then_some((j, c as f64))
    });
    let mut rows = vec![Row::new("obj", RowSense::N, 0.0, obj_terms.collect())];
    for i in 0..m {
        let terms: Vec<(usize, f64)> = (0..n)
            .filter_map(|j| {
                if r.below(2) == 0 {
                    return None;
                }
                let a = r.int(-5, 5);
                (a != 0).then_some((j, a as f64))
            })
            .collect();
        let sense = [RowSense::L, RowSense::G, RowSense::E][r.below(3) as usize];
        let rhs = r.int(-3, 4) as f64;
        let mut row = Row::new(format!("r{i}"), sense, rhs, terms);
        if r.below(5) == 0 {
            row = row.with_range(r.int(-3, 3) as f64);
        }
        rows.push(row);
    }
    let sense = if r.below(2) == 0 { ObjectiveSense::Min } else { ObjectiveSense::Max };
    Model::from_parts(ModelParts {
        name: format!("rand{seed}"),
        variables,
        rows,
        objective_row: 0,
        objective_sense: sense,
        objective_constant: 0.0,
    })
    .unwrap()
}

/// Row interval from sense, rhs and range, following the MPS RANGES table.
pub fn interval(row: &Row) -> (f64, f64) {
    let b = row.rhs;
    match (row.sense, row.range) {
        (RowSense::N, _) => (f64::NEG_INFINITY, f64::INFINITY),
        (RowSense::L, None) => (f64::NEG_INFINITY, b),
        (RowSense::G, None) => (b, f64::INFINITY),
        (RowSense::E, None) => (b, b),
        (RowSense::L, Some(r)) => (b - r.abs(), b),
        (RowSense::G, Some(r)) => (b, b + r.abs()),
        (RowSense::E, Some(r)) if r >= 0.0 => (b, b + r),
        (RowSense::E, Some(r)) => (b + r, b),
    }
}

pub fn feasible(model: &Model, x: &[f64]) -> bool {
    model.rows().iter().enumerate().all(|(i, row)| {
        if i == model.objective_row() {
            return true;
        }
        let act: f64 = row.terms.iter().map(|&(j, a)| a * x[j]).sum();
        let (lo, hi) = interval(row);
        act >= lo && act <= hi
    })
}

pub fn objective(model: &Model, x: &[f64]) -> f64 {
    model.objective().terms.iter().map(|&(j, c)| c * x[j]).sum::<f64>() + model.objective_constant()
}

/// Independent optimum over `{0,1}^n` with its lexicographically first
/// witness (bit j of the mask is x_j); None when infeasible.
pub fn brute_force_witness(model: &Model) -> Option<(f64, Vec<f64>)> {
    let n = model.variables().len();
    let max = model.objective_sense() == ObjectiveSense::Max;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u64..(1 << n) {
        let x: Vec<f64> = (0..n).map(|j| ((mask >> j) & 1) as f64).collect();
        if !feasible(model, &x) {
            continue;
        }
        let v = objective(model, &x);
        let better = match &best {
            None => true,
            Some((b, _)) => (max && v > *b) || (!max && v < *b),
        };
        if better {
            best = Some((v, x));
        }
    }
    best
}

pub fn brute_force(model: &Model) -> Option<f64> {
    brute_force_witness(model).map(|b| b.0)
}
