//! Fixed benchmark inputs, shared by the criterion benches.

use sbtw_core::formula::CnfFormula;
use sbtw_core::generators::{gen_grid_formula, gen_grid_formula_x, gen_planted, gen_random_cnf, gen_template_instance};
use sbtw_core::graph::{make_wall, Graph};
use sbtw_core::obstruction::{nb, tile_obstructions, WallObstruction};

pub fn wall_graph(r: usize) -> Graph {
    make_wall(r).expect("r ≥ 2").0
}

pub fn grid_incidence(n: usize) -> Graph {
    Graph::incidence(&gen_grid_formula(n).expect("n ≥ 2"))
}

pub fn grid_x(n: usize) -> CnfFormula {
    gen_grid_formula_x(n).expect("n ≥ 2")
}

pub fn random_formula(n: usize, m: usize, seed: u64) -> CnfFormula {
    gen_random_cnf(n, m, 3, seed).expect("width ≤ n")
}

pub fn planted(base_n: usize, k: usize, seed: u64) -> CnfFormula {
    gen_planted(base_n, 1, k, seed).expect("valid parameters").0
}

/// A template instance at t = 1 with 2·nb(1) killers and its obstruction.
pub fn template_input(seed: u64) -> (CnfFormula, WallObstruction, std::collections::BTreeSet<u32>) {
    let inst = gen_template_instance(1, 2 * nb(1), seed).expect("valid parameters");
    let w = tile_obstructions(&inst.model, 1).expect("model fits").remove(0);
    (inst.formula, w, inst.z)
}
