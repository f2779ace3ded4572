//! Shared fixtures for the criterion benchmarks.

use anderson_saw::{AndersonOperator, ComplexEnergy, DisorderModel, DisorderRealization, Family, Graph};

pub fn graph(family: Family) -> Graph {
    Graph::build(&family).expect("benchmark graphs are valid")
}

/// One seeded disorder draw at coupling `lambda`.
pub fn draw(graph: &Graph, lambda: f64, seed: u64) -> DisorderRealization {
    DisorderModel::uniform(lambda).expect("valid coupling").sample(graph, seed, 0)
}

pub fn operator<'g>(graph: &'g Graph, lambda: f64, seed: u64) -> AndersonOperator<'g> {
    AndersonOperator::new(graph, &draw(graph, lambda, seed), lambda).expect("operator builds")
}

pub fn energy(e: f64, eta: f64) -> ComplexEnergy {
    ComplexEnergy::new(e, eta).expect("non-zero imaginary part")
}
