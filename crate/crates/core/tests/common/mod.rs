#![allow(dead_code)]

use grag::learn::mlp::{Activation, Mlp};
use grag::{Graph, ResourceDistribution};
use rand::Rng;

/// Random digraph with each edge present with probability `density`; a row
/// that comes out empty gets its self-loop.
pub fn random_graph<R: Rng + ?Sized>(n: usize, density: f64, rng: &mut R) -> Graph {
    let mut rows = vec![vec![0u8; n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        for cell in row.iter_mut() {
            *cell = u8::from(rng.gen_bool(density));
        }
        if row.iter().all(|&c| c == 0) {
            row[i] = 1;
        }
    }
    Graph::from_rows(&rows).unwrap()
}

/// `m` resources dropped on uniformly chosen nodes.
pub fn random_distribution<R: Rng + ?Sized>(n: usize, m: u32, rng: &mut R) -> ResourceDistribution {
    let mut counts = vec![0u32; n];
    for _ in 0..m {
        counts[rng.gen_range(0..n)] += 1;
    }
    ResourceDistribution::new(counts)
}

/// The paper4 graph, rings of 3 to 5 nodes and 50 random digraphs.
pub fn graph_suite<R: Rng + ?Sized>(rng: &mut R) -> Vec<Graph> {
    let mut suite = vec![grag::load_named_graph("paper4").unwrap()];
    suite.extend((3..=5).map(|n| Graph::directed_ring(n).unwrap()));
    suite.extend((0..50).map(|_| {
        let n = rng.gen_range(2..=5);
        random_graph(n, 0.5, rng)
    }));
    suite
}

/// Random network, input and weighted quadratic loss; returns the largest
/// relative error between backprop and central differences.
pub fn gradient_check<R: rand::Rng>(rng: &mut R) -> (Activation, f64) {
    let act = [Activation::Tanh, Activation::Relu, Activation::Identity][rng.gen_range(0..3)];
    let depth = rng.gen_range(1..=3);
    let sizes: Vec<usize> = (0..=depth).map(|_| rng.gen_range(1..=6)).collect();
    let mut net: Mlp<f64> = Mlp::new(&sizes, act, rng).unwrap();
    for p in net.params_mut() {
        *p += rng.gen_range(-0.1..0.1);
    }
    let x: Vec<f64> = (0..sizes[0]).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let w: Vec<f64> = (0..*sizes.last().unwrap()).map(|_| rng.gen_range(0.1..2.0)).collect();
    let c: Vec<f64> = (0..w.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let loss = |y: &[f64]| -> f64 { y.iter().zip(&w).zip(&c).map(|((y, w), c)| 0.5 * w * (y - c).powi(2)).sum() };
    let eval = net
        .eval_with_loss(&x, |y| {
            let g = y.iter().zip(&w).zip(&c).map(|((y, w), c)| w * (y - c)).collect();
            (loss(y), g)
        })
        .unwrap();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for i in 0..net.param_count() {
        let orig = net.params()[i];
        net.params_mut()[i] = orig + h;
        let up = loss(&net.forward(&x).unwrap());
        net.params_mut()[i] = orig - h;
        let down = loss(&net.forward(&x).unwrap());
        net.params_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let analytic = eval.gradients[i];
        let scale = numeric.abs().max(analytic.abs()).max(1e-6);
        worst = worst.max((numeric - analytic).abs() / scale);
    }
    (act, worst)
}
