//! Dominance, the external archive, crowding and the front quality indicators.
//!
//! cargo run --example pareto_metrics

use gpmoead::pareto::{crowding_distance, fast_nondominated_sort};
use gpmoead::{c_metric, delta_metric, nds, FrontSnapshot, ParetoArchive, Result};

fn main() -> Result<()> {
    let points = [[1.0, 5.0], [2.0, 2.0], [3.0, 3.0], [5.0, 1.0], [4.0, 4.0], [0.5, 9.0]];
    for (rank, front) in fast_nondominated_sort(&points).iter().enumerate() {
        let members: Vec<[f64; 2]> = front.iter().map(|&i| points[i]).collect();
        println!("rank {rank}: {members:?} crowding {:?}", crowding_distance(&members));
    }

    let mut archive = ParetoArchive::new();
    for p in points {
        let kept = archive.update(p);
        println!("offer {p:?} -> {}", if kept { "kept" } else { "rejected" });
    }
    println!("archive {:?}", archive.objective_vectors());

    let a = FrontSnapshot::new("A", vec![[1.0, 5.0], [3.0, 3.0], [5.0, 1.0]])?;
    let b = FrontSnapshot::new("B", vec![[2.0, 2.0]])?;
    let even = FrontSnapshot::new("even", vec![[0.0, 2.0], [1.0, 1.0], [2.0, 0.0]])?;
    let uneven = FrontSnapshot::new("uneven", vec![[0.0, 3.0], [1.0, 2.0], [3.0, 0.0]])?;
    println!("C(A,B) = {:.4}  C(B,A) = {:.4}", c_metric(&a, &b)?, c_metric(&b, &a)?);
    println!("Delta(even) = {:.4}  Delta(uneven) = {:.4}", delta_metric(&even, None)?, delta_metric(&uneven, None)?);
    println!("NDS(A) = {}  NDS(B) = {}", nds(&a), nds(&b));
    Ok(())
}
