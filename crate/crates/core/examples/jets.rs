//! Truncated Taylor series: arithmetic, derivatives and composition.

use osculum::jets::{IndexTable, Jet};

fn main() -> osculum::Result<()> {
    // Jets in two variables, kept to order 4, expanded at (0.3, -0.5).
    let table = IndexTable::shared(2, 4);
    let x = Jet::variable(&table, 0, 0.3);
    let y = Jet::variable(&table, 1, -0.5);

    let f = &(&x * &y).sin() + &(&x.powi(2) + &y.powi(2)).sqrt()?;
    println!("f = sin(xy) + |(x, y)| at (0.3, -0.5)");
    println!("  value        {:+.12}", f.value());
    for exps in [[1u8, 0], [0, 1], [2, 0], [1, 1], [2, 2], [0, 4]] {
        println!("  d^{exps:?} f  {:+.12}", f.derivative(&exps).unwrap());
    }

    // Chain rule: substitute (x, y) = (cos t, sin t) into g(x, y) = x y.
    let t_table = IndexTable::shared(1, 4);
    let t = Jet::variable(&t_table, 0, 0.2);
    let g = &Jet::variable(&table, 0, 0.2f64.cos()) * &Jet::variable(&table, 1, 0.2f64.sin());
    let along = g.compose(&[t.cos(), t.sin()])?;
    let direct = (&t * 2.0).sin().scale(0.5);
    println!("cos t sin t by composition vs. sin(2t)/2:");
    for k in 0..=4u8 {
        println!(
            "  d^{k}/dt^{k}: {:+.15} {:+.15}",
            along.derivative(&[k]).unwrap(),
            direct.derivative(&[k]).unwrap()
        );
    }
    Ok(())
}
