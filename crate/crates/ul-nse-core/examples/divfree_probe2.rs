use std::f64::consts::PI;
use ul_nse_core::divfree::{divfree_check, truncate_divfree};
use ul_nse_core::fields::{Grid, VectorField};
use ul_nse_core::weights::ul_norm_default;

fn main() {
    let (n, l) = (2048usize, 132.0);
    let grid = Grid::new(n, l).unwrap();
    let u = VectorField::from_fn(grid, |p| {
        [
            (2.0 * PI * 16.0 * p[1] / l).sin(),
            (2.0 * PI * 12.0 * p[0] / l).cos(),
        ]
    })
    .unwrap();
    let ub = ul_norm_default(&u, 2.0, 1.0).unwrap();
    println!("||u||_b = {ub:.4}");
    for nr in [8.0, 16.0, 32.0] {
        let t0 = std::time::Instant::now();
        let tr = truncate_divfree(&u, nr).unwrap();
        let d = divfree_check(&tr);
        let tb = ul_norm_default(&tr, 2.0, 1.0).unwrap();
        // inner/outer checks
        let mut inner: f64 = 0.0;
        let mut outer: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let dd = grid.distance(grid.point(i, j), [0.0, 0.0]);
                let d1 = tr.component(0).values()[[i, j]] - u.component(0).values()[[i, j]];
                let d2 = tr.component(1).values()[[i, j]] - u.component(1).values()[[i, j]];
                if dd <= nr { inner = inner.max(d1.hypot(d2)); }
                if dd >= 2.0 * nr { outer = outer.max(tr.magnitude_at(i, j)); }
            }
        }
        println!("N={nr}: div {d:.2e} inner {inner:.2e} outer {outer:.2e} ampl {:.4} ({:.0}s)", tb / ub, t0.elapsed().as_secs_f64());
    }
}
