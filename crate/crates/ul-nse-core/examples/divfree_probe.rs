// probe: spectral div residual of truncate_divfree on sinusoidal fields
use std::f64::consts::PI;
use ul_nse_core::divfree::{divfree_check, truncate_divfree};
use ul_nse_core::fields::{Grid, VectorField};

fn main() {
    for (n, l) in [(256usize, 80.0), (512, 160.0), (512, 64.0 * PI), (1024, 64.0 * PI)] {
        let grid = Grid::new(n, l).unwrap();
        let u = VectorField::from_fn(grid, |p| {
            [
                (2.0 * PI * 5.0 * p[1] / l).sin(),
                (2.0 * PI * 3.0 * p[0] / l).cos(),
            ]
        })
        .unwrap();
        for nr in [8.0, 16.0, 32.0] {
            if 2.0 * nr > l / 2.0 { continue; }
            let t0 = std::time::Instant::now();
            let tr = truncate_divfree(&u, nr).unwrap();
            let d = divfree_check(&tr);
            println!("n={n} L={l:.0} h={:.3} N={nr}: div = {d:.3e}  ({:.1}s)", grid.spacing(), t0.elapsed().as_secs_f64());
        }
    }
}
