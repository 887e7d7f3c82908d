// scratch probe: kernel-split vs padded spectral oracle
use ul_nse_core::fields::{Grid, ScalarField, VectorField};
use ul_nse_core::pressure::{grad_p_kernel_split, grad_p_spectral, SplitSpec, SymTensorField};

fn main() {
    let n = 128usize;
    let l = 16.0 * std::f64::consts::PI;
    let grid = Grid::new(n, l).unwrap();
    // compact smooth bump velocity-tensor, supported in r < 6 (margin ~ l/2 - 6 ~ 19)
    let bump = |p: [f64; 2]| {
        let r2 = (p[0] - 1.0) * (p[0] - 1.0) + p[1] * p[1];
        if r2 < 36.0 { ((1.0 - r2 / 36.0).powi(3)) * (0.7 * p[0]).cos() } else { 0.0 }
    };
    let bump2 = |p: [f64; 2]| {
        let r2 = p[0] * p[0] + (p[1] + 0.5) * (p[1] + 0.5);
        if r2 < 36.0 { ((1.0 - r2 / 36.0).powi(3)) * (0.5 * p[1]).sin() } else { 0.0 }
    };
    let w = SymTensorField::from_fn(grid, |p| [bump(p), 0.5 * bump2(p), -0.8 * bump(p)]).unwrap();

    // padded oracle: embed into 2L box, spectral, restrict
    let pg = Grid::new(2 * n, 2.0 * l).unwrap();
    let embed = |f: &ScalarField| {
        let mut v = ndarray::Array2::zeros((2 * n, 2 * n));
        for i in 0..n { for j in 0..n { v[[i + n / 2, j + n / 2]] = f.values()[[i, j]]; } }
        ScalarField::new(pg, v).unwrap()
    };
    let wp = SymTensorField::new(
        embed(w.component(0, 0)), embed(w.component(0, 1)), embed(w.component(0, 1)), embed(w.component(1, 1)),
    ).unwrap();
    let oracle_p = grad_p_spectral(&wp);
    let mut o1 = ndarray::Array2::zeros((n, n));
    let mut o2 = ndarray::Array2::zeros((n, n));
    for i in 0..n { for j in 0..n {
        o1[[i, j]] = oracle_p.component(0).values()[[i + n / 2, j + n / 2]];
        o2[[i, j]] = oracle_p.component(1).values()[[i + n / 2, j + n / 2]];
    } }
    let oracle = VectorField::new(ScalarField::new(grid, o1).unwrap(), ScalarField::new(grid, o2).unwrap()).unwrap();

    for r in [4.0, 8.0, 16.0] {
        let t0 = std::time::Instant::now();
        let split = grad_p_kernel_split(&w, SplitSpec::new(r)).unwrap();
        // relative L2 over inner half-box
        let mut num = 0.0; let mut den = 0.0;
        for i in 0..n { for j in 0..n {
            let p = grid.point(i, j);
            if p[0].abs() <= l / 4.0 && p[1].abs() <= l / 4.0 {
                let d1 = split.component(0).values()[[i, j]] - oracle.component(0).values()[[i, j]];
                let d2 = split.component(1).values()[[i, j]] - oracle.component(1).values()[[i, j]];
                num += d1 * d1 + d2 * d2;
                den += oracle.component(0).values()[[i, j]].powi(2) + oracle.component(1).values()[[i, j]].powi(2);
            }
        } }
        println!("R={r}: rel L2 err = {:.3e}  ({:.1}s)", (num / den).sqrt(), t0.elapsed().as_secs_f64());
    }
}
