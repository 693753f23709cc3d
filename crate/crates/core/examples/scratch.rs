use tevd_core::dirset::DirectionSet;
use tevd_core::ray::Grid;
use tevd_core::sc::SolveSettings;
use tevd_core::spectrum::{self, Convention, ScanJob};

fn main() {
    // Full default-grid slab scan at a = 1.0: normalization and positivity.
    let job_a = |a: f64| ScanJob {
        set: DirectionSet::slab(2, 64, a).unwrap(),
        grid: Grid::new(1024),
        l_over_ell: 0.2,
        eps_hat: 0.0,
        settings: SolveSettings::default(),
        convention: Convention::Sqrt,
    };
    let table = spectrum::scan(&spectrum::default_t_grid(), &job_a(1.0));
    let min_rho = table.rows.iter().map(|r| r.rho).fold(f64::INFINITY, f64::min);
    println!(
        "slab a=1.0: failed={} norm={:.5} min rho={:+.3e}",
        table.failed_points(),
        table.normalization(),
        min_rho
    );

    // Contour independence a = 1 vs 2 on a coarse grid.
    let coarse = spectrum::t_grid(49, 3.0, 0.001, 0.999);
    let t1 = spectrum::scan(&coarse, &job_a(1.0));
    let t2 = spectrum::scan(&coarse, &job_a(2.0));
    let mut worst = (0.0f64, 0.0f64);
    for (r1, r2) in t1.rows.iter().zip(&t2.rows) {
        let d = (r1.rho - r2.rho).abs();
        if d > worst.1 {
            worst = (r1.t, d);
        }
    }
    println!("contour independence: max |rho(a=1)-rho(a=2)| = {:.2e} at T={:.3}", worst.1, worst.0);
}
