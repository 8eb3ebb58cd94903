use ramsey_spillovers::ascent::*;
use ramsey_spillovers::*;

fn main() {
    let spec = ModelSpec {
        productivity: 1.0, alpha: 1.0, delta_k: 0.01, rho: 0.03, horizon: 1.0,
        omega: Omega { x_lo: 0.0, x_hi: 1.0 },
        diffusivity: DiffusionProfile::Quadratic { a: 1.0, b: 0.5 },
        initial_capital: InitialCapital::Affine { intercept: 1.0, slope: 1.0 },
        utility: UtilitySpec::PowerShifted { gamma: 2.0 / 3.0 },
    };
    let g = Grids::new(&spec.omega, 1.0, 41, 60).unwrap();
    let scheme = SchemeConfig::default();
    let base = AscentConfig { max_iterations: 120, ..AscentConfig::default() };
    let t0 = std::time::Instant::now();
    let f = trace_pareto_frontier(&spec, &g, &scheme, &[0.0, 0.05, 0.1, 0.2, 0.5, 1.0], &base).unwrap();
    println!("frontier in {:?}", t0.elapsed());
    for p in &f.points {
        let c = p.criteria.unwrap();
        println!(
            "theta={:<5} J1={:.6} J2={:.6} iters={:3} term={:?} dominated={}",
            p.theta, c.j1, c.j2, p.iterations, p.termination.unwrap(), p.dominated
        );
    }
    // concavity check: slopes of J1 vs J2 nonincreasing
    let pts: Vec<_> = f.points.iter().filter_map(|p| p.criteria).collect();
    for w in pts.windows(2) {
        let dj2 = w[1].j2 - w[0].j2;
        let dj1 = w[1].j1 - w[0].j1;
        if dj2.abs() > 1e-12 {
            println!("slope {:.6}", dj1 / dj2);
        } else {
            println!("slope (dj2~0)");
        }
    }
}
