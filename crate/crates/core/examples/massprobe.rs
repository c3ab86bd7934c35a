use rotor_gpe_core::grid::GridSpec;
use rotor_gpe_core::groundstate::{mass_threshold, minimize_local, SolverConfig};
use rotor_gpe_core::physics::PhysicsParams;
use rotor_gpe_core::spectral::Spectral;

fn main() {
    let grid = GridSpec::new(2, 256, 4.5).unwrap();
    let params = PhysicsParams::new(2, 12.0, 6.0, 0.05).unwrap();
    let c0 = mass_threshold(&params, 2.0).unwrap();
    let c = 0.9 * c0;
    let cfg = SolverConfig::new(c, 2.0);
    let rep = minimize_local(grid, &params, &cfg).unwrap();
    println!("converged {} residual {:.3e} iters {}", rep.converged, rep.grad_residual, rep.iters);
    let spec = Spectral::for_grid(grid);
    for l in [2.0f64, 4.0, 8.0, 16.0] {
        match spec.dilate(&rep.field, l) {
            Ok(v) => {
                let m = v.mass();
                let closed = rotor_gpe_core::energy::tilde_i(&rep.field, l.ln(), &params).unwrap();
                let raw = rotor_gpe_core::energy::energy(&v, &params).unwrap().total;
                let vn = v.renormalized(c).unwrap();
                let renorm = rotor_gpe_core::energy::energy(&vn, &params).unwrap().total;
                println!(
                    "l = {l:5}: drift {:.3e}, tail {:.3e}, I closed {closed:.8e} raw rel {:.3e} renorm rel {:.3e}",
                    (m - c).abs() / c,
                    spec.tail_fraction(&v),
                    (raw - closed).abs() / closed.abs(),
                    (renorm - closed).abs() / closed.abs()
                );
            }
            Err(e) => println!("l = {l:5}: {e}"),
        }
    }
}
