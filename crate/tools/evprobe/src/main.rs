// Probe: finite-eps burst phases vs Kuzmak S/eps vs elliptic s + sigma0.
use p2bif_core::boutroux::{
    chi_of_tau, elliptic_leading_eval, sigma0_solve, solve_g3, s_of_tau,
};
use p2bif_core::equilibria::critical_point;
use p2bif_core::kuzmak::{kuzmak_eval, solve_k, solve_phase};
use p2bif_core::oracle::{solve_p2, EventKind, OracleConfig};
use p2bif_core::p1::{first_correction, integrate_p1_cfg, P1Config};

fn main() {
    let eps = 1e-3f64;
    let cd = critical_point();
    let ts = cd.t_star;

    let run = solve_p2(&OracleConfig::new(eps, ts - 1.0, ts + 0.21).with_tol(1e-11)).unwrap();
    let kc = solve_k().unwrap();
    let p = solve_g3().unwrap();
    let om = p.omega_real;

    let mut traj = integrate_p1_cfg(&P1Config {
        tau1: 40.0,
        max_poles: 12,
        ..P1Config::default()
    })
    .unwrap();
    first_correction(&mut traj, 1e-10).unwrap();
    let sig0 = sigma0_solve(60.0, eps, &p, &traj.poles).unwrap();
    println!(
        "# sigma0 raw universal slope (current impl): {:.12}",
        sig0.states[0].sigma0_prime
    );
    println!("# 2J2/Om = {:.12}", 2.0 * p.j2_half / om);
    println!("# (28/25)*2J2/Om = {:.12}", 1.12 * 2.0 * p.j2_half / om);

    // Bursts: Peak events with u > 0.5 above the fold.
    let bursts: Vec<(f64, f64)> = run
        .events
        .iter()
        .filter(|e| e.kind == EventKind::Peak && e.t > ts + 0.03 && e.u > 0.5)
        .map(|e| (e.t, e.u))
        .collect();
    println!("# bursts: {}", bursts.len());

    println!("#  t-t*      tau      chi     S/eps       dev_IV     sigma0_emp  (k)");
    let mut k_prev: Option<f64> = None;
    for &(tb, _) in &bursts {
        let eta = tb - ts;
        let tau = eta * eps.powf(-0.8);
        let sigma = s_of_tau(tau);
        let chi = chi_of_tau(eps, tau);
        let table1 = solve_phase(&[tb], &kc).unwrap();
        let s_eps = table1.states[0].s / eps;
        // Kuzmak phase defect from the half-lattice
        let kk = (s_eps / om - 0.5).round();
        let dev_iv = s_eps - (kk + 0.5) * om;
        // empirical sigma0: continuity-unwrapped lattice index
        let k_emp = match k_prev {
            None => ((s_eps / om) - 0.5).round(),
            Some(kp) => kp + 1.0,
        };
        k_prev = Some(k_emp);
        let sig0_emp = (k_emp + 0.5) * om - sigma;
        println!(
            "{:9.5} {:8.3} {:7.3} {:11.5} {:+10.5} {:+10.5}  {}",
            eta, tau, chi, s_eps, dev_iv, sig0_emp, k_emp
        );
    }

    // slope fit of sigma0_emp vs chi over the lower-chi half
    let pts: Vec<(f64, f64)> = bursts
        .iter()
        .scan(None::<f64>, |kp, &(tb, _)| {
            let eta = tb - ts;
            let tau = eta * eps.powf(-0.8);
            let sigma = s_of_tau(tau);
            let chi = chi_of_tau(eps, tau);
            let table1 = solve_phase(&[tb], &kc).unwrap();
            let s_eps = table1.states[0].s / eps;
            let k_emp = match *kp {
                None => ((s_eps / om) - 0.5).round(),
                Some(k) => k + 1.0,
            };
            *kp = Some(k_emp);
            Some((chi, (k_emp + 0.5) * om - sigma))
        })
        .collect();
    if pts.len() >= 4 {
        let n = pts.len() / 2;
        let (c0, s0) = pts[1];
        let (c1, s1v) = pts[n];
        println!("# emp slope (chi {:.2} -> {:.2}): {:.6}", c0, c1, (s1v - s0) / (c1 - c0));
        let (c2, s2v) = *pts.last().unwrap();
        println!("# emp slope (chi {:.2} -> {:.2}): {:.6}", c1, c2, (s2v - s1v) / (c2 - c1));
    }

    // mid-valley comparison: oracle vs kuzmak vs elliptic(bare/shifted)
    let grid: Vec<f64> = (1..=40).map(|i| ts + 0.005 * i as f64).collect();
    let table = solve_phase(&grid, &kc).unwrap();
    println!("#  t-t*    u_oracle    u_IV        u_IInf_bare  u_IInf_shift");
    for w in bursts.windows(2) {
        let tm = 0.5 * (w[0].0 + w[1].0);
        let eta = tm - ts;
        if eta < 0.055 {
            continue;
        }
        let uo = run.eval(tm).map(|x| x.0).unwrap_or(f64::NAN);
        let uiv = kuzmak_eval(tm, eps, &table).map(|s| s.u).unwrap_or(f64::NAN);
        let ub = elliptic_leading_eval(tm, eps, &p, None)
            .map(|s| s.u)
            .unwrap_or(f64::NAN);
        let ush = elliptic_leading_eval(tm, eps, &p, Some(&sig0))
            .map(|s| s.u)
            .unwrap_or(f64::NAN);
        println!(
            "{:8.5} {:+11.6} {:+11.6} {:+12.6} {:+12.6}",
            eta, uo, uiv, ub, ush
        );
    }
}
