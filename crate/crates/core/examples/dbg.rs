use incompat::alpha::{iterative_alpha_max, SolverOptions};
use incompat::observable::random_observable;
use incompat::presets::{example1, z_pair};
use incompat::qnn::{train, TrainingConfig};
use incompat::rng::derive_seed;

fn main() {
    let opts = SolverOptions::default();

    let (e1, e2) = example1();
    let cfg = TrainingConfig { seed: 7, ..TrainingConfig::default() };
    let r = train(&e1, &e2, &cfg).unwrap();
    let (_, lo, _) = r.loss_history.last().unwrap();
    println!("example1: alpha={:.6} L_O={:.3e} (target 0.7071, L_O<=1e-4)", r.alpha, lo);

    let (z1, z2) = z_pair();
    let r = train(&z1, &z2, &cfg).unwrap();
    let (_, lo, _) = r.loss_history.last().unwrap();
    println!("z pair:   alpha={:.6} L_O={:.3e} (need alpha>=0.98)", r.alpha, lo);

    let mut worst4 = 0.0f64;
    let mut lo2s = Vec::new();
    let mut lo4s = Vec::new();
    for s in 0..10u64 {
        let o1 = random_observable(2, derive_seed(s, 0xA1)).unwrap();
        let o2 = random_observable(2, derive_seed(s, 0xA2)).unwrap();
        let sol = iterative_alpha_max(&[o1.clone(), o2.clone()], &opts).unwrap();

        let cfg4 = TrainingConfig { seed: s, ..TrainingConfig::default() };
        let t4 = train(&o1, &o2, &cfg4).unwrap();
        let (_, lo4, _) = *t4.loss_history.last().unwrap();

        let cfg2 = TrainingConfig { d_a: 2, seed: s, ..TrainingConfig::default() };
        let t2 = train(&o1, &o2, &cfg2).unwrap();
        let (_, lo2, _) = *t2.loss_history.last().unwrap();

        let d4 = (t4.alpha - sol.alpha_max).abs();
        worst4 = worst4.max(d4);
        lo4s.push(lo4);
        lo2s.push(lo2);
        println!(
            "s={s}: solver={:.4} | d4 alpha={:.4} d={:.4} L_O={:.2e} | d2 alpha={:.4} L_O={:.2e}",
            sol.alpha_max, t4.alpha, d4, lo4, t2.alpha, lo2
        );
    }
    lo4s.sort_by(f64::total_cmp);
    lo2s.sort_by(f64::total_cmp);
    let med4 = 0.5 * (lo4s[4] + lo4s[5]);
    let med2 = 0.5 * (lo2s[4] + lo2s[5]);
    println!("worst |alpha_t - alpha_s| (d4) = {worst4:.4} (need <= 0.02)");
    println!("median L_O: d2 = {med2:.3e}, d4 = {med4:.3e} (need d2 > d4)");
}
