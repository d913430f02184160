use incompat::choi::{BetaMap, ChoiPencil};
use incompat::presets::example2;
use incompat::spectrum::hermitian_eig;

fn main() {
    let (o1, o2) = example2();
    let obs = vec![o1, o2];
    let kxi = ("XI".parse().unwrap(), "ZZ".parse().unwrap());
    let kzy = ("ZY".parse().unwrap(), "ZZ".parse().unwrap());
    for &alpha in &[0.9261, 0.9265, 0.927, 0.9272, 0.9275] {
        let mut lams = Vec::new();
        for ci in 0..=30 {
            let c = ci as f64 * 0.01;
            let mut beta = BetaMap::new();
            beta.insert(kxi.clone(), -c);
            beta.insert(kzy.clone(), c);
            let pencil = ChoiPencil::new(&obs, &beta).unwrap();
            let eig = hermitian_eig(&pencil.at(alpha)).unwrap();
            lams.push((c, eig.lambda_min()));
        }
        let feas: Vec<f64> = lams.iter().filter(|(_, l)| *l >= 0.0).map(|(c, _)| *c).collect();
        let best = lams.iter().cloned().fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        println!(
            "alpha={alpha:.4}  feasible c in [{:?}, {:?}]  argmax c={:.3} lam={:+.3e}",
            feas.first(),
            feas.last(),
            best.0,
            best.1
        );
    }
    // fine scan near the pinch
    for &alpha in &[0.9270, 0.9271, 0.9272, 0.9273] {
        let mut best = (0.0, f64::NEG_INFINITY);
        for ci in 0..=300 {
            let c = ci as f64 * 0.001;
            let mut beta = BetaMap::new();
            beta.insert(kxi.clone(), -c);
            beta.insert(kzy.clone(), c);
            let pencil = ChoiPencil::new(&obs, &beta).unwrap();
            let eig = hermitian_eig(&pencil.at(alpha)).unwrap();
            if eig.lambda_min() > best.1 {
                best = (c, eig.lambda_min());
            }
        }
        println!("alpha={alpha:.4}  max over c: c={:.4} lam={:+.4e}", best.0, best.1);
    }
}
