use incompat::alpha::{iterative_alpha_max, SolverOptions};
use incompat::choi::ChoiPencil;
use incompat::presets::example2;
use incompat::spectrum::hermitian_eig;

fn main() {
    let (o1, o2) = example2();
    let obs = vec![o1, o2];
    let r = iterative_alpha_max(&obs, &SolverOptions::default()).unwrap();
    println!("alpha_max={}  final_lambda={}", r.alpha_max, r.final_lambda_min);
    let pencil = ChoiPencil::new(&obs, &r.beta).unwrap();
    let eig = hermitian_eig(&pencil.at(r.alpha_max)).unwrap();
    println!("recheck lambda_min at certificate: {:+.6e}", eig.lambda_min());
    println!("bottom values: {:?}", &eig.values[eig.values.len() - 5..]);
    for ((k, j), v) in &r.beta {
        if v.abs() > 1e-7 {
            println!("beta {k},{j} = {v}");
        }
    }
}
