use libm::erf;

fn main() {
    for x in [1.0f64, 2.0, 4.0, 5.0, 5.8, 6.0, 7.0, 8.0, 8.3, 8.4, 8.5, 10.0] {
        let e = erf(-x / std::f64::consts::SQRT_2);
        let p = 0.5 - 0.5 * e;
        println!("mu/sigma={x:5}  p={p:.17}  p==1: {}", p == 1.0);
    }
    println!("p at ratio 1 = {:.17}", 0.5 - 0.5 * erf(-1.0 / std::f64::consts::SQRT_2));
    println!("true Phi(1)  = 0.84134474606854293");
    println!("p at ratio -2 = {:.18e}", 0.5 - 0.5 * erf(2.0 / std::f64::consts::SQRT_2));
    println!("true Phi(-2)  = 2.2750131948179195e-2");
}
