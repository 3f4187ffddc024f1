use hpimc_core::checks::dominant_frequency;
use hpimc_core::grid::UniformGrid;
use hpimc_core::hamiltonian::{assemble_dense, eigendecompose, Potential};
use hpimc_core::propagators::{ImagKinetic, RealKinetic, StepScheme};
use hpimc_core::tcf::{exact_tcf, trotterized_tcf, Observable};

const MASS: f64 = 1836.0;
const WB: f64 = 2.2781675e-3;
const V0: f64 = 6.8345025e-3;
const BETA: f64 = 902.2142322129819;
const TMAX: f64 = 4.5e4;

fn times(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 * TMAX / (n - 1) as f64).collect()
}

fn curve(n_qubits: u32, n_steps: usize, ell: usize, ts: &[f64]) -> hpimc_core::tcf::TcfSeries {
    let grid = UniformGrid::new(30.0, n_qubits).unwrap();
    let pot = Potential::double_well(MASS, WB, V0).unwrap();
    let h = assemble_dense(&grid, &pot, MASS).unwrap();
    let spec = eigendecompose(&h).unwrap();
    let z = spec.partition_function(BETA);
    let scheme = StepScheme::new(
        RealKinetic::Fourier,
        ImagKinetic::Dvr { ell },
        0.0,
        BETA,
        n_steps,
    )
    .unwrap();
    let a = Observable::Position;
    trotterized_tcf(&grid, &pot, MASS, &scheme, &a, &a, ts, z, None)
        .unwrap()
        .normalized_by_max_abs()
}

#[test]
#[ignore]
fn probe_fig1() {
    let ts = times(100);
    let grid8 = UniformGrid::new(30.0, 8).unwrap();
    let pot = Potential::double_well(MASS, WB, V0).unwrap();
    let h8 = assemble_dense(&grid8, &pot, MASS).unwrap();
    let spec8 = eigendecompose(&h8).unwrap();
    let a = Observable::Position;
    let exact = exact_tcf(&spec8, &a, &a, BETA, &ts, &grid8)
        .unwrap()
        .normalized_by_max_abs();
    let exact_re: Vec<f64> = exact.values().iter().map(|v| v.re).collect();
    let f_exact = dominant_frequency(&ts, &exact_re);
    println!("exact dominant angular freq = {f_exact:.6e} (vib gap 2.8597e-3)");

    let t0 = std::time::Instant::now();
    let approx80 = curve(8, 80, 256, &ts);
    println!("n=8 N=80 built in {:?}", t0.elapsed());
    let dev80 = approx80.max_deviation_from(&exact).unwrap();
    println!("c1: n=8 N=80 deviation = {dev80:.4}  (need <= 0.05)");

    let approx10 = curve(8, 10, 256, &ts);
    let dev10 = approx10.max_deviation_from(&exact).unwrap();
    let re10: Vec<f64> = approx10.values().iter().map(|v| v.re).collect();
    let f10 = dominant_frequency(&ts, &re10);
    println!(
        "c1: n=8 N=10 deviation = {dev10:.4} (need > dev80), freq = {f10:.6e} rel err {:.4}",
        (f10 - f_exact).abs() / f_exact
    );

    for (n, nst, ell, label) in [
        (7u32, 80usize, 128usize, "c2 n=7"),
        (6, 80, 64, "c2 n=6"),
        (5, 80, 32, "c2 n=5"),
        (6, 40, 4, "c4 n=6 N=40 l=4"),
    ] {
        let c = curve(n, nst, ell, &ts);
        let dev = c.max_deviation_from(&exact).unwrap();
        println!("{label}: deviation = {dev:.4}");
    }

    let c16 = curve(7, 80, 16, &ts);
    let c128 = curve(7, 80, 128, &ts);
    let dev = c16.max_deviation_from(&c128).unwrap();
    println!("c3: n=7 l=16 vs l=128 deviation = {dev:.6} (need <= 0.01)");
}
