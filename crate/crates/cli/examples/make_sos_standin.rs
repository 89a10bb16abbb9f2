use grnbat_core::*;
fn main() {
    // targets repressed by lexA (col 1); recA (col 3) activates lexA
    let taus = [12.0, 9.0, 16.0, 10.0, 14.0, 18.0, 11.0, 15.0];
    let betas = [2.5, 1.0, 3.0, 3.5, 2.0, 1.5, 2.5, 2.0];
    let genes: Vec<GeneParams> = (0..8)
        .map(|i| {
            let mut w = vec![0.0; 8];
            w[1] = if i == 1 { -4.0 } else { -8.0 };
            if i == 1 {
                w[3] = 7.0;
            }
            GeneParams::new(w, betas[i], taus[i])
        })
        .collect();
    let model = GrnModel::new(genes, 1.0).unwrap();
    let init = [0.02, 0.0, 0.03, 0.05, 0.04, 0.01, 0.03, 0.02];
    let s = model.simulate(&init, 50).unwrap();
    let d = Dataset::new(vec![s]).unwrap();
    let d = add_noise(&d, NoiseSpec { percent: 5.0, seed: 20130501 }).unwrap();
    let scale = [310.0, 2400.0, 150.0, 980.0, 420.0, 95.0, 260.0, 130.0];
    let names: Vec<String> = SOS_GENES.iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<f64>> = d.series()[0]
        .rows()
        .map(|r| r.iter().zip(&scale).map(|(v, k)| (v * k * 100.0).round() / 100.0).collect())
        .collect();
    let t = ExpressionTable::new(names, (0..50).map(|i| (i * 6) as f64).collect(), rows).unwrap();
    print!("{}", t.to_delimited(Delimiter::Tab));
}
