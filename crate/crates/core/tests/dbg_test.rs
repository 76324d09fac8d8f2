use pecnet_core::data::{generate_synthetic_dataset, specimen_a_specs};
use pecnet_core::loss::{mae_grad, one_hot};
use pecnet_core::model::{Model, ModelConfig};
use std::time::Instant;

#[test]
fn bench_throughput() {
    let ds = generate_synthetic_dataset::<f64>(&specimen_a_specs(false), 4, 100, 0.01, 1).unwrap();
    let mut model: Model<f64> = Model::new(ModelConfig::default(), 1).unwrap();

    // warmup
    for s in ds.signals().iter().take(5) {
        let _ = model.forward_train(&s.values).unwrap();
    }

    let n = 200;
    let t0 = Instant::now();
    for i in 0..n {
        let s = &ds.signals()[i % ds.len()];
        let _ = model.predict(&s.values).unwrap();
    }
    let dt_pred = t0.elapsed().as_secs_f64() / n as f64;

    let t0 = Instant::now();
    for i in 0..n {
        let s = &ds.signals()[i % ds.len()];
        let out = model.forward_train(&s.values).unwrap();
        let gl = out.class_probabilities.as_ref().unwrap()
            .sub(&one_hot(s.class_label.unwrap(), 10).unwrap()).unwrap();
        let gr = mae_grad(out.depth_estimates.as_ref().unwrap(), s.depth_labels.as_ref().unwrap()).unwrap();
        let _ = model.backward(Some(&gl), Some(&gr)).unwrap();
    }
    let dt_full = t0.elapsed().as_secs_f64() / n as f64;

    println!("predict: {:.3} ms/sample ({:.2} GFLOP/s fwd est)", dt_pred * 1e3, 11.7e-3 / dt_pred / 1e3 * 2.0);
    println!("fwd+bwd: {:.3} ms/sample", dt_full * 1e3);
    println!("criterion-4 estimate: train 200ep x 1000 = {:.0}s + eval(every5) {:.0}s",
        200.0 * 1000.0 * dt_full, 40.0 * 2000.0 * dt_pred);
}
