//! Fit the feature-based prior to simulated click statistics.
//!
//!     cargo run --release --example train_prior

use ebrank::letor::FeatureVector;
use ebrank::prior::{objective, train_prior, PriorModel, TrainConfig, TrainExample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> ebrank::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // click rate rises with the first feature and ignores the second
    let examples: Vec<TrainExample> = (0..500)
        .map(|_| {
            let x = vec![rng.random::<f64>(), rng.random::<f64>()];
            let rate = 0.05 + 0.6 * x[0];
            let n = rng.random_range(5..60u64);
            let clicks = (0..n).filter(|_| rng.random::<f64>() < rate).count() as f64;
            TrainExample {
                features: FeatureVector::new(x),
                n,
                clicks,
            }
        })
        .collect();

    let model = PriorModel::new(2, 5.0)?;
    let cfg = TrainConfig {
        learning_rate: 0.5,
        epochs: 500,
    };
    let out = train_prior(&model, &examples, &cfg)?;
    for (epoch, loss) in out.loss_history.iter().enumerate().step_by(100) {
        println!("epoch {epoch:>4}  loss {loss:.5}");
    }
    println!("best loss {:.5}, degenerate examples {}", out.best_loss, out.degenerate);
    println!("weights {:?}, bias {:.4}", out.model.weights, out.model.bias);
    for x0 in [0.0, 0.5, 1.0] {
        let mean = out.model.prior_mean(&FeatureVector::new(vec![x0, 0.5]))?;
        println!("prior mean at x0 = {x0}: {mean:.3} (true rate {:.3})", 0.05 + 0.6 * x0);
    }
    let (_, grad_w, grad_b) = objective(&out.model, &examples)?;
    println!("final gradient {grad_w:?} / {grad_b:.2e}");
    print!("{}", out.model.to_checkpoint());
    Ok(())
}
