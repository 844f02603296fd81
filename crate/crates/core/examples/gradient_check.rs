//! Compare the hand-derived sparse gradients against central finite
//! differences for every model configuration.
//!
//! ```bash
//! cargo run -p avlem --release --example gradient_check
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use avlem::model::Variant;
use avlem::training::{finite_difference_check, random_case};

fn main() -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for variant in Variant::ALL {
        let mut worst = 0.0f64;
        let mut checked = 0;
        for _ in 0..20 {
            let case = random_case(variant.config(8), &mut rng);
            let r = finite_difference_check(
                &case.model,
                &case.instance,
                &case.aspects,
                case.gamma,
                1e-4,
            )?;
            worst = worst.max(r.max_rel_error);
            checked += r.checked;
        }
        println!(
            "{:10} max relative error {worst:.2e} over {checked} coordinates",
            variant.name()
        );
    }
    Ok(())
}
