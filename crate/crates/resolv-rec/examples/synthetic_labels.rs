//! Proxy-label synthesis: cluster free-text resolutions when no resolution
//! ids exist, then sweep k by silhouette score.
//!
//! ```sh
//! cargo run --release --example synthetic_labels
//! ```

use std::collections::BTreeMap;

use resolv_rec::cluster::{assign_resolution_ids, labeling_silhouette, ClusterMethod};
use resolv_rec::synth::{generate, SynthConfig};

fn main() -> resolv_rec::Result<()> {
    // Tickets with resolution text but no resolution ids.
    let corpus = generate(&SynthConfig {
        n_tickets: 300,
        n_classes: 6,
        with_resolution_ids: false,
        ..SynthConfig::default()
    });

    let labeling = assign_resolution_ids(&corpus, ClusterMethod::Kmeans, 6, 42)?;
    let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
    for label in labeling.assignment.values() {
        *sizes.entry(label).or_default() += 1;
    }
    println!("k = {} cluster sizes (largest first):", labeling.k);
    for (label, size) in &sizes {
        println!("  {label}: {size} tickets");
    }

    println!("silhouette sweep:");
    for k in 2..=9 {
        let candidate = assign_resolution_ids(&corpus, ClusterMethod::Kmeans, k, 42)?;
        let score = labeling_silhouette(&corpus, &candidate)?;
        println!("  k = {k}: silhouette {score:.4}");
    }
    Ok(())
}
