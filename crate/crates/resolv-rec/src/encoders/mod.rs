//! Neural encoders: the MLP substrate, the Siamese triplet-loss encoder and
//! the dual-matrix index-embedding model.

pub mod indexembed;
pub mod mlp;
pub mod siamese;

pub use indexembed::{indexembed_predict, indexembed_train, IndexEmbedConfig, IndexEmbedModel};
pub use mlp::Mlp;
pub use siamese::{
    augment, siamese_features, siamese_predict, siamese_train, siamese_train_with, PrototypeSet,
    SiameseConfig, SiameseOutcome,
};

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::indexembed::{indexembed_train, pair_loss_grads, IndexEmbedConfig};
    use super::siamese::{augment, siamese_predict, siamese_train, triplet_loss, SiameseConfig};
    use super::*;
    use crate::error::Error;

    #[test]
    fn triplet_loss_inactive_hinge() {
        let a = vec![1.0, 0.0];
        let n = vec![0.0, 0.0]; // |a-n|^2 = 1
        let (loss, ga, gp, gn) = triplet_loss(&a, &a, &n, 0.2);
        assert_eq!(loss, 0.0);
        assert!(ga.iter().chain(&gp).chain(&gn).all(|&g| g == 0.0));
    }

    #[test]
    fn triplet_loss_arithmetic() {
        let a = vec![1.0, 0.0];
        let p = vec![0.0, 0.0]; // |a-p|^2 = 1
        let (loss, _, _, _) = triplet_loss(&a, &p, &a, 0.2);
        assert!((loss - 1.2).abs() < 1e-12);
    }

    #[test]
    fn triplet_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let dim = rng.random_range(2..=8);
            let rand_vec = |rng: &mut ChaCha8Rng| -> Vec<f64> {
                (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
            };
            let a = rand_vec(&mut rng);
            let p = rand_vec(&mut rng);
            let n = rand_vec(&mut rng);
            let margin = rng.random_range(0.05..0.5);
            let (loss, ga, gp, gn) = triplet_loss(&a, &p, &n, margin);
            if loss <= 1e-3 {
                continue; // hinge inactive or at the kink
            }
            let h = 1e-5;
            let check = |which: usize, analytic: &[f64]| {
                for i in 0..dim {
                    let perturb = |delta: f64| {
                        let (mut a2, mut p2, mut n2) = (a.clone(), p.clone(), n.clone());
                        [&mut a2, &mut p2, &mut n2][which][i] += delta;
                        triplet_loss(&a2, &p2, &n2, margin).0
                    };
                    let fd = (perturb(h) - perturb(-h)) / (2.0 * h);
                    let scale = fd.abs().max(analytic[i].abs()).max(1e-6);
                    assert!(
                        (fd - analytic[i]).abs() / scale < 1e-4,
                        "arg {which} dim {i}: fd={fd} analytic={}",
                        analytic[i]
                    );
                }
            };
            check(0, &ga);
            check(1, &gp);
            check(2, &gn);
        }
    }

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn augment_single_token_forced() {
        let tokens = toks(&["network"]);
        let top = toks(&["signal", "tower"]);
        let out = augment(&tokens, &top, &BTreeSet::new(), 3);
        assert_eq!(out.len(), 1);
        assert!(top.contains(&out[0]), "replaced with {:?}", out[0]);
    }

    #[test]
    fn augment_deterministic_and_bounded() {
        let tokens = toks(&["billing", "invoice", "charge", "payment", "dispute"]);
        let top = toks(&["refund", "credit"]);
        let a = augment(&tokens, &top, &BTreeSet::new(), 9);
        let b = augment(&tokens, &top, &BTreeSet::new(), 9);
        assert_eq!(a, b);
        assert_eq!(a.len(), tokens.len());
        let kept = a.iter().filter(|t| tokens.contains(t)).count();
        assert!(kept >= tokens.len() - 3, "at most 3 replacements");
        assert!(kept > 0, "token sets before/after overlap");
    }

    #[test]
    fn augment_no_replaceable_tokens() {
        let tokens = toks(&["the", "and"]);
        let stop: BTreeSet<String> = tokens.iter().cloned().collect();
        let out = augment(&tokens, &toks(&["x"]), &stop, 1);
        assert_eq!(out, tokens);
    }

    /// 3 labels with disjoint feature supports.
    fn toy_labeled_features(per_label: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<String>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for label in 0..3usize {
            for _ in 0..per_label {
                let mut f = vec![0.0; 12];
                for d in 0..4 {
                    f[label * 4 + d] = 1.0 + rng.random_range(-0.2..0.2);
                }
                features.push(f);
                labels.push(format!("RES{label}"));
            }
        }
        (features, labels)
    }

    #[test]
    fn siamese_separates_disjoint_labels() {
        let (features, labels) = toy_labeled_features(6, 5);
        let config = SiameseConfig {
            epochs: 50,
            seed: 3,
            ..Default::default()
        };
        let outcome = siamese_train(&features, &labels, &config).unwrap();
        let embeddings: Vec<Vec<f64>> = features
            .iter()
            .map(|f| outcome.mlp.forward(f).unwrap())
            .collect();
        let mut intra = (0.0, 0usize);
        let mut inter = (0.0, 0usize);
        for i in 0..embeddings.len() {
            for j in (i + 1)..embeddings.len() {
                let d: f64 = embeddings[i]
                    .iter()
                    .zip(&embeddings[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if labels[i] == labels[j] {
                    intra.0 += d;
                    intra.1 += 1;
                } else {
                    inter.0 += d;
                    inter.1 += 1;
                }
            }
        }
        let mean_intra = intra.0 / intra.1 as f64;
        let mean_inter = inter.0 / inter.1 as f64;
        assert!(
            mean_intra < mean_inter,
            "intra {mean_intra} vs inter {mean_inter}"
        );
    }

    #[test]
    fn siamese_deterministic_and_prototypes_unit_norm() {
        let (features, labels) = toy_labeled_features(3, 8);
        let config = SiameseConfig {
            epochs: 5,
            seed: 17,
            ..Default::default()
        };
        let a = siamese_train(&features, &labels, &config).unwrap();
        let b = siamese_train(&features, &labels, &config).unwrap();
        assert_eq!(a.mlp, b.mlp);
        assert_eq!(a.prototypes, b.prototypes);
        for proto in a.prototypes.prototypes.values() {
            let norm = proto.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
        }
    }


    #[test]
    fn siamese_fine_tune_freezes_lower_layers() {
        let (features, labels) = toy_labeled_features(3, 2);
        // A large margin keeps the hinge active so every layer that is
        // allowed to move actually receives updates.
        let config = SiameseConfig {
            epochs: 5,
            seed: 21,
            fine_tune: true,
            margin: 2.0,
            ..Default::default()
        };
        let outcome = siamese_train(&features, &labels, &config).unwrap();
        let fresh = Mlp::new(features[0].len(), 21);
        for l in 0..3 {
            assert_eq!(outcome.mlp.layers[l].weights, fresh.layers[l].weights);
        }
        for l in 3..6 {
            assert_ne!(outcome.mlp.layers[l].weights, fresh.layers[l].weights);
        }
    }

    #[test]
    fn siamese_single_label_is_infeasible() {
        let features = vec![vec![1.0; 4]; 3];
        let labels = vec!["RES0".to_string(); 3];
        assert!(matches!(
            siamese_train(&features, &labels, &SiameseConfig::default()),
            Err(Error::SingleLabel(1))
        ));
    }

    #[test]
    fn siamese_predict_is_distribution_with_nearest_prototype_argmax() {
        let (features, labels) = toy_labeled_features(4, 2);
        let config = SiameseConfig {
            epochs: 30,
            seed: 6,
            ..Default::default()
        };
        let outcome = siamese_train(&features, &labels, &config).unwrap();
        let probs = siamese_predict(&outcome.mlp, &outcome.prototypes, &features[0]).unwrap();
        let sum: f64 = probs.iter().map(|(_, p)| p).sum();
        assert!((sum - 1.0).abs() < 1e-9);
        // labels come out in ascending order
        let ids: Vec<&str> = probs.iter().map(|(l, _)| l.as_str()).collect();
        assert_eq!(ids, vec!["RES0", "RES1", "RES2"]);
    }

    #[test]
    fn siamese_predict_single_prototype() {
        let mlp = Mlp::new(4, 0);
        let mut prototypes = std::collections::BTreeMap::new();
        prototypes.insert("ONLY".to_string(), vec![1.0, 0.0]);
        let set = PrototypeSet { prototypes };
        let probs = siamese_predict(&mlp, &set, &[0.1; 4]).unwrap();
        assert_eq!(probs.len(), 1);
        assert!((probs[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn indexembed_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let dim = rng.random_range(2..=8);
            let rand_vec = |rng: &mut ChaCha8Rng| -> Vec<f64> {
                (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
            };
            let u = rand_vec(&mut rng);
            let v_pos = rand_vec(&mut rng);
            let v_neg = rand_vec(&mut rng);
            let loss_at = |u: &[f64], vp: &[f64], vn: &[f64]| {
                pair_loss_grads(u, vp, &[vn]).0
            };
            let (_, gu, gv_pos, gv_negs) = pair_loss_grads(&u, &v_pos, &[v_neg.as_slice()]);
            let h = 1e-5;
            for i in 0..dim {
                let mut u2 = u.clone();
                u2[i] += h;
                let mut u3 = u.clone();
                u3[i] -= h;
                let fd = (loss_at(&u2, &v_pos, &v_neg) - loss_at(&u3, &v_pos, &v_neg)) / (2.0 * h);
                let scale = fd.abs().max(gu[i].abs()).max(1e-6);
                assert!((fd - gu[i]).abs() / scale < 1e-4, "gu[{i}]");

                let mut vp2 = v_pos.clone();
                vp2[i] += h;
                let mut vp3 = v_pos.clone();
                vp3[i] -= h;
                let fd = (loss_at(&u, &vp2, &v_neg) - loss_at(&u, &vp3, &v_neg)) / (2.0 * h);
                let scale = fd.abs().max(gv_pos[i].abs()).max(1e-6);
                assert!((fd - gv_pos[i]).abs() / scale < 1e-4, "gv_pos[{i}]");

                let mut vn2 = v_neg.clone();
                vn2[i] += h;
                let mut vn3 = v_neg.clone();
                vn3[i] -= h;
                let fd = (loss_at(&u, &v_pos, &vn2) - loss_at(&u, &v_pos, &vn3)) / (2.0 * h);
                let scale = fd.abs().max(gv_negs[0][i].abs()).max(1e-6);
                assert!((fd - gv_negs[0][i]).abs() / scale < 1e-4, "gv_neg[{i}]");
            }
        }
    }

    fn toy_pairs() -> Vec<(String, String)> {
        vec![
            ("INC0".into(), "RESA".into()),
            ("INC1".into(), "RESA".into()),
            ("INC2".into(), "RESA".into()),
            ("INC3".into(), "RESB".into()),
            ("INC4".into(), "RESB".into()),
        ]
    }

    #[test]
    fn indexembed_learns_toy_mapping() {
        let config = IndexEmbedConfig {
            dim: 16,
            epochs: 200,
            seed: 2,
            ..Default::default()
        };
        let model = indexembed_train(&toy_pairs(), &config).unwrap();
        for (issue, resolution) in toy_pairs() {
            let iu = model.issue_row(&issue).unwrap();
            let pos = model.resolution_row(&resolution).unwrap();
            let neg = 1 - pos; // only two resolutions
            assert!(
                model.pair_score(iu, pos) > model.pair_score(iu, neg),
                "{issue}: pos {} <= neg {}",
                model.pair_score(iu, pos),
                model.pair_score(iu, neg)
            );
        }
    }

    #[test]
    fn indexembed_deterministic() {
        let config = IndexEmbedConfig {
            dim: 8,
            epochs: 10,
            seed: 5,
            ..Default::default()
        };
        let a = indexembed_train(&toy_pairs(), &config).unwrap();
        let b = indexembed_train(&toy_pairs(), &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn indexembed_single_resolution_is_infeasible() {
        let pairs = vec![("INC0".to_string(), "RESA".to_string())];
        assert!(matches!(
            indexembed_train(&pairs, &IndexEmbedConfig::default()),
            Err(Error::SingleLabel(1))
        ));
    }

    #[test]
    fn indexembed_predict_known_and_cold_start() {
        let config = IndexEmbedConfig {
            dim: 16,
            epochs: 200,
            seed: 2,
            ..Default::default()
        };
        let model = indexembed_train(&toy_pairs(), &config).unwrap();
        let train_embeddings: Vec<(String, Vec<f64>)> = vec![
            ("INC0".into(), vec![1.0, 0.0]),
            ("INC3".into(), vec![0.0, 1.0]),
        ];
        // known issue: its paired resolution ranks first
        let scores = indexembed_predict(&model, Some("INC0"), &[0.0, 0.0], &train_embeddings).unwrap();
        let sum: f64 = scores.iter().map(|(_, s)| s).sum();
        assert!((sum - 1.0).abs() < 1e-9);
        let best = scores
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        assert_eq!(best.0, "RESA");
        // cold start: identical text embedding picks the matching neighbor
        let scores =
            indexembed_predict(&model, Some("UNSEEN"), &[0.0, 1.0], &train_embeddings).unwrap();
        let best = scores
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        assert_eq!(best.0, "RESB");
    }
}
