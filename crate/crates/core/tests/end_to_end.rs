use pcadepth_core::{
    build_prediction_matrix, evaluate_protocol, learn_bases, pca_complete, project_depth, solve, subsample_grid,
    ArConfig, ColourImage, DepthMap, Error, EvalMode, Reduction, Sample, SolveConfig, SparseSamples, TrainingCorpus,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: usize = 18;
const W: usize = 22;

/// Two-region scene: a vertical split at `cut`, each side a plane.
fn split_scene(rng: &mut ChaCha8Rng) -> (DepthMap, ColourImage) {
    let cut = rng.random_range(6..16);
    let near = rng.random_range(5.0..10.0);
    let far = rng.random_range(15.0..25.0);
    let slope = rng.random_range(-0.2..0.2);
    let mut depth = Vec::new();
    let mut grey = Vec::new();
    for r in 0..H {
        for c in 0..W {
            let left = c < cut;
            depth.push(if left { near } else { far } + slope * r as f64);
            grey.push(if left { 0.2 } else { 0.8 });
        }
    }
    (DepthMap::from_values(H, W, depth).unwrap(), ColourImage::from_gray(H, W, &grey).unwrap())
}

fn corpus(seed: u64, n: usize) -> TrainingCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    TrainingCorpus::new((0..n).map(|_| split_scene(&mut rng).0).collect()).unwrap()
}

#[test]
fn in_span_map_is_recovered_from_few_samples() {
    let c = corpus(1, 30);
    let basis = learn_bases(&c, 8).unwrap();
    // A linear combination of training maps lies in the span of a basis
    // capturing the whole corpus.
    let full = match learn_bases(&c, 30) {
        Err(Error::Rank { achievable, .. }) => learn_bases(&c, achievable).unwrap(),
        other => other.unwrap(),
    };
    assert!(full.k() > 8);
    let target = &c.maps()[4];
    let w = project_depth(&full, target).unwrap();
    let back = full.apply(&w);
    assert!(back.iter().zip(target.values()).all(|(a, b)| (a - b).abs() < 1e-8));

    let samples = subsample_grid(target, 3).unwrap();
    let (dense, fit) = pca_complete(&full, &samples).unwrap();
    assert!(fit.residual_norm < 1e-8);
    assert!(fit.rank <= samples.len());
    // With fewer columns the fit is a projection, never an exact match here.
    let (_, coarse) = pca_complete(&basis, &samples).unwrap();
    assert!(coarse.residual_norm >= fit.residual_norm);
    assert_eq!(dense.shape(), target.shape());
}

#[test]
fn guided_solution_is_certified_and_beats_the_start() {
    let c = corpus(2, 24);
    let basis = learn_bases(&c, 6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (truth, colour) = split_scene(&mut rng);
    let samples = subsample_grid(&truth, 4).unwrap();
    let q = build_prediction_matrix(&colour, &ArConfig::default()).unwrap();
    for reduction in [Reduction::Stacked, Reduction::Eliminated] {
        let cfg = SolveConfig { reduction, ..SolveConfig::default() };
        let s = solve(&samples, &q, &basis, &cfg).unwrap();
        assert!(s.normal_residual <= cfg.cg_tol);
        assert!(s.objective_value <= s.initial_objective);
        let w = basis.transpose_apply(s.depth.values());
        assert!(w.iter().zip(&s.weights).all(|(a, b)| (a - b).abs() < 1e-6 * (1.0 + a.abs())));

        let (pca, _) = pca_complete(&basis, &samples).unwrap();
        let g = evaluate_protocol(&truth, &s.depth, EvalMode::KittiSparse, 3.0).unwrap();
        let p = evaluate_protocol(&truth, &pca, EvalMode::KittiSparse, 3.0).unwrap();
        assert!(g.mre < p.mre, "guided {} vs pca {}", g.mre, p.mre);
        assert_eq!(g.evaluated_pixels, H * W);
    }
}

#[test]
fn holes_in_training_maps_are_filled_first() {
    let c = corpus(3, 10);
    let holed: Vec<DepthMap> = c
        .maps()
        .iter()
        .map(|m| {
            let valid: Vec<bool> = (0..H * W).map(|p| p % 7 != 0).collect();
            DepthMap::new(H, W, m.values().to_vec(), valid).unwrap()
        })
        .collect();
    let corpus = TrainingCorpus::new(holed).unwrap();
    assert!(learn_bases(&corpus, 4).is_err());
    let basis = learn_bases(&corpus.filled(1e-10, 10_000).unwrap(), 4).unwrap();
    assert!(basis.orthonormality_error() < 1e-10);
}

#[test]
fn sample_order_does_not_change_the_completion() {
    let c = corpus(4, 16);
    let basis = learn_bases(&c, 5).unwrap();
    let target = &c.maps()[0];
    let mut entries: Vec<Sample> = subsample_grid(target, 5).unwrap().entries().to_vec();
    let forward = SparseSamples::new(H, W, entries.clone()).unwrap();
    entries.reverse();
    let backward = SparseSamples::new(H, W, entries).unwrap();
    let (a, _) = pca_complete(&basis, &forward).unwrap();
    let (b, _) = pca_complete(&basis, &backward).unwrap();
    assert!(a.values().iter().zip(b.values()).all(|(x, y)| (x - y).abs() < 1e-9 * x.abs()));
}
