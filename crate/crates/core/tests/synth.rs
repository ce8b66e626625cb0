mod common;

use common::{norm, outside_fraction_oracle, sub};
use embedding_simplex::synth::{circumradius, token};
use embedding_simplex::{find_candidates, fit_pca, generate_simplex_cloud, GenParams};

fn params(dim: usize, vertices: usize, points: usize, sigma: f64, seed: u64) -> GenParams {
    GenParams {
        dim,
        vertices,
        points,
        alpha: 1.5,
        sigma,
        seed,
        irregular: false,
    }
}

#[test]
fn tetrahedron_has_unit_edges() {
    let cloud = generate_simplex_cloud(&params(3, 4, 50, 0.0, 7)).unwrap();
    assert_eq!(cloud.true_vertices, vec![0, 1, 2, 3]);
    for i in 0..4 {
        for j in (i + 1)..4 {
            let d = norm(&sub(cloud.corner(i), cloud.corner(j)));
            assert!((d - 1.0).abs() < 1e-12, "edge {i}-{j}: {d}");
        }
    }
    let g = cloud.centroid();
    for i in 0..4 {
        assert!((norm(&sub(cloud.corner(i), &g)) - circumradius(4)).abs() < 1e-12);
    }
    assert_eq!(cloud.space.word(0), "w000001");
    assert_eq!(token(49), "w000050");
}

#[test]
fn sample_mean_is_the_centroid() {
    let cloud = generate_simplex_cloud(&params(50, 12, 20_000, 0.0, 3)).unwrap();
    let n = cloud.space.len() as f64;
    let g = cloud.centroid();
    for j in 0..50 {
        let col: Vec<f64> = cloud.space.rows().map(|r| r[j]).collect();
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        assert!((mean - g[j]).abs() <= 3.0 * se + 1e-12, "coordinate {j}");
    }
}

#[test]
fn noiseless_points_lie_in_the_circumsphere() {
    for seed in [1, 2] {
        let cloud = generate_simplex_cloud(&params(50, 12, 5000, 0.0, seed)).unwrap();
        let g = cloud.centroid();
        let r = circumradius(12);
        for row in cloud.space.rows() {
            assert!(norm(&sub(row, &g)) <= r + 1e-9);
        }
    }
}

#[test]
fn noiseless_axis_extremes_are_corners() {
    let cloud = generate_simplex_cloud(&params(30, 10, 4000, 0.0, 5)).unwrap();
    let pca = fit_pca(&cloud.space, 9).unwrap();
    for c in find_candidates(&cloud.space, &pca, 9).unwrap() {
        assert!(cloud.true_vertices.contains(&c.word_index), "{c:?}");
    }
}

#[test]
fn true_triangles_contain_the_noiseless_cloud() {
    let cloud = generate_simplex_cloud(&params(12, 6, 2000, 0.0, 8)).unwrap();
    for a in 0..6 {
        for b in (a + 1)..6 {
            for c in (b + 1)..6 {
                assert_eq!(outside_fraction_oracle(&cloud.space, [a, b, c]), 0.0);
            }
        }
    }
}

#[test]
fn generation_is_seeded() {
    let p = params(10, 5, 300, 0.05, 11);
    let a = generate_simplex_cloud(&p).unwrap();
    let b = generate_simplex_cloud(&p).unwrap();
    assert_eq!(a.space.as_flat(), b.space.as_flat());
    let c = generate_simplex_cloud(&GenParams { seed: 12, ..p.clone() }).unwrap();
    assert_ne!(a.space.as_flat(), c.space.as_flat());
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(generate_simplex_cloud(&params(5, 7, 100, 0.0, 0)).is_err());
    assert!(generate_simplex_cloud(&params(5, 3, 2, 0.0, 0)).is_err());
    assert!(generate_simplex_cloud(&GenParams { alpha: 0.0, ..params(5, 3, 10, 0.0, 0) }).is_err());
    assert!(generate_simplex_cloud(&params(5, 3, 10, -1.0, 0)).is_err());
}
