//! The toy world's features carry the answers linearly: a closed-form
//! least-squares probe on noiseless features recovers every visual answer.

use ayn_core::synthetic::{generate, QuestionFamily, ToyImage, ToyWorldSpec};

/// Solves `(XᵀX + λI) W = XᵀY` by Gauss-Jordan elimination with partial pivoting.
fn ridge(x: &[Vec<f64>], y: &[Vec<f64>], lambda: f64) -> Vec<Vec<f64>> {
    let (d, k) = (x[0].len(), y[0].len());
    let mut a = vec![vec![0.0; d + k]; d];
    for (xi, yi) in x.iter().zip(y) {
        for r in 0..d {
            for c in 0..d {
                a[r][c] += xi[r] * xi[c];
            }
            for c in 0..k {
                a[r][d + c] += xi[r] * yi[c];
            }
        }
    }
    for (r, row) in a.iter_mut().enumerate() {
        row[r] += lambda;
    }
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        a[col].iter_mut().for_each(|v| *v /= p);
        for r in 0..d {
            if r != col {
                let f = a[r][col];
                let pivot_row = a[col].clone();
                a[r].iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
            }
        }
    }
    (0..d).map(|r| a[r][d..].to_vec()).collect()
}

fn argmax(v: &[f64]) -> usize {
    v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0
}

#[test]
fn noiseless_features_are_linearly_decodable() {
    let spec = ToyWorldSpec {
        seed: 5,
        num_train: 400,
        num_test: 100,
        noise: 0.0,
        ..ToyWorldSpec::default()
    };
    let corpus = generate(&spec).unwrap();
    let x: Vec<Vec<f64>> = corpus
        .images
        .iter()
        .map(|(id, _)| corpus.features.get(id).unwrap().to_vec())
        .collect();
    type Label = fn(&ToyImage) -> usize;
    let targets: [(usize, Label); 3] = [
        (spec.colors.len(), |img| img.color),
        (spec.shapes.len(), |img| img.shape),
        (spec.max_count, |img| img.count - 1),
    ];
    for (classes, field) in targets {
        let label = |i: usize| field(&corpus.images[i].1);
        let y: Vec<Vec<f64>> = (0..x.len())
            .map(|i| (0..classes).map(|c| f64::from(u8::from(c == label(i)))).collect())
            .collect();
        let w = ridge(&x, &y, 1e-6);
        for (i, xi) in x.iter().enumerate() {
            let scores: Vec<f64> = (0..classes)
                .map(|c| (0..xi.len()).map(|r| xi[r] * w[r][c]).sum())
                .collect();
            assert_eq!(argmax(&scores), label(i));
        }
    }
}

#[test]
fn answer_key_agrees_with_the_rendered_images() {
    let spec = ToyWorldSpec {
        num_train: 200,
        num_test: 50,
        ..ToyWorldSpec::default()
    };
    let c = generate(&spec).unwrap();
    let all: Vec<_> = c.train.iter().chain(&c.test).collect();
    assert_eq!(all.len(), c.key.len());
    for ((inst, key), (image, img)) in all.iter().zip(&c.key).zip(&c.images) {
        assert_eq!(&inst.image, image);
        let expected = match key.family {
            QuestionFamily::Color => spec.colors[img.color].clone(),
            QuestionFamily::Shape => spec.shapes[img.shape].clone(),
            QuestionFamily::Count => img.count.to_string(),
            QuestionFamily::Bias => "blue".into(),
            QuestionFamily::Describe => format!("{}, {}", spec.colors[img.color], spec.shapes[img.shape]),
        };
        assert_eq!(key.answer, expected);
        assert_eq!(inst.answers[0], ayn_core::data::AnswerSet::parse(&expected));
    }
}
