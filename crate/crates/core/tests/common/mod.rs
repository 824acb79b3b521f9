#![allow(dead_code)]

pub mod rational;

use nalgebra::DMatrix;
use proptest::prelude::*;
use straingrid_core::full::FullModel;
use straingrid_core::model::{
    ConnectivityMatrix, FrequencyState, PatchParams, ScaleParams, StrainPerturbations,
    TraitDeviations,
};

pub fn worked_patch() -> PatchParams {
    PatchParams::new(1.0, 4.0, 1.0, 1.0).unwrap()
}

pub fn second_patch() -> PatchParams {
    PatchParams::new(0.5, 2.0, 0.5, 2.0).unwrap()
}

pub fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, rows[0].len(), |i, j| rows[i][j])
}

/// Heterogeneous two-patch, two-strain system with every trait perturbed.
pub fn generic_two_patch(eps: f64, d: f64) -> FullModel {
    let devs = vec![
        TraitDeviations {
            b: vec![0.6, -0.2],
            nu: vec![0.2, -0.1],
            c_pair: mat(&[&[0.1, -0.2], &[0.3, 0.0]]),
            w: mat(&[&[0.0, 0.2], &[-0.1, 0.0]]),
            alpha: mat(&[&[0.1, 0.3], &[-0.2, 0.0]]),
        },
        TraitDeviations {
            b: vec![-0.3, 0.5],
            nu: vec![0.1, 0.3],
            c_pair: mat(&[&[0.0, 0.2], &[-0.1, 0.1]]),
            w: mat(&[&[0.0, -0.2], &[0.1, 0.0]]),
            alpha: mat(&[&[0.2, -0.1], &[0.0, 0.3]]),
        },
    ];
    FullModel::new(
        vec![worked_patch(), second_patch()],
        StrainPerturbations::new(devs).unwrap(),
        ScaleParams::new(eps, d).unwrap(),
        ConnectivityMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap(),
    )
    .unwrap()
}

pub fn generic_z0() -> FrequencyState {
    FrequencyState::from_rows(&[vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap()
}

/// Two heterogeneous patches, three strains, b and alpha perturbed.
pub fn three_strain_two_patch(eps: f64, d: f64) -> FullModel {
    let devs = vec![
        TraitDeviations {
            b: vec![0.5, -0.3, 0.1],
            alpha: mat(&[&[0.0, 0.4, -0.2], &[0.1, 0.0, 0.3], &[-0.3, 0.2, 0.0]]),
            ..TraitDeviations::neutral(3)
        },
        TraitDeviations {
            b: vec![-0.2, 0.4, 0.0],
            nu: vec![0.1, 0.0, -0.2],
            ..TraitDeviations::neutral(3)
        },
    ];
    FullModel::new(
        vec![worked_patch(), second_patch()],
        StrainPerturbations::new(devs).unwrap(),
        ScaleParams::new(eps, d).unwrap(),
        ConnectivityMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap(),
    )
    .unwrap()
}

/// Supercritical patch with R0 in (1.05, 10).
pub fn supercritical_patch() -> impl Strategy<Value = PatchParams> {
    (0.05..5.0f64, 0.0..5.0f64, 1.05..10.0f64, 0.25..5.0f64)
        .prop_map(|(r, gamma, r0, k)| PatchParams::new(r, r0 * (r + gamma), gamma, k).unwrap())
}

pub fn deviations(n: usize) -> impl Strategy<Value = TraitDeviations> {
    let v = || prop::collection::vec(-1.0..1.0f64, n);
    let m =
        || prop::collection::vec(-1.0..1.0f64, n * n).prop_map(move |e| DMatrix::from_vec(n, n, e));
    (v(), v(), m(), m(), m()).prop_map(|(b, nu, c_pair, w, alpha)| TraitDeviations {
        b,
        nu,
        c_pair,
        w,
        alpha,
    })
}

/// Random simplex row from positive weights.
pub fn simplex_row(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01..1.0f64, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    })
}

/// Complete-graph connectivity with random positive rates.
pub fn connectivity(np: usize) -> impl Strategy<Value = ConnectivityMatrix> {
    prop::collection::vec(0.1..3.0f64, np * np).prop_map(move |e| {
        let mut m = DMatrix::from_vec(np, np, e);
        for p in 0..np {
            m[(p, p)] = 0.0;
            let row: f64 = m.row(p).sum();
            m[(p, p)] = -row;
        }
        ConnectivityMatrix::new(m).unwrap()
    })
}

pub fn random_model(
    max_patches: usize,
    max_strains: usize,
) -> impl Strategy<Value = (FullModel, FrequencyState)> {
    (1..=max_patches, 1..=max_strains).prop_flat_map(|(np, n)| {
        (
            prop::collection::vec(supercritical_patch(), np),
            prop::collection::vec(deviations(n), np),
            connectivity(np),
            0.0..0.2f64,
            0.0..3.0f64,
            prop::collection::vec(simplex_row(n), np),
        )
            .prop_map(|(patches, devs, conn, eps, d, z)| {
                // Keep 1/2 + eps*w inside [0, 1] and all rates positive.
                let model = FullModel::new(
                    patches,
                    StrainPerturbations::new(devs).unwrap(),
                    ScaleParams::new(eps, d).unwrap(),
                    conn,
                )
                .unwrap();
                (model, FrequencyState::from_rows(&z).unwrap())
            })
    })
}
