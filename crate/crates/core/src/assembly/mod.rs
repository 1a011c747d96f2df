//! Grids and discrete Dirichlet forms.
//!
//! Nodes carry masses of their dual cells under the speed measure; edges carry
//! conductances `1 / (2Δλ)` from the resistance measure. Forms on the doubled
//! origin keep `0-` and `0+` as adjacent indices, so every stiffness matrix
//! here is tridiagonal.

mod form;
mod grid;

pub use form::{dual_masses, DiscreteForm, FormKind, Interface};
pub use grid::{BarrierGrid, Grid, Origin, Point, Side, MIN_BARRIER_CELLS};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::measures::{BarrierSpec, Conductivity, MonotoneMeasure};
    use proptest::prelude::*;

    fn leb(l: f64) -> MonotoneMeasure {
        MonotoneMeasure::lebesgue(-l, l).unwrap()
    }

    fn brownian(h: f64, l: f64, iface: Interface) -> DiscreteForm {
        let doubled = !matches!(iface, Interface::Continuous);
        let g = Grid::uniform(l, h, doubled).unwrap();
        DiscreteForm::assemble(&leb(l), &leb(l), &g, iface).unwrap()
    }

    fn triplet_bits(f: &DiscreteForm) -> Vec<(usize, usize, u64)> {
        f.triplets()
            .into_iter()
            .map(|(i, j, v)| (i, j, v.to_bits()))
            .collect()
    }

    #[test]
    fn brownian_edges_are_one_for_half_step() {
        let f = brownian(0.5, 1.0, Interface::Continuous);
        assert_eq!(f.edges(), &[1.0; 4]);
        assert_eq!(f.mass(), &[0.25, 0.5, 0.5, 0.5, 0.25]);
    }

    #[test]
    fn snapping_block_is_quarter_kappa() {
        let f = brownian(0.25, 1.0, Interface::Snapping { kappa: 2.0 });
        let (zm, zp) = f.grid().zero_pair().unwrap();
        assert_eq!(f.coupling(), Some(0.5));
        let t = f.triplets();
        assert!(t.contains(&(zm, zp, -0.5)));
        assert!(t.contains(&(zp, zm, -0.5)));
        // the 0-/0+ block of the stiffness, with the side edges removed
        let block = f.diagonal(zm) - f.edges()[zm - 1];
        assert_eq!(block, 0.5);
        // m({0±}) = 0: each side gets only its adjacent half-cell
        assert_eq!(f.mass()[zm], 0.125);
        assert_eq!(f.mass()[zp], 0.125);
    }

    #[test]
    fn barrier_chain_has_quarter_net_conductance() {
        let (kappa, eps) = (1.0, 0.1);
        let l = 1.0;
        let limit = Grid::uniform(l, 0.1, true).unwrap();
        let bg = BarrierGrid::new(&limit, eps, 16).unwrap();
        let barrier = BarrierSpec::from_conductivity(Conductivity::lejay(kappa, eps).unwrap(), eps)
            .unwrap();
        let f = DiscreteForm::assemble_barrier(&leb(2.0), &leb(l), &barrier, &bg).unwrap();
        // series resistors: 1 / Σ (1 / w)
        let series: f64 = f.edges()[bg.left..bg.right].iter().map(|w| 1.0 / w).sum();
        assert!((1.0 / series - 0.25).abs() < 1e-12);
        // outside the barrier the chain is the shifted Brownian one
        assert!((f.edges()[0] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn zero_resistance_cell_is_assembly_error() {
        // λ = Cantor on [0, 1] has no mass on the middle third
        let lam = MonotoneMeasure::cantor_sum(0.0, 1.0, 20, 0.0).unwrap();
        let m = MonotoneMeasure::lebesgue(0.0, 1.0).unwrap();
        let g = Grid::new(vec![0.0, 1.0 / 3.0 + 1e-3, 2.0 / 3.0 - 1e-3, 1.0]).unwrap();
        let err = DiscreteForm::assemble(&m, &lam, &g, Interface::Continuous).unwrap_err();
        assert!(matches!(err, Error::Assembly { cell: 1, .. }));
    }

    #[test]
    fn continuous_on_doubled_grid_is_shape_error() {
        let g = Grid::uniform(1.0, 0.5, true).unwrap();
        let err = DiscreteForm::assemble(&leb(1.0), &leb(1.0), &g, Interface::Continuous);
        assert!(matches!(err, Err(Error::Shape(_))));
    }

    #[test]
    fn kill_with_zero_weights_is_identity() {
        let f = brownian(0.25, 1.0, Interface::Separate);
        assert_eq!(f.kill(&[(2, 0.0), (5, 0.0)]).unwrap(), f);
    }

    #[test]
    fn elastic_kill_raises_zero_diagonals_by_half_kappa() {
        let f = brownian(0.25, 1.0, Interface::Separate);
        let (zm, zp) = f.grid().zero_pair().unwrap();
        let k = f.kill(&[(zm, 1.0), (zp, 1.0)]).unwrap();
        assert_eq!(k.diagonal(zm), f.diagonal(zm) + 1.0);
        assert_eq!(k.diagonal(zp), f.diagonal(zp) + 1.0);
        assert!(k.kind().is_killed());
        assert_eq!(f.elastic(2.0).unwrap(), k);
        assert!(matches!(f.kill(&[(zm, -1.0)]), Err(Error::Argument(_))));
    }

    #[test]
    fn darning_snapping_gives_continuous_bitwise() {
        let cont = brownian(0.01, 2.0, Interface::Continuous);
        for kappa in [1.0, 100.0] {
            let d = brownian(0.01, 2.0, Interface::Snapping { kappa }).darn().unwrap();
            assert_eq!(triplet_bits(&d), triplet_bits(&cont));
            assert_eq!(d, cont);
        }
    }

    #[test]
    fn darning_separate_keeps_only_side_edges() {
        let sep = brownian(0.25, 1.0, Interface::Separate);
        let d = sep.darn().unwrap();
        let z = match d.grid().origin() {
            Origin::Single(z) => z,
            o => panic!("unexpected origin {o:?}"),
        };
        assert_eq!(d.diagonal(z), d.edges()[z - 1] + d.edges()[z]);
        assert!(matches!(d.darn(), Err(Error::Shape(_))));
    }

    #[test]
    fn trace_keep_all_is_identity() {
        let f = brownian(0.25, 1.0, Interface::Snapping { kappa: 3.0 });
        let all: Vec<usize> = (0..f.len()).collect();
        assert_eq!(f.trace_schur(&all).unwrap(), f);
    }

    #[test]
    fn trace_of_three_node_chain_is_series_reduction() {
        // conductances 2 and 3, killing 0.5 in the middle; keep the ends
        let g = Grid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let f = DiscreteForm::from_parts(
            g,
            vec![1.0; 3],
            vec![2.0, 3.0],
            vec![0.0, 0.5, 0.0],
            FormKind::Custom,
        )
        .unwrap();
        let t = f.trace_schur(&[0, 2]).unwrap();
        let d = 2.0 + 3.0 + 0.5;
        assert!((t.edges()[0] - 6.0 / d).abs() < 1e-15);
        assert!((t.killing()[0] - 2.0 * 0.5 / d).abs() < 1e-15);
        assert!((t.killing()[1] - 3.0 * 0.5 / d).abs() < 1e-15);
    }

    #[test]
    fn trace_across_gap_gives_quarter_kappa() {
        let kappa = 2.0;
        let f = brownian(1e-2, 2.0, Interface::Continuous);
        let r = 1.0 / kappa;
        let keep: Vec<usize> = (0..f.len())
            .filter(|&i| f.grid().nodes()[i].abs() >= r - 1e-9)
            .collect();
        let t = f.trace_schur(&keep).unwrap();
        let gap = t
            .grid()
            .nodes()
            .windows(2)
            .position(|w| w[1] - w[0] > 0.5)
            .unwrap();
        assert!((t.edges()[gap] - kappa / 4.0).abs() < 1e-9);
        assert!(t.killing().iter().all(|c| *c == 0.0));
    }

    fn random_form(
        weights: Vec<f64>,
        masses: Vec<f64>,
        kappa: f64,
    ) -> DiscreteForm {
        let n = masses.len();
        let mut nodes: Vec<f64> = (0..n).map(|i| i as f64 - (n / 2) as f64).collect();
        nodes.insert(n / 2, 0.0);
        let mut mass = masses.clone();
        mass.insert(n / 2, masses[n / 2]);
        let mut edges = weights.clone();
        edges.insert(n / 2, kappa / 4.0);
        DiscreteForm::from_parts(
            Grid::new(nodes).unwrap(),
            mass,
            edges,
            vec![0.0; n + 1],
            FormKind::Snapping { kappa },
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn unit_contraction_does_not_raise_energy(
            u in prop::collection::vec(-2.0f64..3.0, 12),
            w in prop::collection::vec(0.01f64..10.0, 10),
            m in prop::collection::vec(0.1f64..2.0, 11),
            kappa in 0.0f64..20.0,
            c in 0.0f64..5.0,
        ) {
            let f = random_form(w, m, kappa).kill(&[(3, c)]).unwrap();
            let clipped: Vec<f64> = u.iter().map(|x| x.clamp(0.0, 1.0)).collect();
            prop_assert!(f.energy(&clipped, &clipped) <= f.energy(&u, &u) * (1.0 + 1e-12) + 1e-14);
        }

        #[test]
        fn constants_are_harmonic_and_killing_is_q_of_one(
            w in prop::collection::vec(0.01f64..10.0, 10),
            m in prop::collection::vec(0.1f64..2.0, 11),
            kappa in 0.0f64..20.0,
            c in 0.0f64..5.0,
        ) {
            let f = random_form(w, m, kappa);
            let ones = vec![1.0; f.len()];
            prop_assert!(f.apply(&ones).iter().all(|v| v.abs() < 1e-12));
            let k = f.kill(&[(2, c), (7, 2.0 * c)]).unwrap();
            prop_assert!((k.energy(&ones, &ones) - 3.0 * c).abs() < 1e-12);
        }

        #[test]
        fn stiffness_is_symmetric_bitwise(
            w in prop::collection::vec(0.01f64..10.0, 10),
            m in prop::collection::vec(0.1f64..2.0, 11),
            kappa in 0.0f64..20.0,
        ) {
            let f = random_form(w, m, kappa);
            let t = f.triplets();
            for &(i, j, v) in &t {
                let mirror = t.iter().find(|e| e.0 == j && e.1 == i).unwrap();
                prop_assert_eq!(v.to_bits(), mirror.2.to_bits());
            }
        }

        #[test]
        fn energy_grows_with_kappa(
            u in prop::collection::vec(-2.0f64..3.0, 12),
            w in prop::collection::vec(0.01f64..10.0, 10),
            m in prop::collection::vec(0.1f64..2.0, 11),
            k1 in 0.0f64..20.0,
            dk in 0.0f64..20.0,
        ) {
            let a = random_form(w.clone(), m.clone(), k1);
            let b = random_form(w, m, k1 + dk);
            prop_assert!(a.energy(&u, &u) <= b.energy(&u, &u) + 1e-12);
        }

        #[test]
        fn nested_traces_agree(
            w in prop::collection::vec(0.01f64..10.0, 10),
            m in prop::collection::vec(0.1f64..2.0, 11),
            kappa in 0.01f64..20.0,
            c in 0.0f64..5.0,
            mask in prop::collection::vec(any::<bool>(), 12),
        ) {
            let f = random_form(w, m, kappa).kill(&[(4, c)]).unwrap();
            let outer: Vec<usize> = (0..12).filter(|&i| mask[i] || i % 3 == 0).collect();
            let inner: Vec<usize> = (0..12).filter(|&i| i % 3 == 0).collect();
            let inner_in_outer: Vec<usize> = inner
                .iter()
                .map(|i| outer.iter().position(|o| o == i).unwrap())
                .collect();
            let two = f.trace_schur(&outer).unwrap().trace_schur(&inner_in_outer).unwrap();
            let one = f.trace_schur(&inner).unwrap();
            for (a, b) in one.tridiagonal().0.iter().zip(two.tridiagonal().0.iter()) {
                prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300));
            }
            for (a, b) in one.edges().iter().zip(two.edges()) {
                prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300));
            }
        }

        #[test]
        fn half_skew_equals_snapping(kappa in 0.01f64..50.0) {
            let s = brownian(0.25, 1.0, Interface::Snapping { kappa });
            let k = brownian(0.25, 1.0, Interface::Skew { alpha_skew: 0.5, kappa });
            prop_assert_eq!(triplet_bits(&s), triplet_bits(&k));
        }
    }
}
