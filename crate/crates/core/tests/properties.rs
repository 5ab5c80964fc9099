//! Invariants on random inputs. Each case draws a seed and builds its
//! inputs from it, so shrinking is by seed only.

mod common;

use common::*;
use logconn::connection::pullback_from_log_point;
use logconn::homological::{
    de_rham_cohomology, ext1, ga_rep, homomorphism_law_holds, kernel_cokernel, lift_rank1, nilpotent_log,
    pushforward_log_point, HorizontalMorphism,
};
use logconn::normal_form::crossing::balanced_ring;
use logconn::normal_form::gauge::normal_form_residual;
use logconn::normal_form::{
    descend_crossing, descend_smooth, expand_crossing, expand_from_linear_data, expand_model, expand_smooth,
    gauge_normal_form, katz_project, nilpotent_trigonalize, reduce_model, reduce_to_linear_data, sylvester_solve,
};
use logconn::rational::q;
use logconn::{Connection, Derivation, Family, LinearData, MultiIndex, QMat, RingSpec, SMat, Series};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_series(rng: &mut ChaCha8Rng, ring: RingSpec, terms: usize) -> Series {
    let monos = ring.monomials();
    let mut s = Series::zero(ring);
    for _ in 0..terms {
        let k = monos.choose(rng).unwrap().clone();
        s = s.add(&Series::monomial(ring, k, small_q(rng)).unwrap());
    }
    s
}

fn any_ring(rng: &mut ChaCha8Rng) -> RingSpec {
    let (n, r) = *[(1, 1), (2, 1), (2, 2), (3, 2), (3, 3)].choose(rng).unwrap();
    RingSpec::new(n, r, rng.gen_range(0..=5)).unwrap()
}

fn crossing_ring(rng: &mut ChaCha8Rng, max_trunc: u32) -> RingSpec {
    let n = rng.gen_range(2..=3);
    RingSpec::new(n, n, rng.gen_range(1..=max_trunc)).unwrap()
}

fn family(rng: &mut ChaCha8Rng, ring: &RingSpec) -> Family {
    if ring.r < 2 || rng.gen_bool(0.5) {
        Family::Absolute
    } else {
        Family::Relative
    }
}

fn nr_case(rng: &mut ChaCha8Rng, ring: RingSpec, max_rank: usize) -> Connection {
    let fam = family(rng, &ring);
    let rank = rng.gen_range(1..=max_rank);
    random_nr(rng, ring, fam, rank, 4)
}

fn derivations(ring: &RingSpec) -> Vec<Derivation> {
    Family::Absolute.derivations(ring)
}

fn acc(ring: &RingSpec, theta: Derivation) -> i64 {
    match theta {
        Derivation::Partial(_) => ring.trunc as i64 - 1,
        Derivation::Log(_) => ring.trunc as i64,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ring_laws(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let ring = any_ring(&mut rng);
        let a = random_series(&mut rng, ring, 4);
        let b = random_series(&mut rng, ring, 4);
        let c = random_series(&mut rng, ring, 4);
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert!(a.sub(&a).is_zero());
    }

    #[test]
    fn leibniz_and_commuting_derivations(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let ring = any_ring(&mut rng);
        let f = random_series(&mut rng, ring, 4);
        let g = random_series(&mut rng, ring, 4);
        let ds = derivations(&ring);
        for &d in &ds {
            let lhs = d.apply(&f.mul(&g));
            let rhs = d.apply(&f).mul(&g).add(&f.mul(&d.apply(&g)));
            let a = acc(&ring, d);
            prop_assert_eq!(lhs.truncated(a, 0), rhs.truncated(a, 0), "{}", d);
            for &e in &ds {
                prop_assert_eq!(d.apply(&e.apply(&f)), e.apply(&d.apply(&f)));
            }
        }
    }

    #[test]
    fn delta_detects_balanced_subring(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let ring = RingSpec::new(3, 3, rng.gen_range(1..=5)).unwrap();
        // Random element of the balanced subring plus an optional stray term.
        let mut f = Series::zero(ring);
        for _ in 0..3 {
            let a = rng.gen_range(0..=ring.trunc / 2);
            let k = if rng.gen_bool(0.5) { vec![a, a, 0] } else { vec![0, a, rng.gen_range(0..=1)] };
            let k = MultiIndex(k);
            if ring.is_admissible(&k) && k.0[0] == k.0[1] {
                f = f.add(&Series::monomial(ring, k, small_q(&mut rng)).unwrap());
            }
        }
        prop_assert_eq!(f.delta(1, 2), None);
        let stray = MultiIndex(vec![1, 0, 0]);
        let g = f.add(&Series::monomial(ring, stray, q(1)).unwrap());
        prop_assert_eq!(g.delta(1, 2).is_none(), false);
    }

    #[test]
    fn sylvester_matches_kronecker_oracle(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let s = rng.gen_range(1..=5);
        let h0 = random_nilpotent(&mut rng, s);
        let c = q(*[-3, -2, -1, 1, 2, 3, 7].choose(&mut rng).unwrap());
        let mut rhs = QMat::zeros(s, s);
        for i in 0..s {
            for j in 0..s {
                rhs[(i, j)] = small_q(&mut rng);
            }
        }
        let x = sylvester_solve(&h0, &c, &rhs).unwrap();
        prop_assert!(h0.mul(&x).sub(&x.mul(&h0)).add(&x.scale(&c)).sub(&rhs).is_zero());
        prop_assert_eq!(x, sylvester_by_kronecker(&h0, &c, &rhs));
    }

    #[test]
    fn trigonalize_postcondition(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let s = rng.gen_range(1..=5);
        let count = rng.gen_range(1..=3);
        let ms = random_commuting(&mut rng, s, count);
        let (p, conj) = nilpotent_trigonalize(s, &ms).unwrap();
        let pinv = p.inverse().unwrap();
        for (m, c) in ms.iter().zip(&conj) {
            prop_assert_eq!(&pinv.mul(m).mul(&p), c);
            prop_assert!(c.is_strictly_upper());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gauge_normal_form_invariants(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let ring = crossing_ring(&mut rng, 5);
        let c = nr_case(&mut rng, ring, 3);
        let pivot = rng.gen_range(1..ring.r);
        let idx = c.index_of(Derivation::Log(pivot)).unwrap();
        let (p, _) = nilpotent_trigonalize(c.rank(), &[c.mats()[idx].constant_term()]).unwrap();
        let c = c.gauge(&SMat::constant(ring, 0, &p)).unwrap();
        let nf = gauge_normal_form(&c, pivot).unwrap();
        prop_assert!(normal_form_residual(&c, pivot, &nf).truncated(ring.trunc as i64, 0).is_zero());
        let balanced = |k: &MultiIndex| k.0[pivot - 1] == k.0[pivot];
        for ((k, _), m) in nf.transform.matrix().coefficients() {
            if k.is_zero() {
                prop_assert_eq!(m, QMat::identity(c.rank()));
            } else {
                prop_assert!(!balanced(&k), "U has a balanced term at {}", k);
            }
        }
        for ((k, _), _) in nf.normalized.coefficients() {
            prop_assert!(balanced(&k));
        }
        prop_assert_eq!(nf.normalized.constant_term(), c.mats()[idx].constant_term());
    }

    #[test]
    fn katz_projection(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (n, r) = *[(2, 1), (3, 1), (3, 2)].choose(&mut rng).unwrap();
        let ring = RingSpec::new(n, r, rng.gen_range(1..=5)).unwrap();
        let c = nr_case(&mut rng, ring, 2);
        let v: Vec<Series> = (0..c.rank()).map(|_| random_series(&mut rng, ring, 3)).collect();
        let pv = katz_project(&c, &v).unwrap();
        prop_assert_eq!(&katz_project(&c, &pv).unwrap(), &pv);
        for j in r + 1..=n {
            let d = c.apply(c.index_of(Derivation::Partial(j)).unwrap(), &pv);
            prop_assert!(d.iter().all(|e| e.truncated(ring.trunc as i64 - 1, 0).is_zero()));
        }
        // Already flat elements are fixed: the projection of a flat frame.
        let d = descend_smooth(&c).unwrap();
        for i in 0..c.rank() {
            let col: Vec<Series> = (0..c.rank()).map(|l| d.transform.matrix().get(l, i).clone()).collect();
            prop_assert_eq!(katz_project(&c, &col).unwrap(), col);
        }
    }

    #[test]
    fn smooth_descent_certificate(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (n, r) = *[(2, 1), (3, 1), (3, 2)].choose(&mut rng).unwrap();
        let ring = RingSpec::new(n, r, rng.gen_range(1..=4)).unwrap();
        let c = nr_case(&mut rng, ring, 2);
        let d = descend_smooth(&c).unwrap();
        let back = expand_smooth(&d.connection, ring).unwrap();
        prop_assert!(d.transform.verify(&c, &back).unwrap());
    }

    #[test]
    fn crossing_descent_certificate(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let ring = crossing_ring(&mut rng, 4);
        let c = nr_case(&mut rng, ring, 2);
        let d = descend_crossing(&c).unwrap();
        prop_assert_eq!(d.connection.ring(), balanced_ring(ring).unwrap());
        prop_assert!(d.nmat.constant_term().is_nilpotent());
        let back = expand_crossing(&d.connection, &d.nmat, ring).unwrap();
        prop_assert!(d.transform.verify(&c, &back).unwrap());
    }

    #[test]
    fn reduce_expand_round_trips(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let ring = if rng.gen_bool(0.7) { crossing_ring(&mut rng, 4) } else { RingSpec::new(3, 2, rng.gen_range(1..=3)).unwrap() };
        let c = nr_case(&mut rng, ring, 3);
        let l = random_linear_data(&mut rng, c.rank(), log_count(c.family(), &ring));
        prop_assert_eq!(reduce_to_linear_data(&expand_from_linear_data(&l, ring).unwrap()).unwrap(), l);
        let red = reduce_model(&c).unwrap();
        let model = expand_model(&red.model, ring).unwrap();
        prop_assert!(red.transform.verify(&c, &model).unwrap());
        // Rank and the Jordan type of every operator survive the round trip.
        let l2 = red.model.linear_data().unwrap();
        let again = reduce_to_linear_data(&expand_from_linear_data(&l2, ring).unwrap()).unwrap();
        for (a, b) in l2.nilpotents.iter().zip(&again.nilpotents) {
            prop_assert_eq!(a.power_ranks(), b.power_ranks());
        }
    }

    #[test]
    fn u_extended_reduction(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let ring = crossing_ring(&mut rng, 3);
        let rank = rng.gen_range(1..=2);
        let c = random_nr(&mut rng, ring, Family::Absolute, rank, 3);
        let ut = rng.gen_range(1..=2);
        let g = random_gauge(&mut rng, ring, ut, &QMat::identity(rank), 3);
        let e = c.extend_u(ut).unwrap().gauge(&g).unwrap();
        let red = reduce_model(&e).unwrap();
        let model = expand_model(&red.model, ring).unwrap();
        prop_assert!(red.transform.verify(&e, &model).unwrap());
    }

    #[test]
    fn tensor_reduces_to_kronecker_sum(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let ring = RingSpec::new(2, 2, rng.gen_range(1..=3)).unwrap();
        let (s1, s2) = (rng.gen_range(1..=2), rng.gen_range(1..=2));
        let c1 = random_nr(&mut rng, ring, Family::Absolute, s1, 3);
        let c2 = random_nr(&mut rng, ring, Family::Absolute, s2, 3);
        let l1 = reduce_to_linear_data(&c1).unwrap();
        let l2 = reduce_to_linear_data(&c2).unwrap();
        let lt = reduce_to_linear_data(&c1.tensor(&c2).unwrap()).unwrap();
        let want = l1.tensor(&l2);
        // Simultaneous similarity of commuting nilpotents, tested on random
        // combinations through the ranks of their powers.
        for _ in 0..4 {
            let coeffs: Vec<_> = (0..2).map(|_| q(rng.gen_range(-3..=3))).collect();
            let comb = |l: &LinearData| {
                l.nilpotents.iter().zip(&coeffs).fold(QMat::zeros(l.dim, l.dim), |acc, (n, a)| acc.add(&n.scale(a)))
            };
            prop_assert_eq!(comb(&lt).power_ranks(), comb(&want).power_ranks());
        }
    }

    #[test]
    fn functors_preserve_structure(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let ring = crossing_ring(&mut rng, 3);
        let (s1, s2) = (rng.gen_range(1..=2), rng.gen_range(1..=2));
        let c = random_nr(&mut rng, ring, Family::Absolute, s1, 3);
        let d = random_nr(&mut rng, ring, Family::Absolute, s2, 3);
        let ut = rng.gen_range(1..=2);
        let e = c.extend_u(ut).unwrap();
        let outs = [
            c.tensor(&d).unwrap(),
            c.dual(),
            c.direct_sum(&d).unwrap(),
            c.restrict().unwrap(),
            e.clone(),
            e.set_u_zero().unwrap(),
        ];
        for o in &outs {
            prop_assert!(o.check_integrability().passed());
            prop_assert!(o.check_nilpotent_residues().unwrap().nilpotent);
            let res = o.residues();
            for a in &res.mats {
                for b in &res.mats {
                    prop_assert!(a.commutator(b).is_zero());
                }
            }
        }
        let l = LinearData::new(2, vec![random_nilpotent(&mut rng, 2)]).unwrap();
        let p = pullback_from_log_point(&l, ring).unwrap();
        prop_assert!(p.check_integrability().passed() && p.check_nilpotent_residues().unwrap().nilpotent);
    }

    #[test]
    fn cohomology_euler_characteristic(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let ring = RingSpec::new(2, 2, rng.gen_range(1..=3)).unwrap();
        let c = nr_case(&mut rng, ring, 2);
        let rep = de_rham_cohomology(&c).unwrap();
        prop_assert!(rep.euler_consistent());
        prop_assert_eq!(rep.trunc, ring.trunc);
    }

    #[test]
    fn exponential_is_a_homomorphism(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let d = rng.gen_range(1..=5);
        let n = random_nilpotent(&mut rng, d);
        let rep = ga_rep(&n).unwrap();
        prop_assert!(homomorphism_law_holds(&rep));
        prop_assert_eq!(nilpotent_log(&rep).unwrap(), n);
    }

    #[test]
    fn pushforward_inverts_pullback(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let ring = crossing_ring(&mut rng, 2);
        let d = rng.gen_range(1..=4);
        let l = LinearData::new(d, vec![random_nilpotent(&mut rng, d)]).unwrap();
        let back = pushforward_log_point(&pullback_from_log_point(&l, ring).unwrap()).unwrap();
        prop_assert_eq!(back, l);
    }

    #[test]
    fn kernel_cokernel_ranks(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let ring = RingSpec::new(2, 2, rng.gen_range(1..=3)).unwrap();
        let rank = rng.gen_range(1..=3);
        let c = random_nr(&mut rng, ring, Family::Absolute, rank, 3);
        // Endomorphisms polynomial in the reduced operators are horizontal.
        let red = reduce_model(&c).unwrap();
        let l = red.model.linear_data().unwrap();
        let mut a = QMat::identity(l.dim).scale(&q(rng.gen_range(-1..=1)));
        for n in &l.nilpotents {
            a = a.add(&n.scale(&q(rng.gen_range(-2..=2))));
        }
        let g = red.transform.matrix();
        let mat = g.mul(&SMat::constant(ring, 0, &a)).mul(&g.inverse().unwrap());
        let phi = HorizontalMorphism::new(c.clone(), c.clone(), mat).unwrap();
        let kc = kernel_cokernel(&phi).unwrap();
        prop_assert_eq!(c.rank() - kc.kernel.rank(), c.rank() - kc.cokernel.rank());
        prop_assert_eq!(kc.kernel.rank(), c.rank() - a.rank());
        prop_assert!(kc.kernel.check_nilpotent_residues().unwrap().nilpotent);
        prop_assert!(kc.cokernel.check_nilpotent_residues().unwrap().nilpotent);
    }

    #[test]
    fn lift_is_a_section_of_restrict(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let ring = crossing_ring(&mut rng, 4);
        let g = random_gauge(&mut rng, ring, 0, &QMat::identity(1), 4);
        let c = Connection::unit(ring, Family::Relative).gauge(&g).unwrap();
        let l = lift_rank1(&c).unwrap();
        prop_assert_eq!(l.lift.restrict().unwrap(), c);
        prop_assert!(l.lift.check_nilpotent_residues().unwrap().nilpotent);
    }

    #[test]
    fn ext1_extensions_have_the_given_ends(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let ring = RingSpec::new(2, 2, rng.gen_range(1..=2)).unwrap();
        let fam = family(&mut rng, &ring);
        let count = log_count(fam, &ring);
        let (s1, s2) = (rng.gen_range(1..=2), rng.gen_range(1..=2));
        let l1 = random_linear_data(&mut rng, s1, count);
        let l2 = random_linear_data(&mut rng, s2, count);
        let c1 = expand_from_linear_data(&l1, ring).unwrap();
        let c2 = expand_from_linear_data(&l2, ring).unwrap();
        let e = ext1(&c1, &c2).unwrap();
        prop_assert_eq!(e.dim, ext1_linear_bruteforce(&l1, &l2));
        prop_assert_eq!(e.dim, e.de_rham_h1);
        let (s1, s2) = (l1.dim, l2.dim);
        for (ext, class) in e.extensions.iter().zip(&e.cocycles) {
            let l = reduce_to_linear_data(ext).unwrap();
            for (i, n) in l.nilpotents.iter().enumerate() {
                prop_assert_eq!(&n.block(0, 0, s2, s2), &l2.nilpotents[i]);
                prop_assert_eq!(&n.block(s2, s2, s1, s1), &l1.nilpotents[i]);
                prop_assert!(n.block(s2, 0, s1, s2).is_zero());
                prop_assert_eq!(&n.block(0, s2, s2, s1), &class[i]);
            }
        }
    }
}
