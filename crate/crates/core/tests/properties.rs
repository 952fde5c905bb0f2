use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use twog2t::field::{inner_product_lazy, inner_product_naive};
use twog2t::group::{PrimeGroup, Ristretto255, ToyElement, ToyGroup, ToyScalar};
use twog2t::lab::{attack_guess_r, enumerate_acceptors};
use twog2t::msm::{msm_bucketed, msm_dual, msm_naive};
use twog2t::protocol::{client_verify, server_respond, setup, QueryResponse, Verdict};
use twog2t::wire::{decode_response, encode_response};

const Q: u64 = 251;

fn toy() -> ToyGroup {
    ToyGroup::new(Q).unwrap()
}

fn toy_vec(len: usize) -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(0..Q, len)
}

fn toy_instance(max_n: usize) -> impl Strategy<Value = (Vec<u64>, Vec<u64>)> {
    (1..=max_n).prop_flat_map(|n| (toy_vec(n), toy_vec(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// In Z_q the MSM is the dot product mod q.
    #[test]
    fn toy_msm_is_dot_product((p, x) in toy_instance(80)) {
        let g = toy();
        let bases: Vec<_> = p.iter().copied().map(ToyElement).collect();
        let scalars: Vec<_> = x.iter().copied().map(ToyScalar).collect();
        let expected = p.iter().zip(&x).map(|(a, b)| a * b).sum::<u64>() % Q;
        prop_assert_eq!(msm_bucketed(&g, &bases, &scalars).unwrap(), ToyElement(expected));
        prop_assert_eq!(msm_naive(&g, &bases, &scalars).unwrap(), ToyElement(expected));
    }

    #[test]
    fn msm_is_linear_in_scalars(seed in any::<u64>(), n in 1usize..40) {
        let g = Ristretto255;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let p: Vec<_> = (0..n).map(|_| g.random_element(&mut rng)).collect();
        let x: Vec<_> = (0..n).map(|_| g.sample_scalar(&mut rng)).collect();
        let y: Vec<_> = (0..n).map(|_| g.sample_scalar(&mut rng)).collect();
        let sum: Vec<_> = x.iter().zip(&y).map(|(a, b)| g.scalar_add(a, b)).collect();
        let lhs = msm_bucketed(&g, &p, &sum).unwrap();
        let rhs = g.add(&msm_bucketed(&g, &p, &x).unwrap(), &msm_bucketed(&g, &p, &y).unwrap());
        prop_assert_eq!(lhs, rhs);
        let (a, b) = msm_dual(&g, &p, &p, &x).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(a, msm_naive(&g, &p, &x).unwrap());
    }

    #[test]
    fn lazy_inner_product_matches_naive((x, rho) in toy_instance(600), block in 1usize..=255) {
        let g = toy();
        let x: Vec<_> = x.into_iter().map(ToyScalar).collect();
        let rho: Vec<_> = rho.into_iter().map(ToyScalar).collect();
        prop_assert_eq!(inner_product_lazy(&g, &x, &rho, block.min(g.lazy_block_limit())).unwrap(),
                        inner_product_naive(&g, &x, &rho).unwrap());
    }

    /// An honest response always verifies and the output is MSM(P, x).
    #[test]
    fn completeness(seed in any::<u64>(), n in 1usize..64, production in any::<bool>()) {
        fn run<G: PrimeGroup>(g: G, seed: u64, n: usize) -> Result<(), TestCaseError> {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let bases: Vec<_> = (0..n).map(|_| g.random_element(&mut rng)).collect();
            let (key, st) = setup(&g, bases, &mut rng).unwrap();
            let x: Vec<_> = (0..n).map(|_| g.sample_scalar(&mut rng)).collect();
            let resp = server_respond(&g, &st.bases, &st.merged, &x).unwrap();
            let record = client_verify(&g, &key, &x, &resp).unwrap();
            prop_assert_eq!(record.verdict, Verdict::Accept(msm_naive(&g, &st.bases, &x).unwrap()));
            Ok(())
        }
        if production { run(Ristretto255, seed, n)? } else { run(toy(), seed, n)? }
    }

    /// Any change to A or B alone is rejected.
    #[test]
    fn tampering_is_rejected(seed in any::<u64>(), n in 1usize..32, which in any::<bool>()) {
        let g = Ristretto255;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let bases: Vec<_> = (0..n).map(|_| g.random_element(&mut rng)).collect();
        let (key, st) = setup(&g, bases, &mut rng).unwrap();
        let x: Vec<_> = (0..n).map(|_| g.sample_scalar(&mut rng)).collect();
        let mut resp = server_respond(&g, &st.bases, &st.merged, &x).unwrap();
        let delta = g.random_element(&mut rng);
        if which { resp.a = g.add(&resp.a, &delta) } else { resp.b = g.add(&resp.b, &delta) }
        prop_assert!(!client_verify(&g, &key, &x, &resp).unwrap().verdict.is_accept());
    }

    /// At most one key value accepts a wrong A, for any B.
    #[test]
    fn wrong_a_has_at_most_one_acceptor(seed in any::<u64>(), n in 1usize..5, forge in any::<bool>()) {
        let g = toy();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let bases: Vec<_> = (0..n).map(|_| g.random_element(&mut rng)).collect();
        let (_, st) = setup(&g, bases, &mut rng).unwrap();
        let x: Vec<_> = (0..n).map(|_| g.sample_scalar(&mut rng)).collect();
        let honest_a = msm_naive(&g, &st.bases, &x).unwrap();
        let delta = ToyElement(1 + g.sample_scalar(&mut rng).0 % (Q - 1));
        let guess = g.sample_scalar(&mut rng);
        let resp = if forge {
            attack_guess_r(&g, &st.bases, &st.merged, &x, &guess, &delta).unwrap()
        } else {
            QueryResponse { a: g.add(&honest_a, &delta), b: g.random_element(&mut rng) }
        };
        let acceptors = enumerate_acceptors(&g, &st.bases, &st.merged, &x, &resp).unwrap();
        if forge {
            prop_assert_eq!(acceptors, vec![guess]);
        } else {
            prop_assert!(acceptors.len() <= 1);
        }
    }

    #[test]
    fn response_encoding_is_constant_size(seed in any::<u64>(), n in 1usize..64) {
        let g = Ristretto255;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let bases: Vec<_> = (0..n).map(|_| g.random_element(&mut rng)).collect();
        let (_, st) = setup(&g, bases, &mut rng).unwrap();
        let x: Vec<_> = (0..n).map(|_| g.sample_scalar(&mut rng)).collect();
        let resp = server_respond(&g, &st.bases, &st.merged, &x).unwrap();
        let bytes = encode_response(&g, &resp);
        prop_assert_eq!(bytes.len(), 64);
        prop_assert_eq!(decode_response(&g, &bytes).unwrap(), resp);
    }
}
