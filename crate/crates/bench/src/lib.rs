//! Shared setup for the criterion benches.

use hybrid2pc::atomic::{AtomicOp, Engine};
use hybrid2pc::circuit::Circuit;
use hybrid2pc::correlated::Block;
use hybrid2pc::gc::random_block;
use hybrid2pc::RingParams;
use rand::RngCore;

/// Each atomic op under each engine it can run on.
pub const CASES: &[(AtomicOp, Engine)] = &[
    (AtomicOp::Add, Engine::Arith),
    (AtomicOp::Mult, Engine::Arith),
    (AtomicOp::MultDa, Engine::Arith),
    (AtomicOp::And, Engine::Gmw),
    (AtomicOp::And, Engine::Gc),
    (AtomicOp::Cmp, Engine::Gmw),
    (AtomicOp::Cmp, Engine::Gc),
    (AtomicOp::Mux, Engine::Gmw),
    (AtomicOp::Mux, Engine::Gc),
    (AtomicOp::B2y, Engine::Convert),
    (AtomicOp::B2a, Engine::Convert),
    (AtomicOp::A2y, Engine::Convert),
];

pub fn ring32() -> RingParams {
    RingParams::default_for(32).unwrap()
}

pub fn case_name(op: AtomicOp, engine: Engine) -> String {
    format!("{}/{engine:?}", op.name()).to_lowercase()
}

/// Fresh zero labels for every input wire of `c`, `IN0` then `IN1`.
pub fn zero_labels<R: RngCore>(c: &Circuit, rng: &mut R) -> Vec<Block> {
    (0..c.input_len()).map(|_| random_block(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use hybrid2pc::atomic::effective_engine;
    use hybrid2pc::circuit::library::{build_cmp, Variant};

    #[test]
    fn cases_are_runnable() {
        for &(op, e) in CASES {
            assert_eq!(effective_engine(op, e).unwrap(), e, "{}", case_name(op, e));
        }
    }

    #[test]
    fn labels_cover_inputs() {
        let c = build_cmp(32, Variant::Size).unwrap();
        assert_eq!(zero_labels(&c, &mut rand::thread_rng()).len(), 64);
    }
}
