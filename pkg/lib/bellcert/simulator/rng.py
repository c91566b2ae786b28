"""Counter-based randomness for the trial simulator.

Each trial owns one Philox4x64 counter value under the key ``seed``, which
yields four 64-bit words: word 0 chooses x, word 1 chooses y and word 2 is the
uniform variate that samples the outcome pair. Any range of trials can be
generated independently of the others, which makes the simulation invariant to
how blocks are spread over workers.
"""

import numpy as np

WORDS_PER_TRIAL = 4
_MASK64 = (1 << 64) - 1


def trial_words(seed: int, start: int, count: int) -> np.ndarray:
    """Random words of trials ``start .. start + count - 1`` as a (count, 4) uint64 array."""
    bit_generator = np.random.Philox(key=seed & _MASK64, counter=start)
    return bit_generator.random_raw(WORDS_PER_TRIAL * count).reshape(count, WORDS_PER_TRIAL)


def input_bits(words: np.ndarray, node: int) -> np.ndarray:
    """Input bits of node 0 (A) or 1 (B) taken from the top bit of their word."""
    return (words[:, node] >> np.uint64(63)).astype(np.uint8)


def outcome_uniforms(words: np.ndarray) -> np.ndarray:
    """Uniform doubles in [0, 1) from the top 53 bits of word 2."""
    return (words[:, 2] >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def input_bit_stream(seed: int, trial_index: int, node: int) -> int:
    """The input bit of ``node`` (0 for A, 1 for B) in trial ``trial_index``.

    Raises:
        ValueError: If node is not 0 or 1.
    """
    if node not in (0, 1):
        raise ValueError(f"node must be 0 or 1, got {node}")
    return int(input_bits(trial_words(seed, trial_index, 1), node)[0])
