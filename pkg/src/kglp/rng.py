"""Seed derivation.

Every random stage of the pipeline draws from its own Generator, derived
deterministically from the single master seed plus a small integer tag per
stage. Derivation uses numpy's SeedSequence spawn-key mechanism:

    SeedSequence([master_seed, stage_tag, *extras]) -> PCG64

so two stages never share a stream, and re-running any one stage in
isolation reproduces its randomness bit for bit. The extras encode the
loop coordinates a stage runs under (relation index, fold index, dimension),
in that order.

The embedding trainer does not consume these Generators directly inside its
compiled kernel; it draws one uint64 from the stage Generator and feeds it
to a splitmix64 counter that lives in kernel-local state. That keeps the
kernel free of object-mode calls while staying on the same derivation tree.
"""

import os

import numpy as np

# Stage tags. Frozen: changing one silently changes every derived stream.
STAGE_SPLIT = 1
STAGE_NEGATIVES = 2
STAGE_EMBED = 3
STAGE_CLASSIFY = 4
STAGE_SYNTH = 5

_MASK64 = (1 << 64) - 1


def derive_seedseq(master_seed, stage_tag, *extras):
    """Build the SeedSequence for one pipeline stage.

    extras are small non-negative ints (relation index, fold, dim, ...).
    """
    entropy = [int(master_seed) & _MASK64, int(stage_tag)]
    entropy.extend(int(e) for e in extras)
    return np.random.SeedSequence(entropy)


def generator(master_seed, stage_tag, *extras):
    """PCG64 Generator for one stage of the pipeline."""
    return np.random.Generator(np.random.PCG64(derive_seedseq(master_seed, stage_tag, *extras)))


def kernel_seed(master_seed, stage_tag, *extras):
    """One uint64 to seed a splitmix64 stream inside a compiled kernel."""
    g = generator(master_seed, stage_tag, *extras)
    return int(g.integers(0, 1 << 64, dtype=np.uint64))


def resolve_master_seed(cli_value=None, env=None):
    """Pick the master seed: --seed flag wins, then KGLP_SEED, then 0."""
    if cli_value is not None:
        return int(cli_value) & _MASK64
    environ = os.environ if env is None else env
    raw = environ.get("KGLP_SEED")
    if raw is not None:
        try:
            return int(raw) & _MASK64
        except ValueError as exc:
            raise ValueError(f"KGLP_SEED must be an integer, got {raw!r}") from exc
    return 0
