import numpy as np
import pytest

from ctrwlab import CtrwSpec, RngStream, sample_ctrw_ensemble
from ctrwlab.engine import BLOCK_SIZE, block_sizes, map_blocks, set_default_threads
from ctrwlab.limits import time_changed_bm_ensemble


def test_block_sizes():
    assert block_sizes(1) == [1]
    assert block_sizes(2 * BLOCK_SIZE + 5) == [BLOCK_SIZE, BLOCK_SIZE, 5]
    assert sum(block_sizes(12345)) == 12345


def test_results_in_block_order():
    out = map_blocks(lambda s, m: (s.stream_id, m), 3 * BLOCK_SIZE, RngStream(1), threads=3)
    ids = [RngStream(1).substream("block", b).stream_id for b in range(3)]
    assert [o[0] for o in out] == ids


@pytest.mark.parametrize("threads", [2, 4])
def test_ensembles_independent_of_threads(threads):
    spec = CtrwSpec.subdiffusive(0.5, 200)
    reps = BLOCK_SIZE + 700
    a = sample_ctrw_ensemble(spec, reps, RngStream(3), threads=1)
    b = sample_ctrw_ensemble(spec, reps, RngStream(3), threads=threads)
    assert a.jump_times.tobytes() == b.jump_times.tobytes()
    assert a.jump_sizes.tobytes() == b.jump_sizes.tobytes()
    e1, x1 = time_changed_bm_ensemble(0.5, [0.0, 0.5, 1.0], reps, RngStream(3), 1e-2, threads=1)
    e2, x2 = time_changed_bm_ensemble(0.5, [0.0, 0.5, 1.0], reps, RngStream(3), 1e-2, threads=threads)
    assert e1.tobytes() == e2.tobytes() and x1.tobytes() == x2.tobytes()


def test_default_threads_setting():
    with pytest.raises(ValueError):
        set_default_threads(0)
    set_default_threads(2)
    set_default_threads(None)
