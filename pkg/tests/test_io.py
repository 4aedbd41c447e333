import csv
import io
import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spiked_wigner.io import (INSTANCE_CSV_COLUMNS, instance_from_bytes, instance_to_bytes,
                              instance_to_csv, samples_to_csv)
from spiked_wigner.prior import Prior
from spiked_wigner.simulator import sample_instance


@given(st.integers(2, 12), st.floats(0.0, 3.0), st.booleans(), st.integers(0, 2 ** 63), st.integers(0, 10 ** 6))
def test_binary_roundtrip(n, lam, planted, seed, index):
    inst = sample_instance(n, lam, Prior.sparse_rademacher(0.3), planted, seed, index)
    back = instance_from_bytes(instance_to_bytes(inst))
    assert back == inst


def test_binary_layout_little_endian():
    inst = sample_instance(3, 0.5, Prior.rademacher(), True, 5, 7)
    data = instance_to_bytes(inst)
    assert data[:4] == b"SPWI"
    assert struct.unpack_from("<I", data, 4)[0] == 1
    assert struct.unpack_from("<I", data, 8)[0] == 3
    assert struct.unpack_from("<d", data, 12)[0] == 0.5
    assert struct.unpack_from("<QQ", data, 20) == (5, 7)
    assert data[36] == 1
    assert len(data) == 37 + 8 * 3 + 8 * 3
    np.testing.assert_array_equal(np.frombuffer(data, "<f8", 3, 37), inst.y_upper)


def test_binary_rejects_garbage():
    data = instance_to_bytes(sample_instance(4, 0.5, Prior.rademacher(), False, 1, 1))
    with pytest.raises(ValueError):
        instance_from_bytes(b"XXXX" + data[4:])
    with pytest.raises(ValueError):
        instance_from_bytes(data[:-1])


def test_binary_refuses_interpolated_instances():
    inst = sample_instance(4, 0.5, Prior.rademacher(), True, 1, 1, t=0.5, side_r=1.0)
    with pytest.raises(ValueError):
        instance_to_bytes(inst)


def test_instance_csv():
    inst = sample_instance(4, 0.25, Prior.rademacher(), False, 9, 2)
    rows = list(csv.reader(io.StringIO(instance_to_csv(inst))))
    assert tuple(rows[0]) == INSTANCE_CSV_COLUMNS
    assert len(rows) == 1 + 6
    ij = [(int(r[4]), int(r[5])) for r in rows[1:]]
    assert ij == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    np.testing.assert_array_equal([float(r[6]) for r in rows[1:]], inst.y_upper)
    assert rows[1][:4] == ["4", "0.25", "9", "2"]


def test_samples_csv_roundtrip():
    text = samples_to_csv([(0, 0.125, "planted"), (1, -1e-17, "null")])
    rows = list(csv.reader(io.StringIO(text)))
    assert rows == [["sample_index", "log_l", "model"], ["0", "0.125", "planted"], ["1", "-1e-17", "null"]]
