"""Shared fixtures: reference problems and problem-file writers."""
import json

import numpy as np
import pytest

from groupfill.problem import GainVector, GroupPartition, ValidatedProblem

#: 9-antenna reference problem: three groups with tight, loose and middling
#: caps against a total budget of 10.
REFERENCE_GAINS = [1.0, 10.0, 3.0, 0.3, 0.4, 0.6, 0.9, 1.0, 1.0]
REFERENCE_GROUPS = [[1, 2, 3], [4, 5, 6, 7], [8, 9]]
REFERENCE_CAPS = [2.0, 12.0, 4.0]
REFERENCE_TOTAL = 10.0

#: 8-antenna fading partition whose middle group is cap-starved.
FADING_GROUPS = [[1, 2, 3], [4, 5, 6, 7], [8]]
FADING_CAPS = [15.0, 3.0, 6.0]


def reference_doc(total=REFERENCE_TOTAL):
    return {
        "gains": list(REFERENCE_GAINS),
        "groups": [list(g) for g in REFERENCE_GROUPS],
        "caps": list(REFERENCE_CAPS),
        "total_power": total,
    }


def fading_doc(total=8.0):
    return {
        "gains": [1.0] * 8,
        "groups": [list(g) for g in FADING_GROUPS],
        "caps": list(FADING_CAPS),
        "total_power": total,
    }


def hand_problem():
    """Two antennas, singleton groups, tight cap on the strong antenna."""
    return ValidatedProblem(
        GainVector(np.array([4.0, 1.0])),
        GroupPartition(((1,), (2,)), (0.5, 2.0), 2.0),
    )


@pytest.fixture
def reference_problem():
    return ValidatedProblem(
        GainVector(np.array(REFERENCE_GAINS)),
        GroupPartition(
            tuple(tuple(g) for g in REFERENCE_GROUPS),
            tuple(REFERENCE_CAPS),
            REFERENCE_TOTAL,
        ),
    )


@pytest.fixture
def fading_partition():
    return GroupPartition(
        tuple(tuple(g) for g in FADING_GROUPS), tuple(FADING_CAPS), 8.0
    )


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def write_toml(path, doc):
    lines = [
        f"gains = {doc['gains']}",
        f"groups = {doc['groups']}",
        f"caps = {doc['caps']}",
        f"total_power = {doc['total_power']}",
    ]
    path.write_text("\n".join(lines) + "\n")
    return str(path)


@pytest.fixture
def reference_file(tmp_path):
    return write_json(tmp_path / "reference.json", reference_doc())


@pytest.fixture
def fading_file(tmp_path):
    return write_toml(tmp_path / "fading.toml", fading_doc())
