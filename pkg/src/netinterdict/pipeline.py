"""Dataset plumbing shared by the CLI: JSONL I/O, seeding, splits, graphs."""

from __future__ import annotations

import hashlib
import json
import os
from typing import Iterable, List, Optional

import numpy as np

from netinterdict.encoding import MmilpGraph, build_graph
from netinterdict.instances import Instance, instance_from_dict
from netinterdict.reduction import reduce_instance

SEED_ENV = "INTERDICT_SEED"


def default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


def derive_seed(base: int, *parts) -> int:
    """Stable 64-bit seed from a base seed and arbitrary labels."""
    h = hashlib.sha256(repr((int(base),) + tuple(str(p) for p in parts)).encode())
    return int.from_bytes(h.digest()[:8], "little")


def split_of(instance_id: str, seed: int, fractions=(0.5, 0.25, 0.25)) -> str:
    """Hash-based train/val/test assignment; stable as the dataset grows."""
    u = derive_seed(seed, "split", instance_id) / 2.0**64
    if u < fractions[0]:
        return "train"
    if u < fractions[0] + fractions[1]:
        return "val"
    return "test"


def graph_for(inst: Instance, random_dim: int, seed: int) -> MmilpGraph:
    key = inst.id if inst.id is not None else json.dumps(inst.to_dict(), sort_keys=True)
    return build_graph(reduce_instance(inst), random_dim, derive_seed(seed, "features", key))


def read_jsonl(path) -> List[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_jsonl(path, records: Iterable[dict]):
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_instances(path) -> List[Instance]:
    return [instance_from_dict(d) for d in read_jsonl(path)]


def labels_by_id(path) -> dict:
    return {rec["instance"]: rec for rec in read_jsonl(path)}


def label_vector(rec: dict) -> np.ndarray:
    return np.asarray(rec["label_x"], dtype=float)
