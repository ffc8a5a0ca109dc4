"""Acceptance criteria 1-12 at the default preset sizes.

Every preset is run once through ``run_experiment``; each check it records is
tagged with the criterion it evidences. Criterion 12 reruns every preset with
the same seed and compares the CSV artifacts byte for byte. One PASS/FAIL line
per criterion is printed (visible without ``-s``).

Runtime is several minutes; select with ``pytest tests/test_acceptance.py``.
"""

import json
from collections import defaultdict

import pytest

from nskgevrey import cli
from nskgevrey.presets import PRESETS

SEED = 0


def _checks(out_dir):
    return json.loads((out_dir / "manifest.json").read_text())["checks"]


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    return {pid: cli.run_experiment(pid, seed=SEED, out=root / "first" / pid)[1] for pid in PRESETS}


@pytest.fixture(scope="module")
def by_criterion(runs):
    out = defaultdict(list)
    for pid, d in runs.items():
        for c in _checks(d):
            out[c["criterion"]].append((pid, c))
    return out


def _report(capsys, criterion, passed, detail):
    with capsys.disabled():
        print(f"\nCRITERION {criterion:>2}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.mark.parametrize("criterion", range(1, 12))
def test_criterion(criterion, by_criterion, capsys):
    entries = by_criterion[criterion]
    failed = [f"{pid}: {c['name']}={c['value']:.6g} (target {c['target']})" for pid, c in entries if not c["passed"]]
    passed = bool(entries) and not failed
    detail = f"{len(entries)} checks" if passed else "; ".join(failed) or "no checks recorded"
    _report(capsys, criterion, passed, detail)
    assert entries, f"no checks recorded for criterion {criterion}"
    assert not failed, "\n".join(failed)


def test_criterion_12_determinism(runs, tmp_path, capsys):
    mismatched = []
    compared = 0
    for pid, first in runs.items():
        _, second = cli.run_experiment(pid, seed=SEED, out=tmp_path / pid)
        names = sorted(p.name for p in first.glob("*.csv"))
        if not names:
            mismatched.append(f"{pid}: no CSV artifacts")
        for name in names:
            compared += 1
            if (first / name).read_bytes() != (second / name).read_bytes():
                mismatched.append(f"{pid}/{name}")
    passed = not mismatched
    _report(capsys, 12, passed, f"{compared} CSV files byte-identical" if passed else ", ".join(mismatched))
    assert passed, mismatched
