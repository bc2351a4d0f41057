"""Acceptance criteria at their stated tolerances; one pass/fail line per criterion."""
import subprocess
import sys

import pytest

from langmuir_kit.acceptance import CRITERIA


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, acceptance_log):
    result = CRITERIA[number](0)
    line = result.summary_line()
    print(line)
    acceptance_log.append(line)
    for c in result.checks:
        print(f"    {c.name} = {c.value:.6g} ({c.relation} {c.threshold}) {'ok' if c.passed else 'FAIL'}")
    assert result.passed, line


def test_criterion_11_verify_determinism(tmp_path, acceptance_log):
    outs = []
    for name in ("run_a", "run_b"):
        out = tmp_path / name
        proc = subprocess.run([sys.executable, "-m", "langmuir_kit", "verify", "--seed", "0",
                               "--out", str(out)], capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(out)
    same = all((outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
               for f in ("verify.csv", "verify_summary.csv"))
    line = f"[{'PASS' if same else 'FAIL'}] criterion 11: two verify runs give byte-identical CSV"
    print(line)
    acceptance_log.append(line)
    assert same
