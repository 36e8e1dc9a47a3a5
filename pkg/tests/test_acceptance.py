"""Exit criteria, one test per criterion, each at its stated size and tolerance.

Every criterion runs through the same scenario runners as the command line.
Its verdict line is printed and also collected for the terminal summary.
"""
import time

import pytest

from linfwidth import scenarios

pytestmark = pytest.mark.acceptance

CRITERIA = {
    1: ("exact group identities, N = 1..5, 100 trials", [("lemmas", {})], ("identity",)),
    2: ("averaging bounds on the same trials", [("lemmas", {})], ("bound",)),
    3: ("foam ratio minimum below 2 pi sqrt(N), N = 1..4", [("foam-sweep", {})], ("foam-ratio",)),
    4: ("union process: N=2 R=256 200 seeds, N=3 R=96 20 seeds",
        [("foam-union", {}), ("foam-union", {"n": 3, "resolution": 96, "seeds": 20})], None),
    5: ("kinematic shift integrals against oracles, 100 pairs", [("kinematic", {})], None),
    6: ("axis avoidance on 50 small meshes", [("avoid", {})], None),
    7: ("nerve map displacement below 1, 10^4 queries", [("tower", {})], ("nerve",)),
    8: ("high-codimension certificate from a posed separator", [("width-highcodim", {})], None),
    9: ("codimension-1 cubes and three-plane certificate, 100 meshes", [("width-codim1", {})], None),
    10: ("essential curve in one cube of side 4 sqrt(3 area)", [("essential-curve", {})], None),
}

_cache: dict = {}


def _reports(runs):
    out = []
    for cmd, over in runs:
        key = (cmd, tuple(sorted(over.items())))
        if key not in _cache:
            t0 = time.perf_counter()
            rep, _ = scenarios.run(cmd, over)
            _cache[key] = (rep, time.perf_counter() - t0)
        out.append(_cache[key])
    return out


def _verdict(request, k, title, ok, detail):
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'} {title} | {detail}"
    print(line)
    request.config.__dict__.setdefault("acceptance_lines", []).append(line)
    return ok


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(request, k):
    title, runs, families = CRITERIA[k]
    reps = _reports(runs)
    records = [r for rep, _ in reps for r in rep.records if families is None or r.family in families]
    graded = [r for r in records if r.status != "report"]
    fails = [r for r in graded if r.status == "fail"]
    secs = sum(t for _, t in reps)
    detail = f"{len(graded)} checks, {len(fails)} failed, {secs:.1f}s"
    if fails:
        detail += "; first: " + fails[0].line()
    assert graded, "criterion produced no graded checks"
    assert _verdict(request, k, title, not fails, detail), detail


def test_criterion_11_reproducible(request):
    mismatched = []
    for k, (_, runs, _) in sorted(CRITERIA.items()):
        for (cmd, over), (first, _) in zip(runs, _reports(runs)):
            again, _ = scenarios.run(cmd, over)
            if again.text() != first.text():
                mismatched.append(f"{k}:{cmd}")
    detail = f"{sum(len(r) for _, r, _ in CRITERIA.values())} re-runs, mismatched: {mismatched or 'none'}"
    assert _verdict(request, 11, "byte-identical reports on re-run", not mismatched, detail), detail
