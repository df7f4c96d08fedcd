"""Acceptance criteria 1-9, one test each, each printing a single verdict line."""

import json
import time

from bdspaces import ah as ahmod
from bdspaces import original as orig
from bdspaces import shift
from bdspaces.config import build, load_config, serialize
from bdspaces.engine import check_core
from bdspaces.linalg import ONE, Q, Rational, format_rational, parse_rational
from bdspaces.serialize import dumps_space, loads_space, spaces_equal
from bdspaces.suites import toy_audits

from conftest import toy_params

LAMBDAS = [Q("1/2"), Q("-1/3"), Q("1/5")]


def test_criterion_1_r2_steps(acceptance_line):
    t0 = time.perf_counter()
    space = shift.build_r2(12)
    rep = shift.verify_steps(space)
    d0 = shift.DTable(space)(0)
    # independent oracle: 2^-(number of ones in the binary expansion)
    oracle_ok = all(d0[n] == Q(1) / 2 ** bin(n).count("1") for n in range(2048))
    elapsed = time.perf_counter() - t0
    ids = [c.id for c in rep.checks if c.status == "pass"]
    ok = len(space) == 2048 and rep.ok and oracle_ok and all(f"step-{s}" in ids for s in range(1, 9)) and elapsed < 60
    acceptance_line(1, ok, f"r2 rank 12, {len(space)} elements, steps 1-8 exact, {elapsed:.1f}s")
    assert ok, rep.to_json()


def test_criterion_2_r2_collapse(acceptance_line):
    t0 = time.perf_counter()
    space = shift.build_r2(12)
    results = {}
    for N in range(2, 13):
        rep = shift.c0_certificate(space, N)
        results[N] = (rep.ok, rep.get("identity-distance").witness["norm_I_minus_T"])
    norms_ok = all(space.cstar[n].norm() == Q("1/2") for n in range(1, 2048))
    elapsed = time.perf_counter() - t0
    ok = norms_ok and all(r and v == Q("1/2") for r, v in results.values()) and elapsed < 10
    acceptance_line(2, ok, f"||c*_n|| = 1/2 for n < 2048 and ||I - T|| = 1/2 at ranks 2..12, {elapsed:.1f}s")
    assert ok, results


def test_criterion_3_generic_bounds(acceptance_line, orig_params):
    t0 = time.perf_counter()
    verdicts = []
    for p, lam in zip(orig_params, (Q(3), Q("15/4"))):
        space = orig.build_original(p, 5)
        rep = orig.bounds_report(p, space, 5)
        verdicts.append((p.lam == lam, rep.ok, rep.get("basis-projections").witness["max_norm"]))
    elapsed = time.perf_counter() - t0
    ok = all(a and b for a, b, _ in verdicts) and elapsed < 120
    acceptance_line(3, ok, f"rank 5: max ||P*_m|| = {verdicts[0][2]} <= 3 and {verdicts[1][2]} <= 15/4, {elapsed:.1f}s")
    assert ok, verdicts


def test_criterion_4_cross_check(acceptance_line, orig_params, orig_5):
    t0 = time.perf_counter()
    counts = []
    for p, space in zip(orig_params, orig_5):
        rep = orig.cross_check(p, space, 5)
        counts.append((rep.ok, rep.get("cstar-equals-istar").witness["mismatch_count"], len(space)))
    elapsed = time.perf_counter() - t0
    ok = all(r and m == 0 for r, m, _ in counts) and elapsed < 120
    acceptance_line(4, ok, f"c* = i*_n e* on {counts[0][2]} elements per space, 0 mismatches, {elapsed:.1f}s")
    assert ok, counts


def test_criterion_5_isometry_separation(acceptance_line, orig_params, orig_6):
    t0 = time.perf_counter()
    p, space = orig_params[0], orig_6
    bases = orig.canonical_bases(space, [2, 3, 4, 5])
    ops = {n: orig.basic_operator(space, bases[n]) for n in bases}
    sep = orig.separation(space, ops[3], ops[2], p.lam)
    base_norm = space.dstar(ops[2].base).norm()
    wit = orig.nonseparability_witness(space, ops, (2, 3, 4), (2, 3, 5), p.lam)
    tau_norm = space.dstar(wit["tau"]).norm()
    elapsed = time.perf_counter() - t0
    sixth = Q("1/6")
    ok = (
        sep["value"] == ONE / base_norm
        and sep["value"] >= sixth
        and wit["difference"] == ONE / tau_norm
        and wit["difference"] >= sixth
        and elapsed < 120
    )
    acceptance_line(5, ok, f"separation {sep['value']} >= 1/6, prefix witness difference {wit['difference']} >= 1/6, {elapsed:.1f}s")
    assert ok, (sep, wit)


def test_criterion_6_x3_algebra(acceptance_line):
    t0 = time.perf_counter()
    ah = ahmod.build_ah_space(toy_params(3))
    table = ahmod.check_operator_table(ah)
    nil = ahmod.check_nilpotency(ah)
    analysis = ahmod.check_analysis(ah)
    sigma = ahmod.check_sigma_lemmas(ah)
    comm = ahmod.check_commutation(ah)
    elapsed = time.perf_counter() - t0
    reps = (table, nil, analysis, sigma, comm)
    ok = all(r.ok for r in reps) and elapsed < 300
    odd = sigma.get("odd-weight-monotone").witness
    acceptance_line(
        6,
        ok,
        f"X_3 rank 6, {len(ah)} elements: (R*)^3 = 0, (R*)^2 != 0, G, analysis, Sigma lemmas, "
        f"odd weights ({odd['odd_elements']} elements), commutation, {elapsed:.1f}s",
    )
    assert ok, [r.to_dict() for r in reps if not r.ok]


def test_criterion_7_calkin_witnesses(acceptance_line):
    t0 = time.perf_counter()
    xinf = ahmod.build_ah_space(toy_params("inf"))
    nil = ahmod.check_nilpotency(xinf)
    cal = ahmod.calkin_witnesses(xinf, LAMBDAS)
    l1 = cal.get("l1-norm").witness["value"]
    pairing = cal.get("witness-pairing").witness
    x2 = ahmod.build_ah_space(toy_params(2))
    lam2 = LAMBDAS[:2]
    cal2 = ahmod.calkin_witnesses(x2, lam2)
    fam = cal2.get("noncompact-family-0").witness
    elapsed = time.perf_counter() - t0
    ok = (
        nil.get("R-star-rank-power").status == "pass"
        and l1 == Q("31/30")
        and pairing["expected"] == Q("31/30") / 6
        and all(v == Q("31/30") / 6 for _, v in pairing["values"])
        and cal2.get("noncompact-family-0").status == "pass"
        and fam["distances"] == [2 * abs(lam2[0])]
        and elapsed < 120
    )
    acceptance_line(7, ok, f"X_inf: l1 value {l1}, pairing {pairing['expected']}; X_2 distance {format_rational(fam['distances'][0])}, {elapsed:.1f}s")
    assert ok, (nil.to_dict(), cal.to_dict(), cal2.to_dict())


def _cfg(space_name, **ov):
    return load_config(None, {"space": space_name, **ov})


def test_criterion_8_property_suites(acceptance_line):
    t0 = time.perf_counter()
    configs = [
        ("r2", {"r2": {"max_rank": 8}}),
        ("original", {"original": {"a": "1", "b": "1/3", "max_rank": 5}}),
        ("original", {"original": {"a": "3/4", "b": "2/5", "max_rank": 5}}),
        ("xk", {"ah": {"kind": "k:3"}}),
        ("xk", {"ah": {"kind": "k:2"}}),
        ("xinf", {}),
    ]
    failures = []
    for name, ov in configs:
        cfg = _cfg(name, **ov)
        b1 = build(cfg)
        core = check_core(b1.space, min(b1.space.max_rank, 5))
        if not core.ok:
            failures.append((name, "core", core.to_dict()))
        text = serialize(b1)
        loaded, _, _ = loads_space(text)
        if not spaces_equal(b1.space, loaded) or dumps_space(loaded, *_header_extra(text)) != text:
            failures.append((name, "round-trip"))
        cfg8 = _cfg(name, jobs=8, **ov)
        if serialize(build(cfg8)) != text:
            failures.append((name, "jobs-determinism"))
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 300
    acceptance_line(8, ok, f"biorthogonality, change of basis, nesting, round trip and jobs 1/8 determinism on {len(configs)} spaces, {elapsed:.1f}s")
    assert ok, failures


def _header_extra(text):
    data = json.loads(text)
    return data["header"], data["extra"]


def test_criterion_9_inequality_audits(acceptance_line):
    reports = [toy_audits(ahmod.build_ah_space(toy_params(k))) for k in (3, "inf")]
    found = []
    for rep in reports:
        for c in rep.checks:
            if c.status not in ("audit-pass", "audit-fail"):
                continue
            for key in ("lhs", "rhs"):
                if key in c.witness:
                    found.append(isinstance(c.witness[key], Rational))
            # exact rationals survive the JSON form as 'p/q' strings
            for key, v in c.to_dict()["witness"].items():
                if key in ("lhs", "rhs"):
                    parse_rational(v)
    ran = [c.id for rep in reports for c in rep.checks]
    ok = bool(found) and all(found) and any("ris-average" in i for i in ran) and any("exact-pair:norm" in i for i in ran)
    acceptance_line(9, ok, f"{len(found)} audited left/right-hand values, all exact rationals (report-only)")
    assert ok, [r.to_dict() for r in reports]
