"""End-to-end acceptance checks, one per criterion.

Each test prints a single ``CRITERION n: PASS|FAIL`` line (visible with or
without ``-s``) before asserting.
"""

import json
import math
import time

import numpy as np
import pytest

from builders import (
    D_CANTOR,
    OSC_POLICY,
    astring,
    fat_cantor,
    oscillating_pair,
    power_law,
    translation,
    two_ratio,
)
from fractaltrace import cli, dirac, measures, metric, oporacle, seqcore, traces, zeta
from fractaltrace import fractalspec as fs
from fractaltrace.fractalspec import GaugeFunction

ALT = ([2, 3], [0.25, 1 / 6])


def verdict(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def test_criterion_01_cantor_dimension(capsys, tmp_path):
    path = tmp_path / "cantor.json"
    path.write_text(json.dumps(fs.spec_to_dict(fs.cantor())))
    t0 = time.perf_counter()
    code = cli.main(["dim", "--spec", str(path)])
    dt = time.perf_counter() - t0
    res = json.loads(capsys.readouterr().out)
    exact = math.log(2) / math.log(3)
    ss = zeta.selfsimilar_report(fs.cantor()).d
    ok = code == 0 and abs(res["d_abscissa"] - exact) < 1e-2 and abs(ss - exact) < 1e-9 and dt < 1.0
    verdict(capsys, 1, ok, f"abscissa={res['d_abscissa']:.6f} selfsimilar={ss:.10f} time={dt:.2f}s")


def test_criterion_02_zeta_closed_forms(capsys):
    t0 = time.perf_counter()
    spec = fs.cantor()
    rep = zeta.selfsimilar_report(spec)
    got = {}
    for kind, want, closed in (("filled", 6.0, rep.zeta_filled(1.0)), ("lacunary", 2.0, rep.zeta_lacunary(1.0))):
        s = dirac.symmetric_spectrum([2], [1 / 3], kind, 40)
        direct = zeta.zeta_partial(s, 1.0).partial_sum
        got[kind] = (direct, closed, want)
    dt = time.perf_counter() - t0
    ok = dt < 1.0 and all(abs(d - c) / c < 1e-6 and abs(c - w) < 1e-12 for d, c, w in got.values())
    detail = " ".join(f"{k}: direct={d:.9f} closed={c:.9f}" for k, (d, c, _) in got.items())
    verdict(capsys, 2, ok, f"{detail} time={dt:.2f}s")


def test_criterion_03_dixmier_values(capsys):
    t0 = time.perf_counter()
    vals = {k: traces.dixmier(dirac.symmetric_spectrum([2], [1 / 3], k, 35), D_CANTOR).value for k in dirac.KINDS}
    dt = time.perf_counter() - t0
    rep = zeta.selfsimilar_report(fs.cantor())
    lac, fil, full = vals["lacunary"], vals["filled"], vals["full"]
    ok = (
        abs(lac * math.log(2) - 1) < 0.01
        and abs(fil * math.log(2) / 2 - 1) < 0.01
        and abs(full / (lac + fil) - 1) < 0.02
        and abs(lac / (rep.residue_lacunary / rep.d) - 1) < 0.02
        and abs(fil / (rep.residue_filled / rep.d) - 1) < 0.02
        and dt < 5.0
    )
    verdict(capsys, 3, ok, f"lacunary={lac:.6f} filled={fil:.6f} full={full:.6f} time={dt:.2f}s")


def test_criterion_04_a_string(capsys):
    t0 = time.perf_counter()
    gaps = astring(10**6)
    dix = traces.dixmier(dirac.spectrum_from_gaps(gaps), 0.5).value
    mink = fs.minkowski_content(gaps, GaugeFunction.power(0.5))
    pred = 2**0.5 * 0.5 * mink.estimate
    dt = time.perf_counter() - t0
    ok = abs(dix / 2 - 1) < 0.02 and abs(pred / dix - 1) < 0.03 and dt < 10.0
    verdict(capsys, 4, ok, f"dixmier={dix:.6f} M={mink.estimate:.6f} 2^d(1-d)M={pred:.6f} time={dt:.2f}s")


def test_criterion_05_symmetric_delta(capsys):
    sym = zeta.symmetric_dimension_and_delta(*ALT)
    d = math.log(6) / math.log(24)
    exact_ok = (
        abs(sym.delta_lower - 0.5) < 1e-5
        and abs(sym.delta_upper - math.log(3) / math.log(6)) < 1e-5
        and abs(sym.d - d) < 1e-5
    )
    # the lacunary stream; full and filled mix the two blocks (see test below)
    est = seqcore.indices(dirac.to_step_function(dirac.symmetric_spectrum(*ALT, "lacunary", 25)))
    num_ok = (
        abs(est.delta_lower - sym.delta_lower) < 0.05
        and abs(est.delta_upper - sym.delta_upper) < 0.05
        and abs(est.d_lower - d) < 0.05
        and abs(est.d_upper - d) < 0.05
    )
    verdict(
        capsys, 5, exact_ok and num_ok,
        f"exact d={sym.d:.5f} dl={sym.delta_lower:.5f} du={sym.delta_upper:.5f}; "
        f"stream d_low={est.d_lower:.4f} d_up={est.d_upper:.4f} dl={est.delta_lower:.4f} du={est.delta_upper:.4f}",
    )


def _suite():
    spec_streams = {
        "cantor-lacunary": dirac.symmetric_spectrum([2], [1 / 3], "lacunary", 30),
        "cantor-filled": dirac.symmetric_spectrum([2], [1 / 3], "filled", 30),
        "cantor-full": dirac.symmetric_spectrum([2], [1 / 3], "full", 30),
        "alternating-lacunary": dirac.symmetric_spectrum(*ALT, "lacunary", 25),
        "alternating-full": dirac.symmetric_spectrum(*ALT, "full", 25),
        "two-ratio-full": dirac.spectrum(two_ratio(), "full", 20),
        "translation-full": dirac.spectrum(translation(), "full", 12),
        "fat-cantor-filled": dirac.spectrum(fat_cantor(), "filled", 20),
    }
    out = {k: (dirac.to_step_function(s), seqcore.DEFAULT_POLICY) for k, s in spec_streams.items()}
    out["a-string"] = (dirac.to_step_function(dirac.spectrum_from_gaps(astring(10**6))), seqcore.DEFAULT_POLICY)
    out["harmonic"] = (power_law(1.0, 10**6), seqcore.DEFAULT_POLICY)
    f, g, m = oscillating_pair()
    out["oscillating-f"] = (f, OSC_POLICY)
    out["oscillating-g"] = (g, OSC_POLICY)
    out["oscillating-min"] = (m, OSC_POLICY)
    return out


def test_criterion_06_index_ordering(capsys):
    lines, ok = [], True
    reps = {}
    for name, (mu, pol) in _suite().items():
        r = seqcore.indices(mu, pol)
        reps[name] = r
        good = r.ordered()
        ok &= good
        lines.append(f"{name}:{r.delta_lower:.3g}<={r.d_lower:.3g}<={r.d_upper:.3g}<={r.delta_upper:.3g}{'' if good else '!'}")
    f, m = reps["oscillating-f"], reps["oscillating-min"]
    osc_ok = f.delta_lower < 0.05 and f.delta_upper == math.inf
    min_ok = all(abs(v - 1) < 0.05 for v in (m.delta_lower, m.d_lower, m.d_upper, m.delta_upper))
    verdict(capsys, 6, ok and osc_ok and min_ok and len(reps) >= 10, f"{len(reps)} streams; " + " ".join(lines))


def test_criterion_07_measurability(capsys):
    spec = fs.cantor()
    cases = (("1", measures.const(1.0), 1.0), ("chi[0,1/3]", measures.indicator(0, 1 / 3), 0.5), ("x", measures.linear(), 0.5))
    ok, parts = True, []
    for name, f, want in cases:
        spread, reps = traces.measurability_spread(spec, "lacunary", D_CANTOR, f, level=16)
        val = reps[0].value
        integral, _ = measures.integrate(measures.homogeneous_measure(spec, D_CANTOR, 16), f)
        good = spread < 1e-3 and abs(val - want) < 1e-3 and abs(val - integral) < 1e-3
        ok &= good
        parts.append(f"{name}: value={val:.6f} spread={spread:.2e} integral={integral:.6f}")
    verdict(capsys, 7, ok, "; ".join(parts))


def test_criterion_08_homogeneous_measure(capsys):
    spec = fs.cantor()
    exact = all(np.all(measures.homogeneous_measure(spec, D_CANTOR, n).weights == 2.0**-n) for n in range(0, 16))
    d2 = zeta.similarity_dimension([0.5, 0.25])
    w = measures.homogeneous_measure(two_ratio(), d2, 1).weight((1,))
    golden = abs(w - (math.sqrt(5) - 1) / 2) < 1e-9
    refine = 0.0
    for spec_, a in ((two_ratio(), d2), (fs.symmetric(*ALT), 0.4), (translation(), 0.7)):
        for n in range(1, 8):
            c = measures.homogeneous_measure(spec_, a, n).weights
            f = measures.homogeneous_measure(spec_, a, n + 1).weights
            refine = max(refine, float(np.max(np.abs(f.reshape(c.size, -1).sum(axis=1) - c))))
    ok = exact and golden and refine < 1e-12
    verdict(capsys, 8, ok, f"cantor exact={exact} two-ratio weight={w:.12f} refinement error={refine:.1e}")


def test_criterion_09_metric(capsys):
    spec = fs.cantor()
    worst = 0.0
    for level in range(1, 7):
        g = metric.build_graph(spec, "full", level)
        v = g.vertices
        D = metric.distance_matrix(g, v)
        worst = max(worst, float(np.max(np.abs(D - np.abs(v[:, None] - v[None, :])))))
    c = metric.lacunary_gap_sum_bound(spec, 0.0, 1.0, 40).deficit
    fat = metric.lacunary_gap_sum_bound(fat_cantor(), 0.0, 1.0, 30).deficit
    ok = worst < 1e-12 and c < 1e-6 and abs(fat - 0.5601) < 1e-3
    verdict(capsys, 9, ok, f"max |d-|x-y||={worst:.1e} cantor deficit={c:.2e} fat deficit={fat:.6f}")


def test_criterion_10_appendix_suite(capsys):
    t0 = time.perf_counter()
    res = oporacle.appendix_suite(seed=0, pairs=200, dim=8)
    dt = time.perf_counter() - t0
    ok = (
        res["all_pass"]
        and res["coweyl_min_slack"] >= -1e-10
        and res["weyl_min_slack"] >= -1e-10
        and oporacle.holder_constant(2) == 2.0
        and all(c <= 2.0 for c in res["holder_constants"].values())
        and len(res["holder_cases"]) == 3
        and dt < 5.0
    )
    cases = ", ".join(f"{c['lhs']:.4f}<={c['rhs']:.4f}" for c in res["holder_cases"])
    verdict(
        capsys, 10, ok,
        f"coweyl slack={res['coweyl_min_slack']:.3e} weyl slack={res['weyl_min_slack']:.3e} holder {cases} time={dt:.2f}s",
    )


def test_criterion_11_box_dimension(capsys):
    members = {
        "cantor": (fs.cantor(), 30),
        "alternating": (fs.symmetric(*ALT), 24),
        "two-ratio": (two_ratio(), 20),
        "translation": (translation(), 12),
    }
    ok, parts = True, []
    for name, (spec, level) in members.items():
        assert fs.lebesgue_zero(spec).verdict == "zero"
        g = fs.gaps_of_spec(spec, level)
        box = fs.box_dim_from_gaps(g)
        ab = zeta.abscissa(dirac.spectrum_from_gaps(g)).estimate
        ok &= abs(box - ab) < 0.02
        parts.append(f"{name}: box={box:.4f} abscissa={ab:.4f}")
    a = astring(10**6)
    box, ab = fs.box_dim_from_gaps(a), zeta.abscissa(dirac.spectrum_from_gaps(a)).estimate
    ok &= abs(box - ab) < 0.02
    parts.append(f"a-string: box={box:.4f} abscissa={ab:.4f}")
    cm = fs.minkowski_content(fs.gaps_of_spec(fs.cantor(), 30), GaugeFunction.power(D_CANTOR))
    am = fs.minkowski_content(a, GaugeFunction.power(0.5))
    prev = (cm.previous_band[1] - cm.previous_band[0]) / cm.estimate
    stable = abs(prev - cm.band_ratio) < 0.01
    ok &= cm.verdict == "not_measurable" and stable and am.verdict == "measurable"
    parts.append(f"cantor minkowski={cm.verdict} band={cm.band_ratio:.4f}/{prev:.4f}; a-string={am.verdict}")
    verdict(capsys, 11, ok, "; ".join(parts))
