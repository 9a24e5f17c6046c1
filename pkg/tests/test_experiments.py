import json
from fractions import Fraction

import numpy as np
import pytest

from usflab.experiments import (LambdaSpec, LambdaValidationError, PreconditionError, Report,
                                bootstrap_median_ci, coarse_line, lambda_labels,
                                run_connection_scaling, run_domination_coupling,
                                run_renormalized_field, run_special_component, run_sprinkling,
                                run_transience_probe, sprinkling_annuli, validate_lambda,
                                wilson_interval)
from usflab.lattice import Edge, Window, write_edge_list

AXIS = LambdaSpec("axis-lines")
FULL = LambdaSpec("full")
WUSF = LambdaSpec("independent-wusf")


def half_plane_lambda(path, radius, cut):
    """Full lattice on B_radius minus the edges between x = cut and x = cut + 1."""
    w = Window.box(radius, 2)
    edges = [e for e in w.edges() if not (e.axis == 0 and e.base[0] == cut)]
    write_edge_list(path, edges)
    return LambdaSpec("file", path=str(path))


# -- Lambda ------------------------------------------------------------------

def test_lambda_generators_validate():
    w = Window.box(5, 3)
    for spec in (AXIS, FULL, WUSF, LambdaSpec("axis-lines", axis=2)):
        validate_lambda(spec.build(w, 1), w)


def test_stranded_vertex_named(tmp_path):
    w = Window.box(2, 2)
    edges = [e for e in w.edges() if (0, 0) not in e.endpoints]
    write_edge_list(tmp_path / "l.txt", edges)
    spec = LambdaSpec("file", path=str(tmp_path / "l.txt"))
    with pytest.raises(LambdaValidationError, match=r"\(0, 0\)"):
        lambda_labels(spec, w, None)


def test_file_lambda_accepts_snapshot_header(tmp_path):
    w = Window.box(3, 2)
    write_edge_list(tmp_path / "l.txt", w.edges(), header="2 0 -")
    spec = LambdaSpec("file", path=str(tmp_path / "l.txt"))
    assert len(spec.build(w)) == w.num_edges()


def test_bad_lambda_kind():
    with pytest.raises(ValueError):
        LambdaSpec("spiral")


# -- domination ----------------------------------------------------------------

def test_domination_containment_and_bound():
    r = run_domination_coupling(Window.box(3, 2), 1, 1.0, 40, 3)
    assert all(x.outputs["contained"] for x in r.records)
    assert Fraction(r.summary["min_p"]) >= Fraction(1, 4)
    assert r.summary["phi_in_band"]


def test_domination_5x5_has_too_few_cells():
    with pytest.raises(PreconditionError, match="full cells"):
        run_domination_coupling(Window.box(2, 2), 1, 1.0, 1, 0)


def test_domination_3d():
    r = run_domination_coupling(Window.box(3, 3), 1, 0.5, 3, 1)
    assert Fraction(r.summary["min_p"]) >= Fraction(1, 6)
    assert r.summary["containment_frequency"] == 1.0


# -- connection scaling ------------------------------------------------------------

def test_connection_full_lattice_always():
    r = run_connection_scaling(FULL, 2, 1, 0.3, [2, 4], 5, 1)
    assert [row["p_connect"] for row in r.rows] == [1.0, 1.0]


def test_connection_eps_zero_axis_lines_never():
    r = run_connection_scaling(AXIS, 2, 1, 0.0, [1, 3, 5], 5, 1)
    assert [row["p_connect"] for row in r.rows] == [0.0, 0.0, 0.0]


def test_connection_report_has_intervals():
    r = run_connection_scaling(WUSF, 2, 1, 0.5, [3], 20, 2)
    row = r.rows[0]
    assert row["ci_low"] <= row["p_connect"] <= row["ci_high"] and row["trials"] == 20


# -- sprinkling ------------------------------------------------------------------

def test_sprinkling_preconditions():
    with pytest.raises(PreconditionError, match="perfect square"):
        run_sprinkling(AXIS, 2, 1, 0.5, 20, 15, 1, 0)
    with pytest.raises(PreconditionError):
        run_sprinkling(AXIS, 2, 1, 0.5, 8, 16, 1, 0)  # m < n
    with pytest.raises(PreconditionError):
        run_sprinkling(AXIS, 2, 1, 0.5, 2000, 16, 1, 0)  # m + sqrt(n) > 8dn


def test_sprinkling_connected_lambda_trivial():
    r = run_sprinkling(FULL, 2, 1, 0.5, 16, 16, 4, 0)
    assert all(x.outputs["K"] == [1] * 9 for x in r.records)
    assert all(all(x.outputs["event"]) for x in r.records)


def test_annuli_disjoint_with_buffer():
    ann = sprinkling_annuli(400, 400, 2, 1)
    assert len(ann) == 8
    for (a, b), (c, _) in zip(ann, ann[1:]):
        assert c - b == pytest.approx(2)
    # at n = 16 every annulus is empty: sqrt(n)/4d = 0.5 < 2k
    assert all(a >= b for a, b in sprinkling_annuli(16, 16, 2, 1))


@pytest.mark.slow
def test_sprinkling_eps_one_large_n_single_component():
    # largest n that fits comfortably on a desk; see the ledger for the outcome
    r = run_sprinkling(WUSF, 2, 1, 1.0, 900, 900, 10, 5)
    assert r.summary["final_single_freq"] >= 0.9


# -- special component --------------------------------------------------------------

def test_special_reduces_to_sprinkling_without_avoiding_components():
    a = run_sprinkling(FULL, 2, 1, 0.5, 16, 16, 3, 0)
    b = run_special_component(FULL, 2, 1, 0.5, 16, 16, 3, 0, x_radius=30)
    assert all(not x.outputs["special"] for x in b.records)
    assert [x.outputs["K"] for x in a.records] == [x.outputs["K"] for x in b.records]


def test_axis_lines_have_components_avoiding_Bm():
    # lines at height |y| > m never meet B_m, so the special node is not empty
    r = run_special_component(AXIS, 2, 1, 0.5, 16, 16, 2, 0, x_radius=30)
    assert all(x.outputs["special"] for x in r.records)
    for x in r.records:
        if x.outputs["K"][-1] == 1:
            assert x.outputs["event"]


@pytest.mark.parametrize("n", [16, 36, 64])
def test_special_component_shell_confined(tmp_path, n):
    r_ = int(n ** 0.5)
    m = n
    radius = m + 2 * r_ + 2
    spec = half_plane_lambda(tmp_path / "h.txt", radius, m)
    rep = run_special_component(spec, 2, 1, 0.5, m, n, 10, 1, x_radius=radius)
    assert rep.summary["vacuous_trials"] == 0
    assert all(x.outputs["U_m_m+r"] == 1 for x in rep.records)
    assert rep.summary["event_freq"] == 1.0


# -- renormalized field -----------------------------------------------------------

def test_field_full_lattice_is_one():
    r = run_renormalized_field(FULL, 2, 1, 0.5, 4, coarse_line(3, 2), 5, 0)
    assert all(all(x.outputs["X"]) for x in r.records)
    assert r.summary["p_hat"] == 1.0


def test_field_requires_n_above_2k():
    with pytest.raises(PreconditionError):
        run_renormalized_field(FULL, 2, 2, 0.5, 4, coarse_line(1, 2), 1, 0)


def test_field_consistent_on_shared_cells():
    # a site's bit does not depend on which other sites are sampled
    a = run_renormalized_field(WUSF, 2, 1, 0.5, 4, coarse_line(0, 2), 10, 9)
    b = run_renormalized_field(AXIS, 2, 1, 0.5, 4, coarse_line(2, 2), 10, 9)
    c = run_renormalized_field(AXIS, 2, 1, 0.5, 4, coarse_line(0, 2), 10, 9)
    assert [x.outputs["X"][0] for x in b.records] == [x.outputs["X"][0] for x in c.records]
    assert len(a.records) == 10


# -- transience ----------------------------------------------------------------------

def test_transience_eps_one_rayleigh():
    r = run_transience_probe(3, 1, 1.0, [4, 8], 6, 2)
    for x in r.records:
        for ra, rc in zip(x.outputs["single"], x.outputs["single+perc"]):
            assert rc <= ra * (1 + 1e-7)
    inc_a = r.summary["single"]["increments"][0]["median"]
    inc_c = r.summary["single+perc"]["increments"][0]["median"]
    assert inc_c <= inc_a


def test_transience_requires_d3():
    with pytest.raises(PreconditionError):
        run_transience_probe(2, 1, 0.5, [4, 8], 1, 0)


# -- reports and reproducibility ---------------------------------------------------------

def test_records_reproducible_and_worker_independent():
    a = run_connection_scaling(WUSF, 2, 1, 0.5, [3, 4], 6, 11)
    b = run_connection_scaling(WUSF, 2, 1, 0.5, [3, 4], 6, 11, workers=2)
    assert a.records == b.records
    assert a.to_csv() == b.to_csv() and a.to_json() == b.to_json()


def test_report_files(tmp_path):
    r = run_connection_scaling(FULL, 2, 1, 0.5, [2], 3, 4)
    c, j = r.write(tmp_path)
    lines = c.read_text().splitlines()
    assert lines[0].startswith("# usflab ") and lines[1].startswith("# config {")
    doc = json.loads(j.read_text())
    assert doc["config"]["seed"] == 4 and doc["version"]


def test_wilson_and_bootstrap():
    lo, hi = wilson_interval(0, 10)
    assert lo == 0.0 and 0.2 < hi < 0.35
    lo, hi = bootstrap_median_ci([1.0, 2.0, 3.0, 4.0, 5.0], 1)
    assert lo <= 3.0 <= hi
    assert bootstrap_median_ci([2.0, 2.0], 1) == (2.0, 2.0)
