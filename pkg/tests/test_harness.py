import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pfhalpern import cli
from pfhalpern import instances as inst
from pfhalpern.core import TraceRecord
from pfhalpern.harness import (ALGORITHMS, ProblemError, ProblemInstance, RunConfig,
                               emit_trace, fit_rate, parse_problem, problem_from_dict,
                               read_trace, run)
from pfhalpern.operators import Operator, identity_operator
from pfhalpern.sets import Box, WholeSpace


def write(tmp_path, data, name="p.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


IDENTITY = {"operator": {"type": "affine", "A": [[1, 0], [0, 1]]},
            "set": {"type": "whole-space"}, "u0": [4, 3]}
ROTATION = {"operator": {"type": "affine", "A": [[0, 1], [-1, 0]]},
            "set": {"type": "whole-space"}, "u0": [1, 1]}


class TestParse:
    def test_identity_metadata(self, tmp_path):
        P = parse_problem(write(tmp_path, IDENTITY))
        md = P.operator.metadata
        assert (md.lipschitz_L, md.strong_mono_mu, md.cocoercivity_gamma) == (1, 1, 1)
        assert P.name == "p"

    def test_bilinear_saddle_file(self, tmp_path):
        data = {"operator": {"type": "saddle-quadratic", "B": np.eye(2).tolist()},
                "set": {"type": "whole-space"}, "u0": [1, 2, 3, 4]}
        P = parse_problem(write(tmp_path, data))
        assert np.array_equal(P.operator([1.0, 2.0, 3.0, 4.0]), [3.0, 4.0, -1.0, -2.0])
        assert P.operator.metadata.cocoercivity_gamma is None

    def test_box_with_outside_start(self, tmp_path):
        data = dict(IDENTITY, set={"type": "box", "lower": [0, 0], "upper": [1, 1]})
        with pytest.raises(ProblemError, match="u0"):
            parse_problem(write(tmp_path, data))

    @pytest.mark.parametrize("mutate, field", [
        (lambda d: d.pop("operator"), "operator"),
        (lambda d: d.update(u0=[1, 2, 3]), "u0"),
        (lambda d: d.update(operator={"type": "affine", "A": [1, 2]}), "operator.A"),
        (lambda d: d.update(operator={"type": "nope"}), "operator.type"),
        (lambda d: d.update(set={"type": "ball"}), "set.radius"),
        (lambda d: d.update(set={"type": "torus"}), "set.type"),
        (lambda d: d.update(overrides={"Lip": 2}), "overrides"),
        (lambda d: d.update(reference_solution=[1, 1]), "reference_solution"),
    ])
    def test_errors_name_the_field(self, tmp_path, mutate, field):
        data = json.loads(json.dumps(IDENTITY))
        mutate(data)
        with pytest.raises(ProblemError, match=field.replace(".", r"\.")):
            parse_problem(write(tmp_path, data))

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{")
        with pytest.raises(ProblemError, match="invalid JSON"):
            parse_problem(path)

    def test_overrides_set_lipschitz(self):
        P = problem_from_dict(dict(ROTATION, overrides={"L": 1.0}))
        assert P.operator.metadata.lipschitz_L == 1.0

    def test_regularized_and_simplex(self):
        data = {"operator": {"type": "regularized", "mu": 0.5,
                             "base": {"type": "zero", "dim": 3}},
                "set": {"type": "simplex"}, "u0": [1, 0, 0]}
        P = problem_from_dict(data)
        assert P.operator.metadata.strong_mono_mu == 0.5


class TestRunConfig:
    def test_unknown_algorithm(self):
        with pytest.raises(ValueError, match="unknown algorithm"):
            RunConfig("newton", 1e-3)

    @pytest.mark.parametrize("alg, kw", [
        ("eg", {"l0": 1.0}),
        ("halpern-cocoercive", {"a0": 1.0}),
        ("halpern-lipschitz", {"eta": 1.0}),
        ("halpern-lipschitz-scaled", {}),
        ("halpern-cocoercive", {"l0": -1.0}),
    ])
    def test_gates(self, alg, kw):
        with pytest.raises(ValueError):
            RunConfig(alg, 1e-3, **kw)

    def test_eps_positive(self):
        with pytest.raises(ValueError):
            RunConfig("eg", 0.0)


class TestRun:
    def test_identity_two_queries(self):
        P = problem_from_dict(IDENTITY)
        rep = run(P, RunConfig("halpern-cocoercive", 1e-9))
        assert rep.converged and rep.counters.f_evals <= 2

    def test_rotation_refused_before_any_query(self):
        calls = []
        F = Operator(lambda u: calls.append(1) or np.array([u[1], -u[0]]), 2)
        P = ProblemInstance(F, WholeSpace(2), np.ones(2))
        with pytest.raises(ValueError, match="cocoercive"):
            run(P, RunConfig("halpern-cocoercive", 1e-3))
        assert calls == []

    def test_constrained_problem_refuses_unconstrained_solver(self):
        P = ProblemInstance(identity_operator(2), Box([0, 0], [1, 1]), [0.5, 0.5])
        with pytest.raises(ValueError):
            run(P, RunConfig("halpern-cocoercive", 1e-3))

    def test_eg_needs_mu(self):
        P = problem_from_dict(ROTATION)
        with pytest.raises(ValueError, match="mu"):
            run(P, RunConfig("eg", 1e-3))

    def test_rotation_lipschitz_rate(self):
        P = problem_from_dict(ROTATION)
        rep = run(P, RunConfig("halpern-lipschitz", 1e-4))
        assert rep.converged
        slope, r2 = fit_rate(rep.trace)
        assert slope == pytest.approx(-1.0, abs=0.05) and r2 > 0.99

    @pytest.mark.parametrize("alg", ALGORITHMS)
    def test_every_algorithm_dispatches(self, alg):
        P = inst.regularized_saddle(1.0)
        if alg.startswith(("halpern-cocoercive", "halpern-constrained")):
            P = inst.cocoercive_affine(np.random.default_rng(0))
        cfg = RunConfig(alg, 1e-2, eta=1.0 if alg == "halpern-lipschitz-scaled" else None,
                        seed=42)
        rep = run(P, cfg)
        assert rep.converged and rep.info["seed"] == 42

    def test_deterministic_trace_bytes(self, tmp_path):
        P = inst.cocoercive_affine(np.random.default_rng(1))
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run(P, RunConfig("halpern-cocoercive", 1e-3, l0=0.5, trace_path=str(a)))
        run(P, RunConfig("halpern-cocoercive", 1e-3, l0=0.5, trace_path=str(b)))
        assert a.read_bytes() == b.read_bytes()

    def test_counter_fidelity(self):
        calls = []
        base = inst.cocoercive_affine(np.random.default_rng(2))
        F0 = base.operator
        F = Operator(lambda u: calls.append(1) or F0(u), F0.dim, F0.metadata)
        P = ProblemInstance(F, base.feasible_set, base.u0)
        for alg in ("halpern-cocoercive", "halpern-constrained", "halpern-lipschitz"):
            calls.clear()
            rep = run(P, RunConfig(alg, 1e-2))
            assert rep.counters.f_evals == len(calls)


class TestTrace:
    def test_empty_trace_is_header_only(self, tmp_path):
        P = problem_from_dict(dict(IDENTITY, u0=[0, 0]))
        rep = run(P, RunConfig("halpern-cocoercive", 1e-3))
        path = tmp_path / "t.csv"
        emit_trace(rep, path)
        assert path.read_text() == "k,residual,lambda,L_k,potential,f_evals\n"

    def test_three_records_four_lines(self, tmp_path):
        P = inst.cocoercive_affine(np.random.default_rng(3))
        rep = run(P, RunConfig("halpern-cocoercive", 1e-3, max_iters=3))
        path = tmp_path / "t.csv"
        emit_trace(rep, path)
        assert len(path.read_text().splitlines()) == 4

    @pytest.mark.parametrize("alg", ["halpern-cocoercive", "eg", "restart"])
    def test_round_trip_exact(self, tmp_path, alg):
        P = inst.regularized_saddle(0.5) if alg != "halpern-cocoercive" \
            else inst.cocoercive_affine(np.random.default_rng(4))
        rep = run(P, RunConfig(alg, 1e-4))
        path = tmp_path / "t.csv"
        emit_trace(rep, path)
        assert read_trace(path) == rep.trace

    def test_bad_header(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,b\n")
        with pytest.raises(ValueError, match="header"):
            read_trace(path)


def synthetic(residuals):
    return [TraceRecord(k, r, None, 1.0, None, k) for k, r in enumerate(residuals, start=1)]


class TestFitRate:
    def test_exact_inverse(self):
        slope, r2 = fit_rate(synthetic([1 / k for k in range(1, 101)]))
        assert slope == pytest.approx(-1.0, abs=1e-9)
        assert r2 == pytest.approx(1.0, abs=1e-12)

    def test_constant(self):
        slope, r2 = fit_rate(synthetic([0.3] * 50))
        assert slope == pytest.approx(0.0, abs=1e-12)

    def test_geometric(self):
        # frozen from a pure-Python least-squares fit over k = 21..100
        slope, r2 = fit_rate(synthetic([0.9 ** k for k in range(1, 101)]))
        assert slope == pytest.approx(-5.527132919819239, rel=1e-9)
        assert r2 == pytest.approx(0.9618909540959222, rel=1e-9)

    def test_too_few_records(self):
        with pytest.raises(ValueError, match="at least 10"):
            fit_rate(synthetic([1 / k for k in range(1, 12)]))

    def test_burn_in_range(self):
        with pytest.raises(ValueError):
            fit_rate(synthetic([1.0] * 20), burn_in=1.0)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-3.0, 3.0), st.floats(0.01, 100.0))
    def test_recovers_power_law(self, p, c):
        slope, _ = fit_rate(synthetic([c * k ** p for k in range(1, 60)]))
        assert slope == pytest.approx(p, abs=1e-9)


class TestCLI:
    def test_solve_ok(self, tmp_path, capsys):
        path = write(tmp_path, IDENTITY)
        trace = tmp_path / "t.csv"
        code = cli.main(["solve", "--problem", str(path), "--algorithm", "halpern-cocoercive",
                         "--eps", "1e-9", "--trace", str(trace), "--seed", "7"])
        out = json.loads(capsys.readouterr().out)
        assert code == 0 and out["converged"] and out["seed"] == 7
        assert trace.exists()

    def test_solve_nonconverged(self, tmp_path, capsys):
        path = write(tmp_path, ROTATION)
        code = cli.main(["solve", "--problem", str(path), "--algorithm", "halpern-lipschitz",
                         "--eps", "1e-9", "--max-iters", "2"])
        assert code == 2
        assert json.loads(capsys.readouterr().out)["status"] == "iteration cap"

    def test_solve_incompatible(self, tmp_path, capsys):
        path = write(tmp_path, ROTATION)
        code = cli.main(["solve", "--problem", str(path), "--algorithm", "halpern-cocoercive",
                         "--eps", "1e-3"])
        assert code == 1 and "cocoercive" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, capsys):
        code = cli.main(["solve", "--problem", str(tmp_path / "none.json"),
                         "--algorithm", "eg", "--eps", "1e-3"])
        assert code == 1

    def test_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["solve", "--algorithm", "eg"])
        assert exc.value.code == 1

    def test_rate(self, tmp_path, capsys):
        path = write(tmp_path, ROTATION)
        trace = tmp_path / "t.csv"
        cli.main(["solve", "--problem", str(path), "--algorithm", "halpern-lipschitz",
                  "--eps", "1e-3", "--trace", str(trace)])
        capsys.readouterr()
        assert cli.main(["rate", "--trace", str(trace)]) == 0
        res = json.loads(capsys.readouterr().out)
        assert math.isclose(res["slope"], -1.0, abs_tol=0.1)

    def test_rate_missing_trace(self, tmp_path):
        assert cli.main(["rate", "--trace", str(tmp_path / "none.csv")]) == 1

    def test_verify_structural(self, capsys):
        assert cli.main(["verify", "--suite", "structural"]) == 0
        assert "PASS" in capsys.readouterr().out
