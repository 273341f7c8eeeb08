import numpy as np
import pytest

from valsynth.config import RunConfig
from valsynth.expr import parse_candidate
from valsynth.piecewise import decompose
from valsynth.hamiltonian import closed_form_hamiltonian

PHI1_DOC = {"n": 2, "t0": 0.0, "theta0": 1.0,
            "expr": {"op": "add", "args": [
                {"var": "t"},
                {"op": "abs", "args": [{"var": "x", "i": 1}]},
                {"op": "neg", "args": [{"op": "abs", "args": [{"var": "x", "i": 2}]}]}]}}

PHI2_DOC = {"n": 2, "t0": 0.0, "theta0": 1.0,
            "expr": {"op": "mul", "args": [
                {"var": "t"},
                {"op": "sub", "args": [
                    {"op": "abs", "args": [{"var": "x", "i": 1}]},
                    {"op": "abs", "args": [{"var": "x", "i": 2}]}]}]}}

# 1-D candidate with a kink; not a game value (its kink forces an
# impossible Hamiltonian value at gradient zero), used as a regression case
ABS_1D_DOC = {"n": 1, "t0": 0.0, "theta0": 1.0,
              "expr": {"op": "add", "args": [
                  {"var": "t"}, {"op": "abs", "args": [{"var": "x", "i": 1}]}]}}

H_NEG_MAX_DOC = {"op": "neg", "args": [{"op": "max", "args": [
    {"op": "abs", "args": [{"var": "s", "i": 1}]},
    {"op": "abs", "args": [{"var": "s", "i": 2}]}]}]}

H_NEG_ABS_1D_DOC = {"op": "neg", "args": [
    {"op": "abs", "args": [{"var": "s", "i": 1}]}]}


@pytest.fixture(scope="session")
def phi1():
    return parse_candidate(PHI1_DOC)


@pytest.fixture(scope="session")
def phi2():
    return parse_candidate(PHI2_DOC)


@pytest.fixture(scope="session")
def abs_1d():
    return parse_candidate(ABS_1D_DOC)


@pytest.fixture(scope="session")
def phi1_pw(phi1):
    return decompose(phi1)


@pytest.fixture(scope="session")
def phi2_pw(phi2):
    return decompose(phi2)


@pytest.fixture(scope="session")
def h_neg_max():
    return closed_form_hamiltonian(H_NEG_MAX_DOC, 2)


@pytest.fixture(scope="session")
def h_neg_abs_1d():
    return closed_form_hamiltonian(H_NEG_ABS_1D_DOC, 1)


@pytest.fixture(scope="session")
def phi1_report(phi1):
    from valsynth.conditions import full_check
    return full_check(phi1, RunConfig())


@pytest.fixture(scope="session")
def phi2_report(phi2):
    from valsynth.conditions import full_check
    return full_check(phi2, RunConfig())


@pytest.fixture(scope="session")
def phi1_model(phi1_report):
    from valsynth.hamiltonian import build_sample_set, extend_mcshane
    samples = build_sample_set(phi1_report, RunConfig())
    return extend_mcshane(samples, RunConfig())
