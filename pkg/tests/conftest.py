import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from irstrack.predictor.network import init_params, loss, loss_and_grads, predict_raw

settings.register_profile(
    "default", deadline=None, max_examples=50, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_spd(rng, n, cond_floor=1e-2):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a @ a.conj().T + cond_floor * n * np.eye(n)


def tiny(seed, **kw):
    """epsilon=1, K=1, L_I=2, tau1=2, N=2 unless overridden."""
    args = dict(tau1=2, n_elements=2, expansion=1.0, n_layers=1, input_len=2, pred_len=1)
    args.update(kw)
    rng = np.random.default_rng(seed)
    params = init_params(rng=rng, **args)
    x = rng.standard_normal((3, args["input_len"], params.d_in)) + 1j * rng.standard_normal((3, args["input_len"], params.d_in))
    labels = rng.standard_normal((3, args["pred_len"], args["tau1"])) + 1j * rng.standard_normal((3, args["pred_len"], args["tau1"]))
    return params, x, labels


def numeric_gradient(params, x, labels, comp, name, step=1e-5):
    w = params.weights[comp][name]
    grad = np.zeros_like(w)
    it = np.nditer(w, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = w[idx]
        w[idx] = orig + step
        up = loss(predict_raw(params, x), labels)
        w[idx] = orig - step
        down = loss(predict_raw(params, x), labels)
        w[idx] = orig
        grad[idx] = (up - down) / (2 * step)
    return grad


# denominator floor: finite-difference round-off is about |loss| * 2e-16 / step ~ 1e-10
GRAD_FLOOR = 1e-5


def max_relative_error(params, x, labels):
    _, grads = loss_and_grads(params, x, labels)
    worst = 0.0
    for comp in ("R", "I"):
        for name in params.names():
            a = grads[comp][name]
            n = numeric_gradient(params, x, labels, comp, name)
            rel = np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), GRAD_FLOOR)
            worst = max(worst, float(rel.max()))
    return worst
