"""Python facade over the srcurv core: scenario-driven curvature criteria,
flow integration and hyperbolicity diagnostics."""

import json as _json

try:
    from srcurv._core import run as _run, run_csv as _run_csv, __version__
except ImportError:  # build-tree layout: _core next to the package
    from _core import run as _run, run_csv as _run_csv, __version__


def _scenario_text(scenario):
    if isinstance(scenario, str):
        return scenario
    return _json.dumps(scenario)


def run(command, scenario, **kwargs):
    """Run a command; returns the run entry as a dict."""
    return _json.loads(_run(command, _scenario_text(scenario), **kwargs))


def validate(scenario, **kwargs):
    return run("validate", scenario, **kwargs)


def reduce_summary(scenario, **kwargs):
    return run("reduce", scenario, **kwargs)


def criterion(scenario, mode="theorem3", **kwargs):
    return run("criterion", scenario, mode=mode, **kwargs)


def verify_theorem2(scenario, samples=20, tol=1e-3, **kwargs):
    return run("verify-theorem2", scenario, samples=samples, tol=tol, **kwargs)


def flow(scenario, t=10.0, **kwargs):
    return run("flow", scenario, t=t, **kwargs)


def flow_csv(scenario, t=10.0, **kwargs):
    """Trajectory time series as a list of dicts (parsed CSV)."""
    text = _run_csv("flow", _scenario_text(scenario), t=t, **kwargs)
    lines = [ln for ln in text.splitlines() if ln]
    header = lines[0].split(",")
    return [dict(zip(header, map(float, ln.split(",")))) for ln in lines[1:]]


def lyapunov(scenario, t=50.0, **kwargs):
    return run("lyapunov", scenario, t=t, **kwargs)


def cone(scenario, t=10.0, **kwargs):
    return run("cone", scenario, t=t, **kwargs)


__all__ = [
    "run", "validate", "reduce_summary", "criterion", "verify_theorem2",
    "flow", "flow_csv", "lyapunov", "cone", "__version__",
]
