"""Shared fixtures: the expensive runs (standard blow-up simulation and the
calibrated sweep) execute once per session and are reused across tests."""

import time

import pytest

from dkglab.experiments import (
    SweepConfig,
    bound_consistency_check,
    emit_report,
    fit_power_law,
    run_sweep,
)
from dkglab.experiments import _sequences_for
from dkglab.simulate import InitialDataSpec, ModelParams, NumericsConfig, simulate

STANDARD = dict(n=1, p=2.0, q=2.0, b=1.0, m2=0.0, R=1.0)


@pytest.fixture(scope="session")
def standard_run():
    """Standard configuration at eps = 0.3, integrated through blow-up."""
    params = ModelParams(eps=0.3, **STANDARD)
    spec = InitialDataSpec(R=1.0, amp_v1=1.0)
    numerics = NumericsConfig(hx=0.02, t_max=300.0)
    t0 = time.perf_counter()
    traj, trace, report = simulate(params, spec, numerics)
    elapsed = time.perf_counter() - t0
    return {
        "params": params,
        "spec": spec,
        "numerics": numerics,
        "traj": traj,
        "trace": trace,
        "report": report,
        "elapsed": elapsed,
    }


def make_sweep_config(outdir=None):
    return SweepConfig(
        p=2.0,
        q=2.0,
        b=1.0,
        R=1.0,
        hx=0.02,
        t_max=200.0,
        eps_start=2.0,
        outdir=outdir,
    )


def run_full_sweep(outdir):
    config = make_sweep_config()
    records = run_sweep(config)
    fits = {"power": fit_power_law(records)}
    seqs = _sequences_for(config)
    checks = {"bound_consistency": bound_consistency_check(records, seqs.eps0)}
    paths = emit_report(records, fits, checks, config, outdir=str(outdir))
    return config, records, fits, checks, paths


@pytest.fixture(scope="session")
def sweep_pair(tmp_path_factory):
    """The calibrated eps sweep, run twice into separate directories."""
    out1 = tmp_path_factory.mktemp("sweep-first")
    out2 = tmp_path_factory.mktemp("sweep-second")
    t0 = time.perf_counter()
    config, records, fits, checks, paths1 = run_full_sweep(out1)
    _, records2, _, _, paths2 = run_full_sweep(out2)
    elapsed = time.perf_counter() - t0
    return {
        "config": config,
        "records": records,
        "records2": records2,
        "fits": fits,
        "checks": checks,
        "paths1": paths1,
        "paths2": paths2,
        "elapsed": elapsed,
    }
