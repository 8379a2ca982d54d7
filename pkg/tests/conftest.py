import json

import pytest

from accesscube import minicity, pipeline


@pytest.hookimpl(tryfirst=True, hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """Expose each test's outcome to fixtures (acceptance pass/fail lines)."""
    outcome = yield
    rep = outcome.get_result()
    setattr(item, f"rep_{rep.when}", rep)


@pytest.fixture(scope="session")
def minicity_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("minicity")
    return minicity.generate(str(root), seed=42)


@pytest.fixture(scope="session")
def minicity_run(minicity_dir):
    """Full pipeline run over the mini-city fixture, shared across tests."""
    cfg = pipeline.RunConfig.from_file(minicity_dir.config)
    report = pipeline.run_pipeline(cfg)
    return {"fixture": minicity_dir, "config": cfg, "report": report}


@pytest.fixture(scope="session")
def minicity_report(minicity_run):
    with open(minicity_run["config"].out(pipeline.REPORT_FILE), encoding="utf-8") as f:
        return json.load(f)
