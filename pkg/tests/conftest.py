from __future__ import annotations

import pytest

import crowdpipe as cp

# Answers arrive via the attached simulator on the first poll, so a short
# interval and timeout keep failures fast without flaking successes.
FAST = cp.RunConfig(n_assignments=3, poll_interval=0.01, result_timeout=10.0)


@pytest.fixture
def ctx_factory(tmp_path):
    """Build isolated CrowdContexts under tmp_path; closes them at teardown."""
    created: list[cp.CrowdContext] = []

    def make(
        project: str = "proj",
        subdir: str = "",
        platform=None,
        config: cp.RunConfig = FAST,
    ) -> cp.CrowdContext:
        base = tmp_path / subdir if subdir else tmp_path
        base.mkdir(parents=True, exist_ok=True)
        ctx = cp.CrowdContext(
            project,
            db_path=base / f"{project}.cpdb",
            platform=platform,
            config=config,
        )
        created.append(ctx)
        return ctx

    yield make
    for ctx in created:
        try:
            ctx.close()
        except Exception:
            pass


def bob_urls() -> list[str]:
    return ["http://img/1.jpg", "http://img/2.jpg", "http://img/3.jpg"]


def bob_truth() -> dict[str, str]:
    urls = bob_urls()
    return {
        cp.fingerprint(urls[0]): "Yes",
        cp.fingerprint(urls[1]): "Yes",
        cp.fingerprint(urls[2]): "No",
    }


def run_bob(ctx: cp.CrowdContext, workers: int = 3, qc: str = "mv") -> cp.CrowdData:
    """The canonical three-image labeling pipeline against a simulated crowd."""
    ctx.attach_simulator(cp.make_profiles(workers, accuracy=1.0, seed=11), bob_truth())
    data = ctx.crowd_data(bob_urls(), "images")
    data.set_presenter(cp.image_label_presenter())
    data.publish_task()
    data.get_result(blocking=True)
    data.quality_control(qc)
    return data


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    outcome = "PASS" if report.passed else "FAIL"
    print(f"\n[ACCEPTANCE] {name}: {outcome}")
