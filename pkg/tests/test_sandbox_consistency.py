"""Secondary-component acceptance: sandbox edit sequences stay consistent
with offline evaluation.

Drives the HTTP API exactly the way the frontend does (edit, discuss, undo,
export) and checks that every displayed quantity equals what the engine
computes offline on the exported plan. The UI side displays server values
verbatim and mirrors the violation list into badges; those behaviors are
covered by the frontend's own unit tests (frontend/tests/).
"""

import json
import random
from contextlib import contextmanager

import pytest
from fastapi.testclient import TestClient

from agora.api import create_app
from agora.cli import main as cli_main
from agora.domain import ASSIGNABLE_USES, plan_from_dict, save_scenario, validate_plan
from agora.metrics import evaluate
from agora.population import save_population


@contextmanager
def criterion(number: int, name: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number} ({name}): FAIL")
        raise
    print(f"ACCEPTANCE {number} ({name}): PASS")


@pytest.fixture()
def client(hlg_scenario, small_population):
    app = create_app(hlg_scenario, small_population, backend_kind="scripted", seed=11)
    with TestClient(app) as c:
        yield c


def test_criterion_10_sandbox_consistency(client, hlg_scenario, small_population,
                                          tmp_path):
    with criterion(10, "sandbox edit sequence consistent with offline eval"):
        rng = random.Random(10)
        vacant = sorted(hlg_scenario.vacant_ids)
        pre_edit_plans = []
        for _ in range(6):
            pre_edit_plans.append(client.get("/plan").json()["plan"])
            edits = [
                {"plot_id": rng.choice(vacant), "land_use": rng.choice(ASSIGNABLE_USES).value}
            ]
            if rng.random() < 0.5:
                edits.append(
                    {"plot_id": rng.choice(vacant), "land_use": rng.choice(ASSIGNABLE_USES).value}
                )
            if edits[0]["plot_id"] == edits[-1]["plot_id"] and len(edits) > 1:
                edits.pop()
            response = client.post("/plan/edits", json={"edits": edits})
            assert response.status_code == 200
            body = response.json()

            exported = client.get("/export").json()
            plan = plan_from_dict(exported["plan"])
            offline = evaluate(hlg_scenario, plan, small_population,
                               include_per_agent=False)
            # displayed metrics are the server metrics, which must equal the
            # offline engine bit for bit
            assert body["metrics"]["service"] == offline.service
            assert body["metrics"]["ecology"] == offline.ecology
            assert body["metrics"]["satisfaction"] == offline.satisfaction
            assert body["metrics"]["inclusion"] == offline.inclusion
            # violation badges mirror validate_plan
            offline_violations = [v.to_dict() for v in validate_plan(hlg_scenario, plan)]
            assert body["violations"] == offline_violations
            assert client.get("/violations").json()["violations"] == offline_violations

        # the cli eval on the exported plan agrees with the live metrics
        exported = client.get("/export").json()
        scenario_path = tmp_path / "scenario.json"
        population_path = tmp_path / "pop.json"
        plan_path = tmp_path / "plan.json"
        out_path = tmp_path / "metrics.json"
        save_scenario(hlg_scenario, scenario_path)
        save_population(small_population, population_path)
        plan_path.write_text(json.dumps(exported["plan"]))
        code = cli_main([
            "eval", "--scenario", str(scenario_path), "--pop", str(population_path),
            "--plan", str(plan_path), "--out", str(out_path), "--no-per-agent",
        ])
        assert code == 0
        cli_metrics = json.loads(out_path.read_text())
        live = client.get("/metrics").json()
        for key in ("service", "ecology", "satisfaction", "inclusion"):
            assert cli_metrics[key] == live[key]

        # undo walks back through the exact prior plans
        for expected in reversed(pre_edit_plans):
            response = client.post("/plan/undo", json={})
            assert response.status_code == 200
            assert response.json()["plan"] == expected
