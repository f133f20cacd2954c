import pytest
from fastapi.testclient import TestClient

from agora.api import create_app
from agora.domain import LandUse, plan_from_dict, validate_plan
from agora.metrics import evaluate


@pytest.fixture()
def client(hlg_scenario, small_population):
    app = create_app(hlg_scenario, small_population, backend_kind="scripted", seed=5)
    with TestClient(app) as c:
        c.scenario = hlg_scenario
        c.population = small_population
        yield c


def school_surplus_plots(client) -> list[int]:
    plan = plan_from_dict(client.get("/plan").json()["plan"])
    return sorted(pid for pid, use in plan.assignment.items() if use is LandUse.School)


class TestReads:
    def test_session_and_scenario(self, client):
        session = client.get("/session").json()
        assert session["scenario"] == "hlg"
        assert session["backend"] == "scripted"
        geo = client.get("/scenario").json()
        assert geo["type"] == "FeatureCollection"
        assert len(geo["features"]) == 63

    def test_initial_plan_is_feasible(self, client):
        doc = client.get("/plan").json()
        plan = plan_from_dict(doc["plan"])
        assert validate_plan(client.scenario, plan) == []
        assert client.get("/violations").json()["violations"] == []

    def test_metrics_match_offline_evaluation(self, client):
        metrics = client.get("/metrics").json()
        plan = plan_from_dict(client.get("/plan").json()["plan"])
        offline = evaluate(client.scenario, plan, client.population,
                           include_per_agent=False)
        assert metrics["service"] == offline.service
        assert metrics["ecology"] == offline.ecology
        assert metrics["satisfaction"] == offline.satisfaction
        assert metrics["inclusion"] == offline.inclusion


class TestEdits:
    def test_edit_updates_metrics_bit_identically(self, client):
        plan = plan_from_dict(client.get("/plan").json()["plan"])
        target = sorted(plan.assignment)[0]
        response = client.post(
            "/plan/edits", json={"edits": [{"plot_id": target, "land_use": "Park"}]}
        )
        assert response.status_code == 200
        body = response.json()
        edited = plan.with_changes([(target, LandUse.Park)])
        offline = evaluate(client.scenario, edited, client.population,
                           include_per_agent=False)
        assert body["metrics"]["service"] == offline.service
        assert body["metrics"]["satisfaction"] == offline.satisfaction
        assert body["plan"]["assignment"][str(target)] == "Park"
        assert body["version"] == 1

    def test_edit_fixed_plot_rejected_and_plan_unchanged(self, client):
        fixed_id = next(p.id for p in client.scenario.plots if not p.vacant)
        before = client.get("/plan").json()
        response = client.post(
            "/plan/edits", json={"edits": [{"plot_id": fixed_id, "land_use": "Park"}]}
        )
        assert response.status_code == 400
        assert response.json()["detail"]["type"] == "fixed_plot"
        assert client.get("/plan").json() == before

    def test_multi_edit_is_atomic(self, client):
        before = client.get("/plan").json()
        vacant = sorted(client.scenario.vacant_ids)
        response = client.post(
            "/plan/edits",
            json={"edits": [
                {"plot_id": vacant[0], "land_use": "Park"},
                {"plot_id": 9999, "land_use": "School"},
            ]},
        )
        assert response.status_code == 400
        assert client.get("/plan").json() == before  # nothing applied

    def test_unknown_use_and_not_assignable(self, client):
        vacant = sorted(client.scenario.vacant_ids)[0]
        r1 = client.post("/plan/edits",
                         json={"edits": [{"plot_id": vacant, "land_use": "Casino"}]})
        assert r1.status_code == 400
        assert r1.json()["detail"]["type"] == "unknown_land_use"
        r2 = client.post("/plan/edits",
                         json={"edits": [{"plot_id": vacant, "land_use": "Residential"}]})
        assert r2.status_code == 400
        assert r2.json()["detail"]["type"] == "not_assignable"

    def test_school_deficit_violation_appears(self, client):
        schools = school_surplus_plots(client)
        need = client.scenario.constraints.minimum(LandUse.School)
        to_remove = schools[: len(schools) - need + 1]  # drop below the minimum
        response = client.post(
            "/plan/edits",
            json={"edits": [{"plot_id": pid, "land_use": "Office"} for pid in to_remove]},
        )
        assert response.status_code == 200
        violations = client.get("/violations").json()["violations"]
        school_violation = next(v for v in violations if v["land_use"] == "School")
        assert school_violation["have"] == need - 1
        assert school_violation["need"] == need

    def test_version_conflict_409(self, client):
        vacant = sorted(client.scenario.vacant_ids)[0]
        ok = client.post("/plan/edits",
                         json={"edits": [{"plot_id": vacant, "land_use": "Park"}],
                               "expected_version": 0})
        assert ok.status_code == 200
        stale = client.post("/plan/edits",
                            json={"edits": [{"plot_id": vacant, "land_use": "Office"}],
                                  "expected_version": 0})
        assert stale.status_code == 409

    def test_token_mismatch_409(self, client):
        vacant = sorted(client.scenario.vacant_ids)[0]
        response = client.post(
            "/plan/edits",
            json={"edits": [{"plot_id": vacant, "land_use": "Park"}], "token": "bogus"},
        )
        assert response.status_code == 409


class TestUndo:
    def test_undo_restores_exact_prior_plan(self, client):
        before = client.get("/plan").json()["plan"]
        vacant = sorted(client.scenario.vacant_ids)[0]
        client.post("/plan/edits",
                    json={"edits": [{"plot_id": vacant, "land_use": "Park"}]})
        response = client.post("/plan/undo", json={})
        assert response.status_code == 200
        assert response.json()["plan"] == before
        # metrics return to the original values too
        assert response.json()["metrics"]["satisfaction"] == pytest.approx(
            client.get("/trajectory").json()["steps"][0]["satisfaction"]
        )

    def test_undo_empty_stack_is_400(self, client):
        response = client.post("/plan/undo", json={})
        assert response.status_code == 400
        assert response.json()["detail"]["type"] == "nothing_to_undo"


class TestAgentsEndpoints:
    def test_discuss_applies_revision_and_reports(self, client):
        response = client.post("/discuss/1", json={})
        assert response.status_code == 200
        body = response.json()
        assert "revision" in body and "opinions" in body
        assert body["version"] == 1
        plan = plan_from_dict(client.get("/plan").json()["plan"])
        offline = evaluate(client.scenario, plan, client.population,
                           include_per_agent=False)
        assert body["metrics"]["satisfaction"] == offline.satisfaction
        changed = body["changed"]
        assert changed == [c["plot_id"] for c in body["revision"]["changes"]]

    def test_discuss_unknown_sub_community_404(self, client):
        assert client.post("/discuss/9", json={}).status_code == 404

    def test_ask_resident(self, client):
        some_id = client.population.agents[0].profile.id
        response = client.post(f"/residents/{some_id}/ask", json={})
        assert response.status_code == 200
        opinion = response.json()["opinion"]
        assert opinion["type"] == "opinion"
        assert opinion["agent_id"] == some_id

    def test_ask_unknown_resident_404(self, client):
        assert client.post("/residents/99999/ask", json={}).status_code == 404

    def test_transcript_polling_with_cursor(self, client):
        client.post("/discuss/1", json={})
        first = client.get("/transcript", params={"after": -1}).json()
        assert first["entries"], "discussion should append transcript entries"
        seqs = [e["seq"] for e in first["entries"]]
        assert seqs == sorted(seqs) and len(set(seqs)) == len(seqs)
        cursor = first["last_seq"]
        rest = client.get("/transcript", params={"after": cursor}).json()
        assert rest["entries"] == []

    def test_export_bundle(self, client):
        client.post("/discuss/2", json={})
        bundle = client.get("/export").json()
        assert set(bundle) >= {"scenario", "plan", "trajectory", "transcript",
                               "violations", "version"}
        assert len(bundle["trajectory"]) == 2  # initial + one discussion
