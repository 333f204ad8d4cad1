import pytest
from fastapi.testclient import TestClient

from vca.server import create_app

FLIGHTS_CSV = """date,src,delay
1,SFO,10.0
2,SFO,20.0
3,SFO,30.0
1,OAK,4.0
2,OAK,25.0
3,OAK,18.0
"""

VIEWS = [
    {"name": "SFO", "source": "flights", "pred": "src = 'SFO'",
     "groupby": ["date"], "agg": "avg", "measure": "delay",
     "mark": "bar", "encodings": {"date": "x", "y": "y"}},
    {"name": "OAK", "source": "flights", "pred": "src = 'OAK'",
     "groupby": ["date"], "agg": "avg", "measure": "delay",
     "mark": "bar", "encodings": {"date": "x", "y": "y"}},
]


@pytest.fixture
def client():
    return TestClient(create_app(), raise_server_exceptions=False)


@pytest.fixture
def sid(client):
    body = {
        "v": 1,
        "tables": [{"name": "flights", "csv": FLIGHTS_CSV}],
        "views": VIEWS,
    }
    resp = client.post("/sessions", json=body)
    assert resp.status_code == 200, resp.text
    return resp.json()["sessionId"]


def test_create_and_list_views(client, sid):
    resp = client.get(f"/sessions/{sid}/views")
    assert resp.status_code == 200
    body = resp.json()
    assert body["v"] == 1
    names = {v["name"] for v in body["views"]}
    assert names == {"SFO", "OAK"}
    sfo = next(v for v in body["views"] if v["name"] == "SFO")
    assert len(sfo["chartSpec"]["data"]) == 3


def test_check_safe_pair(client, sid):
    resp = client.post(f"/sessions/{sid}/check", json={"expr": "SFO - OAK"})
    assert resp.status_code == 200
    assert resp.json()["status"] == "Safe"


def test_eval_difference(client, sid):
    resp = client.post(f"/sessions/{sid}/eval", json={"expr": "SFO - OAK"})
    assert resp.status_code == 200
    body = resp.json()
    rows = sorted(map(tuple, body["table"]["rows"]))
    assert rows == [(1, 6.0), (2, -5.0), (3, 12.0)]
    assert body["chartSpec"]["mark"] == "bar"
    assert body["name"]


def test_eval_registers_result_for_reuse(client, sid):
    resp = client.post(f"/sessions/{sid}/eval",
                       json={"expr": "SFO - OAK", "name": "diff"})
    assert resp.status_code == 200
    assert resp.json()["name"] == "diff"
    resp2 = client.post(f"/sessions/{sid}/eval", json={"expr": "diff - diff"})
    assert resp2.status_code == 200
    assert all(row[-1] == 0 for row in resp2.json()["table"]["rows"])


def test_identical_evals_identical_bodies(client, sid):
    a = client.post(f"/sessions/{sid}/check", json={"expr": "SFO - OAK"})
    b = client.post(f"/sessions/{sid}/check", json={"expr": "SFO - OAK"})
    assert a.content == b.content


def test_unsafe_eval_without_override_is_400(client):
    body = {
        "v": 1,
        "tables": [
            {"name": "profits", "csv": "date,profits\n1,5.5\n2,6.5\n"},
            {"name": "losses", "csv": "date,losses\n1,1.5\n2,2.5\n"},
        ],
        "views": [
            {"name": "P", "source": "profits", "groupby": ["date"],
             "agg": "avg", "measure": "profits"},
            {"name": "L", "source": "losses", "groupby": ["date"],
             "agg": "avg", "measure": "losses"},
        ],
    }
    client = TestClient(create_app(), raise_server_exceptions=False)
    sid = client.post("/sessions", json=body).json()["sessionId"]

    check = client.post(f"/sessions/{sid}/check", json={"expr": "P - L"})
    assert check.status_code == 200
    assert check.json()["status"] == "UnsafeOverridable"

    resp = client.post(f"/sessions/{sid}/eval", json={"expr": "P - L"})
    assert resp.status_code == 400
    assert resp.json()["verdict"]["status"] == "UnsafeOverridable"

    ok = client.post(f"/sessions/{sid}/eval", json={"expr": "P - L", "override": True})
    assert ok.status_code == 200
    rows = sorted(map(tuple, ok.json()["table"]["rows"]))
    assert rows == [(1, 4.0), (2, 4.0)]


def test_decompose_extract_and_explode(client, sid):
    resp = client.post(f"/sessions/{sid}/decompose", json={
        "view": "SFO", "kind": "extract", "args": {"pred": "date = 2"},
    })
    assert resp.status_code == 200
    views = resp.json()["views"]
    assert len(views) == 1
    assert views[0]["chartSpec"]["data"] == [{"date": 2, "y": 20.0}]

    resp = client.post(f"/sessions/{sid}/decompose", json={
        "view": "SFO", "kind": "explode", "args": {"attrs": ["date"]},
    })
    assert resp.status_code == 200
    assert len(resp.json()["views"]) == 3


def test_unknown_session_404(client):
    assert client.get("/sessions/nope/views").status_code == 404
    assert client.post("/sessions/nope/eval", json={"expr": "A - B"}).status_code == 404


def test_session_isolation(client, sid):
    other = client.post("/sessions", json={
        "v": 1,
        "tables": [{"name": "t", "csv": "x,m\n1,2.5\n"}],
        "views": [{"name": "only", "source": "t", "groupby": ["x"],
                   "agg": "avg", "measure": "m"}],
    }).json()["sessionId"]
    views = client.get(f"/sessions/{other}/views").json()["views"]
    assert {v["name"] for v in views} == {"only"}
    resp = client.post(f"/sessions/{other}/eval", json={"expr": "SFO - OAK"})
    assert resp.status_code == 400  # names from the first session are unbound


def test_delete_session(client, sid):
    assert client.delete(f"/sessions/{sid}").status_code == 204
    assert client.get(f"/sessions/{sid}/views").status_code == 404


def test_oversize_upload_413(client):
    big = "date,delay\n" + ("1,1.5\n" * 2_000_000)  # ~12 MB
    resp = client.post("/sessions", json={
        "v": 1, "tables": [{"name": "big", "csv": big}],
    })
    assert resp.status_code == 413


def test_parse_error_is_400_not_500(client, sid):
    resp = client.post(f"/sessions/{sid}/eval", json={"expr": "SFO - "})
    assert resp.status_code == 400
    assert "error" in resp.json()


def test_hierarchy_upload_and_eval(client):
    body = {
        "v": 1,
        "tables": [{
            "name": "profits",
            "csv": "day,month,profit\nd1,M1,10.0\nd2,M1,20.0\nd3,M2,30.0\nd4,M2,40.0\n",
        }],
        "views": [
            {"name": "daily", "source": "profits", "groupby": ["day"],
             "agg": "sum", "measure": "profit"},
            {"name": "monthly", "source": "profits", "groupby": ["month"],
             "agg": "avg", "measure": "profit"},
        ],
        "hierarchy": [{"from": "day", "to": "month"}],
    }
    resp = client.post("/sessions", json=body)
    assert resp.status_code == 200
    sid = resp.json()["sessionId"]
    out = client.post(f"/sessions/{sid}/eval", json={"expr": "daily - monthly"})
    assert out.status_code == 200
    rows = sorted(map(tuple, out.json()["table"]["rows"]))
    assert rows == [("d1", -5.0), ("d2", 5.0), ("d3", -5.0), ("d4", 5.0)]
