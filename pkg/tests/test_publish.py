import json

import pytest
from fastapi.testclient import TestClient

from conftest import FOUR_READINGS_CSV, HIGH_TEMP
from semint.cep import parse_cep_rules
from semint.errors import MissingField, PortInUse
from semint.model import Recommendation
from semint.pipeline import Middleware
from semint.publish import deserialize_recommendation, serialize_recommendation
from semint.publish.app import create_app
from semint.publish.server import check_port, serve
from semint.reason import parse_rules

RULES = 'RULE hot DOMAIN "SENSOR" IF AverageDailyTemp is High THEN Drought [METEOROLOGICAL] CF 0.5'


@pytest.fixture
def mw():
    return Middleware(parse_cep_rules(HIGH_TEMP), parse_rules(RULES))


@pytest.fixture
def client(mw):
    return TestClient(create_app(mw))


def assert_api_error(resp, status, code=None):
    assert resp.status_code == status
    body = resp.json()
    assert set(body) == {"status", "code", "message"}
    assert body["status"] == status
    if code:
        assert body["code"] == code


REC = Recommendation(
    event="Drought",
    categories=("METEOROLOGICAL", "AGRICULTURAL"),
    cf=0.1,
    fired_rule="drought_outlook",
    supporting_facts=(("MugumoTree", "Flowering", 1.0),),
    issued_at=86400,
)


def test_serialize_key_order_and_round_trip():
    text = serialize_recommendation(REC)
    assert list(json.loads(text)) == ["event", "categories", "cf", "fired_rule", "supporting_facts", "issued_at"]
    assert deserialize_recommendation(text) == REC
    assert serialize_recommendation(deserialize_recommendation(text)) == text


def test_deserialize_missing_key():
    obj = json.loads(serialize_recommendation(REC))
    del obj["cf"]
    with pytest.raises(MissingField):
        deserialize_recommendation(json.dumps(obj))


def test_health(client):
    assert client.get("/health").json() == {"status": "ok"}


def test_sensor_csv_flush_and_recommend(client):
    r = client.post("/ingest/sensor", content=FOUR_READINGS_CSV, headers={"content-type": "text/csv"})
    assert r.status_code == 202 and r.json() == {"accepted": 4}
    assert client.post("/control/flush", params={"t": 3600}).json() == {"events": 1}
    [ev] = client.get("/events/composite").json()
    assert ev["name"] == "HighTemp" and ev["attributes"] == {"avg_temp": 32.0}
    assert client.get("/events/composite", params={"since": 3600}).json() == []
    [rec] = client.get("/recommendations").json()
    assert rec["event"] == "Drought" and rec["cf"] == 0.5


def test_sensor_json_and_xml(client):
    body = [{"sensor_id": "ws1", "property": "Temperature", "value": 31.0, "unit": "C", "timestamp": 0}]
    assert client.post("/ingest/sensor", json=body).json() == {"accepted": 1}
    xml = '<readings><reading sensor="ws1" property="Temperature" value="30" unit="C" t="10"/></readings>'
    r = client.post("/ingest/sensor", content=xml, headers={"content-type": "application/xml"})
    assert r.json() == {"accepted": 1}


def test_sensor_errors(client):
    assert_api_error(
        client.post("/ingest/sensor", content="nope\n", headers={"content-type": "text/csv"}),
        400, "sensor.malformed_header",
    )
    assert_api_error(
        client.post("/ingest/sensor", content=FOUR_READINGS_CSV + "ws1,Temperature,x,C,1\n",
                    headers={"content-type": "text/csv"}),
        422, "sensor.malformed_row",
    )
    assert_api_error(
        client.post("/ingest/sensor", content=b"\x00", headers={"content-type": "image/png"}),
        400, "content_type.unsupported",
    )
    assert_api_error(
        client.post("/ingest/sensor", content="{", headers={"content-type": "application/json"}),
        400, "json.malformed",
    )


def test_out_of_order_batch_is_rejected_whole(client, mw):
    client.post("/ingest/sensor", content=FOUR_READINGS_CSV, headers={"content-type": "text/csv"})
    before = (len(mw.log), len(mw.store))
    late = "sensor_id,property,value,unit,timestamp\nws1,Temperature,30,C,3000\nws1,Temperature,30,C,100\n"
    assert_api_error(
        client.post("/ingest/sensor", content=late, headers={"content-type": "text/csv"}), 422, "cep.out_of_order",
    )
    assert (len(mw.log), len(mw.store)) == before


def test_ik_ingest(client, mw):
    obs = {"indicator": "MugumoTree", "state": "Flowering", "lat": -0.42, "lon": 36.95, "observer": "fg1", "t": 5}
    assert client.post("/ingest/ik", json=obs).status_code == 202
    assert mw.ik_facts[0].key == ("MugumoTree", "Flowering")
    assert_api_error(client.post("/ingest/ik", json={"indicator": "x"}), 422, "ik.missing_field")
    assert_api_error(client.post("/ingest/ik", json={**obs, "cf": 3}), 422)
    assert_api_error(client.post("/ingest/ik", json={**obs, "lat": 91}), 422)


def test_sparql(client):
    client.post("/ingest/sensor", content=FOUR_READINGS_CSV, headers={"content-type": "text/csv"})
    r = client.post("/query/sparql", content="SELECT ?o WHERE { ?o ssn:hasValue \"33.0\" }")
    assert r.json() == {"vars": ["o"], "rows": [["obs000002"]]}
    assert_api_error(client.post("/query/sparql", content="SELECT WHERE {}"), 400, "sparql.syntax")
    assert_api_error(client.post("/query/sparql", content="SELECT ?x WHERE { }"), 400, "sparql.unbound")


def test_bad_query_params_and_unknown_route(client):
    assert_api_error(client.post("/control/flush", params={"t": -1}), 422, "request.invalid")
    assert_api_error(client.get("/nowhere"), 404, "not_found")


def test_serve_in_background_and_port_in_use(drought_config, tmp_path):
    import httpx

    drought_config.port = 0
    handle = serve(drought_config, block=False)
    try:
        assert httpx.get(handle.url + "/health").json() == {"status": "ok"}
        with pytest.raises(PortInUse):
            check_port(handle.server.config.host, handle.port)
    finally:
        handle.stop()
