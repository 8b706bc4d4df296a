#!/usr/bin/env python3
"""
Test script to verify the JSON endpoints return expected HTTP status codes and payloads.

Uses Flask's test client against a throwaway run history database, so no
server needs to be running.
"""

import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(__file__))
os.environ.setdefault('ORBITBOOK_DATABASE_PATH', os.path.join(tempfile.mkdtemp(), 'orbitbook-test.db'))

import pytest

from app import app
from db.database import init_db

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'data', 'groups')


class EndpointTester:
    def __init__(self, client):
        self.client = client
        self.results = []

    def test_endpoint(self, endpoint, expected_status=200, method="GET", data=None):
        """Request one endpoint, record the outcome and return the parsed JSON body."""
        if method == "GET":
            response = self.client.get(endpoint)
        else:
            response = self.client.post(endpoint, json=data)
        passed = response.status_code == expected_status
        self.results.append({
            "endpoint": endpoint,
            "method": method,
            "expected": expected_status,
            "actual": response.status_code,
            "passed": passed,
        })
        print(f"{'PASS' if passed else 'FAIL'} {method} {endpoint} -> {response.status_code} "
              f"(expected {expected_status})")
        return response.get_json()

    def failures(self):
        return [r for r in self.results if not r['passed']]


@pytest.fixture
def tester(tmp_path):
    app.config.update(TESTING=True, DATABASE=str(tmp_path / 'runs.db'), DATA_DIR=DATA_DIR)
    with app.app_context():
        init_db()
    return EndpointTester(app.test_client())


def test_group_endpoints(tester):
    body = tester.test_endpoint("/groups")
    names = [row['name'] for row in body['groups']]
    assert 'B2' in names and 'G(m,1,2)' in names

    detail = tester.test_endpoint("/groups/B2")
    assert detail['degrees'] == [2, 4]
    assert detail['constants'] == ['c1']
    assert detail['invariants']['U1'] == 'p1^2+p2^2'

    detail = tester.test_endpoint("/groups/G(m,1,2)?m=4")
    assert detail['name'] == 'G(4,1,2)'
    assert detail['mirrors'] == 6

    tester.test_endpoint("/groups/G99", expected_status=404)
    tester.test_endpoint("/groups/G(m,1,2)", expected_status=400)
    tester.test_endpoint("/groups/G(m,1,2)?m=x", expected_status=400)
    assert not tester.failures()


def test_mirror_endpoint(tester):
    body = tester.test_endpoint("/groups/B2/mirrors")
    assert len(body['mirrors']) == 4
    assert body['mirrors'][2] == {'index': 3, 'order': 2, 'covector': ['1', '-1']}
    assert body['factorization']['status'] == 'pass'
    body = tester.test_endpoint("/groups/G33/mirrors")
    assert body['factorization']['status'] == 'skipped'
    assert not tester.failures()


def test_run_endpoints(tester):
    body = tester.test_endpoint("/runs", method="POST",
                                data={'group': 'B2', 'level': 'sampled', 'points': 2})
    assert body['exit_code'] == 0
    run_id = body['id']
    assert body['report']['group'] == 'B2'

    history = tester.test_endpoint("/runs?group=B2")
    assert [row['id'] for row in history['runs']] == [run_id]
    assert history['runs'][0]['status'] == 'pass'

    stored = tester.test_endpoint(f"/runs/{run_id}")
    assert stored['report'] == body['report']

    verified = tester.test_endpoint("/runs", method="POST",
                                    data={'group': 'B2', 'level': 'sampled', 'points': 2, 'solver': 'verify'})
    assert verified['report']['constants']['status'] == 'verified'

    tester.test_endpoint("/runs/9999", expected_status=404)
    tester.test_endpoint("/runs?limit=many", expected_status=400)
    assert not tester.failures()


def test_run_errors(tester):
    tester.test_endpoint("/runs", method="POST", data={'group': 'G99'}, expected_status=404)
    tester.test_endpoint("/runs", method="POST", data={'group': 'B2', 'mode': 'everything'}, expected_status=400)
    tester.test_endpoint("/runs", method="POST", data={'group': 'B2', 'colour': 'blue'}, expected_status=400)
    tester.test_endpoint("/runs", method="POST", data=['B2'], expected_status=400)
    tester.test_endpoint("/runs", method="POST", data={'group': 'G4', 'mode': 'family'}, expected_status=400)
    tester.test_endpoint("/runs", method="POST", data={'group': 'B2', 'solver': 'guess'}, expected_status=400)
    assert not tester.failures()
    assert tester.test_endpoint("/runs")['runs'] == []


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, '-v']))
