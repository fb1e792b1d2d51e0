#!/usr/bin/env python3
"""Friend finder end to end: two phones, one shared map, zero trust.

Drives the HTTP gateway in-process. Every set/get below is one to three full
protocol executions; the generator and cloud carry the encrypted map between
them as saved wires and never see a cell value.
"""

from fastapi.testclient import TestClient

from pgc.friendfinder import create_app

app = create_app(s=5, k=64, encoding=2, tag_bits=8)
client = TestClient(app)

sid = client.post("/session", json={"cells": 64}).json()["session"]
print(f"session {sid}: 64-cell map initialized (one protocol execution)")

ana = client.post(f"/session/{sid}/user", json={"name": "ana"}).json()
ben = client.post(f"/session/{sid}/user", json={"name": "ben"}).json()


def move(user, cell):
    r = client.post(f"/session/{sid}/set",
                    json={"user": user["user"], "cell": cell},
                    headers={"Authorization": f"Bearer {user['token']}"})
    body = r.json()
    if body["result"] == "occupied":
        print(f"  cell {cell} -> friend nearby! occupied by user {body['occupied_by']}")
    else:
        print(f"  cell {cell} -> moved")
    return body


print("ana sets her position to cell 27")
move(ana, 27)

print("ben tries the same cell")
move(ben, 27)

print("ben settles for cell 28 next door")
move(ben, 28)

print("ana wanders off to cell 5 (her old cell gets wiped)")
move(ana, 5)

for cell in (5, 27, 28):
    v = client.get(f"/session/{sid}/cell/{cell}").json()["value"]
    print(f"cell {cell} reads {v}")

stats = client.get(f"/session/{sid}/stats").json()
print(f"\n{stats['executions']} protocol executions served this session")
