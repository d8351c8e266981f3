"""Walk the questionnaire HTTP service with an in-process client.

The same flow the browser UI drives: create a session, answer pair by pair
with live consistency feedback, submit once every group is consistent, then
aggregate sessions into a weight model.  Run the real server with
`mlrisk elicit serve --port 8100`.
"""

import tempfile

from fastapi.testclient import TestClient

from mlrisk.service import create_app

store = tempfile.mkdtemp(prefix="elicitation-")
client = TestClient(create_app(store_dir=store))

hierarchy = client.get("/hierarchy").json()
print(f"{len(hierarchy['groups'])} question pages, e.g.:")
page = hierarchy["groups"][0]
print(f"  [{page['path']}] {page['question']}")
print(f"  items: {[i['label'] for i in page['items']]}")

session = client.post("/sessions", json={"expert_id": "alice"}).json()
sid = session["session_id"]
print(f"\nsession {sid} opened")

for group in hierarchy["groups"]:
    items = [i["name"] for i in group["items"]]
    for a_idx, a in enumerate(items):
        for b in items[a_idx + 1:]:
            ratio = 2.0 if a == items[0] else 1.0
            reply = client.put(
                f"/sessions/{sid}/judgments",
                json={"group": group["path"], "item_a": a, "item_b": b, "ratio": ratio},
            ).json()
    print(f"  {group['path']}: CR={reply['cr']:.3f} complete={reply['complete']}")

consistency = client.get(f"/sessions/{sid}/consistency").json()
print(f"\nstatus: {consistency['status']} (all groups below the 0.1 gate)")

print("submit:", client.post(f"/sessions/{sid}/submit").json()["status"])

aggregate = client.post("/aggregate", json={"session_ids": [sid]}).json()
top = aggregate["weight_model"]["local_weights"]["severity"]
print("aggregated top-level weights:", {k: round(v, 3) for k, v in top.items()})
