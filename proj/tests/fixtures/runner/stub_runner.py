"""Stand-in for the runner process used by the primary-side tests.

Speaks the line-delimited JSON protocol on stdin/stdout. Modes (argv[1]):
  normal    answer every request
  wrong-id  answer with an id off by one
  garbage   answer with a line that is not JSON
  wrong-op  answer with a different op
  both      answer ok=true together with an error
  exit      exit after reading the first request
"""
import json
import os
import sys
import time
import traceback

mode = sys.argv[1] if len(sys.argv) > 1 else "normal"


def reply(req, ok, error=None, payload=None):
    out = {"id": req.get("id"), "op": req.get("op"), "ok": ok}
    if error is not None:
        out["error"] = error
    if payload is not None:
        out["payload"] = payload
    return out


def handle(req):
    op = req.get("op")
    code = req.get("code", "")
    if op == "syntax_check":
        try:
            compile(code, "<snippet>", "exec")
            return reply(req, True)
        except SyntaxError as e:
            return reply(req, False, {"kind": "syntax", "message": f"line {e.lineno}: {e.msg}", "traceback": ""})
    if op == "execute":
        if "while True" in code:
            time.sleep(min(req.get("timeout", 1), 5))
            return reply(req, False, {"kind": "timeout", "message": "program timed out", "traceback": ""})
        try:
            exec(compile(code, "<program>", "exec"), {})
        except Exception as e:
            return reply(req, False, {"kind": "runtime", "message": str(e), "traceback": traceback.format_exc()})
        deck = os.path.join(req.get("workdir", "."), "output.pptx")
        with open(deck, "w") as f:
            f.write("deck")
        return reply(req, True, payload={"deck": deck})
    if op == "extract":
        with open(req["path"]) as f:
            return reply(req, True, payload=json.load(f))
    return reply(req, False, {"kind": "capability", "message": "renderer not installed", "traceback": ""})


for line in sys.stdin:
    req = json.loads(line)
    if mode == "exit":
        sys.exit(0)
    out = handle(req)
    if mode == "wrong-id":
        out["id"] = req["id"] + 1
    elif mode == "wrong-op":
        out["op"] = "render" if req["op"] != "render" else "execute"
    elif mode == "both":
        out["ok"] = True
        out["error"] = {"kind": "x", "message": "y", "traceback": ""}
    if mode == "garbage":
        sys.stdout.write("this is not json\n")
    else:
        sys.stdout.write(json.dumps(out) + "\n")
    sys.stdout.flush()
