#!/usr/bin/env python3
import json, sys

json.load(sys.stdin)
print(json.dumps({"commits": [], "config_changes": {}, "note": "hi"}))
