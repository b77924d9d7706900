# Copyright 2026 The groundrl Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Runs two tiny pipelines, compares them and validates the report JSON."""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema


def main() -> int:
    cli, schema_path = sys.argv[1], Path(sys.argv[2])
    schema = json.loads(schema_path.read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)
    quick = ["--cases", "40", "--set", "rl.epochs=1", "--set", "mcl.epochs=1"]
    with tempfile.TemporaryDirectory() as tmp:
        a, b = Path(tmp) / "a", Path(tmp) / "b"
        subprocess.run([cli, "run", "--out", str(a), *quick], check=True,
                       capture_output=True)
        subprocess.run([cli, "run", "--out", str(b), "--ablate", "wo-mcl-svr",
                        *quick], check=True, capture_output=True)
        plain = json.loads((a / "eval" / "report.json").read_text())
        validator.validate(plain)
        subprocess.run([cli, "evaluate", "--out", str(a), "--compare", str(b)],
                       check=True, capture_output=True)
        compared = json.loads((a / "eval" / "report.json").read_text())
        validator.validate(compared)
        if "comparison" not in compared:
            print("comparison block missing")
            return 1
        broken = dict(plain, cases=-1)
        try:
            validator.validate(broken)
        except jsonschema.ValidationError:
            pass
        else:
            print("schema accepted a negative case count")
            return 1
    print("report schema OK")
    return 0


if __name__ == "__main__":
    sys.exit(main())
