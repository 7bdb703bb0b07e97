#!/usr/bin/env python3
# Copyright 2026 The latent-steer Authors. All Rights Reserved.
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

"""Prepends the Apache-2.0 header to project sources that lack it."""

import argparse
import pathlib
import sys

HOLDER = "Copyright 2026 The latent-steer Authors. All Rights Reserved."
BODY = """\
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License."""

ROOTS = ("include", "src", "tests", "tools", "python")
STYLES = {".cpp": "//", ".hpp": "//", ".cc": "//", ".h": "//", ".py": "#"}


def header(prefix: str) -> str:
    lines = [HOLDER, ""] + BODY.splitlines()
    return "\n".join(f"{prefix} {line}".rstrip() for line in lines) + "\n\n"


def apply(path: pathlib.Path, check: bool) -> bool:
    text = path.read_text()
    if HOLDER in "\n".join(text.splitlines()[:3]):
        return False
    if check:
        return True
    prefix = STYLES[path.suffix]
    shebang = ""
    if text.startswith("#!"):
        shebang, _, text = text.partition("\n")
        shebang += "\n"
    path.write_text(shebang + header(prefix) + text)
    return True


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", type=pathlib.Path, default=pathlib.Path(__file__).resolve().parent.parent)
    parser.add_argument("--check", action="store_true", help="list files without the header and exit 1 if any")
    args = parser.parse_args()

    changed = []
    for top in ROOTS:
        for path in sorted((args.root / top).rglob("*")):
            if path.is_file() and path.suffix in STYLES and apply(path, args.check):
                changed.append(path.relative_to(args.root))
    for path in changed:
        print(path)
    return 1 if args.check and changed else 0


if __name__ == "__main__":
    sys.exit(main())
