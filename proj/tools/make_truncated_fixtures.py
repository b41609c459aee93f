#!/usr/bin/env python3
"""Writes tests/fixtures/truncated.jsonl.

Each record holds a completion cut off mid-token or mid-statement, as a
length-limited model would emit it, and the longest line prefix that
CPython's own parser accepts. The expected value therefore comes from
``ast.parse`` and not from the C++ parser under test.
"""
import ast
import json
import pathlib

PROGRAMS = [
    "import torch\nx = torch.rand(3, 4)\ny = torch.mm(x, x.t())\nz = y.sum()\n",
    "import torch\na = torch.ones(2, 2)\nb = torch.matrix_exp(a)\nif b.sum() > 0:\n    c = b * 2\nelse:\n    c = b\n",
    "import tensorflow as tf\nx = tf.constant([[1.0, 2.0], [3.0, 4.0]])\ny = tf.math.abs(x)\nz = tf.reduce_sum(y)\n",
    "import torch\ndef f(t):\n    return torch.log(t + 1)\nx = torch.rand(5)\ny = f(x)\n",
    "import torch\nvals = [torch.rand(2) for _ in range(3)]\nout = torch.stack(vals, dim=0)\nm = out.mean()\n",
    "import tensorflow as tf\nimg = tf.random.uniform([1, 8, 8, 3])\nk = tf.random.uniform([3, 3, 3, 4])\nout = tf.nn.conv2d(img, k, strides=1, padding='SAME')\n",
    "import torch\nx = torch.tensor([1.0, -2.0, 3.0])\ntry:\n    y = torch.log(x)\nexcept RuntimeError:\n    y = None\n",
    "import torch\nfor i in range(3):\n    x = torch.rand(i + 1)\n    y = torch.abs(x)\ns = 'done'\n",
    "import torch\nwith torch.no_grad():\n    x = torch.rand(3)\n    y = torch.exp(x)\nz = y.max()\n",
    "import torch\nx = torch.rand(4,\n               4)\ny = torch.mm(x,\n             x)\n",
]

# Cut points as fractions of each program's length. A cut that happens to
# leave valid Python is moved back one character at a time until it does not.
CUTS = [0.55, 0.75, 0.93]


def parses(text):
    try:
        ast.parse(text)
    except SyntaxError:
        return False
    return True


def truncate(program, fraction):
    end = int(len(program) * fraction)
    while end > 0 and parses(program[:end]):
        end -= 1
    return program[:end]


def longest_parsing_prefix(text):
    lines = text.split("\n")
    for n in range(len(lines), -1, -1):
        candidate = "\n".join(lines[:n])
        if parses(candidate):
            return candidate
    return ""


def main():
    root = pathlib.Path(__file__).resolve().parent.parent
    out = root / "tests" / "fixtures" / "truncated.jsonl"
    records = []
    for program in PROGRAMS:
        for cut in CUTS:
            completion = truncate(program, cut)
            assert not parses(completion)
            records.append({"completion": completion, "expected": longest_parsing_prefix(completion)})
    assert len(records) == 30
    with open(out, "w") as f:
        for r in records:
            f.write(json.dumps(r) + "\n")
    print(f"wrote {len(records)} records to {out}")


if __name__ == "__main__":
    main()
