#!/usr/bin/env python3
"""Regenerates tests/fixtures/mock/*.json from hand-written completions.

Each fixture embeds the exact completion request the fuzzer sends, so the
mock backend can match it by digest. The requests come from
`evofuzz seed --dump-request`.
"""
import argparse
import json
import pathlib
import subprocess

COMPLETIONS = {
    "torch.mm": [
        "a = torch.randn(3, 4)\nb = torch.randn(4, 5)\nc = torch.mm(a, b)\nprint(c)\n",
        "x = torch.ones(2, 2)\ny = torch.eye(2)\nz = torch.mm(x, y)\nw = z.sum()\n",
        "m = torch.rand(5, 5)\nr = torch.mm(m, m.t())\nprint(r.shape)\n",
        "a = torch.randn(3, 4)\nb = torch.randn(4, 5)\nc = torch.mm(a, b)\nprint(c)\n",
        "a = torch.arange(6.0).reshape(2, 3)\nb = torch.arange(6.0).reshape(3, 2)\nout = torch.mm(a, b)\nout = torch.relu(out)\n",
        "a = torch.randn(3, 4)\nb = torch.randn(4, 5)\nc = torch.mat",
        "print('hello')\n",
    ],
    "torch.matrix_exp": [
        "A = torch.randn(3, 3)\nB = torch.matrix_exp(A)\nprint(B)\n",
        "A = torch.zeros(2, 2)\nE = torch.matrix_exp(A)\nassert torch.allclose(E, torch.eye(2))\n",
        "x = torch.rand(4, 4, dtype=torch.float64)\ny = torch.matrix_exp(x + x.t())\nz = y.det()\n",
        "A = torch.randn(2, 3, 3)\nfor i in range(2):\n    print(torch.matrix_exp(A[i]))\n",
        "import numpy as np\nA = torch.tensor(np.eye(3))\nB = torch.matrix_exp(",
    ],
    "torch.log": [
        "x = torch.rand(5)\ny = torch.log(x)\nprint(y)\n",
        "x = torch.tensor([1.0, 2.0, 0.0, -1.0])\ny = torch.log(x)\n",
        "x = torch.abs(torch.randn(3, 3)) + 1e-3\ny = torch.log(x)\nz = torch.exp(y)\n",
        "x = torch.linspace(0.1, 10, steps=20)\ny = torch.log(x).mean()\nprint(y.item())\n",
        "values = [1, 2, 3]\nprint(values)\n",
    ],
    "tf.nn.conv2d": [
        "x = tf.random.normal([1, 8, 8, 3])\nw = tf.random.normal([3, 3, 3, 4])\ny = tf.nn.conv2d(x, w, strides=1, padding='SAME')\nprint(y.shape)\n",
        "x = tf.ones([2, 5, 5, 1])\nk = tf.ones([2, 2, 1, 1])\ny = tf.nn.conv2d(x, k, strides=[1, 1, 1, 1], padding='VALID')\n",
        "x = tf.random.uniform([1, 4, 4, 2])\nf = tf.random.uniform([1, 1, 2, 2])\ny = tf.nn.conv2d(x, f, 1, 'SAME', dilations=1)\nz = tf.reduce_sum(y)\n",
        "x = tf.zeros([1, 3, 3, 1])\ny = tf.nn.conv2d(x,",
    ],
    "tf.math.abs": [
        "x = tf.constant([-1.0, 2.0, -3.0])\ny = tf.math.abs(x)\nprint(y)\n",
        "x = tf.random.normal([4, 4])\ny = tf.math.abs(x)\nz = tf.reduce_max(y)\n",
        "x = tf.constant([[-2, 3], [4, -5]], dtype=tf.int32)\ny = tf.math.abs(x)\n",
        "x = tf.complex(tf.constant([3.0]), tf.constant([4.0]))\ny = tf.math.abs(x)\nprint(y.numpy())\n",
        "x = tf.constant(1.0)\nprint(x)\n",
    ],
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--evofuzz", required=True, help="path to the evofuzz binary")
    ap.add_argument("--catalog", required=True)
    ap.add_argument("--out", required=True)
    args = ap.parse_args()
    dumped = subprocess.run(
        [args.evofuzz, "seed", "--api-catalog", args.catalog, "--dump-request"],
        check=True, capture_output=True, text=True).stdout
    requests = [json.loads(line) for line in dumped.splitlines() if line.strip()]
    names = [json.loads(line)["name"] for line in open(args.catalog) if line.strip()]
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, request in zip(names, requests):
        fixture = {"request": request, "samples": COMPLETIONS[name]}
        with open(out / f"seed_{name.replace('.', '_')}.json", "w") as f:
            json.dump(fixture, f, indent=2)
            f.write("\n")


if __name__ == "__main__":
    main()
