#!/usr/bin/env python3
"""Regenerates the shipped model descriptors under data/models/.

Layer tables are synthesized from the public architecture definitions of each
network. FLOPs follow the usual conventions: a multiply-accumulate counts as
two operations, elementwise ops count one per output element.

Usage: python3 tools/gen_descriptors.py [out_dir]
"""

import json
import math
import os
import sys


def numel(shape):
    return math.prod(shape)


class Builder:
    def __init__(self, name, task_kind, work_unit, units_per_pass, precision="FP16"):
        self.name = name
        self.task_kind = task_kind
        self.work_unit = work_unit
        self.units_per_pass = units_per_pass
        self.precision = precision
        self.layers = []
        self.params = 0

    def add(self, op, flops, in_shape, out_shape, **extra):
        layer = {
            "op": op,
            "precision": self.precision,
            "flops": int(flops),
            "in_shape": list(in_shape),
            "out_shape": list(out_shape),
        }
        layer.update(extra)
        self.layers.append(layer)
        return list(out_shape)

    # --- convolutional building blocks (NCHW, batch 1) ---

    def conv(self, x, cout, k, s=1, p=None, groups=1):
        n, cin, h, w = x
        if p is None:
            p = k // 2
        ho = (h + 2 * p - k) // s + 1
        wo = (w + 2 * p - k) // s + 1
        out = [n, cout, ho, wo]
        flops = 2 * k * k * (cin // groups) * cout * ho * wo
        self.params += k * k * (cin // groups) * cout
        extra = {"kernel": [k, k], "stride": [s, s], "padding": [p, p]}
        if groups != 1:
            extra["groups"] = groups
        return self.add("Conv", flops, x, out, **extra)

    def bn(self, x):
        self.params += 2 * x[1]
        return self.add("BatchNormalization", 2 * numel(x), x, x)

    def relu(self, x):
        return self.add("Relu", numel(x), x, x)

    def swish(self, x):
        self.add("Sigmoid", 4 * numel(x), x, x)
        return self.add("Mul", numel(x), x, x)

    def maxpool(self, x, k, s, p=0):
        n, c, h, w = x
        ho = (h + 2 * p - k) // s + 1
        wo = (w + 2 * p - k) // s + 1
        out = [n, c, ho, wo]
        return self.add("MaxPool", k * k * numel(out), x, out,
                        kernel=[k, k], stride=[s, s], padding=[p, p])

    def gap(self, x):
        n, c, _, _ = x
        return self.add("GlobalAveragePool", numel(x), x, [n, c, 1, 1])

    def flatten(self, x):
        return self.add("Flatten", 0, x, [x[0], numel(x[1:])])

    def fc(self, x, out_features):
        n, cin = x[0], numel(x[1:])
        self.params += cin * out_features + out_features
        return self.add("FullyConnected", 2 * cin * out_features, [n, cin], [n, out_features],
                        kernel=[1, 1], stride=[1, 1], padding=[0, 0])

    def softmax(self, x):
        return self.add("Softmax", 5 * numel(x), x, x)

    # --- transformer building blocks (tokens x hidden) ---

    def matmul(self, x, out_features, weights=True):
        tokens, cin = x
        if weights:
            self.params += cin * out_features
        return self.add("MatMul", 2 * tokens * cin * out_features, x, [tokens, out_features])

    def attention_scores(self, q_tokens, kv_tokens, hidden, heads):
        scores = [heads, q_tokens, kv_tokens]
        self.add("MatMul", 2 * q_tokens * kv_tokens * hidden, [q_tokens, hidden], scores)
        self.add("Softmax", 5 * numel(scores), scores, scores)
        return self.add("MatMul", 2 * q_tokens * kv_tokens * hidden, scores, [q_tokens, hidden])

    def layernorm(self, x, op="LayerNormalization"):
        self.params += 2 * x[-1]
        return self.add(op, 8 * numel(x), x, x)

    def ew(self, op, x, cost=1):
        return self.add(op, cost * numel(x), x, x)

    def dump(self, out_dir, default_priority):
        total = sum(l["flops"] for l in self.layers)
        doc = {
            "name": self.name,
            "task_kind": self.task_kind,
            "work_unit": self.work_unit,
            "units_per_pass": self.units_per_pass,
            "default_priority": default_priority,
            "total_params": self.params,
            "declared_total_flops": total,
            "layers": self.layers,
        }
        path = os.path.join(out_dir, self.name + ".json")
        with open(path, "w") as f:
            json.dump(doc, f, indent=1)
            f.write("\n")
        print(f"{self.name:20s} layers={len(self.layers):5d} gflops/pass={total / 1e9:9.3f} params={self.params / 1e6:8.1f}M")


def vgg19(out):
    b = Builder("vgg-19", "DNN_BATCH", "image", 1)
    x = [1, 3, 224, 224]
    for width, reps in [(64, 2), (128, 2), (256, 4), (512, 4), (512, 4)]:
        for _ in range(reps):
            x = b.conv(x, width, 3, 1, 1)
            x = b.relu(x)
        x = b.maxpool(x, 2, 2)
    x = b.flatten(x)
    x = b.fc(x, 4096)
    x = b.relu(x)
    x = b.fc(x, 4096)
    x = b.relu(x)
    x = b.fc(x, 1000)
    b.softmax(x)
    b.dump(out, 1)


def resnet(out, name, blocks):
    b = Builder(name, "DNN_BATCH", "image", 1)
    x = [1, 3, 224, 224]
    x = b.conv(x, 64, 7, 2, 3)
    x = b.bn(x)
    x = b.relu(x)
    x = b.maxpool(x, 3, 2, 1)
    width = 64
    for stage, reps in enumerate(blocks):
        for i in range(reps):
            stride = 2 if (i == 0 and stage > 0) else 1
            identity = x
            y = b.conv(x, width, 1, 1, 0)
            y = b.bn(y)
            y = b.relu(y)
            y = b.conv(y, width, 3, stride, 1)
            y = b.bn(y)
            y = b.relu(y)
            y = b.conv(y, width * 4, 1, 1, 0)
            y = b.bn(y)
            if i == 0:
                identity = b.conv(identity, width * 4, 1, stride, 0)
                identity = b.bn(identity)
            y = b.ew("Add", y)
            x = b.relu(y)
        width *= 2
    x = b.gap(x)
    x = b.flatten(x)
    x = b.fc(x, 1000)
    b.softmax(x)
    b.dump(out, 1)


def efficientnet_b4(out):
    b = Builder("efficientnet-b4", "DNN_BATCH", "image", 1)
    x = [1, 3, 380, 380]
    x = b.conv(x, 48, 3, 2, 1)
    x = b.bn(x)
    x = b.swish(x)
    # (expand, kernel, stride, out_channels, repeats)
    stages = [(1, 3, 1, 24, 2), (6, 3, 2, 32, 4), (6, 5, 2, 56, 4), (6, 3, 2, 112, 6),
              (6, 5, 1, 160, 6), (6, 5, 2, 272, 8), (6, 3, 1, 448, 2)]
    for expand, k, s, cout, reps in stages:
        for i in range(reps):
            stride = s if i == 0 else 1
            cin = x[1]
            y = x
            if expand != 1:
                y = b.conv(y, cin * expand, 1, 1, 0)
                y = b.bn(y)
                y = b.swish(y)
            mid = y[1]
            y = b.conv(y, mid, k, stride, k // 2, groups=mid)
            y = b.bn(y)
            y = b.swish(y)
            se = b.gap(y)
            se = b.conv(se, max(1, cin // 4), 1, 1, 0)
            se = b.swish(se)
            se = b.conv(se, mid, 1, 1, 0)
            b.ew("Sigmoid", se, 4)
            y = b.ew("Mul", y)
            y = b.conv(y, cout, 1, 1, 0)
            y = b.bn(y)
            if stride == 1 and cin == cout:
                y = b.ew("Add", y)
            x = y
    x = b.conv(x, 1792, 1, 1, 0)
    x = b.bn(x)
    x = b.swish(x)
    x = b.gap(x)
    x = b.flatten(x)
    x = b.fc(x, 1000)
    b.softmax(x)
    b.dump(out, 1)


def encoder_stack(b, x, layers, hidden, heads, ffn):
    tokens = x[0]
    for _ in range(layers):
        q = b.matmul(x, hidden)
        b.matmul(x, hidden)
        b.matmul(x, hidden)
        a = b.attention_scores(tokens, tokens, hidden, heads)
        a = b.matmul(a, hidden)
        a = b.ew("Add", a)
        x = b.layernorm(a)
        h = b.matmul(x, ffn)
        h = b.ew("Gelu", h, 8)
        h = b.matmul(h, hidden)
        h = b.ew("Add", h)
        x = b.layernorm(h)
    return x


def bert(out, name, layers, hidden, heads):
    seq = 128
    b = Builder(name, "ENCODER_PROMPT", "token", seq)
    x = [seq, hidden]
    b.params += (30522 + 512 + 2) * hidden
    b.add("Gather", numel(x), [seq], x)
    x = b.ew("Add", x, 2)
    x = b.layernorm(x)
    x = encoder_stack(b, x, layers, hidden, heads, 4 * hidden)
    pooled = b.matmul([1, hidden], hidden)
    pooled = b.ew("Tanh", pooled, 4)
    b.matmul(pooled, 2)
    b.dump(out, 2)


def vit(out, name, layers, hidden, heads, ffn):
    b = Builder(name, "ENCODER_PROMPT", "image", 1)
    x = [1, 3, 224, 224]
    x = b.conv(x, hidden, 16, 16, 0)
    tokens = 197
    x = b.add("Reshape", 0, x, [tokens - 1, hidden])
    x = b.add("Concat", tokens * hidden, x, [tokens, hidden])
    b.params += tokens * hidden
    x = b.ew("Add", x)
    x = encoder_stack(b, x, layers, hidden, heads, ffn)
    x = b.layernorm(x)
    b.matmul([1, hidden], 1000)
    b.dump(out, 2)


def decoder_llm(out, name, layers, hidden, heads, kv_heads, head_dim, ffn, vocab, act, context):
    # One decode step at a fixed context length; work unit is an output token.
    b = Builder(name, "GENERATIVE", "output_token", 1)
    x = [1, hidden]
    b.params += vocab * hidden
    b.add("Gather", hidden, [1], x)
    q_dim = heads * head_dim
    kv_dim = kv_heads * head_dim
    for _ in range(layers):
        h = b.layernorm(x, "RMSNormalization")
        q = b.matmul(h, q_dim)
        b.matmul(h, kv_dim)
        b.matmul(h, kv_dim)
        b.add("RotaryEmbedding", 6 * (q_dim + kv_dim), [1, q_dim], [1, q_dim])
        a = b.attention_scores(1, context, q_dim, heads)
        a = b.matmul(a, hidden)
        x = b.ew("Add", a)
        h = b.layernorm(x, "RMSNormalization")
        gate = b.matmul(h, ffn)
        b.matmul(h, ffn)
        gate = b.ew(act, gate, 8)
        gate = b.ew("Mul", gate)
        h = b.matmul(gate, hidden)
        x = b.ew("Add", h)
    x = b.layernorm(x, "RMSNormalization")
    b.add("MatMul", 2 * hidden * vocab, x, [1, vocab])
    b.dump(out, 2)


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "data", "models")
    os.makedirs(out, exist_ok=True)
    vgg19(out)
    resnet(out, "resnet-50", [3, 4, 6, 3])
    resnet(out, "resnet-152", [3, 8, 36, 3])
    efficientnet_b4(out)
    vit(out, "vit-base", 12, 768, 12, 3072)
    vit(out, "vit-large", 24, 1024, 16, 4096)
    bert(out, "bert-base", 12, 768, 12)
    bert(out, "bert-large", 24, 1024, 16)
    decoder_llm(out, "deepseek-r1-1.5b", 28, 1536, 12, 2, 128, 8960, 151936, "Silu", 512)
    decoder_llm(out, "gemma-3-1b", 26, 1152, 4, 1, 256, 6912, 262144, "Gelu", 512)


if __name__ == "__main__":
    main()
