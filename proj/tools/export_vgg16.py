#!/usr/bin/env python3
# Copyright 2026 The hflic Authors
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Export torchvision VGG16 convolution weights to an hflic tensor archive.

The archive is read by the "vgg16" feature extractor from $HFLIC_CACHE/vgg16.hfar.
"""
import argparse
import json
import struct
import sys

LAYERS = [64, 64, "M", 128, 128, "M", 256, 256, 256, "M", 512, 512, 512, "M", 512, 512, 512]
TAPS = [1, 3, 6, 9, 12]  # relu1_2, relu2_2, relu3_3, relu4_3, relu5_3


def conv_weights(args):
    import torch
    import torchvision

    if args.random:
        model = torchvision.models.vgg16(weights=None)
    elif args.state_dict:
        model = torchvision.models.vgg16(weights=None)
        model.load_state_dict(torch.load(args.state_dict, map_location="cpu"))
    else:
        model = torchvision.models.vgg16(weights=torchvision.models.VGG16_Weights.IMAGENET1K_V1)
    convs = [m for m in model.features if isinstance(m, torch.nn.Conv2d)]
    return [(c.weight.detach().double().numpy(), c.bias.detach().double().numpy()) for c in convs]


def write_archive(path, metadata, tensors):
    out = bytearray(b"HFAR")
    out += struct.pack("<I", 1)
    meta = json.dumps(metadata).encode()
    out += struct.pack("<Q", len(meta)) + meta
    out += struct.pack("<I", len(tensors))
    for name, array in sorted(tensors.items()):
        shape = list(array.shape) + [1] * (4 - array.ndim)
        out += struct.pack("<I", len(name)) + name.encode()
        out += struct.pack("<4I", *shape)
        out += array.astype("<f8").tobytes()
    with open(path, "wb") as f:
        f.write(out)


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("out", help="output path, e.g. $HFLIC_CACHE/vgg16.hfar")
    p.add_argument("--state-dict", help="local torchvision VGG16 state dict instead of downloading")
    p.add_argument("--random", action="store_true", help="random weights (format testing only)")
    args = p.parse_args()

    weights = conv_weights(args)
    tensors = {}
    for i, (w, b) in enumerate(weights):
        tensors[f"conv{i}.weight"] = w
        tensors[f"conv{i}.bias"] = b.reshape(-1, 1, 1, 1)
    write_archive(args.out, {"kind": "vgg", "layers": LAYERS, "taps": TAPS}, tensors)
    print(f"wrote {len(weights)} convolutions to {args.out}", file=sys.stderr)


if __name__ == "__main__":
    main()
