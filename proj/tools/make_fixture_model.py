#!/usr/bin/env python3
# Copyright 2026 The lgmsep Authors.
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
"""Trains the small two-class ChimeraACVAE used as a test fixture.

Sources come from `bss synth` (the two default classes), so the fixture sees
exactly the data the engine is tested on. The result is written as a CAVW
container plus a JSON file of reference forward outputs for parity tests.

    python3 tools/make_fixture_model.py --bss build/tools/bss \
        --out tests/fixtures/toy_chimera.cavw \
        --parity tests/fixtures/toy_chimera_parity.json
"""

import argparse
import json
import os
import struct
import subprocess
import tempfile
import wave
import zlib

import numpy as np
import torch
from torch import nn

VAR_FLOOR = 1e-10
FEATURE = "log-power, g-normalized"
WIN = 2048
HOP = 1024


def read_wav_float32(path):
    with open(path, "rb") as fh:
        data = fh.read()
    pos = 12
    fmt = None
    while pos + 8 <= len(data):
        tag = data[pos:pos + 4]
        size = struct.unpack("<I", data[pos + 4:pos + 8])[0]
        body = data[pos + 8:pos + 8 + size]
        if tag == b"fmt ":
            fmt = struct.unpack("<HHIIHH", body[:16])
        elif tag == b"data":
            assert fmt is not None and fmt[0] == 3 and fmt[5] == 32
            return np.frombuffer(body, dtype="<f4").astype(np.float64)
        pos += 8 + size + (size & 1)
    raise ValueError(f"{path}: no data chunk")


def stft_power(x):
    window = np.hamming(WIN)
    frames = (len(x) - WIN) // HOP + 1
    spec = np.stack([np.fft.rfft(x[n * HOP:n * HOP + WIN] * window)
                     for n in range(frames)], axis=1)
    return np.abs(spec) ** 2  # F x N


def features(power):
    gain = power.mean()
    norm = power / gain
    return np.log(norm + VAR_FLOOR), norm


def build_corpus(bss, seeds, workdir):
    feats, targets, labels = [], [], []
    for seed in seeds:
        out = os.path.join(workdir, f"s{seed}")
        subprocess.run([bss, "synth", "--out", out, "--seed", str(seed)],
                       check=True, stdout=subprocess.DEVNULL)
        with open(os.path.join(out, "meta.json")) as fh:
            classes = json.load(fh)["source_classes"]
        for j, cls in enumerate(classes):
            power = stft_power(read_wav_float32(
                os.path.join(out, f"src_{j}.wav")))
            f, t = features(power)
            feats.append(f)
            targets.append(t)
            labels.append(cls)
    return (torch.tensor(np.stack(feats)), torch.tensor(np.stack(targets)),
            torch.tensor(labels))


class ChannelNorm(nn.Module):
    def __init__(self, channels):
        super().__init__()
        self.norm = nn.LayerNorm(channels, eps=1e-5)

    def forward(self, x):
        return self.norm(x.transpose(1, 2)).transpose(1, 2)


class Block(nn.Module):
    """Conv or deconv, optional layer norm, optional SiLU."""

    def __init__(self, name, role, kind, cin, cout, kernel, stride, norm, act):
        super().__init__()
        self.meta = dict(name=name, role=role, kind=kind, in_ch=cin,
                         out_ch=cout, kernel=kernel, stride=stride,
                         activation="silu" if act else "none",
                         layer_norm=norm)
        pad = (kernel - 1) // 2
        if kind == "conv1d":
            self.conv = nn.Conv1d(cin, cout, kernel, stride, pad)
        else:
            self.conv = nn.ConvTranspose1d(cin, cout, kernel, stride, pad,
                                           output_padding=stride - 1)
        self.norm = ChannelNorm(cout) if norm else None
        self.act = act

    def forward(self, x):
        h = self.conv(x)
        if self.norm is not None:
            h = self.norm(h)
        return nn.functional.silu(h) if self.act else h

    def tensors(self):
        out = [("weight", self.conv.weight), ("bias", self.conv.bias)]
        if self.norm is not None:
            out += [("ln_gamma", self.norm.norm.weight),
                    ("ln_beta", self.norm.norm.bias)]
        return out


class Chimera(nn.Module):
    def __init__(self, bins, latent, classes):
        super().__init__()
        self.bins, self.latent, self.classes = bins, latent, classes
        self.trunk = nn.ModuleList([
            Block("enc.trunk.0", "trunk", "conv1d", bins, 64, 1, 1, True, True),
            Block("enc.trunk.1", "trunk", "conv1d", 64, 32, 3, 1, True, True),
        ])
        self.mu = Block("enc.mu", "mu", "conv1d", 32, latent, 3, 1, False,
                        False)
        self.logvar = Block("enc.logvar", "logvar", "conv1d", 32, latent, 3, 1,
                            False, False)
        self.cls = Block("enc.class", "class", "conv1d", 32, classes, 3, 1,
                         False, False)
        self.decoder = nn.ModuleList([
            Block("dec.0", "decoder", "deconv1d", latent + classes, 32, 3, 1,
                  True, True),
            Block("dec.1", "decoder", "deconv1d", 32 + classes, 64, 3, 1, True,
                  True),
            Block("dec.2", "decoder", "deconv1d", 64 + classes, bins, 1, 1,
                  False, False),
        ])

    def layers(self):
        return [*self.trunk, self.mu, self.logvar, self.cls, *self.decoder]

    def encode(self, x):
        h = x
        for block in self.trunk:
            h = block(h)
        logits = self.cls(h).mean(dim=2)
        return self.mu(h), self.logvar(h), logits

    def decode(self, z, c, frames):
        h = z
        for block in self.decoder:
            cc = c[:, :, None].expand(-1, -1, h.shape[2])
            h = block(torch.cat([h, cc], dim=1))
        return h[:, :, :frames]  # log sigma^2


def train(model, feats, targets, labels, epochs, lr, seed, leak):
    gen = torch.Generator().manual_seed(seed)
    # Sources come in pairs from one mixture; index ^ 1 is the partner.
    partner = torch.arange(len(feats)) ^ 1
    opt = torch.optim.Adam(model.parameters(), lr=lr)
    frames = feats.shape[2]
    for epoch in range(epochs):
        order = torch.randperm(len(feats), generator=gen)
        for start in range(0, len(order), 32):
            idx = order[start:start + 32]
            x, p, y = feats[idx], targets[idx], labels[idx]
            if leak > 0.0:
                # Encoder input with residual interference, as seen inside
                # the separation loop; the target stays clean.
                beta = torch.rand(len(idx), 1, 1, generator=gen,
                                  dtype=p.dtype) * leak
                noisy = p + beta * targets[partner[idx]]
                x = (noisy / noisy.mean(dim=(1, 2), keepdim=True)
                     + VAR_FLOOR).log()
            onehot = nn.functional.one_hot(y, model.classes).to(x.dtype)
            mu, logvar, logits = model.encode(x)
            z = mu + torch.randn(mu.shape, generator=gen,
                                 dtype=mu.dtype) * (0.5 * logvar).exp()
            log_s2 = model.decode(z, onehot, frames)
            recon = (log_s2 + p * (-log_s2).exp()).mean()
            kl = 0.5 * (mu ** 2 + logvar.exp() - logvar - 1).sum(1).mean() \
                / model.bins
            ce = nn.functional.cross_entropy(logits, y)
            # Auxiliary term: decoding with a random class must be
            # recognizable as that class.
            other = torch.randint(0, model.classes, y.shape, generator=gen)
            other_hot = nn.functional.one_hot(other, model.classes).to(x.dtype)
            gen_log = model.decode(z, other_hot, frames)
            _, _, gen_logits = model.encode(gen_log)
            aux = nn.functional.cross_entropy(gen_logits, other)
            loss = recon + kl + 0.1 * (ce + aux)
            opt.zero_grad()
            loss.backward()
            opt.step()
        if epoch % 10 == 0 or epoch == epochs - 1:
            print(f"epoch {epoch}: recon {recon.item():.4f} kl {kl.item():.4f}"
                  f" ce {ce.item():.4f} aux {aux.item():.4f}")


def export(model, path):
    manifest = {
        "format": "CAVW", "latent_dim": model.latent,
        "class_count": model.classes, "freq_bins": model.bins,
        "feature": FEATURE, "layer_norm_eps": 1e-5, "layers": [],
    }
    blob = bytearray()
    for block in model.layers():
        entry = dict(block.meta)
        entry["tensors"] = []
        for name, tensor in block.tensors():
            arr = tensor.detach().to(torch.float32).contiguous().numpy()
            entry["tensors"].append({"name": name, "shape": list(arr.shape)})
            blob += arr.astype("<f4").tobytes()
        manifest["layers"].append(entry)
    text = json.dumps(manifest, sort_keys=True, separators=(",", ":"))
    with open(path, "wb") as fh:
        fh.write(b"CAVW")
        fh.write(struct.pack("<IQ", 1, len(text)))
        fh.write(text.encode())
        fh.write(blob)
        fh.write(struct.pack("<I", zlib.crc32(blob) & 0xFFFFFFFF))


def parity_input(bins, frames):
    f = np.arange(bins)[:, None]
    n = np.arange(frames)[None, :]
    return 2.0 * np.sin(0.37 * f + 1.3 * n) - 3.0 + 0.001 * f


def write_parity(model, path, frames=8):
    # Reference outputs from the float32 weights evaluated in double.
    ref = Chimera(model.bins, model.latent, model.classes).double()
    ref.load_state_dict({k: v.to(torch.float32).to(torch.float64)
                         for k, v in model.state_dict().items()})
    x = torch.tensor(parity_input(model.bins, frames))[None]
    with torch.no_grad():
        mu, logvar, logits = ref.encode(x)
        rho = torch.softmax(logits, dim=1)
        log_s2 = ref.decode(mu, rho, frames)
    out = {
        "input": "2 sin(0.37 f + 1.3 n) - 3 + 0.001 f",
        "frames": frames,
        "mu": mu[0].tolist(),
        "sigma_sq_z": logvar[0].exp().tolist(),
        "rho": rho[0].tolist(),
        "log_sigma_sq": log_s2[0].tolist(),
    }
    with open(path, "w") as fh:
        json.dump(out, fh)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--bss", required=True, help="path to the bss binary")
    ap.add_argument("--out", required=True, help="output .cavw path")
    ap.add_argument("--parity", help="reference forward outputs (JSON)")
    ap.add_argument("--train-seeds", type=int, default=150)
    ap.add_argument("--epochs", type=int, default=60)
    ap.add_argument("--lr", type=float, default=1e-3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--leak", type=float, default=0.1,
                    help="max interference power ratio in encoder inputs")
    args = ap.parse_args()

    torch.manual_seed(args.seed)
    with tempfile.TemporaryDirectory() as tmp:
        # Training draws seeds from 10000 up; tests use lower seeds as
        # held-out data.
        feats, targets, labels = build_corpus(
            args.bss, range(10000 + args.seed * 1000,
                            10000 + args.seed * 1000 + args.train_seeds), tmp)
    print(f"corpus: {tuple(feats.shape)}")
    model = Chimera(feats.shape[1], latent=16, classes=2).double()
    train(model, feats, targets, labels, args.epochs, args.lr, args.seed,
          args.leak)
    export(model, args.out)
    if args.parity:
        write_parity(model, args.parity)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
