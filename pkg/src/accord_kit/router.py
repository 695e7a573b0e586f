"""Instruction-text router: a small attention-pooled transformer classifier.

Layout: token + position embeddings -> LayerNorm -> dropout -> projection,
then three residual blocks (attention, feed-forward, attention), additive
attention pooling, and a GELU/LayerNorm head producing one logit per kind.
"""
from __future__ import annotations

import copy
import json
import re
from collections import Counter
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from .errors import MissingClass, SequenceTooLong
from .problems import Kind

CLASSES = tuple(Kind)
CHECKPOINT_VERSION = 1
LN_EPS = 1e-5

PAD, UNK = "<pad>", "<unk>"
_PIECE = re.compile(r" ?(?:[A-Za-z]+|\d|[^\sA-Za-z\d])|\s")


class Tokenizer:
    """Word-level vocabulary with a character fallback.

    A leading space is folded into the next token as ``▁``. Digits are
    always single tokens. Out-of-vocabulary words are spelled as a first
    character followed by ``##`` continuation characters.
    """

    def __init__(self, vocab: list[str]):
        self.vocab = list(vocab)
        self.index = {tok: i for i, tok in enumerate(self.vocab)}
        self.pad_id = self.index[PAD]
        self.unk_id = self.index[UNK]

    @staticmethod
    def pieces(text: str) -> list[str]:
        out = []
        for m in _PIECE.finditer(text):
            s = m.group()
            out.append("▁" + s[1:] if len(s) > 1 and s[0] == " " else s)
        return out

    @classmethod
    def build(cls, texts, min_count: int = 1) -> "Tokenizer":
        counts = Counter()
        chars = set()
        for text in texts:
            for p in cls.pieces(text):
                counts[p] += 1
                body = p[1:] if p.startswith("▁") else p
                if body.isalpha():
                    chars.update(body)
        words = sorted(p for p, c in counts.items() if c >= min_count)
        fallback = sorted({"▁" + ch for ch in chars} | set(chars) | {"##" + ch for ch in chars})
        vocab = [PAD, UNK] + sorted(set(words) | set(fallback))
        return cls(vocab)

    def _spell(self, piece: str) -> list[int]:
        head, rest = (piece[:2], piece[2:]) if piece.startswith("▁") else (piece[:1], piece[1:])
        ids = [self.index.get(head, self.unk_id)]
        ids += [self.index.get("##" + ch, self.unk_id) for ch in rest]
        return ids

    def encode(self, text: str) -> list[int]:
        ids = []
        for p in self.pieces(text):
            if p in self.index:
                ids.append(self.index[p])
            elif p[-1:].isalpha():
                ids.extend(self._spell(p))
            else:
                ids.append(self.unk_id)
        return ids

    def decode(self, ids) -> str:
        out = []
        for i in ids:
            tok = self.vocab[i]
            if tok == PAD:
                continue
            if tok.startswith("##") and len(tok) > 2:
                tok = tok[2:]
            out.append(tok.replace("▁", " "))
        return "".join(out)

    def __len__(self):
        return len(self.vocab)


@dataclass(frozen=True)
class RouterConfig:
    vocab_size: int = 0
    d_e: int = 32
    d_h: int = 64
    heads: int = 4
    n_max: int = 256
    classes: int = len(CLASSES)
    dropout: float = 0.1
    seed: int = 0
    epochs: int = 6
    batch_size: int = 32
    lr: float = 3e-3

    def __post_init__(self):
        if self.d_h % self.heads:
            raise ValueError(f"d_h={self.d_h} is not divisible by {self.heads} heads")


class SelfAttention(nn.Module):
    def __init__(self, d: int, heads: int):
        super().__init__()
        self.heads = heads
        self.qkv = nn.Linear(d, 3 * d)
        self.out = nn.Linear(d, d)

    def forward(self, x, pad_mask):
        b, n, d = x.shape
        q, k, v = self.qkv(x).view(b, n, 3, self.heads, d // self.heads).permute(2, 0, 3, 1, 4)
        scores = q @ k.transpose(-1, -2) / (d // self.heads) ** 0.5
        scores = scores.masked_fill(pad_mask[:, None, None, :], float("-inf"))
        ctx = scores.softmax(-1) @ v
        return self.out(ctx.transpose(1, 2).reshape(b, n, d))


class RouterNet(nn.Module):
    def __init__(self, cfg: RouterConfig):
        super().__init__()
        self.cfg = cfg
        self.tok = nn.Embedding(cfg.vocab_size, cfg.d_e)
        self.pos = nn.Embedding(cfg.n_max, cfg.d_e)
        self.ln_emb = nn.LayerNorm(cfg.d_e, eps=LN_EPS)
        self.drop = nn.Dropout(cfg.dropout)
        self.proj = nn.Linear(cfg.d_e, cfg.d_h)
        self.attn1 = SelfAttention(cfg.d_h, cfg.heads)
        self.ln1 = nn.LayerNorm(cfg.d_h, eps=LN_EPS)
        self.ffn = nn.Sequential(nn.Linear(cfg.d_h, 4 * cfg.d_h), nn.GELU(approximate="tanh"), nn.Linear(4 * cfg.d_h, cfg.d_h))
        self.ln2 = nn.LayerNorm(cfg.d_h, eps=LN_EPS)
        self.attn3 = SelfAttention(cfg.d_h, cfg.heads)
        self.ln3 = nn.LayerNorm(cfg.d_h, eps=LN_EPS)
        self.pool_proj = nn.Linear(cfg.d_h, cfg.d_h)
        self.pool_query = nn.Linear(cfg.d_h, 1, bias=False)
        self.w1 = nn.Linear(cfg.d_h, cfg.d_h)
        self.ln_head = nn.LayerNorm(cfg.d_h, eps=LN_EPS)
        self.w2 = nn.Linear(cfg.d_h, cfg.classes)

    def embed(self, ids):
        positions = torch.arange(ids.shape[1], device=ids.device)
        return self.drop(self.ln_emb(self.tok(ids) + self.pos(positions)[None]))

    def pool(self, h, pad_mask):
        scores = self.pool_query(torch.tanh(self.pool_proj(h))).squeeze(-1)
        weights = scores.masked_fill(pad_mask, float("-inf")).softmax(-1)
        return (weights[..., None] * h).sum(1), weights

    def forward(self, ids, pad_mask):
        h = self.proj(self.embed(ids))
        h = self.ln1(h + self.attn1(h, pad_mask))
        h = self.ln2(h + self.ffn(h))
        h = self.ln3(h + self.attn3(h, pad_mask))
        r, _ = self.pool(h, pad_mask)
        return self.w2(self.ln_head(F.gelu(self.w1(r), approximate="tanh")))


class RouterModel:
    def __init__(self, config: RouterConfig, tokenizer: Tokenizer, net: RouterNet | None = None):
        self.config = config
        self.tokenizer = tokenizer
        if net is None:
            torch.manual_seed(config.seed)
            net = RouterNet(config)
        self.net = net
        self.net.eval()

    def ids(self, tokens) -> list[int]:
        ids = self.tokenizer.encode(tokens) if isinstance(tokens, str) else list(tokens)
        if len(ids) > self.config.n_max:
            raise SequenceTooLong(f"{len(ids)} tokens exceed n_max={self.config.n_max}")
        return ids

    def batch(self, items):
        seqs = [self.ids(t) for t in items]
        width = max(1, max(len(s) for s in seqs))
        ids = torch.full((len(seqs), width), self.tokenizer.pad_id, dtype=torch.long)
        for i, s in enumerate(seqs):
            ids[i, : len(s)] = torch.tensor(s, dtype=torch.long)
        return ids, ids == self.tokenizer.pad_id


def _mode(net: nn.Module, mode: str) -> None:
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    net.train(mode == "train")


def embed_sequence(model: RouterModel, tokens, mode: str = "infer") -> torch.Tensor:
    """E' for one sequence, shape (len, d_e)."""
    ids = model.ids(tokens)
    _mode(model.net, mode)
    with torch.set_grad_enabled(mode == "train"):
        return model.net.embed(torch.tensor([ids], dtype=torch.long))[0]


def forward(model: RouterModel, tokens, mode: str = "infer") -> torch.Tensor:
    """Logits (length = number of classes) for one text or token-id list."""
    ids = model.ids(tokens)
    if not ids:
        raise ValueError("cannot route an empty token sequence")
    _mode(model.net, mode)
    x = torch.tensor([ids], dtype=torch.long)
    with torch.set_grad_enabled(mode == "train"):
        return model.net(x, torch.zeros_like(x, dtype=torch.bool))[0]


def attention_pool(model: RouterModel, h: torch.Tensor, pad_mask: torch.Tensor | None = None):
    """Pool states ``h`` of shape (n, d_h). Returns (r, weights)."""
    if pad_mask is None:
        pad_mask = torch.zeros(h.shape[0], dtype=torch.bool)
    r, a = model.net.pool(h[None], pad_mask[None])
    return r[0], a[0]


def classify(model: RouterModel, text: str) -> tuple[Kind, float]:
    with torch.no_grad():
        probs = forward(model, text).softmax(-1)
    k = int(probs.argmax())
    return CLASSES[k], float(probs[k])


def classify_many(model: RouterModel, texts, batch_size: int = 256) -> list[Kind]:
    out = []
    model.net.eval()
    with torch.no_grad():
        for s in range(0, len(texts), batch_size):
            ids, mask = model.batch(texts[s : s + batch_size])
            out.extend(CLASSES[int(k)] for k in model.net(ids, mask).argmax(-1))
    return out


def train(config: RouterConfig, corpus, tokenizer: Tokenizer | None = None):
    """Fit on (text, kind) pairs with Adam. Returns (model, per-step loss curve)."""
    labels = [Kind(k) for _, k in corpus]
    missing = [k.value for k in CLASSES if k not in labels]
    if missing:
        raise MissingClass(f"corpus has no examples of {', '.join(missing)}")
    texts = [t for t, _ in corpus]
    tokenizer = tokenizer or Tokenizer.build(texts)
    config = replace(config, vocab_size=len(tokenizer))
    model = RouterModel(config, tokenizer)
    longest = max(len(tokenizer.encode(t)) for t in texts)
    if longest > config.n_max:
        raise SequenceTooLong(f"longest training text has {longest} tokens, n_max={config.n_max}")
    target = torch.tensor([CLASSES.index(k) for k in labels])
    torch.manual_seed(config.seed)
    rng = np.random.Generator(np.random.PCG64(config.seed))
    opt = torch.optim.Adam(model.net.parameters(), lr=config.lr)
    curve = []
    model.net.train()
    for _ in range(config.epochs):
        order = rng.permutation(len(texts))
        for s in range(0, len(order), config.batch_size):
            idx = order[s : s + config.batch_size]
            ids, mask = model.batch([texts[i] for i in idx])
            loss = F.cross_entropy(model.net(ids, mask), target[idx])
            opt.zero_grad()
            loss.backward()
            opt.step()
            curve.append(loss.item())
    model.net.eval()
    return model, curve


GRAD_FLOOR = 1e-7


def gradient_check(model: RouterModel, sample, n_params: int = 64, step: float = 1e-3, seed: int = 0) -> float:
    """Max relative error between autograd and central differences (float64, dropout off).

    Central differences at ``step`` and ``step / 2`` are Richardson-combined.

    ``sample`` is ``(tokens, kind)``. Relative error uses
    ``|a - n| / max(|a|, |n|, 1e-7)``; the floor sits above float64
    difference noise so structurally zero gradients (key biases) compare absolutely.
    """
    tokens, kind = sample
    net = copy.deepcopy(model.net).double()
    net.eval()
    x = torch.tensor([model.ids(tokens)], dtype=torch.long)
    mask = torch.zeros_like(x, dtype=torch.bool)
    y = torch.tensor([CLASSES.index(Kind(kind))])

    def loss() -> torch.Tensor:
        return F.cross_entropy(net(x, mask), y)

    net.zero_grad()
    loss().backward()
    params = [p for p in net.parameters() if p.grad is not None]
    sizes = np.array([p.numel() for p in params])
    rng = np.random.Generator(np.random.PCG64(seed))
    worst = 0.0
    with torch.no_grad():
        for _ in range(n_params):
            k = int(rng.choice(len(params), p=sizes / sizes.sum()))
            flat, grad = params[k].view(-1), params[k].grad.view(-1)
            i = int(rng.integers(flat.numel()))
            old = float(flat[i])
            wide, narrow = _central(loss, flat, i, old, step), _central(loss, flat, i, old, step / 2)
            # Richardson: cancels the h^2 truncation term of the central difference
            numeric = (4 * narrow - wide) / 3
            analytic = float(grad[i])
            err = abs(analytic - numeric) / max(abs(analytic), abs(numeric), GRAD_FLOOR)
            worst = max(worst, err)
    return worst


def _central(loss, flat, i: int, old: float, h: float) -> float:
    flat[i] = old + h
    up = float(loss())
    flat[i] = old - h
    down = float(loss())
    flat[i] = old
    return (up - down) / (2 * h)


def save(model: RouterModel, path) -> None:
    """npz container: one float32 array per parameter plus a JSON ``__meta__`` entry."""
    meta = {"version": CHECKPOINT_VERSION, "config": asdict(model.config), "vocab": model.tokenizer.vocab, "classes": [k.value for k in CLASSES]}
    arrays = {name: t.detach().cpu().numpy() for name, t in model.net.state_dict().items()}
    with open(path, "wb") as fh:
        np.savez(fh, __meta__=np.array(json.dumps(meta)), **arrays)


def load(path) -> RouterModel:
    with np.load(Path(path), allow_pickle=False) as data:
        meta = json.loads(str(data["__meta__"]))
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('version')}")
        config = RouterConfig(**meta["config"])
        net = RouterNet(config)
        net.load_state_dict({k: torch.from_numpy(data[k]) for k in net.state_dict()})
    return RouterModel(config, Tokenizer(meta["vocab"]), net)
