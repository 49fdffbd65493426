"""The contextualized topic model with negative sampling (CTM-Neg).

A VAE over bag-of-words documents: the encoder sees the L1-normalized BoW
concatenated with a projected contextual embedding, produces a diagonal
Gaussian posterior over topic space, and the decoder reconstructs the word
distribution through an unnormalized topic-word matrix. Training adds a
triplet term that pushes the reconstruction away from the document
reconstructed after zeroing the strongest topics.

The plain-CTM and ProdLDA baselines are configurations of the same code
path (triplet weight 0; ProdLDA additionally drops the context input).
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, asdict

import numpy as np

from .autodiff import Tensor, NumericsError
from .corpus import BowVector, Vocabulary, CorpusError
from .nn import MLP, Adam, BatchNorm1d, Linear

MODES = ("ctm_neg", "ctm", "prodlda")

CHECKPOINT_MAGIC = b"CTMN"
CHECKPOINT_VERSION = 1


@dataclass
class ModelConfig:
    n_topics: int
    vocab_size: int
    context_dim: int = 0
    hidden_sizes: tuple[int, ...] = (100, 100)
    perturb_top_s: int = 1
    triplet_weight: float = 0.0
    margin: float = 1.0
    epochs: int = 50
    seed: int = 0
    mode: str = "ctm_neg"
    learning_rate: float = 2e-3
    batch_size: int = 64
    dropout_rate: float = 0.2
    prior_alpha: float | None = None  # None -> 1/n_topics
    use_batch_norm: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.n_topics < 2:
            raise ValueError("n_topics must be >= 2")
        if not 0 <= self.perturb_top_s < self.n_topics:
            raise ValueError("perturb_top_s must satisfy 0 <= S < n_topics")
        if self.triplet_weight < 0:
            raise ValueError("triplet_weight must be >= 0")
        if self.margin <= 0:
            raise ValueError("margin must be > 0")
        if self.mode != "ctm_neg" and self.triplet_weight != 0.0:
            raise ValueError(f"mode {self.mode!r} requires triplet_weight 0")
        if self.mode != "prodlda" and self.context_dim < 1:
            raise ValueError(f"mode {self.mode!r} requires a context embedding dim")

    @property
    def uses_context(self) -> bool:
        return self.mode != "prodlda"

    @property
    def alpha(self) -> float:
        return self.prior_alpha if self.prior_alpha is not None else 1.0 / self.n_topics


@dataclass
class PriorParams:
    mu0: np.ndarray
    var0: np.ndarray


@dataclass
class LossBreakdown:
    reconstruction: float
    kl: float
    triplet: float
    weight: float

    @property
    def total(self) -> float:
        return self.reconstruction + self.kl + self.weight * self.triplet


def laplace_prior(n_topics: int, alpha: float) -> PriorParams:
    """Diagonal Gaussian approximating a symmetric Dirichlet(alpha) in the
    softmax basis."""
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    var = (1.0 / alpha) * (1.0 - 2.0 / n_topics) + (1.0 / n_topics**2) * (
        n_topics / alpha
    )
    return PriorParams(mu0=np.zeros(n_topics), var0=np.full(n_topics, var))


def kl_divergence(mu: np.ndarray, log_var: np.ndarray, prior: PriorParams) -> float:
    """Closed-form KL(q || p) for diagonal Gaussians, summed over dimensions."""
    var = np.exp(log_var)
    if np.any(var <= 0) or np.any(prior.var0 <= 0):
        raise ValueError("variances must be positive")
    return 0.5 * float(
        np.sum(
            var / prior.var0
            + (prior.mu0 - mu) ** 2 / prior.var0
            - 1.0
            + np.log(prior.var0)
            - log_var
        )
    )


def _top_s_indices(theta: np.ndarray, s: int) -> np.ndarray:
    # stable sort on negated values -> ties resolved to the lower index
    return np.argsort(-theta, kind="stable")[:s]


def perturb_theta(theta: np.ndarray, s: int) -> np.ndarray:
    """Zero the S largest entries of a simplex vector and renormalize the rest."""
    theta = np.asarray(theta, dtype=np.float64)
    if not 1 <= s < theta.shape[-1]:
        raise ValueError("perturbation count must satisfy 1 <= S < T")
    out = theta.copy()
    out[_top_s_indices(theta, s)] = 0.0
    remainder = out.sum()
    if remainder < 1e-12:
        raise ValueError("degenerate perturbation: remaining mass below 1e-12")
    return out / remainder


def reconstruction_loss(counts: np.ndarray, x_hat: np.ndarray) -> float:
    """Cross-entropy between predicted word distribution and observed counts."""
    return float(-(counts * np.log(np.maximum(x_hat, 1e-10))).sum())


def triplet_loss(
    anchor: np.ndarray, positive: np.ndarray, negative: np.ndarray, margin: float
) -> float:
    d_pos = float(np.linalg.norm(anchor - positive))
    d_neg = float(np.linalg.norm(anchor - negative))
    return max(d_pos - d_neg + margin, 0.0)


def total_loss(parts: LossBreakdown) -> float:
    return parts.total


def reparameterize(
    mu: np.ndarray, log_var: np.ndarray, eps: np.ndarray
) -> np.ndarray:
    """z = mu + exp(log_var / 2) * eps."""
    return mu + np.exp(0.5 * log_var) * eps


class CtmNegModel:
    """Encoder + decoder + training loop for CTM-Neg and its baselines."""

    def __init__(self, config: ModelConfig):
        self.config = config
        self.prior = laplace_prior(config.n_topics, config.alpha)
        self.rng = np.random.default_rng(config.seed)
        self.loss_trace: list[LossBreakdown] = []

        T, V, D = config.n_topics, config.vocab_size, config.context_dim
        self.ctx_proj = Linear(D, V, self.rng) if config.uses_context else None
        enc_in = 2 * V if config.uses_context else V
        self.encoder_mlp = MLP([enc_in, *config.hidden_sizes], self.rng)
        h = config.hidden_sizes[-1]
        self.mu_head = Linear(h, T, self.rng)
        self.logvar_head = Linear(h, T, self.rng)
        self.beta = Tensor(self.rng.uniform(-0.07, 0.07, (T, V)), requires_grad=True)
        if config.use_batch_norm:
            self.mu_bn = BatchNorm1d(T)
            self.logvar_bn = BatchNorm1d(T)
            self.decoder_bn = BatchNorm1d(V)
        else:
            self.mu_bn = self.logvar_bn = self.decoder_bn = None

    # -- parameters ------------------------------------------------------

    def parameters(self) -> list[Tensor]:
        params: list[Tensor] = []
        if self.ctx_proj is not None:
            params += self.ctx_proj.parameters()
        params += self.encoder_mlp.parameters()
        params += self.mu_head.parameters()
        params += self.logvar_head.parameters()
        params.append(self.beta)
        for bn in (self.mu_bn, self.logvar_bn, self.decoder_bn):
            if bn is not None:
                params += bn.parameters()
        return params

    # -- forward pieces ----------------------------------------------------

    def encode(
        self,
        x_bow: Tensor,
        x_ctx: Tensor | None,
        train: bool,
        dropout_mask: np.ndarray | None = None,
    ) -> tuple[Tensor, Tensor]:
        """Posterior parameters (mu, log_var) for a batch of documents."""
        if self.config.uses_context:
            if x_ctx is None:
                raise ValueError("context embeddings required in this mode")
            projected = self.ctx_proj(x_ctx)
            x = Tensor.concat([x_bow, projected], axis=1)
        else:
            x = x_bow
        h = self.encoder_mlp(x)
        if dropout_mask is not None:
            h = h * Tensor(dropout_mask)
        mu = self.mu_head(h)
        log_var = self.logvar_head(h)
        if self.mu_bn is not None:
            mu = self.mu_bn(mu, train=train)
            log_var = self.logvar_bn(log_var, train=train)
        return mu, log_var

    def decode(self, theta: Tensor, train: bool) -> Tensor:
        """Word distribution softmax(beta^T theta), batch-normalized logits."""
        logits = theta @ self.beta
        if self.decoder_bn is not None:
            logits = self.decoder_bn(logits, train=train)
        return logits.softmax(axis=-1)

    def _perturb(self, z: Tensor, theta: Tensor) -> Tensor:
        """Differentiable top-S perturbation, computed in logit space.

        Renormalizing the masked simplex vector is exactly a softmax over the
        surviving logits, so working from z avoids the underflow that zeroing
        an already-saturated theta would hit. The zeroed positions are chosen
        from the current values and treated as constants."""
        s = self.config.perturb_top_s
        mask = np.ones_like(theta.data)
        for row, values in enumerate(theta.data):
            mask[row, _top_s_indices(values, s)] = 0.0
        # shift by the largest surviving logit (a constant; it cancels in the
        # ratio) so the denominator is always >= 1
        shift = np.max(np.where(mask > 0, z.data, -np.inf), axis=1, keepdims=True)
        e = (z - Tensor(shift)).exp() * Tensor(mask)
        return e / e.sum(axis=1, keepdims=True)

    def batch_loss(
        self,
        counts: np.ndarray,
        x_bow: np.ndarray,
        x_ctx: np.ndarray | None,
        eps: np.ndarray,
        dropout_mask: np.ndarray | None,
        train: bool = True,
    ) -> tuple[Tensor, LossBreakdown]:
        """Mean loss over a batch; noise and dropout mask are supplied by the
        caller so the same forward pass is exactly repeatable."""
        cfg = self.config
        mu, log_var = self.encode(
            Tensor(x_bow),
            Tensor(x_ctx) if x_ctx is not None else None,
            train=train,
            dropout_mask=dropout_mask,
        )
        z = mu + (log_var * 0.5).exp() * Tensor(eps)
        theta = z.softmax(axis=-1)
        x_hat = self.decode(theta, train=train)

        log_x_hat = x_hat.clamp_min(1e-10).log()
        rl = -(Tensor(counts) * log_x_hat).sum(axis=1)

        var = log_var.exp()
        prior_mu = Tensor(self.prior.mu0)
        prior_var = Tensor(self.prior.var0)
        kl = (
            var / prior_var
            + (prior_mu - mu) ** 2 / prior_var
            - 1.0
            + prior_var.log()
            - log_var
        ).sum(axis=1) * 0.5

        use_triplet = cfg.mode == "ctm_neg" and cfg.triplet_weight > 0
        if use_triplet:
            theta_neg = self._perturb(z, theta)
            x_hat_neg = self.decode(theta_neg, train=train)
            d_pos = ((x_hat - Tensor(x_bow)) ** 2).sum(axis=1).sqrt()
            d_neg = ((x_hat - x_hat_neg) ** 2).sum(axis=1).sqrt()
            tl = (d_pos - d_neg + cfg.margin).clamp_min(0.0)
            tl_mean = tl.mean()
        else:
            tl_mean = Tensor(0.0)

        rl_mean = rl.mean()
        kl_mean = kl.mean()
        loss = rl_mean + kl_mean + cfg.triplet_weight * tl_mean
        parts = LossBreakdown(
            reconstruction=float(rl_mean.data),
            kl=float(kl_mean.data),
            triplet=float(tl_mean.data),
            weight=cfg.triplet_weight,
        )
        return loss, parts

    # -- training ----------------------------------------------------------

    def fit(
        self,
        bows: list[BowVector],
        embeddings: np.ndarray | None = None,
    ) -> list[LossBreakdown]:
        """Train with Adam for the configured number of epochs. Returns (and
        stores) the per-epoch mean loss breakdown."""
        cfg = self.config
        n = len(bows)
        if n == 0:
            raise CorpusError("cannot fit on an empty corpus")
        if cfg.uses_context:
            if embeddings is None:
                raise CorpusError("context embeddings required in this mode")
            if embeddings.shape[0] != n:
                raise CorpusError("embedding rows do not match document count")
            ctx = np.asarray(embeddings, dtype=np.float64)
        else:
            ctx = None

        V = cfg.vocab_size
        counts_mat = np.stack([b.dense_counts(V) for b in bows])
        norm_mat = np.stack([b.l1_normalized for b in bows])

        opt = Adam(self.parameters(), lr=cfg.learning_rate)
        h_last = cfg.hidden_sizes[-1]
        self.loss_trace = []
        for _ in range(cfg.epochs):
            order = self.rng.permutation(n)
            epoch_parts: list[tuple[LossBreakdown, int]] = []
            for start in range(0, n, cfg.batch_size):
                idx = order[start:start + cfg.batch_size]
                if len(idx) < 2 and self.mu_bn is not None:
                    continue  # batch norm needs >= 2 rows
                eps = self.rng.standard_normal((len(idx), cfg.n_topics))
                if cfg.dropout_rate > 0:
                    keep = self.rng.random((len(idx), h_last)) >= cfg.dropout_rate
                    mask = keep / (1.0 - cfg.dropout_rate)
                else:
                    mask = None
                loss, parts = self.batch_loss(
                    counts_mat[idx],
                    norm_mat[idx],
                    ctx[idx] if ctx is not None else None,
                    eps,
                    mask,
                    train=True,
                )
                if not np.isfinite(loss.data):
                    raise NumericsError(
                        f"non-finite loss at epoch {len(self.loss_trace) + 1}: "
                        f"RL={parts.reconstruction} KL={parts.kl} TL={parts.triplet}"
                    )
                opt.zero_grad()
                loss.backward()
                for p in self.parameters():
                    if p.grad is not None and not np.all(np.isfinite(p.grad)):
                        raise NumericsError("non-finite gradient")
                opt.step()
                epoch_parts.append((parts, len(idx)))
            total_docs = sum(w for _, w in epoch_parts)
            self.loss_trace.append(
                LossBreakdown(
                    reconstruction=sum(p.reconstruction * w for p, w in epoch_parts)
                    / total_docs,
                    kl=sum(p.kl * w for p, w in epoch_parts) / total_docs,
                    triplet=sum(p.triplet * w for p, w in epoch_parts) / total_docs,
                    weight=cfg.triplet_weight,
                )
            )
        return self.loss_trace

    # -- inference ---------------------------------------------------------

    def infer_theta(
        self, x_bow: np.ndarray, x_ctx: np.ndarray | None = None
    ) -> np.ndarray:
        """Eval-mode document-topic distributions: softmax of the posterior
        mean, no sampling."""
        x_bow = np.atleast_2d(np.asarray(x_bow, dtype=np.float64))
        ctx_t = None
        if self.config.uses_context:
            x_ctx = np.atleast_2d(np.asarray(x_ctx, dtype=np.float64))
            ctx_t = Tensor(x_ctx)
        mu, _ = self.encode(Tensor(x_bow), ctx_t, train=False)
        return mu.softmax(axis=-1).data

    def get_topics(self, vocab: Vocabulary, k: int = 10) -> list[list[str]]:
        """Top-k words per topic by unnormalized weight, ties to the lower
        word index."""
        if k > vocab.size:
            raise ValueError("k exceeds vocabulary size")
        topics = []
        for row in self.beta.data:
            order = np.argsort(-row, kind="stable")[:k]
            topics.append([vocab.words[i] for i in order])
        return topics

    # -- persistence ---------------------------------------------------------

    def save(self, path: str, vocab: Vocabulary) -> None:
        """Versioned binary checkpoint: JSON header (config, vocabulary and
        its hash, tensor manifest) followed by little-endian float64 tensors."""
        named = self._named_arrays()
        vocab_blob = "\n".join(vocab.words).encode("utf-8")
        header = {
            "config": asdict(self.config),
            "vocab_words": vocab.words,
            "vocab_sha256": hashlib.sha256(vocab_blob).hexdigest(),
            "tensors": [[name, list(arr.shape)] for name, arr in named],
        }
        header_bytes = json.dumps(header).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(CHECKPOINT_MAGIC)
            fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(header_bytes)))
            fh.write(header_bytes)
            for _, arr in named:
                fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path: str) -> tuple["CtmNegModel", Vocabulary]:
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != CHECKPOINT_MAGIC:
                raise CorpusError(f"{path}: not a model checkpoint (bad magic)")
            version, header_len = struct.unpack("<II", fh.read(8))
            if version != CHECKPOINT_VERSION:
                raise CorpusError(f"{path}: unsupported checkpoint version {version}")
            header = json.loads(fh.read(header_len).decode("utf-8"))
            cfg_dict = header["config"]
            cfg_dict["hidden_sizes"] = tuple(cfg_dict["hidden_sizes"])
            model = cls(ModelConfig(**cfg_dict))
            for (name, shape), (_, arr) in zip(
                header["tensors"], model._named_arrays()
            ):
                raw = fh.read(int(np.prod(shape)) * 8)
                if len(raw) != int(np.prod(shape)) * 8:
                    raise CorpusError(f"{path}: truncated checkpoint")
                arr[...] = np.frombuffer(raw, dtype="<f8").reshape(shape)
        vocab = Vocabulary(words=header["vocab_words"])
        return model, vocab

    def _named_arrays(self) -> list[tuple[str, np.ndarray]]:
        named: list[tuple[str, np.ndarray]] = []
        if self.ctx_proj is not None:
            named += [
                ("ctx_proj.weight", self.ctx_proj.weight.data),
                ("ctx_proj.bias", self.ctx_proj.bias.data),
            ]
        for i, layer in enumerate(self.encoder_mlp.layers):
            named += [
                (f"encoder.{i}.weight", layer.weight.data),
                (f"encoder.{i}.bias", layer.bias.data),
            ]
        named += [
            ("mu_head.weight", self.mu_head.weight.data),
            ("mu_head.bias", self.mu_head.bias.data),
            ("logvar_head.weight", self.logvar_head.weight.data),
            ("logvar_head.bias", self.logvar_head.bias.data),
            ("beta", self.beta.data),
        ]
        for name, bn in (
            ("mu_bn", self.mu_bn),
            ("logvar_bn", self.logvar_bn),
            ("decoder_bn", self.decoder_bn),
        ):
            if bn is not None:
                named += [
                    (f"{name}.shift", bn.shift.data),
                    (f"{name}.running_mean", bn.running_mean),
                    (f"{name}.running_var", bn.running_var),
                ]
        return named

    def write_loss_trace(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("epoch,L_RL,L_KL,L_TL,L\n")
            for i, p in enumerate(self.loss_trace, 1):
                fh.write(
                    f"{i},{p.reconstruction:.6f},{p.kl:.6f},"
                    f"{p.triplet:.6f},{p.total:.6f}\n"
                )
