"""Unsupervised training: utility loss, plateau scheduling, and the epoch loop.

The loss needs no labels: the network's outputs are pushed through the
feasibility projection and scored by the same fairness objective the other
optimizers use, and exact gradients flow back through the projection's
active set. Model selection is by validation loss with plateau learning-
rate decay and early stopping.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .allocation import project_feasible_with_vjp
from .bcd import objective_value_and_gradients
from .features import PcaModel, feature_matrix, pca_fit, pca_transform
from .metrics import Allocation
from .mlp import MlpArch, MlpModel, adam_step, init_adam, init_model, mlp_backward, mlp_forward


def nn_loss(theta_batch, xi_batch, ch_batch, w_batch, alpha: float,
            noise_linear: float) -> float:
    """Mean negated utility over the batch.

    Raw shares are projected to the feasible set before scoring, matching
    what the gradients in nn_loss_and_grads differentiate through.
    """
    loss, _, _ = nn_loss_and_grads(theta_batch, xi_batch, ch_batch, w_batch,
                                   alpha, noise_linear)
    return loss


def nn_loss_and_grads(theta_batch, xi_batch, ch_batch, w_batch, alpha: float,
                      noise_linear: float):
    """Loss plus exact gradients wrt the network's raw outputs.

    Returns (loss, dloss_dtheta (Q, L2), dloss_dxi (Q, K, L)); the share
    gradient is pulled back through the projection.
    """
    theta_batch = np.atleast_2d(np.asarray(theta_batch, dtype=float))
    xi_batch = np.asarray(xi_batch, dtype=float)
    if xi_batch.ndim == 2:
        xi_batch = xi_batch[None, :, :]
    Q = len(ch_batch)
    if not (theta_batch.shape[0] == xi_batch.shape[0] == Q == len(w_batch)):
        raise ValueError("batch sizes disagree")

    loss = 0.0
    dtheta = np.zeros_like(theta_batch)
    dxi = np.zeros_like(xi_batch)
    for q in range(Q):
        proj, vjp = project_feasible_with_vjp(xi_batch[q])
        value, g_theta, g_xi = objective_value_and_gradients(
            ch_batch[q], theta_batch[q], Allocation(proj), w_batch[q], alpha, noise_linear)
        loss -= value / Q
        dtheta[q] = -g_theta / Q
        dxi[q] = -vjp(g_xi) / Q
    return float(loss), dtheta, dxi


class PlateauScheduler:
    """Validation-loss bookkeeping for LR decay and early stopping.

    Any strict improvement resets both patience counters. After
    ``lr_patience`` consecutive epochs without improvement the learning
    rate is multiplied by ``decay`` and that counter restarts; after
    ``stop_patience`` consecutive epochs without improvement ``update``
    signals stop.
    """

    def __init__(self, learning_rate: float, decay: float = 0.33,
                 lr_patience: int = 10, stop_patience: int = 40):
        if lr_patience < 1 or stop_patience < 1:
            raise ValueError("patience values must be >= 1")
        if not 0 < decay < 1:
            raise ValueError("decay must lie in (0, 1)")
        self.learning_rate = learning_rate
        self.decay = decay
        self.lr_patience = lr_patience
        self.stop_patience = stop_patience
        self.best = np.inf
        self.lr_wait = 0
        self.stop_wait = 0

    def update(self, val_loss: float):
        """Feed one epoch's validation loss; returns (improved, decayed, stop)."""
        if val_loss < self.best:
            self.best = val_loss
            self.lr_wait = 0
            self.stop_wait = 0
            return True, False, False
        self.lr_wait += 1
        self.stop_wait += 1
        decayed = False
        if self.lr_wait >= self.lr_patience:
            self.learning_rate *= self.decay
            self.lr_wait = 0
            decayed = True
        return False, decayed, self.stop_wait >= self.stop_patience


@dataclass
class TrainOptions:
    alpha: float = 1.0
    learning_rate: float = 0.01
    batch_size: int = 20
    max_epochs: int = 200
    lr_decay: float = 0.33
    lr_patience: int = 10
    stop_patience: int = 40
    use_pca: bool = True
    hidden: tuple = (500, 450, 400, 300)
    dropout_rate: float = 0.5
    seed: int = 0

    def validate(self) -> "TrainOptions":
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2 for batch statistics")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        return self


@dataclass
class TrainResult:
    model: MlpModel
    pca: PcaModel | None
    history: list            # dict rows: epoch, train_loss, val_loss, learning_rate
    best_epoch: int
    best_val_loss: float


def _epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, epoch]))


def train(train_samples, val_samples, noise_linear: float,
          options: TrainOptions | None = None) -> TrainResult:
    """Fit the network on channel drops; returns the best-validation model.

    Dimensionality reduction (when enabled) is fit on the training split
    only. Every random draw (init, epoch shuffles, dropout) derives from
    options.seed, so identical inputs give bit-identical results. The
    history records the learning rate in effect during each epoch; decays
    apply from the following epoch. Trailing batches of a single sample
    are dropped because batch normalization needs two rows.
    """
    opts = (options or TrainOptions()).validate()
    if len(train_samples) < 2 or not val_samples:
        raise ValueError("need at least 2 training samples and 1 validation sample")

    feats_train = feature_matrix([s.channels for s in train_samples])
    feats_val = feature_matrix([s.channels for s in val_samples])
    if opts.use_pca:
        pca = pca_fit(feats_train)
        z_train = pca_transform(pca, feats_train)
        z_val = pca_transform(pca, feats_val)
    else:
        pca = None
        z_train = feats_train
        z_val = feats_val

    ch0 = train_samples[0].channels
    L = int(round(np.sqrt(ch0.num_elements)))
    arch = MlpArch(input_dim=z_train.shape[1], phase_dim=ch0.num_elements,
                   alloc_users=ch0.num_users, alloc_cols=L,
                   hidden=opts.hidden, dropout_rate=opts.dropout_rate)
    seeds = np.random.SeedSequence(opts.seed).generate_state(2, dtype=np.uint64)
    model = init_model(arch, seed=int(seeds[0]))
    adam = init_adam(model, opts.learning_rate)
    sched = PlateauScheduler(opts.learning_rate, opts.lr_decay,
                             opts.lr_patience, opts.stop_patience)

    ch_train = [s.channels for s in train_samples]
    w_train = [s.w for s in train_samples]
    ch_val = [s.channels for s in val_samples]
    w_val = [s.w for s in val_samples]

    def validation_loss() -> float:
        theta_v, xi_v, _ = mlp_forward(model, z_val, train_mode=False)
        return nn_loss(theta_v, xi_v, ch_val, w_val, opts.alpha, noise_linear)

    best_state = copy.deepcopy(model)
    best_val = np.inf
    best_epoch = -1
    history = []
    n = len(train_samples)

    for epoch in range(opts.max_epochs):
        order = _epoch_rng(opts.seed, epoch).permutation(n)
        adam.learning_rate = sched.learning_rate
        batch_losses = []
        for b, start in enumerate(range(0, n, opts.batch_size)):
            idx = order[start:start + opts.batch_size]
            if idx.size < 2:
                continue
            drop_seed = np.random.SeedSequence([opts.seed, epoch, b])
            theta_b, xi_b, cache = mlp_forward(model, z_train[idx], train_mode=True,
                                               dropout_seed=drop_seed)
            loss, d_theta, d_xi = nn_loss_and_grads(
                theta_b, xi_b, [ch_train[i] for i in idx], [w_train[i] for i in idx],
                opts.alpha, noise_linear)
            grads = mlp_backward(model, cache, d_theta, d_xi)
            adam_step(model, grads, adam)
            batch_losses.append(loss)

        val_loss = validation_loss()
        history.append({"epoch": epoch, "train_loss": float(np.mean(batch_losses)),
                        "val_loss": val_loss, "learning_rate": adam.learning_rate})
        improved, _, stop = sched.update(val_loss)
        if improved:
            best_state = copy.deepcopy(model)
            best_val = val_loss
            best_epoch = epoch
        if stop:
            break

    return TrainResult(best_state, pca, history, best_epoch, best_val)
