"""
Reciprocal Attention Fusion model
Image-grid branch + object branch, co-attention concatenation, final fusion and answer classifier
"""

import logging
from collections import OrderedDict
from dataclasses import dataclass, fields, replace
from typing import Any, Dict, Optional

import numpy as np

from config.settings import settings
from src.attention.attention_branch import (
    AttentionBranch,
    backprop_branch,
    init_branch,
    trace_branch,
)
from src.autodiff.engine import CONCAT, SoftmaxCrossEntropy, Trace
from src.data.dataset_io import Example
from src.errors import ShapeMismatchError, VariantError
from src.fusion.tucker_fusion import (
    PARAMETER_NAMES,
    FusionDims,
    TuckerFusionParams,
    backprop_fusion,
    init_params,
    parameter_count,
    trace_fusion,
)
from src.tensors.tensor_core import ArrayLike, as_array

logger = logging.getLogger(__name__)

VARIANTS = ('IO', 'I', 'O')


@dataclass(frozen=True)
class ModelConfig:
    n_q: int
    n_v: int
    grid: int
    objects: int
    t_q: int
    t_v: int
    t_rho: int
    glimpses: int
    n_answers: int
    variant: str = 'IO'
    seed: int = 0

    def __post_init__(self):
        for f in fields(self):
            if f.name in ('variant', 'seed'):
                continue
            value = getattr(self, f.name)
            if int(value) != value or value < 1:
                raise ValueError(f"ModelConfig.{f.name} must be a positive integer, got {value}")
        if self.variant not in VARIANTS:
            raise VariantError(f"Unknown variant '{self.variant}' (expected one of {VARIANTS})")

    @classmethod
    def from_preset(cls, name: str, variant: str = 'IO', seed: int = 0, **overrides) -> 'ModelConfig':
        preset = settings.get_preset(name)
        preset.update(overrides)
        return cls(
            n_q=preset['n_q'], n_v=preset['n_v'], grid=preset['grid'], objects=preset['objects'],
            t_q=preset['t_q'], t_v=preset['t_v'], t_rho=preset['t_rho'],
            glimpses=preset['glimpses'], n_answers=preset['answers'],
            variant=variant.upper(), seed=seed,
        )

    @property
    def has_image(self) -> bool:
        return self.variant in ('IO', 'I')

    @property
    def has_object(self) -> bool:
        return self.variant in ('IO', 'O')

    @property
    def branches(self) -> int:
        return 2 if self.variant == 'IO' else 1

    @property
    def final_visual_dim(self) -> int:
        return self.branches * self.glimpses * self.n_v

    @property
    def final_core_dim(self) -> int:
        return self.branches * self.glimpses * self.t_v

    def branch_dims(self) -> FusionDims:
        return FusionDims(self.n_q, self.n_v, self.t_q, self.t_v, self.t_rho, self.glimpses)

    def final_dims(self) -> FusionDims:
        return FusionDims(self.n_q, self.final_visual_dim, self.t_q, self.final_core_dim,
                          self.t_rho, self.n_answers)

    def stage_dims(self) -> Dict[str, FusionDims]:
        dims = OrderedDict()
        if self.has_image:
            dims['image'] = self.branch_dims()
        if self.has_object:
            dims['object'] = self.branch_dims()
        dims['final'] = self.final_dims()
        return dims


@dataclass
class ForwardResult:
    logits: np.ndarray
    att_I: Optional[np.ndarray]
    att_O: Optional[np.ndarray]


@dataclass
class RafModel:
    """
    The full answer-classification head

    Parameters are exposed as an ordered dict of named arrays
    (`image.T_q`, ..., `object.T_out`, `final.T_q`, ..., `final.T_out`); that
    order is also the checkpoint order.
    """
    config: ModelConfig
    image_branch: Optional[AttentionBranch]
    object_branch: Optional[AttentionBranch]
    final_fusion: TuckerFusionParams

    def __post_init__(self):
        cfg = self.config
        if (self.image_branch is not None) != cfg.has_image:
            raise VariantError(f"variant {cfg.variant} and image branch presence disagree")
        if (self.object_branch is not None) != cfg.has_object:
            raise VariantError(f"variant {cfg.variant} and object branch presence disagree")
        for stage, expected in cfg.stage_dims().items():
            actual = self._stage_params(stage).dims
            if actual != expected:
                raise ShapeMismatchError(f"{stage} fusion dims {actual} do not match config {expected}")

    def _stage_params(self, stage: str) -> TuckerFusionParams:
        if stage == 'image':
            return self.image_branch.fusion
        if stage == 'object':
            return self.object_branch.fusion
        return self.final_fusion

    def parameters(self) -> Dict[str, np.ndarray]:
        params = OrderedDict()
        for stage in self.config.stage_dims():
            for name, value in self._stage_params(stage).named().items():
                params[f"{stage}.{name}"] = value
        return params

    def with_parameters(self, params: Dict[str, np.ndarray]) -> 'RafModel':
        """Same architecture over the given arrays (not copied)"""
        return RafModel.from_parameters(self.config, params)

    @classmethod
    def from_parameters(cls, config: ModelConfig, params: Dict[str, np.ndarray]) -> 'RafModel':
        stages = {}
        for stage, dims in config.stage_dims().items():
            try:
                named = {name: params[f"{stage}.{name}"] for name in PARAMETER_NAMES}
            except KeyError as e:
                raise ShapeMismatchError(f"missing parameter {e.args[0]}") from e
            stages[stage] = TuckerFusionParams.from_named(dims, named)

        image = stages.get('image')
        obj = stages.get('object')
        return cls(
            config,
            AttentionBranch(image) if image is not None else None,
            AttentionBranch(obj) if obj is not None else None,
            stages['final'],
        )

    def copy(self) -> 'RafModel':
        return self.with_parameters({name: value.copy() for name, value in self.parameters().items()})

    def parameter_count(self) -> int:
        return sum(int(value.size) for value in self.parameters().values())

    def _check_example_shapes(self, q: np.ndarray, v_I: Optional[np.ndarray],
                              v_O: Optional[np.ndarray]):
        cfg = self.config
        if q.shape != (cfg.n_q,):
            raise ShapeMismatchError(f"question stage: expected q of length {cfg.n_q}, got {q.shape}")
        if cfg.has_image and (v_I is None or v_I.shape != (cfg.grid, cfg.n_v)):
            shape = None if v_I is None else v_I.shape
            raise ShapeMismatchError(f"image stage: expected v_I of shape {(cfg.grid, cfg.n_v)}, got {shape}")
        if cfg.has_object and (v_O is None or v_O.shape != (cfg.objects, cfg.n_v)):
            shape = None if v_O is None else v_O.shape
            raise ShapeMismatchError(f"object stage: expected v_O of shape {(cfg.objects, cfg.n_v)}, got {shape}")

    def trace_logits(self, trace: Trace, q: ArrayLike, v_I: Optional[ArrayLike],
                     v_O: Optional[ArrayLike]) -> np.ndarray:
        q = as_array(q)
        v_I = None if v_I is None else as_array(v_I)
        v_O = None if v_O is None else as_array(v_O)
        self._check_example_shapes(q, v_I, v_O)

        pooled = []
        if self.image_branch is not None:
            pooled.append(trace_branch(trace, 'image', self.image_branch, q, v_I))
        if self.object_branch is not None:
            pooled.append(trace_branch(trace, 'object', self.object_branch, q, v_O))

        if len(pooled) == 2:
            joint = trace.apply('concat', CONCAT, pooled[0], pooled[1])
        else:
            joint = pooled[0]
        return trace_fusion(trace, 'final', self.final_fusion, q, joint)

    def build_loss(self, trace: Trace, example: Any) -> float:
        logits = self.trace_logits(trace, example.q, example.v_I, example.v_O)
        loss = trace.apply('loss', SoftmaxCrossEntropy(example.answer), logits)
        return float(loss)

    def backprop(self, trace: Trace) -> Dict[str, np.ndarray]:
        (d_logits,) = trace.vjp('loss', 1.0)
        final_grads, d_joint = backprop_fusion(trace, 'final', d_logits)

        branch_grads = {}
        if self.config.variant == 'IO':
            d_image, d_object = trace.vjp('concat', d_joint)
            branch_grads['image'] = backprop_branch(trace, 'image', d_image)
            branch_grads['object'] = backprop_branch(trace, 'object', d_object)
        elif self.config.variant == 'I':
            branch_grads['image'] = backprop_branch(trace, 'image', d_joint)
        else:
            branch_grads['object'] = backprop_branch(trace, 'object', d_joint)
        branch_grads['final'] = final_grads

        grads = OrderedDict()
        for stage in self.config.stage_dims():
            for name in PARAMETER_NAMES:
                grads[f"{stage}.{name}"] = branch_grads[stage][name]
        return grads


def init_model(cfg: ModelConfig) -> RafModel:
    """Image branch seeded with cfg.seed, object branch with seed+1, final fusion with seed+2"""
    image = object_ = None
    if cfg.has_image:
        image = init_branch(cfg.n_q, cfg.n_v, cfg.t_q, cfg.t_v, cfg.t_rho, cfg.glimpses, cfg.seed)
    if cfg.has_object:
        object_ = init_branch(cfg.n_q, cfg.n_v, cfg.t_q, cfg.t_v, cfg.t_rho, cfg.glimpses, cfg.seed + 1)
    final = init_params(cfg.final_dims(), cfg.seed + 2)
    model = RafModel(cfg, image, object_, final)
    logger.debug(f"Initialized RAF-{cfg.variant} with {model.parameter_count():,} parameters")
    return model


def forward(m: RafModel, q: ArrayLike, v_I: Optional[ArrayLike] = None,
            v_O: Optional[ArrayLike] = None) -> ForwardResult:
    """
    Logits and attention weights for one example

    Features for a branch the variant does not have are ignored.
    """
    trace = Trace()
    logits = m.trace_logits(trace,
                            q,
                            v_I if m.config.has_image else None,
                            v_O if m.config.has_object else None)
    att_I = trace.output('image.weights') if m.config.has_image else None
    att_O = trace.output('object.weights') if m.config.has_object else None
    return ForwardResult(logits, att_I, att_O)


def variant_forward(m: RafModel, q: ArrayLike, v_I: Optional[ArrayLike] = None,
                    v_O: Optional[ArrayLike] = None) -> np.ndarray:
    """Logits using only the branches of the model's variant; extra features are an error"""
    if v_I is not None and not m.config.has_image:
        raise VariantError(f"RAF-{m.config.variant} has no image branch but v_I was supplied")
    if v_O is not None and not m.config.has_object:
        raise VariantError(f"RAF-{m.config.variant} has no object branch but v_O was supplied")
    return m.trace_logits(Trace(), q, v_I, v_O)


def predict_logits(logits: ArrayLike) -> int:
    """Index of the largest logit, lowest index on ties"""
    return int(np.argmax(as_array(logits)))


def predict(m: RafModel, example: Any) -> int:
    return predict_logits(forward(m, example.q, example.v_I, example.v_O).logits)


def model_parameter_count(cfg: ModelConfig) -> Dict[str, int]:
    """Closed-form trainable count per fusion unit plus `total`"""
    counts = OrderedDict()
    for stage, dims in cfg.stage_dims().items():
        counts[stage] = parameter_count(dims, warn_degenerate=False)[1]
    counts['total'] = sum(counts.values())
    return counts


def with_variant(cfg: ModelConfig, variant: str) -> ModelConfig:
    return replace(cfg, variant=variant.upper())


def probe_example(cfg: ModelConfig, seed: int, qid: str = 'probe') -> Example:
    """
    Random example shaped for `cfg`

    Feature entries have random sign and magnitude in [0.5, 1.5]; the label is uniform.
    """
    rng = np.random.default_rng(seed)

    def draw(*shape):
        return rng.choice([-1.0, 1.0], size=shape) * rng.uniform(0.5, 1.5, size=shape)

    q = draw(cfg.n_q)
    v_I = draw(cfg.grid, cfg.n_v)
    v_O = draw(cfg.objects, cfg.n_v)
    return Example(qid, q, v_I, v_O, int(rng.integers(0, cfg.n_answers)))
